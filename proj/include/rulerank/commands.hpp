#pragma once

#include <cstdint>
#include <string>

#include "rulerank/search.hpp"

namespace rulerank {

// Batch run configuration, filled from a key=value properties file and
// command-line overrides (flags win). Paths are used as given.
struct RunConfig {
  std::string train;
  std::string valid;
  std::string test;
  std::string rules;
  std::string out = ".";
  std::string clusters;     // default: <out>/clusters.tsv
  std::string signatures;   // default: <out>/signatures.tsv
  std::string predictions;  // eval input; no default
  unsigned threads = 1;
  std::uint64_t seed = 42;
  std::uint32_t top_k = 100;
  std::uint32_t minhash_k = 128;
  SearchStrategy strategy = SearchStrategy::Grid;
  double resolution = 0.0;  // 0 selects the strategy default (grid 0.005, random 0.1)
  std::uint32_t iterations = 10000;

  std::string clusters_path() const;
  std::string signatures_path() const;
};

// Merges `key=value` lines into the config. '#' lines and blank lines are
// skipped; unknown keys are rejected.
void apply_config_file(RunConfig& config, const std::string& path);

// Pipeline stages. Each loads its inputs, writes its artifacts under the
// output directory, prints key=value summaries on stdout and progress on
// stderr. Failures surface as ParseError (bad input) or ContractViolation.
void cmd_applymax(const RunConfig& config);
void cmd_applynoisy(const RunConfig& config);
void cmd_applynrnoisy(const RunConfig& config);
void cmd_calcjacc(const RunConfig& config);
void cmd_learnclusters(const RunConfig& config);
void cmd_eval(const RunConfig& config);

}  // namespace rulerank
