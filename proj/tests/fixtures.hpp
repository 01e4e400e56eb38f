#pragma once

#include <algorithm>
#include <array>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <string>
#include <sys/wait.h>
#include <unistd.h>
#include <vector>

#include "rulerank/graph.hpp"
#include "rulerank/inference.hpp"
#include "rulerank/rules.hpp"

namespace rulerank::testing {

// Self-deleting scratch directory for fixture files.
class TempDir {
 public:
  TempDir() {
    std::string pattern = (std::filesystem::temp_directory_path() / "rulerank_XXXXXX").string();
    std::vector<char> buf(pattern.begin(), pattern.end());
    buf.push_back('\0');
    if (!mkdtemp(buf.data())) throw std::runtime_error("mkdtemp failed");
    path_ = buf.data();
  }
  ~TempDir() {
    std::error_code ec;
    std::filesystem::remove_all(path_, ec);
  }
  TempDir(const TempDir&) = delete;
  TempDir& operator=(const TempDir&) = delete;

  std::string file(const std::string& name) const {
    return (std::filesystem::path(path_) / name).string();
  }
  const std::string& path() const { return path_; }

 private:
  std::string path_;
};

inline std::string write_file(const TempDir& dir, const std::string& name,
                              const std::string& content) {
  std::string path = dir.file(name);
  std::ofstream out(path, std::ios::binary);
  out << content;
  return path;
}

inline std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  std::string content((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  return content;
}

// "h r t" triple rows to a TAB-separated triple file body.
inline std::string triples_text(const std::vector<std::array<std::string, 3>>& triples) {
  std::string out;
  for (const auto& t : triples) out += t[0] + "\t" + t[1] + "\t" + t[2] + "\n";
  return out;
}

inline KnowledgeGraph load_graph(const TempDir& dir, const std::string& train,
                                 const std::string& valid = "", const std::string& test = "") {
  return KnowledgeGraph::load(write_file(dir, "train.tsv", train),
                              write_file(dir, "valid.tsv", valid),
                              write_file(dir, "test.tsv", test));
}

// The toy graph used across module examples.
inline std::string toy_train() { return "a\ts\tb\nb\ts\tc\na\tr\tc\na\ts\td\n"; }

inline RuleSet parse_rules(const TempDir& dir, const KnowledgeGraph& graph,
                           const std::vector<std::string>& lines,
                           const std::string& name = "rules.tsv") {
  std::string text;
  for (const std::string& line : lines) text += line + "\n";
  return parse_ruleset(write_file(dir, name, text), graph);
}

// A rule file line whose statistics exactly reproduce the given confidence.
inline std::string rule_line(double confidence, const std::string& rule_string) {
  const std::uint64_t predicted = 1000000000;
  auto correct = static_cast<std::uint64_t>(confidence * static_cast<double>(predicted) + 0.5);
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.17g",
                static_cast<double>(correct) / static_cast<double>(predicted));
  return std::to_string(predicted) + "\t" + std::to_string(correct) + "\t" + buf + "\t" +
         rule_string;
}

// Builds a pool that honours the CandidatePool invariants from unordered
// (entity, {rule, confidence}) groups.
inline CandidatePool make_pool(const CompletionTask& task,
                               std::vector<std::pair<EntityId, std::vector<Proposal>>> groups) {
  std::sort(groups.begin(), groups.end(),
            [](const auto& a, const auto& b) { return a.first < b.first; });
  CandidatePool pool;
  pool.task = task;
  for (auto& [entity, proposals] : groups) {
    std::sort(proposals.begin(), proposals.end(), [](const Proposal& a, const Proposal& b) {
      if (a.confidence != b.confidence) return a.confidence > b.confidence;
      return a.rule_id < b.rule_id;
    });
    pool.entities.push_back(entity);
    pool.proposals.push_back(std::move(proposals));
  }
  return pool;
}

struct CliResult {
  int exit_code = -1;
  std::string out;
  std::string err;
};

#ifdef RULERANK_BIN
// Runs the CLI binary with stdout/stderr captured to files.
inline CliResult run_cli(const TempDir& dir, const std::string& args) {
  std::string out_path = dir.file("cli_stdout.txt");
  std::string err_path = dir.file("cli_stderr.txt");
  std::string command =
      std::string(RULERANK_BIN) + " " + args + " >" + out_path + " 2>" + err_path;
  int status = std::system(command.c_str());
  CliResult result;
  result.exit_code = WIFEXITED(status) ? WEXITSTATUS(status) : -1;
  result.out = read_file(out_path);
  result.err = read_file(err_path);
  return result;
}
#endif

}  // namespace rulerank::testing
