#include <cstdio>
#include <string>

#include <CLI11.hpp>

#include "rulerank/commands.hpp"

namespace {

// Exit codes: 0 success, 1 usage, 2 bad input, 3 internal invariant failure.
constexpr int kExitUsage = 1;
constexpr int kExitInput = 2;
constexpr int kExitInternal = 3;

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"rulerank: rule application and aggregation for knowledge graph completion"};
  app.require_subcommand(1);

  std::string config_path;
  unsigned threads = 1;
  std::uint64_t seed = 42;
  std::uint32_t topk = 100;
  double resolution = 0.0;
  std::uint32_t iterations = 10000;
  std::string out_dir = ".";
  std::string strategy = "grid";
  std::string predictions_arg;

  app.add_option("--config", config_path, "key=value properties file");
  app.add_option("--threads", threads, "worker thread count")->check(CLI::Range(1u, 1u << 16));
  app.add_option("--seed", seed, "seed for hashing and sampling");
  app.add_option("--topk", topk, "ranking truncation length")
      ->check(CLI::Range(10u, 1000000000u));
  app.add_option("--resolution", resolution, "threshold lattice spacing")
      ->check(CLI::Range(0.0, 1.0));
  app.add_option("--iterations", iterations, "random search trial count")
      ->check(CLI::Range(1u, 1000000000u));
  app.add_option("--out", out_dir, "output directory");

  CLI::App* applymax = app.add_subcommand("applymax", "rank test tasks by max aggregation");
  CLI::App* calcjacc =
      app.add_subcommand("calcjacc", "compute solution set MinHash signatures");
  CLI::App* learnclusters =
      app.add_subcommand("learnclusters", "search clustering thresholds on validation");
  CLI::App* applynrnoisy = app.add_subcommand(
      "applynrnoisy", "rank test tasks by clustered (non-redundant) noisy-or");
  CLI::App* applynoisy =
      app.add_subcommand("applynoisy", "rank test tasks by plain noisy-or");
  CLI::App* eval = app.add_subcommand("eval", "score a prediction file");
  learnclusters->add_option("--strategy", strategy, "threshold search strategy")
      ->check(CLI::IsMember({"grid", "random"}));
  eval->add_option("predictions", predictions_arg, "prediction file to score");
  for (CLI::App* sub : {applymax, calcjacc, learnclusters, applynrnoisy, applynoisy, eval})
    sub->fallthrough();

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return kExitUsage;
  }

  try {
    rulerank::RunConfig config;
    if (!config_path.empty()) rulerank::apply_config_file(config, config_path);
    if (app.count("--threads")) config.threads = threads;
    if (app.count("--seed")) config.seed = seed;
    if (app.count("--topk")) config.top_k = topk;
    if (app.count("--resolution")) config.resolution = resolution;
    if (app.count("--iterations")) config.iterations = iterations;
    if (app.count("--out")) config.out = out_dir;
    if (learnclusters->count("--strategy"))
      config.strategy = strategy == "grid" ? rulerank::SearchStrategy::Grid
                                           : rulerank::SearchStrategy::Random;
    if (!predictions_arg.empty()) config.predictions = predictions_arg;

    if (applymax->parsed()) rulerank::cmd_applymax(config);
    else if (calcjacc->parsed()) rulerank::cmd_calcjacc(config);
    else if (learnclusters->parsed()) rulerank::cmd_learnclusters(config);
    else if (applynrnoisy->parsed()) rulerank::cmd_applynrnoisy(config);
    else if (applynoisy->parsed()) rulerank::cmd_applynoisy(config);
    else if (eval->parsed()) rulerank::cmd_eval(config);
    return 0;
  } catch (const rulerank::ParseError& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return kExitInput;
  } catch (const rulerank::ContractViolation& e) {
    std::fprintf(stderr, "internal error: %s\n", e.what());
    return kExitInternal;
  } catch (const std::exception& e) {
    std::fprintf(stderr, "internal error: %s\n", e.what());
    return kExitInternal;
  }
}
