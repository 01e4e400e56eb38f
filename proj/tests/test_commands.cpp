#include <doctest.h>

#include <array>
#include <cmath>
#include <filesystem>
#include <set>
#include <string>
#include <vector>

#include "fixtures.hpp"
#include "rulerank/commands.hpp"
#include "rulerank/prediction_io.hpp"

using namespace rulerank;
using rulerank::testing::CliResult;
using rulerank::testing::TempDir;
using rulerank::testing::read_file;
using rulerank::testing::rule_line;
using rulerank::testing::run_cli;
using rulerank::testing::write_file;

namespace {

constexpr const char* kChainRule = "r(X,Y) <= s(X,A2), s(A2,Y)";
constexpr const char* kAc2Rule = "r(a,Y) <= s(Y,A2)";
constexpr const char* kSRule = "s(X,Y) <= r(X,Y)";

std::string cli_train() {
  return "a\ts\tb\nb\ts\tc\na\tr\tc\na\ts\td\nc\ts\te\nd\ts\tf\nf\ts\tg\n";
}

std::string cli_valid() { return "a\tr\tf\nc\tr\te\n"; }

// One test triple each aggregator answers at rank 1 and one nothing answers.
std::string cli_test() { return "d\tr\tg\nb\ts\te\n"; }

std::string three_rules() {
  return rule_line(0.5, kChainRule) + "\n" + rule_line(0.5, kAc2Rule) + "\n" +
         rule_line(0.8, kSRule) + "\n";
}

struct Workspace {
  std::string config;
  std::string train;
  std::string valid;
  std::string test;
  std::string rules;
  std::string out;
};

Workspace setup(const TempDir& dir, const std::string& rules_text,
                const std::string& test_text = cli_test(), const std::string& extra = "") {
  Workspace w;
  w.train = write_file(dir, "train.tsv", cli_train());
  w.valid = write_file(dir, "valid.tsv", cli_valid());
  w.test = write_file(dir, "test.tsv", test_text);
  w.rules = write_file(dir, "rules.tsv", rules_text);
  w.out = dir.file("out");
  w.config = write_file(dir, "run.properties",
                        "train=" + w.train + "\nvalid=" + w.valid + "\ntest=" + w.test +
                            "\nrules=" + w.rules + "\nout=" + w.out + "\n" + extra);
  return w;
}

std::string out_file(const Workspace& w, const char* name) { return w.out + "/" + name; }

// Value of a `key=value` stdout line, or "" when the key never appears.
std::string stdout_value(const std::string& text, const std::string& key) {
  std::string needle = key + "=";
  std::size_t pos = 0;
  while (pos < text.size()) {
    std::size_t end = text.find('\n', pos);
    if (end == std::string::npos) end = text.size();
    if (text.compare(pos, needle.size(), needle) == 0)
      return text.substr(pos + needle.size(), end - pos - needle.size());
    pos = end + 1;
  }
  return "";
}

void check_key_value_stdout(const std::string& text) {
  std::size_t pos = 0;
  while (pos < text.size()) {
    std::size_t end = text.find('\n', pos);
    REQUIRE(end != std::string::npos);
    std::string line = text.substr(pos, end - pos);
    CAPTURE(line);
    std::size_t eq = line.find('=');
    CHECK(eq != std::string::npos);
    CHECK(eq > 0);
    pos = end + 1;
  }
}

bool contains(const std::string& text, const std::string& needle) {
  return text.find(needle) != std::string::npos;
}

// The six threshold tokens of every section header in a cluster file.
std::vector<std::array<std::string, 6>> threshold_rows(const std::string& text) {
  std::vector<std::array<std::string, 6>> rows;
  std::size_t pos = 0;
  while ((pos = text.find("\tthresholds ", pos)) != std::string::npos) {
    std::size_t cursor = pos + 12;
    std::size_t end = text.find('\n', cursor);
    REQUIRE(end != std::string::npos);
    std::array<std::string, 6> row;
    for (int i = 0; i < 6; ++i) {
      std::size_t stop = i == 5 ? end : text.find(' ', cursor);
      REQUIRE(stop != std::string::npos);
      REQUIRE(stop <= end);
      row[static_cast<std::size_t>(i)] = text.substr(cursor, stop - cursor);
      cursor = stop + 1;
    }
    rows.push_back(row);
    pos = end;
  }
  return rows;
}

}  // namespace

TEST_CASE("the full pipeline runs clean and leaves every artifact") {
  TempDir dir;
  Workspace w = setup(dir, three_rules());

  CliResult jacc = run_cli(dir, "calcjacc --config " + w.config);
  CAPTURE(jacc.err);
  REQUIRE(jacc.exit_code == 0);
  check_key_value_stdout(jacc.out);
  CHECK(stdout_value(jacc.out, "rules") == "3");
  CHECK(stdout_value(jacc.out, "k") == "128");
  CHECK(stdout_value(jacc.out, "seed") == "42");
  CHECK(std::filesystem::exists(out_file(w, "signatures.tsv")));
  CHECK(contains(jacc.err, "graph: 7 entities, 2 relations"));

  CliResult learn = run_cli(dir, "learnclusters --config " + w.config + " --resolution 0.5");
  CAPTURE(learn.err);
  REQUIRE(learn.exit_code == 0);
  check_key_value_stdout(learn.out);
  CHECK(stdout_value(learn.out, "sections") == "4");
  CHECK(stdout_value(learn.out, "trials") == "3");
  CHECK(contains(learn.err, "signatures: loaded 3"));
  CHECK(contains(learn.err, "relation 's' has no validation triples"));
  CHECK(std::filesystem::exists(out_file(w, "clusters.tsv")));

  for (auto [command, name] :
       std::vector<std::pair<std::string, const char*>>{{"applynrnoisy", "predictions_nrnoisyor.txt"},
                                                        {"applynoisy", "predictions_noisyor.txt"},
                                                        {"applymax", "predictions_max.txt"}}) {
    CAPTURE(command);
    CliResult apply = run_cli(dir, command + " --config " + w.config);
    CAPTURE(apply.err);
    REQUIRE(apply.exit_code == 0);
    check_key_value_stdout(apply.out);
    CHECK(stdout_value(apply.out, "predictions") == out_file(w, name));
    CHECK(stdout_value(apply.out, "tasks") == "4");
    CHECK(stdout_value(apply.out, "rules") == "3");
    CHECK(std::filesystem::exists(out_file(w, name)));
  }
  CHECK(contains(run_cli(dir, "applynrnoisy --config " + w.config).err, "clusters: 4 sections"));

  CliResult eval =
      run_cli(dir, "eval --config " + w.config + " " + out_file(w, "predictions_nrnoisyor.txt"));
  CAPTURE(eval.err);
  REQUIRE(eval.exit_code == 0);
  check_key_value_stdout(eval.out);
  CHECK(stdout_value(eval.out, "report") == out_file(w, "eval.txt"));
  CHECK(stdout_value(eval.out, "tasks") == "4");
  CHECK(stdout_value(eval.out, "hits@1") == "0.500000");
  CHECK(stdout_value(eval.out, "hits@10") == "0.500000");
  CHECK(stdout_value(eval.out, "mrr") == "0.500000");
  std::string report = read_file(out_file(w, "eval.txt"));
  CHECK(contains(report, "tasks=4"));
  CHECK(contains(report, "mrr=0.500000"));
}

TEST_CASE("grid search keeps every written threshold on the lattice") {
  TempDir dir;
  Workspace w = setup(dir, three_rules());
  CliResult learn = run_cli(dir, "learnclusters --config " + w.config + " --resolution 0.5");
  REQUIRE(learn.exit_code == 0);

  std::string text = read_file(out_file(w, "clusters.tsv"));
  std::vector<std::array<std::string, 6>> rows = threshold_rows(text);
  REQUIRE(rows.size() == 4);
  const std::set<std::string> lattice{"0.000000", "0.500000", "1.000000"};
  for (const auto& row : rows) {
    for (const std::string& token : row) {
      CAPTURE(token);
      CHECK(lattice.count(token) == 1);
      // Grid trials share one value across all six slots.
      CHECK(token == row[0]);
    }
  }
  // Two sections carry validation fitness, the two 's' fallbacks carry none.
  std::size_t na_count = 0;
  std::size_t pos = 0;
  while ((pos = text.find("fitness\tNA\n", pos)) != std::string::npos) {
    ++na_count;
    pos += 1;
  }
  CHECK(na_count == 2);
}

TEST_CASE("random search stays on its lattice and runs the requested trials") {
  TempDir dir;
  Workspace w = setup(dir, three_rules());
  std::string args =
      "learnclusters --config " + w.config + " --strategy random --iterations 20 --resolution 0.25";
  CliResult learn = run_cli(dir, args);
  CAPTURE(learn.err);
  REQUIRE(learn.exit_code == 0);
  CHECK(stdout_value(learn.out, "trials") == "20");

  std::string first = read_file(out_file(w, "clusters.tsv"));
  const std::set<std::string> lattice{"0.000000", "0.250000", "0.500000", "0.750000", "1.000000"};
  for (const auto& row : threshold_rows(first)) {
    for (const std::string& token : row) {
      CAPTURE(token);
      CHECK(lattice.count(token) == 1);
    }
  }

  CliResult again = run_cli(dir, args);
  REQUIRE(again.exit_code == 0);
  CHECK(read_file(out_file(w, "clusters.tsv")) == first);
}

TEST_CASE("reruns and worker counts never change output bytes") {
  TempDir dir;
  Workspace w = setup(dir, three_rules());

  // Signatures computed inline must match signatures loaded from disk.
  CliResult learn = run_cli(dir, "learnclusters --config " + w.config + " --resolution 0.5");
  REQUIRE(learn.exit_code == 0);
  CHECK(contains(learn.err, "signatures: computed 3 inline"));
  std::string clusters_inline = read_file(out_file(w, "clusters.tsv"));

  REQUIRE(run_cli(dir, "calcjacc --config " + w.config).exit_code == 0);
  std::string signatures_once = read_file(out_file(w, "signatures.tsv"));
  REQUIRE(run_cli(dir, "calcjacc --config " + w.config + " --threads 4").exit_code == 0);
  CHECK(read_file(out_file(w, "signatures.tsv")) == signatures_once);

  for (const char* threads : {"1", "4"}) {
    CliResult rerun = run_cli(dir, "learnclusters --config " + w.config +
                                       " --resolution 0.5 --threads " + threads);
    REQUIRE(rerun.exit_code == 0);
    CHECK(contains(rerun.err, "signatures: loaded 3"));
    CHECK(read_file(out_file(w, "clusters.tsv")) == clusters_inline);
  }

  REQUIRE(run_cli(dir, "applynrnoisy --config " + w.config).exit_code == 0);
  std::string predictions_once = read_file(out_file(w, "predictions_nrnoisyor.txt"));
  for (const char* threads : {"4", "16"}) {
    CliResult rerun =
        run_cli(dir, "applynrnoisy --config " + w.config + " --threads " + std::string(threads));
    REQUIRE(rerun.exit_code == 0);
    CHECK(read_file(out_file(w, "predictions_nrnoisyor.txt")) == predictions_once);
  }

  REQUIRE(run_cli(dir, "applymax --config " + w.config).exit_code == 0);
  std::string max_once = read_file(out_file(w, "predictions_max.txt"));
  REQUIRE(run_cli(dir, "applymax --config " + w.config + " --threads 4").exit_code == 0);
  CHECK(read_file(out_file(w, "predictions_max.txt")) == max_once);
}

TEST_CASE("bad invocations exit with the usage code") {
  TempDir dir;
  for (const char* args : {"", "frobnicate", "applymax --bogus", "learnclusters --strategy simulated",
                           "applymax --topk 5", "applymax --threads 0",
                           "learnclusters --resolution 1.5", "applymax --topk notanumber"}) {
    CAPTURE(args);
    CliResult result = run_cli(dir, args);
    CHECK(result.exit_code == 1);
    CHECK_FALSE(result.err.empty());
  }
}

TEST_CASE("help requests exit zero and list the subcommands") {
  TempDir dir;
  CliResult help = run_cli(dir, "--help");
  CHECK(help.exit_code == 0);
  for (const char* name : {"applymax", "calcjacc", "learnclusters", "applynrnoisy", "applynoisy",
                           "eval"})
    CHECK(contains(help.out, name));
  CHECK(run_cli(dir, "eval --help").exit_code == 0);
}

TEST_CASE("missing inputs exit with the input code and name the path") {
  TempDir dir;
  Workspace w = setup(dir, three_rules());

  std::string no_rules = write_file(
      dir, "norules.properties",
      "train=" + w.train + "\nvalid=" + w.valid + "\ntest=" + w.test + "\nout=" + w.out + "\n");
  CliResult result = run_cli(dir, "applymax --config " + no_rules);
  CHECK(result.exit_code == 2);
  CHECK(contains(result.err, "rules path missing"));

  std::string absent_rules = dir.file("absent_rules.tsv");
  std::string bad_rules = write_file(dir, "badrules.properties",
                                     "train=" + w.train + "\nvalid=" + w.valid + "\ntest=" +
                                         w.test + "\nrules=" + absent_rules + "\nout=" + w.out +
                                         "\n");
  result = run_cli(dir, "applymax --config " + bad_rules);
  CHECK(result.exit_code == 2);
  CHECK(contains(result.err, "cannot open rule file"));
  CHECK(contains(result.err, absent_rules));

  std::string absent_train = dir.file("absent_train.tsv");
  std::string bad_train = write_file(dir, "badtrain.properties",
                                     "train=" + absent_train + "\nvalid=" + w.valid + "\ntest=" +
                                         w.test + "\nrules=" + w.rules + "\nout=" + w.out + "\n");
  result = run_cli(dir, "applymax --config " + bad_train);
  CHECK(result.exit_code == 2);
  CHECK(contains(result.err, "cannot open triple file"));
  CHECK(contains(result.err, absent_train));

  result = run_cli(dir, "eval --config " + w.config);
  CHECK(result.exit_code == 2);
  CHECK(contains(result.err, "predictions path missing"));

  // No learnclusters run yet, so the clusters file does not exist.
  result = run_cli(dir, "applynrnoisy --config " + w.config);
  CHECK(result.exit_code == 2);
  CHECK(contains(result.err, "clusters.tsv"));

  result = run_cli(dir, "applymax --config " + dir.file("absent.properties"));
  CHECK(result.exit_code == 2);
  CHECK(contains(result.err, "cannot open config file"));
}

TEST_CASE("config file errors carry the file and line") {
  TempDir dir;
  Workspace w = setup(dir, three_rules());

  std::string unknown = write_file(dir, "unknown.properties", "seed=7\n# note\nbogus=1\n");
  CliResult result = run_cli(dir, "applymax --config " + unknown);
  CHECK(result.exit_code == 2);
  CHECK(contains(result.err, "unknown.properties:3"));
  CHECK(contains(result.err, "unknown config key 'bogus'"));

  std::string numeric = write_file(dir, "numeric.properties", "threads=many\n");
  result = run_cli(dir, "applymax --config " + numeric);
  CHECK(result.exit_code == 2);
  CHECK(contains(result.err, "numeric.properties:1"));
  CHECK(contains(result.err, "bad numeric value"));

  std::string no_eq = write_file(dir, "noeq.properties", "seed 7\n");
  result = run_cli(dir, "applymax --config " + no_eq);
  CHECK(result.exit_code == 2);
  CHECK(contains(result.err, "expected key=value"));

  std::string zero_res = write_file(dir, "zerores.properties", "resolution=0\n");
  result = run_cli(dir, "applymax --config " + zero_res);
  CHECK(result.exit_code == 2);
  CHECK(contains(result.err, "resolution must lie in (0, 1]"));

  // Passes the flag range check but cannot tile [0, 1].
  result = run_cli(dir, "calcjacc --config " + w.config + " --resolution 0.3");
  CHECK(result.exit_code == 2);
  CHECK(contains(result.err, "resolution must divide 1 evenly"));
}

TEST_CASE("uncovered relations stop clustered prediction") {
  TempDir dir;
  Workspace w = setup(dir, three_rules());
  std::string r_rules = write_file(dir, "rules_r.tsv",
                                   rule_line(0.5, kChainRule) + "\n" + rule_line(0.5, kAc2Rule) +
                                       "\n");
  std::string out_r = dir.file("out_r");
  std::string config_r = write_file(dir, "r.properties",
                                    "train=" + w.train + "\nvalid=" + w.valid + "\ntest=" +
                                        w.test + "\nrules=" + r_rules + "\nout=" + out_r + "\n");
  CliResult learn = run_cli(dir, "learnclusters --config " + config_r + " --resolution 0.5");
  REQUIRE(learn.exit_code == 0);
  CHECK(stdout_value(learn.out, "sections") == "2");

  // The full ruleset also carries the 's' rule, which those clusters miss.
  std::string config_mix = write_file(dir, "mix.properties",
                                      "train=" + w.train + "\nvalid=" + w.valid + "\ntest=" +
                                          w.test + "\nrules=" + w.rules + "\nclusters=" + out_r +
                                          "/clusters.tsv\nout=" + dir.file("out_mix") + "\n");
  CliResult apply = run_cli(dir, "applynrnoisy --config " + config_mix);
  CHECK(apply.exit_code == 2);
  CHECK(contains(apply.err, "no head section for relation 's'"));
  CHECK(contains(apply.err, "uncovered rule ids: 2"));
}

TEST_CASE("an empty ruleset still writes complete prediction files") {
  TempDir dir;
  Workspace w = setup(dir, "");

  CliResult apply = run_cli(dir, "applymax --config " + w.config);
  CAPTURE(apply.err);
  REQUIRE(apply.exit_code == 0);
  CHECK(stdout_value(apply.out, "rules") == "0");
  CHECK(stdout_value(apply.out, "tasks") == "4");
  CHECK(read_file(out_file(w, "predictions_max.txt")) ==
        "d r g\nHeads:\nTails:\nb s e\nHeads:\nTails:\n");

  CliResult learn = run_cli(dir, "learnclusters --config " + w.config + " --resolution 0.5");
  REQUIRE(learn.exit_code == 0);
  CHECK(stdout_value(learn.out, "sections") == "0");
  CliResult nr = run_cli(dir, "applynrnoisy --config " + w.config);
  CAPTURE(nr.err);
  REQUIRE(nr.exit_code == 0);
  CHECK(read_file(out_file(w, "predictions_nrnoisyor.txt")) ==
        read_file(out_file(w, "predictions_max.txt")));

  CliResult eval =
      run_cli(dir, "eval --config " + w.config + " " + out_file(w, "predictions_max.txt"));
  REQUIRE(eval.exit_code == 0);
  CHECK(stdout_value(eval.out, "hits@1") == "0.000000");
  CHECK(stdout_value(eval.out, "mrr") == "0.000000");
}

TEST_CASE("singleton clusters reproduce plain noisy-or bytes") {
  TempDir dir;
  // One multi-rule candidate so max, noisy-or, and clustering genuinely differ.
  Workspace w = setup(dir, three_rules(), "a\tr\tb\n");
  KnowledgeGraph graph = KnowledgeGraph::load(w.train, w.valid, w.test);
  RuleSet rules = parse_ruleset(w.rules, graph);

  std::vector<ClusterSection> sections;
  for (RelationId rel : rules.relations) {
    for (QueryDir d : {QueryDir::Head, QueryDir::Tail}) {
      ClusterSection section;
      section.relation = rel;
      section.dir = d;
      section.thresholds = ThresholdSet::uniform(1.0);
      section.assignment.relation = rel;
      auto ids = rules.rules_for(rel);
      for (std::size_t i = 0; i < ids.size(); ++i)
        section.assignment.cluster_of[ids[i]] = static_cast<std::uint32_t>(i);
      section.assignment.cluster_count = static_cast<std::uint32_t>(ids.size());
      sections.push_back(std::move(section));
    }
  }
  std::string clusters = dir.file("singleton_clusters.tsv");
  write_clusters(clusters, graph, rules, sections, 42);

  std::string config = write_file(dir, "singleton.properties",
                                  "train=" + w.train + "\nvalid=" + w.valid + "\ntest=" + w.test +
                                      "\nrules=" + w.rules + "\nclusters=" + clusters + "\nout=" +
                                      w.out + "\n");
  REQUIRE(run_cli(dir, "applynrnoisy --config " + config).exit_code == 0);
  REQUIRE(run_cli(dir, "applynoisy --config " + config).exit_code == 0);
  REQUIRE(run_cli(dir, "applymax --config " + config).exit_code == 0);

  std::string nr = read_file(out_file(w, "predictions_nrnoisyor.txt"));
  std::string noisy = read_file(out_file(w, "predictions_noisyor.txt"));
  std::string max = read_file(out_file(w, "predictions_max.txt"));
  CHECK(nr == noisy);
  CHECK(noisy != max);
  CHECK(contains(noisy, "f\t0.750000"));
}

TEST_CASE("flags override config file values") {
  TempDir dir;
  Workspace w = setup(dir, three_rules(), cli_test(), "seed=7\nminhash_k=16\n");

  CliResult from_config = run_cli(dir, "calcjacc --config " + w.config);
  REQUIRE(from_config.exit_code == 0);
  CHECK(stdout_value(from_config.out, "k") == "16");
  CHECK(stdout_value(from_config.out, "seed") == "7");
  std::string header = read_file(out_file(w, "signatures.tsv")).substr(0, 15);
  CHECK(header == "# k=16\n# seed=7");

  CliResult from_flag = run_cli(dir, "calcjacc --config " + w.config + " --seed 9");
  REQUIRE(from_flag.exit_code == 0);
  CHECK(stdout_value(from_flag.out, "k") == "16");
  CHECK(stdout_value(from_flag.out, "seed") == "9");
  CHECK(contains(read_file(out_file(w, "signatures.tsv")), "# seed=9\n"));

  std::string alt = dir.file("alt_out");
  CliResult rerouted = run_cli(dir, "calcjacc --config " + w.config + " --out " + alt);
  REQUIRE(rerouted.exit_code == 0);
  CHECK(stdout_value(rerouted.out, "signatures") == alt + "/signatures.tsv");
  CHECK(std::filesystem::exists(alt + "/signatures.tsv"));
}

TEST_CASE("eval takes the positional path over the config key") {
  TempDir dir;
  Workspace w = setup(dir, three_rules());
  REQUIRE(run_cli(dir, "applymax --config " + w.config).exit_code == 0);
  std::string real = out_file(w, "predictions_max.txt");

  std::string absent = write_file(dir, "absent.properties",
                                  "train=" + w.train + "\nvalid=" + w.valid + "\ntest=" + w.test +
                                      "\nrules=" + w.rules + "\nout=" + w.out +
                                      "\npredictions=" + dir.file("absent.txt") + "\n");
  CliResult missing = run_cli(dir, "eval --config " + absent);
  CHECK(missing.exit_code == 2);
  CHECK(contains(missing.err, "absent.txt"));

  CliResult positional = run_cli(dir, "eval --config " + absent + " " + real);
  CHECK(positional.exit_code == 0);

  std::string keyed = write_file(dir, "keyed.properties",
                                 "train=" + w.train + "\nvalid=" + w.valid + "\ntest=" + w.test +
                                     "\nrules=" + w.rules + "\nout=" + w.out + "\npredictions=" +
                                     real + "\n");
  CliResult from_key = run_cli(dir, "eval --config " + keyed);
  CHECK(from_key.exit_code == 0);
  CHECK(stdout_value(from_key.out, "tasks") == "4");
}
