#include "rulerank/commands.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>

#include "rulerank/parallel.hpp"
#include "rulerank/prediction_io.hpp"

namespace rulerank {

namespace {

std::string joined(const std::string& dir, const char* name) {
  return (std::filesystem::path(dir) / name).string();
}

void validate(const RunConfig& config) {
  if (config.threads < 1) throw ParseError("config: threads must be at least 1");
  if (config.top_k < 10) throw ParseError("config: topk must be at least 10");
  if (config.minhash_k < 1) throw ParseError("config: minhash_k must be at least 1");
  if (config.iterations < 1) throw ParseError("config: iterations must be at least 1");
  if (config.resolution != 0.0) {
    double n = std::round(1.0 / config.resolution);
    if (config.resolution <= 0.0 || config.resolution > 1.0 ||
        std::abs(n * config.resolution - 1.0) > 1e-9)
      throw ParseError("config: resolution must divide 1 evenly");
  }
}

double effective_resolution(const RunConfig& config) {
  if (config.resolution > 0.0) return config.resolution;
  return config.strategy == SearchStrategy::Grid ? 0.005 : 0.1;
}

struct Loaded {
  KnowledgeGraph graph;
  RuleSet rules;
};

Loaded load_inputs(const RunConfig& config) {
  validate(config);
  if (config.train.empty()) throw ParseError("config: train path missing");
  if (config.valid.empty()) throw ParseError("config: valid path missing");
  if (config.test.empty()) throw ParseError("config: test path missing");
  if (config.rules.empty()) throw ParseError("config: rules path missing");
  Loaded loaded{KnowledgeGraph::load(config.train, config.valid, config.test), RuleSet{}};
  const KnowledgeGraph& g = loaded.graph;
  std::fprintf(stderr, "graph: %u entities, %u relations, %zu/%zu/%zu train/valid/test triples\n",
               g.entity_count(), g.relation_count(), g.triples(Split::Train).size(),
               g.triples(Split::Valid).size(), g.triples(Split::Test).size());
  for (Split s : {Split::Train, Split::Valid, Split::Test}) {
    if (g.duplicates_removed(s) > 0)
      std::fprintf(stderr, "graph: removed %zu duplicate triples from split %d\n",
                   g.duplicates_removed(s), static_cast<int>(s));
  }
  loaded.rules = parse_ruleset(config.rules, loaded.graph);
  for (const std::string& w : loaded.rules.warnings)
    std::fprintf(stderr, "rules: skipped %s\n", w.c_str());
  std::fprintf(stderr, "rules: %zu rules over %zu relations\n", loaded.rules.rules.size(),
               loaded.rules.relations.size());
  return loaded;
}

void ensure_out_dir(const RunConfig& config) {
  std::error_code ec;
  std::filesystem::create_directories(config.out, ec);
  if (ec) throw ParseError("cannot create output directory: " + config.out);
}

std::vector<ScoredEntity> to_scored(const CandidateRanking& ranking) {
  std::vector<ScoredEntity> out;
  out.reserve(ranking.entries.size());
  for (const RankedCandidate& e : ranking.entries) out.push_back({e.entity, e.score});
  return out;
}

enum class Aggregator { Max, NoisyOr, NrNoisyOr };

// Head and tail rankings for every test triple. Results land in per-triple
// slots, so the worker count never affects output bytes.
std::vector<TaskPrediction> predict_all(const Grounder& grounder, const RunConfig& config,
                                        Aggregator aggregator, const ClusterFile* clusters) {
  const KnowledgeGraph& graph = grounder.graph();
  auto test = graph.triples(Split::Test);
  std::vector<TaskPrediction> predictions(test.size());
  static const ClusterAssignment kEmptyAssignment;
  parallel_for(test.size(), config.threads, [&](std::size_t i) {
    const Triple& t = test[i];
    TaskPrediction& p = predictions[i];
    p.triple = t;
    for (QueryDir dir : {QueryDir::Head, QueryDir::Tail}) {
      CompletionTask task{t.rel, dir == QueryDir::Head ? t.tail : t.head, dir};
      TopMode mode =
          aggregator == Aggregator::Max ? TopMode::max_k(config.top_k) : TopMode::all();
      CandidatePool pool = grounder.generate_candidates(task, mode);
      CandidateRanking ranking;
      switch (aggregator) {
        case Aggregator::Max:
          ranking = aggregate_max(pool, config.top_k);
          break;
        case Aggregator::NoisyOr:
          ranking = aggregate_noisy_or(pool, config.top_k);
          break;
        case Aggregator::NrNoisyOr: {
          const ClusterAssignment* assignment = &kEmptyAssignment;
          if (!pool.entities.empty()) {
            const ClusterSection* section = clusters->find(t.rel, dir);
            require(section != nullptr, "cluster section missing after validation");
            assignment = &section->assignment;
          }
          ranking = aggregate_nr_noisy_or(pool, *assignment, config.top_k);
          break;
        }
      }
      (dir == QueryDir::Head ? p.heads : p.tails) = to_scored(ranking);
    }
  });
  return predictions;
}

void run_apply(const RunConfig& config, Aggregator aggregator, const char* file_name) {
  Loaded loaded = load_inputs(config);
  ensure_out_dir(config);
  Grounder grounder(loaded.graph, loaded.rules);
  ClusterFile clusters;
  if (aggregator == Aggregator::NrNoisyOr) {
    std::string path = config.clusters_path();
    clusters = read_clusters(path, loaded.graph, loaded.rules);
    // Every relation carrying rules needs both direction sections before any
    // inference starts; otherwise some rules could never be aggregated.
    for (RelationId rel : loaded.rules.relations) {
      for (QueryDir dir : {QueryDir::Head, QueryDir::Tail}) {
        if (clusters.find(rel, dir)) continue;
        std::string message = path + ": no " +
                              (dir == QueryDir::Head ? std::string("head") : std::string("tail")) +
                              " section for relation '" +
                              loaded.graph.relations().label(rel) + "'; uncovered rule ids:";
        for (std::uint32_t id : loaded.rules.rules_for(rel))
          message += " " + std::to_string(id);
        throw ParseError(message);
      }
    }
    std::fprintf(stderr, "clusters: %zu sections from %s\n", clusters.sections.size(),
                 path.c_str());
  }
  std::vector<TaskPrediction> predictions = predict_all(
      grounder, config, aggregator, aggregator == Aggregator::NrNoisyOr ? &clusters : nullptr);
  std::string out_path = joined(config.out, file_name);
  write_predictions(out_path, loaded.graph, predictions);
  std::printf("predictions=%s\n", out_path.c_str());
  std::printf("tasks=%zu\n", predictions.size() * 2);
  std::printf("rules=%zu\n", loaded.rules.rules.size());
}

}  // namespace

std::string RunConfig::clusters_path() const {
  return clusters.empty() ? joined(out, "clusters.tsv") : clusters;
}

std::string RunConfig::signatures_path() const {
  return signatures.empty() ? joined(out, "signatures.tsv") : signatures;
}

void apply_config_file(RunConfig& config, const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ParseError("cannot open config file: " + path);
  std::string line;
  std::size_t line_no = 0;
  auto trim = [](std::string_view v) {
    while (!v.empty() && (v.front() == ' ' || v.front() == '\t')) v.remove_prefix(1);
    while (!v.empty() && (v.back() == ' ' || v.back() == '\t' || v.back() == '\r'))
      v.remove_suffix(1);
    return v;
  };
  auto fail = [&](const std::string& message) {
    throw ParseError(path + ":" + std::to_string(line_no) + ": " + message);
  };
  auto parse_unsigned = [&](std::string_view value, auto& field) {
    auto [ptr, ec] = std::from_chars(value.data(), value.data() + value.size(), field);
    if (ec != std::errc() || ptr != value.data() + value.size()) fail("bad numeric value");
  };
  while (std::getline(in, line)) {
    ++line_no;
    std::string_view view = trim(line);
    if (view.empty() || view.front() == '#') continue;
    auto eq = view.find('=');
    if (eq == std::string_view::npos) fail("expected key=value");
    std::string key(trim(view.substr(0, eq)));
    std::string value(trim(view.substr(eq + 1)));
    if (key == "train") config.train = value;
    else if (key == "valid") config.valid = value;
    else if (key == "test") config.test = value;
    else if (key == "rules") config.rules = value;
    else if (key == "out") config.out = value;
    else if (key == "clusters") config.clusters = value;
    else if (key == "signatures") config.signatures = value;
    else if (key == "predictions") config.predictions = value;
    else if (key == "threads") parse_unsigned(value, config.threads);
    else if (key == "seed") parse_unsigned(value, config.seed);
    else if (key == "topk") parse_unsigned(value, config.top_k);
    else if (key == "minhash_k") parse_unsigned(value, config.minhash_k);
    else if (key == "iterations") parse_unsigned(value, config.iterations);
    else if (key == "strategy") {
      if (value == "grid") config.strategy = SearchStrategy::Grid;
      else if (value == "random") config.strategy = SearchStrategy::Random;
      else fail("strategy must be 'grid' or 'random'");
    } else if (key == "resolution") {
      double r = 0.0;
      auto [ptr, ec] = std::from_chars(value.data(), value.data() + value.size(), r);
      if (ec != std::errc() || ptr != value.data() + value.size() || r <= 0.0 || r > 1.0)
        fail("resolution must lie in (0, 1]");
      config.resolution = r;
    } else {
      fail("unknown config key '" + key + "'");
    }
  }
}

void cmd_applymax(const RunConfig& config) {
  run_apply(config, Aggregator::Max, "predictions_max.txt");
}

void cmd_applynoisy(const RunConfig& config) {
  run_apply(config, Aggregator::NoisyOr, "predictions_noisyor.txt");
}

void cmd_applynrnoisy(const RunConfig& config) {
  run_apply(config, Aggregator::NrNoisyOr, "predictions_nrnoisyor.txt");
}

void cmd_calcjacc(const RunConfig& config) {
  Loaded loaded = load_inputs(config);
  ensure_out_dir(config);
  Grounder grounder(loaded.graph, loaded.rules);
  MinHashParams params{config.minhash_k, config.seed};
  MinHasher hasher(params);
  std::vector<Signature> signatures(loaded.rules.rules.size());
  std::vector<std::uint64_t> set_sizes(loaded.rules.rules.size());
  parallel_for(loaded.rules.rules.size(), config.threads, [&](std::size_t i) {
    std::vector<std::uint64_t> pairs = grounder.solution_pairs(loaded.rules.rules[i]);
    set_sizes[i] = pairs.size();
    signatures[i] = hasher.sign(pairs);
  });
  std::string out_path = config.signatures_path();
  write_signatures(out_path, loaded.graph, loaded.rules, signatures, set_sizes, params);
  std::printf("signatures=%s\n", out_path.c_str());
  std::printf("rules=%zu\n", loaded.rules.rules.size());
  std::printf("k=%u\n", params.k);
  std::printf("seed=%llu\n", static_cast<unsigned long long>(params.seed));
}

void cmd_learnclusters(const RunConfig& config) {
  Loaded loaded = load_inputs(config);
  ensure_out_dir(config);
  Grounder grounder(loaded.graph, loaded.rules);
  std::vector<Signature> signatures;
  std::string sig_path = config.signatures_path();
  if (std::filesystem::exists(sig_path)) {
    SignatureFile file = read_signatures(sig_path, loaded.graph, loaded.rules);
    signatures = std::move(file.signatures);
    std::fprintf(stderr, "signatures: loaded %zu from %s (k=%u)\n", signatures.size(),
                 sig_path.c_str(), file.params.k);
  } else {
    MinHasher hasher({config.minhash_k, config.seed});
    signatures.resize(loaded.rules.rules.size());
    parallel_for(loaded.rules.rules.size(), config.threads, [&](std::size_t i) {
      signatures[i] = hasher.sign(grounder.solution_pairs(loaded.rules.rules[i]));
    });
    std::fprintf(stderr, "signatures: computed %zu inline (k=%u)\n", signatures.size(),
                 config.minhash_k);
  }
  SearchConfig search;
  search.strategy = config.strategy;
  search.grid_step = effective_resolution(config);
  search.random_resolution = effective_resolution(config);
  search.iterations = config.iterations;
  search.seed = config.seed;
  search.top_k = config.top_k;
  search.fitness_k = config.top_k;
  search.workers = config.threads;
  SearchResult result = search_thresholds(grounder, signatures, search);
  for (const std::string& w : result.warnings) std::fprintf(stderr, "search: %s\n", w.c_str());
  std::vector<ClusterSection> sections;
  sections.reserve(result.sections.size());
  for (SectionResult& s : result.sections)
    sections.push_back(
        {s.relation, s.dir, s.thresholds, s.fitness, std::move(s.assignment)});
  std::string out_path = config.clusters_path();
  write_clusters(out_path, loaded.graph, loaded.rules, sections, config.seed);
  std::printf("clusters=%s\n", out_path.c_str());
  std::printf("sections=%zu\n", sections.size());
  std::printf("trials=%zu\n", result.trials);
}

void cmd_eval(const RunConfig& config) {
  validate(config);
  if (config.train.empty()) throw ParseError("config: train path missing");
  if (config.valid.empty()) throw ParseError("config: valid path missing");
  if (config.test.empty()) throw ParseError("config: test path missing");
  if (config.predictions.empty()) throw ParseError("config: predictions path missing");
  KnowledgeGraph graph = KnowledgeGraph::load(config.train, config.valid, config.test);
  ensure_out_dir(config);
  std::vector<TaskPrediction> predictions = read_predictions(config.predictions, graph);
  std::vector<std::uint32_t> cutoffs{1, 3, 10};
  EvalReport report = evaluate(predictions, graph, cutoffs);
  std::string out_path = joined(config.out, "eval.txt");
  std::ofstream out(out_path, std::ios::binary);
  if (!out) throw ParseError("cannot open output file: " + out_path);
  out << report.table(graph) << '\n' << report.key_values();
  std::printf("report=%s\n", out_path.c_str());
  std::fputs(report.key_values().c_str(), stdout);
}

}  // namespace rulerank
