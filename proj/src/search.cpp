#include "rulerank/search.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <limits>
#include <random>

#include "rulerank/parallel.hpp"

namespace rulerank {

namespace {

// Lattice point count for a spacing that must divide [0,1] evenly.
std::size_t lattice_steps(double step, const char* what) {
  require(step > 0.0 && step <= 1.0, std::string(what) + " must lie in (0, 1]");
  double n = std::round(1.0 / step);
  require(std::abs(n * step - 1.0) <= 1e-9, std::string(what) + " must divide 1 evenly");
  return static_cast<std::size_t>(n);
}

double lattice_value(std::size_t i, std::size_t n, double step) {
  return i == n ? 1.0 : static_cast<double>(i) * step;
}

}  // namespace

std::vector<ValidationTask> validation_tasks(const KnowledgeGraph& graph, RelationId rel,
                                             QueryDir dir) {
  std::vector<ValidationTask> out;
  auto known_mask = split_mask::train | split_mask::valid;
  for (const Triple& t : graph.triples(Split::Valid)) {
    if (t.rel != rel) continue;
    ValidationTask vt;
    vt.task.rel = rel;
    vt.task.dir = dir;
    if (dir == QueryDir::Tail) {
      vt.task.known = t.head;
      vt.correct = t.tail;
    } else {
      vt.task.known = t.tail;
      vt.correct = t.head;
    }
    vt.filtered = graph.known_completions(rel, vt.task.known, dir, known_mask);
    std::erase(vt.filtered, vt.correct);
    out.push_back(std::move(vt));
  }
  return out;
}

double section_fitness(std::span<const ValidationTask> tasks,
                       std::span<const CandidatePool> pools,
                       const ClusterAssignment& assignment, std::uint32_t top_k,
                       std::uint32_t k) {
  require(k >= 1, "fitness cutoff must be at least 1");
  require(top_k >= 1, "top-k bound must be at least 1");
  require(tasks.size() == pools.size(), "one pool per validation task required");
  if (tasks.empty()) return 0.0;
  std::vector<double> scores;
  std::vector<ScoredEntity> ranking;
  double sum = 0.0;
  for (std::size_t i = 0; i < tasks.size(); ++i) {
    nr_noisy_or_scores(pools[i], assignment, scores);
    ranking.clear();
    ranking.reserve(scores.size());
    for (std::size_t e = 0; e < scores.size(); ++e)
      ranking.push_back({pools[i].entities[e], scores[e]});
    std::sort(ranking.begin(), ranking.end(), [](const ScoredEntity& a, const ScoredEntity& b) {
      if (a.score != b.score) return a.score > b.score;
      return a.entity < b.entity;
    });
    if (ranking.size() > top_k) ranking.resize(top_k);
    auto rank = rank_of_correct(ranking, tasks[i].correct, tasks[i].filtered);
    if (rank && *rank <= k) sum += 1.0 / static_cast<double>(*rank);
  }
  return sum / static_cast<double>(tasks.size());
}

std::vector<ThresholdSet> make_grid_trials(double step) {
  std::size_t n = lattice_steps(step, "grid step");
  std::vector<ThresholdSet> trials;
  trials.reserve(n + 1);
  for (std::size_t i = 0; i <= n; ++i)
    trials.push_back(ThresholdSet::uniform(lattice_value(i, n, step)));
  return trials;
}

std::vector<ThresholdSet> sample_random_trials(double resolution, std::uint32_t iterations,
                                               std::uint64_t seed) {
  require(iterations >= 1, "iteration count must be at least 1");
  std::size_t n = lattice_steps(resolution, "random resolution");
  std::mt19937_64 gen(seed);
  std::vector<ThresholdSet> trials;
  trials.reserve(iterations);
  for (std::uint32_t it = 0; it < iterations; ++it) {
    ThresholdSet t;
    for (double& v : t.values) {
      std::size_t i = static_cast<std::size_t>(gen() % (n + 1));
      v = lattice_value(i, n, resolution);
    }
    trials.push_back(t);
  }
  return trials;
}

SearchResult run_trials(const Grounder& grounder, std::span<const Signature> signatures,
                        const SearchConfig& config, std::span<const ThresholdSet> trials) {
  const KnowledgeGraph& graph = grounder.graph();
  const RuleSet& rules = grounder.rules();
  require(signatures.size() == rules.rules.size(), "one signature per rule required");
  require(config.fitness_k >= 1, "fitness cutoff must be at least 1");
  require(!trials.empty(), "at least one trial required");

  // Per relation: local rule ids, types, local signatures, head/tail tasks.
  struct RelationWork {
    RelationId rel = 0;
    std::vector<std::uint32_t> rule_ids;
    std::vector<RuleType> types;
    std::vector<Signature> local_signatures;
    std::array<std::vector<ValidationTask>, 2> tasks;  // [Head, Tail]
    std::array<std::vector<CandidatePool>, 2> pools;
    std::array<SectionResult, 2> sections;
  };
  std::vector<RelationWork> work(rules.relations.size());
  for (std::size_t r = 0; r < rules.relations.size(); ++r) {
    RelationWork& w = work[r];
    w.rel = rules.relations[r];
    auto ids = rules.rules_for(w.rel);
    w.rule_ids.assign(ids.begin(), ids.end());
    for (std::uint32_t id : w.rule_ids) {
      w.types.push_back(rules.rules[id].type);
      w.local_signatures.push_back(signatures[id]);
    }
    w.tasks[0] = validation_tasks(graph, w.rel, QueryDir::Head);
    w.tasks[1] = validation_tasks(graph, w.rel, QueryDir::Tail);
  }

  // Candidate pools, one per task, generated once across all trials.
  struct PoolSlot {
    RelationWork* rel_work = nullptr;
    std::size_t dir = 0;
    std::size_t index = 0;
  };
  std::vector<PoolSlot> slots;
  for (RelationWork& w : work) {
    for (std::size_t d = 0; d < 2; ++d) {
      w.pools[d].resize(w.tasks[d].size());
      for (std::size_t i = 0; i < w.tasks[d].size(); ++i) slots.push_back({&w, d, i});
    }
  }
  parallel_for(slots.size(), config.workers, [&](std::size_t s) {
    const PoolSlot& slot = slots[s];
    slot.rel_work->pools[slot.dir][slot.index] =
        grounder.generate_candidates(slot.rel_work->tasks[slot.dir][slot.index].task,
                                     TopMode::all());
  });

  // Both directions of a relation share each trial's clustering, so trials
  // run per relation with one partition and two fitness evaluations.
  parallel_for(work.size(), config.workers, [&](std::size_t r) {
    RelationWork& w = work[r];
    auto pairs = pairwise_estimates(w.local_signatures);
    for (std::size_t d = 0; d < 2; ++d) {
      SectionResult& section = w.sections[d];
      section.relation = w.rel;
      section.dir = d == 0 ? QueryDir::Head : QueryDir::Tail;
    }
    bool has_tasks = !w.tasks[0].empty() || !w.tasks[1].empty();
    if (has_tasks) {
      std::array<double, 2> best_fitness{-std::numeric_limits<double>::infinity(),
                                         -std::numeric_limits<double>::infinity()};
      std::array<std::size_t, 2> best_trial{0, 0};
      for (std::size_t t = 0; t < trials.size(); ++t) {
        ClusterAssignment assignment =
            cluster_from_pairs(w.rel, w.rule_ids, w.types, pairs, trials[t]);
        for (std::size_t d = 0; d < 2; ++d) {
          double f = section_fitness(w.tasks[d], w.pools[d], assignment, config.top_k,
                                     config.fitness_k);
          if (f > best_fitness[d]) {
            best_fitness[d] = f;
            best_trial[d] = t;
          }
        }
      }
      for (std::size_t d = 0; d < 2; ++d) {
        SectionResult& section = w.sections[d];
        section.thresholds = trials[best_trial[d]];
        section.fitness = best_fitness[d];
        section.assignment =
            cluster_from_pairs(w.rel, w.rule_ids, w.types, pairs, section.thresholds);
      }
    } else {
      for (std::size_t d = 0; d < 2; ++d) {
        SectionResult& section = w.sections[d];
        section.assignment =
            cluster_from_pairs(w.rel, w.rule_ids, w.types, pairs, section.thresholds);
      }
    }
  });

  SearchResult result;
  result.trials = trials.size();
  for (RelationWork& w : work) {
    bool has_tasks = !w.tasks[0].empty() || !w.tasks[1].empty();
    if (!has_tasks)
      result.warnings.push_back("relation '" + graph.relations().label(w.rel) +
                                "' has no validation triples; using default thresholds 0.5");
    result.sections.push_back(std::move(w.sections[0]));
    result.sections.push_back(std::move(w.sections[1]));
  }
  return result;
}

SearchResult search_thresholds(const Grounder& grounder, std::span<const Signature> signatures,
                               const SearchConfig& config) {
  std::vector<ThresholdSet> trials =
      config.strategy == SearchStrategy::Grid
          ? make_grid_trials(config.grid_step)
          : sample_random_trials(config.random_resolution, config.iterations, config.seed);
  return run_trials(grounder, signatures, config, trials);
}

}  // namespace rulerank
