#pragma once

#include <cmath>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "rulerank/aggregation.hpp"
#include "rulerank/evaluation.hpp"

namespace rulerank {

enum class SearchStrategy { Grid, Random };

struct SearchConfig {
  SearchStrategy strategy = SearchStrategy::Grid;
  double grid_step = 0.005;         // grid lattice spacing; must divide 1 evenly
  std::uint32_t iterations = 10000; // random strategy trial count
  double random_resolution = 0.1;   // random sampling lattice spacing
  std::uint64_t seed = 0;
  std::uint32_t top_k = 100;        // ranking truncation before ranking the answer
  std::uint32_t fitness_k = 100;    // answers ranked deeper than this score 0
  unsigned workers = 1;
};

// One validation completion task: the hidden correct answer plus every other
// answer known true in train or valid, to be filtered before ranking.
struct ValidationTask {
  CompletionTask task;
  EntityId correct = 0;
  std::vector<EntityId> filtered;  // sorted; the correct entity is exempt
};

// All validation tasks of one relation and direction, in validation file order.
std::vector<ValidationTask> validation_tasks(const KnowledgeGraph& graph, RelationId rel,
                                             QueryDir dir);

// Mean reciprocal rank of the correct answers under nr-noisy-or scoring with
// the given cluster assignment. Each pool is scored, sorted by descending
// score (ties by entity id), truncated to top_k, and the correct entity is
// ranked pessimistically with filtering; ranks beyond k contribute 0.
double section_fitness(std::span<const ValidationTask> tasks,
                       std::span<const CandidatePool> pools,
                       const ClusterAssignment& assignment, std::uint32_t top_k,
                       std::uint32_t k);

// The chosen thresholds for one relation and prediction direction, with the
// clustering they induce. Fitness is NaN when the relation never occurs in
// the validation split; such sections keep uniform 0.5 thresholds.
struct SectionResult {
  RelationId relation = 0;
  QueryDir dir = QueryDir::Tail;
  ThresholdSet thresholds = ThresholdSet::uniform(0.5);
  double fitness = std::nan("");
  ClusterAssignment assignment;
};

struct SearchResult {
  std::vector<SectionResult> sections;  // relation ascending, Head before Tail
  std::size_t trials = 0;
  std::vector<std::string> warnings;    // relations that fell back to defaults
};

// Uniform thresholds {0, step, 2 step, ..., 1}, ascending.
std::vector<ThresholdSet> make_grid_trials(double step);

// Six thresholds per trial, each drawn independently and uniformly from the
// lattice {0, resolution, ..., 1}. Deterministic for a fixed seed.
std::vector<ThresholdSet> sample_random_trials(double resolution, std::uint32_t iterations,
                                               std::uint64_t seed);

// Evaluates every trial against every (relation, direction) section and keeps
// the earliest trial reaching the best fitness. Signatures are indexed by
// rule id. Candidate pools are generated once and reused across trials.
SearchResult run_trials(const Grounder& grounder, std::span<const Signature> signatures,
                        const SearchConfig& config, std::span<const ThresholdSet> trials);

// Dispatches to the configured strategy's trial sequence.
SearchResult search_thresholds(const Grounder& grounder, std::span<const Signature> signatures,
                               const SearchConfig& config);

}  // namespace rulerank
