#pragma once

#include <optional>
#include <span>
#include <string>
#include <vector>

#include "rulerank/graph.hpp"

namespace rulerank {

struct ScoredEntity {
  EntityId entity = 0;
  double score = 0.0;
};

// Pessimistic rank of `correct` within the stored ranking: one plus the number
// of non-filtered entities scoring strictly higher plus the number tied with
// it. Absence from the ranking is a miss. `filtered` must be sorted and never
// suppresses the correct entity itself.
std::optional<std::uint32_t> rank_of_correct(std::span<const ScoredEntity> ranking,
                                             EntityId correct,
                                             std::span<const EntityId> filtered);

// Head and tail rankings for one test triple, in descending score order.
struct TaskPrediction {
  Triple triple;
  std::vector<ScoredEntity> heads;
  std::vector<ScoredEntity> tails;
};

struct MetricBlock {
  std::size_t tasks = 0;
  std::vector<double> hits;  // aligned with the cutoff list
  double mrr = 0.0;
};

struct EvalReport {
  std::vector<std::uint32_t> cutoffs;
  MetricBlock overall;
  std::vector<std::pair<RelationId, MetricBlock>> per_relation;  // ascending relation id

  std::string table(const KnowledgeGraph& graph) const;
  std::string key_values() const;
};

// Filtered evaluation over every test triple, two tasks each. Known answers
// from any split other than the queried one are filtered from the ranking.
EvalReport evaluate(std::span<const TaskPrediction> predictions, const KnowledgeGraph& graph,
                    std::span<const std::uint32_t> cutoffs);

}  // namespace rulerank
