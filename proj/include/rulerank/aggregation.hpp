#pragma once

#include "rulerank/clustering.hpp"
#include "rulerank/inference.hpp"

namespace rulerank {

struct RankedCandidate {
  EntityId entity = 0;
  double score = 0.0;
  std::vector<std::uint32_t> rule_ids;     // contributing rules, ascending
  std::vector<std::uint32_t> cluster_ids;  // non-redundant mode only, ascending
};

// Candidates in final rank order, truncated to the requested top-k.
struct CandidateRanking {
  CompletionTask task;
  std::vector<RankedCandidate> entries;
};

// Score: highest proposing confidence. Equal scores are ordered by comparing
// full descending confidence vectors, then by entity id.
CandidateRanking aggregate_max(const CandidatePool& pool, std::size_t top_k);

// Score: 1 - prod(1 - confidence) over all proposals. Ties by entity id.
CandidateRanking aggregate_noisy_or(const CandidatePool& pool, std::size_t top_k);

// Noisy-or over per-cluster confidence maxima, so redundant rules within one
// cluster count once. Every proposing rule must be mapped in `assignment`.
CandidateRanking aggregate_nr_noisy_or(const CandidatePool& pool,
                                       const ClusterAssignment& assignment, std::size_t top_k);

// The nr-noisy-or scores alone, aligned with pool.entities and unsorted.
// Threshold search calls this once per trial and task, so it avoids the
// ranking's provenance allocations; `cluster_ids` may be null.
void nr_noisy_or_scores(const CandidatePool& pool, const ClusterAssignment& assignment,
                        std::vector<double>& scores,
                        std::vector<std::vector<std::uint32_t>>* cluster_ids = nullptr);

}  // namespace rulerank
