#include "rulerank/aggregation.hpp"

#include <algorithm>
#include <cmath>

namespace rulerank {

namespace {

constexpr double kMaxConfidence = 1.0 - 1e-15;
constexpr double kLogSpaceFactor = 1e-12;

// Combines failure probabilities in a fixed descending order so that equal
// probability multisets give bit-identical scores regardless of how they were
// grouped. Confidences at 1.0 are clamped to keep other contributions visible.
double noisy_or_combine(std::vector<double>& probs) {
  for (double& p : probs) p = std::clamp(p, 0.0, kMaxConfidence);
  std::sort(probs.begin(), probs.end(), std::greater<double>());
  bool log_space = false;
  for (double p : probs) {
    if (1.0 - p < kLogSpaceFactor) {
      log_space = true;
      break;
    }
  }
  if (log_space) {
    double log_sum = 0.0;
    for (double p : probs) log_sum += std::log1p(-p);
    return 1.0 - std::exp(log_sum);
  }
  double failure = 1.0;
  for (double p : probs) failure *= 1.0 - p;
  return 1.0 - failure;
}

std::vector<std::uint32_t> proposal_rule_ids(const std::vector<Proposal>& proposals) {
  std::vector<std::uint32_t> ids;
  ids.reserve(proposals.size());
  for (const Proposal& p : proposals) ids.push_back(p.rule_id);
  std::sort(ids.begin(), ids.end());
  return ids;
}

void truncate(std::vector<RankedCandidate>& entries, std::size_t top_k) {
  if (entries.size() > top_k) entries.resize(top_k);
}

void sort_by_score(std::vector<RankedCandidate>& entries) {
  std::sort(entries.begin(), entries.end(),
            [](const RankedCandidate& a, const RankedCandidate& b) {
              if (a.score != b.score) return a.score > b.score;
              return a.entity < b.entity;
            });
}

}  // namespace

CandidateRanking aggregate_max(const CandidatePool& pool, std::size_t top_k) {
  require(top_k >= 1, "top-k bound must be at least 1");
  CandidateRanking ranking;
  ranking.task = pool.task;
  std::vector<std::size_t> order(pool.entities.size());
  for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
  std::sort(order.begin(), order.end(), [&pool](std::size_t a, std::size_t b) {
    int c = compare_proposals_desc(pool.proposals[a], pool.proposals[b]);
    if (c != 0) return c < 0;
    return pool.entities[a] < pool.entities[b];
  });
  ranking.entries.reserve(std::min(order.size(), top_k));
  for (std::size_t i = 0; i < order.size() && i < top_k; ++i) {
    const auto& proposals = pool.proposals[order[i]];
    RankedCandidate entry;
    entry.entity = pool.entities[order[i]];
    entry.score = proposals.front().confidence;
    entry.rule_ids = proposal_rule_ids(proposals);
    ranking.entries.push_back(std::move(entry));
  }
  return ranking;
}

CandidateRanking aggregate_noisy_or(const CandidatePool& pool, std::size_t top_k) {
  require(top_k >= 1, "top-k bound must be at least 1");
  CandidateRanking ranking;
  ranking.task = pool.task;
  ranking.entries.reserve(pool.entities.size());
  std::vector<double> probs;
  for (std::size_t i = 0; i < pool.entities.size(); ++i) {
    probs.clear();
    for (const Proposal& p : pool.proposals[i]) probs.push_back(p.confidence);
    RankedCandidate entry;
    entry.entity = pool.entities[i];
    entry.score = noisy_or_combine(probs);
    entry.rule_ids = proposal_rule_ids(pool.proposals[i]);
    ranking.entries.push_back(std::move(entry));
  }
  sort_by_score(ranking.entries);
  truncate(ranking.entries, top_k);
  return ranking;
}

void nr_noisy_or_scores(const CandidatePool& pool, const ClusterAssignment& assignment,
                        std::vector<double>& scores,
                        std::vector<std::vector<std::uint32_t>>* cluster_ids) {
  scores.clear();
  scores.reserve(pool.entities.size());
  if (cluster_ids) {
    cluster_ids->clear();
    cluster_ids->reserve(pool.entities.size());
  }
  std::vector<std::uint32_t> clusters_seen;
  std::vector<double> probs;
  for (std::size_t i = 0; i < pool.entities.size(); ++i) {
    clusters_seen.clear();
    probs.clear();
    for (const Proposal& p : pool.proposals[i]) {
      std::uint32_t c = assignment.cluster(p.rule_id);
      require(c < assignment.cluster_count, "cluster id out of range");
      std::size_t slot = clusters_seen.size();
      for (std::size_t s = 0; s < clusters_seen.size(); ++s) {
        if (clusters_seen[s] == c) {
          slot = s;
          break;
        }
      }
      if (slot == clusters_seen.size()) {
        clusters_seen.push_back(c);
        probs.push_back(p.confidence);
      } else {
        probs[slot] = std::max(probs[slot], p.confidence);
      }
    }
    scores.push_back(noisy_or_combine(probs));
    if (cluster_ids) {
      std::vector<std::uint32_t> sorted = clusters_seen;
      std::sort(sorted.begin(), sorted.end());
      cluster_ids->push_back(std::move(sorted));
    }
  }
}

CandidateRanking aggregate_nr_noisy_or(const CandidatePool& pool,
                                       const ClusterAssignment& assignment,
                                       std::size_t top_k) {
  require(top_k >= 1, "top-k bound must be at least 1");
  CandidateRanking ranking;
  ranking.task = pool.task;
  ranking.entries.reserve(pool.entities.size());
  std::vector<double> scores;
  std::vector<std::vector<std::uint32_t>> cluster_ids;
  nr_noisy_or_scores(pool, assignment, scores, &cluster_ids);
  for (std::size_t i = 0; i < pool.entities.size(); ++i) {
    RankedCandidate entry;
    entry.entity = pool.entities[i];
    entry.score = scores[i];
    entry.rule_ids = proposal_rule_ids(pool.proposals[i]);
    entry.cluster_ids = std::move(cluster_ids[i]);
    ranking.entries.push_back(std::move(entry));
  }
  sort_by_score(ranking.entries);
  truncate(ranking.entries, top_k);
  return ranking;
}

}  // namespace rulerank
