#include "rulerank/clustering.hpp"

#include <algorithm>

namespace rulerank {

std::uint32_t ClusterAssignment::cluster(std::uint32_t rule_id) const {
  auto it = cluster_of.find(rule_id);
  require(it != cluster_of.end(), "rule id missing from cluster assignment");
  return it->second;
}

std::vector<RulePairJaccard> pairwise_estimates(std::span<const Signature> signatures) {
  std::vector<RulePairJaccard> pairs;
  for (std::uint32_t a = 0; a < signatures.size(); ++a) {
    for (std::uint32_t b = a + 1; b < signatures.size(); ++b) {
      double est = estimate_jaccard(signatures[a], signatures[b]);
      if (est > 0.0) pairs.push_back({a, b, est});
    }
  }
  return pairs;
}

ClusterAssignment cluster_from_pairs(RelationId relation,
                                     std::span<const std::uint32_t> rule_ids,
                                     std::span<const RuleType> types,
                                     std::span<const RulePairJaccard> pairs,
                                     const ThresholdSet& thresholds) {
  require(rule_ids.size() == types.size(), "rule id and type counts differ");
  std::size_t n = rule_ids.size();
  std::vector<std::vector<std::uint32_t>> adjacency(n);
  for (const RulePairJaccard& p : pairs) {
    require(p.a < n && p.b < n && p.a < p.b, "pair index out of range");
    if (p.estimate > thresholds.get(types[p.a], types[p.b])) {
      adjacency[p.a].push_back(p.b);
      adjacency[p.b].push_back(p.a);
    }
  }
  ClusterAssignment assignment;
  assignment.relation = relation;
  std::vector<std::uint32_t> cluster(n, ~0u);
  std::vector<std::uint32_t> stack;
  std::uint32_t next = 0;
  std::vector<std::uint32_t> min_rule;
  for (std::uint32_t i = 0; i < n; ++i) {
    if (cluster[i] != ~0u) continue;
    std::uint32_t id = next++;
    min_rule.push_back(rule_ids[i]);
    stack.push_back(i);
    cluster[i] = id;
    while (!stack.empty()) {
      std::uint32_t v = stack.back();
      stack.pop_back();
      for (std::uint32_t w : adjacency[v]) {
        if (cluster[w] != ~0u) continue;
        cluster[w] = id;
        min_rule[id] = std::min(min_rule[id], rule_ids[w]);
        stack.push_back(w);
      }
    }
  }
  // Dense ids follow each component's lowest rule id, not discovery order.
  std::vector<std::uint32_t> order(next);
  for (std::uint32_t c = 0; c < next; ++c) order[c] = c;
  std::sort(order.begin(), order.end(),
            [&](std::uint32_t a, std::uint32_t b) { return min_rule[a] < min_rule[b]; });
  std::vector<std::uint32_t> remap(next);
  for (std::uint32_t rank = 0; rank < next; ++rank) remap[order[rank]] = rank;
  assignment.cluster_count = next;
  for (std::uint32_t i = 0; i < n; ++i) assignment.cluster_of[rule_ids[i]] = remap[cluster[i]];
  return assignment;
}

ClusterAssignment cluster_rules(RelationId relation, std::span<const std::uint32_t> rule_ids,
                                std::span<const RuleType> types,
                                std::span<const Signature> signatures,
                                const ThresholdSet& thresholds) {
  require(rule_ids.size() == signatures.size(), "rule id and signature counts differ");
  auto pairs = pairwise_estimates(signatures);
  return cluster_from_pairs(relation, rule_ids, types, pairs, thresholds);
}

}  // namespace rulerank
