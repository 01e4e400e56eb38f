#pragma once

#include <array>
#include <span>
#include <unordered_map>
#include <vector>

#include "rulerank/minhash.hpp"
#include "rulerank/rules.hpp"

namespace rulerank {

// One Jaccard threshold per unordered rule-type pair: three self pairs and
// three cross pairs.
struct ThresholdSet {
  std::array<double, 6> values{};  // CC, AC1AC1, AC2AC2, CAC1, CAC2, AC1AC2

  static std::size_t index(RuleType a, RuleType b) {
    int x = static_cast<int>(a);
    int y = static_cast<int>(b);
    if (x == y) return static_cast<std::size_t>(x);
    return static_cast<std::size_t>(2 + x + y);
  }

  double get(RuleType a, RuleType b) const { return values[index(a, b)]; }

  static ThresholdSet uniform(double v) {
    ThresholdSet t;
    t.values.fill(v);
    return t;
  }

  friend bool operator==(const ThresholdSet&, const ThresholdSet&) = default;
};

struct ClusterAssignment {
  RelationId relation = 0;
  std::unordered_map<std::uint32_t, std::uint32_t> cluster_of;  // rule id -> cluster id
  std::uint32_t cluster_count = 0;

  std::uint32_t cluster(std::uint32_t rule_id) const;
};

// Estimated Jaccard for one pair of same-relation rules; a and b index into
// the relation's rule id list, a < b.
struct RulePairJaccard {
  std::uint32_t a = 0;
  std::uint32_t b = 0;
  double estimate = 0.0;
};

// All pairs with a non-zero estimate, in (a, b) order.
std::vector<RulePairJaccard> pairwise_estimates(std::span<const Signature> signatures);

// Connected components of the graph joining pairs whose estimated Jaccard
// strictly exceeds the threshold for their type pair. Cluster ids are dense
// and ordered by each cluster's lowest rule id.
ClusterAssignment cluster_from_pairs(RelationId relation,
                                     std::span<const std::uint32_t> rule_ids,
                                     std::span<const RuleType> types,
                                     std::span<const RulePairJaccard> pairs,
                                     const ThresholdSet& thresholds);

ClusterAssignment cluster_rules(RelationId relation, std::span<const std::uint32_t> rule_ids,
                                std::span<const RuleType> types,
                                std::span<const Signature> signatures,
                                const ThresholdSet& thresholds);

}  // namespace rulerank
