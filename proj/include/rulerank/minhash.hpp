#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "rulerank/types.hpp"

namespace rulerank {

struct MinHashParams {
  std::uint32_t k = 128;
  std::uint64_t seed = 0;
};

// Per-position minima under k seeded multiply-xor-shift hashes. The signature
// of an empty set is the all-ones sentinel.
using Signature = std::vector<std::uint64_t>;

constexpr std::uint64_t kEmptySignatureValue = ~0ull;

bool is_empty_signature(const Signature& sig);

class MinHasher {
 public:
  explicit MinHasher(MinHashParams params);

  Signature sign(std::span<const std::uint64_t> elements) const;
  const MinHashParams& params() const { return params_; }

 private:
  MinHashParams params_;
  std::vector<std::uint64_t> multipliers_;  // odd
  std::vector<std::uint64_t> offsets_;
};

// Fraction of agreeing signature positions. Two empty-set signatures estimate
// 1, one empty-set signature against anything else estimates 0.
double estimate_jaccard(const Signature& a, const Signature& b);

// Test oracle over materialized sets; inputs sorted and deduplicated. Two
// empty sets have Jaccard 1.
double exact_jaccard(std::span<const std::uint64_t> a, std::span<const std::uint64_t> b);

}  // namespace rulerank
