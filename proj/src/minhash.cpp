#include "rulerank/minhash.hpp"

#include <algorithm>

namespace rulerank {

namespace {

std::uint64_t splitmix64(std::uint64_t& state) {
  state += 0x9e3779b97f4a7c15ull;
  std::uint64_t z = state;
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ull;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebull;
  return z ^ (z >> 31);
}

std::uint64_t mix(std::uint64_t z) {
  z ^= z >> 33;
  z *= 0xff51afd7ed558ccdull;
  z ^= z >> 33;
  return z;
}

}  // namespace

bool is_empty_signature(const Signature& sig) {
  for (std::uint64_t v : sig)
    if (v != kEmptySignatureValue) return false;
  return true;
}

MinHasher::MinHasher(MinHashParams params) : params_(params) {
  require(params_.k >= 1, "minhash requires at least one hash function");
  std::uint64_t state = params_.seed;
  multipliers_.reserve(params_.k);
  offsets_.reserve(params_.k);
  for (std::uint32_t i = 0; i < params_.k; ++i) {
    multipliers_.push_back(splitmix64(state) | 1ull);
    offsets_.push_back(splitmix64(state));
  }
}

Signature MinHasher::sign(std::span<const std::uint64_t> elements) const {
  Signature sig(params_.k, kEmptySignatureValue);
  for (std::uint64_t x : elements) {
    for (std::uint32_t i = 0; i < params_.k; ++i) {
      std::uint64_t h = mix(x * multipliers_[i] + offsets_[i]);
      if (h < sig[i]) sig[i] = h;
    }
  }
  return sig;
}

double estimate_jaccard(const Signature& a, const Signature& b) {
  require(!a.empty() && a.size() == b.size(), "signature lengths differ");
  bool a_empty = is_empty_signature(a);
  bool b_empty = is_empty_signature(b);
  if (a_empty && b_empty) return 1.0;
  if (a_empty || b_empty) return 0.0;
  std::size_t agree = 0;
  for (std::size_t i = 0; i < a.size(); ++i)
    if (a[i] == b[i]) ++agree;
  return static_cast<double>(agree) / static_cast<double>(a.size());
}

double exact_jaccard(std::span<const std::uint64_t> a, std::span<const std::uint64_t> b) {
  if (a.empty() && b.empty()) return 1.0;
  std::size_t i = 0, j = 0, both = 0;
  while (i < a.size() && j < b.size()) {
    if (a[i] == b[j]) {
      ++both;
      ++i;
      ++j;
    } else if (a[i] < b[j]) {
      ++i;
    } else {
      ++j;
    }
  }
  std::size_t unions = a.size() + b.size() - both;
  return static_cast<double>(both) / static_cast<double>(unions);
}

}  // namespace rulerank
