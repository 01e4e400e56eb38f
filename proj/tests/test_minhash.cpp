#include <doctest.h>

#include <cstdint>
#include <random>
#include <vector>

#include "rulerank/minhash.hpp"
#include "rulerank/types.hpp"

using namespace rulerank;

TEST_CASE("signatures are deterministic in parameters and input") {
  MinHasher a({128, 42});
  MinHasher b({128, 42});
  std::vector<std::uint64_t> set = {3, 17, 99, 123456789};
  CHECK(a.sign(set) == b.sign(set));
  MinHasher other_seed({128, 43});
  CHECK(a.sign(set) != other_seed.sign(set));
}

TEST_CASE("signature length equals k") {
  std::vector<std::uint64_t> set = {1, 2, 3};
  CHECK(MinHasher({1, 0}).sign(set).size() == 1);
  CHECK(MinHasher({128, 0}).sign(set).size() == 128);
  CHECK(MinHasher({7, 5}).sign(set).size() == 7);
}

TEST_CASE("identical sets estimate one") {
  MinHasher hasher({128, 7});
  std::vector<std::uint64_t> set = {5, 10, 15, 20, 25};
  Signature sig = hasher.sign(set);
  CHECK(estimate_jaccard(sig, sig) == 1.0);
  std::vector<std::uint64_t> copy = set;
  CHECK(estimate_jaccard(sig, hasher.sign(copy)) == 1.0);
}

TEST_CASE("singleton sets estimate one against themselves") {
  MinHasher hasher({128, 0});
  std::vector<std::uint64_t> one = {77};
  CHECK(estimate_jaccard(hasher.sign(one), hasher.sign(one)) == 1.0);
}

TEST_CASE("empty set conventions") {
  MinHasher hasher({16, 3});
  std::vector<std::uint64_t> empty;
  std::vector<std::uint64_t> nonempty = {4, 8};
  Signature empty_sig = hasher.sign(empty);
  CHECK(is_empty_signature(empty_sig));
  for (std::uint64_t v : empty_sig) CHECK(v == kEmptySignatureValue);
  CHECK_FALSE(is_empty_signature(hasher.sign(nonempty)));
  CHECK(estimate_jaccard(empty_sig, hasher.sign(empty)) == 1.0);
  CHECK(estimate_jaccard(empty_sig, hasher.sign(nonempty)) == 0.0);
  CHECK(estimate_jaccard(hasher.sign(nonempty), empty_sig) == 0.0);
  CHECK(exact_jaccard(empty, empty) == 1.0);
  CHECK(exact_jaccard(empty, nonempty) == 0.0);
}

TEST_CASE("exact jaccard on small sets") {
  std::vector<std::uint64_t> a = {1, 2, 3};
  std::vector<std::uint64_t> b = {2, 3, 4};
  std::vector<std::uint64_t> c = {5, 6};
  CHECK(exact_jaccard(a, b) == 0.5);
  CHECK(exact_jaccard(a, a) == 1.0);
  CHECK(exact_jaccard(a, c) == 0.0);
  std::vector<std::uint64_t> d = {1};
  std::vector<std::uint64_t> e = {1, 2, 3, 4};
  CHECK(exact_jaccard(d, e) == 0.25);
}

TEST_CASE("estimates track exact jaccard within sampling error") {
  // 300 random pairs at true similarity 1/2; with k=128 the estimate stays
  // within 0.15 except with probability well under one percent per pair.
  std::mt19937_64 rng(2024);
  MinHasher hasher({128, 11});
  int violations = 0;
  for (int trial = 0; trial < 300; ++trial) {
    std::vector<std::uint64_t> shared, only_a, only_b;
    for (int i = 0; i < 200; ++i) shared.push_back(rng());
    for (int i = 0; i < 100; ++i) only_a.push_back(rng());
    for (int i = 0; i < 100; ++i) only_b.push_back(rng());
    std::vector<std::uint64_t> a = shared, b = shared;
    a.insert(a.end(), only_a.begin(), only_a.end());
    b.insert(b.end(), only_b.begin(), only_b.end());
    std::sort(a.begin(), a.end());
    std::sort(b.begin(), b.end());
    double truth = exact_jaccard(a, b);
    CHECK(truth == doctest::Approx(0.5).epsilon(0.02));
    double est = estimate_jaccard(hasher.sign(a), hasher.sign(b));
    if (std::abs(est - truth) > 0.15) ++violations;
  }
  CHECK(violations <= 3);
}

TEST_CASE("estimates are unbiased across disjoint and equal extremes") {
  std::mt19937_64 rng(7);
  MinHasher hasher({128, 5});
  std::vector<std::uint64_t> a, b;
  for (int i = 0; i < 500; ++i) a.push_back(rng());
  for (int i = 0; i < 500; ++i) b.push_back(rng());
  double est = estimate_jaccard(hasher.sign(a), hasher.sign(b));
  // Disjoint 64-bit random sets collide in a signature position only rarely.
  CHECK(est <= 0.05);
}

TEST_CASE("signature length mismatch is rejected") {
  std::vector<std::uint64_t> set = {1, 2, 3};
  Signature s16 = MinHasher({16, 0}).sign(set);
  Signature s32 = MinHasher({32, 0}).sign(set);
  CHECK_THROWS_AS(estimate_jaccard(s16, s32), ContractViolation);
  Signature empty;
  CHECK_THROWS_AS(estimate_jaccard(empty, s16), ContractViolation);
}

TEST_CASE("hasher requires at least one function") {
  CHECK_THROWS_AS(MinHasher({0, 0}), ContractViolation);
}
