#pragma once

#include <cstdint>
#include <stdexcept>
#include <string>

namespace rulerank {

using EntityId = std::uint32_t;
using RelationId = std::uint32_t;

struct Triple {
  EntityId head;
  RelationId rel;
  EntityId tail;

  friend bool operator==(const Triple&, const Triple&) = default;
};

// Traversal direction over a relation's adjacency: Forward walks head -> tail,
// Backward walks tail -> head.
enum class Direction { Forward, Backward };

// Which side of a completion task is unknown: Tail answers (h, r, ?),
// Head answers (?, r, t).
enum class QueryDir { Tail, Head };

enum class Split { Train = 0, Valid = 1, Test = 2 };

using SplitMask = unsigned;
namespace split_mask {
constexpr SplitMask none = 0u;
constexpr SplitMask train = 1u;
constexpr SplitMask valid = 2u;
constexpr SplitMask test = 4u;
constexpr SplitMask all = train | valid | test;
}  // namespace split_mask

constexpr SplitMask mask_of(Split s) { return 1u << static_cast<unsigned>(s); }

// Malformed or inconsistent input data (files, formats).
class ParseError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// A broken API precondition or internal invariant.
class ContractViolation : public std::logic_error {
 public:
  using std::logic_error::logic_error;
};

inline void require(bool condition, const std::string& message) {
  if (!condition) throw ContractViolation(message);
}

}  // namespace rulerank
