#pragma once

#include <span>
#include <string>
#include <vector>

#include "rulerank/graph.hpp"

namespace rulerank {

// C:   h(Y, X) <= b1(X, A2), ..., bn(An, Y)        both head arguments variable
// AC1: h(c0, X) <= b1(X, A2), ..., bn(An, c_end)   chain ends in a constant
// AC2: h(c0, X) <= b1(X, A2), ..., bn(An, A_end)   chain ends in an unbound variable
// Atoms may be written with either argument orientation; the chain is recovered
// from variable connectivity, not from argument positions.
enum class RuleType { C, AC1, AC2 };

const char* to_string(RuleType type);

struct Term {
  enum class Kind { Var, Const };
  Kind kind = Kind::Var;
  std::uint32_t index = 0;  // Var: slot in Rule::var_names, Const: EntityId

  bool is_var() const { return kind == Kind::Var; }
  friend bool operator==(const Term&, const Term&) = default;
};

struct Atom {
  RelationId rel = 0;
  Term arg1;
  Term arg2;

  friend bool operator==(const Atom&, const Atom&) = default;
};

// One body traversal step: walk `rel` from the current entity, forward when the
// current entity occupies the atom's first argument.
struct ChainStep {
  RelationId rel = 0;
  bool forward = true;

  friend bool operator==(const ChainStep&, const ChainStep&) = default;
};

struct Rule {
  std::uint32_t id = 0;
  Atom head;
  std::vector<Atom> body;              // as written in the rule file
  std::vector<std::string> var_names;  // first-appearance order
  RuleType type = RuleType::C;
  std::uint64_t predicted = 0;
  std::uint64_t correct = 0;
  double confidence = 0.0;

  // Derived chain normalization. The body forms a path anchored at the head
  // argument `anchor_pos` (for C rules always argument 0) and ending at
  // `chain_end` (C: the other head variable, AC1: a constant, AC2: a variable
  // occurring nowhere else).
  std::uint8_t anchor_pos = 0;
  std::vector<ChainStep> chain;
  std::vector<std::uint32_t> chain_atoms;  // body indices in chain order
  Term chain_end;

  // Every constant the rule mentions; groundings must avoid these entities.
  std::vector<EntityId> constants;
};

struct RuleSet {
  std::vector<Rule> rules;  // rule id equals index
  std::string source;
  std::vector<RelationId> relations;   // head relations with at least one rule, ascending
  std::vector<std::string> warnings;   // rejected rules, one entry per skipped line

  std::span<const std::uint32_t> rules_for(RelationId rel) const;

  // Populated by parse_ruleset.
  std::vector<std::vector<std::uint32_t>> by_relation;  // indexed by RelationId
};

// Reads `predicted TAB correct TAB confidence TAB ruleString` lines. Rules that
// reference relations or constants missing from the graph vocabulary are
// skipped and recorded in warnings; malformed lines raise ParseError.
RuleSet parse_ruleset(const std::string& path, const KnowledgeGraph& graph);

// Recomputes the type of a structurally valid rule from its atoms.
RuleType classify(const Rule& rule);

// The rule string without statistics, e.g. "r(X,Y) <= s(X,A2), s(A2,Y)".
std::string serialize(const Rule& rule, const KnowledgeGraph& graph);

// The full rule file line including statistics.
std::string serialize_line(const Rule& rule, const KnowledgeGraph& graph);

// True when replacing constants by variables (occurrences of the same constant
// within a rule map to the same variable) makes both rules equal up to
// consistent variable renaming and body ordering.
bool directly_redundant(const Rule& a, const Rule& b);

}  // namespace rulerank
