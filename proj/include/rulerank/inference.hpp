#pragma once

#include <memory>
#include <mutex>
#include <span>
#include <unordered_map>
#include <vector>

#include "rulerank/rules.hpp"

namespace rulerank {

struct CompletionTask {
  RelationId rel = 0;
  EntityId known = 0;
  QueryDir dir = QueryDir::Tail;

  friend bool operator==(const CompletionTask&, const CompletionTask&) = default;
};

struct TopMode {
  enum class Kind { All, MaxK };
  Kind kind = Kind::All;
  std::uint32_t k = 0;

  static TopMode all() { return {Kind::All, 0}; }
  static TopMode max_k(std::uint32_t k) { return {Kind::MaxK, k}; }
};

struct Proposal {
  std::uint32_t rule_id = 0;
  double confidence = 0.0;
};

// Candidate entities for one task with every proposing rule. Entities ascend;
// per-entity proposals are sorted by confidence descending, rule id ascending,
// and each (entity, rule) pair appears at most once.
struct CandidatePool {
  CompletionTask task;
  std::vector<EntityId> entities;
  std::vector<std::vector<Proposal>> proposals;
  std::size_t rules_applied = 0;

  const std::vector<Proposal>* find(EntityId e) const;
};

// Descending lexicographic order over confidence vectors; a vector extending a
// shared prefix outranks the shorter one. Returns <0, 0, >0.
int compare_proposals_desc(const std::vector<Proposal>& a, const std::vector<Proposal>& b);

std::uint64_t encode_pair(EntityId head, EntityId tail, std::uint32_t entity_count);

// Grounds rules against the train graph under Object Identity: within one
// grounding no two variables, and no variable and rule constant, may share an
// entity.
class Grounder {
 public:
  // Per-task cache sharing body-prefix traversals between rules; opaque
  // outside this class and never shared across threads.
  struct Memo;

  Grounder(const KnowledgeGraph& graph, const RuleSet& rules);

  // Candidate entities for the task's open side, sorted ascending. Candidates
  // that would reproduce a train triple are dropped at generation time.
  std::vector<EntityId> apply_rule(const Rule& rule, const CompletionTask& task) const;

  // All head-tail pairs of the head atom groundable from the body in train,
  // encoded head * entity_count + tail, sorted, unique. Not train-filtered.
  std::vector<std::uint64_t> solution_pairs(const Rule& rule) const;

  CandidatePool generate_candidates(const CompletionTask& task, TopMode mode) const;

  const KnowledgeGraph& graph() const { return graph_; }
  const RuleSet& rules() const { return rules_; }

 private:
  void candidates_into(const Rule& rule, const CompletionTask& task,
                       std::vector<EntityId>& out, Memo* memo) const;
  std::shared_ptr<const std::vector<EntityId>> ac2_start_set(const Rule& rule) const;

  const KnowledgeGraph& graph_;
  const RuleSet& rules_;
  mutable std::mutex ac2_mutex_;
  mutable std::unordered_map<std::uint32_t, std::shared_ptr<const std::vector<EntityId>>> ac2_sets_;
};

}  // namespace rulerank
