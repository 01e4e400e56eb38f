#pragma once

#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include "rulerank/types.hpp"

namespace rulerank {

// Bijective label <-> dense id mapping. Ids are assigned in first-occurrence
// order. Labels are opaque byte strings; no normalization is applied.
class Vocabulary {
 public:
  std::uint32_t get_or_add(std::string_view label);
  std::optional<std::uint32_t> find(std::string_view label) const;
  const std::string& label(std::uint32_t id) const;
  std::uint32_t size() const { return static_cast<std::uint32_t>(labels_.size()); }

 private:
  std::vector<std::string> labels_;
  std::unordered_map<std::string, std::uint32_t> index_;
};

// Per-relation adjacency in compressed sparse row form. Each row holds the
// sorted neighbor list of one entity under one relation.
class CsrAdjacency {
 public:
  CsrAdjacency() = default;
  CsrAdjacency(std::uint32_t entity_count, std::uint32_t relation_count,
               std::span<const Triple> triples, Direction dir);

  std::span<const EntityId> row(RelationId rel, EntityId ent) const;

 private:
  std::uint32_t entity_count_ = 0;
  std::vector<std::vector<std::size_t>> offsets_;  // per relation, entity_count_ + 1 entries
  std::vector<std::vector<EntityId>> targets_;     // per relation, sorted within each row
};

// Immutable train/valid/test triple store with a shared vocabulary and
// train-only CSR adjacency. Vocabulary ids follow first occurrence scanning
// train, then valid, then test; within a line, head before tail.
class KnowledgeGraph {
 public:
  static KnowledgeGraph load(const std::string& train_path,
                             const std::string& valid_path,
                             const std::string& test_path);

  const Vocabulary& entities() const { return entities_; }
  const Vocabulary& relations() const { return relations_; }
  std::uint32_t entity_count() const { return entities_.size(); }
  std::uint32_t relation_count() const { return relations_.size(); }

  // Deduplicated triples in file order.
  std::span<const Triple> triples(Split s) const;
  std::size_t duplicates_removed(Split s) const;

  // Train-only adjacency. Forward lists tails of (ent, rel, *), backward
  // lists heads of (*, rel, ent); both sorted ascending.
  std::span<const EntityId> neighbors(RelationId rel, EntityId ent, Direction dir) const;

  bool is_known(EntityId head, RelationId rel, EntityId tail, SplitMask splits) const;

  // All entities completing (known, rel, ?) for Tail queries or (?, rel, known)
  // for Head queries within the given splits; sorted, unique.
  std::vector<EntityId> known_completions(RelationId rel, EntityId known, QueryDir dir,
                                          SplitMask splits) const;

 private:
  struct SplitData {
    std::vector<Triple> ordered;  // file order, duplicates removed
    std::vector<Triple> by_hrt;   // sorted by (rel, head, tail)
    std::vector<Triple> by_trh;   // sorted by (rel, tail, head)
    std::size_t duplicates = 0;
  };

  Vocabulary entities_;
  Vocabulary relations_;
  SplitData splits_[3];
  CsrAdjacency forward_;
  CsrAdjacency backward_;
};

}  // namespace rulerank
