#include "rulerank/graph.hpp"

#include <algorithm>
#include <fstream>
#include <unordered_set>

namespace rulerank {

std::uint32_t Vocabulary::get_or_add(std::string_view label) {
  auto it = index_.find(std::string(label));
  if (it != index_.end()) return it->second;
  std::uint32_t id = size();
  labels_.emplace_back(label);
  index_.emplace(labels_.back(), id);
  return id;
}

std::optional<std::uint32_t> Vocabulary::find(std::string_view label) const {
  auto it = index_.find(std::string(label));
  if (it == index_.end()) return std::nullopt;
  return it->second;
}

const std::string& Vocabulary::label(std::uint32_t id) const {
  require(id < size(), "vocabulary id out of range");
  return labels_[id];
}

CsrAdjacency::CsrAdjacency(std::uint32_t entity_count, std::uint32_t relation_count,
                           std::span<const Triple> triples, Direction dir)
    : entity_count_(entity_count), offsets_(relation_count), targets_(relation_count) {
  std::vector<std::size_t> degree(entity_count);
  for (RelationId r = 0; r < relation_count; ++r) {
    std::fill(degree.begin(), degree.end(), 0);
    std::size_t total = 0;
    for (const Triple& t : triples) {
      if (t.rel != r) continue;
      ++degree[dir == Direction::Forward ? t.head : t.tail];
      ++total;
    }
    auto& offsets = offsets_[r];
    offsets.assign(entity_count + 1, 0);
    for (EntityId e = 0; e < entity_count; ++e) offsets[e + 1] = offsets[e] + degree[e];
    auto& targets = targets_[r];
    targets.resize(total);
    std::vector<std::size_t> cursor(offsets.begin(), offsets.end() - 1);
    for (const Triple& t : triples) {
      if (t.rel != r) continue;
      EntityId source = dir == Direction::Forward ? t.head : t.tail;
      EntityId target = dir == Direction::Forward ? t.tail : t.head;
      targets[cursor[source]++] = target;
    }
    for (EntityId e = 0; e < entity_count; ++e)
      std::sort(targets.begin() + static_cast<std::ptrdiff_t>(offsets[e]),
                targets.begin() + static_cast<std::ptrdiff_t>(offsets[e + 1]));
  }
}

std::span<const EntityId> CsrAdjacency::row(RelationId rel, EntityId ent) const {
  require(rel < offsets_.size(), "relation id out of range");
  require(ent < entity_count_, "entity id out of range");
  const auto& offsets = offsets_[rel];
  const auto& targets = targets_[rel];
  return {targets.data() + offsets[ent], offsets[ent + 1] - offsets[ent]};
}

namespace {

struct TripleHash {
  std::size_t operator()(const Triple& t) const {
    std::uint64_t x = (static_cast<std::uint64_t>(t.head) << 32) | t.tail;
    x ^= static_cast<std::uint64_t>(t.rel) * 0x9e3779b97f4a7c15ull;
    x ^= x >> 33;
    x *= 0xff51afd7ed558ccdull;
    x ^= x >> 33;
    return static_cast<std::size_t>(x);
  }
};

bool less_hrt(const Triple& a, const Triple& b) {
  if (a.rel != b.rel) return a.rel < b.rel;
  if (a.head != b.head) return a.head < b.head;
  return a.tail < b.tail;
}

bool less_trh(const Triple& a, const Triple& b) {
  if (a.rel != b.rel) return a.rel < b.rel;
  if (a.tail != b.tail) return a.tail < b.tail;
  return a.head < b.head;
}

void load_split(const std::string& path, Vocabulary& entities, Vocabulary& relations,
                std::vector<Triple>& out, std::size_t& duplicates) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ParseError("cannot open triple file: " + path);
  std::unordered_set<Triple, TripleHash> seen;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    auto first_tab = line.find('\t');
    auto second_tab = first_tab == std::string::npos ? std::string::npos : line.find('\t', first_tab + 1);
    auto third_tab = second_tab == std::string::npos ? std::string::npos : line.find('\t', second_tab + 1);
    if (first_tab == std::string::npos || second_tab == std::string::npos ||
        third_tab != std::string::npos) {
      throw ParseError(path + ":" + std::to_string(line_no) +
                       ": expected head<TAB>relation<TAB>tail");
    }
    std::string_view view(line);
    std::string_view head = view.substr(0, first_tab);
    std::string_view rel = view.substr(first_tab + 1, second_tab - first_tab - 1);
    std::string_view tail = view.substr(second_tab + 1);
    if (head.empty() || rel.empty() || tail.empty()) {
      throw ParseError(path + ":" + std::to_string(line_no) + ": empty field");
    }
    Triple t;
    t.head = entities.get_or_add(head);
    t.rel = relations.get_or_add(rel);
    t.tail = entities.get_or_add(tail);
    if (seen.insert(t).second) {
      out.push_back(t);
    } else {
      ++duplicates;
    }
  }
}

}  // namespace

KnowledgeGraph KnowledgeGraph::load(const std::string& train_path,
                                    const std::string& valid_path,
                                    const std::string& test_path) {
  KnowledgeGraph g;
  const std::string* paths[3] = {&train_path, &valid_path, &test_path};
  for (int s = 0; s < 3; ++s) {
    SplitData& data = g.splits_[s];
    load_split(*paths[s], g.entities_, g.relations_, data.ordered, data.duplicates);
    data.by_hrt = data.ordered;
    std::sort(data.by_hrt.begin(), data.by_hrt.end(), less_hrt);
    data.by_trh = data.ordered;
    std::sort(data.by_trh.begin(), data.by_trh.end(), less_trh);
  }
  g.forward_ = CsrAdjacency(g.entity_count(), g.relation_count(),
                            g.splits_[0].ordered, Direction::Forward);
  g.backward_ = CsrAdjacency(g.entity_count(), g.relation_count(),
                             g.splits_[0].ordered, Direction::Backward);
  return g;
}

std::span<const Triple> KnowledgeGraph::triples(Split s) const {
  return splits_[static_cast<int>(s)].ordered;
}

std::size_t KnowledgeGraph::duplicates_removed(Split s) const {
  return splits_[static_cast<int>(s)].duplicates;
}

std::span<const EntityId> KnowledgeGraph::neighbors(RelationId rel, EntityId ent,
                                                    Direction dir) const {
  return dir == Direction::Forward ? forward_.row(rel, ent) : backward_.row(rel, ent);
}

bool KnowledgeGraph::is_known(EntityId head, RelationId rel, EntityId tail,
                              SplitMask splits) const {
  require(rel < relation_count(), "relation id out of range");
  require(head < entity_count() && tail < entity_count(), "entity id out of range");
  Triple probe{head, rel, tail};
  for (int s = 0; s < 3; ++s) {
    if (!(splits & (1u << s))) continue;
    const auto& sorted = splits_[s].by_hrt;
    if (std::binary_search(sorted.begin(), sorted.end(), probe, less_hrt)) return true;
  }
  return false;
}

std::vector<EntityId> KnowledgeGraph::known_completions(RelationId rel, EntityId known,
                                                        QueryDir dir, SplitMask splits) const {
  require(rel < relation_count(), "relation id out of range");
  require(known < entity_count(), "entity id out of range");
  std::vector<EntityId> out;
  for (int s = 0; s < 3; ++s) {
    if (!(splits & (1u << s))) continue;
    if (dir == QueryDir::Tail) {
      const auto& sorted = splits_[s].by_hrt;
      Triple lo{known, rel, 0};
      auto begin = std::lower_bound(sorted.begin(), sorted.end(), lo, less_hrt);
      for (auto it = begin; it != sorted.end() && it->rel == rel && it->head == known; ++it)
        out.push_back(it->tail);
    } else {
      const auto& sorted = splits_[s].by_trh;
      Triple lo{0, rel, known};
      auto begin = std::lower_bound(sorted.begin(), sorted.end(), lo, less_trh);
      for (auto it = begin; it != sorted.end() && it->rel == rel && it->tail == known; ++it)
        out.push_back(it->head);
    }
  }
  std::sort(out.begin(), out.end());
  out.erase(std::unique(out.begin(), out.end()), out.end());
  return out;
}

}  // namespace rulerank
