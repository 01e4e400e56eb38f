#include "rulerank/inference.hpp"

#include <algorithm>
#include <map>

namespace rulerank {

const std::vector<Proposal>* CandidatePool::find(EntityId e) const {
  auto it = std::lower_bound(entities.begin(), entities.end(), e);
  if (it == entities.end() || *it != e) return nullptr;
  return &proposals[static_cast<std::size_t>(it - entities.begin())];
}

int compare_proposals_desc(const std::vector<Proposal>& a, const std::vector<Proposal>& b) {
  std::size_t n = std::min(a.size(), b.size());
  for (std::size_t i = 0; i < n; ++i) {
    if (a[i].confidence != b[i].confidence) return a[i].confidence > b[i].confidence ? -1 : 1;
  }
  if (a.size() != b.size()) return a.size() > b.size() ? -1 : 1;
  return 0;
}

std::uint64_t encode_pair(EntityId head, EntityId tail, std::uint32_t entity_count) {
  return static_cast<std::uint64_t>(head) * entity_count + tail;
}

namespace {

bool contains(std::span<const EntityId> values, EntityId v) {
  for (EntityId x : values)
    if (x == v) return true;
  return false;
}

Direction step_direction(const ChainStep& step) {
  return step.forward ? Direction::Forward : Direction::Backward;
}

std::vector<ChainStep> reversed_steps(std::span<const ChainStep> steps) {
  std::vector<ChainStep> out;
  out.reserve(steps.size());
  for (auto it = steps.rbegin(); it != steps.rend(); ++it)
    out.push_back({it->rel, !it->forward});
  return out;
}

template <typename Sink>
void dfs_collect(const KnowledgeGraph& graph, std::span<const ChainStep> steps, std::size_t i,
                 EntityId cur, std::vector<EntityId>& path, std::span<const EntityId> oi,
                 Sink&& sink) {
  auto row = graph.neighbors(steps[i].rel, cur, step_direction(steps[i]));
  if (i + 1 == steps.size()) {
    for (EntityId t : row)
      if (!contains(path, t) && !contains(oi, t)) sink(t);
    return;
  }
  for (EntityId t : row) {
    if (contains(path, t) || contains(oi, t)) continue;
    path.push_back(t);
    dfs_collect(graph, steps, i + 1, t, path, oi, sink);
    path.pop_back();
  }
}

// Existence of a grounding whose chain terminates exactly at `target` (the
// AC1 end constant). The target sits in the Object Identity set, so only the
// final position may touch it.
bool dfs_exists_to(const KnowledgeGraph& graph, std::span<const ChainStep> steps, std::size_t i,
                   EntityId cur, std::vector<EntityId>& path, std::span<const EntityId> oi,
                   EntityId target) {
  auto row = graph.neighbors(steps[i].rel, cur, step_direction(steps[i]));
  if (i + 1 == steps.size())
    return std::binary_search(row.begin(), row.end(), target);
  for (EntityId t : row) {
    if (contains(path, t) || contains(oi, t)) continue;
    path.push_back(t);
    bool found = dfs_exists_to(graph, steps, i + 1, t, path, oi, target);
    path.pop_back();
    if (found) return true;
  }
  return false;
}

bool dfs_exists_any(const KnowledgeGraph& graph, std::span<const ChainStep> steps, std::size_t i,
                    EntityId cur, std::vector<EntityId>& path, std::span<const EntityId> oi) {
  auto row = graph.neighbors(steps[i].rel, cur, step_direction(steps[i]));
  if (i + 1 == steps.size()) {
    for (EntityId t : row)
      if (!contains(path, t) && !contains(oi, t)) return true;
    return false;
  }
  for (EntityId t : row) {
    if (contains(path, t) || contains(oi, t)) continue;
    path.push_back(t);
    bool found = dfs_exists_any(graph, steps, i + 1, t, path, oi);
    path.pop_back();
    if (found) return true;
  }
  return false;
}

std::vector<std::uint32_t> step_codes(std::span<const ChainStep> steps, std::size_t count) {
  std::vector<std::uint32_t> codes;
  codes.reserve(count);
  for (std::size_t i = 0; i < count; ++i)
    codes.push_back(steps[i].rel * 2u + (steps[i].forward ? 1u : 0u));
  return codes;
}

}  // namespace

// Per-task cache of partially walked chains. Rules reaching the same start
// entity through an identical step prefix under the same Object Identity
// constants share the enumerated paths; the final step is never materialized.
struct Grounder::Memo {
  using Key = std::tuple<EntityId, std::vector<EntityId>, std::vector<std::uint32_t>>;
  using Paths = std::vector<std::vector<EntityId>>;
  std::map<Key, std::shared_ptr<const Paths>> levels;

  std::shared_ptr<const Paths> level(const KnowledgeGraph& graph,
                                     std::span<const ChainStep> steps, std::size_t depth,
                                     EntityId start, std::span<const EntityId> oi) {
    Key key{start, std::vector<EntityId>(oi.begin(), oi.end()), step_codes(steps, depth)};
    auto it = levels.find(key);
    if (it != levels.end()) return it->second;
    auto paths = std::make_shared<Paths>();
    if (depth == 1) {
      for (EntityId t : graph.neighbors(steps[0].rel, start, step_direction(steps[0]))) {
        if (t == start || contains(oi, t)) continue;
        paths->push_back({start, t});
      }
    } else {
      auto prev = level(graph, steps, depth - 1, start, oi);
      const ChainStep& step = steps[depth - 1];
      for (const auto& path : *prev) {
        for (EntityId t : graph.neighbors(step.rel, path.back(), step_direction(step))) {
          if (contains(path, t) || contains(oi, t)) continue;
          auto extended = path;
          extended.push_back(t);
          paths->push_back(std::move(extended));
        }
      }
    }
    levels.emplace(std::move(key), paths);
    return paths;
  }
};

Grounder::Grounder(const KnowledgeGraph& graph, const RuleSet& rules)
    : graph_(graph), rules_(rules) {}

template <typename Sink>
static void collect_with_memo(const KnowledgeGraph& graph, std::span<const ChainStep> steps,
                              EntityId start, std::span<const EntityId> oi,
                              Grounder::Memo* memo, Sink&& sink) {
  if (memo != nullptr && steps.size() >= 2) {
    auto paths = memo->level(graph, steps, steps.size() - 1, start, oi);
    const ChainStep& last = steps.back();
    for (const auto& path : *paths) {
      for (EntityId t : graph.neighbors(last.rel, path.back(), step_direction(last))) {
        if (!contains(path, t) && !contains(oi, t)) sink(t);
      }
    }
    return;
  }
  std::vector<EntityId> path{start};
  dfs_collect(graph, steps, 0, start, path, oi, sink);
}

void Grounder::candidates_into(const Rule& rule, const CompletionTask& task,
                               std::vector<EntityId>& out, Memo* memo) const {
  require(rule.head.rel == task.rel, "rule head relation does not match the task");
  require(task.known < graph_.entity_count(), "task entity out of range");
  out.clear();
  std::uint8_t bound_pos = task.dir == QueryDir::Tail ? 0 : 1;
  const Term& bound = bound_pos == 0 ? rule.head.arg1 : rule.head.arg2;
  const Term& open = bound_pos == 0 ? rule.head.arg2 : rule.head.arg1;
  std::span<const EntityId> oi = rule.constants;
  auto sink = [&out](EntityId e) { out.push_back(e); };

  if (!bound.is_var()) {
    // The bound side is the head constant; the rule only fires for it.
    if (task.known != bound.index) return;
    if (rule.type == RuleType::AC1) {
      auto steps = reversed_steps(rule.chain);
      collect_with_memo(graph_, steps, rule.chain_end.index, oi, memo, sink);
    } else {
      auto set = ac2_start_set(rule);
      out.assign(set->begin(), set->end());
    }
  } else if (open.is_var()) {
    // C rule; walk from the bound head variable towards the other.
    if (contains(oi, task.known)) return;
    if (bound_pos == rule.anchor_pos) {
      collect_with_memo(graph_, rule.chain, task.known, oi, memo, sink);
    } else {
      auto steps = reversed_steps(rule.chain);
      collect_with_memo(graph_, steps, task.known, oi, memo, sink);
    }
  } else {
    // The open side is the head constant; the rule proposes it when the body
    // grounds with the head variable bound to the task entity.
    if (contains(oi, task.known)) return;
    std::vector<EntityId> path{task.known};
    bool fires = rule.type == RuleType::AC1
                     ? dfs_exists_to(graph_, rule.chain, 0, task.known, path, oi,
                                     rule.chain_end.index)
                     : dfs_exists_any(graph_, rule.chain, 0, task.known, path, oi);
    if (fires) out.push_back(open.index);
  }

  std::sort(out.begin(), out.end());
  out.erase(std::unique(out.begin(), out.end()), out.end());
  auto forms_train_triple = [&](EntityId e) {
    return task.dir == QueryDir::Tail
               ? graph_.is_known(task.known, task.rel, e, split_mask::train)
               : graph_.is_known(e, task.rel, task.known, split_mask::train);
  };
  std::erase_if(out, forms_train_triple);
}

std::vector<EntityId> Grounder::apply_rule(const Rule& rule, const CompletionTask& task) const {
  std::vector<EntityId> out;
  candidates_into(rule, task, out, nullptr);
  return out;
}

std::shared_ptr<const std::vector<EntityId>> Grounder::ac2_start_set(const Rule& rule) const {
  {
    std::lock_guard<std::mutex> lock(ac2_mutex_);
    auto it = ac2_sets_.find(rule.id);
    if (it != ac2_sets_.end()) return it->second;
  }
  auto set = std::make_shared<std::vector<EntityId>>();
  std::span<const EntityId> oi = rule.constants;
  const ChainStep& first = rule.chain.front();
  for (EntityId e = 0; e < graph_.entity_count(); ++e) {
    if (contains(oi, e)) continue;
    if (graph_.neighbors(first.rel, e, step_direction(first)).empty()) continue;
    std::vector<EntityId> path{e};
    if (dfs_exists_any(graph_, rule.chain, 0, e, path, oi)) set->push_back(e);
  }
  std::lock_guard<std::mutex> lock(ac2_mutex_);
  auto [it, inserted] = ac2_sets_.emplace(rule.id, std::move(set));
  return it->second;
}

std::vector<std::uint64_t> Grounder::solution_pairs(const Rule& rule) const {
  std::vector<std::uint64_t> pairs;
  std::uint32_t n = graph_.entity_count();
  std::span<const EntityId> oi = rule.constants;
  if (rule.type == RuleType::C) {
    const ChainStep& first = rule.chain.front();
    for (EntityId h = 0; h < n; ++h) {
      if (graph_.neighbors(first.rel, h, step_direction(first)).empty()) continue;
      std::vector<EntityId> path{h};
      dfs_collect(graph_, rule.chain, 0, h, path, oi,
                  [&](EntityId t) { pairs.push_back(encode_pair(h, t, n)); });
    }
  } else {
    std::vector<EntityId> xs;
    if (rule.type == RuleType::AC1) {
      auto steps = reversed_steps(rule.chain);
      std::vector<EntityId> path{rule.chain_end.index};
      dfs_collect(graph_, steps, 0, rule.chain_end.index, path, oi,
                  [&xs](EntityId e) { xs.push_back(e); });
    } else {
      auto set = ac2_start_set(rule);
      xs.assign(set->begin(), set->end());
    }
    EntityId c0 = rule.anchor_pos == 0 ? rule.head.arg2.index : rule.head.arg1.index;
    for (EntityId x : xs) {
      EntityId head = rule.anchor_pos == 0 ? x : c0;
      EntityId tail = rule.anchor_pos == 0 ? c0 : x;
      pairs.push_back(encode_pair(head, tail, n));
    }
  }
  std::sort(pairs.begin(), pairs.end());
  pairs.erase(std::unique(pairs.begin(), pairs.end()), pairs.end());
  return pairs;
}

namespace {

struct RankedEntry {
  EntityId entity;
  const std::vector<Proposal>* proposals;
};

// True when no unprocessed rule of confidence at most `next_conf` can alter
// the top-k entity order. Every stored confidence is strictly above
// `next_conf`, so only entities with exactly equal proposal vectors remain
// swappable; those sort adjacently.
bool top_k_settled(std::vector<RankedEntry>& ranking, std::uint32_t k) {
  if (ranking.size() < k) return false;
  std::size_t boundary = std::min<std::size_t>(k, ranking.size() - 1);
  for (std::size_t i = 0; i < boundary; ++i) {
    if (compare_proposals_desc(*ranking[i].proposals, *ranking[i + 1].proposals) == 0)
      return false;
  }
  return true;
}

}  // namespace

CandidatePool Grounder::generate_candidates(const CompletionTask& task, TopMode mode) const {
  CandidatePool pool;
  pool.task = task;
  auto rule_ids = rules_.rules_for(task.rel);
  std::unordered_map<EntityId, std::vector<Proposal>> acc;
  Memo memo;
  std::vector<EntityId> scratch;
  auto apply_one = [&](std::uint32_t rule_id) {
    const Rule& rule = rules_.rules[rule_id];
    candidates_into(rule, task, scratch, &memo);
    for (EntityId e : scratch) acc[e].push_back({rule_id, rule.confidence});
  };

  if (mode.kind == TopMode::Kind::All) {
    for (std::uint32_t id : rule_ids) apply_one(id);
    pool.rules_applied = rule_ids.size();
  } else {
    require(mode.k >= 1, "top-k bound must be at least 1");
    std::vector<std::uint32_t> order(rule_ids.begin(), rule_ids.end());
    std::sort(order.begin(), order.end(), [&](std::uint32_t a, std::uint32_t b) {
      double ca = rules_.rules[a].confidence;
      double cb = rules_.rules[b].confidence;
      if (ca != cb) return ca > cb;
      return a < b;
    });
    std::size_t applied = 0;
    std::vector<RankedEntry> ranking;
    std::size_t i = 0;
    while (i < order.size()) {
      double level = rules_.rules[order[i]].confidence;
      while (i < order.size() && rules_.rules[order[i]].confidence == level) {
        apply_one(order[i]);
        ++applied;
        ++i;
      }
      if (i == order.size()) break;
      ranking.clear();
      ranking.reserve(acc.size());
      for (const auto& [entity, proposals] : acc) ranking.push_back({entity, &proposals});
      std::sort(ranking.begin(), ranking.end(), [](const RankedEntry& a, const RankedEntry& b) {
        int c = compare_proposals_desc(*a.proposals, *b.proposals);
        if (c != 0) return c < 0;
        return a.entity < b.entity;
      });
      if (top_k_settled(ranking, mode.k)) break;
    }
    pool.rules_applied = applied;
  }

  pool.entities.reserve(acc.size());
  for (const auto& [entity, proposals] : acc) pool.entities.push_back(entity);
  std::sort(pool.entities.begin(), pool.entities.end());
  pool.proposals.reserve(pool.entities.size());
  for (EntityId e : pool.entities) {
    auto& proposals = acc[e];
    std::sort(proposals.begin(), proposals.end(), [](const Proposal& a, const Proposal& b) {
      if (a.confidence != b.confidence) return a.confidence > b.confidence;
      return a.rule_id < b.rule_id;
    });
    pool.proposals.push_back(std::move(proposals));
  }
  return pool;
}

}  // namespace rulerank
