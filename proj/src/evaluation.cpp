#include "rulerank/evaluation.hpp"

#include <algorithm>
#include <cstdio>
#include <map>
#include <set>
#include <tuple>

namespace rulerank {

std::optional<std::uint32_t> rank_of_correct(std::span<const ScoredEntity> ranking,
                                             EntityId correct,
                                             std::span<const EntityId> filtered) {
  const ScoredEntity* self = nullptr;
  for (const ScoredEntity& e : ranking) {
    if (e.entity == correct) {
      self = &e;
      break;
    }
  }
  if (self == nullptr) return std::nullopt;
  std::uint32_t better = 0;
  std::uint32_t ties = 0;
  for (const ScoredEntity& e : ranking) {
    if (e.entity == correct) continue;
    if (std::binary_search(filtered.begin(), filtered.end(), e.entity)) continue;
    if (e.score > self->score) ++better;
    else if (e.score == self->score) ++ties;
  }
  return better + ties + 1;
}

namespace {

struct Accumulator {
  std::size_t tasks = 0;
  std::vector<std::size_t> hits;
  double reciprocal_sum = 0.0;

  explicit Accumulator(std::size_t cutoff_count) : hits(cutoff_count, 0) {}

  void add(std::optional<std::uint32_t> rank, std::span<const std::uint32_t> cutoffs) {
    ++tasks;
    if (!rank) return;
    for (std::size_t c = 0; c < cutoffs.size(); ++c)
      if (*rank <= cutoffs[c]) ++hits[c];
    reciprocal_sum += 1.0 / static_cast<double>(*rank);
  }

  MetricBlock finish() const {
    MetricBlock block;
    block.tasks = tasks;
    block.hits.reserve(hits.size());
    for (std::size_t h : hits)
      block.hits.push_back(tasks == 0 ? 0.0 : static_cast<double>(h) / static_cast<double>(tasks));
    block.mrr = tasks == 0 ? 0.0 : reciprocal_sum / static_cast<double>(tasks);
    return block;
  }
};

std::string format_metric(double value) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.6f", value);
  return buf;
}

}  // namespace

EvalReport evaluate(std::span<const TaskPrediction> predictions, const KnowledgeGraph& graph,
                    std::span<const std::uint32_t> cutoffs) {
  require(!cutoffs.empty(), "at least one hits cutoff required");
  for (std::size_t i = 1; i < cutoffs.size(); ++i)
    require(cutoffs[i - 1] < cutoffs[i], "cutoffs must ascend");

  auto test = graph.triples(Split::Test);
  if (predictions.size() != test.size())
    throw ParseError("predictions cover " + std::to_string(predictions.size()) +
                     " test triples, expected " + std::to_string(test.size()));

  Accumulator overall(cutoffs.size());
  std::map<RelationId, Accumulator> by_relation;
  std::set<std::tuple<EntityId, RelationId, EntityId>> seen;

  for (const TaskPrediction& prediction : predictions) {
    const Triple& t = prediction.triple;
    if (!graph.is_known(t.head, t.rel, t.tail, split_mask::test))
      throw ParseError("prediction for a triple that is not in the test split");
    if (!seen.emplace(t.head, t.rel, t.tail).second)
      throw ParseError("duplicate prediction for one test triple");
    auto [it, inserted] = by_relation.try_emplace(t.rel, cutoffs.size());
    Accumulator& rel_acc = it->second;

    auto filter_for = [&](QueryDir dir, EntityId known, EntityId correct) {
      auto filtered = graph.known_completions(t.rel, known, dir, split_mask::all);
      std::erase(filtered, correct);
      return filtered;
    };

    auto head_filter = filter_for(QueryDir::Head, t.tail, t.head);
    auto head_rank = rank_of_correct(prediction.heads, t.head, head_filter);
    overall.add(head_rank, cutoffs);
    rel_acc.add(head_rank, cutoffs);

    auto tail_filter = filter_for(QueryDir::Tail, t.head, t.tail);
    auto tail_rank = rank_of_correct(prediction.tails, t.tail, tail_filter);
    overall.add(tail_rank, cutoffs);
    rel_acc.add(tail_rank, cutoffs);
  }

  EvalReport report;
  report.cutoffs.assign(cutoffs.begin(), cutoffs.end());
  report.overall = overall.finish();
  for (const auto& [rel, acc] : by_relation)
    report.per_relation.emplace_back(rel, acc.finish());
  return report;
}

std::string EvalReport::table(const KnowledgeGraph& graph) const {
  std::size_t width = 8;
  for (const auto& [rel, block] : per_relation)
    width = std::max(width, graph.relations().label(rel).size());
  std::string out;
  auto append_row = [&](const std::string& name, const MetricBlock& block) {
    out += name;
    out.append(width - name.size(), ' ');
    char buf[32];
    std::snprintf(buf, sizeof(buf), " %10zu", block.tasks);
    out += buf;
    for (double h : block.hits) out += "   " + format_metric(h);
    out += "   " + format_metric(block.mrr);
    out += '\n';
  };
  out += "relation";
  out.append(width - 8, ' ');
  out += "      tasks";
  for (std::uint32_t c : cutoffs) {
    std::string header = "hits@" + std::to_string(c);
    out += "   ";
    out.append(8 - std::min<std::size_t>(8, header.size()), ' ');
    out += header;
  }
  out += "        mrr\n";
  for (const auto& [rel, block] : per_relation) append_row(graph.relations().label(rel), block);
  append_row("ALL", overall);
  return out;
}

std::string EvalReport::key_values() const {
  std::string out;
  out += "tasks=" + std::to_string(overall.tasks) + "\n";
  for (std::size_t c = 0; c < cutoffs.size(); ++c)
    out += "hits@" + std::to_string(cutoffs[c]) + "=" + format_metric(overall.hits[c]) + "\n";
  out += "mrr=" + format_metric(overall.mrr) + "\n";
  return out;
}

}  // namespace rulerank
