#include "rulerank/prediction_io.hpp"

#include <algorithm>
#include <array>
#include <charconv>
#include <cstdio>
#include <fstream>
#include <map>
#include <unordered_map>

namespace rulerank {

namespace {

std::string format_score(double value) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.6f", value);
  return buf;
}

std::ofstream open_output(const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw ParseError("cannot open output file: " + path);
  return out;
}

std::ifstream open_input(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ParseError("cannot open input file: " + path);
  return in;
}

class LineReader {
 public:
  LineReader(std::ifstream& in, const std::string& path) : in_(in), path_(path) {}

  bool next(std::string& line) {
    while (std::getline(in_, line)) {
      ++line_no_;
      if (!line.empty() && line.back() == '\r') line.pop_back();
      return true;
    }
    return false;
  }

  [[noreturn]] void fail(const std::string& message) const {
    throw ParseError(path_ + ":" + std::to_string(line_no_) + ": " + message);
  }

  std::size_t line_no() const { return line_no_; }

 private:
  std::ifstream& in_;
  std::string path_;
  std::size_t line_no_ = 0;
};

double parse_score(std::string_view field, const LineReader& reader) {
  double value = 0.0;
  auto [ptr, ec] = std::from_chars(field.data(), field.data() + field.size(), value);
  if (ec != std::errc() || ptr != field.data() + field.size()) reader.fail("bad score value");
  return value;
}

std::vector<ScoredEntity> parse_scored_list(std::string_view rest, const KnowledgeGraph& graph,
                                            const LineReader& reader) {
  std::vector<ScoredEntity> out;
  if (rest.empty()) return out;
  std::vector<std::string_view> fields;
  std::size_t start = 0;
  while (true) {
    auto tab = rest.find('\t', start);
    fields.push_back(rest.substr(start, tab == std::string_view::npos ? tab : tab - start));
    if (tab == std::string_view::npos) break;
    start = tab + 1;
  }
  if (fields.size() % 2 != 0) reader.fail("entity without a score");
  out.reserve(fields.size() / 2);
  for (std::size_t i = 0; i < fields.size(); i += 2) {
    auto id = graph.entities().find(fields[i]);
    if (!id) reader.fail("unknown entity '" + std::string(fields[i]) + "'");
    out.push_back({*id, parse_score(fields[i + 1], reader)});
  }
  return out;
}

void write_scored_list(std::ofstream& out, const char* label, const KnowledgeGraph& graph,
                       std::span<const ScoredEntity> list) {
  out << label;
  for (std::size_t i = 0; i < list.size(); ++i) {
    out << (i == 0 ? " " : "\t") << graph.entities().label(list[i].entity) << '\t'
        << format_score(list[i].score);
  }
  out << '\n';
}

const char* dir_token(QueryDir dir) { return dir == QueryDir::Head ? "head" : "tail"; }

}  // namespace

void write_predictions(const std::string& path, const KnowledgeGraph& graph,
                       std::span<const TaskPrediction> predictions) {
  auto out = open_output(path);
  for (const TaskPrediction& p : predictions) {
    out << graph.entities().label(p.triple.head) << ' ' << graph.relations().label(p.triple.rel)
        << ' ' << graph.entities().label(p.triple.tail) << '\n';
    write_scored_list(out, "Heads:", graph, p.heads);
    write_scored_list(out, "Tails:", graph, p.tails);
  }
}

std::vector<TaskPrediction> read_predictions(const std::string& path,
                                             const KnowledgeGraph& graph) {
  auto in = open_input(path);
  LineReader reader(in, path);
  std::vector<TaskPrediction> out;
  std::string line;
  while (reader.next(line)) {
    if (line.empty()) continue;
    TaskPrediction p;
    auto first_space = line.find(' ');
    auto last_space = line.rfind(' ');
    if (first_space == std::string::npos || last_space == first_space)
      reader.fail("expected '<head> <relation> <tail>'");
    std::string_view view(line);
    auto head = graph.entities().find(view.substr(0, first_space));
    auto rel = graph.relations().find(
        view.substr(first_space + 1, last_space - first_space - 1));
    auto tail = graph.entities().find(view.substr(last_space + 1));
    if (!head) reader.fail("unknown head entity");
    if (!rel) reader.fail("unknown relation");
    if (!tail) reader.fail("unknown tail entity");
    p.triple = {*head, *rel, *tail};
    if (!reader.next(line)) reader.fail("missing 'Heads:' line");
    if (line.rfind("Heads:", 0) != 0) reader.fail("expected 'Heads:' line");
    std::string_view heads_rest(line);
    heads_rest.remove_prefix(6);
    if (!heads_rest.empty() && heads_rest.front() == ' ') heads_rest.remove_prefix(1);
    p.heads = parse_scored_list(heads_rest, graph, reader);
    if (!reader.next(line)) reader.fail("missing 'Tails:' line");
    if (line.rfind("Tails:", 0) != 0) reader.fail("expected 'Tails:' line");
    std::string_view tails_rest(line);
    tails_rest.remove_prefix(6);
    if (!tails_rest.empty() && tails_rest.front() == ' ') tails_rest.remove_prefix(1);
    p.tails = parse_scored_list(tails_rest, graph, reader);
    out.push_back(std::move(p));
  }
  return out;
}

const ClusterSection* ClusterFile::find(RelationId rel, QueryDir dir) const {
  for (const ClusterSection& s : sections)
    if (s.relation == rel && s.dir == dir) return &s;
  return nullptr;
}

void write_clusters(const std::string& path, const KnowledgeGraph& graph, const RuleSet& rules,
                    std::span<const ClusterSection> sections, std::uint64_t seed) {
  auto out = open_output(path);
  out << "# seed=" << seed << '\n';
  for (const ClusterSection& section : sections) {
    out << "rel\t" << graph.relations().label(section.relation) << '\t'
        << dir_token(section.dir) << "\tthresholds";
    for (double t : section.thresholds.values) out << ' ' << format_score(t);
    out << '\n';
    out << "fitness\t" << (std::isnan(section.fitness) ? "NA" : format_score(section.fitness))
        << '\n';
    for (std::uint32_t rule_id : rules.rules_for(section.relation)) {
      out << section.assignment.cluster(rule_id) << '\t'
          << serialize(rules.rules[rule_id], graph) << '\n';
    }
  }
}

namespace {

// Identical rule strings denote identical rules; one section line covers all
// rule ids sharing its string.
std::unordered_map<std::string, std::vector<std::uint32_t>> rule_string_index(
    const KnowledgeGraph& graph, const RuleSet& rules) {
  std::unordered_map<std::string, std::vector<std::uint32_t>> index;
  for (const Rule& rule : rules.rules) index[serialize(rule, graph)].push_back(rule.id);
  return index;
}

void finish_section(ClusterSection& section, const RuleSet& rules,
                    std::vector<std::pair<std::uint32_t, std::uint32_t>>& members,
                    const std::string& path) {
  // Remap file cluster ids to dense ids ordered by lowest member rule id.
  std::sort(members.begin(), members.end(),
            [](const auto& a, const auto& b) { return a.second < b.second; });
  std::map<std::uint32_t, std::uint32_t> dense;
  for (const auto& [file_id, rule_id] : members) dense.try_emplace(file_id, static_cast<std::uint32_t>(dense.size()));
  section.assignment.relation = section.relation;
  section.assignment.cluster_count = static_cast<std::uint32_t>(dense.size());
  for (const auto& [file_id, rule_id] : members)
    section.assignment.cluster_of[rule_id] = dense[file_id];
  auto expected = rules.rules_for(section.relation);
  std::vector<std::uint32_t> missing;
  for (std::uint32_t rule_id : expected)
    if (!section.assignment.cluster_of.contains(rule_id)) missing.push_back(rule_id);
  if (!missing.empty()) {
    std::string message = path + ": cluster section lacks rules:";
    for (std::uint32_t id : missing) message += " " + std::to_string(id);
    throw ParseError(message);
  }
  if (section.assignment.cluster_of.size() != expected.size())
    throw ParseError(path + ": cluster section lists rules outside its relation");
}

}  // namespace

ClusterFile read_clusters(const std::string& path, const KnowledgeGraph& graph,
                          const RuleSet& rules) {
  auto in = open_input(path);
  LineReader reader(in, path);
  auto index = rule_string_index(graph, rules);
  ClusterFile file;
  std::string line;
  bool in_section = false;
  bool fitness_seen = false;
  ClusterSection section;
  std::vector<std::pair<std::uint32_t, std::uint32_t>> members;  // (file cluster id, rule id)
  // Rows sharing one serialization consume that string's rule ids in
  // ascending order, mirroring the writer's row order.
  std::unordered_map<std::string, std::size_t> consumed;
  auto close_section = [&]() {
    if (!in_section) return;
    if (!fitness_seen) throw ParseError(path + ": cluster section missing its fitness line");
    finish_section(section, rules, members, path);
    file.sections.push_back(std::move(section));
    section = ClusterSection();
    members.clear();
    consumed.clear();
    in_section = false;
    fitness_seen = false;
  };
  while (reader.next(line)) {
    if (line.empty() || line[0] == '#') continue;
    if (line.rfind("rel\t", 0) == 0) {
      close_section();
      std::string_view view(line);
      view.remove_prefix(4);
      auto tab1 = view.find('\t');
      if (tab1 == std::string_view::npos) reader.fail("malformed section header");
      auto tab2 = view.find('\t', tab1 + 1);
      if (tab2 == std::string_view::npos) reader.fail("malformed section header");
      auto rel = graph.relations().find(view.substr(0, tab1));
      if (!rel) reader.fail("unknown relation in section header");
      std::string_view dir = view.substr(tab1 + 1, tab2 - tab1 - 1);
      std::string_view thresholds = view.substr(tab2 + 1);
      if (dir != "head" && dir != "tail") reader.fail("direction must be 'head' or 'tail'");
      if (thresholds.rfind("thresholds ", 0) != 0) reader.fail("missing thresholds");
      thresholds.remove_prefix(11);
      section.relation = *rel;
      section.dir = dir == "head" ? QueryDir::Head : QueryDir::Tail;
      std::size_t start = 0;
      for (int i = 0; i < 6; ++i) {
        auto space = thresholds.find(' ', start);
        auto field = thresholds.substr(start, space == std::string_view::npos ? space : space - start);
        if (field.empty()) reader.fail("expected six threshold values");
        double value = parse_score(field, reader);
        if (!(value >= 0.0 && value <= 1.0)) reader.fail("threshold outside [0, 1]");
        section.thresholds.values[static_cast<std::size_t>(i)] = value;
        if (space == std::string_view::npos) {
          if (i != 5) reader.fail("expected six threshold values");
          start = thresholds.size();
        } else {
          start = space + 1;
        }
      }
      if (start != thresholds.size()) reader.fail("expected six threshold values");
      in_section = true;
      continue;
    }
    if (line.rfind("fitness\t", 0) == 0) {
      if (!in_section) reader.fail("fitness line outside a section");
      if (fitness_seen) reader.fail("duplicate fitness line");
      std::string_view value(line);
      value.remove_prefix(8);
      section.fitness = value == "NA" ? std::nan("") : parse_score(value, reader);
      fitness_seen = true;
      continue;
    }
    if (!in_section) reader.fail("rule line outside a section");
    if (!fitness_seen) reader.fail("expected the fitness line before rule rows");
    auto tab = line.find('\t');
    if (tab == std::string::npos) reader.fail("expected '<clusterId><TAB><ruleString>'");
    std::uint32_t file_cluster = 0;
    auto [ptr, ec] = std::from_chars(line.data(), line.data() + tab, file_cluster);
    if (ec != std::errc() || ptr != line.data() + tab) reader.fail("bad cluster id");
    std::string rule_string = line.substr(tab + 1);
    auto it = index.find(rule_string);
    if (it == index.end()) reader.fail("rule not present in the ruleset: " + rule_string);
    std::size_t& used = consumed[rule_string];
    if (used == it->second.size()) reader.fail("rule listed more often than the ruleset holds it");
    std::uint32_t rule_id = it->second[used++];
    if (rules.rules[rule_id].head.rel != section.relation)
      reader.fail("rule belongs to a different relation");
    members.emplace_back(file_cluster, rule_id);
  }
  close_section();
  return file;
}

void write_signatures(const std::string& path, const KnowledgeGraph& graph,
                      const RuleSet& rules, std::span<const Signature> signatures,
                      std::span<const std::uint64_t> set_sizes, MinHashParams params) {
  require(signatures.size() == rules.rules.size(), "one signature per rule required");
  require(set_sizes.size() == rules.rules.size(), "one set size per rule required");
  auto out = open_output(path);
  out << "# k=" << params.k << '\n';
  out << "# seed=" << params.seed << '\n';
  char buf[24];
  for (const Rule& rule : rules.rules) {
    out << graph.relations().label(rule.head.rel) << '\t' << rule.id << '\t'
        << set_sizes[rule.id] << '\t';
    const Signature& sig = signatures[rule.id];
    for (std::size_t i = 0; i < sig.size(); ++i) {
      std::snprintf(buf, sizeof(buf), "%016llx", static_cast<unsigned long long>(sig[i]));
      if (i > 0) out << ' ';
      out << buf;
    }
    out << '\t' << serialize(rule, graph) << '\n';
  }
}

SignatureFile read_signatures(const std::string& path, const KnowledgeGraph& graph,
                              const RuleSet& rules) {
  auto in = open_input(path);
  LineReader reader(in, path);
  SignatureFile file;
  bool have_k = false, have_seed = false;
  std::string line;
  std::size_t next_rule = 0;
  file.signatures.resize(rules.rules.size());
  file.set_sizes.resize(rules.rules.size());
  while (reader.next(line)) {
    if (line.empty()) continue;
    if (line[0] == '#') {
      std::string_view view(line);
      if (view.rfind("# k=", 0) == 0) {
        auto rest = view.substr(4);
        auto [ptr, ec] = std::from_chars(rest.data(), rest.data() + rest.size(), file.params.k);
        if (ec != std::errc()) reader.fail("bad k header");
        have_k = true;
      } else if (view.rfind("# seed=", 0) == 0) {
        auto rest = view.substr(7);
        auto [ptr, ec] =
            std::from_chars(rest.data(), rest.data() + rest.size(), file.params.seed);
        if (ec != std::errc()) reader.fail("bad seed header");
        have_seed = true;
      }
      continue;
    }
    if (!have_k || !have_seed) reader.fail("signature rows before k/seed headers");
    std::string_view view(line);
    std::array<std::string_view, 5> fields;
    std::size_t start = 0;
    for (int f = 0; f < 4; ++f) {
      auto tab = view.find('\t', start);
      if (tab == std::string_view::npos) reader.fail("expected 5 tab-separated fields");
      fields[static_cast<std::size_t>(f)] = view.substr(start, tab - start);
      start = tab + 1;
    }
    fields[4] = view.substr(start);
    if (next_rule >= rules.rules.size()) reader.fail("more signature rows than rules");
    const Rule& rule = rules.rules[next_rule];
    std::uint32_t rule_id = 0;
    auto [p1, e1] = std::from_chars(fields[1].data(), fields[1].data() + fields[1].size(), rule_id);
    if (e1 != std::errc() || rule_id != rule.id) reader.fail("rule id out of order");
    if (fields[0] != graph.relations().label(rule.head.rel))
      reader.fail("relation label does not match the ruleset");
    if (fields[4] != serialize(rule, graph)) reader.fail("rule string does not match the ruleset");
    std::uint64_t set_size = 0;
    auto [p2, e2] =
        std::from_chars(fields[2].data(), fields[2].data() + fields[2].size(), set_size);
    if (e2 != std::errc()) reader.fail("bad set size");
    Signature sig;
    sig.reserve(file.params.k);
    std::string_view values = fields[3];
    start = 0;
    while (start < values.size()) {
      auto space = values.find(' ', start);
      auto field = values.substr(start, space == std::string_view::npos ? space : space - start);
      std::uint64_t v = 0;
      auto [p3, e3] = std::from_chars(field.data(), field.data() + field.size(), v, 16);
      if (e3 != std::errc() || p3 != field.data() + field.size()) reader.fail("bad signature value");
      sig.push_back(v);
      if (space == std::string_view::npos) break;
      start = space + 1;
    }
    if (sig.size() != file.params.k) reader.fail("signature length does not match k");
    file.signatures[rule.id] = std::move(sig);
    file.set_sizes[rule.id] = set_size;
    ++next_rule;
  }
  if (next_rule != rules.rules.size())
    throw ParseError(path + ": signature rows missing for some rules");
  return file;
}

}  // namespace rulerank
