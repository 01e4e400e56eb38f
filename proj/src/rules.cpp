#include "rulerank/rules.hpp"

#include <algorithm>
#include <array>
#include <charconv>
#include <cmath>
#include <fstream>
#include <map>

namespace rulerank {

const char* to_string(RuleType type) {
  switch (type) {
    case RuleType::C: return "C";
    case RuleType::AC1: return "AC1";
    case RuleType::AC2: return "AC2";
  }
  return "?";
}

std::span<const std::uint32_t> RuleSet::rules_for(RelationId rel) const {
  if (rel >= by_relation.size()) return {};
  return by_relation[rel];
}

namespace {

struct RawAtom {
  std::string rel;
  std::string arg1;
  std::string arg2;
};

struct RawRule {
  RawAtom head;
  std::vector<RawAtom> body;
};

bool is_variable_token(std::string_view token) {
  if (token.empty() || token[0] < 'A' || token[0] > 'Z') return false;
  for (std::size_t i = 1; i < token.size(); ++i)
    if (token[i] < '0' || token[i] > '9') return false;
  return true;
}

[[noreturn]] void fail(const std::string& context, const std::string& message) {
  throw ParseError(context + ": " + message);
}

RawAtom parse_atom(std::string_view text, std::size_t& pos, const std::string& context) {
  auto open = text.find('(', pos);
  if (open == std::string_view::npos || open == pos) fail(context, "expected atom 'rel(arg,arg)'");
  auto comma = text.find(',', open + 1);
  if (comma == std::string_view::npos) fail(context, "atom missing ','");
  auto close = text.find(')', comma + 1);
  if (close == std::string_view::npos) fail(context, "atom missing ')'");
  RawAtom atom;
  atom.rel = std::string(text.substr(pos, open - pos));
  atom.arg1 = std::string(text.substr(open + 1, comma - open - 1));
  atom.arg2 = std::string(text.substr(comma + 1, close - comma - 1));
  if (atom.arg1.empty() || atom.arg2.empty()) fail(context, "empty atom argument");
  pos = close + 1;
  return atom;
}

RawRule parse_rule_string(std::string_view text, const std::string& context) {
  auto sep = text.find(" <= ");
  if (sep == std::string_view::npos) fail(context, "rule string missing ' <= '");
  RawRule raw;
  std::size_t pos = 0;
  std::string_view head_part = text.substr(0, sep);
  raw.head = parse_atom(head_part, pos, context);
  if (pos != head_part.size()) fail(context, "trailing characters after head atom");
  std::string_view body_part = text.substr(sep + 4);
  pos = 0;
  while (true) {
    raw.body.push_back(parse_atom(body_part, pos, context));
    if (pos == body_part.size()) break;
    if (body_part.substr(pos, 2) != ", ") fail(context, "expected ', ' between body atoms");
    pos += 2;
  }
  return raw;
}

struct ChainInfo {
  RuleType type = RuleType::C;
  std::uint8_t anchor_pos = 0;
  std::vector<ChainStep> steps;
  std::vector<std::uint32_t> atoms;
  Term end;
};

// Walks the body as a path starting at `start`. Each step consumes the unique
// unused atom containing the current variable; anything else (branching,
// disconnection, repeated variables within an atom) is outside the rule
// language.
ChainInfo walk_chain(const Term& start, const std::vector<Atom>& body,
                     const std::string& context) {
  ChainInfo info;
  std::vector<bool> used(body.size(), false);
  Term cur = start;
  std::size_t remaining = body.size();
  while (remaining > 0) {
    if (!cur.is_var()) fail(context, "constant interrupts the body chain");
    int found = -1;
    for (std::size_t i = 0; i < body.size(); ++i) {
      if (used[i]) continue;
      bool in1 = body[i].arg1 == cur;
      bool in2 = body[i].arg2 == cur;
      if (in1 && in2) fail(context, "atom repeats a variable");
      if (!in1 && !in2) continue;
      if (found >= 0) fail(context, "body is not a chain (branching variable)");
      found = static_cast<int>(i);
    }
    if (found < 0) fail(context, "body is not a chain (disconnected atom)");
    const Atom& atom = body[static_cast<std::size_t>(found)];
    bool forward = atom.arg1 == cur;
    info.steps.push_back({atom.rel, forward});
    info.atoms.push_back(static_cast<std::uint32_t>(found));
    used[static_cast<std::size_t>(found)] = true;
    cur = forward ? atom.arg2 : atom.arg1;
    --remaining;
  }
  info.end = cur;
  return info;
}

ChainInfo analyze(const Atom& head, const std::vector<Atom>& body, const std::string& context) {
  if (body.empty()) fail(context, "rule has no body");
  const Term& h1 = head.arg1;
  const Term& h2 = head.arg2;
  if (h1.is_var() && h2.is_var()) {
    if (h1 == h2) fail(context, "head repeats a variable");
    ChainInfo info = walk_chain(h1, body, context);
    if (!(info.end == h2)) fail(context, "body chain does not connect the head variables");
    info.type = RuleType::C;
    info.anchor_pos = 0;
    return info;
  }
  if (!h1.is_var() && !h2.is_var()) fail(context, "head has no variable");
  std::uint8_t anchor = h1.is_var() ? 0 : 1;
  const Term& head_var = anchor == 0 ? h1 : h2;
  ChainInfo info = walk_chain(head_var, body, context);
  info.anchor_pos = anchor;
  if (!info.end.is_var()) {
    info.type = RuleType::AC1;
    return info;
  }
  if (info.end == head_var) fail(context, "body chain loops back to the head variable");
  std::size_t occurrences = 0;
  for (const Atom& atom : body) {
    if (atom.arg1 == info.end) ++occurrences;
    if (atom.arg2 == info.end) ++occurrences;
  }
  if (occurrences != 1) fail(context, "chain end variable is not unbound");
  info.type = RuleType::AC2;
  return info;
}

std::uint64_t parse_count(std::string_view field, const std::string& context) {
  std::uint64_t value = 0;
  auto [ptr, ec] = std::from_chars(field.data(), field.data() + field.size(), value);
  if (ec != std::errc() || ptr != field.data() + field.size())
    fail(context, "expected a non-negative integer count");
  return value;
}

double parse_confidence(std::string_view field, const std::string& context) {
  double value = 0.0;
  auto [ptr, ec] = std::from_chars(field.data(), field.data() + field.size(), value);
  if (ec != std::errc() || ptr != field.data() + field.size())
    fail(context, "expected a confidence value");
  return value;
}

// Missing vocabulary entries reject the rule (warning), everything else is a
// hard parse error.
struct VocabularyMiss {
  std::string message;
};

Term resolve_term(const std::string& token, std::vector<std::string>& var_names,
                  const KnowledgeGraph& graph) {
  if (is_variable_token(token)) {
    for (std::uint32_t i = 0; i < var_names.size(); ++i)
      if (var_names[i] == token) return {Term::Kind::Var, i};
    var_names.push_back(token);
    return {Term::Kind::Var, static_cast<std::uint32_t>(var_names.size() - 1)};
  }
  auto id = graph.entities().find(token);
  if (!id) throw VocabularyMiss{"unknown constant '" + token + "'"};
  return {Term::Kind::Const, *id};
}

Atom resolve_atom(const RawAtom& raw, std::vector<std::string>& var_names,
                  const KnowledgeGraph& graph) {
  auto rel = graph.relations().find(raw.rel);
  if (!rel) throw VocabularyMiss{"unknown relation '" + raw.rel + "'"};
  Atom atom;
  atom.rel = *rel;
  atom.arg1 = resolve_term(raw.arg1, var_names, graph);
  atom.arg2 = resolve_term(raw.arg2, var_names, graph);
  return atom;
}

Rule build_rule(const RawRule& raw, const KnowledgeGraph& graph, const std::string& context) {
  Rule rule;
  rule.head = resolve_atom(raw.head, rule.var_names, graph);
  for (const RawAtom& atom : raw.body)
    rule.body.push_back(resolve_atom(atom, rule.var_names, graph));
  ChainInfo info = analyze(rule.head, rule.body, context);
  rule.type = info.type;
  rule.anchor_pos = info.anchor_pos;
  rule.chain = std::move(info.steps);
  rule.chain_atoms = std::move(info.atoms);
  rule.chain_end = info.end;
  auto add_constant = [&rule](const Term& t) {
    if (!t.is_var()) rule.constants.push_back(t.index);
  };
  add_constant(rule.head.arg1);
  add_constant(rule.head.arg2);
  for (const Atom& atom : rule.body) {
    add_constant(atom.arg1);
    add_constant(atom.arg2);
  }
  std::sort(rule.constants.begin(), rule.constants.end());
  rule.constants.erase(std::unique(rule.constants.begin(), rule.constants.end()),
                       rule.constants.end());
  return rule;
}

std::string format_double(double value) {
  char buf[64];
  auto [ptr, ec] = std::to_chars(buf, buf + sizeof(buf), value);
  (void)ec;
  return std::string(buf, ptr);
}

void term_string(const Term& term, const Rule& rule, const KnowledgeGraph& graph,
                 std::string& out) {
  if (term.is_var()) {
    out += rule.var_names[term.index];
  } else {
    out += graph.entities().label(term.index);
  }
}

void atom_string(const Atom& atom, const Rule& rule, const KnowledgeGraph& graph,
                 std::string& out) {
  out += graph.relations().label(atom.rel);
  out += '(';
  term_string(atom.arg1, rule, graph, out);
  out += ',';
  term_string(atom.arg2, rule, graph, out);
  out += ')';
}

// Body atoms listed in the given order, every term renamed to its
// first-appearance index. Occurrences of one constant share a single name, so
// the result is the rule with constants abstracted away.
std::string canonical_listing(const Rule& rule, bool reversed) {
  std::map<std::pair<Term::Kind, std::uint32_t>, std::uint32_t> names;
  std::string out;
  auto emit = [&](const Term& t) {
    auto key = std::make_pair(t.kind, t.index);
    auto it = names.find(key);
    std::uint32_t name;
    if (it == names.end()) {
      name = static_cast<std::uint32_t>(names.size());
      names.emplace(key, name);
    } else {
      name = it->second;
    }
    out += std::to_string(name);
  };
  auto emit_atom = [&](const Atom& atom) {
    out += 'r';
    out += std::to_string(atom.rel);
    out += '(';
    emit(atom.arg1);
    out += ',';
    emit(atom.arg2);
    out += ')';
  };
  emit_atom(rule.head);
  std::vector<std::uint32_t> order = rule.chain_atoms;
  if (reversed) std::reverse(order.begin(), order.end());
  for (std::uint32_t idx : order) {
    out += '|';
    emit_atom(rule.body[idx]);
  }
  return out;
}

std::string canonical_form(const Rule& rule) {
  std::string forward = canonical_listing(rule, false);
  if (rule.type != RuleType::C) return forward;
  // A C rule's chain can be read from either head variable.
  std::string backward = canonical_listing(rule, true);
  return std::min(forward, backward);
}

}  // namespace

RuleSet parse_ruleset(const std::string& path, const KnowledgeGraph& graph) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ParseError("cannot open rule file: " + path);
  RuleSet set;
  set.source = path;
  set.by_relation.resize(graph.relation_count());
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    std::string context = path + ":" + std::to_string(line_no);
    std::string_view view(line);
    std::array<std::string_view, 4> fields;
    std::size_t start = 0;
    for (int f = 0; f < 3; ++f) {
      auto tab = view.find('\t', start);
      if (tab == std::string_view::npos) fail(context, "expected 4 tab-separated fields");
      fields[static_cast<std::size_t>(f)] = view.substr(start, tab - start);
      start = tab + 1;
    }
    fields[3] = view.substr(start);
    if (fields[3].find('\t') != std::string_view::npos)
      fail(context, "expected 4 tab-separated fields");
    std::uint64_t predicted = parse_count(fields[0], context);
    std::uint64_t correct = parse_count(fields[1], context);
    double confidence = parse_confidence(fields[2], context);
    if (!(confidence >= 0.0 && confidence <= 1.0))
      fail(context, "confidence outside [0, 1]");
    if (predicted > 0) {
      double expected = static_cast<double>(correct) / static_cast<double>(predicted);
      if (std::fabs(confidence - expected) > 1e-9)
        fail(context, "confidence does not match correct/predicted");
    }
    RawRule raw = parse_rule_string(fields[3], context);
    try {
      Rule rule = build_rule(raw, graph, context);
      rule.id = static_cast<std::uint32_t>(set.rules.size());
      rule.predicted = predicted;
      rule.correct = correct;
      rule.confidence = confidence;
      set.by_relation[rule.head.rel].push_back(rule.id);
      set.rules.push_back(std::move(rule));
    } catch (const VocabularyMiss& miss) {
      set.warnings.push_back("line " + std::to_string(line_no) + ": " + miss.message);
    }
  }
  for (RelationId r = 0; r < graph.relation_count(); ++r)
    if (!set.by_relation[r].empty()) set.relations.push_back(r);
  return set;
}

RuleType classify(const Rule& rule) {
  return analyze(rule.head, rule.body, "classify").type;
}

std::string serialize(const Rule& rule, const KnowledgeGraph& graph) {
  std::string out;
  atom_string(rule.head, rule, graph, out);
  out += " <= ";
  for (std::size_t i = 0; i < rule.body.size(); ++i) {
    if (i > 0) out += ", ";
    atom_string(rule.body[i], rule, graph, out);
  }
  return out;
}

std::string serialize_line(const Rule& rule, const KnowledgeGraph& graph) {
  std::string out = std::to_string(rule.predicted);
  out += '\t';
  out += std::to_string(rule.correct);
  out += '\t';
  out += format_double(rule.confidence);
  out += '\t';
  out += serialize(rule, graph);
  return out;
}

bool directly_redundant(const Rule& a, const Rule& b) {
  if (a.head.rel != b.head.rel) return false;
  if (a.body.size() != b.body.size()) return false;
  return canonical_form(a) == canonical_form(b);
}

}  // namespace rulerank
