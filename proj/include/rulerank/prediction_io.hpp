#pragma once

#include <cmath>
#include <span>
#include <string>
#include <vector>

#include "rulerank/clustering.hpp"
#include "rulerank/evaluation.hpp"

namespace rulerank {

// Prediction files hold three lines per test triple:
//   <head> <relation> <tail>
//   Heads: e1<TAB>s1<TAB>e2<TAB>s2...
//   Tails: e1<TAB>s1<TAB>e2<TAB>s2...
// Scores carry six decimal places; candidate lists may be empty.
void write_predictions(const std::string& path, const KnowledgeGraph& graph,
                       std::span<const TaskPrediction> predictions);
std::vector<TaskPrediction> read_predictions(const std::string& path,
                                             const KnowledgeGraph& graph);

// One cluster-file section: the partition of a relation's rules used for one
// prediction direction, with the thresholds that produced it.
struct ClusterSection {
  RelationId relation = 0;
  QueryDir dir = QueryDir::Tail;
  ThresholdSet thresholds;
  double fitness = std::nan("");  // NaN when no validation fitness exists
  ClusterAssignment assignment;
};

struct ClusterFile {
  std::vector<ClusterSection> sections;
  const ClusterSection* find(RelationId rel, QueryDir dir) const;
};

// Cluster files are sequences of sections:
//   rel<TAB><relationLabel><TAB><head|tail><TAB>thresholds <t1> ... <t6>
//   fitness<TAB><value|NA>
//   <clusterId><TAB><ruleString>
//   ...
// '#'-prefixed comment lines are ignored. Each section must partition exactly
// the ruleset's rules for its relation.
void write_clusters(const std::string& path, const KnowledgeGraph& graph, const RuleSet& rules,
                    std::span<const ClusterSection> sections, std::uint64_t seed);
ClusterFile read_clusters(const std::string& path, const KnowledgeGraph& graph,
                          const RuleSet& rules);

struct SignatureFile {
  MinHashParams params;
  std::vector<Signature> signatures;      // indexed by rule id
  std::vector<std::uint64_t> set_sizes;   // solution set cardinalities
};

// Signature files hold one row per rule in rule id order:
//   <relationLabel><TAB><ruleId><TAB><setSize><TAB><hex values><TAB><ruleString>
// preceded by '# k=' and '# seed=' header comments.
void write_signatures(const std::string& path, const KnowledgeGraph& graph,
                      const RuleSet& rules, std::span<const Signature> signatures,
                      std::span<const std::uint64_t> set_sizes, MinHashParams params);
SignatureFile read_signatures(const std::string& path, const KnowledgeGraph& graph,
                              const RuleSet& rules);

}  // namespace rulerank
