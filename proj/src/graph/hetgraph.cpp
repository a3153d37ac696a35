#include "hgba/hetgraph.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>
#include <set>
#include <string>

#include "hgba/error.hpp"

namespace hgba {

std::optional<NodeTypeId> Schema::find_type(std::string_view name) const {
  for (std::size_t i = 0; i < node_types.size(); ++i) {
    if (node_types[i].name == name) return static_cast<NodeTypeId>(i);
  }
  return std::nullopt;
}

std::optional<RelationId> Schema::find_relation(std::string_view name) const {
  for (std::size_t i = 0; i < relations.size(); ++i) {
    if (relations[i].name == name) return static_cast<RelationId>(i);
  }
  return std::nullopt;
}

HeteroGraph::HeteroGraph(Schema schema, std::vector<DenseMatrix> features, std::vector<std::vector<Edge>> edges,
                         std::vector<int> labels, NodeTypeId target_type, int num_classes)
    : schema_(std::move(schema)), target_type_(target_type), num_classes_(num_classes) {
  const auto& types = schema_.node_types;
  const auto& rels = schema_.relations;
  if (types.empty()) throw ValidationError("graph has no node types");
  if (types.size() + rels.size() <= 2) {
    throw ValidationError("not heterogeneous: |node types| + |relations| = " +
                          std::to_string(types.size() + rels.size()) + " (must exceed 2)");
  }
  if (target_type_ >= types.size()) throw ValidationError("target type does not exist");
  if (num_classes_ <= 0) throw ValidationError("num_classes must be positive");
  for (const auto& r : rels) {
    if (r.src >= types.size() || r.dst >= types.size()) {
      throw ValidationError("relation '" + r.name + "' references an undeclared node type");
    }
  }
  if (features.size() != types.size()) throw ValidationError("one feature matrix per node type required");
  for (std::size_t t = 0; t < types.size(); ++t) {
    const auto& f = features[t];
    if (f.rows() != types[t].count || (f.cols() != types[t].feature_dim && types[t].count > 0)) {
      throw ValidationError("feature matrix of type '" + types[t].name + "' is " + std::to_string(f.rows()) + "x" +
                            std::to_string(f.cols()) + ", manifest declares " + std::to_string(types[t].count) +
                            "x" + std::to_string(types[t].feature_dim));
    }
    if (!f.all_finite()) throw ValidationError("feature matrix of type '" + types[t].name + "' has NaN/Inf");
    features_.push_back(std::make_shared<const DenseMatrix>(std::move(features[t])));
  }
  if (edges.size() != rels.size()) throw ValidationError("one edge list per relation required");
  for (std::size_t r = 0; r < rels.size(); ++r) {
    validate_relation(static_cast<RelationId>(r), edges[r]);
    relations_.push_back(build_relation(static_cast<RelationId>(r), std::move(edges[r])));
  }
  if (labels.size() != types[target_type_].count) {
    throw ValidationError("label count " + std::to_string(labels.size()) + " does not match target count " +
                          std::to_string(types[target_type_].count));
  }
  for (int y : labels) {
    if (y != kUnlabeled && (y < 0 || y >= num_classes_)) {
      throw ValidationError("label out of range: " + std::to_string(y));
    }
  }
  labels_ = std::make_shared<const std::vector<int>>(std::move(labels));
}

void HeteroGraph::validate_relation(RelationId r, std::span<const Edge> edges) const {
  const auto& rel = schema_.relations[r];
  const std::size_t ns = schema_.node_types[rel.src].count;
  const std::size_t nd = schema_.node_types[rel.dst].count;
  std::vector<Edge> sorted(edges.begin(), edges.end());
  for (const auto& [s, d] : sorted) {
    if (s >= ns || d >= nd) {
      throw ValidationError("out-of-range edge index (" + std::to_string(s) + "," + std::to_string(d) +
                            ") in relation '" + rel.name + "'");
    }
  }
  std::sort(sorted.begin(), sorted.end());
  auto dup = std::adjacent_find(sorted.begin(), sorted.end());
  if (dup != sorted.end()) {
    throw ValidationError("duplicate edge (" + std::to_string(dup->first) + "," + std::to_string(dup->second) +
                          ") in relation '" + rel.name + "'");
  }
}

std::shared_ptr<const HeteroGraph::RelationData> HeteroGraph::build_relation(RelationId r,
                                                                               std::vector<Edge> edges) const {
  const auto& rel = schema_.relations[r];
  auto data = std::make_shared<RelationData>();
  data->forward = SparseMatrix::from_pattern(schema_.node_types[rel.src].count, schema_.node_types[rel.dst].count,
                                             edges);
  data->reverse = data->forward.transpose();
  data->edges = std::move(edges);
  return data;
}

std::size_t HeteroGraph::total_nodes() const {
  std::size_t n = 0;
  for (const auto& t : schema_.node_types) n += t.count;
  return n;
}

std::size_t HeteroGraph::total_edges() const {
  std::size_t n = 0;
  for (const auto& r : relations_) n += r->edges.size();
  return n;
}

const SparseMatrix& HeteroGraph::adjacency(RelationId r, bool reverse) const {
  const auto& data = *relations_.at(r);
  return reverse ? data.reverse : data.forward;
}

bool HeteroGraph::has_edge(RelationId r, Edge e) const { return relations_.at(r)->forward.contains(e.first, e.second); }

HeteroGraph HeteroGraph::with_edge(RelationId r, Edge e) const {
  const Edge one[] = {e};
  return with_edges(r, one);
}

HeteroGraph HeteroGraph::with_edges(RelationId r, std::span<const Edge> added) const {
  if (r >= relations_.size()) throw ValidationError("unknown relation id " + std::to_string(r));
  std::vector<Edge> edges = relations_[r]->edges;
  edges.insert(edges.end(), added.begin(), added.end());
  validate_relation(r, edges);
  HeteroGraph g = *this;
  g.relations_[r] = build_relation(r, std::move(edges));
  return g;
}

HeteroGraph HeteroGraph::without_edges(RelationId r, std::span<const Edge> removed) const {
  if (r >= relations_.size()) throw ValidationError("unknown relation id " + std::to_string(r));
  std::set<Edge> drop(removed.begin(), removed.end());
  for (const Edge& e : drop) {
    if (!has_edge(r, e)) throw ValidationError("cannot remove absent edge from '" + schema_.relations[r].name + "'");
  }
  std::vector<Edge> edges;
  edges.reserve(relations_[r]->edges.size());
  for (const Edge& e : relations_[r]->edges) {
    if (!drop.contains(e)) edges.push_back(e);
  }
  HeteroGraph g = *this;
  g.relations_[r] = build_relation(r, std::move(edges));
  return g;
}

HeteroGraph HeteroGraph::with_node(NodeTypeId t, std::span<const double> features, int label) const {
  if (t >= schema_.node_types.size()) throw ValidationError("unknown node type id " + std::to_string(t));
  auto& info = schema_.node_types[t];
  if (features.size() != info.feature_dim) throw ValidationError("new node feature row has wrong dimension");
  if (!std::all_of(features.begin(), features.end(), [](double v) { return std::isfinite(v); })) {
    throw ValidationError("new node features contain NaN/Inf");
  }
  HeteroGraph g = *this;
  g.schema_.node_types[t].count += 1;
  DenseMatrix f = *features_[t];
  if (f.rows() == 0) f = DenseMatrix(0, info.feature_dim);
  f.append_row(features);
  g.features_[t] = std::make_shared<const DenseMatrix>(std::move(f));
  for (std::size_t r = 0; r < relations_.size(); ++r) {
    const auto& rel = schema_.relations[r];
    if (rel.src == t || rel.dst == t) {
      g.relations_[r] = g.build_relation(static_cast<RelationId>(r), relations_[r]->edges);
    }
  }
  if (t == target_type_) {
    if (label != kUnlabeled && (label < 0 || label >= num_classes_)) throw ValidationError("label out of range");
    auto labels = *labels_;
    labels.push_back(label);
    g.labels_ = std::make_shared<const std::vector<int>>(std::move(labels));
  } else if (label != kUnlabeled) {
    throw ValidationError("only target-type nodes carry labels");
  }
  return g;
}

HeteroGraph HeteroGraph::with_labels(std::vector<int> labels) const {
  if (labels.size() != labels_->size()) throw ValidationError("label vector size mismatch");
  for (int y : labels) {
    if (y != kUnlabeled && (y < 0 || y >= num_classes_)) throw ValidationError("label out of range: " + std::to_string(y));
  }
  HeteroGraph g = *this;
  g.labels_ = std::make_shared<const std::vector<int>>(std::move(labels));
  return g;
}

HeteroGraph HeteroGraph::with_features(NodeTypeId t, DenseMatrix features) const {
  if (t >= schema_.node_types.size()) throw ValidationError("unknown node type id " + std::to_string(t));
  const auto& info = schema_.node_types[t];
  if (features.rows() != info.count || features.cols() != info.feature_dim) {
    throw ValidationError("replacement feature matrix has wrong shape");
  }
  if (!features.all_finite()) throw ValidationError("replacement feature matrix has NaN/Inf");
  HeteroGraph g = *this;
  g.features_[t] = std::make_shared<const DenseMatrix>(std::move(features));
  return g;
}

bool operator==(const HeteroGraph& a, const HeteroGraph& b) {
  if (a.schema_ != b.schema_ || a.target_type_ != b.target_type_ || a.num_classes_ != b.num_classes_) return false;
  if (*a.labels_ != *b.labels_) return false;
  for (std::size_t t = 0; t < a.features_.size(); ++t) {
    if (*a.features_[t] != *b.features_[t]) return false;
  }
  for (std::size_t r = 0; r < a.relations_.size(); ++r) {
    if (a.relations_[r]->edges != b.relations_[r]->edges) return false;
  }
  return true;
}

DataSplit make_split(const HeteroGraph& graph, SplitRatios ratios, std::uint64_t seed) {
  const double sum = ratios.train + ratios.val + ratios.test;
  if (ratios.train < 0 || ratios.val < 0 || ratios.test < 0 || std::abs(sum - 1.0) > 1e-9) {
    throw ConfigError("split ratios must be non-negative and sum to 1");
  }
  std::vector<std::uint32_t> nodes;
  const auto labels = graph.labels();
  for (std::uint32_t i = 0; i < labels.size(); ++i) {
    if (labels[i] != kUnlabeled) nodes.push_back(i);
  }
  std::mt19937_64 rng(seed);
  std::shuffle(nodes.begin(), nodes.end(), rng);
  const auto n = static_cast<double>(nodes.size());
  const auto n_train = std::min(nodes.size(), static_cast<std::size_t>(std::llround(ratios.train * n)));
  const auto n_val = std::min(nodes.size() - n_train, static_cast<std::size_t>(std::llround(ratios.val * n)));
  DataSplit split;
  split.seed = seed;
  split.train.assign(nodes.begin(), nodes.begin() + static_cast<std::ptrdiff_t>(n_train));
  split.val.assign(nodes.begin() + static_cast<std::ptrdiff_t>(n_train),
                   nodes.begin() + static_cast<std::ptrdiff_t>(n_train + n_val));
  split.test.assign(nodes.begin() + static_cast<std::ptrdiff_t>(n_train + n_val), nodes.end());
  std::sort(split.train.begin(), split.train.end());
  std::sort(split.val.begin(), split.val.end());
  std::sort(split.test.begin(), split.test.end());
  return split;
}

void validate_split(const HeteroGraph& graph, const DataSplit& split) {
  std::vector<char> seen(graph.target_count(), 0);
  for (const auto* part : {&split.train, &split.val, &split.test}) {
    for (std::uint32_t v : *part) {
      if (v >= seen.size()) throw ValidationError("split index " + std::to_string(v) + " outside target type");
      if (seen[v]) throw ValidationError("split sets are not disjoint at node " + std::to_string(v));
      seen[v] = 1;
    }
  }
}

int target_class(const HeteroGraph& graph, const DataSplit& split) {
  if (split.train.empty()) throw ValidationError("target_class: empty training set");
  std::vector<std::size_t> counts(static_cast<std::size_t>(graph.num_classes()), 0);
  for (std::uint32_t v : split.train) {
    const int y = graph.label(v);
    if (y != kUnlabeled) ++counts[static_cast<std::size_t>(y)];
  }
  return static_cast<int>(std::min_element(counts.begin(), counts.end()) - counts.begin());
}

}  // namespace hgba
