#pragma once

#include <compare>
#include <cstddef>
#include <cstdint>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "hgba/matrix.hpp"

namespace hgba {

using NodeTypeId = std::uint16_t;
using RelationId = std::uint16_t;
using Edge = std::pair<std::uint32_t, std::uint32_t>;

inline constexpr int kUnlabeled = -1;

/// A node addressed by its type and its dense local index within that type.
struct NodeRef {
  NodeTypeId type = 0;
  std::uint32_t index = 0;

  friend auto operator<=>(const NodeRef&, const NodeRef&) = default;
};

struct NodeTypeInfo {
  std::string name;
  std::size_t count = 0;
  std::size_t feature_dim = 0;

  friend bool operator==(const NodeTypeInfo&, const NodeTypeInfo&) = default;
};

/// A typed edge relation declared from `src` to `dst`.
struct RelationInfo {
  std::string name;
  NodeTypeId src = 0;
  NodeTypeId dst = 0;

  friend bool operator==(const RelationInfo&, const RelationInfo&) = default;
};

struct Schema {
  std::vector<NodeTypeInfo> node_types;
  std::vector<RelationInfo> relations;

  std::optional<NodeTypeId> find_type(std::string_view name) const;
  std::optional<RelationId> find_relation(std::string_view name) const;

  friend bool operator==(const Schema&, const Schema&) = default;
};

/// Immutable heterogeneous graph. Every "with_*" member returns a new value that
/// shares untouched parts (feature matrices, relation edge lists) with this one.
///
/// Labels exist only on the target type; kUnlabeled marks an unobserved label.
class HeteroGraph {
 public:
  /// Validates every invariant and throws ValidationError on the first violation.
  HeteroGraph(Schema schema, std::vector<DenseMatrix> features, std::vector<std::vector<Edge>> edges,
              std::vector<int> labels, NodeTypeId target_type, int num_classes);

  const Schema& schema() const { return schema_; }
  NodeTypeId target_type() const { return target_type_; }
  int num_classes() const { return num_classes_; }

  std::size_t node_count(NodeTypeId t) const { return schema_.node_types.at(t).count; }
  std::size_t target_count() const { return node_count(target_type_); }
  std::size_t total_nodes() const;
  std::size_t total_edges() const;
  std::size_t edge_count(RelationId r) const { return relations_.at(r)->edges.size(); }

  const DenseMatrix& features(NodeTypeId t) const { return *features_.at(t); }
  std::span<const double> feature_row(NodeRef v) const { return features(v.type).row(v.index); }
  std::span<const Edge> edges(RelationId r) const { return relations_.at(r)->edges; }
  std::span<const int> labels() const { return *labels_; }
  int label(std::uint32_t target_index) const { return labels_->at(target_index); }

  /// Adjacency of relation `r` as declared (src x dst), or transposed when `reverse`.
  const SparseMatrix& adjacency(RelationId r, bool reverse = false) const;
  bool has_edge(RelationId r, Edge e) const;

  HeteroGraph with_edge(RelationId r, Edge e) const;
  HeteroGraph with_edges(RelationId r, std::span<const Edge> added) const;
  /// Removes the listed edges; throws if any is absent.
  HeteroGraph without_edges(RelationId r, std::span<const Edge> removed) const;
  /// Appends one node of type `t`; the new node's index is the old count.
  HeteroGraph with_node(NodeTypeId t, std::span<const double> features, int label = kUnlabeled) const;
  HeteroGraph with_labels(std::vector<int> labels) const;
  HeteroGraph with_features(NodeTypeId t, DenseMatrix features) const;

  friend bool operator==(const HeteroGraph& a, const HeteroGraph& b);

 private:
  struct RelationData {
    std::vector<Edge> edges;
    SparseMatrix forward;
    SparseMatrix reverse;
  };

  HeteroGraph() = default;
  std::shared_ptr<const RelationData> build_relation(RelationId r, std::vector<Edge> edges) const;
  void validate_relation(RelationId r, std::span<const Edge> edges) const;

  Schema schema_;
  std::vector<std::shared_ptr<const DenseMatrix>> features_;
  std::vector<std::shared_ptr<const RelationData>> relations_;
  std::shared_ptr<const std::vector<int>> labels_;
  NodeTypeId target_type_ = 0;
  int num_classes_ = 0;
};

/// Train/validation/test partition over target-type node indices (each sorted ascending).
struct DataSplit {
  std::vector<std::uint32_t> train;
  std::vector<std::uint32_t> val;
  std::vector<std::uint32_t> test;
  std::uint64_t seed = 0;

  friend bool operator==(const DataSplit&, const DataSplit&) = default;
};

struct SplitRatios {
  double train = 0.2;
  double val = 0.1;
  double test = 0.7;
};

/// Uniform random (unstratified) split of the labeled target nodes. Train and
/// validation sizes are rounded to nearest, test takes the remainder.
DataSplit make_split(const HeteroGraph& graph, SplitRatios ratios, std::uint64_t seed);

/// Class with the fewest training instances; ties go to the smallest class id.
int target_class(const HeteroGraph& graph, const DataSplit& split);

/// Throws ValidationError unless the split is disjoint and within the target type.
void validate_split(const HeteroGraph& graph, const DataSplit& split);

/// Configuration of the planted two-metapath generator. Node types are
/// T (target), A and B; relations are T-A and T-B, giving metapaths T-A-T and T-B-T.
struct SynthConfig {
  std::size_t target_count = 1200;
  std::size_t aux_a_count = 400;
  std::size_t aux_b_count = 300;
  int num_classes = 3;
  std::size_t feature_dim = 32;
  std::size_t aux_feature_dim = 8;
  /// Euclidean distance between any two class mean vectors.
  double separation = 4.0;
  /// Probability that a T-A link goes to an A node of the target node's class.
  double homophily = 0.9;
  /// Same for T-B links; a negative value wires T-B uniformly at random.
  double secondary_homophily = -1.0;
  /// Mean number of A (resp. B) links per target node; each node gets at least one.
  double links_a = 2.0;
  double links_b = 6.0;
  /// Zipf exponent of A-node popularity; 0 picks A nodes uniformly.
  double skew_a = 0.0;
  std::uint64_t seed = 0;

  friend bool operator==(const SynthConfig&, const SynthConfig&) = default;
};

void validate(const SynthConfig& cfg);
HeteroGraph synth_generate(const SynthConfig& cfg);

}  // namespace hgba
