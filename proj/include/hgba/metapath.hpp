#pragma once

#include <cstddef>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "hgba/hetgraph.hpp"
#include "hgba/matrix.hpp"

namespace hgba {

/// One hop of a metapath: a relation traversed as declared (src -> dst) or backwards.
struct MetapathStep {
  RelationId relation = 0;
  bool reverse = false;

  friend bool operator==(const MetapathStep&, const MetapathStep&) = default;
};

/// Alternating node types and relations A1 R1 A2 ... Rl A(l+1).
class Metapath {
 public:
  Metapath() = default;
  /// Checks every step against the schema; throws ValidationError when inconsistent.
  Metapath(const Schema& schema, std::vector<NodeTypeId> types, std::vector<MetapathStep> steps);

  /// Parses "P-A-P" or "A-P-C-P-A". Type tokens match a type name exactly, then
  /// case-insensitively, then as a unique case-insensitive prefix. A token "[rel]"
  /// between two types names the relation explicitly ("P-[writes]-A-[writes]-P");
  /// otherwise the unique relation joining the two types (either direction) is used.
  static Metapath parse(const Schema& schema, std::string_view text);

  std::span<const NodeTypeId> types() const { return types_; }
  std::span<const MetapathStep> steps() const { return steps_; }
  std::size_t length() const { return steps_.size(); }
  NodeTypeId source_type() const { return types_.front(); }
  NodeTypeId end_type() const { return types_.back(); }
  bool symmetric_endpoints() const { return !types_.empty() && types_.front() == types_.back(); }

  /// Short display name made of each type's initial, e.g. "PAP".
  const std::string& name() const { return name_; }
  /// Hyphenated full type names, re-parseable with parse().
  const std::string& text() const { return text_; }

  Metapath reversed(const Schema& schema) const;

  friend bool operator==(const Metapath& a, const Metapath& b) {
    return a.types_ == b.types_ && a.steps_ == b.steps_;
  }

 private:
  std::vector<NodeTypeId> types_;
  std::vector<MetapathStep> steps_;
  std::string name_;
  std::string text_;
};

/// A single typed edge as it is traversed along a metapath, from `from` to `to`.
/// When `reverse` is set the stored edge is (to, from) in the relation's declared orientation.
struct EdgeSpec {
  RelationId relation = 0;
  NodeRef from;
  NodeRef to;
  bool reverse = false;

  Edge stored() const { return reverse ? Edge{to.index, from.index} : Edge{from.index, to.index}; }

  friend bool operator==(const EdgeSpec&, const EdgeSpec&) = default;
};

/// The adjacency of one step, oriented rows = step source type, cols = step target type.
const SparseMatrix& step_adjacency(const HeteroGraph& graph, MetapathStep step);

/// Nodes reachable from `start` by walking `steps` in order (sorted, deduplicated).
std::vector<std::uint32_t> reachable(const HeteroGraph& graph, std::uint32_t start, std::span<const MetapathStep> steps);
/// Nodes from which `end` is reachable by walking `steps` in order.
std::vector<std::uint32_t> reachable_backward(const HeteroGraph& graph, std::uint32_t end,
                                              std::span<const MetapathStep> steps);

/// 0/1 reachability over A1 x A(l+1); diagonal removed when the endpoint types agree.
SparseMatrix compose_adjacency(const HeteroGraph& graph, const Metapath& p);

/// Homogeneous projection of a symmetric-endpoint metapath.
struct HomogeneousGraph {
  NodeTypeId type = 0;
  SparseMatrix adjacency;
  DenseMatrix features;
};

HomogeneousGraph extract_subgraph(const HeteroGraph& graph, const Metapath& p);

/// True iff at least one instance of `p` joins u to v (u == v is never connected).
bool is_connected_via(const HeteroGraph& graph, NodeRef u, NodeRef v, const Metapath& p);

/// One new edge creating an instance v_p ~> v_t of `p`, chosen as the smallest
/// (cut position, prefix node, suffix node) triple, where the cut is the first step using
/// the new edge (later steps may use it again); nullopt when no single edge suffices.
/// Throws ValidationError if v_p and v_t are already connected or have the wrong types.
std::optional<EdgeSpec> single_edge_completion(const HeteroGraph& graph, NodeRef v_p, NodeRef v_t, const Metapath& p);

/// New graph with `e` added. Throws ValidationError on illegal endpoints or duplicates.
HeteroGraph attach_edge(const HeteroGraph& graph, const EdgeSpec& e);

/// All metapaths with 1..max_length relations starting and ending at `type`,
/// one representative per {path, reversed path} pair, in deterministic order.
std::vector<Metapath> symmetric_metapaths(const Schema& schema, NodeTypeId type, std::size_t max_length);

/// Resolves a comma-separated list of metapath texts.
std::vector<Metapath> parse_metapaths(const Schema& schema, std::string_view comma_separated);

}  // namespace hgba
