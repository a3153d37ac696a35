#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "hgba/hetgraph.hpp"
#include "hgba/metapath.hpp"

namespace hgba {

enum class DefenseMethod { Prune, PruneLd };

std::string_view to_string(DefenseMethod m);
DefenseMethod parse_defense_method(std::string_view name);

struct PruneOptions {
  double threshold = 0.1;
  /// Delete every edge on every instance between a marked pair instead of one edge per instance.
  bool all_instances = false;
};

void validate(const PruneOptions& opts);

struct MarkedPairs {
  std::string metapath;
  std::vector<std::pair<std::uint32_t, std::uint32_t>> pairs;  // u < w
};

struct DeletedEdge {
  RelationId relation = 0;
  Edge edge;

  friend bool operator==(const DeletedEdge&, const DeletedEdge&) = default;
  friend auto operator<=>(const DeletedEdge&, const DeletedEdge&) = default;
};

struct DefenseReport {
  DefenseMethod method = DefenseMethod::Prune;
  double threshold = 0.1;
  bool all_instances = false;
  std::vector<MarkedPairs> marked;
  std::vector<DeletedEdge> deleted_edges;       // sorted, unique
  std::vector<std::uint32_t> discarded_labels;  // sorted
};

std::string report_to_json(const DefenseReport& report, const Schema& schema);
DefenseReport report_from_json(std::string_view text, const Schema& schema);

/// Cosine similarity of two rows; 0 when either row is all zeros.
double cosine(std::span<const double> a, std::span<const double> b);

/// Projected pairs (u < w) of `p` whose feature cosine is below `threshold`.
std::vector<std::pair<std::uint32_t, std::uint32_t>> mark_dissimilar(const HeteroGraph& graph, const Metapath& p,
                                                                     double threshold);

/// Edges whose removal severs every instance of `p` between each pair. By default one edge
/// per instance: the first hop out of u.
std::vector<DeletedEdge> severing_edges(const HeteroGraph& graph, const Metapath& p,
                                        std::span<const std::pair<std::uint32_t, std::uint32_t>> pairs,
                                        bool all_instances = false);

/// Metapaths a defender without knowledge of the attack would scan.
std::vector<Metapath> defender_metapaths(const HeteroGraph& graph);

/// Marks dissimilar projected pairs on every metapath and deletes the edges that connect them.
/// Deletions are computed on the input graph and applied together.
std::pair<HeteroGraph, DefenseReport> prune(const HeteroGraph& graph, std::span<const Metapath> metapaths,
                                            const PruneOptions& opts = {});

/// As prune; additionally drops the labels of marked endpoints that belong to `supervised`
/// (normally the training split).
std::pair<HeteroGraph, DefenseReport> prune_ld(const HeteroGraph& graph, std::span<const Metapath> metapaths,
                                               std::span<const std::uint32_t> supervised,
                                               const PruneOptions& opts = {});

}  // namespace hgba
