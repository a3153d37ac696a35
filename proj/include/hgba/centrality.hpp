#pragma once

#include <optional>
#include <span>
#include <string_view>
#include <vector>

#include "hgba/hetgraph.hpp"
#include "hgba/matrix.hpp"
#include "hgba/metapath.hpp"

namespace hgba {

enum class CentralityMeasure { Degree, Betweenness, Closeness, Eigenvector, PageRank };

std::string_view to_string(CentralityMeasure m);
CentralityMeasure parse_centrality(std::string_view name);

/// Unnormalised Brandes betweenness over unordered pairs of an undirected,
/// unweighted graph. The adjacency must be square and symmetric.
std::vector<double> betweenness(const SparseMatrix& adj);
/// Row sums of the adjacency.
std::vector<double> degree_centrality(const SparseMatrix& adj);
/// (reachable - 1) / (sum of distances to reachable nodes); isolated nodes score 0.
std::vector<double> closeness(const SparseMatrix& adj);
/// Principal eigenvector (unit L2 norm, nonnegative) by power iteration on A + I.
std::vector<double> eigenvector_centrality(const SparseMatrix& adj, double tol = 1e-10, int max_iter = 1000);
/// PageRank with uniform redistribution of dangling mass.
std::vector<double> pagerank(const SparseMatrix& adj, double damping = 0.85, double tol = 1e-10, int max_iter = 1000);

std::vector<double> centrality(const SparseMatrix& adj, CentralityMeasure m);

struct TriggerCriterion {
  CentralityMeasure measure = CentralityMeasure::Betweenness;
  bool minimize = true;
};

struct TriggerSelection {
  NodeRef node;
  std::vector<double> scores;
};

/// Scores target nodes on the metapath projection and returns the arg-extremum
/// (ties go to the smallest index).
TriggerSelection select_trigger_node(const HeteroGraph& graph, const Metapath& p, TriggerCriterion criterion = {});

/// Same, scoring on the union of several projections (all must share the endpoint type).
TriggerSelection select_trigger_node(const HeteroGraph& graph, std::span<const Metapath> projections,
                                     TriggerCriterion criterion = {});

}  // namespace hgba
