#include "hgba/centrality.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <queue>
#include <string>

#include "hgba/error.hpp"

namespace hgba {
namespace {

void require_square(const SparseMatrix& adj, const char* op) {
  if (adj.rows() != adj.cols()) throw ShapeError(std::string(op) + ": adjacency must be square");
}

// Distances from s by BFS; -1 marks unreachable.
std::vector<long> bfs(const SparseMatrix& adj, std::uint32_t s) {
  std::vector<long> dist(adj.rows(), -1);
  std::queue<std::uint32_t> q;
  dist[s] = 0;
  q.push(s);
  while (!q.empty()) {
    const auto v = q.front();
    q.pop();
    for (auto w : adj.row_indices(v)) {
      if (dist[w] < 0) {
        dist[w] = dist[v] + 1;
        q.push(w);
      }
    }
  }
  return dist;
}

}  // namespace

std::string_view to_string(CentralityMeasure m) {
  switch (m) {
    case CentralityMeasure::Degree: return "degree";
    case CentralityMeasure::Betweenness: return "betweenness";
    case CentralityMeasure::Closeness: return "closeness";
    case CentralityMeasure::Eigenvector: return "eigenvector";
    case CentralityMeasure::PageRank: return "pagerank";
  }
  return "unknown";
}

CentralityMeasure parse_centrality(std::string_view name) {
  for (auto m : {CentralityMeasure::Degree, CentralityMeasure::Betweenness, CentralityMeasure::Closeness,
                 CentralityMeasure::Eigenvector, CentralityMeasure::PageRank}) {
    if (to_string(m) == name) return m;
  }
  throw ConfigError("unknown centrality measure '" + std::string(name) + "'");
}

std::vector<double> betweenness(const SparseMatrix& adj) {
  require_square(adj, "betweenness");
  const std::size_t n = adj.rows();
  std::vector<double> cb(n, 0.0);
  std::vector<std::uint32_t> order;
  std::vector<std::vector<std::uint32_t>> preds(n);
  std::vector<double> sigma(n);
  std::vector<long> dist(n);
  std::vector<double> delta(n);
  for (std::uint32_t s = 0; s < n; ++s) {
    order.clear();
    for (auto& p : preds) p.clear();
    std::fill(sigma.begin(), sigma.end(), 0.0);
    std::fill(dist.begin(), dist.end(), -1);
    sigma[s] = 1.0;
    dist[s] = 0;
    std::queue<std::uint32_t> q;
    q.push(s);
    while (!q.empty()) {
      const auto v = q.front();
      q.pop();
      order.push_back(v);
      for (auto w : adj.row_indices(v)) {
        if (w == v) continue;
        if (dist[w] < 0) {
          dist[w] = dist[v] + 1;
          q.push(w);
        }
        if (dist[w] == dist[v] + 1) {
          sigma[w] += sigma[v];
          preds[w].push_back(v);
        }
      }
    }
    std::fill(delta.begin(), delta.end(), 0.0);
    for (auto it = order.rbegin(); it != order.rend(); ++it) {
      const auto w = *it;
      for (auto v : preds[w]) delta[v] += sigma[v] / sigma[w] * (1.0 + delta[w]);
      if (w != s) cb[w] += delta[w];
    }
  }
  // Every unordered pair was counted from both endpoints.
  for (double& v : cb) v /= 2.0;
  return cb;
}

std::vector<double> degree_centrality(const SparseMatrix& adj) {
  require_square(adj, "degree");
  std::vector<double> d(adj.rows());
  for (std::size_t r = 0; r < adj.rows(); ++r) {
    auto vals = adj.row_values(r);
    d[r] = std::accumulate(vals.begin(), vals.end(), 0.0);
  }
  return d;
}

std::vector<double> closeness(const SparseMatrix& adj) {
  require_square(adj, "closeness");
  std::vector<double> c(adj.rows(), 0.0);
  for (std::uint32_t s = 0; s < adj.rows(); ++s) {
    const auto dist = bfs(adj, s);
    long total = 0;
    long reached = 0;
    for (long d : dist) {
      if (d > 0) {
        total += d;
        ++reached;
      }
    }
    c[s] = total > 0 ? static_cast<double>(reached) / static_cast<double>(total) : 0.0;
  }
  return c;
}

std::vector<double> eigenvector_centrality(const SparseMatrix& adj, double tol, int max_iter) {
  require_square(adj, "eigenvector");
  const std::size_t n = adj.rows();
  if (n == 0) return {};
  std::vector<double> x(n, 1.0 / std::sqrt(static_cast<double>(n)));
  std::vector<double> next(n);
  for (int it = 0; it < max_iter; ++it) {
    // The identity shift keeps the iteration convergent on bipartite graphs.
    for (std::size_t r = 0; r < n; ++r) {
      double acc = x[r];
      auto idx = adj.row_indices(r);
      auto val = adj.row_values(r);
      for (std::size_t k = 0; k < idx.size(); ++k) acc += val[k] * x[idx[k]];
      next[r] = acc;
    }
    double norm = 0.0;
    for (double v : next) norm += v * v;
    norm = std::sqrt(norm);
    if (norm == 0.0) break;
    double change = 0.0;
    for (std::size_t r = 0; r < n; ++r) {
      next[r] /= norm;
      change = std::max(change, std::abs(next[r] - x[r]));
    }
    x.swap(next);
    if (change < tol) break;
  }
  return x;
}

std::vector<double> pagerank(const SparseMatrix& adj, double damping, double tol, int max_iter) {
  require_square(adj, "pagerank");
  const std::size_t n = adj.rows();
  if (n == 0) return {};
  const auto deg = degree_centrality(adj);
  std::vector<double> pr(n, 1.0 / static_cast<double>(n));
  std::vector<double> next(n);
  for (int it = 0; it < max_iter; ++it) {
    double dangling = 0.0;
    for (std::size_t v = 0; v < n; ++v) {
      if (deg[v] == 0.0) dangling += pr[v];
    }
    const double base = (1.0 - damping) / static_cast<double>(n) + damping * dangling / static_cast<double>(n);
    std::fill(next.begin(), next.end(), base);
    for (std::size_t v = 0; v < n; ++v) {
      if (deg[v] == 0.0) continue;
      auto idx = adj.row_indices(v);
      auto val = adj.row_values(v);
      for (std::size_t k = 0; k < idx.size(); ++k) next[idx[k]] += damping * pr[v] * val[k] / deg[v];
    }
    double change = 0.0;
    for (std::size_t v = 0; v < n; ++v) change += std::abs(next[v] - pr[v]);
    pr.swap(next);
    if (change < tol) break;
  }
  return pr;
}

std::vector<double> centrality(const SparseMatrix& adj, CentralityMeasure m) {
  switch (m) {
    case CentralityMeasure::Degree: return degree_centrality(adj);
    case CentralityMeasure::Betweenness: return betweenness(adj);
    case CentralityMeasure::Closeness: return closeness(adj);
    case CentralityMeasure::Eigenvector: return eigenvector_centrality(adj);
    case CentralityMeasure::PageRank: return pagerank(adj);
  }
  throw ConfigError("unknown centrality measure");
}

TriggerSelection select_trigger_node(const HeteroGraph& graph, const Metapath& p, TriggerCriterion criterion) {
  const Metapath one[] = {p};
  return select_trigger_node(graph, one, criterion);
}

TriggerSelection select_trigger_node(const HeteroGraph& graph, std::span<const Metapath> projections,
                                     TriggerCriterion criterion) {
  if (projections.empty()) throw ConfigError("select_trigger_node: no metapath given");
  const NodeTypeId type = projections.front().source_type();
  if (graph.node_count(type) == 0) throw ValidationError("select_trigger_node: empty target type");
  SparseMatrix adj;
  for (const auto& p : projections) {
    if (!p.symmetric_endpoints() || p.source_type() != type) {
      throw ValidationError("select_trigger_node: metapath '" + p.name() + "' does not project onto one type");
    }
    auto sub = extract_subgraph(graph, p).adjacency;
    if (adj.rows() == 0) {
      adj = std::move(sub);
    } else {
      std::vector<std::pair<std::uint32_t, std::uint32_t>> pairs;
      for (const SparseMatrix* m : {&adj, &sub}) {
        for (std::size_t r = 0; r < m->rows(); ++r) {
          for (auto c : m->row_indices(r)) pairs.emplace_back(static_cast<std::uint32_t>(r), c);
        }
      }
      adj = SparseMatrix::from_pattern(sub.rows(), sub.cols(), pairs);
    }
  }
  TriggerSelection sel;
  sel.scores = centrality(adj, criterion.measure);
  std::size_t best = 0;
  for (std::size_t i = 1; i < sel.scores.size(); ++i) {
    const bool better = criterion.minimize ? sel.scores[i] < sel.scores[best] : sel.scores[i] > sel.scores[best];
    if (better) best = i;
  }
  sel.node = NodeRef{type, static_cast<std::uint32_t>(best)};
  return sel;
}

}  // namespace hgba
