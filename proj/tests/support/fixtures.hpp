#pragma once

#include <cstdint>
#include <random>
#include <set>
#include <vector>

#include "hgba/hetgraph.hpp"
#include "hgba/matrix.hpp"
#include "hgba/metapath.hpp"

namespace hgba::test {

inline DenseMatrix random_dense(std::mt19937_64& rng, std::size_t rows, std::size_t cols, double scale = 1.0) {
  std::normal_distribution<double> n(0.0, scale);
  DenseMatrix m(rows, cols);
  for (double& v : m.values()) v = n(rng);
  return m;
}

inline std::vector<Edge> random_edges(std::mt19937_64& rng, std::size_t n_src, std::size_t n_dst, double p) {
  std::bernoulli_distribution keep(p);
  std::vector<Edge> out;
  for (std::uint32_t s = 0; s < n_src; ++s) {
    for (std::uint32_t d = 0; d < n_dst; ++d) {
      if (keep(rng)) out.emplace_back(s, d);
    }
  }
  return out;
}

/// Types T (target), A, B; relations T-A, T-B, A-B. Sizes are drawn so the total stays within `max_nodes`.
inline HeteroGraph random_hetero(std::mt19937_64& rng, std::size_t max_nodes = 60, double density = 0.15,
                                 int classes = 3, std::size_t dim = 4) {
  std::uniform_int_distribution<std::size_t> nt(4, max_nodes / 2), na(2, max_nodes / 4), nb(2, max_nodes / 4);
  const std::size_t t = nt(rng), a = na(rng), b = nb(rng);
  Schema s;
  s.node_types = {{"T", t, dim}, {"A", a, 3}, {"B", b, 2}};
  s.relations = {{"T-A", 0, 1}, {"T-B", 0, 2}, {"A-B", 1, 2}};
  std::vector<DenseMatrix> x{random_dense(rng, t, dim), random_dense(rng, a, 3), random_dense(rng, b, 2)};
  std::vector<std::vector<Edge>> e{random_edges(rng, t, a, density), random_edges(rng, t, b, density),
                                   random_edges(rng, a, b, density)};
  std::uniform_int_distribution<int> lab(0, classes - 1);
  std::vector<int> labels(t);
  for (int& l : labels) l = lab(rng);
  return HeteroGraph(std::move(s), std::move(x), std::move(e), std::move(labels), 0, classes);
}

/// Endpoints of `p` reachable from `start` by enumerating typed walks over raw edge lists.
inline std::set<std::uint32_t> walk_endpoints(const HeteroGraph& g, std::uint32_t start, const Metapath& p,
                                              std::size_t from_step = 0, std::size_t to_step = SIZE_MAX) {
  const auto steps = p.steps();
  to_step = std::min(to_step, steps.size());
  std::set<std::uint32_t> frontier{start};
  for (std::size_t i = from_step; i < to_step; ++i) {
    std::set<std::uint32_t> next;
    for (const auto& [s, d] : g.edges(steps[i].relation)) {
      const std::uint32_t from = steps[i].reverse ? d : s;
      const std::uint32_t to = steps[i].reverse ? s : d;
      if (frontier.count(from)) next.insert(to);
    }
    frontier = std::move(next);
  }
  return frontier;
}

inline bool walk_connects(const HeteroGraph& g, std::uint32_t u, std::uint32_t v, const Metapath& p) {
  return u != v && walk_endpoints(g, u, p).count(v) > 0;
}

}  // namespace hgba::test
