#pragma once

#include <cstdint>
#include <numeric>
#include <queue>
#include <random>
#include <vector>

#include "hgba/matrix.hpp"

namespace hgba::test {

/// Exact rational p/q with q > 0, kept reduced. Path counts on graphs of <= 50 nodes fit easily.
struct Ratio {
  __int128 p = 0, q = 1;

  static __int128 gcd(__int128 a, __int128 b) {
    if (a < 0) a = -a;
    while (b != 0) {
      const __int128 t = a % b;
      a = b;
      b = t;
    }
    return a;
  }
  Ratio& operator+=(const Ratio& o) {
    const __int128 g = gcd(q, o.q);
    p = p * (o.q / g) + o.p * (q / g);
    q = q / g * o.q;
    const __int128 r = gcd(p, q);
    if (r > 1) {
      p /= r;
      q /= r;
    }
    return *this;
  }
  double value() const { return static_cast<double>(p) / static_cast<double>(q); }
};

inline SparseMatrix random_undirected(std::mt19937_64& rng, std::size_t n, double p) {
  std::bernoulli_distribution keep(p);
  std::vector<std::pair<std::uint32_t, std::uint32_t>> e;
  for (std::uint32_t i = 0; i < n; ++i)
    for (std::uint32_t j = i + 1; j < n; ++j)
      if (keep(rng)) {
        e.emplace_back(i, j);
        e.emplace_back(j, i);
      }
  return SparseMatrix::from_pattern(n, n, e);
}

/// All-pairs BFS distances and shortest-path counts, then for each unordered pair
/// {s, t} and each v: sigma(s,v) sigma(v,t) / sigma(s,t) whenever d(s,v) + d(v,t) = d(s,t).
/// Summed as exact fractions, so the result is the correctly rounded true value.
inline std::vector<double> naive_betweenness(const SparseMatrix& adj) {
  const std::size_t n = adj.rows();
  std::vector<std::vector<long>> dist(n, std::vector<long>(n, -1));
  std::vector<std::vector<std::int64_t>> sigma(n, std::vector<std::int64_t>(n, 0));
  for (std::uint32_t s = 0; s < n; ++s) {
    std::queue<std::uint32_t> q;
    dist[s][s] = 0;
    sigma[s][s] = 1;
    q.push(s);
    while (!q.empty()) {
      const auto v = q.front();
      q.pop();
      for (auto w : adj.row_indices(v)) {
        if (dist[s][w] < 0) {
          dist[s][w] = dist[s][v] + 1;
          q.push(w);
        }
        if (dist[s][w] == dist[s][v] + 1) sigma[s][w] += sigma[s][v];
      }
    }
  }
  std::vector<Ratio> acc(n);
  for (std::size_t s = 0; s < n; ++s)
    for (std::size_t t = s + 1; t < n; ++t) {
      if (dist[s][t] < 0) continue;
      for (std::size_t v = 0; v < n; ++v) {
        if (v == s || v == t || dist[s][v] < 0 || dist[v][t] < 0) continue;
        if (dist[s][v] + dist[v][t] != dist[s][t]) continue;
        acc[v] += Ratio{static_cast<__int128>(sigma[s][v]) * sigma[v][t], sigma[s][t]};
      }
    }
  std::vector<double> out(n);
  for (std::size_t v = 0; v < n; ++v) out[v] = acc[v].value();
  return out;
}

}  // namespace hgba::test
