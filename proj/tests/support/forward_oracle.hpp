#pragma once

#include <algorithm>
#include <cmath>
#include <string>
#include <vector>

#include "fixtures.hpp"
#include "hgba/models.hpp"

namespace hgba::test {

using Rows = std::vector<std::vector<double>>;

inline Rows rows_of(const DenseMatrix& m) {
  Rows r(m.rows(), std::vector<double>(m.cols()));
  for (std::size_t i = 0; i < m.rows(); ++i)
    for (std::size_t j = 0; j < m.cols(); ++j) r[i][j] = m(i, j);
  return r;
}

inline Rows times(const Rows& a, const DenseMatrix& w) {
  Rows out(a.size(), std::vector<double>(w.cols(), 0.0));
  for (std::size_t i = 0; i < a.size(); ++i)
    for (std::size_t k = 0; k < w.rows(); ++k)
      for (std::size_t j = 0; j < w.cols(); ++j) out[i][j] += a[i][k] * w(k, j);
  return out;
}

inline void add_row(Rows& a, const DenseMatrix& b) {
  for (auto& r : a)
    for (std::size_t j = 0; j < r.size(); ++j) r[j] += b(0, j);
}

template <class F>
void apply(Rows& a, F f) {
  for (auto& r : a)
    for (double& v : r) v = f(v);
}

/// Renormalised projection of `p` with self loops, built from raw edge lists.
inline Rows propagate_sym(const HeteroGraph& g, const Metapath& p, const Rows& x) {
  const std::size_t n = g.node_count(p.source_type());
  std::vector<std::set<std::uint32_t>> nb(n);
  for (std::uint32_t u = 0; u < n; ++u) {
    nb[u] = walk_endpoints(g, u, p);
    nb[u].erase(u);
    nb[u].insert(u);
  }
  Rows out(n, std::vector<double>(x[0].size(), 0.0));
  for (std::uint32_t u = 0; u < n; ++u)
    for (std::uint32_t v : nb[u]) {
      const double w = 1.0 / std::sqrt(static_cast<double>(nb[u].size()) * static_cast<double>(nb[v].size()));
      for (std::size_t j = 0; j < x[v].size(); ++j) out[u][j] += w * x[v][j];
    }
  return out;
}

/// Mean of sender rows per receiver over one relation direction.
inline Rows propagate_mean(const HeteroGraph& g, RelationId r, bool reverse, const Rows& sender, std::size_t receivers) {
  Rows out(receivers, std::vector<double>(sender[0].size(), 0.0));
  std::vector<double> count(receivers, 0.0);
  for (const auto& [s, d] : g.edges(r)) {
    const std::uint32_t from = reverse ? d : s, to = reverse ? s : d;
    count[to] += 1.0;
    for (std::size_t j = 0; j < sender[from].size(); ++j) out[to][j] += sender[from][j];
  }
  for (std::size_t i = 0; i < receivers; ++i)
    if (count[i] > 0.0)
      for (double& v : out[i]) v /= count[i];
  return out;
}

inline void accumulate(Rows& a, const Rows& b) {
  for (std::size_t i = 0; i < a.size(); ++i)
    for (std::size_t j = 0; j < a[i].size(); ++j) a[i][j] += b[i][j];
}

inline std::string suffix(RelationId r, bool reverse) { return std::to_string(r) + (reverse ? ".rev" : ".fwd"); }

/// Inference logits computed with plain loops from the model definition. When `kink_margin`
/// is given it receives the smallest |input| seen by any ReLU.
inline Rows reference_logits(const TrainedModel& m, const HeteroGraph& g, double* kink_margin = nullptr) {
  if (kink_margin) *kink_margin = INFINITY;
  const auto relu = [kink_margin](double v) {
    if (kink_margin) *kink_margin = std::min(*kink_margin, std::abs(v));
    return std::max(v, 0.0);
  };
  const NodeTypeId target = g.target_type();
  Rows h;
  switch (m.config.arch) {
    case Architecture::Gcn: {
      const Metapath& p = m.config.metapaths.at(0);
      Rows h1 = propagate_sym(g, p, times(rows_of(g.features(target)), m.param("W1")));
      add_row(h1, m.param("b1"));
      apply(h1, relu);
      h = propagate_sym(g, p, times(h1, m.param("W2")));
      add_row(h, m.param("b2"));
      apply(h, relu);
      break;
    }
    case Architecture::Rgcn: {
      const auto& s = g.schema();
      std::vector<Rows> x, h1;
      for (NodeTypeId t = 0; t < s.node_types.size(); ++t) x.push_back(rows_of(g.features(t)));
      for (NodeTypeId t = 0; t < s.node_types.size(); ++t) {
        Rows acc = times(x[t], m.param("self1." + std::to_string(t)));
        add_row(acc, m.param("bias1." + std::to_string(t)));
        for (RelationId r = 0; r < s.relations.size(); ++r) {
          const auto& rel = s.relations[r];
          if (rel.dst == t) accumulate(acc, propagate_mean(g, r, false, times(x[rel.src], m.param("msg1." + suffix(r, false))), g.node_count(t)));
          if (rel.src == t) accumulate(acc, propagate_mean(g, r, true, times(x[rel.dst], m.param("msg1." + suffix(r, true))), g.node_count(t)));
        }
        apply(acc, relu);
        h1.push_back(std::move(acc));
      }
      h = times(h1[target], m.param("self2"));
      add_row(h, m.param("bias2"));
      for (RelationId r = 0; r < s.relations.size(); ++r) {
        const auto& rel = s.relations[r];
        if (rel.dst == target) accumulate(h, propagate_mean(g, r, false, times(h1[rel.src], m.param("msg2." + suffix(r, false))), g.target_count()));
        if (rel.src == target) accumulate(h, propagate_mean(g, r, true, times(h1[rel.dst], m.param("msg2." + suffix(r, true))), g.target_count()));
      }
      apply(h, relu);
      break;
    }
    case Architecture::Han: {
      const Rows x = rows_of(g.features(target));
      std::vector<Rows> z;
      std::vector<double> score;
      for (std::size_t k = 0; k < m.config.metapaths.size(); ++k) {
        Rows zk = propagate_sym(g, m.config.metapaths[k], times(x, m.param("W." + std::to_string(k))));
        add_row(zk, m.param("b." + std::to_string(k)));
        apply(zk, [](double v) { return v > 0.0 ? v : std::expm1(v); });
        Rows proj = times(zk, m.param("sem.W"));
        add_row(proj, m.param("sem.b"));
        apply(proj, [](double v) { return std::tanh(v); });
        double sc = 0.0;
        for (std::size_t j = 0; j < proj[0].size(); ++j) {
          double col = 0.0;
          for (const auto& r : proj) col += r[j];
          sc += col / static_cast<double>(proj.size()) * m.param("sem.q")(j, 0);
        }
        score.push_back(sc);
        z.push_back(std::move(zk));
      }
      const double top = *std::max_element(score.begin(), score.end());
      double total = 0.0;
      for (double& s : score) total += (s = std::exp(s - top));
      h = Rows(z[0].size(), std::vector<double>(z[0][0].size(), 0.0));
      for (std::size_t k = 0; k < z.size(); ++k)
        for (std::size_t i = 0; i < h.size(); ++i)
          for (std::size_t j = 0; j < h[i].size(); ++j) h[i][j] += score[k] / total * z[k][i][j];
      break;
    }
  }
  Rows out = times(h, m.param("Wc"));
  add_row(out, m.param("bc"));
  return out;
}

}  // namespace hgba::test
