#include "hgba/inference.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <string>
#include <unordered_map>

#include "hgba/error.hpp"
#include "hgba/metapath.hpp"

namespace hgba {
namespace {

using Rows = std::vector<std::uint32_t>;

void normalize_rows(Rows& rows) {
  std::sort(rows.begin(), rows.end());
  rows.erase(std::unique(rows.begin(), rows.end()), rows.end());
}

DenseMatrix extend_rows(const DenseMatrix& m, std::size_t rows) {
  if (m.rows() == rows) return m;
  DenseMatrix out(rows, m.cols());
  std::copy(m.values().begin(), m.values().end(), out.values().begin());
  return out;
}

// out[r] = in[r] * w for every listed row.
void gemm_rows(DenseMatrix& out, const DenseMatrix& in, const Rows& rows, const DenseMatrix& w) {
  if (rows.empty()) return;
  DenseMatrix gathered(rows.size(), in.cols());
  for (std::size_t i = 0; i < rows.size(); ++i) {
    auto src = in.row(rows[i]);
    std::copy(src.begin(), src.end(), gathered.row(i).begin());
  }
  const DenseMatrix prod = matmul(gathered, w);
  for (std::size_t i = 0; i < rows.size(); ++i) {
    auto src = prod.row(i);
    std::copy(src.begin(), src.end(), out.row(rows[i]).begin());
  }
}

// The same accumulation order as spmm() for one row.
void spmm_row(std::span<double> out, std::span<const std::uint32_t> idx, std::span<const double> val,
              const DenseMatrix& b) {
  std::fill(out.begin(), out.end(), 0.0);
  for (std::size_t k = 0; k < idx.size(); ++k) {
    const double v = val[k];
    auto in = b.row(idx[k]);
    for (std::size_t j = 0; j < out.size(); ++j) out[j] += v * in[j];
  }
}

void add_bias_row(std::span<double> row, const DenseMatrix& bias) {
  auto b = bias.row(0);
  for (std::size_t j = 0; j < row.size(); ++j) row[j] += b[j];
}

void relu_row(std::span<double> row) {
  for (double& v : row) v = v > 0.0 ? v : 0.0;
}

void elu_row(std::span<double> row) {
  for (double& v : row) v = v > 0.0 ? v : std::expm1(v);
}

// A metapath projection of the base graph plus the per-query row overlay.
struct Projection {
  Metapath path;
  SparseMatrix pattern;     // compose_adjacency, diagonal dropped
  SparseMatrix transposed;  // rows of `pattern` that contain a given column
  SparseMatrix normalized;  // sym_normalize(pattern, true)
  std::vector<double> degree;

  struct Overlay {
    std::unordered_map<std::uint32_t, std::pair<Rows, std::vector<double>>> rows;
    Rows dirty;  // rows whose normalised entries changed (or are new)
  };

  Overlay overlay(const HeteroGraph& g, const GraphDiff& d) const {
    const NodeTypeId t = path.source_type();
    const auto steps = path.steps();
    Rows reach_changed;
    for (std::size_t u = d.old_counts[t]; u < d.new_counts[t]; ++u) reach_changed.push_back(static_cast<std::uint32_t>(u));
    for (std::size_t i = 0; i < steps.size(); ++i) {
      for (const Edge& e : d.added_edges[steps[i].relation]) {
        const std::uint32_t from = steps[i].reverse ? e.second : e.first;
        const auto back = reachable_backward(g, from, steps.first(i));
        reach_changed.insert(reach_changed.end(), back.begin(), back.end());
      }
    }
    normalize_rows(reach_changed);

    std::unordered_map<std::uint32_t, Rows> pattern_rows;
    std::unordered_map<std::uint32_t, double> new_degree;
    Rows degree_changed;
    for (std::uint32_t u : reach_changed) {
      Rows r = reachable(g, u, steps);
      r.erase(std::remove(r.begin(), r.end(), u), r.end());
      const double deg = static_cast<double>(r.size()) + 1.0;
      new_degree[u] = deg;
      if (u >= degree.size() || degree[u] != deg) degree_changed.push_back(u);
      pattern_rows.emplace(u, std::move(r));
    }
    auto deg_of = [&](std::uint32_t v) {
      auto it = new_degree.find(v);
      return it != new_degree.end() ? it->second : degree[v];
    };

    Overlay o;
    o.dirty = reach_changed;
    for (std::uint32_t j : degree_changed) {
      if (j < transposed.rows()) {
        auto rows = transposed.row_indices(j);
        o.dirty.insert(o.dirty.end(), rows.begin(), rows.end());
      }
    }
    normalize_rows(o.dirty);
    for (std::uint32_t i : o.dirty) {
      Rows cols;
      auto it = pattern_rows.find(i);
      if (it != pattern_rows.end()) {
        cols = it->second;
      } else {
        auto idx = pattern.row_indices(i);
        cols.assign(idx.begin(), idx.end());
      }
      cols.insert(std::lower_bound(cols.begin(), cols.end(), i), i);
      const double inv_i = 1.0 / std::sqrt(deg_of(i));
      std::vector<double> vals(cols.size());
      for (std::size_t k = 0; k < cols.size(); ++k) vals[k] = 1.0 * inv_i * (1.0 / std::sqrt(deg_of(cols[k])));
      o.rows.emplace(i, std::make_pair(std::move(cols), std::move(vals)));
    }
    return o;
  }

  // Rows of the edited propagation matrix that read any of `inputs`.
  Rows readers(const Overlay& o, const Rows& inputs) const {
    Rows out = o.dirty;
    for (std::uint32_t j : inputs) {
      out.push_back(j);
      if (j < transposed.rows()) {
        auto rows = transposed.row_indices(j);
        out.insert(out.end(), rows.begin(), rows.end());
      }
    }
    normalize_rows(out);
    return out;
  }

  void propagate_row(const Overlay& o, std::uint32_t i, const DenseMatrix& in, std::span<double> out) const {
    auto it = o.rows.find(i);
    if (it != o.rows.end()) {
      spmm_row(out, it->second.first, it->second.second, in);
    } else {
      spmm_row(out, normalized.row_indices(i), normalized.row_values(i), in);
    }
  }
};

Projection make_projection(const HeteroGraph& g, const Metapath& p) {
  Projection pr{p, compose_adjacency(g, p), {}, {}, {}};
  pr.transposed = pr.pattern.transpose();
  pr.normalized = sym_normalize(pr.pattern, true);
  pr.degree.resize(pr.pattern.rows());
  for (std::size_t r = 0; r < pr.pattern.rows(); ++r) pr.degree[r] = static_cast<double>(pr.pattern.row_indices(r).size()) + 1.0;
  return pr;
}

struct Message {
  RelationId relation;
  bool reverse;
  NodeTypeId from;
  NodeTypeId to;
  std::string suffix;
};

}  // namespace

GraphDiff diff_graphs(const HeteroGraph& before, const HeteroGraph& after) {
  GraphDiff d;
  const auto& s0 = before.schema();
  const auto& s1 = after.schema();
  if (s0.relations != s1.relations || s0.node_types.size() != s1.node_types.size() ||
      before.target_type() != after.target_type()) {
    d.compatible = false;
    return d;
  }
  const std::size_t types = s0.node_types.size();
  d.dirty_rows.resize(types);
  for (std::size_t t = 0; t < types; ++t) {
    const auto nt = static_cast<NodeTypeId>(t);
    d.old_counts.push_back(before.node_count(nt));
    d.new_counts.push_back(after.node_count(nt));
    if (s0.node_types[t].feature_dim != s1.node_types[t].feature_dim || d.new_counts[t] < d.old_counts[t]) {
      d.compatible = false;
      return d;
    }
    const DenseMatrix& x0 = before.features(nt);
    const DenseMatrix& x1 = after.features(nt);
    if (&x0 != &x1) {
      for (std::size_t r = 0; r < d.old_counts[t]; ++r) {
        auto a = x0.row(r);
        auto b = x1.row(r);
        if (!std::equal(a.begin(), a.end(), b.begin())) d.dirty_rows[t].push_back(static_cast<std::uint32_t>(r));
      }
    }
    for (std::size_t r = d.old_counts[t]; r < d.new_counts[t]; ++r) d.dirty_rows[t].push_back(static_cast<std::uint32_t>(r));
  }
  d.added_edges.resize(s0.relations.size());
  for (std::size_t r = 0; r < s0.relations.size(); ++r) {
    const auto rid = static_cast<RelationId>(r);
    const auto e0 = before.edges(rid);
    const auto e1 = after.edges(rid);
    if (e1.size() >= e0.size() && std::equal(e0.begin(), e0.end(), e1.begin())) {
      d.added_edges[r].assign(e1.begin() + static_cast<std::ptrdiff_t>(e0.size()), e1.end());
      continue;
    }
    const auto& rel = s0.relations[r];
    std::size_t kept = 0;
    for (const Edge& e : e1) {
      if (e.first < d.old_counts[rel.src] && e.second < d.old_counts[rel.dst] && before.has_edge(rid, e)) {
        ++kept;
      } else {
        d.added_edges[r].push_back(e);
      }
    }
    if (kept != e0.size()) {
      d.compatible = false;
      return d;
    }
  }
  return d;
}

struct DeltaInference::State {
  TrainedModel model;
  HeteroGraph base;
  std::map<std::string, const DenseMatrix*, std::less<>> params;

  // gcn / han
  std::vector<Projection> projections;
  std::vector<DenseMatrix> input_proj;  // X W per projection (gcn: X W1)
  std::vector<DenseMatrix> hidden;      // gcn: H1; han: Z_m
  DenseMatrix gcn_p2, gcn_h2;
  std::vector<DenseMatrix> han_t;       // tanh(Z_m Wsem + bsem)

  // rgcn
  std::vector<Message> messages;
  std::vector<DenseMatrix> self1;  // per type
  std::vector<DenseMatrix> msg1;   // per message
  std::vector<DenseMatrix> h1;     // per type
  DenseMatrix self2;
  std::vector<DenseMatrix> msg2;   // per message (empty unless it reaches the target)
  DenseMatrix h2;

  DenseMatrix logits;

  State(const TrainedModel& m, const HeteroGraph& g) : model(m), base(g) {
    for (const auto& p : model.params) params[p.name] = &p.value;
  }

  const DenseMatrix& P(const std::string& name) const {
    auto it = params.find(name);
    if (it == params.end()) throw Error("inference: missing parameter '" + name + "'");
    return *it->second;
  }
};

namespace {

DenseMatrix head(const DenseMatrix& h, const DenseMatrix& wc, const DenseMatrix& bc) {
  DenseMatrix out = matmul(h, wc);
  for (std::size_t r = 0; r < out.rows(); ++r) add_bias_row(out.row(r), bc);
  return out;
}

}  // namespace

DeltaInference::DeltaInference(const TrainedModel& model, const HeteroGraph& base) {
  auto st = std::make_shared<State>(model, base);
  const auto& cfg = st->model.config;
  const NodeTypeId target = base.target_type();
  st->logits = forward(st->model, base);
  switch (cfg.arch) {
    case Architecture::Gcn: {
      auto& pr = st->projections.emplace_back(make_projection(base, cfg.metapaths.at(0)));
      const DenseMatrix p1 = matmul(base.features(target), st->P("W1"));
      DenseMatrix h1 = spmm(pr.normalized, p1);
      for (std::size_t r = 0; r < h1.rows(); ++r) {
        add_bias_row(h1.row(r), st->P("b1"));
        relu_row(h1.row(r));
      }
      st->gcn_p2 = matmul(h1, st->P("W2"));
      st->gcn_h2 = spmm(pr.normalized, st->gcn_p2);
      for (std::size_t r = 0; r < st->gcn_h2.rows(); ++r) {
        add_bias_row(st->gcn_h2.row(r), st->P("b2"));
        relu_row(st->gcn_h2.row(r));
      }
      st->input_proj.push_back(p1);
      st->hidden.push_back(std::move(h1));
      break;
    }
    case Architecture::Han: {
      for (std::size_t m = 0; m < cfg.metapaths.size(); ++m) {
        const std::string ms = std::to_string(m);
        auto& pr = st->projections.emplace_back(make_projection(base, cfg.metapaths[m]));
        DenseMatrix p = matmul(base.features(target), st->P("W." + ms));
        DenseMatrix z = spmm(pr.normalized, p);
        for (std::size_t r = 0; r < z.rows(); ++r) {
          add_bias_row(z.row(r), st->P("b." + ms));
          elu_row(z.row(r));
        }
        DenseMatrix t = matmul(z, st->P("sem.W"));
        for (std::size_t r = 0; r < t.rows(); ++r) {
          add_bias_row(t.row(r), st->P("sem.b"));
          for (double& v : t.row(r)) v = std::tanh(v);
        }
        st->input_proj.push_back(std::move(p));
        st->hidden.push_back(std::move(z));
        st->han_t.push_back(std::move(t));
      }
      break;
    }
    case Architecture::Rgcn: {
      const auto& schema = base.schema();
      for (std::size_t r = 0; r < schema.relations.size(); ++r) {
        const auto& rel = schema.relations[r];
        const auto rid = static_cast<RelationId>(r);
        st->messages.push_back({rid, false, rel.src, rel.dst, std::to_string(r) + ".fwd"});
        st->messages.push_back({rid, true, rel.dst, rel.src, std::to_string(r) + ".rev"});
      }
      const GraphInputs inputs = prepare_inputs(cfg, base);
      for (std::size_t t = 0; t < schema.node_types.size(); ++t) {
        const std::string ts = std::to_string(t);
        st->self1.push_back(matmul(base.features(static_cast<NodeTypeId>(t)), st->P("self1." + ts)));
      }
      for (const auto& msg : st->messages) {
        st->msg1.push_back(matmul(base.features(msg.from), st->P("msg1." + msg.suffix)));
      }
      for (std::size_t t = 0; t < schema.node_types.size(); ++t) {
        DenseMatrix acc = st->self1[t];
        for (std::size_t r = 0; r < acc.rows(); ++r) add_bias_row(acc.row(r), st->P("bias1." + std::to_string(t)));
        for (std::size_t k = 0; k < st->messages.size(); ++k) {
          if (st->messages[k].to != t) continue;
          const DenseMatrix s = spmm(inputs.messages[k].mean, st->msg1[k]);
          auto dst = acc.values();
          auto src = s.values();
          for (std::size_t i = 0; i < dst.size(); ++i) dst[i] += src[i];
        }
        for (double& v : acc.values()) v = v > 0.0 ? v : 0.0;
        st->h1.push_back(std::move(acc));
      }
      st->self2 = matmul(st->h1[target], st->P("self2"));
      DenseMatrix acc = st->self2;
      for (std::size_t r = 0; r < acc.rows(); ++r) add_bias_row(acc.row(r), st->P("bias2"));
      for (std::size_t k = 0; k < st->messages.size(); ++k) {
        const auto& msg = st->messages[k];
        if (msg.to != target) {
          st->msg2.emplace_back();
          continue;
        }
        st->msg2.push_back(matmul(st->h1[msg.from], st->P("msg2." + msg.suffix)));
        const DenseMatrix s = spmm(inputs.messages[k].mean, st->msg2[k]);
        auto dst = acc.values();
        auto src = s.values();
        for (std::size_t i = 0; i < dst.size(); ++i) dst[i] += src[i];
      }
      for (double& v : acc.values()) v = v > 0.0 ? v : 0.0;
      st->h2 = std::move(acc);
      break;
    }
  }
  state_ = std::move(st);
}

DenseMatrix DeltaInference::logits(const HeteroGraph& graph) const {
  const State& st = *state_;
  const GraphDiff d = diff_graphs(st.base, graph);
  if (!d.compatible) return forward(st.model, graph);
  const NodeTypeId target = graph.target_type();
  const auto& cfg = st.model.config;
  const std::size_t n = d.new_counts[target];
  const DenseMatrix& x = graph.features(target);
  const Rows& dirty_x = d.dirty_rows[target];

  switch (cfg.arch) {
    case Architecture::Gcn: {
      const Projection& pr = st.projections[0];
      const auto o = pr.overlay(graph, d);
      DenseMatrix p1 = extend_rows(st.input_proj[0], n);
      gemm_rows(p1, x, dirty_x, st.P("W1"));
      const Rows r1 = pr.readers(o, dirty_x);
      DenseMatrix h1 = extend_rows(st.hidden[0], n);
      for (std::uint32_t i : r1) {
        pr.propagate_row(o, i, p1, h1.row(i));
        add_bias_row(h1.row(i), st.P("b1"));
        relu_row(h1.row(i));
      }
      DenseMatrix p2 = extend_rows(st.gcn_p2, n);
      gemm_rows(p2, h1, r1, st.P("W2"));
      const Rows r2 = pr.readers(o, r1);
      DenseMatrix h2 = extend_rows(st.gcn_h2, n);
      for (std::uint32_t i : r2) {
        pr.propagate_row(o, i, p2, h2.row(i));
        add_bias_row(h2.row(i), st.P("b2"));
        relu_row(h2.row(i));
      }
      DenseMatrix out = extend_rows(st.logits, n);
      gemm_rows(out, h2, r2, st.P("Wc"));
      for (std::uint32_t i : r2) add_bias_row(out.row(i), st.P("bc"));
      return out;
    }
    case Architecture::Han: {
      const std::size_t mcount = st.projections.size();
      std::vector<DenseMatrix> z(mcount);
      std::vector<double> scores(mcount);
      for (std::size_t m = 0; m < mcount; ++m) {
        const std::string ms = std::to_string(m);
        const Projection& pr = st.projections[m];
        const auto o = pr.overlay(graph, d);
        DenseMatrix p = extend_rows(st.input_proj[m], n);
        gemm_rows(p, x, dirty_x, st.P("W." + ms));
        const Rows rows = pr.readers(o, dirty_x);
        z[m] = extend_rows(st.hidden[m], n);
        for (std::uint32_t i : rows) {
          pr.propagate_row(o, i, p, z[m].row(i));
          add_bias_row(z[m].row(i), st.P("b." + ms));
          elu_row(z[m].row(i));
        }
        DenseMatrix t = extend_rows(st.han_t[m], n);
        gemm_rows(t, z[m], rows, st.P("sem.W"));
        for (std::uint32_t i : rows) {
          add_bias_row(t.row(i), st.P("sem.b"));
          for (double& v : t.row(i)) v = std::tanh(v);
        }
        DenseMatrix mean(1, t.cols());
        const double inv = 1.0 / static_cast<double>(t.rows());
        for (std::size_t r = 0; r < t.rows(); ++r) {
          auto row = t.row(r);
          for (std::size_t j = 0; j < row.size(); ++j) mean(0, j) += row[j];
        }
        for (double& v : mean.values()) v *= inv;
        scores[m] = matmul(mean, st.P("sem.q"))(0, 0);
      }
      DenseMatrix s(1, mcount);
      for (std::size_t m = 0; m < mcount; ++m) s(0, m) = scores[m];
      const DenseMatrix beta = softmax_rows(s);
      DenseMatrix h = z[0];
      for (double& v : h.values()) v *= beta(0, 0);
      for (std::size_t m = 1; m < mcount; ++m) {
        auto dst = h.values();
        auto src = z[m].values();
        const double k = beta(0, m);
        for (std::size_t i = 0; i < dst.size(); ++i) dst[i] += src[i] * k;
      }
      return head(h, st.P("Wc"), st.P("bc"));
    }
    case Architecture::Rgcn: {
      const auto& schema = graph.schema();
      const std::size_t types = schema.node_types.size();
      // Receivers whose mean-aggregation row changed, per message.
      std::vector<Rows> msg_dirty(st.messages.size());
      for (std::size_t k = 0; k < st.messages.size(); ++k) {
        const auto& msg = st.messages[k];
        for (const Edge& e : d.added_edges[msg.relation]) msg_dirty[k].push_back(msg.reverse ? e.first : e.second);
        for (std::size_t u = d.old_counts[msg.to]; u < d.new_counts[msg.to]; ++u) {
          msg_dirty[k].push_back(static_cast<std::uint32_t>(u));
        }
        normalize_rows(msg_dirty[k]);
      }
      auto mean_adj = [&](const Message& msg) -> const SparseMatrix& {
        return graph.adjacency(msg.relation, !msg.reverse);
      };
      auto receivers = [&](const Message& msg, const Rows& senders) {
        Rows out;
        const SparseMatrix& fwd = graph.adjacency(msg.relation, msg.reverse);
        for (std::uint32_t j : senders) {
          auto idx = fwd.row_indices(j);
          out.insert(out.end(), idx.begin(), idx.end());
        }
        return out;
      };
      auto aggregate_row = [&](const Message& msg, std::uint32_t i, const DenseMatrix& in, std::span<double> out) {
        const SparseMatrix& a = mean_adj(msg);
        auto idx = a.row_indices(i);
        auto val = a.row_values(i);
        double deg = 0.0;
        for (double v : val) deg += v;
        std::vector<double> w(idx.size());
        for (std::size_t k = 0; k < idx.size(); ++k) w[k] = deg == 0.0 ? 0.0 : val[k] / deg;
        std::vector<double> tmp(out.size());
        if (deg != 0.0) spmm_row(tmp, idx, w, in);
        for (std::size_t j = 0; j < out.size(); ++j) out[j] += tmp[j];
      };

      std::vector<DenseMatrix> msg1(st.messages.size());
      for (std::size_t k = 0; k < st.messages.size(); ++k) {
        const auto& msg = st.messages[k];
        msg1[k] = extend_rows(st.msg1[k], d.new_counts[msg.from]);
        gemm_rows(msg1[k], graph.features(msg.from), d.dirty_rows[msg.from], st.P("msg1." + msg.suffix));
      }
      std::vector<DenseMatrix> h1(types);
      std::vector<Rows> h1_dirty(types);
      for (std::size_t t = 0; t < types; ++t) {
        const std::string ts = std::to_string(t);
        DenseMatrix self = extend_rows(st.self1[t], d.new_counts[t]);
        gemm_rows(self, graph.features(static_cast<NodeTypeId>(t)), d.dirty_rows[t], st.P("self1." + ts));
        Rows rows = d.dirty_rows[t];
        for (std::size_t k = 0; k < st.messages.size(); ++k) {
          const auto& msg = st.messages[k];
          if (msg.to != t) continue;
          rows.insert(rows.end(), msg_dirty[k].begin(), msg_dirty[k].end());
          const Rows rec = receivers(msg, d.dirty_rows[msg.from]);
          rows.insert(rows.end(), rec.begin(), rec.end());
        }
        normalize_rows(rows);
        h1[t] = extend_rows(st.h1[t], d.new_counts[t]);
        for (std::uint32_t i : rows) {
          auto out = h1[t].row(i);
          auto s = self.row(i);
          std::copy(s.begin(), s.end(), out.begin());
          add_bias_row(out, st.P("bias1." + ts));
          for (std::size_t k = 0; k < st.messages.size(); ++k) {
            if (st.messages[k].to == t) aggregate_row(st.messages[k], i, msg1[k], out);
          }
          relu_row(out);
        }
        h1_dirty[t] = std::move(rows);
      }
      DenseMatrix self2 = extend_rows(st.self2, n);
      gemm_rows(self2, h1[target], h1_dirty[target], st.P("self2"));
      Rows rows = h1_dirty[target];
      std::vector<DenseMatrix> msg2(st.messages.size());
      for (std::size_t k = 0; k < st.messages.size(); ++k) {
        const auto& msg = st.messages[k];
        if (msg.to != target) continue;
        msg2[k] = extend_rows(st.msg2[k], d.new_counts[msg.from]);
        gemm_rows(msg2[k], h1[msg.from], h1_dirty[msg.from], st.P("msg2." + msg.suffix));
        rows.insert(rows.end(), msg_dirty[k].begin(), msg_dirty[k].end());
        const Rows rec = receivers(msg, h1_dirty[msg.from]);
        rows.insert(rows.end(), rec.begin(), rec.end());
      }
      normalize_rows(rows);
      DenseMatrix h2 = extend_rows(st.h2, n);
      for (std::uint32_t i : rows) {
        auto out = h2.row(i);
        auto s = self2.row(i);
        std::copy(s.begin(), s.end(), out.begin());
        add_bias_row(out, st.P("bias2"));
        for (std::size_t k = 0; k < st.messages.size(); ++k) {
          if (st.messages[k].to == target) aggregate_row(st.messages[k], i, msg2[k], out);
        }
        relu_row(out);
      }
      DenseMatrix out = extend_rows(st.logits, n);
      gemm_rows(out, h2, rows, st.P("Wc"));
      for (std::uint32_t i : rows) add_bias_row(out.row(i), st.P("bc"));
      return out;
    }
  }
  throw Error("inference: unknown architecture");
}

std::vector<int> DeltaInference::predict(const HeteroGraph& graph) const {
  const DenseMatrix z = logits(graph);
  std::vector<int> pred(z.rows());
  for (std::size_t r = 0; r < z.rows(); ++r) {
    auto row = z.row(r);
    pred[r] = static_cast<int>(std::max_element(row.begin(), row.end()) - row.begin());
  }
  return pred;
}

}  // namespace hgba
