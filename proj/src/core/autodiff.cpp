#include "hgba/autodiff.hpp"

#include <algorithm>
#include <cmath>
#include <memory>
#include <numeric>
#include <random>
#include <string>

#include "hgba/error.hpp"

namespace hgba {

const DenseMatrix& Var::value() const { return tape_->nodes_[id_].value; }

const DenseMatrix& Var::grad() const { return tape_->grad_slot(*this); }

Var Tape::push(DenseMatrix value, bool needs_grad, BackwardFn backward) {
  Node node;
  node.value = std::move(value);
  node.needs_grad = needs_grad;
  node.backward = std::move(backward);
  nodes_.push_back(std::move(node));
  return Var(this, nodes_.size() - 1);
}

Var Tape::record(DenseMatrix value, std::span<const Var> parents, BackwardFn backward) {
  bool needs = false;
  for (const Var& p : parents) {
    if (p.tape_ != this) throw Error("autodiff: operand recorded on a different tape");
    needs = needs || nodes_[p.id_].needs_grad;
  }
  return push(std::move(value), needs, needs ? std::move(backward) : BackwardFn{});
}

DenseMatrix& Tape::grad_slot(Var v) {
  Node& n = nodes_[v.id_];
  if (n.grad.rows() != n.value.rows() || n.grad.cols() != n.value.cols()) {
    n.grad = DenseMatrix(n.value.rows(), n.value.cols());
  }
  return n.grad;
}

void Tape::accumulate(Var v, const DenseMatrix& g) {
  if (!nodes_[v.id_].needs_grad) return;
  DenseMatrix& slot = grad_slot(v);
  if (slot.rows() != g.rows() || slot.cols() != g.cols()) throw ShapeError("autodiff: gradient shape mismatch");
  auto dst = slot.values();
  auto src = g.values();
  for (std::size_t i = 0; i < dst.size(); ++i) dst[i] += src[i];
}

void Tape::backward(Var out) {
  if (out.tape_ != this) throw Error("backward: output recorded on a different tape");
  if (out.rows() != 1 || out.cols() != 1) throw ShapeError("backward: output must be 1x1");
  for (auto& n : nodes_) n.grad = DenseMatrix();
  grad_slot(out)(0, 0) = 1.0;
  for (std::size_t i = out.id_ + 1; i-- > 0;) {
    Node& n = nodes_[i];
    if (!n.needs_grad || !n.backward || n.grad.empty()) continue;
    n.backward(*this, n.grad);
  }
}

namespace ad {
namespace {

void require_same_shape(const char* op, Var a, Var b) {
  if (a.rows() != b.rows() || a.cols() != b.cols()) {
    throw ShapeError(std::string(op) + ": shape mismatch " + std::to_string(a.rows()) + "x" +
                     std::to_string(a.cols()) + " vs " + std::to_string(b.rows()) + "x" + std::to_string(b.cols()));
  }
}

}  // namespace

Var matmul(Var a, Var b) {
  Tape& t = *a.tape();
  const Var parents[] = {a, b};
  return t.record(hgba::matmul(a.value(), b.value()), parents, [a, b](Tape& tp, const DenseMatrix& g) {
    if (tp.needs_grad(a)) tp.accumulate(a, matmul_nt(g, b.value()));
    if (tp.needs_grad(b)) tp.accumulate(b, matmul_tn(a.value(), g));
  });
}

Var spmm(const SparseMatrix& a, Var b) {
  Tape& t = *b.tape();
  const Var parents[] = {b};
  auto ap = std::make_shared<const SparseMatrix>(a);
  return t.record(hgba::spmm(a, b.value()), parents,
                  [ap, b](Tape& tp, const DenseMatrix& g) { tp.accumulate(b, spmm_tn(*ap, g)); });
}

Var add_bias(Var x, Var bias) {
  if (bias.rows() != 1 || bias.cols() != x.cols()) throw ShapeError("add_bias: bias must be 1 x cols");
  DenseMatrix y = x.value();
  const auto b = bias.value().row(0);
  for (std::size_t r = 0; r < y.rows(); ++r) {
    auto row = y.row(r);
    for (std::size_t j = 0; j < row.size(); ++j) row[j] += b[j];
  }
  const Var parents[] = {x, bias};
  return x.tape()->record(std::move(y), parents, [x, bias](Tape& tp, const DenseMatrix& g) {
    tp.accumulate(x, g);
    if (tp.needs_grad(bias)) {
      DenseMatrix gb(1, g.cols());
      for (std::size_t r = 0; r < g.rows(); ++r) {
        auto row = g.row(r);
        for (std::size_t j = 0; j < row.size(); ++j) gb(0, j) += row[j];
      }
      tp.accumulate(bias, gb);
    }
  });
}

Var add(Var a, Var b) {
  require_same_shape("add", a, b);
  DenseMatrix y = a.value();
  auto dst = y.values();
  auto src = b.value().values();
  for (std::size_t i = 0; i < dst.size(); ++i) dst[i] += src[i];
  const Var parents[] = {a, b};
  return a.tape()->record(std::move(y), parents, [a, b](Tape& tp, const DenseMatrix& g) {
    tp.accumulate(a, g);
    tp.accumulate(b, g);
  });
}

Var relu(Var x) {
  DenseMatrix y = x.value();
  for (double& v : y.values()) v = v > 0.0 ? v : 0.0;
  const Var parents[] = {x};
  return x.tape()->record(std::move(y), parents, [x](Tape& tp, const DenseMatrix& g) {
    DenseMatrix gx = g;
    auto in = x.value().values();
    auto out = gx.values();
    for (std::size_t i = 0; i < out.size(); ++i) {
      if (in[i] <= 0.0) out[i] = 0.0;
    }
    tp.accumulate(x, gx);
  });
}

Var elu(Var x, double alpha) {
  DenseMatrix y = x.value();
  for (double& v : y.values()) v = v > 0.0 ? v : alpha * std::expm1(v);
  const Var parents[] = {x};
  return x.tape()->record(std::move(y), parents, [x, alpha](Tape& tp, const DenseMatrix& g) {
    DenseMatrix gx = g;
    auto in = x.value().values();
    auto out = gx.values();
    for (std::size_t i = 0; i < out.size(); ++i) {
      if (in[i] <= 0.0) out[i] *= alpha * std::exp(in[i]);
    }
    tp.accumulate(x, gx);
  });
}

Var tanh(Var x) {
  DenseMatrix y = x.value();
  for (double& v : y.values()) v = std::tanh(v);
  const Var parents[] = {x};
  DenseMatrix y_copy = y;
  return x.tape()->record(std::move(y), parents, [x, y = std::move(y_copy)](Tape& tp, const DenseMatrix& g) {
    DenseMatrix gx = g;
    auto out = gx.values();
    auto yv = y.values();
    for (std::size_t i = 0; i < out.size(); ++i) out[i] *= 1.0 - yv[i] * yv[i];
    tp.accumulate(x, gx);
  });
}

Var softmax_rows(Var x) {
  const Var parents[] = {x};
  Tape& t = *x.tape();
  DenseMatrix y = hgba::softmax_rows(x.value());
  DenseMatrix y_copy = y;
  return t.record(std::move(y), parents, [x, y = std::move(y_copy)](Tape& tp, const DenseMatrix& g) {
    DenseMatrix gx(g.rows(), g.cols());
    for (std::size_t r = 0; r < g.rows(); ++r) {
      auto yr = y.row(r);
      auto gr = g.row(r);
      double dot = 0.0;
      for (std::size_t j = 0; j < yr.size(); ++j) dot += yr[j] * gr[j];
      auto out = gx.row(r);
      for (std::size_t j = 0; j < yr.size(); ++j) out[j] = yr[j] * (gr[j] - dot);
    }
    tp.accumulate(x, gx);
  });
}

Var concat_cols(std::span<const Var> parts) {
  if (parts.empty()) throw ShapeError("concat_cols: no operands");
  std::vector<DenseMatrix> values;
  values.reserve(parts.size());
  for (const Var& p : parts) values.push_back(p.value());
  std::vector<Var> owned(parts.begin(), parts.end());
  return parts.front().tape()->record(hgba::concat_cols(values), parts, [owned](Tape& tp, const DenseMatrix& g) {
    std::size_t offset = 0;
    for (const Var& p : owned) {
      const std::size_t c = p.cols();
      if (tp.needs_grad(p)) {
        DenseMatrix gp(g.rows(), c);
        for (std::size_t r = 0; r < g.rows(); ++r) {
          auto src = g.row(r).subspan(offset, c);
          std::copy(src.begin(), src.end(), gp.row(r).begin());
        }
        tp.accumulate(p, gp);
      }
      offset += c;
    }
  });
}

Var mul_const(Var x, const DenseMatrix& mask) {
  if (mask.rows() != x.rows() || mask.cols() != x.cols()) throw ShapeError("mul_const: mask shape mismatch");
  DenseMatrix y = x.value();
  auto dst = y.values();
  auto m = mask.values();
  for (std::size_t i = 0; i < dst.size(); ++i) dst[i] *= m[i];
  const Var parents[] = {x};
  return x.tape()->record(std::move(y), parents, [x, mask](Tape& tp, const DenseMatrix& g) {
    DenseMatrix gx = g;
    auto dst = gx.values();
    auto m = mask.values();
    for (std::size_t i = 0; i < dst.size(); ++i) dst[i] *= m[i];
    tp.accumulate(x, gx);
  });
}

Var mean_rows(Var x) {
  if (x.rows() == 0) throw ShapeError("mean_rows: no rows");
  DenseMatrix y(1, x.cols());
  const double inv = 1.0 / static_cast<double>(x.rows());
  for (std::size_t r = 0; r < x.rows(); ++r) {
    auto row = x.value().row(r);
    for (std::size_t j = 0; j < row.size(); ++j) y(0, j) += row[j];
  }
  for (double& v : y.values()) v *= inv;
  const Var parents[] = {x};
  return x.tape()->record(std::move(y), parents, [x, inv](Tape& tp, const DenseMatrix& g) {
    DenseMatrix gx(x.rows(), x.cols());
    for (std::size_t r = 0; r < gx.rows(); ++r) {
      auto row = gx.row(r);
      for (std::size_t j = 0; j < row.size(); ++j) row[j] = g(0, j) * inv;
    }
    tp.accumulate(x, gx);
  });
}

Var element(Var x, std::size_t r, std::size_t c) {
  if (r >= x.rows() || c >= x.cols()) throw ShapeError("element: index out of range");
  const Var parents[] = {x};
  return x.tape()->record(DenseMatrix(1, 1, x.value()(r, c)), parents, [x, r, c](Tape& tp, const DenseMatrix& g) {
    DenseMatrix gx(x.rows(), x.cols());
    gx(r, c) = g(0, 0);
    tp.accumulate(x, gx);
  });
}

Var scale(Var x, Var s) {
  if (s.rows() != 1 || s.cols() != 1) throw ShapeError("scale: scalar operand must be 1x1");
  const double k = s.value()(0, 0);
  DenseMatrix y = x.value();
  for (double& v : y.values()) v *= k;
  const Var parents[] = {x, s};
  return x.tape()->record(std::move(y), parents, [x, s, k](Tape& tp, const DenseMatrix& g) {
    if (tp.needs_grad(x)) {
      DenseMatrix gx = g;
      for (double& v : gx.values()) v *= k;
      tp.accumulate(x, gx);
    }
    if (tp.needs_grad(s)) {
      double dot = 0.0;
      auto gv = g.values();
      auto xv = x.value().values();
      for (std::size_t i = 0; i < gv.size(); ++i) dot += gv[i] * xv[i];
      tp.accumulate(s, DenseMatrix(1, 1, dot));
    }
  });
}

Var sum_squares(Var x) {
  double total = 0.0;
  for (double v : x.value().values()) total += v * v;
  const Var parents[] = {x};
  return x.tape()->record(DenseMatrix(1, 1, total), parents, [x](Tape& tp, const DenseMatrix& g) {
    DenseMatrix gx = x.value();
    for (double& v : gx.values()) v *= 2.0 * g(0, 0);
    tp.accumulate(x, gx);
  });
}

Var masked_cross_entropy(Var logits, std::span<const int> labels, std::span<const std::uint32_t> mask) {
  const double loss = hgba::masked_cross_entropy(logits.value(), labels, mask);
  std::vector<int> lab(labels.begin(), labels.end());
  std::vector<std::uint32_t> rows(mask.begin(), mask.end());
  const Var parents[] = {logits};
  return logits.tape()->record(
      DenseMatrix(1, 1, loss), parents,
      [logits, lab = std::move(lab), rows = std::move(rows)](Tape& tp, const DenseMatrix& g) {
        const DenseMatrix& z = logits.value();
        DenseMatrix gz(z.rows(), z.cols());
        const double w = g(0, 0) / static_cast<double>(rows.size());
        for (std::uint32_t r : rows) {
          auto zr = z.row(r);
          const double mx = *std::max_element(zr.begin(), zr.end());
          double sum = 0.0;
          for (double v : zr) sum += std::exp(v - mx);
          auto out = gz.row(r);
          for (std::size_t j = 0; j < zr.size(); ++j) out[j] += w * std::exp(zr[j] - mx) / sum;
          out[static_cast<std::size_t>(lab[r])] -= w;
        }
        tp.accumulate(logits, gz);
      });
}

}  // namespace ad

double masked_cross_entropy(const DenseMatrix& logits, std::span<const int> labels,
                            std::span<const std::uint32_t> mask) {
  if (mask.empty()) throw ValidationError("masked_cross_entropy: empty mask");
  if (labels.size() != logits.rows()) throw ShapeError("masked_cross_entropy: one label per logits row required");
  double total = 0.0;
  for (std::uint32_t r : mask) {
    if (r >= logits.rows()) throw ShapeError("masked_cross_entropy: mask row out of range");
    const int y = labels[r];
    if (y < 0 || static_cast<std::size_t>(y) >= logits.cols()) {
      throw ValidationError("masked_cross_entropy: invalid label on masked row " + std::to_string(r));
    }
    auto zr = logits.row(r);
    const double mx = *std::max_element(zr.begin(), zr.end());
    double sum = 0.0;
    for (double v : zr) sum += std::exp(v - mx);
    total += -(zr[static_cast<std::size_t>(y)] - mx - std::log(sum));
  }
  return total / static_cast<double>(mask.size());
}

double grad_check(const RecordedFn& f, std::span<const DenseMatrix> params, const GradCheckOptions& opts) {
  std::vector<DenseMatrix> analytic;
  {
    Tape tape;
    std::vector<Var> leaves;
    for (const auto& p : params) leaves.push_back(tape.leaf(p));
    Var out = f(tape, leaves);
    if (!out.value().all_finite()) throw PipelineError("grad_check: function is not finite at the parameters");
    tape.backward(out);
    for (const Var& l : leaves) analytic.push_back(l.grad());
  }

  auto evaluate = [&](const std::vector<DenseMatrix>& ps) {
    Tape tape;
    std::vector<Var> leaves;
    for (const auto& p : ps) leaves.push_back(tape.constant(p));
    const double v = f(tape, leaves).value()(0, 0);
    if (!std::isfinite(v)) throw PipelineError("grad_check: function is not finite near the parameters");
    return v;
  };

  std::vector<std::pair<std::size_t, std::size_t>> coords;
  for (std::size_t p = 0; p < params.size(); ++p) {
    for (std::size_t i = 0; i < params[p].size(); ++i) coords.emplace_back(p, i);
  }
  if (coords.size() > opts.max_coords) {
    std::mt19937_64 rng(opts.seed);
    std::shuffle(coords.begin(), coords.end(), rng);
    coords.resize(opts.max_coords);
  }

  std::vector<DenseMatrix> work(params.begin(), params.end());
  double worst = 0.0;
  for (const auto& [p, i] : coords) {
    const double orig = work[p].values()[i];
    work[p].values()[i] = orig + opts.eps;
    const double up = evaluate(work);
    work[p].values()[i] = orig - opts.eps;
    const double down = evaluate(work);
    work[p].values()[i] = orig;
    const double numeric = (up - down) / (2.0 * opts.eps);
    const double a = analytic[p].values()[i];
    const double denom = std::max({std::abs(a), std::abs(numeric), opts.floor});
    worst = std::max(worst, std::abs(a - numeric) / denom);
  }
  return worst;
}

}  // namespace hgba
