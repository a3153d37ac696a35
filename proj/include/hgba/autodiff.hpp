#pragma once

#include <cstddef>
#include <cstdint>
#include <deque>
#include <functional>
#include <span>
#include <vector>

#include "hgba/matrix.hpp"

namespace hgba {

class Tape;

/// Handle to a value recorded on a Tape. Cheap to copy; valid while the tape lives.
class Var {
 public:
  Var() = default;

  const DenseMatrix& value() const;
  /// Gradient accumulated by the last Tape::backward; zero matrix if none reached this node.
  const DenseMatrix& grad() const;
  std::size_t rows() const { return value().rows(); }
  std::size_t cols() const { return value().cols(); }

  Tape* tape() const { return tape_; }
  std::size_t id() const { return id_; }

 private:
  friend class Tape;
  Var(Tape* tape, std::size_t id) : tape_(tape), id_(id) {}

  Tape* tape_ = nullptr;
  std::size_t id_ = 0;
};

/// Reverse-mode recorder. Nodes are appended in evaluation order, so the
/// recording order is a topological order and backward() walks it in reverse.
/// Single-threaded; one tape per training step or inference call.
class Tape {
 public:
  Tape() = default;
  Tape(const Tape&) = delete;
  Tape& operator=(const Tape&) = delete;

  /// Trainable input.
  Var leaf(DenseMatrix value) { return push(std::move(value), true, {}); }
  /// Non-trainable input; receives no gradient.
  Var constant(DenseMatrix value) { return push(std::move(value), false, {}); }

  /// Seeds d(out)/d(out) = 1 for a 1x1 output and propagates to every recorded node.
  void backward(Var out);

  std::size_t size() const { return nodes_.size(); }

  // Used by operation implementations.
  using BackwardFn = std::function<void(Tape&, const DenseMatrix& grad_out)>;
  Var record(DenseMatrix value, std::span<const Var> parents, BackwardFn backward);
  bool needs_grad(Var v) const { return nodes_[v.id_].needs_grad; }
  /// Adds `g` into the gradient slot of `v` (no-op for constants).
  void accumulate(Var v, const DenseMatrix& g);
  DenseMatrix& grad_slot(Var v);

 private:
  friend class Var;
  struct Node {
    DenseMatrix value;
    DenseMatrix grad;
    BackwardFn backward;
    bool needs_grad = false;
  };

  Var push(DenseMatrix value, bool needs_grad, BackwardFn backward);

  std::deque<Node> nodes_;
};

/// Differentiable operations. Every operand must live on the same tape.
namespace ad {

Var matmul(Var a, Var b);
/// Sparse operand is constant; the tape keeps its own copy.
Var spmm(const SparseMatrix& a, Var b);
/// Adds a 1 x cols bias row to every row.
Var add_bias(Var x, Var bias);
Var add(Var a, Var b);
Var relu(Var x);
Var elu(Var x, double alpha = 1.0);
Var tanh(Var x);
Var softmax_rows(Var x);
Var concat_cols(std::span<const Var> parts);
/// Elementwise product with a constant mask (dropout with pre-scaled mask).
Var mul_const(Var x, const DenseMatrix& mask);
/// Column means, producing 1 x cols.
Var mean_rows(Var x);
/// Single entry as a 1x1 value.
Var element(Var x, std::size_t r, std::size_t c);
/// x scaled by a 1x1 value.
Var scale(Var x, Var s);
/// Sum of squared entries, 1x1.
Var sum_squares(Var x);
/// Mean negative log-likelihood over `mask` rows; labels indexed by row. Throws on empty mask.
Var masked_cross_entropy(Var logits, std::span<const int> labels, std::span<const std::uint32_t> mask);

}  // namespace ad

/// Plain-value cross entropy with the same definition as ad::masked_cross_entropy.
double masked_cross_entropy(const DenseMatrix& logits, std::span<const int> labels,
                            std::span<const std::uint32_t> mask);

/// A scalar function of a parameter set, built on the supplied tape.
using RecordedFn = std::function<Var(Tape&, std::span<const Var> params)>;

struct GradCheckOptions {
  double eps = 1e-5;
  /// Coordinates sampled per call; all coordinates are checked when the total is smaller.
  std::size_t max_coords = 200;
  std::uint64_t seed = 0;
  /// Relative error denominator floor: |a - n| / max(|a|, |n|, floor).
  double floor = 1e-6;
};

/// Central finite differences vs tape gradients; returns worst relative error.
/// Throws PipelineError if f is non-finite at the supplied parameters.
double grad_check(const RecordedFn& f, std::span<const DenseMatrix> params, const GradCheckOptions& opts = {});

}  // namespace hgba
