#pragma once

#include <cstddef>
#include <cstdint>
#include <initializer_list>
#include <span>
#include <utility>
#include <vector>

namespace hgba {

/// Row-major dense matrix of doubles.
class DenseMatrix {
 public:
  DenseMatrix() = default;
  DenseMatrix(std::size_t rows, std::size_t cols, double fill = 0.0)
      : rows_(rows), cols_(cols), data_(rows * cols, fill) {}

  static DenseMatrix from_rows(std::initializer_list<std::initializer_list<double>> rows);
  static DenseMatrix identity(std::size_t n);

  std::size_t rows() const { return rows_; }
  std::size_t cols() const { return cols_; }
  std::size_t size() const { return data_.size(); }
  bool empty() const { return data_.empty(); }

  double& operator()(std::size_t r, std::size_t c) { return data_[r * cols_ + c]; }
  double operator()(std::size_t r, std::size_t c) const { return data_[r * cols_ + c]; }

  std::span<double> row(std::size_t r) { return {data_.data() + r * cols_, cols_}; }
  std::span<const double> row(std::size_t r) const { return {data_.data() + r * cols_, cols_}; }

  std::span<double> values() { return data_; }
  std::span<const double> values() const { return data_; }

  bool all_finite() const;

  /// Appends one row; `values.size()` must equal cols() (or set cols when empty).
  void append_row(std::span<const double> values);

  friend bool operator==(const DenseMatrix&, const DenseMatrix&) = default;

 private:
  std::size_t rows_ = 0;
  std::size_t cols_ = 0;
  std::vector<double> data_;
};

struct Triplet {
  std::uint32_t row;
  std::uint32_t col;
  double value;
};

/// Compressed sparse row matrix. Column indices are strictly increasing per row.
class SparseMatrix {
 public:
  SparseMatrix() : offsets_(1, 0) {}

  /// Duplicate coordinates are summed.
  static SparseMatrix from_triplets(std::size_t rows, std::size_t cols, std::vector<Triplet> entries);
  /// 0/1 pattern from coordinate pairs; duplicates collapse to a single entry.
  static SparseMatrix from_pattern(std::size_t rows, std::size_t cols,
                                   std::span<const std::pair<std::uint32_t, std::uint32_t>> pairs);
  static SparseMatrix identity(std::size_t n);

  std::size_t rows() const { return rows_; }
  std::size_t cols() const { return cols_; }
  std::size_t nnz() const { return indices_.size(); }

  std::span<const std::uint32_t> row_indices(std::size_t r) const {
    return {indices_.data() + offsets_[r], offsets_[r + 1] - offsets_[r]};
  }
  std::span<const double> row_values(std::size_t r) const {
    return {values_.data() + offsets_[r], offsets_[r + 1] - offsets_[r]};
  }
  std::span<const std::size_t> offsets() const { return offsets_; }
  std::span<const std::uint32_t> indices() const { return indices_; }
  std::span<const double> values() const { return values_; }

  bool contains(std::size_t r, std::size_t c) const;
  double at(std::size_t r, std::size_t c) const;
  bool is_symmetric() const;

  SparseMatrix transpose() const;
  DenseMatrix to_dense() const;

  friend bool operator==(const SparseMatrix&, const SparseMatrix&) = default;

 private:
  friend SparseMatrix bool_product(const SparseMatrix&, const SparseMatrix&);
  friend SparseMatrix drop_diagonal(const SparseMatrix&);

  std::size_t rows_ = 0;
  std::size_t cols_ = 0;
  std::vector<std::size_t> offsets_;
  std::vector<std::uint32_t> indices_;
  std::vector<double> values_;
};

// Plain (untaped) kernels. All throw ShapeError on incompatible operands.

DenseMatrix matmul(const DenseMatrix& a, const DenseMatrix& b);
/// a^T * b without materialising the transpose.
DenseMatrix matmul_tn(const DenseMatrix& a, const DenseMatrix& b);
/// a * b^T without materialising the transpose.
DenseMatrix matmul_nt(const DenseMatrix& a, const DenseMatrix& b);
DenseMatrix spmm(const SparseMatrix& a, const DenseMatrix& b);
/// a^T * b for sparse a.
DenseMatrix spmm_tn(const SparseMatrix& a, const DenseMatrix& b);
DenseMatrix softmax_rows(const DenseMatrix& x);
DenseMatrix concat_cols(std::span<const DenseMatrix> parts);

/// Boolean product: entry set iff some k has a(i,k) != 0 and b(k,j) != 0; values are 1.
SparseMatrix bool_product(const SparseMatrix& a, const SparseMatrix& b);
/// Removes diagonal entries of a square matrix.
SparseMatrix drop_diagonal(const SparseMatrix& a);

/// D^{-1/2} (A [+ I]) D^{-1/2}. Zero-degree rows stay zero.
SparseMatrix sym_normalize(const SparseMatrix& adj, bool add_self_loops);
/// D^{-1} A (mean aggregation). Zero-degree rows stay zero.
SparseMatrix row_normalize(const SparseMatrix& adj);

}  // namespace hgba
