#include "hgba/matrix.hpp"

#include <Eigen/Core>

#include <algorithm>
#include <cmath>
#include <numeric>
#include <string>

#include "hgba/error.hpp"

namespace hgba {
namespace {

using RowMajor = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using ConstMap = Eigen::Map<const RowMajor>;
using Map = Eigen::Map<RowMajor>;

ConstMap view(const DenseMatrix& m) {
  return ConstMap(m.values().data(), static_cast<Eigen::Index>(m.rows()),
                  static_cast<Eigen::Index>(m.cols()));
}

Map view(DenseMatrix& m) {
  return Map(m.values().data(), static_cast<Eigen::Index>(m.rows()), static_cast<Eigen::Index>(m.cols()));
}

std::string dims(std::size_t r, std::size_t c) { return std::to_string(r) + "x" + std::to_string(c); }

[[noreturn]] void shape_fail(const char* op, std::size_t ar, std::size_t ac, std::size_t br, std::size_t bc) {
  throw ShapeError(std::string(op) + ": incompatible shapes " + dims(ar, ac) + " and " + dims(br, bc));
}

}  // namespace

DenseMatrix DenseMatrix::from_rows(std::initializer_list<std::initializer_list<double>> rows) {
  DenseMatrix m;
  for (const auto& r : rows) m.append_row(std::vector<double>(r));
  return m;
}

DenseMatrix DenseMatrix::identity(std::size_t n) {
  DenseMatrix m(n, n);
  for (std::size_t i = 0; i < n; ++i) m(i, i) = 1.0;
  return m;
}

bool DenseMatrix::all_finite() const {
  return std::all_of(data_.begin(), data_.end(), [](double v) { return std::isfinite(v); });
}

void DenseMatrix::append_row(std::span<const double> values) {
  if (rows_ == 0 && cols_ == 0) cols_ = values.size();
  if (values.size() != cols_) shape_fail("append_row", rows_, cols_, 1, values.size());
  data_.insert(data_.end(), values.begin(), values.end());
  ++rows_;
}

SparseMatrix SparseMatrix::from_triplets(std::size_t rows, std::size_t cols, std::vector<Triplet> entries) {
  for (const auto& t : entries) {
    if (t.row >= rows || t.col >= cols) {
      throw ShapeError("from_triplets: entry (" + std::to_string(t.row) + "," + std::to_string(t.col) +
                       ") outside " + dims(rows, cols));
    }
  }
  std::sort(entries.begin(), entries.end(),
            [](const Triplet& a, const Triplet& b) { return a.row != b.row ? a.row < b.row : a.col < b.col; });
  SparseMatrix m;
  m.rows_ = rows;
  m.cols_ = cols;
  m.offsets_.assign(rows + 1, 0);
  for (std::size_t i = 0; i < entries.size(); ++i) {
    const auto& t = entries[i];
    if (!m.indices_.empty() && i > 0 && entries[i - 1].row == t.row && entries[i - 1].col == t.col) {
      m.values_.back() += t.value;
      continue;
    }
    m.indices_.push_back(t.col);
    m.values_.push_back(t.value);
    ++m.offsets_[t.row + 1];
  }
  std::partial_sum(m.offsets_.begin(), m.offsets_.end(), m.offsets_.begin());
  return m;
}

SparseMatrix SparseMatrix::from_pattern(std::size_t rows, std::size_t cols,
                                        std::span<const std::pair<std::uint32_t, std::uint32_t>> pairs) {
  std::vector<Triplet> entries;
  entries.reserve(pairs.size());
  for (const auto& [r, c] : pairs) entries.push_back({r, c, 1.0});
  SparseMatrix m = from_triplets(rows, cols, std::move(entries));
  std::fill(m.values_.begin(), m.values_.end(), 1.0);
  return m;
}

SparseMatrix SparseMatrix::identity(std::size_t n) {
  SparseMatrix m;
  m.rows_ = n;
  m.cols_ = n;
  m.offsets_.resize(n + 1);
  std::iota(m.offsets_.begin(), m.offsets_.end(), std::size_t{0});
  m.indices_.resize(n);
  std::iota(m.indices_.begin(), m.indices_.end(), std::uint32_t{0});
  m.values_.assign(n, 1.0);
  return m;
}

bool SparseMatrix::contains(std::size_t r, std::size_t c) const {
  if (r >= rows_) return false;
  auto idx = row_indices(r);
  return std::binary_search(idx.begin(), idx.end(), static_cast<std::uint32_t>(c));
}

double SparseMatrix::at(std::size_t r, std::size_t c) const {
  if (r >= rows_ || c >= cols_) throw ShapeError("SparseMatrix::at out of range");
  auto idx = row_indices(r);
  auto it = std::lower_bound(idx.begin(), idx.end(), static_cast<std::uint32_t>(c));
  if (it == idx.end() || *it != c) return 0.0;
  return row_values(r)[static_cast<std::size_t>(it - idx.begin())];
}

bool SparseMatrix::is_symmetric() const {
  if (rows_ != cols_) return false;
  for (std::size_t r = 0; r < rows_; ++r) {
    auto idx = row_indices(r);
    auto val = row_values(r);
    for (std::size_t k = 0; k < idx.size(); ++k) {
      if (at(idx[k], r) != val[k]) return false;
    }
  }
  return true;
}

SparseMatrix SparseMatrix::transpose() const {
  std::vector<Triplet> entries;
  entries.reserve(nnz());
  for (std::size_t r = 0; r < rows_; ++r) {
    auto idx = row_indices(r);
    auto val = row_values(r);
    for (std::size_t k = 0; k < idx.size(); ++k) entries.push_back({idx[k], static_cast<std::uint32_t>(r), val[k]});
  }
  return from_triplets(cols_, rows_, std::move(entries));
}

DenseMatrix SparseMatrix::to_dense() const {
  DenseMatrix d(rows_, cols_);
  for (std::size_t r = 0; r < rows_; ++r) {
    auto idx = row_indices(r);
    auto val = row_values(r);
    for (std::size_t k = 0; k < idx.size(); ++k) d(r, idx[k]) = val[k];
  }
  return d;
}

DenseMatrix matmul(const DenseMatrix& a, const DenseMatrix& b) {
  if (a.cols() != b.rows()) shape_fail("matmul", a.rows(), a.cols(), b.rows(), b.cols());
  DenseMatrix c(a.rows(), b.cols());
  if (c.empty() || a.cols() == 0) return c;
  view(c).noalias() = view(a) * view(b);
  return c;
}

DenseMatrix matmul_tn(const DenseMatrix& a, const DenseMatrix& b) {
  if (a.rows() != b.rows()) shape_fail("matmul_tn", a.rows(), a.cols(), b.rows(), b.cols());
  DenseMatrix c(a.cols(), b.cols());
  if (c.empty() || a.rows() == 0) return c;
  view(c).noalias() = view(a).transpose() * view(b);
  return c;
}

DenseMatrix matmul_nt(const DenseMatrix& a, const DenseMatrix& b) {
  if (a.cols() != b.cols()) shape_fail("matmul_nt", a.rows(), a.cols(), b.rows(), b.cols());
  DenseMatrix c(a.rows(), b.rows());
  if (c.empty() || a.cols() == 0) return c;
  view(c).noalias() = view(a) * view(b).transpose();
  return c;
}

DenseMatrix spmm(const SparseMatrix& a, const DenseMatrix& b) {
  if (a.cols() != b.rows()) shape_fail("spmm", a.rows(), a.cols(), b.rows(), b.cols());
  DenseMatrix c(a.rows(), b.cols());
  const std::size_t n = b.cols();
  for (std::size_t r = 0; r < a.rows(); ++r) {
    auto idx = a.row_indices(r);
    auto val = a.row_values(r);
    double* out = c.row(r).data();
    for (std::size_t k = 0; k < idx.size(); ++k) {
      const double v = val[k];
      const double* in = b.row(idx[k]).data();
      for (std::size_t j = 0; j < n; ++j) out[j] += v * in[j];
    }
  }
  return c;
}

DenseMatrix spmm_tn(const SparseMatrix& a, const DenseMatrix& b) {
  if (a.rows() != b.rows()) shape_fail("spmm_tn", a.rows(), a.cols(), b.rows(), b.cols());
  DenseMatrix c(a.cols(), b.cols());
  const std::size_t n = b.cols();
  for (std::size_t r = 0; r < a.rows(); ++r) {
    auto idx = a.row_indices(r);
    auto val = a.row_values(r);
    const double* in = b.row(r).data();
    for (std::size_t k = 0; k < idx.size(); ++k) {
      const double v = val[k];
      double* out = c.row(idx[k]).data();
      for (std::size_t j = 0; j < n; ++j) out[j] += v * in[j];
    }
  }
  return c;
}

DenseMatrix softmax_rows(const DenseMatrix& x) {
  DenseMatrix y(x.rows(), x.cols());
  for (std::size_t r = 0; r < x.rows(); ++r) {
    auto in = x.row(r);
    auto out = y.row(r);
    if (in.empty()) continue;
    const double mx = *std::max_element(in.begin(), in.end());
    double sum = 0.0;
    for (std::size_t j = 0; j < in.size(); ++j) {
      out[j] = std::exp(in[j] - mx);
      sum += out[j];
    }
    for (double& v : out) v /= sum;
  }
  return y;
}

DenseMatrix concat_cols(std::span<const DenseMatrix> parts) {
  if (parts.empty()) return {};
  const std::size_t rows = parts.front().rows();
  std::size_t cols = 0;
  for (const auto& p : parts) {
    if (p.rows() != rows) shape_fail("concat_cols", rows, cols, p.rows(), p.cols());
    cols += p.cols();
  }
  DenseMatrix out(rows, cols);
  for (std::size_t r = 0; r < rows; ++r) {
    std::size_t offset = 0;
    for (const auto& p : parts) {
      auto src = p.row(r);
      std::copy(src.begin(), src.end(), out.row(r).begin() + static_cast<std::ptrdiff_t>(offset));
      offset += p.cols();
    }
  }
  return out;
}

SparseMatrix bool_product(const SparseMatrix& a, const SparseMatrix& b) {
  if (a.cols() != b.rows()) shape_fail("bool_product", a.rows(), a.cols(), b.rows(), b.cols());
  SparseMatrix c;
  c.rows_ = a.rows();
  c.cols_ = b.cols();
  c.offsets_.assign(a.rows() + 1, 0);
  std::vector<std::uint32_t> stamp(b.cols(), 0);
  std::vector<std::uint32_t> row;
  for (std::size_t r = 0; r < a.rows(); ++r) {
    const auto mark = static_cast<std::uint32_t>(r + 1);
    row.clear();
    auto ai = a.row_indices(r);
    auto av = a.row_values(r);
    for (std::size_t k = 0; k < ai.size(); ++k) {
      if (av[k] == 0.0) continue;
      auto bi = b.row_indices(ai[k]);
      auto bv = b.row_values(ai[k]);
      for (std::size_t q = 0; q < bi.size(); ++q) {
        if (bv[q] == 0.0 || stamp[bi[q]] == mark) continue;
        stamp[bi[q]] = mark;
        row.push_back(bi[q]);
      }
    }
    std::sort(row.begin(), row.end());
    c.indices_.insert(c.indices_.end(), row.begin(), row.end());
    c.offsets_[r + 1] = c.indices_.size();
  }
  c.values_.assign(c.indices_.size(), 1.0);
  return c;
}

SparseMatrix drop_diagonal(const SparseMatrix& a) {
  if (a.rows() != a.cols()) shape_fail("drop_diagonal", a.rows(), a.cols(), a.cols(), a.rows());
  SparseMatrix c;
  c.rows_ = a.rows();
  c.cols_ = a.cols();
  c.offsets_.assign(a.rows() + 1, 0);
  for (std::size_t r = 0; r < a.rows(); ++r) {
    auto idx = a.row_indices(r);
    auto val = a.row_values(r);
    for (std::size_t k = 0; k < idx.size(); ++k) {
      if (idx[k] == r) continue;
      c.indices_.push_back(idx[k]);
      c.values_.push_back(val[k]);
    }
    c.offsets_[r + 1] = c.indices_.size();
  }
  return c;
}

SparseMatrix sym_normalize(const SparseMatrix& adj, bool add_self_loops) {
  if (adj.rows() != adj.cols()) shape_fail("sym_normalize", adj.rows(), adj.cols(), adj.cols(), adj.rows());
  const std::size_t n = adj.rows();
  std::vector<Triplet> entries;
  entries.reserve(adj.nnz() + (add_self_loops ? n : 0));
  for (std::size_t r = 0; r < n; ++r) {
    auto idx = adj.row_indices(r);
    auto val = adj.row_values(r);
    for (std::size_t k = 0; k < idx.size(); ++k) entries.push_back({static_cast<std::uint32_t>(r), idx[k], val[k]});
    if (add_self_loops) entries.push_back({static_cast<std::uint32_t>(r), static_cast<std::uint32_t>(r), 1.0});
  }
  SparseMatrix m = SparseMatrix::from_triplets(n, n, std::move(entries));
  std::vector<double> inv_sqrt(n, 0.0);
  for (std::size_t r = 0; r < n; ++r) {
    auto val = m.row_values(r);
    const double deg = std::accumulate(val.begin(), val.end(), 0.0);
    inv_sqrt[r] = deg > 0.0 ? 1.0 / std::sqrt(deg) : 0.0;
  }
  std::vector<Triplet> scaled;
  scaled.reserve(m.nnz());
  for (std::size_t r = 0; r < n; ++r) {
    auto idx = m.row_indices(r);
    auto val = m.row_values(r);
    for (std::size_t k = 0; k < idx.size(); ++k) {
      scaled.push_back({static_cast<std::uint32_t>(r), idx[k], val[k] * inv_sqrt[r] * inv_sqrt[idx[k]]});
    }
  }
  return SparseMatrix::from_triplets(n, n, std::move(scaled));
}

SparseMatrix row_normalize(const SparseMatrix& adj) {
  std::vector<Triplet> entries;
  entries.reserve(adj.nnz());
  for (std::size_t r = 0; r < adj.rows(); ++r) {
    auto idx = adj.row_indices(r);
    auto val = adj.row_values(r);
    const double deg = std::accumulate(val.begin(), val.end(), 0.0);
    if (deg == 0.0) continue;
    for (std::size_t k = 0; k < idx.size(); ++k) entries.push_back({static_cast<std::uint32_t>(r), idx[k], val[k] / deg});
  }
  return SparseMatrix::from_triplets(adj.rows(), adj.cols(), std::move(entries));
}

}  // namespace hgba
