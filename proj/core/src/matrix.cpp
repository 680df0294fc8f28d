#include "sdge/matrix.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <stdexcept>

namespace sdge {

DenseMatrix::DenseMatrix(int rows, int cols, double fill)
    : rows_(rows), cols_(cols), data_(static_cast<size_t>(rows) * cols, fill) {
  if (rows < 0 || cols < 0) {
    throw std::invalid_argument("DenseMatrix: negative dimension");
  }
}

DenseMatrix DenseMatrix::identity(int n) {
  DenseMatrix m(n, n);
  for (int i = 0; i < n; ++i) m(i, i) = 1.0;
  return m;
}

void DenseMatrix::fill(double value) { std::fill(data_.begin(), data_.end(), value); }

void DenseMatrix::add_inplace(const DenseMatrix& other, double coeff) {
  if (!same_shape(other)) {
    throw std::invalid_argument("DenseMatrix::add_inplace: shape mismatch " + shape_string(*this) +
                                " vs " + shape_string(other));
  }
  const double* src = other.data_.data();
  double* dst = data_.data();
  const size_t count = data_.size();
  for (size_t i = 0; i < count; ++i) dst[i] += coeff * src[i];
}

void DenseMatrix::scale_inplace(double coeff) {
  for (double& v : data_) v *= coeff;
}

double DenseMatrix::frobenius_norm_sq() const {
  double acc = 0.0;
  for (double v : data_) acc += v * v;
  return acc;
}

bool DenseMatrix::all_finite() const {
  for (double v : data_) {
    if (!std::isfinite(v)) return false;
  }
  return true;
}

DenseMatrix matmul(const DenseMatrix& a, const DenseMatrix& b) {
  if (a.cols() != b.rows()) {
    throw std::invalid_argument("matmul: shape mismatch " + shape_string(a) + " * " +
                                shape_string(b));
  }
  DenseMatrix c(a.rows(), b.cols());
  const int m = a.rows(), k = a.cols(), n = b.cols();
  for (int i = 0; i < m; ++i) {
    const double* arow = a.row_ptr(i);
    double* crow = c.row_ptr(i);
    for (int p = 0; p < k; ++p) {
      const double av = arow[p];
      if (av == 0.0) continue;
      const double* brow = b.row_ptr(p);
      for (int j = 0; j < n; ++j) crow[j] += av * brow[j];
    }
  }
  return c;
}

DenseMatrix matmul_tn(const DenseMatrix& a, const DenseMatrix& b) {
  if (a.rows() != b.rows()) {
    throw std::invalid_argument("matmul_tn: shape mismatch " + shape_string(a) + "^T * " +
                                shape_string(b));
  }
  DenseMatrix c(a.cols(), b.cols());
  const int k = a.rows(), m = a.cols(), n = b.cols();
  for (int p = 0; p < k; ++p) {
    const double* arow = a.row_ptr(p);
    const double* brow = b.row_ptr(p);
    for (int i = 0; i < m; ++i) {
      const double av = arow[i];
      if (av == 0.0) continue;
      double* crow = c.row_ptr(i);
      for (int j = 0; j < n; ++j) crow[j] += av * brow[j];
    }
  }
  return c;
}

DenseMatrix matmul_nt(const DenseMatrix& a, const DenseMatrix& b) {
  if (a.cols() != b.cols()) {
    throw std::invalid_argument("matmul_nt: shape mismatch " + shape_string(a) + " * " +
                                shape_string(b) + "^T");
  }
  DenseMatrix c(a.rows(), b.rows());
  const int m = a.rows(), k = a.cols(), n = b.rows();
  for (int i = 0; i < m; ++i) {
    const double* arow = a.row_ptr(i);
    double* crow = c.row_ptr(i);
    for (int j = 0; j < n; ++j) {
      const double* brow = b.row_ptr(j);
      double acc = 0.0;
      for (int p = 0; p < k; ++p) acc += arow[p] * brow[p];
      crow[j] = acc;
    }
  }
  return c;
}

SparseMatrix SparseMatrix::from_triplets(int n, std::vector<Triplet> triplets) {
  if (n < 0) throw std::invalid_argument("SparseMatrix: negative dimension");
  std::sort(triplets.begin(), triplets.end(), [](const Triplet& a, const Triplet& b) {
    return a.row != b.row ? a.row < b.row : a.col < b.col;
  });

  SparseMatrix s;
  s.n_ = n;
  s.row_ptr_.assign(static_cast<size_t>(n) + 1, 0);
  s.cols_.reserve(triplets.size());
  s.values_.reserve(triplets.size());

  for (size_t i = 0; i < triplets.size();) {
    const int r = triplets[i].row;
    const int c = triplets[i].col;
    if (r < 0 || r >= n || c < 0 || c >= n) {
      throw std::invalid_argument("SparseMatrix: triplet index out of range");
    }
    double v = 0.0;
    while (i < triplets.size() && triplets[i].row == r && triplets[i].col == c) {
      v += triplets[i].value;
      ++i;
    }
    s.cols_.push_back(c);
    s.values_.push_back(v);
    s.row_ptr_[static_cast<size_t>(r) + 1] += 1;
  }
  for (int i = 0; i < n; ++i) s.row_ptr_[i + 1] += s.row_ptr_[i];
  s.validate();
  s.detect_symmetry();
  return s;
}

SparseMatrix SparseMatrix::from_csr(int n, std::vector<int> row_ptr, std::vector<int> cols,
                                    std::vector<double> values) {
  SparseMatrix s;
  s.n_ = n;
  s.row_ptr_ = std::move(row_ptr);
  s.cols_ = std::move(cols);
  s.values_ = std::move(values);
  s.validate();
  s.detect_symmetry();
  return s;
}

SparseMatrix SparseMatrix::from_dense(const DenseMatrix& dense, double drop_tol) {
  if (dense.rows() != dense.cols()) {
    throw std::invalid_argument("SparseMatrix::from_dense: matrix must be square");
  }
  std::vector<Triplet> trips;
  for (int i = 0; i < dense.rows(); ++i) {
    for (int j = 0; j < dense.cols(); ++j) {
      const double v = dense(i, j);
      if (std::abs(v) > drop_tol) trips.push_back({i, j, v});
    }
  }
  return from_triplets(dense.rows(), std::move(trips));
}

SparseMatrix SparseMatrix::identity(int n) {
  std::vector<Triplet> trips;
  trips.reserve(static_cast<size_t>(n));
  for (int i = 0; i < n; ++i) trips.push_back({i, i, 1.0});
  return from_triplets(n, std::move(trips));
}

void SparseMatrix::validate() const {
  if (row_ptr_.size() != static_cast<size_t>(n_) + 1 || row_ptr_.front() != 0) {
    throw std::invalid_argument("SparseMatrix: bad row offsets");
  }
  if (static_cast<size_t>(row_ptr_.back()) != cols_.size() || cols_.size() != values_.size()) {
    throw std::invalid_argument("SparseMatrix: nnz inconsistent with offsets");
  }
  for (int i = 0; i < n_; ++i) {
    if (row_ptr_[i] > row_ptr_[i + 1]) {
      throw std::invalid_argument("SparseMatrix: row offsets not monotone");
    }
    for (int p = row_ptr_[i]; p < row_ptr_[i + 1]; ++p) {
      if (cols_[p] < 0 || cols_[p] >= n_) {
        throw std::invalid_argument("SparseMatrix: column index out of range");
      }
      if (p > row_ptr_[i] && cols_[p] <= cols_[p - 1]) {
        throw std::invalid_argument("SparseMatrix: column indices not strictly increasing");
      }
      if (!std::isfinite(values_[p])) {
        throw std::invalid_argument("SparseMatrix: non-finite value");
      }
    }
  }
}

void SparseMatrix::detect_symmetry() { symmetric_ = is_symmetric(0.0); }

double SparseMatrix::entry(int i, int j) const {
  const auto begin = cols_.begin() + row_ptr_[i];
  const auto end = cols_.begin() + row_ptr_[i + 1];
  const auto it = std::lower_bound(begin, end, j);
  if (it == end || *it != j) return 0.0;
  return values_[static_cast<size_t>(it - cols_.begin())];
}

std::vector<double> SparseMatrix::row_sums() const {
  std::vector<double> sums(static_cast<size_t>(n_), 0.0);
  for (int i = 0; i < n_; ++i) {
    double acc = 0.0;
    for (int p = row_ptr_[i]; p < row_ptr_[i + 1]; ++p) acc += values_[p];
    sums[i] = acc;
  }
  return sums;
}

double SparseMatrix::sum() const {
  // Grouped per row so the total matches the sum of row_sums() bit for bit.
  double total = 0.0;
  for (int i = 0; i < n_; ++i) {
    double acc = 0.0;
    for (int p = row_ptr_[i]; p < row_ptr_[i + 1]; ++p) acc += values_[p];
    total += acc;
  }
  return total;
}

double SparseMatrix::frobenius_norm_sq() const {
  double acc = 0.0;
  for (double v : values_) acc += v * v;
  return acc;
}

bool SparseMatrix::is_symmetric(double tol) const {
  for (int i = 0; i < n_; ++i) {
    for (int p = row_ptr_[i]; p < row_ptr_[i + 1]; ++p) {
      if (std::abs(values_[p] - entry(cols_[p], i)) > tol) return false;
    }
  }
  return true;
}

SparseMatrix SparseMatrix::binarized() const {
  SparseMatrix s = *this;
  std::fill(s.values_.begin(), s.values_.end(), 1.0);
  s.detect_symmetry();
  return s;
}

DenseMatrix SparseMatrix::to_dense() const {
  DenseMatrix d(n_, n_);
  for (int i = 0; i < n_; ++i) {
    for (int p = row_ptr_[i]; p < row_ptr_[i + 1]; ++p) d(i, cols_[p]) = values_[p];
  }
  return d;
}

std::vector<double> SparseMatrix::multiply(const std::vector<double>& x) const {
  if (static_cast<int>(x.size()) != n_) {
    throw std::invalid_argument("SparseMatrix::multiply: vector length mismatch");
  }
  std::vector<double> y(static_cast<size_t>(n_), 0.0);
  for (int i = 0; i < n_; ++i) {
    double acc = 0.0;
    for (int p = row_ptr_[i]; p < row_ptr_[i + 1]; ++p) acc += values_[p] * x[cols_[p]];
    y[i] = acc;
  }
  return y;
}

DenseMatrix SparseMatrix::multiply(const DenseMatrix& b) const {
  if (b.rows() != n_) {
    throw std::invalid_argument("SparseMatrix::multiply: shape mismatch");
  }
  DenseMatrix c(n_, b.cols());
  const int w = b.cols();
  for (int i = 0; i < n_; ++i) {
    double* crow = c.row_ptr(i);
    for (int p = row_ptr_[i]; p < row_ptr_[i + 1]; ++p) {
      const double v = values_[p];
      const double* brow = b.row_ptr(cols_[p]);
      for (int j = 0; j < w; ++j) crow[j] += v * brow[j];
    }
  }
  return c;
}

DenseMatrix SparseMatrix::multiply_transposed(const DenseMatrix& b) const {
  if (b.rows() != n_) {
    throw std::invalid_argument("SparseMatrix::multiply_transposed: shape mismatch");
  }
  DenseMatrix c(n_, b.cols());
  const int w = b.cols();
  for (int i = 0; i < n_; ++i) {
    const double* brow = b.row_ptr(i);
    for (int p = row_ptr_[i]; p < row_ptr_[i + 1]; ++p) {
      const double v = values_[p];
      double* crow = c.row_ptr(cols_[p]);
      for (int j = 0; j < w; ++j) crow[j] += v * brow[j];
    }
  }
  return c;
}

SparseMatrix sparse_multiply(const SparseMatrix& a, const SparseMatrix& b,
                             std::int64_t nnz_budget) {
  if (a.n() != b.n()) {
    throw std::invalid_argument("sparse_multiply: dimension mismatch");
  }
  const int n = a.n();
  std::vector<int> row_ptr(static_cast<size_t>(n) + 1, 0);
  std::vector<int> cols;
  std::vector<double> values;

  // Gustavson row-by-row product with a dense accumulator.
  std::vector<double> accum(static_cast<size_t>(n), 0.0);
  std::vector<char> seen(static_cast<size_t>(n), 0);
  std::vector<int> touched;
  touched.reserve(64);
  std::int64_t total = 0;
  for (int i = 0; i < n; ++i) {
    touched.clear();
    for (int p = a.row_begin(i); p < a.row_end(i); ++p) {
      const int k = a.cols()[p];
      const double av = a.values()[p];
      for (int q = b.row_begin(k); q < b.row_end(k); ++q) {
        const int j = b.cols()[q];
        if (!seen[j]) {
          seen[j] = 1;
          touched.push_back(j);
        }
        accum[j] += av * b.values()[q];
      }
    }
    std::sort(touched.begin(), touched.end());
    total += static_cast<std::int64_t>(touched.size());
    if (nnz_budget > 0 && total > nnz_budget) {
      throw std::runtime_error(
          "sparse_multiply: fill-in exceeds nnz budget of " + std::to_string(nnz_budget) +
          " entries; enable the dense fallback (--dense-power) for small graphs");
    }
    for (int j : touched) {
      cols.push_back(j);
      values.push_back(accum[j]);
      accum[j] = 0.0;
      seen[j] = 0;
    }
    row_ptr[static_cast<size_t>(i) + 1] = static_cast<int>(cols.size());
  }
  return SparseMatrix::from_csr(n, std::move(row_ptr), std::move(cols), std::move(values));
}

std::string shape_string(const DenseMatrix& m) {
  return std::to_string(m.rows()) + "x" + std::to_string(m.cols());
}

}  // namespace sdge
