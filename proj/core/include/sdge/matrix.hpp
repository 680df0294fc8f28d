#pragma once

#include <cstdint>
#include <string>
#include <vector>

namespace sdge {

/// Dense row-major matrix of doubles. The only dense container used by the
/// library; kept deliberately small (no expression templates, no views).
class DenseMatrix {
 public:
  DenseMatrix() : rows_(0), cols_(0) {}
  DenseMatrix(int rows, int cols, double fill = 0.0);

  static DenseMatrix identity(int n);

  int rows() const { return rows_; }
  int cols() const { return cols_; }
  std::int64_t size() const { return static_cast<std::int64_t>(rows_) * cols_; }

  double& operator()(int i, int j) { return data_[static_cast<size_t>(i) * cols_ + j]; }
  double operator()(int i, int j) const { return data_[static_cast<size_t>(i) * cols_ + j]; }

  double* row_ptr(int i) { return data_.data() + static_cast<size_t>(i) * cols_; }
  const double* row_ptr(int i) const { return data_.data() + static_cast<size_t>(i) * cols_; }

  std::vector<double>& data() { return data_; }
  const std::vector<double>& data() const { return data_; }

  bool same_shape(const DenseMatrix& other) const {
    return rows_ == other.rows_ && cols_ == other.cols_;
  }

  void fill(double value);
  void add_inplace(const DenseMatrix& other, double coeff = 1.0);
  void scale_inplace(double coeff);

  double frobenius_norm_sq() const;
  bool all_finite() const;

 private:
  int rows_;
  int cols_;
  std::vector<double> data_;
};

// C = A * B
DenseMatrix matmul(const DenseMatrix& a, const DenseMatrix& b);
// C = A^T * B
DenseMatrix matmul_tn(const DenseMatrix& a, const DenseMatrix& b);
// C = A * B^T
DenseMatrix matmul_nt(const DenseMatrix& a, const DenseMatrix& b);

struct Triplet {
  int row;
  int col;
  double value;
};

/// Square sparse matrix in compressed sparse row layout. Column indices are
/// strictly increasing within each row and all values are finite; both are
/// checked at construction. Duplicate triplets are summed.
class SparseMatrix {
 public:
  SparseMatrix() : n_(0), row_ptr_{0}, symmetric_(false) {}

  static SparseMatrix from_triplets(int n, std::vector<Triplet> triplets);
  static SparseMatrix from_csr(int n, std::vector<int> row_ptr, std::vector<int> cols,
                               std::vector<double> values);
  static SparseMatrix from_dense(const DenseMatrix& dense, double drop_tol = 0.0);
  static SparseMatrix identity(int n);

  int n() const { return n_; }
  std::int64_t nnz() const { return static_cast<std::int64_t>(cols_.size()); }
  bool symmetric_flag() const { return symmetric_; }

  const std::vector<int>& row_ptr() const { return row_ptr_; }
  const std::vector<int>& cols() const { return cols_; }
  const std::vector<double>& values() const { return values_; }

  int row_begin(int i) const { return row_ptr_[i]; }
  int row_end(int i) const { return row_ptr_[i + 1]; }

  /// Entry lookup by binary search; zero when absent.
  double entry(int i, int j) const;

  std::vector<double> row_sums() const;
  double sum() const;
  double frobenius_norm_sq() const;
  bool is_symmetric(double tol = 0.0) const;

  /// Replace every stored value by 1.
  SparseMatrix binarized() const;

  DenseMatrix to_dense() const;

  // y = S * x
  std::vector<double> multiply(const std::vector<double>& x) const;
  // C = S * B (dense result)
  DenseMatrix multiply(const DenseMatrix& b) const;
  // C = S^T * B (dense result)
  DenseMatrix multiply_transposed(const DenseMatrix& b) const;

 private:
  void validate() const;
  void detect_symmetry();

  int n_;
  std::vector<int> row_ptr_;
  std::vector<int> cols_;
  std::vector<double> values_;
  bool symmetric_;
};

/// C = A * B for sparse operands. Throws std::runtime_error when the result
/// would exceed `nnz_budget` stored entries (budget <= 0 disables the check).
SparseMatrix sparse_multiply(const SparseMatrix& a, const SparseMatrix& b,
                             std::int64_t nnz_budget = 0);

std::string shape_string(const DenseMatrix& m);

}  // namespace sdge
