#pragma once

#include <functional>
#include <string>
#include <vector>

#include "sdge/matrix.hpp"

namespace sdge::ad {

/// A trainable tensor: value and accumulated gradient of identical shape.
struct Parameter {
  std::string name;
  DenseMatrix value;
  DenseMatrix grad;

  Parameter(std::string name_, DenseMatrix value_)
      : name(std::move(name_)), value(std::move(value_)), grad(value.rows(), value.cols()) {}

  void zero_grad() { grad.fill(0.0); }
};

using NodeId = int;

/// Define-by-run reverse-mode tape over dense matrices. Each builder method
/// computes the forward value eagerly and records what the backward pass
/// needs. Sparse operands are constants: no gradient is ever produced for
/// them, and they must outlive the tape. A tape belongs to a single thread.
class Tape {
 public:
  NodeId constant(DenseMatrix value);
  NodeId parameter(Parameter& p);

  // out = A * B
  NodeId matmul(NodeId a, NodeId b);
  // out = A^T * B
  NodeId matmul_tn(NodeId a, NodeId b);
  // out = S * B with S a sparse constant
  NodeId spmm(const SparseMatrix& s, NodeId b);
  // out = A + coeff * B
  NodeId axpy(NodeId a, NodeId b, double coeff = 1.0);
  NodeId add(NodeId a, NodeId b) { return axpy(a, b, 1.0); }
  NodeId sub(NodeId a, NodeId b) { return axpy(a, b, -1.0); }
  // out = A + row broadcast over rows (row is 1 x cols)
  NodeId add_rowvec(NodeId a, NodeId row);
  NodeId scale(NodeId a, double coeff);
  NodeId add_scalar(NodeId a, double constant);
  NodeId sigmoid(NodeId a);
  // Numerically stable elementwise log(sigmoid(x)).
  NodeId log_sigmoid(NodeId a);
  NodeId relu(NodeId a);
  // out_ij = max_k (slopes_kj * x_ij + intercepts_kj); subgradient goes to the
  // argmax piece, ties resolved to the lowest k.
  NodeId max_affine(NodeId x, NodeId slopes, NodeId intercepts);
  // out (1 x cols) = column means over rows
  NodeId row_mean(NodeId a);
  // Training-mode batch normalization over rows, per column, with gradients
  // through the batch statistics. gamma/beta are 1 x cols.
  NodeId batch_norm(NodeId x, NodeId gamma, NodeId beta, double epsilon = 1e-8);
  // out (1x1) = sum of squared entries
  NodeId frobenius_sq(NodeId a);
  // out (1x1) = tr(Z^T S Z) = sum_ij S_ij <z_i, z_j>, S a sparse constant
  NodeId trace_quad(NodeId z, const SparseMatrix& s);
  // out (n x 1): row-wise dot products of two n x d matrices
  NodeId dot_rows(NodeId a, NodeId b);
  // out = A[rows, :] (duplicate indices allowed; backward scatter-adds)
  NodeId gather_rows(NodeId a, std::vector<int> rows);
  NodeId sum_all(NodeId a);
  // Reinterpret the row-major buffer with a new shape (same element count).
  NodeId reshape(NodeId a, int rows, int cols);
  NodeId concat_cols(const std::vector<NodeId>& parts);

  const DenseMatrix& value(NodeId id) const { return values_[static_cast<size_t>(id)]; }
  double scalar_value(NodeId id) const;

  /// Reverse sweep from a scalar loss node. Gradients of bound Parameters are
  /// accumulated additively into Parameter::grad.
  void backward(NodeId loss);

  /// Node gradient from the latest backward pass (zero for constants).
  const DenseMatrix& grad(NodeId id) const { return grads_[static_cast<size_t>(id)]; }

  int node_count() const { return static_cast<int>(nodes_.size()); }

 private:
  enum class OpKind {
    Leaf,
    Matmul,
    MatmulTN,
    Spmm,
    Axpy,
    AddRowVec,
    Scale,
    AddScalar,
    Sigmoid,
    LogSigmoid,
    Relu,
    MaxAffine,
    RowMean,
    BatchNorm,
    FrobSq,
    TraceQuad,
    DotRows,
    GatherRows,
    SumAll,
    Reshape,
    ConcatCols,
  };

  struct Node {
    OpKind kind = OpKind::Leaf;
    std::vector<int> ins;
    double coeff = 0.0;
    const SparseMatrix* sparse = nullptr;
    std::vector<int> gather;
    DenseMatrix aux;   // op cache (normalized input, argmax pieces, ...)
    DenseMatrix aux2;  // secondary cache (inverse std, ...)
    bool needs_grad = false;
    Parameter* bound = nullptr;
  };

  NodeId push(Node node, DenseMatrix value);
  bool any_needs_grad(const std::vector<int>& ins) const;
  void check_exists(NodeId id, const char* op) const;
  void backward_node(int id);

  std::vector<Node> nodes_;
  std::vector<DenseMatrix> values_;
  std::vector<DenseMatrix> grads_;
};

struct GradientCheckReport {
  double max_rel_error = 0.0;
  std::int64_t entries_checked = 0;
  std::string worst_entry;  // "name[i,j]"
};

/// Compare reverse-mode gradients with central finite differences for every
/// entry of every listed parameter. `build_loss` must be deterministic (any
/// randomness frozen into constants). Relative error uses
/// |ad - fd| / max(|ad|, |fd|, denom_floor).
GradientCheckReport gradient_check(const std::function<NodeId(Tape&)>& build_loss,
                                   const std::vector<Parameter*>& params, double step = 1e-5,
                                   double denom_floor = 1e-3);

}  // namespace sdge::ad
