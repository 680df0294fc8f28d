#include "sdge/autodiff.hpp"

#include <cmath>
#include <stdexcept>

namespace sdge::ad {

namespace {

double stable_log_sigmoid(double x) {
  // log(1/(1+e^-x)) without overflow on either tail.
  if (x >= 0.0) return -std::log1p(std::exp(-x));
  return x - std::log1p(std::exp(x));
}

void require(bool ok, const std::string& message) {
  if (!ok) throw std::invalid_argument(message);
}

}  // namespace

NodeId Tape::push(Node node, DenseMatrix value) {
  nodes_.push_back(std::move(node));
  values_.push_back(std::move(value));
  return static_cast<NodeId>(nodes_.size()) - 1;
}

bool Tape::any_needs_grad(const std::vector<int>& ins) const {
  for (int id : ins) {
    if (nodes_[static_cast<size_t>(id)].needs_grad) return true;
  }
  return false;
}

void Tape::check_exists(NodeId id, const char* op) const {
  if (id < 0 || id >= static_cast<NodeId>(nodes_.size())) {
    throw std::invalid_argument(std::string(op) + ": unknown tape node");
  }
}

NodeId Tape::constant(DenseMatrix value) {
  Node n;
  n.kind = OpKind::Leaf;
  return push(std::move(n), std::move(value));
}

NodeId Tape::parameter(Parameter& p) {
  Node n;
  n.kind = OpKind::Leaf;
  n.needs_grad = true;
  n.bound = &p;
  return push(std::move(n), p.value);
}

NodeId Tape::matmul(NodeId a, NodeId b) {
  check_exists(a, "matmul");
  check_exists(b, "matmul");
  const auto& va = value(a);
  const auto& vb = value(b);
  require(va.cols() == vb.rows(),
          "matmul: shape mismatch " + shape_string(va) + " * " + shape_string(vb));
  Node n;
  n.kind = OpKind::Matmul;
  n.ins = {a, b};
  n.needs_grad = any_needs_grad(n.ins);
  return push(std::move(n), sdge::matmul(va, vb));
}

NodeId Tape::matmul_tn(NodeId a, NodeId b) {
  check_exists(a, "matmul_tn");
  check_exists(b, "matmul_tn");
  const auto& va = value(a);
  const auto& vb = value(b);
  require(va.rows() == vb.rows(),
          "matmul_tn: shape mismatch " + shape_string(va) + "^T * " + shape_string(vb));
  Node n;
  n.kind = OpKind::MatmulTN;
  n.ins = {a, b};
  n.needs_grad = any_needs_grad(n.ins);
  return push(std::move(n), sdge::matmul_tn(va, vb));
}

NodeId Tape::spmm(const SparseMatrix& s, NodeId b) {
  check_exists(b, "spmm");
  const auto& vb = value(b);
  require(s.n() == vb.rows(),
          "spmm: shape mismatch " + std::to_string(s.n()) + "x" + std::to_string(s.n()) + " * " +
              shape_string(vb));
  Node n;
  n.kind = OpKind::Spmm;
  n.ins = {b};
  n.sparse = &s;
  n.needs_grad = any_needs_grad(n.ins);
  return push(std::move(n), s.multiply(vb));
}

NodeId Tape::axpy(NodeId a, NodeId b, double coeff) {
  check_exists(a, "axpy");
  check_exists(b, "axpy");
  const auto& va = value(a);
  const auto& vb = value(b);
  require(va.same_shape(vb),
          "axpy: shape mismatch " + shape_string(va) + " vs " + shape_string(vb));
  DenseMatrix out = va;
  out.add_inplace(vb, coeff);
  Node n;
  n.kind = OpKind::Axpy;
  n.ins = {a, b};
  n.coeff = coeff;
  n.needs_grad = any_needs_grad(n.ins);
  return push(std::move(n), std::move(out));
}

NodeId Tape::add_rowvec(NodeId a, NodeId row) {
  check_exists(a, "add_rowvec");
  check_exists(row, "add_rowvec");
  const auto& va = value(a);
  const auto& vr = value(row);
  require(vr.rows() == 1 && vr.cols() == va.cols(),
          "add_rowvec: shape mismatch " + shape_string(va) + " + " + shape_string(vr));
  DenseMatrix out = va;
  for (int i = 0; i < out.rows(); ++i) {
    double* orow = out.row_ptr(i);
    const double* r = vr.row_ptr(0);
    for (int j = 0; j < out.cols(); ++j) orow[j] += r[j];
  }
  Node n;
  n.kind = OpKind::AddRowVec;
  n.ins = {a, row};
  n.needs_grad = any_needs_grad(n.ins);
  return push(std::move(n), std::move(out));
}

NodeId Tape::scale(NodeId a, double coeff) {
  check_exists(a, "scale");
  DenseMatrix out = value(a);
  out.scale_inplace(coeff);
  Node n;
  n.kind = OpKind::Scale;
  n.ins = {a};
  n.coeff = coeff;
  n.needs_grad = any_needs_grad(n.ins);
  return push(std::move(n), std::move(out));
}

NodeId Tape::add_scalar(NodeId a, double constant) {
  check_exists(a, "add_scalar");
  DenseMatrix out = value(a);
  for (double& v : out.data()) v += constant;
  Node n;
  n.kind = OpKind::AddScalar;
  n.ins = {a};
  n.needs_grad = any_needs_grad(n.ins);
  return push(std::move(n), std::move(out));
}

NodeId Tape::sigmoid(NodeId a) {
  check_exists(a, "sigmoid");
  DenseMatrix out = value(a);
  for (double& v : out.data()) v = 1.0 / (1.0 + std::exp(-v));
  Node n;
  n.kind = OpKind::Sigmoid;
  n.ins = {a};
  n.needs_grad = any_needs_grad(n.ins);
  return push(std::move(n), std::move(out));
}

NodeId Tape::log_sigmoid(NodeId a) {
  check_exists(a, "log_sigmoid");
  DenseMatrix out = value(a);
  for (double& v : out.data()) v = stable_log_sigmoid(v);
  Node n;
  n.kind = OpKind::LogSigmoid;
  n.ins = {a};
  n.needs_grad = any_needs_grad(n.ins);
  return push(std::move(n), std::move(out));
}

NodeId Tape::relu(NodeId a) {
  check_exists(a, "relu");
  DenseMatrix out = value(a);
  for (double& v : out.data()) v = v > 0.0 ? v : 0.0;
  Node n;
  n.kind = OpKind::Relu;
  n.ins = {a};
  n.needs_grad = any_needs_grad(n.ins);
  return push(std::move(n), std::move(out));
}

NodeId Tape::max_affine(NodeId x, NodeId slopes, NodeId intercepts) {
  check_exists(x, "max_affine");
  check_exists(slopes, "max_affine");
  check_exists(intercepts, "max_affine");
  const auto& vx = value(x);
  const auto& vs = value(slopes);
  const auto& vi = value(intercepts);
  require(vs.same_shape(vi) && vs.cols() == vx.cols() && vs.rows() >= 1,
          "max_affine: shape mismatch x=" + shape_string(vx) + " slopes=" + shape_string(vs) +
              " intercepts=" + shape_string(vi));
  const int pieces = vs.rows();
  DenseMatrix out(vx.rows(), vx.cols());
  DenseMatrix argmax(vx.rows(), vx.cols());
  for (int i = 0; i < vx.rows(); ++i) {
    for (int j = 0; j < vx.cols(); ++j) {
      double best = vs(0, j) * vx(i, j) + vi(0, j);
      int best_k = 0;
      for (int k = 1; k < pieces; ++k) {
        const double cand = vs(k, j) * vx(i, j) + vi(k, j);
        if (cand > best) {
          best = cand;
          best_k = k;
        }
      }
      out(i, j) = best;
      argmax(i, j) = static_cast<double>(best_k);
    }
  }
  Node n;
  n.kind = OpKind::MaxAffine;
  n.ins = {x, slopes, intercepts};
  n.aux = std::move(argmax);
  n.needs_grad = any_needs_grad(n.ins);
  return push(std::move(n), std::move(out));
}

NodeId Tape::row_mean(NodeId a) {
  check_exists(a, "row_mean");
  const auto& va = value(a);
  require(va.rows() >= 1, "row_mean: empty input");
  DenseMatrix out(1, va.cols());
  for (int i = 0; i < va.rows(); ++i) {
    const double* row = va.row_ptr(i);
    for (int j = 0; j < va.cols(); ++j) out(0, j) += row[j];
  }
  out.scale_inplace(1.0 / va.rows());
  Node n;
  n.kind = OpKind::RowMean;
  n.ins = {a};
  n.needs_grad = any_needs_grad(n.ins);
  return push(std::move(n), std::move(out));
}

NodeId Tape::batch_norm(NodeId x, NodeId gamma, NodeId beta, double epsilon) {
  check_exists(x, "batch_norm");
  check_exists(gamma, "batch_norm");
  check_exists(beta, "batch_norm");
  const auto& vx = value(x);
  const auto& vg = value(gamma);
  const auto& vb = value(beta);
  require(vg.rows() == 1 && vb.rows() == 1 && vg.cols() == vx.cols() && vb.cols() == vx.cols(),
          "batch_norm: shape mismatch x=" + shape_string(vx) + " gamma=" + shape_string(vg) +
              " beta=" + shape_string(vb));
  const int rows = vx.rows(), cols = vx.cols();
  DenseMatrix normalized(rows, cols);
  DenseMatrix inv_std(1, cols);
  DenseMatrix out(rows, cols);
  for (int j = 0; j < cols; ++j) {
    double mean = 0.0;
    for (int i = 0; i < rows; ++i) mean += vx(i, j);
    mean /= rows;
    double var = 0.0;
    for (int i = 0; i < rows; ++i) {
      const double d = vx(i, j) - mean;
      var += d * d;
    }
    var /= rows;
    const double is = 1.0 / std::sqrt(var + epsilon);
    inv_std(0, j) = is;
    for (int i = 0; i < rows; ++i) {
      const double xn = (vx(i, j) - mean) * is;
      normalized(i, j) = xn;
      out(i, j) = vg(0, j) * xn + vb(0, j);
    }
  }
  Node n;
  n.kind = OpKind::BatchNorm;
  n.ins = {x, gamma, beta};
  n.aux = std::move(normalized);
  n.aux2 = std::move(inv_std);
  n.needs_grad = any_needs_grad(n.ins);
  return push(std::move(n), std::move(out));
}

NodeId Tape::frobenius_sq(NodeId a) {
  check_exists(a, "frobenius_sq");
  DenseMatrix out(1, 1);
  out(0, 0) = value(a).frobenius_norm_sq();
  Node n;
  n.kind = OpKind::FrobSq;
  n.ins = {a};
  n.needs_grad = any_needs_grad(n.ins);
  return push(std::move(n), std::move(out));
}

NodeId Tape::trace_quad(NodeId z, const SparseMatrix& s) {
  check_exists(z, "trace_quad");
  const auto& vz = value(z);
  require(s.n() == vz.rows(), "trace_quad: shape mismatch " + std::to_string(s.n()) + "x" +
                                  std::to_string(s.n()) + " vs " + shape_string(vz));
  const DenseMatrix sz = s.multiply(vz);
  double acc = 0.0;
  for (int i = 0; i < vz.rows(); ++i) {
    const double* a = sz.row_ptr(i);
    const double* b = vz.row_ptr(i);
    for (int j = 0; j < vz.cols(); ++j) acc += a[j] * b[j];
  }
  DenseMatrix out(1, 1);
  out(0, 0) = acc;
  Node n;
  n.kind = OpKind::TraceQuad;
  n.ins = {z};
  n.sparse = &s;
  n.needs_grad = any_needs_grad(n.ins);
  return push(std::move(n), std::move(out));
}

NodeId Tape::dot_rows(NodeId a, NodeId b) {
  check_exists(a, "dot_rows");
  check_exists(b, "dot_rows");
  const auto& va = value(a);
  const auto& vb = value(b);
  require(va.same_shape(vb),
          "dot_rows: shape mismatch " + shape_string(va) + " vs " + shape_string(vb));
  DenseMatrix out(va.rows(), 1);
  for (int i = 0; i < va.rows(); ++i) {
    const double* x = va.row_ptr(i);
    const double* y = vb.row_ptr(i);
    double acc = 0.0;
    for (int j = 0; j < va.cols(); ++j) acc += x[j] * y[j];
    out(i, 0) = acc;
  }
  Node n;
  n.kind = OpKind::DotRows;
  n.ins = {a, b};
  n.needs_grad = any_needs_grad(n.ins);
  return push(std::move(n), std::move(out));
}

NodeId Tape::gather_rows(NodeId a, std::vector<int> rows) {
  check_exists(a, "gather_rows");
  const auto& va = value(a);
  DenseMatrix out(static_cast<int>(rows.size()), va.cols());
  for (size_t t = 0; t < rows.size(); ++t) {
    require(rows[t] >= 0 && rows[t] < va.rows(), "gather_rows: index out of range");
    const double* src = va.row_ptr(rows[t]);
    double* dst = out.row_ptr(static_cast<int>(t));
    for (int j = 0; j < va.cols(); ++j) dst[j] = src[j];
  }
  Node n;
  n.kind = OpKind::GatherRows;
  n.ins = {a};
  n.gather = std::move(rows);
  n.needs_grad = any_needs_grad(n.ins);
  return push(std::move(n), std::move(out));
}

NodeId Tape::sum_all(NodeId a) {
  check_exists(a, "sum_all");
  double acc = 0.0;
  for (double v : value(a).data()) acc += v;
  DenseMatrix out(1, 1);
  out(0, 0) = acc;
  Node n;
  n.kind = OpKind::SumAll;
  n.ins = {a};
  n.needs_grad = any_needs_grad(n.ins);
  return push(std::move(n), std::move(out));
}

NodeId Tape::reshape(NodeId a, int rows, int cols) {
  check_exists(a, "reshape");
  const auto& va = value(a);
  require(static_cast<std::int64_t>(rows) * cols == va.size(),
          "reshape: element count mismatch " + shape_string(va) + " -> " + std::to_string(rows) +
              "x" + std::to_string(cols));
  DenseMatrix out(rows, cols);
  out.data() = va.data();
  Node n;
  n.kind = OpKind::Reshape;
  n.ins = {a};
  n.needs_grad = any_needs_grad(n.ins);
  return push(std::move(n), std::move(out));
}

NodeId Tape::concat_cols(const std::vector<NodeId>& parts) {
  require(!parts.empty(), "concat_cols: no inputs");
  int total_cols = 0;
  const int rows = value(parts.front()).rows();
  for (NodeId id : parts) {
    check_exists(id, "concat_cols");
    require(value(id).rows() == rows, "concat_cols: row count mismatch");
    total_cols += value(id).cols();
  }
  DenseMatrix out(rows, total_cols);
  int offset = 0;
  for (NodeId id : parts) {
    const auto& v = value(id);
    for (int i = 0; i < rows; ++i) {
      const double* src = v.row_ptr(i);
      double* dst = out.row_ptr(i) + offset;
      for (int j = 0; j < v.cols(); ++j) dst[j] = src[j];
    }
    offset += v.cols();
  }
  Node n;
  n.kind = OpKind::ConcatCols;
  n.ins = parts;
  n.needs_grad = any_needs_grad(n.ins);
  return push(std::move(n), std::move(out));
}

double Tape::scalar_value(NodeId id) const {
  const auto& v = value(id);
  if (v.rows() != 1 || v.cols() != 1) {
    throw std::invalid_argument("scalar_value: node is " + shape_string(v) + ", not 1x1");
  }
  return v(0, 0);
}

void Tape::backward(NodeId loss) {
  check_exists(loss, "backward");
  const auto& lv = value(loss);
  if (lv.rows() != 1 || lv.cols() != 1) {
    throw std::invalid_argument("backward: loss node is " + shape_string(lv) + ", not a scalar");
  }
  grads_.clear();
  grads_.reserve(values_.size());
  for (const auto& v : values_) grads_.emplace_back(v.rows(), v.cols());
  grads_[static_cast<size_t>(loss)](0, 0) = 1.0;

  for (int id = static_cast<int>(nodes_.size()) - 1; id >= 0; --id) {
    if (!nodes_[static_cast<size_t>(id)].needs_grad) continue;
    backward_node(id);
  }
  for (size_t id = 0; id < nodes_.size(); ++id) {
    if (nodes_[id].bound != nullptr) nodes_[id].bound->grad.add_inplace(grads_[id]);
  }
}

void Tape::backward_node(int id) {
  Node& n = nodes_[static_cast<size_t>(id)];
  const DenseMatrix& g = grads_[static_cast<size_t>(id)];
  auto wants = [&](int in) { return nodes_[static_cast<size_t>(in)].needs_grad; };
  auto gin = [&](int in) -> DenseMatrix& { return grads_[static_cast<size_t>(in)]; };

  switch (n.kind) {
    case OpKind::Leaf:
      break;
    case OpKind::Matmul: {
      const auto& a = values_[static_cast<size_t>(n.ins[0])];
      const auto& b = values_[static_cast<size_t>(n.ins[1])];
      if (wants(n.ins[0])) gin(n.ins[0]).add_inplace(sdge::matmul_nt(g, b));
      if (wants(n.ins[1])) gin(n.ins[1]).add_inplace(sdge::matmul_tn(a, g));
      break;
    }
    case OpKind::MatmulTN: {
      const auto& a = values_[static_cast<size_t>(n.ins[0])];
      const auto& b = values_[static_cast<size_t>(n.ins[1])];
      if (wants(n.ins[0])) gin(n.ins[0]).add_inplace(sdge::matmul_nt(b, g));
      if (wants(n.ins[1])) gin(n.ins[1]).add_inplace(sdge::matmul(a, g));
      break;
    }
    case OpKind::Spmm: {
      if (wants(n.ins[0])) gin(n.ins[0]).add_inplace(n.sparse->multiply_transposed(g));
      break;
    }
    case OpKind::Axpy: {
      if (wants(n.ins[0])) gin(n.ins[0]).add_inplace(g);
      if (wants(n.ins[1])) gin(n.ins[1]).add_inplace(g, n.coeff);
      break;
    }
    case OpKind::AddRowVec: {
      if (wants(n.ins[0])) gin(n.ins[0]).add_inplace(g);
      if (wants(n.ins[1])) {
        DenseMatrix& gr = gin(n.ins[1]);
        for (int i = 0; i < g.rows(); ++i) {
          const double* row = g.row_ptr(i);
          for (int j = 0; j < g.cols(); ++j) gr(0, j) += row[j];
        }
      }
      break;
    }
    case OpKind::Scale: {
      if (wants(n.ins[0])) gin(n.ins[0]).add_inplace(g, n.coeff);
      break;
    }
    case OpKind::AddScalar: {
      if (wants(n.ins[0])) gin(n.ins[0]).add_inplace(g);
      break;
    }
    case OpKind::Sigmoid: {
      if (wants(n.ins[0])) {
        DenseMatrix& gi = gin(n.ins[0]);
        const auto& out = values_[static_cast<size_t>(id)];
        for (int i = 0; i < g.rows(); ++i) {
          for (int j = 0; j < g.cols(); ++j) {
            const double s = out(i, j);
            gi(i, j) += g(i, j) * s * (1.0 - s);
          }
        }
      }
      break;
    }
    case OpKind::LogSigmoid: {
      if (wants(n.ins[0])) {
        DenseMatrix& gi = gin(n.ins[0]);
        const auto& out = values_[static_cast<size_t>(id)];
        for (int i = 0; i < g.rows(); ++i) {
          for (int j = 0; j < g.cols(); ++j) {
            gi(i, j) += g(i, j) * (1.0 - std::exp(out(i, j)));
          }
        }
      }
      break;
    }
    case OpKind::Relu: {
      if (wants(n.ins[0])) {
        DenseMatrix& gi = gin(n.ins[0]);
        const auto& x = values_[static_cast<size_t>(n.ins[0])];
        for (int i = 0; i < g.rows(); ++i) {
          for (int j = 0; j < g.cols(); ++j) {
            if (x(i, j) > 0.0) gi(i, j) += g(i, j);
          }
        }
      }
      break;
    }
    case OpKind::MaxAffine: {
      const auto& x = values_[static_cast<size_t>(n.ins[0])];
      const auto& slopes = values_[static_cast<size_t>(n.ins[1])];
      const bool wx = wants(n.ins[0]), ws = wants(n.ins[1]), wi = wants(n.ins[2]);
      for (int i = 0; i < g.rows(); ++i) {
        for (int j = 0; j < g.cols(); ++j) {
          const int k = static_cast<int>(n.aux(i, j));
          const double gv = g(i, j);
          if (wx) gin(n.ins[0])(i, j) += gv * slopes(k, j);
          if (ws) gin(n.ins[1])(k, j) += gv * x(i, j);
          if (wi) gin(n.ins[2])(k, j) += gv;
        }
      }
      break;
    }
    case OpKind::RowMean: {
      if (wants(n.ins[0])) {
        DenseMatrix& gi = gin(n.ins[0]);
        const double inv = 1.0 / gi.rows();
        for (int i = 0; i < gi.rows(); ++i) {
          for (int j = 0; j < gi.cols(); ++j) gi(i, j) += g(0, j) * inv;
        }
      }
      break;
    }
    case OpKind::BatchNorm: {
      const auto& xn = n.aux;        // normalized input
      const auto& inv_std = n.aux2;  // 1 x cols
      const auto& gamma = values_[static_cast<size_t>(n.ins[1])];
      const int rows = g.rows(), cols = g.cols();
      if (wants(n.ins[2])) {
        DenseMatrix& gb = gin(n.ins[2]);
        for (int i = 0; i < rows; ++i) {
          for (int j = 0; j < cols; ++j) gb(0, j) += g(i, j);
        }
      }
      if (wants(n.ins[1])) {
        DenseMatrix& gg = gin(n.ins[1]);
        for (int i = 0; i < rows; ++i) {
          for (int j = 0; j < cols; ++j) gg(0, j) += g(i, j) * xn(i, j);
        }
      }
      if (wants(n.ins[0])) {
        DenseMatrix& gx = gin(n.ins[0]);
        for (int j = 0; j < cols; ++j) {
          double sum_g = 0.0, sum_gxn = 0.0;
          for (int i = 0; i < rows; ++i) {
            sum_g += g(i, j);
            sum_gxn += g(i, j) * xn(i, j);
          }
          const double c = gamma(0, j) * inv_std(0, j) / rows;
          for (int i = 0; i < rows; ++i) {
            gx(i, j) += c * (rows * g(i, j) - sum_g - xn(i, j) * sum_gxn);
          }
        }
      }
      break;
    }
    case OpKind::FrobSq: {
      if (wants(n.ins[0])) {
        gin(n.ins[0]).add_inplace(values_[static_cast<size_t>(n.ins[0])], 2.0 * g(0, 0));
      }
      break;
    }
    case OpKind::TraceQuad: {
      if (wants(n.ins[0])) {
        const auto& z = values_[static_cast<size_t>(n.ins[0])];
        DenseMatrix sz = n.sparse->multiply(z);
        sz.add_inplace(n.sparse->multiply_transposed(z));
        gin(n.ins[0]).add_inplace(sz, g(0, 0));
      }
      break;
    }
    case OpKind::DotRows: {
      const auto& a = values_[static_cast<size_t>(n.ins[0])];
      const auto& b = values_[static_cast<size_t>(n.ins[1])];
      const bool wa = wants(n.ins[0]), wb = wants(n.ins[1]);
      for (int i = 0; i < a.rows(); ++i) {
        const double gv = g(i, 0);
        if (gv == 0.0) continue;
        for (int j = 0; j < a.cols(); ++j) {
          if (wa) gin(n.ins[0])(i, j) += gv * b(i, j);
          if (wb) gin(n.ins[1])(i, j) += gv * a(i, j);
        }
      }
      break;
    }
    case OpKind::GatherRows: {
      if (wants(n.ins[0])) {
        DenseMatrix& gi = gin(n.ins[0]);
        for (size_t t = 0; t < n.gather.size(); ++t) {
          const double* src = g.row_ptr(static_cast<int>(t));
          double* dst = gi.row_ptr(n.gather[t]);
          for (int j = 0; j < g.cols(); ++j) dst[j] += src[j];
        }
      }
      break;
    }
    case OpKind::SumAll: {
      if (wants(n.ins[0])) {
        DenseMatrix& gi = gin(n.ins[0]);
        const double gv = g(0, 0);
        for (double& v : gi.data()) v += gv;
      }
      break;
    }
    case OpKind::Reshape: {
      if (wants(n.ins[0])) {
        DenseMatrix& gi = gin(n.ins[0]);
        const auto& gd = g.data();
        for (size_t t = 0; t < gd.size(); ++t) gi.data()[t] += gd[t];
      }
      break;
    }
    case OpKind::ConcatCols: {
      int offset = 0;
      for (int in : n.ins) {
        const int w = values_[static_cast<size_t>(in)].cols();
        if (wants(in)) {
          DenseMatrix& gi = gin(in);
          for (int i = 0; i < g.rows(); ++i) {
            const double* src = g.row_ptr(i) + offset;
            double* dst = gi.row_ptr(i);
            for (int j = 0; j < w; ++j) dst[j] += src[j];
          }
        }
        offset += w;
      }
      break;
    }
  }
}

GradientCheckReport gradient_check(const std::function<NodeId(Tape&)>& build_loss,
                                   const std::vector<Parameter*>& params, double step,
                                   double denom_floor) {
  for (Parameter* p : params) p->zero_grad();
  {
    Tape tape;
    const NodeId loss = build_loss(tape);
    if (!tape.value(loss).all_finite()) {
      throw std::runtime_error("gradient_check: non-finite loss value");
    }
    tape.backward(loss);
  }
  auto eval = [&]() {
    Tape tape;
    const NodeId loss = build_loss(tape);
    const double v = tape.scalar_value(loss);
    if (!std::isfinite(v)) throw std::runtime_error("gradient_check: non-finite loss value");
    return v;
  };

  GradientCheckReport report;
  for (Parameter* p : params) {
    if (!p->grad.all_finite()) {
      throw std::runtime_error("gradient_check: non-finite gradient in " + p->name);
    }
    for (int i = 0; i < p->value.rows(); ++i) {
      for (int j = 0; j < p->value.cols(); ++j) {
        const double original = p->value(i, j);
        p->value(i, j) = original + step;
        const double up = eval();
        p->value(i, j) = original - step;
        const double down = eval();
        p->value(i, j) = original;

        const double fd = (up - down) / (2.0 * step);
        const double ad = p->grad(i, j);
        const double denom = std::max({std::abs(fd), std::abs(ad), denom_floor});
        const double rel = std::abs(fd - ad) / denom;
        ++report.entries_checked;
        if (rel > report.max_rel_error) {
          report.max_rel_error = rel;
          report.worst_entry =
              p->name + "[" + std::to_string(i) + "," + std::to_string(j) + "]";
        }
      }
    }
  }
  return report;
}

}  // namespace sdge::ad
