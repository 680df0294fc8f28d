#include "sdge/spectral.hpp"

#include <cmath>
#include <stdexcept>
#include <vector>

#include <Eigen/Dense>
#include <Eigen/Eigenvalues>

#include "sdge/knn.hpp"

namespace sdge {

namespace {

// Chebyshev coefficients of f on [-1, 1] via Gauss-Chebyshev quadrature.
// Coefficients below quadrature roundoff are clamped to zero so constant
// filters stay exact.
std::vector<double> chebyshev_coefficients(const std::function<double(double)>& f, int order) {
  const int quad_points = std::max(256, 2 * (order + 1));
  std::vector<double> samples(static_cast<size_t>(quad_points));
  std::vector<double> angles(static_cast<size_t>(quad_points));
  for (int p = 0; p < quad_points; ++p) {
    angles[p] = M_PI * (p + 0.5) / quad_points;
    samples[p] = f(std::cos(angles[p]));
  }
  std::vector<double> coeff(static_cast<size_t>(order) + 1, 0.0);
  for (int j = 0; j <= order; ++j) {
    double acc = 0.0;
    for (int p = 0; p < quad_points; ++p) acc += samples[p] * std::cos(j * angles[p]);
    acc *= (j == 0 ? 1.0 : 2.0) / quad_points;
    coeff[static_cast<size_t>(j)] = std::abs(acc) < 1e-12 ? 0.0 : acc;
  }
  return coeff;
}

}  // namespace

DenseMatrix chebyshev_apply(const DenseMatrix& z, const SparseMatrix& lbar, int order,
                            const std::function<double(double)>& h) {
  if (order < 1) throw std::invalid_argument("chebyshev_apply: order must be >= 1");
  if (lbar.n() != z.rows()) {
    throw std::invalid_argument("chebyshev_apply: operator is " + std::to_string(lbar.n()) +
                                "x" + std::to_string(lbar.n()) + ", input is " + shape_string(z));
  }
  // Shift the spectrum into [-1, 1]: T = Lbar - I, h_shifted(t) = h(t + 1).
  const auto coeff = chebyshev_coefficients([&](double t) { return h(t + 1.0); }, order);

  auto apply_shifted = [&](const DenseMatrix& m) {
    DenseMatrix out = lbar.multiply(m);
    out.add_inplace(m, -1.0);
    return out;
  };

  DenseMatrix result = z;
  result.scale_inplace(coeff[0]);
  if (order >= 1) {
    DenseMatrix prev = z;                     // T_0(T) Z
    DenseMatrix current = apply_shifted(z);   // T_1(T) Z
    result.add_inplace(current, coeff[1]);
    for (int j = 2; j <= order; ++j) {
      // T_{j} = 2 T T_{j-1} - T_{j-2}
      DenseMatrix next = apply_shifted(current);
      next.scale_inplace(2.0);
      next.add_inplace(prev, -1.0);
      result.add_inplace(next, coeff[static_cast<size_t>(j)]);
      prev = std::move(current);
      current = std::move(next);
    }
  }
  return result;
}

DenseMatrix chebyshev_filter(const DenseMatrix& z, const SparseMatrix& lbar,
                             const ModulatorConfig& config) {
  return chebyshev_apply(z, lbar, config.order,
                         [&](double lambda) { return 1.0 - config.modulator(lambda); });
}

DenseMatrix exact_filter(const DenseMatrix& z, const SparseMatrix& lbar,
                         const ModulatorConfig& config) {
  const int n = lbar.n();
  if (n > 500) {
    throw std::invalid_argument("exact_filter: dense reference limited to n <= 500, got n = " +
                                std::to_string(n));
  }
  if (n != z.rows()) {
    throw std::invalid_argument("exact_filter: shape mismatch");
  }

  Eigen::MatrixXd dense(n, n);
  dense.setZero();
  for (int i = 0; i < n; ++i) {
    for (int p = lbar.row_begin(i); p < lbar.row_end(i); ++p) {
      dense(i, lbar.cols()[p]) = lbar.values()[p];
    }
  }
  Eigen::EigenSolver<Eigen::MatrixXd> solver(dense);
  if (solver.info() != Eigen::Success) {
    throw std::runtime_error("exact_filter: eigendecomposition failed");
  }
  const Eigen::MatrixXcd u = solver.eigenvectors();
  const Eigen::VectorXcd lambda = solver.eigenvalues();

  Eigen::MatrixXcd zc(n, z.cols());
  for (int i = 0; i < n; ++i) {
    for (int j = 0; j < z.cols(); ++j) zc(i, j) = z(i, j);
  }
  // U (I - g(Lambda)) U^{-1} Z; the operator is similar to a symmetric matrix,
  // so eigenvalues are real up to roundoff and the result's imaginary part is
  // discarded.
  Eigen::MatrixXcd w = u.partialPivLu().solve(zc);
  for (int i = 0; i < n; ++i) {
    w.row(i) *= 1.0 - config.modulator(lambda(i).real());
  }
  const Eigen::MatrixXcd filtered = u * w;

  DenseMatrix out(n, z.cols());
  for (int i = 0; i < n; ++i) {
    for (int j = 0; j < z.cols(); ++j) out(i, j) = filtered(i, j).real();
  }
  return out;
}

DenseMatrix propagate(const DenseMatrix& z, const Graph& g, const ModulatorConfig& config,
                      bool self_loop_isolated) {
  if (z.rows() != g.n) {
    throw std::invalid_argument("propagate: embedding has " + std::to_string(z.rows()) +
                                " rows, graph has " + std::to_string(g.n) + " nodes");
  }
  const SparseMatrix lbar = rw_laplacian(g, self_loop_isolated);
  const DenseMatrix filtered = chebyshev_filter(z, lbar, config);

  // D^{-1} A; an isolated node with the self-loop option keeps its own row.
  DenseMatrix out = g.adjacency.multiply(filtered);
  for (int i = 0; i < g.n; ++i) {
    if (g.degree[i] == 0.0) {
      for (int j = 0; j < out.cols(); ++j) out(i, j) = filtered(i, j);
      continue;
    }
    const double inv_d = 1.0 / g.degree[i];
    for (int j = 0; j < out.cols(); ++j) out(i, j) *= inv_d;
  }
  if (config.standardize) out = standardize(out);
  return out;
}

}  // namespace sdge
