#pragma once

#include <cmath>
#include <functional>

#include "sdge/graph.hpp"
#include "sdge/matrix.hpp"

namespace sdge {

/// Band-pass spectral modulator g(lambda) = exp(-((lambda - mu)^2 - 1) * theta / 2)
/// evaluated on the [0, 2] spectrum of the random-walk Laplacian.
struct ModulatorConfig {
  double mu = 0.2;
  double theta = 0.5;
  int order = 10;           // Chebyshev truncation
  bool standardize = true;  // per-column rescaling after propagation
  // Test hook: replaces the band-pass modulator when set.
  std::function<double(double)> modulator_override;

  double modulator(double lambda) const {
    if (modulator_override) return modulator_override(lambda);
    const double centered = lambda - mu;
    return std::exp(-0.5 * (centered * centered - 1.0) * theta);
  }
};

/// Apply the scalar function h to the operator Lbar (spectrum in [0, 2]) via a
/// truncated Chebyshev expansion on the shifted operator Lbar - I. Only
/// sparse-dense products are used; no dense matrix function is formed.
DenseMatrix chebyshev_apply(const DenseMatrix& z, const SparseMatrix& lbar, int order,
                            const std::function<double(double)>& h);

/// (I - g(Lbar)) Z with g the configured modulator.
DenseMatrix chebyshev_filter(const DenseMatrix& z, const SparseMatrix& lbar,
                             const ModulatorConfig& config);

/// Dense-eigendecomposition reference for chebyshev_filter; restricted to
/// n <= 500.
DenseMatrix exact_filter(const DenseMatrix& z, const SparseMatrix& lbar,
                         const ModulatorConfig& config);

/// Embedding enhancement: D^{-1} A (I - g(Lbar)) Z, followed by per-column
/// standardization unless disabled. Degrees must be positive unless
/// `self_loop_isolated` is set.
DenseMatrix propagate(const DenseMatrix& z, const Graph& g, const ModulatorConfig& config,
                      bool self_loop_isolated = false);

}  // namespace sdge
