#include "sdge/knn.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace sdge {

DenseMatrix standardize(const DenseMatrix& x) {
  const int n = x.rows(), p = x.cols();
  if (n < 2) throw std::invalid_argument("standardize: need at least 2 rows");
  DenseMatrix out(n, p);
  for (int j = 0; j < p; ++j) {
    double mean = 0.0;
    for (int i = 0; i < n; ++i) mean += x(i, j);
    mean /= n;
    double var = 0.0;
    for (int i = 0; i < n; ++i) {
      const double d = x(i, j) - mean;
      var += d * d;
    }
    var /= (n - 1);
    if (var == 0.0) {
      for (int i = 0; i < n; ++i) out(i, j) = 0.0;
      continue;
    }
    const double inv_sd = 1.0 / std::sqrt(var);
    for (int i = 0; i < n; ++i) out(i, j) = (x(i, j) - mean) * inv_sd;
  }
  return out;
}

std::vector<std::vector<int>> knn_neighbors(const DenseMatrix& x, int k) {
  const int n = x.rows();
  if (k < 1) throw std::invalid_argument("knn_neighbors: k must be >= 1");
  if (k >= n) {
    throw std::invalid_argument("knn_neighbors: k = " + std::to_string(k) +
                                " must be smaller than the number of rows " + std::to_string(n));
  }

  std::vector<std::vector<int>> neighbors(static_cast<size_t>(n));
  std::vector<std::pair<double, int>> dist(static_cast<size_t>(n - 1));
  for (int i = 0; i < n; ++i) {
    dist.clear();
    const double* xi = x.row_ptr(i);
    for (int j = 0; j < n; ++j) {
      if (j == i) continue;
      const double* xj = x.row_ptr(j);
      double d2 = 0.0;
      for (int c = 0; c < x.cols(); ++c) {
        const double d = xi[c] - xj[c];
        d2 += d * d;
      }
      dist.emplace_back(d2, j);
    }
    // (distance, index) ordering makes ties deterministic: lower index wins.
    std::partial_sort(dist.begin(), dist.begin() + k, dist.end());
    auto& sel = neighbors[static_cast<size_t>(i)];
    sel.reserve(static_cast<size_t>(k));
    for (int t = 0; t < k; ++t) sel.push_back(dist[static_cast<size_t>(t)].second);
  }
  return neighbors;
}

Graph build_knn_graph(const DenseMatrix& x, int k) {
  const auto neighbors = knn_neighbors(x, k);
  const int n = x.rows();
  std::vector<Triplet> trips;
  trips.reserve(static_cast<size_t>(n) * static_cast<size_t>(k) * 2);
  for (int i = 0; i < n; ++i) {
    for (int j : neighbors[static_cast<size_t>(i)]) {
      trips.push_back({i, j, 1.0});
      trips.push_back({j, i, 1.0});
    }
  }
  // from_triplets sums duplicates; clamp the union back to unit weights.
  SparseMatrix adj = SparseMatrix::from_triplets(n, std::move(trips)).binarized();
  return Graph::from_adjacency(std::move(adj));
}

}  // namespace sdge
