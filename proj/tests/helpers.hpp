#pragma once

#include <random>
#include <vector>

#include "sdge/graph.hpp"
#include "sdge/matrix.hpp"

namespace sdge::test {

inline Graph graph_from_edges(int n, const std::vector<std::pair<int, int>>& edges,
                              double weight = 1.0) {
  std::vector<Triplet> trips;
  for (const auto& [u, v] : edges) {
    trips.push_back({u, v, weight});
    trips.push_back({v, u, weight});
  }
  return Graph::from_adjacency(SparseMatrix::from_triplets(n, std::move(trips)));
}

inline Graph path_graph(int n) {
  std::vector<std::pair<int, int>> edges;
  for (int i = 0; i + 1 < n; ++i) edges.emplace_back(i, i + 1);
  return graph_from_edges(n, edges);
}

inline Graph complete_graph(int n) {
  std::vector<std::pair<int, int>> edges;
  for (int i = 0; i < n; ++i) {
    for (int j = i + 1; j < n; ++j) edges.emplace_back(i, j);
  }
  return graph_from_edges(n, edges);
}

inline Graph two_triangles() {
  return graph_from_edges(6, {{0, 1}, {1, 2}, {0, 2}, {3, 4}, {4, 5}, {3, 5}});
}

/// Erdos-Renyi graph; rejects isolated outcomes by linking stray nodes to
/// node 0 so degree-sensitive operations stay usable.
inline Graph random_connected_graph(int n, double p, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  std::vector<std::pair<int, int>> edges;
  std::vector<int> degree(static_cast<size_t>(n), 0);
  for (int i = 0; i < n; ++i) {
    for (int j = i + 1; j < n; ++j) {
      if (unit(rng) < p) {
        edges.emplace_back(i, j);
        degree[i]++;
        degree[j]++;
      }
    }
  }
  for (int i = 0; i < n; ++i) {
    if (degree[i] == 0) {
      const int other = i == 0 ? 1 : 0;
      edges.emplace_back(std::min(i, other), std::max(i, other));
      degree[i]++;
      degree[other]++;
    }
  }
  return graph_from_edges(n, edges);
}

/// Dense repeated-multiplication oracle for adjacency powers.
inline DenseMatrix dense_power_oracle(const SparseMatrix& a, int r) {
  DenseMatrix acc = a.to_dense();
  const DenseMatrix base = a.to_dense();
  for (int s = 2; s <= r; ++s) acc = matmul(acc, base);
  return acc;
}

inline DenseMatrix random_dense(int rows, int cols, std::uint64_t seed, double lo = -1.0,
                                double hi = 1.0) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> dist(lo, hi);
  DenseMatrix m(rows, cols);
  for (double& v : m.data()) v = dist(rng);
  return m;
}

inline double max_abs_diff(const DenseMatrix& a, const DenseMatrix& b) {
  double worst = 0.0;
  for (int i = 0; i < a.rows(); ++i) {
    for (int j = 0; j < a.cols(); ++j) {
      worst = std::max(worst, std::abs(a(i, j) - b(i, j)));
    }
  }
  return worst;
}

inline double rel_frobenius_error(const DenseMatrix& got, const DenseMatrix& want) {
  double num = 0.0, den = 0.0;
  for (int i = 0; i < got.rows(); ++i) {
    for (int j = 0; j < got.cols(); ++j) {
      const double d = got(i, j) - want(i, j);
      num += d * d;
      den += want(i, j) * want(i, j);
    }
  }
  return std::sqrt(num / std::max(den, 1e-300));
}

}  // namespace sdge::test
