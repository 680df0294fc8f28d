#pragma once

#include <optional>
#include <vector>

#include "sdge/graph.hpp"
#include "sdge/matrix.hpp"

namespace sdge {

struct TabularDataset {
  DenseMatrix features;
  std::optional<std::vector<int>> labels;
};

/// Column-wise standardization: mean 0 and sample standard deviation 1.
/// Zero-variance columns map to all-zeros.
DenseMatrix standardize(const DenseMatrix& x);

/// The k nearest neighbours of each row under Euclidean distance, self
/// excluded, ties broken by lower index. Each list has exactly k entries.
std::vector<std::vector<int>> knn_neighbors(const DenseMatrix& x, int k);

/// Union-symmetrized KNN graph with unit edge weights: the edge (i, j) exists
/// when i selected j or j selected i.
Graph build_knn_graph(const DenseMatrix& x, int k);

}  // namespace sdge
