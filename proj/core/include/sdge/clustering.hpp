#pragma once

#include <cstdint>
#include <vector>

#include "sdge/matrix.hpp"

namespace sdge {

/// Hard community assignment: one cluster id per node, ids in [0, k).
struct Partition {
  std::vector<int> assignment;
  int k = 0;

  static Partition from_assignment(std::vector<int> assignment, int k);
  static Partition from_labels(const std::vector<int>& labels);  // relabels to 0..k-1

  int n() const { return static_cast<int>(assignment.size()); }
  /// Number of clusters that actually received at least one node.
  int effective_clusters() const;
};

struct KmeansResult {
  Partition partition;
  DenseMatrix centroids;
  std::vector<double> objective_history;  // sum of squared distances per iteration
  int iterations = 0;
};

/// Lloyd's algorithm with k-means++ seeding from the given seed. Empty
/// clusters are repaired by claiming the point farthest from its centroid.
/// Runs `restarts` independent seedings from the seed's stream and keeps the
/// lowest final objective. Deterministic for a fixed seed; ties break toward
/// the lower index.
KmeansResult kmeans_detailed(const DenseMatrix& points, int k, std::uint64_t seed,
                             int max_iterations = 300, double shift_tolerance = 1e-4,
                             int restarts = 8);

Partition kmeans(const DenseMatrix& points, int k, std::uint64_t seed);

std::vector<int> argmax_rows(const DenseMatrix& scores);

void save_partition(const Partition& p, const std::string& path);
Partition load_partition(const std::string& path);

}  // namespace sdge
