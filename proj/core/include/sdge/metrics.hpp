#pragma once

#include <cstdint>

#include "sdge/clustering.hpp"
#include "sdge/graph.hpp"

namespace sdge {

/// Newman modularity of a partition, summed over ordered node pairs including
/// the diagonal: Q = (1/2W) sum_{i,j} (A_ij - k_i k_j / 2W) [same community],
/// with 2W the total degree. Throws for edgeless graphs.
double modularity(const Graph& g, const Partition& p);

/// Confusion counts over unordered node pairs.
struct PairCounts {
  std::int64_t tp = 0;  // same predicted cluster, same true label
  std::int64_t fp = 0;  // same predicted cluster, different true label
  std::int64_t fn = 0;  // different predicted cluster, same true label
  std::int64_t tn = 0;  // different predicted cluster, different true label

  std::int64_t total() const { return tp + fp + fn + tn; }
};

/// Contingency-table pair counting in O(n + k * k').
PairCounts pair_counts(const Partition& predicted, const Partition& truth);

struct PairMetrics {
  double jaccard = 0.0;
  double fm = 0.0;  // Fowlkes-Mallows
  double f1 = 0.0;
  double kulczynski = 0.0;
};

/// Jaccard, Fowlkes-Mallows, F1 and Kulczynski from pair counts. Throws when
/// a denominator is empty, naming the affected metrics.
PairMetrics pair_metrics(const PairCounts& c);

}  // namespace sdge
