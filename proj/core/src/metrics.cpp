#include "sdge/metrics.hpp"

#include <cmath>
#include <stdexcept>

namespace sdge {

double modularity(const Graph& g, const Partition& p) {
  if (p.n() != g.n) {
    throw std::invalid_argument("modularity: partition covers " + std::to_string(p.n()) +
                                " nodes, graph has " + std::to_string(g.n));
  }
  const double two_w = g.total_weight();
  if (two_w == 0.0) {
    throw std::invalid_argument("modularity: graph has no edges (division by 2|E|)");
  }

  // Edge term, grouped per row so a single community reproduces the degree
  // sum bit for bit and yields Q = 0 exactly.
  double intra = 0.0;
  const auto& a = g.adjacency;
  for (int i = 0; i < g.n; ++i) {
    const int ci = p.assignment[static_cast<size_t>(i)];
    double row_acc = 0.0;
    for (int q = a.row_begin(i); q < a.row_end(i); ++q) {
      if (p.assignment[static_cast<size_t>(a.cols()[q])] == ci) row_acc += a.values()[q];
    }
    intra += row_acc;
  }

  // Degree term: sum over ordered same-community pairs (diagonal included)
  // of k_i k_j equals the squared per-community degree mass.
  std::vector<double> community_degree(static_cast<size_t>(p.k), 0.0);
  for (int i = 0; i < g.n; ++i) {
    community_degree[static_cast<size_t>(p.assignment[static_cast<size_t>(i)])] += g.degree[i];
  }
  double degree_term = 0.0;
  for (double mass : community_degree) degree_term += mass * mass;

  return intra / two_w - degree_term / (two_w * two_w);
}

PairCounts pair_counts(const Partition& predicted, const Partition& truth) {
  if (predicted.n() != truth.n()) {
    throw std::invalid_argument("pair_counts: partition lengths differ (" +
                                std::to_string(predicted.n()) + " vs " +
                                std::to_string(truth.n()) + ")");
  }
  const int n = predicted.n();
  const int kp = predicted.k, kt = truth.k;

  std::vector<std::int64_t> table(static_cast<size_t>(kp) * static_cast<size_t>(kt), 0);
  std::vector<std::int64_t> pred_sizes(static_cast<size_t>(kp), 0);
  std::vector<std::int64_t> true_sizes(static_cast<size_t>(kt), 0);
  for (int i = 0; i < n; ++i) {
    const int a = predicted.assignment[static_cast<size_t>(i)];
    const int b = truth.assignment[static_cast<size_t>(i)];
    table[static_cast<size_t>(a) * kt + b] += 1;
    pred_sizes[static_cast<size_t>(a)] += 1;
    true_sizes[static_cast<size_t>(b)] += 1;
  }

  auto choose2 = [](std::int64_t m) { return m * (m - 1) / 2; };
  std::int64_t same_both = 0;
  for (std::int64_t cell : table) same_both += choose2(cell);
  std::int64_t same_pred = 0;
  for (std::int64_t size : pred_sizes) same_pred += choose2(size);
  std::int64_t same_true = 0;
  for (std::int64_t size : true_sizes) same_true += choose2(size);

  PairCounts c;
  c.tp = same_both;
  c.fp = same_pred - same_both;
  c.fn = same_true - same_both;
  c.tn = choose2(n) - c.tp - c.fp - c.fn;
  return c;
}

PairMetrics pair_metrics(const PairCounts& c) {
  if (c.tp + c.fp == 0) {
    throw std::invalid_argument(
        "pair_metrics: TP+FP = 0, precision undefined (affects Jaccard, FM, F1, Kulczynski)");
  }
  if (c.tp + c.fn == 0) {
    throw std::invalid_argument(
        "pair_metrics: TP+FN = 0, recall undefined (affects Jaccard, FM, F1, Kulczynski)");
  }
  const double tp = static_cast<double>(c.tp);
  const double precision = tp / static_cast<double>(c.tp + c.fp);
  const double recall = tp / static_cast<double>(c.tp + c.fn);

  PairMetrics m;
  m.jaccard = tp / static_cast<double>(c.tp + c.fn + c.fp);
  m.fm = tp / std::sqrt(static_cast<double>(c.tp + c.fn) * static_cast<double>(c.tp + c.fp));
  m.f1 = (precision + recall) > 0.0 ? 2.0 * precision * recall / (precision + recall) : 0.0;
  m.kulczynski = 0.5 * (precision + recall);
  return m;
}

}  // namespace sdge
