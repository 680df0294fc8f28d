#include "sdge/clustering.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>
#include <random>
#include <stdexcept>
#include <unordered_map>

namespace sdge {

namespace {

double squared_distance(const double* a, const double* b, int d) {
  double acc = 0.0;
  for (int j = 0; j < d; ++j) {
    const double diff = a[j] - b[j];
    acc += diff * diff;
  }
  return acc;
}

}  // namespace

Partition Partition::from_assignment(std::vector<int> assignment, int k) {
  if (k < 1) throw std::invalid_argument("Partition: k must be >= 1");
  for (int a : assignment) {
    if (a < 0 || a >= k) {
      throw std::invalid_argument("Partition: assignment " + std::to_string(a) +
                                  " out of range [0, " + std::to_string(k) + ")");
    }
  }
  Partition p;
  p.assignment = std::move(assignment);
  p.k = k;
  return p;
}

Partition Partition::from_labels(const std::vector<int>& labels) {
  std::unordered_map<int, int> remap;
  std::vector<int> assignment;
  assignment.reserve(labels.size());
  for (int label : labels) {
    auto [it, inserted] = remap.emplace(label, static_cast<int>(remap.size()));
    assignment.push_back(it->second);
  }
  return from_assignment(std::move(assignment), std::max<int>(1, static_cast<int>(remap.size())));
}

int Partition::effective_clusters() const {
  std::vector<char> used(static_cast<size_t>(k), 0);
  for (int a : assignment) used[static_cast<size_t>(a)] = 1;
  int count = 0;
  for (char u : used) count += u;
  return count;
}

namespace {

KmeansResult kmeans_single(const DenseMatrix& points, int k, std::uint64_t seed,
                           int max_iterations, double shift_tolerance) {
  const int n = points.rows(), d = points.cols();
  std::mt19937_64 rng(seed);
  DenseMatrix centroids(k, d);

  // k-means++ seeding.
  std::vector<double> min_dist(static_cast<size_t>(n), std::numeric_limits<double>::infinity());
  std::vector<char> chosen(static_cast<size_t>(n), 0);
  {
    std::uniform_int_distribution<int> uniform(0, n - 1);
    int first = uniform(rng);
    chosen[static_cast<size_t>(first)] = 1;
    for (int j = 0; j < d; ++j) centroids(0, j) = points(first, j);
    for (int c = 1; c < k; ++c) {
      double total = 0.0;
      for (int i = 0; i < n; ++i) {
        const double dist = squared_distance(points.row_ptr(i), centroids.row_ptr(c - 1), d);
        if (dist < min_dist[static_cast<size_t>(i)]) min_dist[static_cast<size_t>(i)] = dist;
        total += min_dist[static_cast<size_t>(i)];
      }
      int pick = -1;
      if (total > 0.0) {
        std::uniform_real_distribution<double> unit(0.0, total);
        double target = unit(rng);
        for (int i = 0; i < n; ++i) {
          target -= min_dist[static_cast<size_t>(i)];
          if (target <= 0.0) {
            pick = i;
            break;
          }
        }
        if (pick < 0) pick = n - 1;
      }
      if (pick < 0 || chosen[static_cast<size_t>(pick)]) {
        // All remaining mass is on duplicates of chosen points; take the
        // lowest-index point not yet used so seeding stays deterministic.
        pick = -1;
        for (int i = 0; i < n; ++i) {
          if (!chosen[static_cast<size_t>(i)]) {
            pick = i;
            break;
          }
        }
        if (pick < 0) pick = 0;
      }
      chosen[static_cast<size_t>(pick)] = 1;
      for (int j = 0; j < d; ++j) centroids(c, j) = points(pick, j);
    }
  }

  KmeansResult result;
  std::vector<int> assignment(static_cast<size_t>(n), 0);
  std::vector<int> counts(static_cast<size_t>(k), 0);
  std::vector<double> point_cost(static_cast<size_t>(n), 0.0);

  for (int iteration = 0; iteration < max_iterations; ++iteration) {
    // Assignment step.
    double objective = 0.0;
    std::fill(counts.begin(), counts.end(), 0);
    for (int i = 0; i < n; ++i) {
      double best = std::numeric_limits<double>::infinity();
      int best_c = 0;
      for (int c = 0; c < k; ++c) {
        const double dist = squared_distance(points.row_ptr(i), centroids.row_ptr(c), d);
        if (dist < best) {
          best = dist;
          best_c = c;
        }
      }
      assignment[static_cast<size_t>(i)] = best_c;
      point_cost[static_cast<size_t>(i)] = best;
      counts[static_cast<size_t>(best_c)] += 1;
      objective += best;
    }
    result.objective_history.push_back(objective);
    result.iterations = iteration + 1;

    // Repair empty clusters before the update: each claims the point that is
    // currently farthest from its own centroid (lowest index on ties).
    for (int c = 0; c < k; ++c) {
      if (counts[static_cast<size_t>(c)] > 0) continue;
      int worst = -1;
      double worst_cost = -1.0;
      for (int i = 0; i < n; ++i) {
        const int owner = assignment[static_cast<size_t>(i)];
        if (counts[static_cast<size_t>(owner)] <= 1) continue;
        if (point_cost[static_cast<size_t>(i)] > worst_cost) {
          worst_cost = point_cost[static_cast<size_t>(i)];
          worst = i;
        }
      }
      if (worst < 0) continue;
      counts[static_cast<size_t>(assignment[static_cast<size_t>(worst)])] -= 1;
      assignment[static_cast<size_t>(worst)] = c;
      counts[static_cast<size_t>(c)] = 1;
      point_cost[static_cast<size_t>(worst)] = 0.0;
    }

    // Update step.
    DenseMatrix next(k, d);
    for (int i = 0; i < n; ++i) {
      const int c = assignment[static_cast<size_t>(i)];
      const double* src = points.row_ptr(i);
      double* dst = next.row_ptr(c);
      for (int j = 0; j < d; ++j) dst[j] += src[j];
    }
    double shift = 0.0;
    for (int c = 0; c < k; ++c) {
      if (counts[static_cast<size_t>(c)] == 0) continue;
      const double inv = 1.0 / counts[static_cast<size_t>(c)];
      double move = 0.0;
      for (int j = 0; j < d; ++j) {
        next(c, j) *= inv;
        const double delta = next(c, j) - centroids(c, j);
        move += delta * delta;
      }
      shift = std::max(shift, std::sqrt(move));
      for (int j = 0; j < d; ++j) centroids(c, j) = next(c, j);
    }
    if (shift < shift_tolerance) break;
  }

  result.partition = Partition::from_assignment(std::move(assignment), k);
  result.centroids = std::move(centroids);
  return result;
}

}  // namespace

KmeansResult kmeans_detailed(const DenseMatrix& points, int k, std::uint64_t seed,
                             int max_iterations, double shift_tolerance, int restarts) {
  const int n = points.rows();
  if (k < 1) throw std::invalid_argument("kmeans: k must be >= 1");
  if (k > n) {
    throw std::invalid_argument("kmeans: k = " + std::to_string(k) + " exceeds point count " +
                                std::to_string(n));
  }
  if (restarts < 1) throw std::invalid_argument("kmeans: restarts must be >= 1");

  // k-means++ is sensitive to outliers; independent restarts from the seed's
  // stream keep the best run by final objective.
  std::mt19937_64 stream(seed);
  KmeansResult best;
  bool have_best = false;
  for (int r = 0; r < restarts; ++r) {
    KmeansResult candidate =
        kmeans_single(points, k, stream(), max_iterations, shift_tolerance);
    if (!have_best || candidate.objective_history.back() < best.objective_history.back()) {
      best = std::move(candidate);
      have_best = true;
    }
  }
  return best;
}

Partition kmeans(const DenseMatrix& points, int k, std::uint64_t seed) {
  return kmeans_detailed(points, k, seed).partition;
}

std::vector<int> argmax_rows(const DenseMatrix& scores) {
  std::vector<int> out(static_cast<size_t>(scores.rows()), 0);
  for (int i = 0; i < scores.rows(); ++i) {
    const double* row = scores.row_ptr(i);
    int best = 0;
    for (int j = 1; j < scores.cols(); ++j) {
      if (row[j] > row[best]) best = j;
    }
    out[static_cast<size_t>(i)] = best;
  }
  return out;
}

void save_partition(const Partition& p, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("save_partition: cannot open " + path);
  for (int a : p.assignment) out << a << "\n";
}

Partition load_partition(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("load_partition: cannot open " + path);
  std::vector<int> assignment;
  int value = 0;
  while (in >> value) assignment.push_back(value);
  if (assignment.empty()) throw std::runtime_error("load_partition: empty file " + path);
  int k = 0;
  for (int a : assignment) k = std::max(k, a + 1);
  return Partition::from_assignment(std::move(assignment), k);
}

}  // namespace sdge
