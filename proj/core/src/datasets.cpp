#include "sdge/datasets.hpp"

#include <cmath>
#include <iostream>
#include <random>
#include <stdexcept>

#include "sdge/rng.hpp"

namespace sdge {

namespace {

void emit_warning(const std::string& message, std::vector<std::string>* warnings) {
  if (warnings != nullptr) {
    warnings->push_back(message);
  } else {
    std::cerr << "warning: " << message << "\n";
  }
}

}  // namespace

Graph generate_sbm(int blocks, int size_per_block, double p_in, double p_out, std::uint64_t seed,
                   std::vector<std::string>* warnings) {
  if (blocks < 1 || size_per_block < 1) {
    throw std::invalid_argument("generate_sbm: blocks and block size must be >= 1");
  }
  if (!(p_out >= 0.0 && p_out < p_in && p_in <= 1.0)) {
    throw std::invalid_argument("generate_sbm: need 0 <= p_out < p_in <= 1");
  }
  const int n = blocks * size_per_block;
  const double expected_degree =
      (size_per_block - 1) * p_in + (blocks - 1) * size_per_block * p_out;
  if (expected_degree < 1.0) {
    emit_warning("generate_sbm: expected degree " + std::to_string(expected_degree) +
                     " < 1, isolated nodes are likely",
                 warnings);
  }

  std::mt19937_64 rng = make_stream(seed, RngPurpose::Dataset);
  std::vector<int> labels(static_cast<size_t>(n));
  for (int i = 0; i < n; ++i) labels[static_cast<size_t>(i)] = i / size_per_block;

  std::vector<Triplet> trips;
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  for (int i = 0; i < n; ++i) {
    for (int j = i + 1; j < n; ++j) {
      const double p = labels[static_cast<size_t>(i)] == labels[static_cast<size_t>(j)] ? p_in
                                                                                        : p_out;
      if (unit(rng) < p) {
        trips.push_back({i, j, 1.0});
        trips.push_back({j, i, 1.0});
      }
    }
  }

  Graph g = Graph::from_adjacency(SparseMatrix::from_triplets(n, std::move(trips)));
  g.labels = std::move(labels);
  const auto isolated = g.isolated_nodes();
  if (!isolated.empty()) {
    emit_warning("generate_sbm: " + std::to_string(isolated.size()) +
                     " isolated node(s); probabilities may be too small",
                 warnings);
  }
  return g;
}

TabularDataset generate_hyperplane(int n, int dims, std::uint64_t seed,
                                   const std::vector<double>* coefficients,
                                   std::optional<double> threshold) {
  if (n < 2 || dims < 1) throw std::invalid_argument("generate_hyperplane: need n >= 2, dims >= 1");
  std::mt19937_64 rng = make_stream(seed, RngPurpose::Dataset);

  std::vector<double> a;
  if (coefficients != nullptr) {
    if (static_cast<int>(coefficients->size()) != dims) {
      throw std::invalid_argument("generate_hyperplane: coefficient count must equal dims");
    }
    a = *coefficients;
  } else {
    std::uniform_real_distribution<double> coeff(-1.0, 1.0);
    a.resize(static_cast<size_t>(dims));
    for (double& v : a) v = coeff(rng);
  }
  double a0;
  if (threshold.has_value()) {
    a0 = *threshold;
  } else {
    // Plane through the cell center keeps the two classes roughly balanced.
    a0 = 0.0;
    for (double v : a) a0 += 0.5 * v;
  }

  TabularDataset data;
  data.features = uniform_matrix(n, dims, 0.0, 1.0, rng);
  std::vector<int> labels(static_cast<size_t>(n));
  for (int i = 0; i < n; ++i) {
    double score = 0.0;
    for (int j = 0; j < dims; ++j) score += a[static_cast<size_t>(j)] * data.features(i, j);
    labels[static_cast<size_t>(i)] = score >= a0 ? 1 : 0;
  }
  data.labels = std::move(labels);
  return data;
}

TabularDataset generate_waveform(int n, int dims, std::uint64_t seed) {
  if (n < 2 || dims < 3) throw std::invalid_argument("generate_waveform: need n >= 2, dims >= 3");
  std::mt19937_64 rng = make_stream(seed, RngPurpose::Dataset);

  // Triangular bumps centered at 1/4, 1/2 and 3/4 of the attribute range.
  auto base_wave = [&](int wave, int t) {
    const double center = (wave + 1) * dims / 4.0;
    const double width = dims / 4.0;
    return std::max(0.0, 6.0 * (1.0 - std::abs(t - center) / width));
  };
  constexpr int kPairs[3][2] = {{0, 1}, {0, 2}, {1, 2}};

  TabularDataset data;
  data.features = DenseMatrix(n, dims);
  std::vector<int> labels(static_cast<size_t>(n));
  std::uniform_int_distribution<int> pick_class(0, 2);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  std::normal_distribution<double> noise(0.0, 1.0);
  for (int i = 0; i < n; ++i) {
    const int cls = pick_class(rng);
    const double u = unit(rng);
    for (int t = 0; t < dims; ++t) {
      data.features(i, t) = u * base_wave(kPairs[cls][0], t) +
                            (1.0 - u) * base_wave(kPairs[cls][1], t) + noise(rng);
    }
    labels[static_cast<size_t>(i)] = cls;
  }
  data.labels = std::move(labels);
  return data;
}

TabularDataset generate_tabular(TabularKind kind, int n, int dims, std::uint64_t seed) {
  switch (kind) {
    case TabularKind::Hyperplane:
      return generate_hyperplane(n, dims, seed);
    case TabularKind::Waveform:
      return generate_waveform(n, dims, seed);
  }
  throw std::invalid_argument("generate_tabular: unknown kind");
}

}  // namespace sdge
