#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "sdge/graph.hpp"
#include "sdge/knn.hpp"

namespace sdge {

/// Planted-partition graph: within-block pairs are edged with probability
/// p_in, cross-block pairs with p_out (0 <= p_out < p_in <= 1). Labels are the
/// block ids. Isolated nodes trigger a warning.
Graph generate_sbm(int blocks, int size_per_block, double p_in, double p_out, std::uint64_t seed,
                   std::vector<std::string>* warnings = nullptr);

/// Uniform points in [0,1]^d labeled by the signed threshold rule
/// sum_i a_i x_i >= a_0. Coefficients default to a seeded draw; pass them
/// explicitly for reproducible fixtures.
TabularDataset generate_hyperplane(int n, int dims, std::uint64_t seed,
                                   const std::vector<double>* coefficients = nullptr,
                                   std::optional<double> threshold = std::nullopt);

/// Three classes, each a random convex combination of two of three triangular
/// base waveforms plus unit Gaussian noise.
TabularDataset generate_waveform(int n, int dims, std::uint64_t seed);

enum class TabularKind { Hyperplane, Waveform };

TabularDataset generate_tabular(TabularKind kind, int n, int dims, std::uint64_t seed);

}  // namespace sdge
