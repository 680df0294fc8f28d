#pragma once

#include <cstdint>
#include <random>

#include "sdge/matrix.hpp"

namespace sdge {

/// Purpose tags for derived random streams. Each consumer of randomness gets
/// its own stream so one component never perturbs another's draw sequence.
enum class RngPurpose : std::uint64_t {
  Init = 1,
  Noise = 2,
  Negatives = 3,
  Kmeans = 4,
  Dataset = 5,
};

inline std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

/// Independent generator derived from (seed, purpose).
inline std::mt19937_64 make_stream(std::uint64_t seed, RngPurpose purpose) {
  return std::mt19937_64(splitmix64(seed * 0x100000001b3ULL + static_cast<std::uint64_t>(purpose)));
}

inline DenseMatrix gaussian_matrix(int rows, int cols, std::mt19937_64& rng) {
  DenseMatrix m(rows, cols);
  std::normal_distribution<double> dist(0.0, 1.0);
  for (double& v : m.data()) v = dist(rng);
  return m;
}

inline DenseMatrix uniform_matrix(int rows, int cols, double lo, double hi, std::mt19937_64& rng) {
  DenseMatrix m(rows, cols);
  std::uniform_real_distribution<double> dist(lo, hi);
  for (double& v : m.data()) v = dist(rng);
  return m;
}

}  // namespace sdge
