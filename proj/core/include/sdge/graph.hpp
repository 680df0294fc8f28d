#pragma once

#include <optional>
#include <ostream>
#include <string>
#include <vector>

#include "sdge/matrix.hpp"

namespace sdge {

/// Undirected weighted graph. The adjacency matrix is symmetric with a zero
/// diagonal; `degree[i]` is the weighted row sum of row i and is kept in sync
/// at construction. Attributes and labels are optional side data.
struct Graph {
  int n = 0;
  SparseMatrix adjacency;
  std::optional<DenseMatrix> attributes;
  std::optional<std::vector<int>> labels;
  std::vector<double> degree;

  static Graph from_adjacency(SparseMatrix adjacency);

  bool has_attributes() const { return attributes.has_value(); }
  bool has_labels() const { return labels.has_value(); }
  std::int64_t edge_count() const { return adjacency.nnz() / 2; }
  double total_weight() const;  // sum of degrees == 2 * weighted |E|
  std::vector<int> isolated_nodes() const;
};

/// Parse a whitespace-separated edge list ("u v" or "u v w", ids 0-based).
/// Lines whose first non-space character is '#' are comments. Duplicate edges
/// keep the first weight; a note is written to `warnings` when provided,
/// otherwise to stderr. Self-loops, negative ids and malformed lines are
/// rejected with the offending line number.
Graph load_edge_list(const std::string& path, std::optional<int> n_hint = std::nullopt,
                     std::vector<std::string>* warnings = nullptr);

/// Dense attribute table: one row per node, comma-separated finite reals.
DenseMatrix load_attributes_csv(const std::string& path, bool skip_header = false);

/// One integer per line.
std::vector<int> load_labels(const std::string& path);

void save_edge_list(const Graph& g, const std::string& path);

struct PowerOptions {
  // Result nnz budget is `nnz_budget_multiplier * nnz(A)` per power.
  std::int64_t nnz_budget_multiplier = 50;
  bool allow_dense = false;  // fall back to dense products when over budget
  int dense_limit = 5000;
  bool binarize = false;  // clamp every stored entry of each power to 1
};

/// A^1 .. A^r by repeated sparse products. Walk counts are kept as-is unless
/// `binarize` is set.
std::vector<SparseMatrix> matrix_power(const SparseMatrix& a, int r,
                                       const PowerOptions& options = {});

/// D^{-1/2} (M + I) D^{-1/2} with D the diagonal of row sums of M + I.
SparseMatrix sym_normalize(const SparseMatrix& m);

/// Combinatorial Laplacian L = D - W.
SparseMatrix laplacian(const Graph& g);

/// Random-walk normalized Laplacian I - D^{-1} A. Requires positive degrees;
/// with `self_loop_isolated` an isolated node is treated as having a unit
/// self-loop (its row becomes zero).
SparseMatrix rw_laplacian(const Graph& g, bool self_loop_isolated = false);

}  // namespace sdge
