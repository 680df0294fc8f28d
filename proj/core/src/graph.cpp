#include "sdge/graph.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <iostream>
#include <sstream>
#include <stdexcept>
#include <unordered_map>

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

Graph Graph::from_adjacency(SparseMatrix adjacency) {
  const int n = adjacency.n();
  for (int i = 0; i < n; ++i) {
    if (adjacency.entry(i, i) != 0.0) {
      throw std::invalid_argument("Graph: adjacency has nonzero diagonal at node " +
                                  std::to_string(i));
    }
  }
  if (!adjacency.is_symmetric()) {
    throw std::invalid_argument("Graph: adjacency is not symmetric");
  }
  Graph g;
  g.n = n;
  g.degree = adjacency.row_sums();
  g.adjacency = std::move(adjacency);
  return g;
}

double Graph::total_weight() const {
  double acc = 0.0;
  for (double d : degree) acc += d;
  return acc;
}

std::vector<int> Graph::isolated_nodes() const {
  std::vector<int> out;
  for (int i = 0; i < n; ++i) {
    if (degree[i] == 0.0) out.push_back(i);
  }
  return out;
}

Graph load_edge_list(const std::string& path, std::optional<int> n_hint,
                     std::vector<std::string>* warnings) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("load_edge_list: cannot open " + path);

  struct PairHash {
    size_t operator()(const std::pair<int, int>& p) const {
      return std::hash<std::int64_t>()((static_cast<std::int64_t>(p.first) << 32) ^ p.second);
    }
  };
  std::unordered_map<std::pair<int, int>, double, PairHash> edges;

  std::string line;
  int line_no = 0;
  int max_id = -1;
  int duplicates = 0;
  while (std::getline(in, line)) {
    ++line_no;
    size_t first = line.find_first_not_of(" \t\r");
    if (first == std::string::npos) continue;
    if (line[first] == '#') continue;

    std::istringstream ls(line);
    long long u = -1, v = -1;
    double w = 1.0;
    if (!(ls >> u >> v)) {
      throw std::runtime_error("load_edge_list: malformed line " + std::to_string(line_no) +
                               " in " + path);
    }
    std::string rest;
    if (ls >> rest) {
      try {
        size_t used = 0;
        w = std::stod(rest, &used);
        if (used != rest.size()) throw std::invalid_argument("trailing");
      } catch (const std::exception&) {
        throw std::runtime_error("load_edge_list: malformed weight on line " +
                                 std::to_string(line_no) + " in " + path);
      }
      std::string extra;
      if (ls >> extra) {
        throw std::runtime_error("load_edge_list: too many fields on line " +
                                 std::to_string(line_no) + " in " + path);
      }
    }
    if (u < 0 || v < 0) {
      throw std::runtime_error("load_edge_list: negative node id on line " +
                               std::to_string(line_no));
    }
    if (u == v) {
      throw std::runtime_error("load_edge_list: self-loop " + std::to_string(u) + "-" +
                               std::to_string(v) + " rejected on line " + std::to_string(line_no));
    }
    if (!std::isfinite(w) || w <= 0.0) {
      throw std::runtime_error("load_edge_list: edge weight must be positive and finite on line " +
                               std::to_string(line_no));
    }
    const int a = static_cast<int>(std::min(u, v));
    const int b = static_cast<int>(std::max(u, v));
    max_id = std::max(max_id, b);
    auto [it, inserted] = edges.emplace(std::make_pair(a, b), w);
    if (!inserted) ++duplicates;  // keep first weight
  }
  if (edges.empty()) {
    throw std::runtime_error("load_edge_list: no edges found in " + path);
  }
  if (duplicates > 0) {
    emit_warning(std::to_string(duplicates) + " duplicate edge(s) collapsed in " + path +
                     " (first weight kept)",
                 warnings);
  }

  const int n = std::max(max_id + 1, n_hint.value_or(0));
  std::vector<Triplet> trips;
  trips.reserve(edges.size() * 2);
  for (const auto& [key, w] : edges) {
    trips.push_back({key.first, key.second, w});
    trips.push_back({key.second, key.first, w});
  }
  return Graph::from_adjacency(SparseMatrix::from_triplets(n, std::move(trips)));
}

DenseMatrix load_attributes_csv(const std::string& path, bool skip_header) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("load_attributes_csv: cannot open " + path);

  std::vector<std::vector<double>> rows;
  std::string line;
  int line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (skip_header && line_no == 1) continue;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;

    std::vector<double> row;
    std::istringstream ls(line);
    std::string cell;
    while (std::getline(ls, cell, ',')) {
      try {
        row.push_back(std::stod(cell));
      } catch (const std::exception&) {
        throw std::runtime_error("load_attributes_csv: bad value '" + cell + "' on line " +
                                 std::to_string(line_no));
      }
      if (!std::isfinite(row.back())) {
        throw std::runtime_error("load_attributes_csv: non-finite value on line " +
                                 std::to_string(line_no));
      }
    }
    if (!rows.empty() && row.size() != rows.front().size()) {
      throw std::runtime_error("load_attributes_csv: ragged row on line " +
                               std::to_string(line_no));
    }
    rows.push_back(std::move(row));
  }
  if (rows.empty()) throw std::runtime_error("load_attributes_csv: empty file " + path);

  DenseMatrix m(static_cast<int>(rows.size()), static_cast<int>(rows.front().size()));
  for (int i = 0; i < m.rows(); ++i) {
    for (int j = 0; j < m.cols(); ++j) m(i, j) = rows[i][j];
  }
  return m;
}

std::vector<int> load_labels(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("load_labels: cannot open " + path);
  std::vector<int> labels;
  std::string line;
  int line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    try {
      labels.push_back(std::stoi(line));
    } catch (const std::exception&) {
      throw std::runtime_error("load_labels: bad label on line " + std::to_string(line_no));
    }
  }
  if (labels.empty()) throw std::runtime_error("load_labels: empty file " + path);
  return labels;
}

void save_edge_list(const Graph& g, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("save_edge_list: cannot open " + path);
  out.precision(17);
  const auto& a = g.adjacency;
  for (int i = 0; i < g.n; ++i) {
    for (int p = a.row_begin(i); p < a.row_end(i); ++p) {
      const int j = a.cols()[p];
      if (j <= i) continue;  // upper triangle only
      out << i << " " << j;
      if (a.values()[p] != 1.0) out << " " << a.values()[p];
      out << "\n";
    }
  }
}

std::vector<SparseMatrix> matrix_power(const SparseMatrix& a, int r, const PowerOptions& options) {
  if (r < 1) throw std::invalid_argument("matrix_power: order must be >= 1");
  std::vector<SparseMatrix> powers;
  powers.reserve(static_cast<size_t>(r));
  powers.push_back(options.binarize ? a.binarized() : a);

  const std::int64_t budget = options.nnz_budget_multiplier > 0
                                  ? options.nnz_budget_multiplier * std::max<std::int64_t>(a.nnz(), 1)
                                  : 0;
  for (int s = 2; s <= r; ++s) {
    SparseMatrix next;
    try {
      next = sparse_multiply(powers.back(), a, budget);
    } catch (const std::runtime_error&) {
      if (!options.allow_dense || a.n() > options.dense_limit) throw;
      next = SparseMatrix::from_dense(matmul(powers.back().to_dense(), a.to_dense()));
    }
    powers.push_back(options.binarize ? next.binarized() : std::move(next));
  }
  return powers;
}

SparseMatrix sym_normalize(const SparseMatrix& m) {
  const int n = m.n();
  std::vector<double> dhat = m.row_sums();
  for (double& d : dhat) d += 1.0;  // M + I row sums, always >= 1

  std::vector<double> inv_sqrt(dhat.size());
  for (size_t i = 0; i < dhat.size(); ++i) inv_sqrt[i] = 1.0 / std::sqrt(dhat[i]);

  std::vector<Triplet> trips;
  trips.reserve(static_cast<size_t>(m.nnz()) + static_cast<size_t>(n));
  for (int i = 0; i < n; ++i) {
    trips.push_back({i, i, inv_sqrt[i] * inv_sqrt[i]});  // identity contribution
    for (int p = m.row_begin(i); p < m.row_end(i); ++p) {
      const int j = m.cols()[p];
      trips.push_back({i, j, m.values()[p] * inv_sqrt[i] * inv_sqrt[j]});
    }
  }
  return SparseMatrix::from_triplets(n, std::move(trips));
}

SparseMatrix laplacian(const Graph& g) {
  std::vector<Triplet> trips;
  trips.reserve(static_cast<size_t>(g.adjacency.nnz()) + static_cast<size_t>(g.n));
  for (int i = 0; i < g.n; ++i) {
    if (g.degree[i] != 0.0) trips.push_back({i, i, g.degree[i]});
    for (int p = g.adjacency.row_begin(i); p < g.adjacency.row_end(i); ++p) {
      trips.push_back({i, g.adjacency.cols()[p], -g.adjacency.values()[p]});
    }
  }
  return SparseMatrix::from_triplets(g.n, std::move(trips));
}

SparseMatrix rw_laplacian(const Graph& g, bool self_loop_isolated) {
  std::vector<Triplet> trips;
  trips.reserve(static_cast<size_t>(g.adjacency.nnz()) + static_cast<size_t>(g.n));
  for (int i = 0; i < g.n; ++i) {
    if (g.degree[i] == 0.0) {
      if (!self_loop_isolated) {
        throw std::runtime_error("rw_laplacian: node " + std::to_string(i) +
                                 " is isolated; prune it or pass --self-loop-isolated");
      }
      // Unit self-loop: I - D^{-1}A row becomes all zero.
      continue;
    }
    trips.push_back({i, i, 1.0});
    const double inv_d = 1.0 / g.degree[i];
    for (int p = g.adjacency.row_begin(i); p < g.adjacency.row_end(i); ++p) {
      trips.push_back({i, g.adjacency.cols()[p], -g.adjacency.values()[p] * inv_d});
    }
  }
  return SparseMatrix::from_triplets(g.n, std::move(trips));
}

}  // namespace sdge
