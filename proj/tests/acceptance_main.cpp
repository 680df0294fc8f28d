// Acceptance suite: one self-contained check per release criterion, each
// printing a single PASS/FAIL line. Exits nonzero when any criterion fails.

#include <Eigen/Dense>
#include <Eigen/Eigenvalues>
#include <chrono>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <random>
#include <sstream>
#include <vector>

#include "helpers.hpp"
#include "sdge/experiment.hpp"
#include "sdge/metrics.hpp"
#include "sdge/spectral.hpp"
#include "sdge/training.hpp"

using namespace sdge;
using namespace sdge::test;
namespace fs = std::filesystem;

namespace {

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point start) {
  return std::chrono::duration<double>(Clock::now() - start).count();
}

std::string slurp(const fs::path& path) {
  std::ifstream in(path);
  if (!in) return {};
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

fs::path scratch_dir() {
  static const fs::path dir =
      fs::temp_directory_path() / ("sdge-acceptance-" + std::to_string(std::random_device{}()));
  fs::create_directories(dir);
  return dir;
}

ExperimentConfig sbm_experiment(const std::string& out) {
  // The reference instance: 4 blocks of 50, p_in 0.3, p_out 0.02, defaults
  // r=4, concat aggregation, 100 epochs.
  ExperimentConfig config;
  config.dataset.kind = DatasetSpec::Kind::Sbm;
  config.dataset.sbm_blocks = 4;
  config.dataset.sbm_block_size = 50;
  config.dataset.p_in = 0.3;
  config.dataset.p_out = 0.02;
  config.output_dir = out;
  return config;
}

// --- criterion 1: gradient fidelity on the full training loss --------------

bool gradient_fidelity(std::string& detail) {
  const auto start = Clock::now();

  const Graph g = random_connected_graph(10, 0.4, 2077);
  ModelConfig mc;
  mc.layer_widths = {10, 8, 4};  // two hidden layers
  mc.mlp_hidden = 6;
  mc.embed_dim = 5;
  mc.include_attributes = false;
  ModelState model = ModelState::create(mc, 2, 10, 8, 5, 2078);

  const auto powers = matrix_power(g.adjacency, 2);
  std::vector<SparseMatrix> s_hats;
  for (const auto& p : powers) s_hats.push_back(sym_normalize(p));
  const SparseMatrix lap = laplacian(g);
  const DenseMatrix features = s_hats[0].to_dense();
  const DenseMatrix noise = random_dense(10, 5, 2079);
  NegativeSampler sampler(g, 2, 2080);
  const auto negatives = sampler.sample_all();
  const LossWeights weights{0.8, 0.5, 4.0};
  const std::vector<double> alpha = {0.55, 0.45};

  auto build = [&](ad::Tape& tape) {
    const ad::NodeId input = tape.constant(features);
    const auto outputs = gcn_forward(tape, model, s_hats, input);
    const ad::NodeId fused = fuse(tape, outputs, alpha, mc, std::nullopt);
    const ad::NodeId z = mlp_forward(tape, fused, *model.mlp);
    const ad::NodeId z_pos = tape.axpy(z, tape.constant(noise), 0.1);
    const ad::NodeId ls = contrastive_loss_node(tape, z, z_pos, negatives, weights.tau);
    const ad::NodeId lsa = reconstruction_loss_node(tape, z, g.adjacency, input);
    const ad::NodeId lr = regularization_loss_node(tape, z, lap);
    return total_loss_node(tape, ls, lsa, lr, weights);
  };
  const auto report = ad::gradient_check(build, model.parameters(), 1e-5);
  const double elapsed = seconds_since(start);

  std::ostringstream oss;
  oss << "max rel error " << report.max_rel_error << " over " << report.entries_checked
      << " entries (worst " << report.worst_entry << "), " << elapsed << " s";
  detail = oss.str();
  return report.max_rel_error < 1e-4 && elapsed < 10.0;
}

// --- criterion 2: pair-counting metrics vs brute force ---------------------

PairCounts pair_counts_oracle(const Partition& predicted, const Partition& truth) {
  PairCounts c;
  for (int i = 0; i < predicted.n(); ++i) {
    for (int j = i + 1; j < predicted.n(); ++j) {
      const bool sp = predicted.assignment[i] == predicted.assignment[j];
      const bool st = truth.assignment[i] == truth.assignment[j];
      if (sp && st) ++c.tp;
      if (sp && !st) ++c.fp;
      if (!sp && st) ++c.fn;
      if (!sp && !st) ++c.tn;
    }
  }
  return c;
}

bool metric_oracle_equivalence(std::string& detail) {
  std::mt19937_64 rng(501);
  auto random_partition = [&](int n, int k) {
    std::uniform_int_distribution<int> dist(0, k - 1);
    std::vector<int> a(static_cast<size_t>(n));
    for (int& v : a) v = dist(rng);
    return Partition::from_labels(a);
  };

  for (int trial = 0; trial < 50; ++trial) {
    const Partition pred = random_partition(30, 2 + static_cast<int>(rng() % 5));
    const Partition truth = random_partition(30, 2 + static_cast<int>(rng() % 5));
    const PairCounts fast = pair_counts(pred, truth);
    const PairCounts slow = pair_counts_oracle(pred, truth);
    if (fast.tp != slow.tp || fast.fp != slow.fp || fast.fn != slow.fn || fast.tn != slow.tn) {
      detail = "pair counts diverge from the brute-force oracle on trial " +
               std::to_string(trial);
      return false;
    }
    const PairMetrics a = pair_metrics(fast);
    const PairMetrics b = pair_metrics(slow);
    if (a.jaccard != b.jaccard || a.fm != b.fm || a.f1 != b.f1 ||
        a.kulczynski != b.kulczynski) {
      detail = "metrics diverge on trial " + std::to_string(trial);
      return false;
    }
  }

  std::uniform_int_distribution<std::int64_t> count_dist(0, 400);
  int checked = 0;
  while (checked < 1000) {
    const PairCounts c{count_dist(rng), count_dist(rng), count_dist(rng), count_dist(rng)};
    if (c.tp + c.fp == 0 || c.tp + c.fn == 0) continue;
    const PairMetrics m = pair_metrics(c);
    if (!(m.kulczynski >= m.fm - 1e-12 && m.fm >= m.f1 - 1e-12 &&
          m.f1 >= m.jaccard - 1e-12)) {
      detail = "ordering K >= FM >= F1 >= J violated";
      return false;
    }
    ++checked;
  }
  detail = "50 oracle comparisons exact; ordering held on 1000 random counts";
  return true;
}

// --- criterion 3: modularity oracle ----------------------------------------

double modularity_oracle(const Graph& g, const Partition& p) {
  const double two_m = g.total_weight();
  double q = 0.0;
  for (int i = 0; i < g.n; ++i) {
    for (int j = 0; j < g.n; ++j) {
      if (p.assignment[i] != p.assignment[j]) continue;
      q += g.adjacency.entry(i, j) - g.degree[i] * g.degree[j] / two_m;
    }
  }
  return q / two_m;
}

bool modularity_criterion(std::string& detail) {
  std::mt19937_64 rng(601);
  double worst = 0.0;
  for (int trial = 0; trial < 20; ++trial) {
    const int n = 10 + static_cast<int>(rng() % 41);
    const Graph g = random_connected_graph(n, 0.2, rng());
    std::uniform_int_distribution<int> dist(0, 3);
    std::vector<int> a(static_cast<size_t>(n));
    for (int& v : a) v = dist(rng);
    const Partition p = Partition::from_labels(a);
    worst = std::max(worst, std::abs(modularity(g, p) - modularity_oracle(g, p)));
  }

  bool single_zero = true;
  for (std::uint64_t seed : {1, 2, 3}) {
    const Graph g = random_connected_graph(25, 0.25, seed);
    const Partition one = Partition::from_assignment(std::vector<int>(25, 0), 1);
    single_zero = single_zero && modularity(g, one) == 0.0;
  }

  const Graph triangles = two_triangles();
  const double q = modularity(triangles, Partition::from_assignment({0, 0, 0, 1, 1, 1}, 2));

  std::ostringstream oss;
  oss << "oracle gap " << worst << ", single-community exact zero: "
      << (single_zero ? "yes" : "no") << ", two-triangle Q = " << q;
  detail = oss.str();
  return worst < 1e-12 && single_zero && std::abs(q - 0.5) < 1e-14;
}

// --- criterion 4: spectral filter fidelity ----------------------------------

bool spectral_fidelity(std::string& detail) {
  std::mt19937_64 rng(701);
  double worst32 = 0.0;
  bool monotone = true;
  for (int trial = 0; trial < 10; ++trial) {
    const int n = 30 + static_cast<int>(rng() % 71);  // up to 100
    const Graph g = random_connected_graph(n, 0.15, rng());
    const SparseMatrix lbar = rw_laplacian(g);
    const DenseMatrix z = random_dense(n, 5, rng());
    ModulatorConfig config;
    config.standardize = false;
    const DenseMatrix exact = exact_filter(z, lbar, config);

    double previous = std::numeric_limits<double>::infinity();
    for (int order : {4, 8, 16, 32, 64}) {
      config.order = order;
      const double err = rel_frobenius_error(chebyshev_filter(z, lbar, config), exact);
      if (order == 32) worst32 = std::max(worst32, err);
      if (err > previous + 1e-12) monotone = false;
      previous = err;
    }
  }
  std::ostringstream oss;
  oss << "worst order-32 relative error " << worst32
      << ", error non-increasing in order: " << (monotone ? "yes" : "no");
  detail = oss.str();
  return worst32 < 1e-4 && monotone;
}

// --- criterion 5: sym-normalization spectrum --------------------------------

bool normalization_spectrum(std::string& detail) {
  std::mt19937_64 rng(801);
  double lo = 0.0, hi = 0.0;
  for (int trial = 0; trial < 10; ++trial) {
    const int n = 15 + static_cast<int>(rng() % 36);  // up to 50
    const Graph g = random_connected_graph(n, 0.2, rng());
    const auto powers = matrix_power(g.adjacency, 4);
    for (const auto& p : powers) {
      const DenseMatrix s = sym_normalize(p).to_dense();
      Eigen::MatrixXd m(n, n);
      for (int i = 0; i < n; ++i) {
        for (int j = 0; j < n; ++j) m(i, j) = s(i, j);
      }
      const Eigen::VectorXd ev = Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd>(m).eigenvalues();
      lo = std::min(lo, ev.minCoeff());
      hi = std::max(hi, ev.maxCoeff());
    }
  }
  std::ostringstream oss;
  oss << "spectrum range [" << lo << ", " << hi << "] over 10 graphs, r = 1..4";
  detail = oss.str();
  return lo >= -1.0 - 1e-10 && hi <= 1.0 + 1e-10;
}

// --- criterion 6: end-to-end SBM recovery -----------------------------------

double spectral_clustering_f1(const Graph& g, int k, const Partition& truth) {
  // Dense eigenvectors of the normalized adjacency; top-k rows clustered by
  // k-means. Confirms the instance is easy independent of the pipeline.
  const DenseMatrix s = sym_normalize(g.adjacency).to_dense();
  Eigen::MatrixXd m(g.n, g.n);
  for (int i = 0; i < g.n; ++i) {
    for (int j = 0; j < g.n; ++j) m(i, j) = s(i, j);
  }
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> solver(m);
  DenseMatrix embedding(g.n, k);
  for (int c = 0; c < k; ++c) {
    const auto column = solver.eigenvectors().col(g.n - 1 - c);
    for (int i = 0; i < g.n; ++i) embedding(i, c) = column(i);
  }
  const Partition p = kmeans(embedding, k, 7);
  return pair_metrics(pair_counts(p, truth)).f1;
}

bool sbm_recovery(std::string& detail) {
  const auto start = Clock::now();

  // Stage 1: the derived bar is justified only if plain spectral clustering
  // solves the instance.
  const Graph probe = generate_sbm(4, 50, 0.3, 0.02, 1);
  const double spectral_f1 =
      spectral_clustering_f1(probe, 4, Partition::from_labels(*probe.labels));
  if (spectral_f1 < 0.99) {
    detail = "spectral clustering baseline failed: F1 = " + std::to_string(spectral_f1);
    return false;
  }

  ExperimentConfig config = sbm_experiment((scratch_dir() / "sbm-recovery").string());
  config.seeds = {1, 2, 3};
  const auto reports = run_experiment(config);

  std::vector<double> f1;
  for (const auto& r : reports) f1.push_back(r.metrics->f1);
  std::sort(f1.begin(), f1.end());
  const double median = f1[1];
  const double elapsed = seconds_since(start);

  std::ostringstream oss;
  oss << "spectral baseline F1 " << spectral_f1 << "; SDGE F1 per seed {" << f1[0] << ", "
      << f1[1] << ", " << f1[2] << "}, median " << median << ", " << elapsed << " s";
  detail = oss.str();
  return median >= 0.9 && elapsed < 300.0;
}

// --- criterion 7: training progress -----------------------------------------

bool training_progress(std::string& detail) {
  ExperimentConfig config = sbm_experiment((scratch_dir() / "progress").string());
  config.seeds = {1, 2, 3};
  const auto reports = run_experiment(config);

  for (const auto& report : reports) {
    const std::string history = slurp(fs::path(report.directory) / "history.csv");
    if (history.empty()) {
      detail = "history.csv missing for seed " + std::to_string(report.seed);
      return false;
    }
    std::istringstream lines(history);
    std::string line;
    std::getline(lines, line);  // header
    double first_total = 0.0, last_total = 0.0;
    int expected_epoch = 0;
    bool monotone = true;
    while (std::getline(lines, line)) {
      const size_t comma = line.find(',');
      if (std::stoi(line.substr(0, comma)) != expected_epoch) monotone = false;
      const size_t last_comma = line.rfind(',');
      last_total = std::stod(line.substr(last_comma + 1));
      if (expected_epoch == 0) first_total = last_total;
      ++expected_epoch;
    }
    if (!monotone || expected_epoch == 0) {
      detail = "history.csv not monotone in the epoch index";
      return false;
    }
    if (!(last_total < first_total)) {
      detail = "loss did not decrease for seed " + std::to_string(report.seed);
      return false;
    }
  }
  detail = "final loss strictly below the initial loss for all 3 seeds; history monotone";
  return true;
}

// --- criterion 8: ablation harness parity ------------------------------------

bool ablation_parity(std::string& detail) {
  const fs::path root = scratch_dir() / "ablate";

  struct Variant {
    std::string name;
    std::function<void(TrainConfig&)> apply;
  };
  const std::vector<Variant> variants = {
      {"cat", [](TrainConfig& t) { t.model.aggregation = Aggregation::Concat; }},
      {"sum", [](TrainConfig& t) { t.model.aggregation = Aggregation::Sum; }},
      {"relu", [](TrainConfig& t) { t.model.use_plain_relu = true; }},
      {"no-spectral", [](TrainConfig& t) { t.spectral = SpectralSchedule::Off; }},
      {"gcn-ae", [](TrainConfig& t) { t.gcn_ae = true; }},
  };

  for (const Variant& variant : variants) {
    ExperimentConfig config = sbm_experiment((root / variant.name).string());
    config.train.epochs = 30;
    variant.apply(config.train);
    const auto reports = run_experiment(config);
    const std::string metrics = slurp(fs::path(reports[0].directory) / "metrics.json");
    for (const char* field : {"\"f1\"", "\"jaccard\"", "\"modularity\"", "\"final_loss\""}) {
      if (metrics.find(field) == std::string::npos) {
        detail = "variant " + variant.name + " missing field " + field;
        return false;
      }
    }
    if (variant.name == "no-spectral" && reports[0].spectral_seconds != 0.0) {
      detail = "no-spectral run reported a nonzero spectral stage time";
      return false;
    }
  }

  // Timing claim: with propagation inside the loop (the literal algorithm
  // placement), the enhanced pipeline costs more wall time than the same
  // pipeline with propagation off. Median of 3 repeats, identical seed and
  // epoch count.
  auto pipeline_seconds = [&](SpectralSchedule schedule) {
    std::vector<double> totals;
    for (int repeat = 0; repeat < 3; ++repeat) {
      ExperimentConfig config = sbm_experiment(
          (root / ("timing-" + std::to_string(static_cast<int>(schedule)) + "-" +
                   std::to_string(repeat)))
              .string());
      config.train.epochs = 30;
      config.train.tolerance = 0.0;  // no early stop: identical epoch counts
      config.train.spectral = schedule;
      config.train.modulator.order = 64;
      const auto reports = run_experiment(config);
      totals.push_back(reports[0].setup_seconds + reports[0].train_seconds +
                       reports[0].spectral_seconds + reports[0].cluster_seconds);
    }
    std::sort(totals.begin(), totals.end());
    return totals[1];
  };
  const double with_sp = pipeline_seconds(SpectralSchedule::EachEpoch);
  const double without_sp = pipeline_seconds(SpectralSchedule::Off);

  std::ostringstream oss;
  oss << "5 variants completed with comparable reports; pipeline wall time with propagation "
      << with_sp << " s > without " << without_sp << " s: "
      << (with_sp > without_sp ? "yes" : "no");
  detail = oss.str();
  return with_sp > without_sp;
}

// --- criterion 9: reference-points disclosure --------------------------------

bool reference_disclosure(std::string& detail) {
#ifdef SDGE_SOURCE_DIR
  const fs::path docs = fs::path(SDGE_SOURCE_DIR) / "docs" / "reference_results.md";
  const std::string text = slurp(docs);
  if (text.empty()) {
    detail = "docs/reference_results.md missing";
    return false;
  }
  // Spot checks: the published numbers are present and framed as reference
  // points, not targets.
  const bool has_values = text.find("0.3201") != std::string::npos &&
                          text.find("0.5442") != std::string::npos;
  const bool framed = text.find("not") != std::string::npos &&
                      text.find("reference") != std::string::npos;
  detail = has_values && framed
               ? "reference tables recorded in docs/reference_results.md, framed as "
                 "non-targets"
               : "reference_results.md lacks the expected values or framing";
  return has_values && framed;
#else
  detail = "SDGE_SOURCE_DIR not defined";
  return false;
#endif
}

// --- criterion 10: determinism -----------------------------------------------

bool determinism(std::string& detail) {
  ExperimentConfig config = sbm_experiment((scratch_dir() / "det-a").string());
  config.train.epochs = 15;
  config.train.deterministic = true;
  config.seeds = {42};
  const auto first = run_experiment(config);
  config.output_dir = (scratch_dir() / "det-b").string();
  const auto second = run_experiment(config);

  const std::string a = slurp(fs::path(first[0].directory) / "metrics.json");
  const std::string b = slurp(fs::path(second[0].directory) / "metrics.json");
  detail = a == b ? "metrics.json byte-identical across two runs"
                  : "metrics.json differs between identical runs";
  return !a.empty() && a == b;
}

}  // namespace

int main() {
  struct Criterion {
    int id;
    const char* name;
    std::function<bool(std::string&)> run;
  };
  const std::vector<Criterion> criteria = {
      {1, "gradient fidelity", gradient_fidelity},
      {2, "metric oracle equivalence", metric_oracle_equivalence},
      {3, "modularity oracle", modularity_criterion},
      {4, "spectral filter fidelity", spectral_fidelity},
      {5, "sym-normalization spectrum", normalization_spectrum},
      {6, "end-to-end SBM recovery", sbm_recovery},
      {7, "training progress", training_progress},
      {8, "ablation harness parity", ablation_parity},
      {9, "reference-points disclosure", reference_disclosure},
      {10, "determinism", determinism},
  };

  int failures = 0;
  for (const Criterion& criterion : criteria) {
    std::string detail;
    bool ok = false;
    try {
      ok = criterion.run(detail);
    } catch (const std::exception& e) {
      detail = std::string("exception: ") + e.what();
    }
    std::cout << (ok ? "PASS" : "FAIL") << " criterion " << criterion.id << " ("
              << criterion.name << "): " << detail << "\n";
    if (!ok) ++failures;
  }
  fs::remove_all(scratch_dir());
  return failures;
}
