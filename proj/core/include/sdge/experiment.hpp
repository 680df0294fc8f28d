#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "sdge/datasets.hpp"
#include "sdge/metrics.hpp"
#include "sdge/training.hpp"

namespace sdge {

/// Where the experiment's graph comes from: files on disk or a seeded
/// generator.
struct DatasetSpec {
  enum class Kind { EdgeList, TabularCsv, Sbm, Hyperplane, Waveform };

  Kind kind = Kind::Sbm;

  // File inputs.
  std::string edges_path;
  std::string attributes_path;  // optional
  std::string labels_path;      // optional
  std::string tabular_path;     // attribute CSV turned into a KNN graph
  bool csv_header = false;

  // Generator parameters.
  int sbm_blocks = 4;
  int sbm_block_size = 50;
  double p_in = 0.3;
  double p_out = 0.02;
  int n = 1000;
  int features = 20;

  int knn_k = 10;  // KNN graph construction for tabular inputs
};

struct ExperimentConfig {
  DatasetSpec dataset;
  TrainConfig train;
  LossWeights weights;
  std::vector<std::uint64_t> seeds = {1};
  std::string output_dir = "sdge-out";
};

/// Materialize the dataset for one seed (generators are seeded; file inputs
/// ignore the seed). Tabular data is standardized before the KNN build.
Graph resolve_dataset(const DatasetSpec& spec, std::uint64_t seed,
                      std::vector<std::string>* warnings = nullptr);

struct RunReport {
  std::uint64_t seed = 0;
  std::string directory;
  std::optional<PairMetrics> metrics;  // present when the dataset has labels
  double partition_modularity = 0.0;
  bool degenerate_partition = false;
  int effective_clusters = 0;
  double final_loss = 0.0;
  int epochs_run = 0;
  double load_seconds = 0.0;
  double setup_seconds = 0.0;
  double train_seconds = 0.0;
  double spectral_seconds = 0.0;
  double cluster_seconds = 0.0;
  double evaluate_seconds = 0.0;
  double total_seconds = 0.0;
};

/// One training run per seed. Each run writes metrics.json, history.csv,
/// embedding.csv, partition.txt and timing.json into its own directory;
/// aggregate.csv summarizes the seeds (median and spread per quantity).
/// Failures are rethrown with the pipeline stage prepended.
std::vector<RunReport> run_experiment(const ExperimentConfig& config);

/// Stable metrics.json payload for a run (excludes wall-clock times so the
/// file is byte-identical across reruns of the same seed).
std::string metrics_json(const RunReport& report);

}  // namespace sdge
