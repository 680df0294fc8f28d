#include "sdge/experiment.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <stdexcept>

#include <json.hpp>

#include "sdge/metrics.hpp"

namespace sdge {

namespace fs = std::filesystem;

namespace {

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point start) {
  return std::chrono::duration<double>(Clock::now() - start).count();
}

[[noreturn]] void fail_stage(const std::string& stage, const std::exception& e) {
  throw std::runtime_error("[" + stage + "] " + e.what());
}

void write_history_csv(const std::vector<EpochRecord>& history, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot open " + path);
  out.precision(17);
  out << "epoch,L_s,L_sa,L_r,total\n";
  for (const EpochRecord& r : history) {
    out << r.epoch << "," << r.contrastive << "," << r.reconstruction << ","
        << r.regularization << "," << r.total << "\n";
  }
}

void write_embedding_csv(const DenseMatrix& z, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot open " + path);
  out.precision(17);
  for (int i = 0; i < z.rows(); ++i) {
    for (int j = 0; j < z.cols(); ++j) {
      if (j > 0) out << ",";
      out << z(i, j);
    }
    out << "\n";
  }
}

void write_timing_json(const RunReport& r, const std::string& path) {
  nlohmann::json doc;
  doc["load_seconds"] = r.load_seconds;
  doc["setup_seconds"] = r.setup_seconds;
  doc["training_seconds"] = r.train_seconds;
  doc["spectral_seconds"] = r.spectral_seconds;
  doc["clustering_seconds"] = r.cluster_seconds;
  doc["evaluation_seconds"] = r.evaluate_seconds;
  doc["total_seconds"] = r.total_seconds;
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot open " + path);
  out << doc.dump(2) << "\n";
}

struct Summary {
  double median = 0.0, mean = 0.0, stddev = 0.0, min = 0.0, max = 0.0;
};

Summary summarize(std::vector<double> values) {
  Summary s;
  if (values.empty()) return s;
  std::sort(values.begin(), values.end());
  const size_t n = values.size();
  s.median = n % 2 == 1 ? values[n / 2] : 0.5 * (values[n / 2 - 1] + values[n / 2]);
  s.min = values.front();
  s.max = values.back();
  for (double v : values) s.mean += v;
  s.mean /= static_cast<double>(n);
  for (double v : values) s.stddev += (v - s.mean) * (v - s.mean);
  s.stddev = n > 1 ? std::sqrt(s.stddev / static_cast<double>(n - 1)) : 0.0;
  return s;
}

void write_aggregate_csv(const std::vector<RunReport>& reports, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot open " + path);
  out.precision(17);
  out << "quantity,median,mean,stddev,min,max\n";
  auto emit = [&](const std::string& name, const std::vector<double>& values) {
    if (values.empty()) return;
    const Summary s = summarize(values);
    out << name << "," << s.median << "," << s.mean << "," << s.stddev << "," << s.min << ","
        << s.max << "\n";
  };

  std::vector<double> j, fm, f1, ku, mod, loss, total_time;
  for (const RunReport& r : reports) {
    if (r.metrics.has_value()) {
      j.push_back(r.metrics->jaccard);
      fm.push_back(r.metrics->fm);
      f1.push_back(r.metrics->f1);
      ku.push_back(r.metrics->kulczynski);
    }
    mod.push_back(r.partition_modularity);
    loss.push_back(r.final_loss);
    total_time.push_back(r.total_seconds);
  }
  emit("jaccard", j);
  emit("fm", fm);
  emit("f1", f1);
  emit("kulczynski", ku);
  emit("modularity", mod);
  emit("final_loss", loss);
  emit("total_seconds", total_time);
}

}  // namespace

Graph resolve_dataset(const DatasetSpec& spec, std::uint64_t seed,
                      std::vector<std::string>* warnings) {
  switch (spec.kind) {
    case DatasetSpec::Kind::EdgeList: {
      Graph g = load_edge_list(spec.edges_path, std::nullopt, warnings);
      if (!spec.attributes_path.empty()) {
        DenseMatrix attrs = load_attributes_csv(spec.attributes_path, spec.csv_header);
        if (attrs.rows() != g.n) {
          throw std::runtime_error("attribute table has " + std::to_string(attrs.rows()) +
                                   " rows for a graph with " + std::to_string(g.n) + " nodes");
        }
        g.attributes = standardize(attrs);
      }
      if (!spec.labels_path.empty()) {
        auto labels = load_labels(spec.labels_path);
        if (static_cast<int>(labels.size()) != g.n) {
          throw std::runtime_error("labels file length does not match node count");
        }
        g.labels = std::move(labels);
      }
      return g;
    }
    case DatasetSpec::Kind::TabularCsv: {
      const DenseMatrix raw = load_attributes_csv(spec.tabular_path, spec.csv_header);
      const DenseMatrix features = standardize(raw);
      Graph g = build_knn_graph(features, spec.knn_k);
      g.attributes = features;
      if (!spec.labels_path.empty()) {
        auto labels = load_labels(spec.labels_path);
        if (static_cast<int>(labels.size()) != g.n) {
          throw std::runtime_error("labels file length does not match node count");
        }
        g.labels = std::move(labels);
      }
      return g;
    }
    case DatasetSpec::Kind::Sbm:
      return generate_sbm(spec.sbm_blocks, spec.sbm_block_size, spec.p_in, spec.p_out, seed,
                          warnings);
    case DatasetSpec::Kind::Hyperplane:
    case DatasetSpec::Kind::Waveform: {
      const TabularDataset data =
          spec.kind == DatasetSpec::Kind::Hyperplane
              ? generate_hyperplane(spec.n, spec.features, seed)
              : generate_waveform(spec.n, spec.features, seed);
      const DenseMatrix features = standardize(data.features);
      Graph g = build_knn_graph(features, spec.knn_k);
      g.attributes = features;
      g.labels = data.labels;
      return g;
    }
  }
  throw std::invalid_argument("resolve_dataset: unknown dataset kind");
}

std::string metrics_json(const RunReport& report) {
  nlohmann::json doc;
  doc["seed"] = report.seed;
  if (report.metrics.has_value()) {
    doc["jaccard"] = report.metrics->jaccard;
    doc["fm"] = report.metrics->fm;
    doc["f1"] = report.metrics->f1;
    doc["kulczynski"] = report.metrics->kulczynski;
  }
  doc["modularity"] = report.partition_modularity;
  doc["degenerate_partition"] = report.degenerate_partition;
  doc["k_effective"] = report.effective_clusters;
  doc["final_loss"] = report.final_loss;
  doc["epochs_run"] = report.epochs_run;
  return doc.dump(2) + "\n";
}

std::vector<RunReport> run_experiment(const ExperimentConfig& config) {
  fs::create_directories(config.output_dir);
  if (config.seeds.empty()) {
    throw std::invalid_argument("run_experiment: at least one seed is required");
  }

  std::vector<RunReport> reports;
  for (const std::uint64_t seed : config.seeds) {
    RunReport report;
    report.seed = seed;
    const auto run_start = Clock::now();

    Graph g;
    {
      const auto t = Clock::now();
      try {
        g = resolve_dataset(config.dataset, seed);
      } catch (const std::exception& e) {
        fail_stage("dataset", e);
      }
      report.load_seconds = seconds_since(t);
    }

    TrainConfig train = config.train;
    train.seed = seed;
    FitResult fitted;
    try {
      fitted = fit(g, train, config.weights);
    } catch (const std::exception& e) {
      fail_stage("training", e);
    }
    report.setup_seconds = fitted.setup_seconds;
    report.train_seconds = fitted.train_seconds;
    report.spectral_seconds = fitted.spectral_seconds;
    report.cluster_seconds = fitted.cluster_seconds;
    report.final_loss = fitted.history.empty() ? 0.0 : fitted.history.back().total;
    report.epochs_run = static_cast<int>(fitted.history.size());
    report.effective_clusters = fitted.partition.effective_clusters();
    report.degenerate_partition = report.effective_clusters <= 1;

    {
      const auto t = Clock::now();
      try {
        report.partition_modularity = modularity(g, fitted.partition);
        if (g.has_labels()) {
          const Partition truth = Partition::from_labels(*g.labels);
          report.metrics = pair_metrics(pair_counts(fitted.partition, truth));
        }
      } catch (const std::exception& e) {
        fail_stage("evaluation", e);
      }
      report.evaluate_seconds = seconds_since(t);
    }
    report.total_seconds = seconds_since(run_start);

    try {
      const fs::path dir = fs::path(config.output_dir) / ("seed-" + std::to_string(seed));
      fs::create_directories(dir);
      report.directory = dir.string();
      {
        std::ofstream out(dir / "metrics.json");
        if (!out) throw std::runtime_error("cannot open metrics.json");
        out << metrics_json(report);
      }
      write_history_csv(fitted.history, (dir / "history.csv").string());
      write_embedding_csv(fitted.embedding, (dir / "embedding.csv").string());
      save_partition(fitted.partition, (dir / "partition.txt").string());
      write_timing_json(report, (dir / "timing.json").string());
    } catch (const std::exception& e) {
      fail_stage("report", e);
    }
    reports.push_back(std::move(report));
  }

  try {
    write_aggregate_csv(reports, (fs::path(config.output_dir) / "aggregate.csv").string());
  } catch (const std::exception& e) {
    fail_stage("report", e);
  }
  return reports;
}

}  // namespace sdge
