#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "sdge/checkpoint.hpp"
#include "sdge/experiment.hpp"
#include "sdge/metrics.hpp"

namespace fs = std::filesystem;

namespace {

struct CliOptions {
  sdge::ExperimentConfig experiment;
  std::string aggregation = "cat";
  std::string spectral = "post";
  std::string negative_weighting = "uniform";
  std::string dataset_kind;
  bool relu = false;
  bool no_spectral = false;
  bool gcn_ae = false;
  bool end_to_end = false;
  bool self_loop_isolated = false;
  bool deterministic = false;
  bool binarize_powers = false;
  bool dense_power = false;
  bool csv_header = false;
  int k = 0;
  std::vector<std::uint64_t> seeds = {1};
};

std::string env_name(std::string flag) {
  for (char& c : flag) c = c == '-' ? '_' : static_cast<char>(std::toupper(c));
  return "SDGE_" + flag;
}

CLI::Option* opt_env(CLI::Option* option, const std::string& flag) {
  return option->envname(env_name(flag));
}

void add_training_options(CLI::App* cmd, CliOptions& o) {
  auto& train = o.experiment.train;
  auto& weights = o.experiment.weights;
  opt_env(cmd->add_option("--order", train.order, "Number of adjacency powers / GCN stacks"),
          "order");
  opt_env(cmd->add_option("--dims", train.model.embed_dim, "Embedding dimension d"), "dims");
  opt_env(cmd->add_option("--epochs", train.epochs, "Training epochs"), "epochs");
  opt_env(cmd->add_option("--tau", weights.tau, "Contrastive temperature (0, 100]"), "tau");
  opt_env(cmd->add_option("--beta", weights.beta, "Reconstruction weight [0, 1]"), "beta");
  opt_env(cmd->add_option("--gamma", weights.gamma, "Graph-regularization weight [0, 1]"),
          "gamma");
  opt_env(cmd->add_option("--agg", o.aggregation, "Aggregation of stack outputs")
              ->check(CLI::IsMember({"cat", "sum"})),
          "agg");
  opt_env(cmd->add_option("--negatives", train.negatives, "Negative samples per node"),
          "negatives");
  opt_env(cmd->add_option("--noise-sigma", train.noise_sigma, "Gaussian augmentation scale"),
          "noise-sigma");
  opt_env(cmd->add_option("--spectral", o.spectral, "Spectral propagation schedule")
              ->check(CLI::IsMember({"off", "post", "each-epoch"})),
          "spectral");
  opt_env(cmd->add_option("--cheb-order", train.modulator.order, "Chebyshev truncation order"),
          "cheb-order");
  opt_env(cmd->add_option("--mu", train.modulator.mu, "Spectral modulator band center"), "mu");
  opt_env(cmd->add_option("--theta", train.modulator.theta, "Spectral modulator bandwidth"),
          "theta");
  opt_env(cmd->add_option("--seed", o.seeds, "Seed list; one run per seed"), "seed");
  opt_env(cmd->add_option("--k", o.k, "Community count (default: from labels)"), "k");
  opt_env(cmd->add_flag("--self-loop-isolated", o.self_loop_isolated,
                        "Give isolated nodes a unit self-loop where positive degree is needed"),
          "self-loop-isolated");
  opt_env(cmd->add_flag("--deterministic", o.deterministic,
                        "Single-threaded bit-reproducible execution"),
          "deterministic");
  opt_env(cmd->add_option("--lr", train.learning_rate, "Adam step size"), "lr");
  opt_env(cmd->add_option("--negative-weighting", o.negative_weighting,
                          "Negative sampling distribution")
              ->check(CLI::IsMember({"uniform", "degree"})),
          "negative-weighting");
  opt_env(cmd->add_flag("--relu", o.relu, "Replace Dynamic ReLU with plain ReLU"), "relu");
  opt_env(cmd->add_flag("--no-spectral", o.no_spectral, "Disable spectral propagation"),
          "no-spectral");
  opt_env(cmd->add_flag("--gcn-ae", o.gcn_ae,
                        "Reconstruction-only single-stack autoencoder baseline"),
          "gcn-ae");
  opt_env(cmd->add_flag("--end-to-end", o.end_to_end,
                        "Head outputs k community scores; partition by row argmax"),
          "end-to-end");
  opt_env(cmd->add_flag("--binarize-powers", o.binarize_powers,
                        "Clamp adjacency power entries to 1"),
          "binarize-powers");
  opt_env(cmd->add_flag("--dense-power", o.dense_power,
                        "Allow dense fallback when sparse powers exceed the fill-in budget"),
          "dense-power");
}

void add_dataset_options(CLI::App* cmd, CliOptions& o) {
  auto& ds = o.experiment.dataset;
  opt_env(cmd->add_option("--edges", ds.edges_path, "Edge list file (u v [w] per line)"),
          "edges");
  opt_env(cmd->add_option("--attributes", ds.attributes_path, "Node attribute CSV"),
          "attributes");
  opt_env(cmd->add_option("--labels", ds.labels_path, "Ground-truth labels file"), "labels");
  opt_env(cmd->add_option("--tabular", ds.tabular_path,
                          "Feature CSV; a KNN graph is built from it"),
          "tabular");
  opt_env(cmd->add_flag("--csv-header", o.csv_header, "Skip the first CSV line"), "csv-header");
  opt_env(cmd->add_option("--dataset", o.dataset_kind, "Generator name")
              ->check(CLI::IsMember({"sbm", "hyperplane", "waveform"})),
          "dataset");
  opt_env(cmd->add_option("--knn-k", ds.knn_k, "Neighbors for KNN graph construction"), "knn-k");
  opt_env(cmd->add_option("--sbm-blocks", ds.sbm_blocks, "SBM block count"), "sbm-blocks");
  opt_env(cmd->add_option("--sbm-block-size", ds.sbm_block_size, "SBM nodes per block"),
          "sbm-block-size");
  opt_env(cmd->add_option("--p-in", ds.p_in, "SBM within-block edge probability"), "p-in");
  opt_env(cmd->add_option("--p-out", ds.p_out, "SBM cross-block edge probability"), "p-out");
  opt_env(cmd->add_option("--n", ds.n, "Generated tabular sample count"), "n");
  opt_env(cmd->add_option("--features", ds.features, "Generated tabular feature count"),
          "features");
}

void finalize_config(CliOptions& o) {
  auto& train = o.experiment.train;
  train.model.aggregation =
      o.aggregation == "sum" ? sdge::Aggregation::Sum : sdge::Aggregation::Concat;
  if (o.no_spectral) {
    train.spectral = sdge::SpectralSchedule::Off;
  } else if (o.spectral == "off") {
    train.spectral = sdge::SpectralSchedule::Off;
  } else if (o.spectral == "each-epoch") {
    train.spectral = sdge::SpectralSchedule::EachEpoch;
  } else {
    train.spectral = sdge::SpectralSchedule::Post;
  }
  train.negative_weighting = o.negative_weighting == "degree"
                                 ? sdge::NegativeWeighting::DegreePow
                                 : sdge::NegativeWeighting::Uniform;
  train.model.use_plain_relu = o.relu;
  train.model.end_to_end = o.end_to_end;
  train.gcn_ae = o.gcn_ae;
  train.clusters = o.k;
  train.self_loop_isolated = o.self_loop_isolated;
  train.deterministic = o.deterministic;
  train.power.binarize = o.binarize_powers;
  train.power.allow_dense = o.dense_power;
  o.experiment.seeds = o.seeds;
  o.experiment.dataset.csv_header = o.csv_header;

  auto& ds = o.experiment.dataset;
  if (!o.dataset_kind.empty()) {
    if (o.dataset_kind == "sbm") ds.kind = sdge::DatasetSpec::Kind::Sbm;
    if (o.dataset_kind == "hyperplane") ds.kind = sdge::DatasetSpec::Kind::Hyperplane;
    if (o.dataset_kind == "waveform") ds.kind = sdge::DatasetSpec::Kind::Waveform;
  } else if (!ds.tabular_path.empty()) {
    ds.kind = sdge::DatasetSpec::Kind::TabularCsv;
  } else if (!ds.edges_path.empty()) {
    ds.kind = sdge::DatasetSpec::Kind::EdgeList;
  } else {
    throw CLI::ValidationError("dataset",
                               "no dataset given: pass --edges, --tabular or --dataset");
  }
}

void print_run_summaries(const std::vector<sdge::RunReport>& reports) {
  for (const auto& r : reports) {
    std::cout << "seed " << r.seed;
    if (r.metrics.has_value()) {
      std::cout << "  f1=" << r.metrics->f1 << " jaccard=" << r.metrics->jaccard;
    }
    std::cout << "  modularity=" << r.partition_modularity << "  loss=" << r.final_loss
              << "  epochs=" << r.epochs_run << "  -> " << r.directory << "\n";
    if (r.degenerate_partition) {
      std::cout << "  note: degenerate partition (every node in one community)\n";
    }
  }
}

int run_embed(CliOptions& o) {
  finalize_config(o);
  const auto reports = sdge::run_experiment(o.experiment);
  print_run_summaries(reports);
  return 0;
}

int run_generate(const CliOptions& o) {
  if (o.dataset_kind.empty()) {
    throw CLI::ValidationError("dataset", "--dataset {sbm,hyperplane,waveform} is required");
  }
  const auto& ds = o.experiment.dataset;
  const fs::path dir(o.experiment.output_dir);
  fs::create_directories(dir);
  const std::uint64_t seed = o.seeds.front();

  if (o.dataset_kind == "sbm") {
    const sdge::Graph g =
        sdge::generate_sbm(ds.sbm_blocks, ds.sbm_block_size, ds.p_in, ds.p_out, seed);
    sdge::save_edge_list(g, (dir / "edges.txt").string());
    std::ofstream labels(dir / "labels.txt");
    for (int label : *g.labels) labels << label << "\n";
    std::cout << "wrote " << (dir / "edges.txt").string() << " (" << g.edge_count()
              << " edges) and labels.txt\n";
    return 0;
  }

  const sdge::TabularDataset data =
      o.dataset_kind == "hyperplane"
          ? sdge::generate_hyperplane(ds.n, ds.features, seed)
          : sdge::generate_waveform(ds.n, ds.features, seed);
  std::ofstream features(dir / "features.csv");
  features.precision(17);
  for (int i = 0; i < data.features.rows(); ++i) {
    for (int j = 0; j < data.features.cols(); ++j) {
      if (j > 0) features << ",";
      features << data.features(i, j);
    }
    features << "\n";
  }
  std::ofstream labels(dir / "labels.txt");
  for (int label : *data.labels) labels << label << "\n";
  std::cout << "wrote " << (dir / "features.csv").string() << " and labels.txt ("
            << data.features.rows() << " rows)\n";
  return 0;
}

int run_evaluate(const CliOptions& o, const std::string& partition_path,
                 const std::string& embedding_path, const std::string& out_path) {
  if (o.experiment.dataset.labels_path.empty()) {
    throw CLI::ValidationError("labels", "--labels is required for evaluate");
  }
  const auto labels = sdge::load_labels(o.experiment.dataset.labels_path);
  const sdge::Partition truth = sdge::Partition::from_labels(labels);

  sdge::Partition predicted;
  if (!partition_path.empty()) {
    predicted = sdge::load_partition(partition_path);
  } else if (!embedding_path.empty()) {
    if (o.k <= 0) throw CLI::ValidationError("k", "--k is required with --embedding");
    const sdge::DenseMatrix z = sdge::load_attributes_csv(embedding_path, false);
    predicted = sdge::kmeans(z, o.k, o.seeds.front());
  } else {
    throw CLI::ValidationError("input", "pass --partition or --embedding");
  }

  nlohmann::json doc;
  const sdge::PairMetrics m = sdge::pair_metrics(sdge::pair_counts(predicted, truth));
  doc["jaccard"] = m.jaccard;
  doc["fm"] = m.fm;
  doc["f1"] = m.f1;
  doc["kulczynski"] = m.kulczynski;
  if (!o.experiment.dataset.edges_path.empty()) {
    const sdge::Graph g = sdge::load_edge_list(o.experiment.dataset.edges_path);
    doc["modularity"] = sdge::modularity(g, predicted);
  }
  const std::string payload = doc.dump(2) + "\n";
  if (out_path.empty()) {
    std::cout << payload;
  } else {
    std::ofstream out(out_path);
    if (!out) throw std::runtime_error("[report] cannot open " + out_path);
    out << payload;
  }
  return 0;
}

int run_ablate(CliOptions& o) {
  finalize_config(o);
  const std::string root = o.experiment.output_dir;

  struct Variant {
    std::string name;
    std::function<void(sdge::TrainConfig&)> apply;
  };
  const std::vector<Variant> variants = {
      {"cat", [](sdge::TrainConfig& t) { t.model.aggregation = sdge::Aggregation::Concat; }},
      {"sum", [](sdge::TrainConfig& t) { t.model.aggregation = sdge::Aggregation::Sum; }},
      {"relu", [](sdge::TrainConfig& t) { t.model.use_plain_relu = true; }},
      {"no-spectral", [](sdge::TrainConfig& t) { t.spectral = sdge::SpectralSchedule::Off; }},
      {"gcn-ae", [](sdge::TrainConfig& t) { t.gcn_ae = true; }},
  };

  std::ofstream summary(fs::path(root) / "ablation.csv");
  if (!summary) throw std::runtime_error("[report] cannot open ablation.csv");
  summary.precision(17);
  summary << "variant,median_f1,median_jaccard,median_modularity,median_total_seconds\n";

  for (const Variant& variant : variants) {
    sdge::ExperimentConfig config = o.experiment;
    config.output_dir = (fs::path(root) / variant.name).string();
    variant.apply(config.train);
    std::cout << "== variant " << variant.name << "\n";
    const auto reports = sdge::run_experiment(config);
    print_run_summaries(reports);

    std::vector<double> f1, jac, mod, secs;
    for (const auto& r : reports) {
      if (r.metrics.has_value()) {
        f1.push_back(r.metrics->f1);
        jac.push_back(r.metrics->jaccard);
      }
      mod.push_back(r.partition_modularity);
      secs.push_back(r.total_seconds);
    }
    auto median = [](std::vector<double> v) {
      if (v.empty()) return 0.0;
      std::sort(v.begin(), v.end());
      const size_t n = v.size();
      return n % 2 == 1 ? v[n / 2] : 0.5 * (v[n / 2 - 1] + v[n / 2]);
    };
    summary << variant.name << "," << median(f1) << "," << median(jac) << "," << median(mod)
            << "," << median(secs) << "\n";
  }
  std::cout << "ablation summary -> " << (fs::path(root) / "ablation.csv").string() << "\n";
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Self-supervised graph embedding for community discovery"};
  app.require_subcommand(1);

  CliOptions options;
  std::string partition_path, embedding_path, evaluate_out;

  CLI::App* embed = app.add_subcommand("embed", "Train embeddings and report metrics");
  add_dataset_options(embed, options);
  add_training_options(embed, options);
  opt_env(embed->add_option("--out", options.experiment.output_dir, "Output directory"), "out");

  CLI::App* evaluate = app.add_subcommand("evaluate", "Score a partition against labels");
  opt_env(evaluate->add_option("--partition", partition_path, "Predicted partition file"),
          "partition");
  opt_env(evaluate->add_option("--embedding", embedding_path,
                               "Embedding CSV; clustered with k-means first"),
          "embedding");
  opt_env(evaluate->add_option("--labels", options.experiment.dataset.labels_path,
                               "Ground-truth labels file"),
          "labels");
  opt_env(evaluate->add_option("--edges", options.experiment.dataset.edges_path,
                               "Edge list, adds modularity to the report"),
          "eval-edges");
  opt_env(evaluate->add_option("--k", options.k, "Cluster count for --embedding"), "eval-k");
  opt_env(evaluate->add_option("--seed", options.seeds, "Seed for k-means"), "eval-seed");
  opt_env(evaluate->add_option("--out", evaluate_out, "Write the report here instead of stdout"),
          "eval-out");

  CLI::App* generate = app.add_subcommand("generate", "Write a synthetic dataset to disk");
  add_dataset_options(generate, options);
  opt_env(generate->add_option("--out", options.experiment.output_dir, "Output directory"),
          "gen-out");
  opt_env(generate->add_option("--gen-seed", options.seeds, "Generator seed"), "gen-seed");

  CLI::App* ablate = app.add_subcommand("ablate", "Run the ablation suite on one dataset");
  add_dataset_options(ablate, options);
  add_training_options(ablate, options);
  opt_env(ablate->add_option("--out", options.experiment.output_dir, "Output directory"),
          "ablate-out");

  CLI11_PARSE(app, argc, argv);

  try {
    if (app.got_subcommand(embed)) return run_embed(options);
    if (app.got_subcommand(evaluate))
      return run_evaluate(options, partition_path, embedding_path, evaluate_out);
    if (app.got_subcommand(generate)) return run_generate(options);
    if (app.got_subcommand(ablate)) return run_ablate(options);
  } catch (const CLI::ValidationError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 1;
}
