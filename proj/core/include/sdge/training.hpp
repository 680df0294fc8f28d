#pragma once

#include <cstdint>
#include <memory>
#include <random>
#include <stdexcept>
#include <vector>

#include "sdge/autodiff.hpp"
#include "sdge/clustering.hpp"
#include "sdge/graph.hpp"
#include "sdge/model.hpp"
#include "sdge/spectral.hpp"

namespace sdge {

struct LossWeights {
  double beta = 1.0;   // reconstruction weight, in [0, 1]
  double gamma = 1.0;  // graph-regularization weight, in [0, 1]
  double tau = 100.0;  // contrastive temperature, in (0, 100]

  void validate() const;
};

struct NoNegativesAvailable : std::runtime_error {
  explicit NoNegativesAvailable(int node)
      : std::runtime_error("no negatives available: node " + std::to_string(node) +
                           " is adjacent to every other node") {}
};

enum class NegativeWeighting { Uniform, DegreePow };

/// Draws, per node, m ids uniformly (or degree^0.75-weighted) with replacement
/// from the nodes outside N(v) and v itself. One seeded stream per sampler;
/// consecutive calls continue the stream.
class NegativeSampler {
 public:
  NegativeSampler(const Graph& g, int count, std::uint64_t seed,
                  NegativeWeighting weighting = NegativeWeighting::Uniform);

  std::vector<int> sample(int node);
  /// One row of m negatives per node.
  std::vector<std::vector<int>> sample_all();

  int count() const { return count_; }

 private:
  bool is_excluded(int node, int candidate) const;

  const Graph& graph_;
  int count_;
  NegativeWeighting weighting_;
  std::mt19937_64 rng_;
  std::vector<double> degree_weights_;
};

/// Single draw matching the sampler's uniform behaviour; convenience for
/// callers that only need one node's negatives.
std::vector<int> sample_negatives(int node, const Graph& g, int count, std::uint64_t seed);

/// Z + sigma * G with G i.i.d. standard Gaussian from the seeded stream.
DenseMatrix augment(const DenseMatrix& z, double sigma, std::uint64_t seed);

// --- Loss graph builders -------------------------------------------------
// Each returns a 1x1 node. The sparse operands must outlive the tape.

ad::NodeId contrastive_loss_node(ad::Tape& tape, ad::NodeId z, ad::NodeId z_pos,
                                 const std::vector<std::vector<int>>& negatives, double tau);

ad::NodeId reconstruction_loss_node(ad::Tape& tape, ad::NodeId z, const SparseMatrix& adjacency,
                                    ad::NodeId attributes);

ad::NodeId regularization_loss_node(ad::Tape& tape, ad::NodeId z, const SparseMatrix& lap);

ad::NodeId total_loss_node(ad::Tape& tape, ad::NodeId contrastive, ad::NodeId reconstruction,
                           ad::NodeId regularization, const LossWeights& weights);

// --- Value-level wrappers (throwaway tape) --------------------------------

double contrastive_loss(const DenseMatrix& z, const DenseMatrix& z_pos,
                        const std::vector<std::vector<int>>& negatives, double tau);
double reconstruction_loss(const DenseMatrix& z, const SparseMatrix& adjacency,
                           const DenseMatrix& attributes);
double regularization_loss(const DenseMatrix& z, const SparseMatrix& lap);
double total_loss(double contrastive, double reconstruction, double regularization,
                  const LossWeights& weights);

// --- Training loop ---------------------------------------------------------

enum class SpectralSchedule { Off, Post, EachEpoch };

struct TrainConfig {
  ModelConfig model;
  int epochs = 100;
  int order = 4;  // number of adjacency powers / GCN stacks
  int clusters = 0;  // k; 0 means "take from labels"
  double learning_rate = 1e-3;
  std::uint64_t seed = 0;
  double noise_sigma = 0.1;
  int negatives = 5;
  NegativeWeighting negative_weighting = NegativeWeighting::Uniform;
  double tolerance = 1e-4;  // relative loss change for early stop
  SpectralSchedule spectral = SpectralSchedule::Post;
  ModulatorConfig modulator;
  bool self_loop_isolated = false;
  bool deterministic = false;
  bool gcn_ae = false;  // reconstruction-only single-stack baseline
  int alpha_refresh_every = 5;
  PowerOptions power;
};

struct EpochRecord {
  int epoch = 0;
  double contrastive = 0.0;
  double reconstruction = 0.0;
  double regularization = 0.0;
  double total = 0.0;
};

struct FitResult {
  DenseMatrix embedding;
  std::vector<EpochRecord> history;
  Partition partition;
  std::vector<double> fusion_alpha;
  std::unique_ptr<ModelState> model;  // trained parameters, checkpointable
  double setup_seconds = 0.0;
  double train_seconds = 0.0;
  double spectral_seconds = 0.0;
  double cluster_seconds = 0.0;
};

/// Full training pipeline: adjacency powers, r GCN stacks + MLP, the
/// three-part self-supervised loss under Adam, optional spectral enhancement,
/// and a final k-means (or row-argmax) partition.
FitResult fit(const Graph& g, const TrainConfig& config, const LossWeights& weights);

}  // namespace sdge
