#include "sdge/training.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <memory>
#include <numeric>

#include "sdge/metrics.hpp"
#include "sdge/optimizer.hpp"
#include "sdge/rng.hpp"

namespace sdge {

namespace {

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point start) {
  return std::chrono::duration<double>(Clock::now() - start).count();
}

}  // namespace

void LossWeights::validate() const {
  if (!(tau > 0.0) || tau > 100.0) {
    throw std::invalid_argument("LossWeights: tau must lie in (0, 100], got " +
                                std::to_string(tau));
  }
  if (beta < 0.0 || beta > 1.0) {
    throw std::invalid_argument("LossWeights: beta must lie in [0, 1], got " +
                                std::to_string(beta));
  }
  if (gamma < 0.0 || gamma > 1.0) {
    throw std::invalid_argument("LossWeights: gamma must lie in [0, 1], got " +
                                std::to_string(gamma));
  }
}

NegativeSampler::NegativeSampler(const Graph& g, int count, std::uint64_t seed,
                                 NegativeWeighting weighting)
    : graph_(g), count_(count), weighting_(weighting),
      rng_(make_stream(seed, RngPurpose::Negatives)) {
  if (count < 1) throw std::invalid_argument("NegativeSampler: count must be >= 1");
  if (weighting_ == NegativeWeighting::DegreePow) {
    degree_weights_.resize(static_cast<size_t>(g.n));
    for (int i = 0; i < g.n; ++i) degree_weights_[i] = std::pow(g.degree[i], 0.75);
  }
}

bool NegativeSampler::is_excluded(int node, int candidate) const {
  if (candidate == node) return true;
  const auto& a = graph_.adjacency;
  const auto begin = a.cols().begin() + a.row_begin(node);
  const auto end = a.cols().begin() + a.row_end(node);
  return std::binary_search(begin, end, candidate);
}

std::vector<int> NegativeSampler::sample(int node) {
  const int n = graph_.n;
  const int neighborhood =
      graph_.adjacency.row_end(node) - graph_.adjacency.row_begin(node) + 1;
  if (neighborhood >= n) throw NoNegativesAvailable(node);

  std::vector<int> out;
  out.reserve(static_cast<size_t>(count_));
  if (weighting_ == NegativeWeighting::Uniform) {
    std::uniform_int_distribution<int> uniform(0, n - 1);
    for (int t = 0; t < count_; ++t) {
      int candidate = uniform(rng_);
      int attempts = 0;
      while (is_excluded(node, candidate)) {
        candidate = uniform(rng_);
        if (++attempts >= 64) {
          // Dense neighborhood: enumerate the candidate set instead.
          std::vector<int> pool;
          for (int v = 0; v < n; ++v) {
            if (!is_excluded(node, v)) pool.push_back(v);
          }
          std::uniform_int_distribution<size_t> pick(0, pool.size() - 1);
          candidate = pool[pick(rng_)];
          break;
        }
      }
      out.push_back(candidate);
    }
    return out;
  }

  std::vector<int> pool;
  std::vector<double> weights;
  for (int v = 0; v < n; ++v) {
    if (is_excluded(node, v)) continue;
    pool.push_back(v);
    weights.push_back(degree_weights_[static_cast<size_t>(v)]);
  }
  const double total = std::accumulate(weights.begin(), weights.end(), 0.0);
  if (total <= 0.0) {
    // All candidates have zero degree; fall back to uniform over the pool.
    std::uniform_int_distribution<size_t> pick(0, pool.size() - 1);
    for (int t = 0; t < count_; ++t) out.push_back(pool[pick(rng_)]);
    return out;
  }
  std::discrete_distribution<size_t> pick(weights.begin(), weights.end());
  for (int t = 0; t < count_; ++t) out.push_back(pool[pick(rng_)]);
  return out;
}

std::vector<std::vector<int>> NegativeSampler::sample_all() {
  std::vector<std::vector<int>> out;
  out.reserve(static_cast<size_t>(graph_.n));
  for (int i = 0; i < graph_.n; ++i) out.push_back(sample(i));
  return out;
}

std::vector<int> sample_negatives(int node, const Graph& g, int count, std::uint64_t seed) {
  NegativeSampler sampler(g, count, seed);
  return sampler.sample(node);
}

DenseMatrix augment(const DenseMatrix& z, double sigma, std::uint64_t seed) {
  if (sigma < 0.0) throw std::invalid_argument("augment: sigma must be >= 0");
  if (sigma == 0.0) return z;
  std::mt19937_64 rng = make_stream(seed, RngPurpose::Noise);
  DenseMatrix out = z;
  out.add_inplace(gaussian_matrix(z.rows(), z.cols(), rng), sigma);
  return out;
}

ad::NodeId contrastive_loss_node(ad::Tape& tape, ad::NodeId z, ad::NodeId z_pos,
                                 const std::vector<std::vector<int>>& negatives, double tau) {
  if (!(tau > 0.0)) throw std::invalid_argument("contrastive_loss: tau must be > 0");
  const int n = tape.value(z).rows();
  if (static_cast<int>(negatives.size()) != n) {
    throw std::invalid_argument("contrastive_loss: one negative list per node required");
  }
  const size_t m = negatives.front().size();
  for (const auto& list : negatives) {
    if (list.size() != m || m == 0) {
      throw std::invalid_argument("contrastive_loss: negative lists must share a nonzero size");
    }
  }

  const ad::NodeId positive =
      tape.sum_all(tape.log_sigmoid(tape.scale(tape.dot_rows(z, z_pos), 1.0 / tau)));

  // Column t holds every node's t-th negative.
  ad::NodeId negative_acc = -1;
  for (size_t t = 0; t < m; ++t) {
    std::vector<int> column(static_cast<size_t>(n));
    for (int i = 0; i < n; ++i) column[static_cast<size_t>(i)] = negatives[i][t];
    const ad::NodeId term = tape.sum_all(tape.log_sigmoid(
        tape.scale(tape.dot_rows(z, tape.gather_rows(z, std::move(column))), 1.0 / tau)));
    negative_acc = t == 0 ? term : tape.add(negative_acc, term);
  }

  // (1/n) * (sum_i log s(pos_i) - (1/m) sum_i mean_t log s(neg_it))
  return tape.scale(tape.axpy(positive, negative_acc, -1.0 / static_cast<double>(m)), 1.0 / n);
}

ad::NodeId reconstruction_loss_node(ad::Tape& tape, ad::NodeId z, const SparseMatrix& adjacency,
                                    ad::NodeId attributes) {
  const auto& vz = tape.value(z);
  const int n = vz.rows();
  if (adjacency.n() != n || tape.value(attributes).rows() != n) {
    throw std::invalid_argument("reconstruction_loss: row counts disagree");
  }
  // ||ZZ^T - C||_F^2 expanded as ||Z^T Z||_F^2 - 2 <ZZ^T, C> + ||C||_F^2;
  // the n x n Gram matrix is never materialized.
  const ad::NodeId gram_sq = tape.frobenius_sq(tape.matmul_tn(z, z));
  const ad::NodeId adj_cross = tape.trace_quad(z, adjacency);
  const ad::NodeId structure =
      tape.add_scalar(tape.axpy(gram_sq, adj_cross, -2.0), adjacency.frobenius_norm_sq());

  const ad::NodeId attr_cross = tape.frobenius_sq(tape.matmul_tn(attributes, z));
  const double attr_gram_sq =
      matmul_tn(tape.value(attributes), tape.value(attributes)).frobenius_norm_sq();
  const ad::NodeId attribute =
      tape.add_scalar(tape.axpy(gram_sq, attr_cross, -2.0), attr_gram_sq);

  return tape.scale(tape.add(structure, attribute), 1.0 / (static_cast<double>(n) * n));
}

ad::NodeId regularization_loss_node(ad::Tape& tape, ad::NodeId z, const SparseMatrix& lap) {
  const int n = tape.value(z).rows();
  return tape.scale(tape.trace_quad(z, lap), 1.0 / n);
}

ad::NodeId total_loss_node(ad::Tape& tape, ad::NodeId contrastive, ad::NodeId reconstruction,
                           ad::NodeId regularization, const LossWeights& weights) {
  weights.validate();
  const ad::NodeId weighted =
      tape.axpy(tape.scale(reconstruction, weights.beta), regularization, weights.gamma);
  return tape.axpy(weighted, contrastive, -1.0);
}

double contrastive_loss(const DenseMatrix& z, const DenseMatrix& z_pos,
                        const std::vector<std::vector<int>>& negatives, double tau) {
  ad::Tape tape;
  return tape.scalar_value(
      contrastive_loss_node(tape, tape.constant(z), tape.constant(z_pos), negatives, tau));
}

double reconstruction_loss(const DenseMatrix& z, const SparseMatrix& adjacency,
                           const DenseMatrix& attributes) {
  ad::Tape tape;
  return tape.scalar_value(
      reconstruction_loss_node(tape, tape.constant(z), adjacency, tape.constant(attributes)));
}

double regularization_loss(const DenseMatrix& z, const SparseMatrix& lap) {
  ad::Tape tape;
  return tape.scalar_value(regularization_loss_node(tape, tape.constant(z), lap));
}

double total_loss(double contrastive, double reconstruction, double regularization,
                  const LossWeights& weights) {
  weights.validate();
  return weights.beta * reconstruction + weights.gamma * regularization - contrastive;
}

namespace {

struct ForwardOutput {
  std::vector<ad::NodeId> stack_outputs;
  ad::NodeId embedding = -1;
};

ForwardOutput forward_pass(ad::Tape& tape, ModelState& model,
                           const std::vector<SparseMatrix>& s_hats, const DenseMatrix& features,
                           const std::vector<double>& alpha) {
  ForwardOutput out;
  const ad::NodeId input = tape.constant(features);
  out.stack_outputs = gcn_forward(tape, model, s_hats, input);
  std::optional<ad::NodeId> attr_node;
  if (model.config.include_attributes) attr_node = input;
  const ad::NodeId fused = fuse(tape, out.stack_outputs, alpha, model.config, attr_node);
  out.embedding = mlp_forward(tape, fused, *model.mlp);
  return out;
}

std::vector<double> refresh_fusion_weights(const std::vector<DenseMatrix>& stack_values,
                                           const Graph& g, int k, std::mt19937_64& kmeans_rng) {
  std::vector<double> q;
  q.reserve(stack_values.size());
  for (const DenseMatrix& h : stack_values) {
    const Partition p = kmeans(h, k, kmeans_rng());
    q.push_back(modularity(g, p));
  }
  return fusion_weights(q);
}

}  // namespace

FitResult fit(const Graph& g, const TrainConfig& config, const LossWeights& weights) {
  weights.validate();
  if (config.epochs < 0) throw std::invalid_argument("fit: epochs must be >= 0");
  if (config.order < 1) throw std::invalid_argument("fit: order must be >= 1");

  int k = config.clusters;
  if (k <= 0) {
    if (!g.has_labels()) {
      throw std::invalid_argument("fit: cluster count not given and the graph has no labels");
    }
    k = Partition::from_labels(*g.labels).k;
  }
  if (k > g.n) throw std::invalid_argument("fit: more clusters than nodes");

  FitResult result;
  const auto setup_start = Clock::now();

  // Adjacency powers and their normalized propagation operators.
  const int order = config.gcn_ae ? 1 : config.order;
  const std::vector<SparseMatrix> powers = matrix_power(g.adjacency, order, config.power);
  std::vector<SparseMatrix> s_hats;
  s_hats.reserve(powers.size());
  for (const SparseMatrix& p : powers) s_hats.push_back(sym_normalize(p));

  // Model input: node attributes, or rows of the normalized adjacency for
  // plain graphs.
  DenseMatrix features = g.has_attributes() ? *g.attributes : s_hats.front().to_dense();

  ModelConfig model_config = config.model;
  if (!g.has_attributes() && model_config.include_attributes) {
    // Plain graphs fall back to structural pseudo-attributes for the model
    // input but are not treated as attribute graphs at fusion time.
    model_config.include_attributes = false;
  }
  if (config.gcn_ae) model_config.include_attributes = false;

  const int output_width = model_config.end_to_end ? k : model_config.embed_dim;
  const int mlp_input =
      fused_width(model_config, order, model_config.include_attributes ? features.cols() : 0);
  ModelState model = ModelState::create(model_config, order, features.cols(), mlp_input,
                                        output_width, config.seed);

  const SparseMatrix lap = laplacian(g);
  std::vector<ad::Parameter*> params = model.parameters();
  AdamOptimizer adam(params, config.learning_rate);
  model.zero_grads();

  std::mt19937_64 noise_rng = make_stream(config.seed, RngPurpose::Noise);
  std::mt19937_64 kmeans_rng = make_stream(config.seed, RngPurpose::Kmeans);
  std::unique_ptr<NegativeSampler> sampler;
  if (!config.gcn_ae) {
    sampler = std::make_unique<NegativeSampler>(g, config.negatives, config.seed,
                                                config.negative_weighting);
  }

  result.setup_seconds = seconds_since(setup_start);
  const auto train_start = Clock::now();

  std::vector<double> alpha(static_cast<size_t>(order), 1.0 / order);
  std::optional<DenseMatrix> propagated_anchor;  // each-epoch schedule carry
  int flat_streak = 0;
  double previous_total = 0.0;

  for (int epoch = 0; epoch < config.epochs; ++epoch) {
    if (epoch % std::max(1, config.alpha_refresh_every) == 0 && order > 1) {
      ad::Tape probe;
      const ad::NodeId input = probe.constant(features);
      const auto outputs = gcn_forward(probe, model, s_hats, input);
      std::vector<DenseMatrix> values;
      values.reserve(outputs.size());
      for (ad::NodeId id : outputs) values.push_back(probe.value(id));
      alpha = refresh_fusion_weights(values, g, k, kmeans_rng);
    }

    ad::Tape tape;
    const ForwardOutput fwd = forward_pass(tape, model, s_hats, features, alpha);
    // Do not hold references into the tape here: recording more ops may
    // reallocate its value storage.
    const int embed_rows = g.n;
    const int embed_cols = tape.value(fwd.embedding).cols();

    ad::NodeId total;
    EpochRecord record;
    record.epoch = epoch;
    if (config.gcn_ae) {
      const ad::NodeId reconstruction =
          reconstruction_loss_node(tape, fwd.embedding, g.adjacency, tape.constant(features));
      record.reconstruction = tape.scalar_value(reconstruction);
      total = reconstruction;
    } else {
      // Positive anchor: the current embedding, or last epoch's propagated
      // embedding under the each-epoch schedule. The noise is a constant in
      // the backward pass either way.
      const ad::NodeId anchor =
          (config.spectral == SpectralSchedule::EachEpoch && propagated_anchor.has_value())
              ? tape.constant(*propagated_anchor)
              : fwd.embedding;
      const DenseMatrix noise = gaussian_matrix(embed_rows, embed_cols, noise_rng);
      const ad::NodeId z_pos = tape.axpy(anchor, tape.constant(noise), config.noise_sigma);

      const auto negatives = sampler->sample_all();
      const ad::NodeId contrastive =
          contrastive_loss_node(tape, fwd.embedding, z_pos, negatives, weights.tau);
      const ad::NodeId reconstruction =
          reconstruction_loss_node(tape, fwd.embedding, g.adjacency, tape.constant(features));
      const ad::NodeId regularization = regularization_loss_node(tape, fwd.embedding, lap);
      total = total_loss_node(tape, contrastive, reconstruction, regularization, weights);
      record.contrastive = tape.scalar_value(contrastive);
      record.reconstruction = tape.scalar_value(reconstruction);
      record.regularization = tape.scalar_value(regularization);
    }
    record.total = tape.scalar_value(total);
    if (!std::isfinite(record.total)) {
      throw std::runtime_error("fit: non-finite loss at epoch " + std::to_string(epoch));
    }

    tape.backward(total);
    adam.step();
    result.history.push_back(record);

    if (config.spectral == SpectralSchedule::EachEpoch) {
      const auto sp_start = Clock::now();
      propagated_anchor =
          propagate(tape.value(fwd.embedding), g, config.modulator, config.self_loop_isolated);
      result.spectral_seconds += seconds_since(sp_start);
    }

    if (epoch > 0) {
      const double rel = std::abs(record.total - previous_total) /
                         std::max(std::abs(previous_total), 1e-12);
      flat_streak = rel < config.tolerance ? flat_streak + 1 : 0;
      if (flat_streak >= 5) {
        previous_total = record.total;
        break;
      }
    }
    previous_total = record.total;
  }

  // Final embedding from the trained parameters.
  {
    ad::Tape tape;
    const ForwardOutput fwd = forward_pass(tape, model, s_hats, features, alpha);
    result.embedding = tape.value(fwd.embedding);
  }
  result.train_seconds = seconds_since(train_start) - result.spectral_seconds;

  if (config.spectral != SpectralSchedule::Off) {
    const auto sp_start = Clock::now();
    result.embedding =
        propagate(result.embedding, g, config.modulator, config.self_loop_isolated);
    result.spectral_seconds += seconds_since(sp_start);
  }

  const auto cluster_start = Clock::now();
  if (model_config.end_to_end) {
    result.partition = Partition::from_assignment(argmax_rows(result.embedding), output_width);
  } else {
    result.partition = kmeans(result.embedding, k, kmeans_rng());
  }
  result.cluster_seconds = seconds_since(cluster_start);
  result.fusion_alpha = alpha;
  return result;
}

}  // namespace sdge
