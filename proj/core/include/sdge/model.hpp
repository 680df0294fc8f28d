#pragma once

#include <cstdint>
#include <functional>
#include <memory>
#include <optional>
#include <vector>

#include "sdge/autodiff.hpp"
#include "sdge/matrix.hpp"

namespace sdge {

struct DyReluConfig {
  int pieces = 2;     // affine pieces per feature
  int reduction = 8;  // hyper-net hidden width = max(1, features / reduction)
};

enum class Aggregation { Sum, Concat };

struct ModelConfig {
  // Entry 0 is the expected input width; each later entry is a layer output.
  std::vector<int> layer_widths = {200, 170, 140, 100};
  int mlp_hidden = 128;
  int embed_dim = 64;
  Aggregation aggregation = Aggregation::Concat;
  bool include_attributes = true;
  DyReluConfig dyrelu;
  bool use_plain_relu = false;  // swap Dynamic ReLU for plain ReLU
  bool end_to_end = false;      // head outputs k scores instead of d features

  int stack_output_width() const { return layer_widths.back(); }
};

/// Hyper-network producing per-feature piecewise-linear coefficients from the
/// column means of the pre-activation. The final layer starts at zero so the
/// activation is exactly max(x, 0) at initialization.
struct DyReluParams {
  ad::Parameter w1, b1;
  ad::Parameter w2_slopes, b2_slopes;
  ad::Parameter w2_intercepts, b2_intercepts;
  DenseMatrix base_slopes;  // pieces x features, first row 1, rest 0
};

struct GcnLayerParams {
  ad::Parameter weight;
  ad::Parameter bn_gamma, bn_beta;
  std::unique_ptr<DyReluParams> dyrelu;
};

struct GcnStackParams {
  // Affine projection onto layer_widths[0] when the input width differs.
  std::unique_ptr<ad::Parameter> input_proj_w, input_proj_b;
  std::vector<GcnLayerParams> layers;
};

struct MlpParams {
  ad::Parameter w1, b1, w2, b2;
};

/// All trainable state: r GCN stacks plus the shared MLP head.
struct ModelState {
  ModelConfig config;
  int input_width = 0;
  int output_width = 0;
  std::vector<GcnStackParams> stacks;
  std::unique_ptr<MlpParams> mlp;

  static ModelState create(const ModelConfig& config, int order, int input_width,
                           int mlp_input_width, int output_width, std::uint64_t init_seed);

  std::vector<ad::Parameter*> parameters();
  std::vector<const ad::Parameter*> parameters() const;
  void zero_grads();
};

/// Width of the fused matrix fed to the MLP for a given configuration.
int fused_width(const ModelConfig& config, int order, int attribute_width);

/// Dynamic ReLU on the tape: coefficients come from the stack's hyper-net.
ad::NodeId dynamic_relu_forward(ad::Tape& tape, ad::NodeId x, DyReluParams& params,
                                const DyReluConfig& config);

/// One stack: per layer S_hat * H * W, batch norm, activation.
ad::NodeId gcn_stack_forward(ad::Tape& tape, GcnStackParams& stack, const SparseMatrix& s_hat,
                             ad::NodeId input, const ModelConfig& config);

/// All r stacks; input is shared, parameters are not.
std::vector<ad::NodeId> gcn_forward(ad::Tape& tape, ModelState& model,
                                    const std::vector<SparseMatrix>& s_hats, ad::NodeId input);

/// Softmax of per-stack modularity scores, computed with max subtraction.
std::vector<double> fusion_weights(const std::vector<double>& modularities);

/// Weighted aggregation of stack outputs; optionally appends attribute
/// columns. Sum mode requires identical shapes.
ad::NodeId fuse(ad::Tape& tape, const std::vector<ad::NodeId>& stack_outputs,
                const std::vector<double>& weights, const ModelConfig& config,
                std::optional<ad::NodeId> attributes);

/// Two sigmoid-activated affine layers; outputs lie in (0, 1).
ad::NodeId mlp_forward(ad::Tape& tape, ad::NodeId fused, MlpParams& mlp);

/// Value-level convenience wrapper around a throwaway tape.
DenseMatrix dynamic_relu(const DenseMatrix& x, const DenseMatrix& slopes,
                         const DenseMatrix& intercepts);

}  // namespace sdge
