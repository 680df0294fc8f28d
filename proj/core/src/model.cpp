#include "sdge/model.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "sdge/rng.hpp"

namespace sdge {

namespace {

DenseMatrix glorot(int fan_in, int fan_out, std::mt19937_64& rng) {
  const double bound = std::sqrt(6.0 / (fan_in + fan_out));
  return uniform_matrix(fan_in, fan_out, -bound, bound, rng);
}

DyReluParams make_dyrelu(const std::string& prefix, int features, const DyReluConfig& config,
                         std::mt19937_64& rng) {
  const int hidden = std::max(1, features / config.reduction);
  const int head = config.pieces * features;
  DenseMatrix base(config.pieces, features);
  for (int j = 0; j < features; ++j) base(0, j) = 1.0;  // identity piece
  return DyReluParams{
      ad::Parameter(prefix + ".hyper_w1", glorot(features, hidden, rng)),
      ad::Parameter(prefix + ".hyper_b1", DenseMatrix(1, hidden)),
      ad::Parameter(prefix + ".slope_w", DenseMatrix(hidden, head)),
      ad::Parameter(prefix + ".slope_b", DenseMatrix(1, head)),
      ad::Parameter(prefix + ".intercept_w", DenseMatrix(hidden, head)),
      ad::Parameter(prefix + ".intercept_b", DenseMatrix(1, head)),
      std::move(base),
  };
}

}  // namespace

ModelState ModelState::create(const ModelConfig& config, int order, int input_width,
                              int mlp_input_width, int output_width, std::uint64_t init_seed) {
  if (order < 1) throw std::invalid_argument("ModelState: order must be >= 1");
  if (config.layer_widths.size() < 2) {
    throw std::invalid_argument("ModelState: layer_widths needs the input width plus a layer");
  }
  std::mt19937_64 rng = make_stream(init_seed, RngPurpose::Init);

  ModelState model;
  model.config = config;
  model.input_width = input_width;
  model.output_width = output_width;
  model.stacks.reserve(static_cast<size_t>(order));
  for (int s = 0; s < order; ++s) {
    const std::string stack_name = "stack" + std::to_string(s);
    GcnStackParams stack;
    if (input_width != config.layer_widths.front()) {
      stack.input_proj_w = std::make_unique<ad::Parameter>(
          stack_name + ".proj_w", glorot(input_width, config.layer_widths.front(), rng));
      stack.input_proj_b = std::make_unique<ad::Parameter>(
          stack_name + ".proj_b", DenseMatrix(1, config.layer_widths.front()));
    }
    for (size_t layer = 0; layer + 1 < config.layer_widths.size(); ++layer) {
      const int in = config.layer_widths[layer];
      const int out = config.layer_widths[layer + 1];
      const std::string name = stack_name + ".layer" + std::to_string(layer);
      GcnLayerParams lp{
          ad::Parameter(name + ".weight", glorot(in, out, rng)),
          ad::Parameter(name + ".bn_gamma", DenseMatrix(1, out, 1.0)),
          ad::Parameter(name + ".bn_beta", DenseMatrix(1, out)),
          nullptr,
      };
      if (!config.use_plain_relu) {
        lp.dyrelu = std::make_unique<DyReluParams>(make_dyrelu(name, out, config.dyrelu, rng));
      }
      stack.layers.push_back(std::move(lp));
    }
    model.stacks.push_back(std::move(stack));
  }

  model.mlp = std::make_unique<MlpParams>(MlpParams{
      ad::Parameter("mlp.w1", glorot(mlp_input_width, config.mlp_hidden, rng)),
      ad::Parameter("mlp.b1", DenseMatrix(1, config.mlp_hidden)),
      ad::Parameter("mlp.w2", glorot(config.mlp_hidden, output_width, rng)),
      ad::Parameter("mlp.b2", DenseMatrix(1, output_width)),
  });
  return model;
}

std::vector<ad::Parameter*> ModelState::parameters() {
  std::vector<ad::Parameter*> out;
  for (auto& stack : stacks) {
    if (stack.input_proj_w) {
      out.push_back(stack.input_proj_w.get());
      out.push_back(stack.input_proj_b.get());
    }
    for (auto& layer : stack.layers) {
      out.push_back(&layer.weight);
      out.push_back(&layer.bn_gamma);
      out.push_back(&layer.bn_beta);
      if (layer.dyrelu) {
        out.push_back(&layer.dyrelu->w1);
        out.push_back(&layer.dyrelu->b1);
        out.push_back(&layer.dyrelu->w2_slopes);
        out.push_back(&layer.dyrelu->b2_slopes);
        out.push_back(&layer.dyrelu->w2_intercepts);
        out.push_back(&layer.dyrelu->b2_intercepts);
      }
    }
  }
  if (mlp) {
    out.push_back(&mlp->w1);
    out.push_back(&mlp->b1);
    out.push_back(&mlp->w2);
    out.push_back(&mlp->b2);
  }
  return out;
}

std::vector<const ad::Parameter*> ModelState::parameters() const {
  auto mutable_params = const_cast<ModelState*>(this)->parameters();
  return {mutable_params.begin(), mutable_params.end()};
}

void ModelState::zero_grads() {
  for (ad::Parameter* p : parameters()) p->zero_grad();
}

int fused_width(const ModelConfig& config, int order, int attribute_width) {
  int width = config.aggregation == Aggregation::Concat ? config.stack_output_width() * order
                                                        : config.stack_output_width();
  if (config.include_attributes) width += attribute_width;
  return width;
}

ad::NodeId dynamic_relu_forward(ad::Tape& tape, ad::NodeId x, DyReluParams& params,
                                const DyReluConfig& config) {
  const int features = tape.value(x).cols();
  const ad::NodeId context = tape.row_mean(x);
  const ad::NodeId hidden = tape.relu(
      tape.add_rowvec(tape.matmul(context, tape.parameter(params.w1)), tape.parameter(params.b1)));

  const ad::NodeId slope_delta = tape.reshape(
      tape.add_rowvec(tape.matmul(hidden, tape.parameter(params.w2_slopes)),
                      tape.parameter(params.b2_slopes)),
      config.pieces, features);
  const ad::NodeId intercepts = tape.reshape(
      tape.add_rowvec(tape.matmul(hidden, tape.parameter(params.w2_intercepts)),
                      tape.parameter(params.b2_intercepts)),
      config.pieces, features);
  const ad::NodeId slopes = tape.axpy(slope_delta, tape.constant(params.base_slopes), 1.0);
  return tape.max_affine(x, slopes, intercepts);
}

ad::NodeId gcn_stack_forward(ad::Tape& tape, GcnStackParams& stack, const SparseMatrix& s_hat,
                             ad::NodeId input, const ModelConfig& config) {
  ad::NodeId h = input;
  if (stack.input_proj_w) {
    h = tape.add_rowvec(tape.matmul(h, tape.parameter(*stack.input_proj_w)),
                        tape.parameter(*stack.input_proj_b));
  }
  for (size_t layer = 0; layer < stack.layers.size(); ++layer) {
    GcnLayerParams& lp = stack.layers[layer];
    const ad::NodeId pre = tape.matmul(tape.spmm(s_hat, h), tape.parameter(lp.weight));
    const ad::NodeId normed =
        tape.batch_norm(pre, tape.parameter(lp.bn_gamma), tape.parameter(lp.bn_beta));
    h = lp.dyrelu ? dynamic_relu_forward(tape, normed, *lp.dyrelu, config.dyrelu)
                  : tape.relu(normed);
    if (!tape.value(h).all_finite()) {
      throw std::runtime_error("gcn_stack_forward: non-finite activations in layer " +
                               std::to_string(layer));
    }
  }
  return h;
}

std::vector<ad::NodeId> gcn_forward(ad::Tape& tape, ModelState& model,
                                    const std::vector<SparseMatrix>& s_hats, ad::NodeId input) {
  if (s_hats.size() != model.stacks.size()) {
    throw std::invalid_argument("gcn_forward: expected " + std::to_string(model.stacks.size()) +
                                " propagation matrices, got " + std::to_string(s_hats.size()));
  }
  std::vector<ad::NodeId> outputs;
  outputs.reserve(model.stacks.size());
  for (size_t s = 0; s < model.stacks.size(); ++s) {
    outputs.push_back(gcn_stack_forward(tape, model.stacks[s], s_hats[s], input, model.config));
  }
  return outputs;
}

std::vector<double> fusion_weights(const std::vector<double>& modularities) {
  if (modularities.empty()) throw std::invalid_argument("fusion_weights: empty input");
  const double max_q = *std::max_element(modularities.begin(), modularities.end());
  std::vector<double> weights(modularities.size());
  double total = 0.0;
  for (size_t i = 0; i < modularities.size(); ++i) {
    weights[i] = std::exp(modularities[i] - max_q);
    total += weights[i];
  }
  for (double& w : weights) w /= total;
  return weights;
}

ad::NodeId fuse(ad::Tape& tape, const std::vector<ad::NodeId>& stack_outputs,
                const std::vector<double>& weights, const ModelConfig& config,
                std::optional<ad::NodeId> attributes) {
  if (stack_outputs.empty() || stack_outputs.size() != weights.size()) {
    throw std::invalid_argument("fuse: need one weight per stack output");
  }
  ad::NodeId fused;
  if (config.aggregation == Aggregation::Sum) {
    fused = tape.scale(stack_outputs[0], weights[0]);
    for (size_t i = 1; i < stack_outputs.size(); ++i) {
      fused = tape.axpy(fused, stack_outputs[i], weights[i]);
    }
  } else {
    std::vector<ad::NodeId> blocks;
    blocks.reserve(stack_outputs.size() + 1);
    for (size_t i = 0; i < stack_outputs.size(); ++i) {
      blocks.push_back(tape.scale(stack_outputs[i], weights[i]));
    }
    fused = blocks.size() == 1 ? blocks[0] : tape.concat_cols(blocks);
  }
  if (config.include_attributes) {
    if (!attributes.has_value()) {
      throw std::invalid_argument("fuse: include_attributes set but no attribute node given");
    }
    fused = tape.concat_cols({fused, *attributes});
  }
  return fused;
}

ad::NodeId mlp_forward(ad::Tape& tape, ad::NodeId fused, MlpParams& mlp) {
  const ad::NodeId hidden = tape.sigmoid(
      tape.add_rowvec(tape.matmul(fused, tape.parameter(mlp.w1)), tape.parameter(mlp.b1)));
  return tape.sigmoid(
      tape.add_rowvec(tape.matmul(hidden, tape.parameter(mlp.w2)), tape.parameter(mlp.b2)));
}

DenseMatrix dynamic_relu(const DenseMatrix& x, const DenseMatrix& slopes,
                         const DenseMatrix& intercepts) {
  ad::Tape tape;
  const ad::NodeId out =
      tape.max_affine(tape.constant(x), tape.constant(slopes), tape.constant(intercepts));
  return tape.value(out);
}

}  // namespace sdge
