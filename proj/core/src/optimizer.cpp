#include "sdge/optimizer.hpp"

#include <cmath>

namespace sdge {

AdamOptimizer::AdamOptimizer(std::vector<ad::Parameter*> params, double learning_rate,
                             double beta1, double beta2, double epsilon)
    : params_(std::move(params)),
      learning_rate_(learning_rate),
      beta1_(beta1),
      beta2_(beta2),
      epsilon_(epsilon) {
  first_moment_.reserve(params_.size());
  second_moment_.reserve(params_.size());
  for (const ad::Parameter* p : params_) {
    first_moment_.emplace_back(p->value.rows(), p->value.cols());
    second_moment_.emplace_back(p->value.rows(), p->value.cols());
  }
}

void AdamOptimizer::step() {
  ++step_count_;
  const double bc1 = 1.0 - std::pow(beta1_, step_count_);
  const double bc2 = 1.0 - std::pow(beta2_, step_count_);
  for (size_t t = 0; t < params_.size(); ++t) {
    ad::Parameter& p = *params_[t];
    auto& m = first_moment_[t].data();
    auto& v = second_moment_[t].data();
    auto& g = p.grad.data();
    auto& x = p.value.data();
    for (size_t i = 0; i < x.size(); ++i) {
      m[i] = beta1_ * m[i] + (1.0 - beta1_) * g[i];
      v[i] = beta2_ * v[i] + (1.0 - beta2_) * g[i] * g[i];
      const double mhat = m[i] / bc1;
      const double vhat = v[i] / bc2;
      x[i] -= learning_rate_ * mhat / (std::sqrt(vhat) + epsilon_);
    }
    p.zero_grad();
  }
}

}  // namespace sdge
