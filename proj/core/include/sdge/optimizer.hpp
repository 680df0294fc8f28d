#pragma once

#include <vector>

#include "sdge/autodiff.hpp"

namespace sdge {

/// Adam with bias correction. One slot pair (m, v) per registered parameter.
class AdamOptimizer {
 public:
  explicit AdamOptimizer(std::vector<ad::Parameter*> params, double learning_rate = 1e-3,
                         double beta1 = 0.9, double beta2 = 0.999, double epsilon = 1e-8);

  /// Apply one update from the accumulated gradients, then zero them.
  void step();

  int step_count() const { return step_count_; }

 private:
  std::vector<ad::Parameter*> params_;
  std::vector<DenseMatrix> first_moment_;
  std::vector<DenseMatrix> second_moment_;
  double learning_rate_;
  double beta1_;
  double beta2_;
  double epsilon_;
  int step_count_ = 0;
};

}  // namespace sdge
