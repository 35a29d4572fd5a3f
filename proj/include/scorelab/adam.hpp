#pragma once

#include <cstdint>
#include <vector>

#include "scorelab/tensor.hpp"

namespace scorelab::numcore {

// Defaults follow the Adam settings the training recipes in this repo assume:
// lr 2e-4, beta1 0.9, beta2 0.999, eps 1e-8.
struct AdamConfig {
  double learning_rate = 2e-4;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;
};

// Holds first/second moment buffers shape-congruent with the tracked
// parameters; step() applies the bias-corrected update in place using the
// grads populated by backward(). A parameter with no grad buffer is treated
// as having zero gradient.
class AdamState {
 public:
  explicit AdamState(std::vector<Tensor> params, AdamConfig cfg = {});

  void step();
  void zero_grad();
  std::int64_t step_count() const { return step_count_; }
  const AdamConfig& config() const { return cfg_; }

 private:
  std::vector<Tensor> params_;
  std::vector<std::vector<double>> m_;
  std::vector<std::vector<double>> v_;
  std::int64_t step_count_ = 0;
  AdamConfig cfg_;
};

}  // namespace scorelab::numcore
