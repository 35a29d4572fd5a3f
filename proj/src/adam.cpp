#include "scorelab/adam.hpp"

#include <cmath>

#include "scorelab/errors.hpp"

namespace scorelab::numcore {

AdamState::AdamState(std::vector<Tensor> params, AdamConfig cfg)
    : params_(std::move(params)), cfg_(cfg) {
  m_.reserve(params_.size());
  v_.reserve(params_.size());
  for (const auto& p : params_) {
    if (!p.defined()) throw DimensionError("adam: undefined parameter");
    m_.emplace_back(p.size(), 0.0);
    v_.emplace_back(p.size(), 0.0);
  }
}

void AdamState::step() {
  ++step_count_;
  const double bc1 = 1.0 - std::pow(cfg_.beta1, static_cast<double>(step_count_));
  const double bc2 = 1.0 - std::pow(cfg_.beta2, static_cast<double>(step_count_));
  for (std::size_t pi = 0; pi < params_.size(); ++pi) {
    Tensor& p = params_[pi];
    const std::size_t n = p.size();
    const double* g = p.has_grad() ? p.grad().data() : nullptr;
    double* x = p.data();
    auto& m = m_[pi];
    auto& v = v_[pi];
    for (std::size_t i = 0; i < n; ++i) {
      const double gi = g ? g[i] : 0.0;
      m[i] = cfg_.beta1 * m[i] + (1.0 - cfg_.beta1) * gi;
      v[i] = cfg_.beta2 * v[i] + (1.0 - cfg_.beta2) * gi * gi;
      const double m_hat = m[i] / bc1;
      const double v_hat = v[i] / bc2;
      x[i] -= cfg_.learning_rate * m_hat / (std::sqrt(v_hat) + cfg_.epsilon);
    }
  }
}

void AdamState::zero_grad() {
  for (auto& p : params_) p.zero_grad();
}

}  // namespace scorelab::numcore
