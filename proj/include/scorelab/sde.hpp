#pragma once

#include <cstdint>
#include <functional>
#include <vector>

#include "scorelab/rng.hpp"
#include "scorelab/tensor.hpp"

namespace scorelab::sde {

using numcore::Rng;
using numcore::Tensor;

// Variance-exploding schedule: sigma(t) interpolates geometrically between
// sigma_min and sigma_max over [0, horizon]; the forward process has zero
// drift and perturbation kernel N(x_t; x_0, v(t) I) with
// v(t) = sigma^2(t) - sigma^2(0). t_floor is the smallest usable time: the
// kernel degenerates as v(t) -> 0.
struct SdeConfig {
  double sigma_min = 0.01;
  double sigma_max = 50.0;
  double horizon = 1.0;
  double t_floor = 1e-3;

  void validate() const;  // throws ConfigError
};

double sigma(const SdeConfig& cfg, double t);
double sigma_sq(const SdeConfig& cfg, double t);
double variance(const SdeConfig& cfg, double t);      // v(t)
double diffusion_sq(const SdeConfig& cfg, double t);  // g^2(t)

// x_t = x0 + sqrt(v(t)) * eps with eps ~ N(0, I). Requires t >= t_floor.
Tensor perturb(const SdeConfig& cfg, const Tensor& x0, double t, Rng& rng);

// Score of the perturbation kernel: -(x_t - x0) / v(t).
Tensor kernel_score(const SdeConfig& cfg, const Tensor& x_t, const Tensor& x0,
                    double t);

// Batched score evaluator: (states [n,d], t) -> scores [n,d].
using BatchScoreFn = std::function<Tensor(const Tensor& x, double t)>;

enum class NonFinitePolicy {
  kThrow,    // NumericalError naming the failing step
  kFlagRow,  // freeze the offending sample, keep integrating the rest
};

struct SampleResult {
  Tensor samples;               // [n, d] terminal states
  std::vector<std::uint8_t> ok; // per-sample finite flag
  std::size_t n_failed = 0;
};

// Euler-Maruyama integration of the reverse SDE
//   dx = -g^2(t) * score(x, t) dt + g(t) dw
// on a uniform grid from t_start down to t_end (default: cfg.t_floor).
// Per-sample noise comes from rng.fork(sample index), so results do not
// depend on thread count.
SampleResult reverse_integrate(const SdeConfig& cfg,
                               const BatchScoreFn& score_fn,
                               const Tensor& init_states, double t_start,
                               int n_steps, Rng& rng,
                               NonFinitePolicy policy = NonFinitePolicy::kThrow,
                               double t_end = -1.0);

// Draws x ~ N(0, sigma^2(T) I) and integrates from T down to t_floor.
SampleResult reverse_sample(const SdeConfig& cfg, const BatchScoreFn& score_fn,
                            std::size_t dim, int n_steps,
                            std::size_t n_samples, Rng& rng,
                            NonFinitePolicy policy = NonFinitePolicy::kThrow);

}  // namespace scorelab::sde
