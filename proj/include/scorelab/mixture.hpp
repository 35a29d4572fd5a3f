#pragma once

#include <cstdint>
#include <vector>

#include "scorelab/rng.hpp"
#include "scorelab/sde.hpp"
#include "scorelab/tensor.hpp"

namespace scorelab::analytic {

using numcore::Rng;
using numcore::Tensor;
using sde::SdeConfig;

// Weighted Gaussian mixture over R^dim. Under the VE kernel the diffused
// marginal at time t is again a mixture, with component covariances
// Sigma_i + v(t) I, which makes the marginal score exactly computable and
// turns this type into the test oracle for every score-matching objective.
struct GaussianMixture {
  std::size_t dim = 0;
  std::vector<double> weights;             // k, sums to 1
  std::vector<std::vector<double>> means;  // k of [dim]
  std::vector<std::vector<double>> covs;   // k of [dim*dim], SPD

  std::size_t components() const { return weights.size(); }
  void validate() const;
  bool is_single_isotropic(double* var_out = nullptr) const;

  static GaussianMixture single_isotropic(std::size_t dim, double var,
                                          std::vector<double> mean = {});

  // One draw x0 ~ mixture; optionally reports the component index.
  std::vector<double> sample(Rng& rng, int* component = nullptr) const;
};

// Per-component Cholesky factors of (Sigma_i + v(t) I), built once per time
// and reused across a batch.
class DiffusedMixture {
 public:
  DiffusedMixture(const GaussianMixture& gm, double t, const SdeConfig& cfg);

  std::size_t dim() const { return dim_; }
  double log_density(const double* x) const;
  void score(const double* x, double* out) const;

 private:
  std::size_t dim_;
  std::size_t k_;
  std::vector<double> log_w_;
  std::vector<std::vector<double>> means_;
  std::vector<std::vector<double>> chol_;  // lower factors
  std::vector<double> log_norm_;           // -sum log L_ii - d/2 log(2 pi)
};

// Exact diffused-marginal score, log-sum-exp stabilized. x may be [d] or
// [n,d]; rows are evaluated in parallel.
Tensor mixture_score(const GaussianMixture& gm, const Tensor& x, double t,
                     const SdeConfig& cfg);

// Per-row times (one t per sample).
Tensor mixture_score_rows(const GaussianMixture& gm, const Tensor& x,
                          const std::vector<double>& t, const SdeConfig& cfg);

double log_density(const GaussianMixture& gm, const std::vector<double>& x,
                   double t, const SdeConfig& cfg);

// Closed-form DSM-vs-ESM constant for a single isotropic Gaussian with
// variance var: C(t) = d * var / (v(t) * (var + v(t))).
double dsm_constant(const GaussianMixture& gm, double t, const SdeConfig& cfg);

struct McEstimate {
  double estimate = 0.0;
  double std_err = 0.0;  // NaN when n_draws < 2
  std::int64_t n_draws = 0;
};

// Monte-Carlo estimate of E || kernel_score - mixture_score ||^2 over
// x0 ~ gm, x_t | x0. Works for any mixture.
McEstimate mc_dsm_constant(const GaussianMixture& gm, double t,
                           const SdeConfig& cfg, std::int64_t n_draws,
                           Rng& rng);

}  // namespace scorelab::analytic
