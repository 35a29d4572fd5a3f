#pragma once

#include <cstdint>
#include <functional>
#include <optional>
#include <vector>

#include "scorelab/mixture.hpp"
#include "scorelab/models.hpp"
#include "scorelab/rng.hpp"
#include "scorelab/sde.hpp"
#include "scorelab/tensor.hpp"

namespace scorelab::objectives {

using numcore::Rng;
using numcore::Tensor;
using sde::SdeConfig;

// How training times are drawn, together with the weight lambda(t) = sigma^2(t).
// uniform-sigma emphasizes high noise (sigma itself uniform over its range);
// fixed-t concentrates all weight on a single timescale.
struct TimeWeighting {
  enum class Mode { kUniformT, kUniformSigma, kFixedT };
  Mode mode = Mode::kUniformT;
  std::optional<double> fixed_t;

  void validate(const SdeConfig& cfg) const;
  double lambda(double t, const SdeConfig& cfg) const;

  static TimeWeighting uniform_t();
  static TimeWeighting uniform_sigma();
  static TimeWeighting fixed(double t);
};

std::vector<double> sample_t(const TimeWeighting& tw, std::size_t batch,
                             const SdeConfig& cfg, Rng& rng);

struct LossReport {
  double total = 0.0;
  double dsm_term = 0.0;
  double reg_term = 0.0;
  double reg_weight = 0.0;
  std::vector<double> batch_t;
  Tensor total_tensor;  // graph-bearing scalar, feed to backward()
};

// Batched conditional score evaluator; z is null for unconditional use.
using ConditionedScoreFn = std::function<Tensor(
    const Tensor& x_t, const std::vector<double>& t, const Tensor* z)>;

ConditionedScoreFn model_score_fn(const models::ScoreModel& m);

// Denoising objective: mean over the batch of
//   lambda(t_i) * || s(x_t, t_i [, z_i]) - kernel_score(x_t, x0, t_i) ||^2
// with per-example times and noise.
LossReport dsm_loss_fn(const ConditionedScoreFn& score, const Tensor& x0,
                       const TimeWeighting& tw, const SdeConfig& cfg, Rng& rng,
                       const Tensor* z = nullptr);
LossReport dsm_loss(const models::ScoreModel& m, const Tensor& x0,
                    const TimeWeighting& tw, const SdeConfig& cfg, Rng& rng,
                    const Tensor* z = nullptr);

// Explicit score-matching objective against the exact diffused mixture score
// (evaluation only; no gradients).
double esm_loss_fn(const ConditionedScoreFn& score,
                   const analytic::GaussianMixture& gm, const Tensor& x0,
                   const TimeWeighting& tw, const SdeConfig& cfg, Rng& rng);
double esm_loss(const models::ScoreModel& m,
                const analytic::GaussianMixture& gm, const Tensor& x0,
                const TimeWeighting& tw, const SdeConfig& cfg, Rng& rng);

double default_reg_weight(models::EncoderMode mode);  // 1e-5 L1 / 1e-7 KL

// Representation objective: z = E(x0), dsm term conditioned on z, plus the
// encoder regularizer scaled by reg_weight.
LossReport repr_loss(const models::ScoreModel& m, const models::Encoder& e,
                     const Tensor& x0, const TimeWeighting& tw,
                     const SdeConfig& cfg, Rng& rng,
                     std::optional<double> reg_weight = std::nullopt);

struct DecompositionResult {
  double gap = 0.0;       // mean of ||s-k||^2 - ||s-m||^2 (unweighted)
  double gap_std_err = 0.0;
  double floor = 0.0;     // mean of ||k-m||^2 from the same draws
  double floor_std_err = 0.0;
  std::int64_t n_draws = 0;
};

// Estimates the DSM-minus-ESM gap and the matching constant floor with
// common random numbers; the gap is independent of the model parameters, so
// the check is meaningful on randomly initialized models. kernel_sign is a
// fault-injection hook for the verification pipeline (-1 makes the identity
// fail on purpose); leave it at +1 otherwise.
DecompositionResult decomposition_check(const models::ScoreModel& m,
                                        const analytic::GaussianMixture& gm,
                                        double t, const SdeConfig& cfg,
                                        std::int64_t n_draws, Rng& rng,
                                        double kernel_sign = 1.0);

}  // namespace scorelab::objectives
