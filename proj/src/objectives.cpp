#include "scorelab/objectives.hpp"

#include <cmath>
#include <string>

#include "scorelab/errors.hpp"

namespace scorelab::objectives {

namespace {

// Draws per-example noise, forms x_t and the kernel-score target.
struct PerturbedBatch {
  Tensor x_t;     // [n, d]
  Tensor target;  // [n, d] kernel score, constant
  Tensor lambda;  // [n]
};

PerturbedBatch perturb_batch(const Tensor& x0, const std::vector<double>& t,
                             const TimeWeighting& tw, const SdeConfig& cfg,
                             Rng& rng) {
  const std::size_t n = x0.rows(), d = x0.cols();
  std::vector<double> xt(n * d), target(n * d), lam(n);
  const double* x = x0.data();
  for (std::size_t i = 0; i < n; ++i) {
    const double sd = std::sqrt(sde::variance(cfg, t[i]));
    lam[i] = tw.lambda(t[i], cfg);
    for (std::size_t j = 0; j < d; ++j) {
      const double eps = rng.normal();
      xt[i * d + j] = x[i * d + j] + sd * eps;
      target[i * d + j] = -eps / sd;
    }
  }
  PerturbedBatch out;
  out.x_t = Tensor({n, d}, std::move(xt));
  out.target = Tensor({n, d}, std::move(target));
  out.lambda = Tensor({n}, std::move(lam));
  return out;
}

void require_batch(const Tensor& x0, const char* op) {
  if (x0.rank() != 2 || x0.rows() == 0)
    throw DimensionError(std::string(op) + ": x0 must be a non-empty [n,d]");
}

}  // namespace

TimeWeighting TimeWeighting::uniform_t() { return {Mode::kUniformT, {}}; }
TimeWeighting TimeWeighting::uniform_sigma() {
  return {Mode::kUniformSigma, {}};
}
TimeWeighting TimeWeighting::fixed(double t) { return {Mode::kFixedT, t}; }

void TimeWeighting::validate(const SdeConfig& cfg) const {
  cfg.validate();
  if (mode == Mode::kFixedT) {
    if (!fixed_t)
      throw ConfigError("time weighting: fixed-t mode requires fixed_t");
    if (!(*fixed_t >= cfg.t_floor && *fixed_t <= cfg.horizon))
      throw ConfigError("time weighting: fixed_t=" + std::to_string(*fixed_t) +
                        " outside [t_floor, horizon]");
  }
}

double TimeWeighting::lambda(double t, const SdeConfig& cfg) const {
  return sde::sigma_sq(cfg, t);
}

std::vector<double> sample_t(const TimeWeighting& tw, std::size_t batch,
                             const SdeConfig& cfg, Rng& rng) {
  if (batch < 1) throw DomainError("sample_t: batch must be >= 1");
  tw.validate(cfg);
  std::vector<double> t(batch);
  switch (tw.mode) {
    case TimeWeighting::Mode::kUniformT:
      for (auto& v : t)
        v = cfg.t_floor + rng.uniform() * (cfg.horizon - cfg.t_floor);
      break;
    case TimeWeighting::Mode::kUniformSigma: {
      const double log_ratio = std::log(cfg.sigma_max / cfg.sigma_min);
      for (auto& v : t) {
        const double s =
            cfg.sigma_min + rng.uniform() * (cfg.sigma_max - cfg.sigma_min);
        v = cfg.horizon * std::log(s / cfg.sigma_min) / log_ratio;
        if (v < cfg.t_floor) v = cfg.t_floor;
      }
      break;
    }
    case TimeWeighting::Mode::kFixedT:
      for (auto& v : t) v = *tw.fixed_t;
      break;
  }
  return t;
}

ConditionedScoreFn model_score_fn(const models::ScoreModel& m) {
  return [&m](const Tensor& x_t, const std::vector<double>& t,
              const Tensor* z) {
    if (z) return m.forward(x_t, t, *z);
    return m.forward(x_t, t, m.zero_latent(x_t.rows()));
  };
}

LossReport dsm_loss_fn(const ConditionedScoreFn& score, const Tensor& x0,
                       const TimeWeighting& tw, const SdeConfig& cfg, Rng& rng,
                       const Tensor* z) {
  using namespace numcore;
  require_batch(x0, "dsm_loss");
  const std::vector<double> t = sample_t(tw, x0.rows(), cfg, rng);
  const PerturbedBatch pb = perturb_batch(x0, t, tw, cfg, rng);
  const Tensor pred = score(pb.x_t, t, z);
  if (pred.shape() != pb.target.shape())
    throw DimensionError("dsm_loss: model output shape mismatch");
  Tensor per_example = sum_rows(square(sub(pred, pb.target)));
  Tensor loss = numcore::mean(mul(per_example, pb.lambda));
  if (!std::isfinite(loss.item())) {
    std::string ts;
    for (std::size_t i = 0; i < std::min<std::size_t>(t.size(), 4); ++i)
      ts += (i ? ", " : "") + std::to_string(t[i]);
    throw NumericalError("dsm_loss: non-finite loss (first t values: " + ts +
                         ")");
  }
  LossReport rep;
  rep.total = loss.item();
  rep.dsm_term = loss.item();
  rep.batch_t = t;
  rep.total_tensor = loss;
  return rep;
}

LossReport dsm_loss(const models::ScoreModel& m, const Tensor& x0,
                    const TimeWeighting& tw, const SdeConfig& cfg, Rng& rng,
                    const Tensor* z) {
  return dsm_loss_fn(model_score_fn(m), x0, tw, cfg, rng, z);
}

double esm_loss_fn(const ConditionedScoreFn& score,
                   const analytic::GaussianMixture& gm, const Tensor& x0,
                   const TimeWeighting& tw, const SdeConfig& cfg, Rng& rng) {
  using namespace numcore;
  require_batch(x0, "esm_loss");
  NoGradGuard ng;
  const std::vector<double> t = sample_t(tw, x0.rows(), cfg, rng);
  const PerturbedBatch pb = perturb_batch(x0, t, tw, cfg, rng);
  const Tensor truth = analytic::mixture_score_rows(gm, pb.x_t, t, cfg);
  const Tensor pred = score(pb.x_t, t, nullptr);
  if (pred.shape() != truth.shape())
    throw DimensionError("esm_loss: model output shape mismatch");
  Tensor loss =
      numcore::mean(mul(sum_rows(square(sub(pred, truth))), pb.lambda));
  if (!std::isfinite(loss.item()))
    throw NumericalError("esm_loss: non-finite loss");
  return loss.item();
}

double esm_loss(const models::ScoreModel& m,
                const analytic::GaussianMixture& gm, const Tensor& x0,
                const TimeWeighting& tw, const SdeConfig& cfg, Rng& rng) {
  return esm_loss_fn(model_score_fn(m), gm, x0, tw, cfg, rng);
}

double default_reg_weight(models::EncoderMode mode) {
  return mode == models::EncoderMode::kDeterministicL1 ? 1e-5 : 1e-7;
}

LossReport repr_loss(const models::ScoreModel& m, const models::Encoder& e,
                     const Tensor& x0, const TimeWeighting& tw,
                     const SdeConfig& cfg, Rng& rng,
                     std::optional<double> reg_weight) {
  using namespace numcore;
  require_batch(x0, "repr_loss");
  if (e.latent_dim() != m.latent_dim())
    throw DimensionError("repr_loss: encoder latent_dim " +
                         std::to_string(e.latent_dim()) + " != model " +
                         std::to_string(m.latent_dim()));
  const double w = reg_weight ? *reg_weight : default_reg_weight(e.mode());
  const auto enc = e.encode(x0, rng);
  LossReport rep = dsm_loss(m, x0, tw, cfg, rng, &enc.z);
  rep.total_tensor = add(rep.total_tensor, mul_scalar(enc.reg_raw, w));
  rep.total = rep.total_tensor.item();
  rep.reg_term = enc.reg_raw.item();
  rep.reg_weight = w;
  if (!std::isfinite(rep.total))
    throw NumericalError("repr_loss: non-finite loss");
  return rep;
}

DecompositionResult decomposition_check(const models::ScoreModel& m,
                                        const analytic::GaussianMixture& gm,
                                        double t, const SdeConfig& cfg,
                                        std::int64_t n_draws, Rng& rng,
                                        double kernel_sign) {
  using namespace numcore;
  if (n_draws < 2)
    throw DomainError("decomposition_check: n_draws must be >= 2");
  if (t < cfg.t_floor)
    throw DomainError("decomposition_check: t below t_floor");
  if (gm.dim != m.data_dim())
    throw DimensionError("decomposition_check: mixture/model dim mismatch");
  const double v = sde::variance(cfg, t);
  const double sd = std::sqrt(v);
  const std::size_t d = gm.dim;
  const analytic::DiffusedMixture dm(gm, t, cfg);

  std::vector<double> gap_vals(static_cast<std::size_t>(n_draws));
  std::vector<double> floor_vals(static_cast<std::size_t>(n_draws));

  const std::int64_t chunk = 8192;
  NoGradGuard ng;
  for (std::int64_t start = 0; start < n_draws; start += chunk) {
    const std::size_t c =
        static_cast<std::size_t>(std::min(chunk, n_draws - start));
    Tensor xt({c, d}, 0.0);
    std::vector<double> kernel(c * d), marginal(c * d);
    double* xtd = xt.data();
#pragma omp parallel for schedule(static)
    for (std::ptrdiff_t j = 0; j < static_cast<std::ptrdiff_t>(c); ++j) {
      Rng stream = rng.fork(static_cast<std::uint64_t>(start + j));
      const auto x0 = gm.sample(stream);
      for (std::size_t i = 0; i < d; ++i) {
        const double eps = stream.normal();
        xtd[j * d + i] = x0[i] + sd * eps;
        kernel[j * d + i] = kernel_sign * (-eps / sd);
      }
      dm.score(xtd + j * d, marginal.data() + j * d);
    }
    const std::vector<double> tvec(c, t);
    const Tensor s = m.forward(xt, tvec, m.zero_latent(c));
    const double* sdat = s.data();
    for (std::size_t j = 0; j < c; ++j) {
      double dsm = 0.0, esm = 0.0, fl = 0.0;
      for (std::size_t i = 0; i < d; ++i) {
        const double sv = sdat[j * d + i];
        const double kv = kernel[j * d + i];
        const double mv = marginal[j * d + i];
        dsm += (sv - kv) * (sv - kv);
        esm += (sv - mv) * (sv - mv);
        fl += (kv - mv) * (kv - mv);
      }
      gap_vals[static_cast<std::size_t>(start) + j] = dsm - esm;
      floor_vals[static_cast<std::size_t>(start) + j] = fl;
    }
  }

  auto mean_se = [](const std::vector<double>& vals, double* mean_out,
                    double* se_out) {
    double sum = 0.0;
    for (double x : vals) sum += x;
    const double mean = sum / static_cast<double>(vals.size());
    double ss = 0.0;
    for (double x : vals) ss += (x - mean) * (x - mean);
    *mean_out = mean;
    *se_out = std::sqrt(ss / static_cast<double>(vals.size() - 1) /
                        static_cast<double>(vals.size()));
  };

  DecompositionResult res;
  res.n_draws = n_draws;
  mean_se(gap_vals, &res.gap, &res.gap_std_err);
  mean_se(floor_vals, &res.floor, &res.floor_std_err);
  return res;
}

}  // namespace scorelab::objectives
