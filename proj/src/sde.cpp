#include "scorelab/sde.hpp"

#include <cmath>
#include <string>

#include "scorelab/errors.hpp"

namespace scorelab::sde {

namespace {

void require_time(const SdeConfig& cfg, double t, const char* op) {
  if (!(t >= 0.0 && t <= cfg.horizon))
    throw DomainError(std::string(op) + ": t=" + std::to_string(t) +
                      " outside [0, " + std::to_string(cfg.horizon) + "]");
}

bool row_finite(const double* x, std::size_t d) {
  for (std::size_t j = 0; j < d; ++j)
    if (!std::isfinite(x[j])) return false;
  return true;
}

SampleResult integrate(const SdeConfig& cfg, const BatchScoreFn& score_fn,
                       Tensor x, double t_start, double t_end, int n_steps,
                       std::vector<Rng>& streams, NonFinitePolicy policy) {
  const std::size_t n = x.rows(), d = x.cols();
  SampleResult res;
  res.ok.assign(n, 1);
  const double dt = (t_start - t_end) / n_steps;
  for (int step = 0; step < n_steps; ++step) {
    const double t = t_start - step * dt;
    Tensor sc;
    {
      numcore::NoGradGuard ng;
      sc = score_fn(x, t);
    }
    if (sc.shape() != x.shape())
      throw DimensionError("reverse_integrate: score shape mismatch");
    const double* s = sc.data();
    for (std::size_t i = 0; i < n; ++i) {
      if (res.ok[i] && !row_finite(s + i * d, d)) {
        if (policy == NonFinitePolicy::kThrow)
          throw NumericalError("reverse_integrate: non-finite score at step " +
                               std::to_string(step) + " (t=" +
                               std::to_string(t) + ")");
        res.ok[i] = 0;
        ++res.n_failed;
      }
    }
    const double g2 = diffusion_sq(cfg, t);
    const double g_sdt = std::sqrt(g2) * std::sqrt(dt);
    double* xd = x.data();
#pragma omp parallel for schedule(static)
    for (std::ptrdiff_t i = 0; i < static_cast<std::ptrdiff_t>(n); ++i) {
      if (!res.ok[i]) continue;
      for (std::size_t j = 0; j < d; ++j) {
        const std::size_t idx = i * d + j;
        xd[idx] += g2 * s[idx] * dt + g_sdt * streams[i].normal();
      }
    }
  }
  res.samples = std::move(x);
  return res;
}

}  // namespace

void SdeConfig::validate() const {
  if (!(sigma_min > 0.0))
    throw ConfigError("sde: sigma_min must be positive");
  if (!(sigma_max > sigma_min))
    throw ConfigError("sde: sigma_max must exceed sigma_min");
  if (!(horizon > 0.0)) throw ConfigError("sde: horizon must be positive");
  if (!(t_floor > 0.0 && t_floor < horizon))
    throw ConfigError("sde: t_floor must lie in (0, horizon)");
}

double sigma(const SdeConfig& cfg, double t) {
  require_time(cfg, t, "sigma");
  return cfg.sigma_min *
         std::pow(cfg.sigma_max / cfg.sigma_min, t / cfg.horizon);
}

double sigma_sq(const SdeConfig& cfg, double t) {
  const double s = sigma(cfg, t);
  return s * s;
}

double variance(const SdeConfig& cfg, double t) {
  return sigma_sq(cfg, t) - cfg.sigma_min * cfg.sigma_min;
}

double diffusion_sq(const SdeConfig& cfg, double t) {
  // d[sigma^2(t)]/dt for the geometric schedule
  return 2.0 * std::log(cfg.sigma_max / cfg.sigma_min) / cfg.horizon *
         sigma_sq(cfg, t);
}

Tensor perturb(const SdeConfig& cfg, const Tensor& x0, double t, Rng& rng) {
  require_time(cfg, t, "perturb");
  if (t < cfg.t_floor)
    throw DomainError("perturb: t=" + std::to_string(t) +
                      " below t_floor (kernel degenerates)");
  const double sd = std::sqrt(variance(cfg, t));
  std::vector<double> out(x0.values());
  for (auto& v : out) v += sd * rng.normal();
  return Tensor(x0.shape(), std::move(out));
}

Tensor kernel_score(const SdeConfig& cfg, const Tensor& x_t, const Tensor& x0,
                    double t) {
  require_time(cfg, t, "kernel_score");
  const double v = variance(cfg, t);
  if (!(v > 0.0))
    throw DomainError("kernel_score: v(t) <= 0 at t=" + std::to_string(t));
  if (x_t.shape() != x0.shape())
    throw DimensionError("kernel_score: x_t and x0 shapes differ");
  const double* a = x_t.data();
  const double* b = x0.data();
  std::vector<double> out(x_t.size());
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = -(a[i] - b[i]) / v;
  return Tensor(x_t.shape(), std::move(out));
}

SampleResult reverse_integrate(const SdeConfig& cfg,
                               const BatchScoreFn& score_fn,
                               const Tensor& init_states, double t_start,
                               int n_steps, Rng& rng, NonFinitePolicy policy,
                               double t_end) {
  cfg.validate();
  if (n_steps < 1) throw DomainError("reverse_integrate: n_steps must be >= 1");
  if (init_states.rank() != 2)
    throw DimensionError("reverse_integrate: init states must be [n,d]");
  if (t_end < 0.0) t_end = cfg.t_floor;
  require_time(cfg, t_start, "reverse_integrate");
  if (!(t_start > t_end))
    throw DomainError("reverse_integrate: t_start must exceed t_end");
  const std::size_t n = init_states.rows();
  std::vector<Rng> streams;
  streams.reserve(n);
  for (std::size_t i = 0; i < n; ++i) streams.push_back(rng.fork(i));
  return integrate(cfg, score_fn, init_states.detached(), t_start, t_end,
                   n_steps, streams, policy);
}

SampleResult reverse_sample(const SdeConfig& cfg, const BatchScoreFn& score_fn,
                            std::size_t dim, int n_steps,
                            std::size_t n_samples, Rng& rng,
                            NonFinitePolicy policy) {
  cfg.validate();
  if (n_steps < 1) throw DomainError("reverse_sample: n_steps must be >= 1");
  if (dim == 0 || n_samples == 0)
    throw DimensionError("reverse_sample: empty request");
  std::vector<Rng> streams;
  streams.reserve(n_samples);
  for (std::size_t i = 0; i < n_samples; ++i) streams.push_back(rng.fork(i));
  // prior: x ~ N(0, sigma^2(T) I); each sample draws from its own stream
  const double s_T = sigma(cfg, cfg.horizon);
  Tensor x({n_samples, dim}, 0.0);
  double* xd = x.data();
  for (std::size_t i = 0; i < n_samples; ++i)
    for (std::size_t j = 0; j < dim; ++j)
      xd[i * dim + j] = s_T * streams[i].normal();
  return integrate(cfg, score_fn, std::move(x), cfg.horizon, cfg.t_floor,
                   n_steps, streams, policy);
}

}  // namespace scorelab::sde
