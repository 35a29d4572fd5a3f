#include "scorelab/mixture.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>

#include "scorelab/errors.hpp"

namespace scorelab::analytic {

namespace {

constexpr double kLog2Pi = 1.8378770664093454836;

// Lower Cholesky factor of the dim x dim SPD matrix a (row-major).
std::vector<double> cholesky(std::size_t dim, const std::vector<double>& a) {
  std::vector<double> L(dim * dim, 0.0);
  for (std::size_t i = 0; i < dim; ++i) {
    for (std::size_t j = 0; j <= i; ++j) {
      double s = a[i * dim + j];
      for (std::size_t p = 0; p < j; ++p) s -= L[i * dim + p] * L[j * dim + p];
      if (i == j) {
        if (!(s > 0.0))
          throw NumericalError("cholesky: matrix not positive definite");
        L[i * dim + i] = std::sqrt(s);
      } else {
        L[i * dim + j] = s / L[j * dim + j];
      }
    }
  }
  return L;
}

// Solves (L L^T) x = b in place of out.
void chol_solve(std::size_t dim, const std::vector<double>& L, const double* b,
                double* out) {
  // forward: L y = b
  for (std::size_t i = 0; i < dim; ++i) {
    double s = b[i];
    for (std::size_t j = 0; j < i; ++j) s -= L[i * dim + j] * out[j];
    out[i] = s / L[i * dim + i];
  }
  // backward: L^T x = y
  for (std::size_t ii = dim; ii-- > 0;) {
    double s = out[ii];
    for (std::size_t j = ii + 1; j < dim; ++j) s -= L[j * dim + ii] * out[j];
    out[ii] = s / L[ii * dim + ii];
  }
}

}  // namespace

void GaussianMixture::validate() const {
  if (dim == 0) throw ConfigError("mixture: dim must be positive");
  if (weights.empty()) throw ConfigError("mixture: no components");
  double wsum = 0.0;
  for (double w : weights) {
    if (!(w > 0.0)) throw ConfigError("mixture: weights must be positive");
    wsum += w;
  }
  if (std::fabs(wsum - 1.0) > 1e-12)
    throw ConfigError("mixture: weights sum to " + std::to_string(wsum));
  if (means.size() != weights.size() || covs.size() != weights.size())
    throw ConfigError("mixture: component count mismatch");
  for (std::size_t i = 0; i < weights.size(); ++i) {
    if (means[i].size() != dim || covs[i].size() != dim * dim)
      throw ConfigError("mixture: component " + std::to_string(i) +
                        " has wrong dimensions");
    for (std::size_t r = 0; r < dim; ++r)
      for (std::size_t c = 0; c < r; ++c)
        if (std::fabs(covs[i][r * dim + c] - covs[i][c * dim + r]) > 1e-12)
          throw ConfigError("mixture: covariance not symmetric");
    cholesky(dim, covs[i]);  // SPD check
  }
}

bool GaussianMixture::is_single_isotropic(double* var_out) const {
  if (components() != 1) return false;
  const auto& c = covs[0];
  const double v = c[0];
  for (std::size_t r = 0; r < dim; ++r)
    for (std::size_t cc = 0; cc < dim; ++cc) {
      const double expect = r == cc ? v : 0.0;
      if (std::fabs(c[r * dim + cc] - expect) > 1e-12 * std::max(1.0, v))
        return false;
    }
  if (var_out) *var_out = v;
  return true;
}

GaussianMixture GaussianMixture::single_isotropic(std::size_t dim, double var,
                                                  std::vector<double> mean) {
  if (mean.empty()) mean.assign(dim, 0.0);
  GaussianMixture gm;
  gm.dim = dim;
  gm.weights = {1.0};
  gm.means = {std::move(mean)};
  std::vector<double> cov(dim * dim, 0.0);
  for (std::size_t i = 0; i < dim; ++i) cov[i * dim + i] = var;
  gm.covs = {std::move(cov)};
  return gm;
}

std::vector<double> GaussianMixture::sample(Rng& rng, int* component) const {
  const double u = rng.uniform();
  std::size_t c = 0;
  double acc = 0.0;
  for (; c + 1 < weights.size(); ++c) {
    acc += weights[c];
    if (u < acc) break;
  }
  if (component) *component = static_cast<int>(c);
  const auto L = cholesky(dim, covs[c]);
  std::vector<double> eps(dim);
  for (auto& e : eps) e = rng.normal();
  std::vector<double> x(means[c]);
  for (std::size_t i = 0; i < dim; ++i)
    for (std::size_t j = 0; j <= i; ++j) x[i] += L[i * dim + j] * eps[j];
  return x;
}

DiffusedMixture::DiffusedMixture(const GaussianMixture& gm, double t,
                                 const SdeConfig& cfg)
    : dim_(gm.dim), k_(gm.components()), means_(gm.means) {
  gm.validate();
  const double v = sde::variance(cfg, t);  // 0 at t = 0 is fine
  log_w_.resize(k_);
  chol_.resize(k_);
  log_norm_.resize(k_);
  for (std::size_t c = 0; c < k_; ++c) {
    log_w_[c] = std::log(gm.weights[c]);
    std::vector<double> eff = gm.covs[c];
    for (std::size_t i = 0; i < dim_; ++i) eff[i * dim_ + i] += v;
    chol_[c] = cholesky(dim_, eff);
    double log_det_half = 0.0;
    for (std::size_t i = 0; i < dim_; ++i)
      log_det_half += std::log(chol_[c][i * dim_ + i]);
    log_norm_[c] = -log_det_half - 0.5 * static_cast<double>(dim_) * kLog2Pi;
  }
}

double DiffusedMixture::log_density(const double* x) const {
  // scratch reused across calls: batch evaluation must not hit the allocator
  thread_local std::vector<double> diff, u, li;
  diff.resize(dim_);
  u.resize(dim_);
  li.resize(k_);
  double lse_max = -std::numeric_limits<double>::infinity();
  for (std::size_t c = 0; c < k_; ++c) {
    for (std::size_t i = 0; i < dim_; ++i) diff[i] = means_[c][i] - x[i];
    chol_solve(dim_, chol_[c], diff.data(), u.data());
    double quad = 0.0;
    for (std::size_t i = 0; i < dim_; ++i) quad += diff[i] * u[i];
    li[c] = log_w_[c] + log_norm_[c] - 0.5 * quad;
    lse_max = std::max(lse_max, li[c]);
  }
  double s = 0.0;
  for (std::size_t c = 0; c < k_; ++c) s += std::exp(li[c] - lse_max);
  return lse_max + std::log(s);
}

void DiffusedMixture::score(const double* x, double* out) const {
  // score = sum_c r_c(x) * (Sigma_c + vI)^{-1} (mu_c - x), with the
  // responsibilities r_c computed in log space.
  thread_local std::vector<double> diff, u, li;
  diff.resize(dim_);
  u.resize(k_ * dim_);
  li.resize(k_);
  double lse_max = -std::numeric_limits<double>::infinity();
  for (std::size_t c = 0; c < k_; ++c) {
    for (std::size_t i = 0; i < dim_; ++i) diff[i] = means_[c][i] - x[i];
    chol_solve(dim_, chol_[c], diff.data(), u.data() + c * dim_);
    double quad = 0.0;
    for (std::size_t i = 0; i < dim_; ++i) quad += diff[i] * u[c * dim_ + i];
    li[c] = log_w_[c] + log_norm_[c] - 0.5 * quad;
    lse_max = std::max(lse_max, li[c]);
  }
  double norm = 0.0;
  for (std::size_t c = 0; c < k_; ++c) {
    li[c] = std::exp(li[c] - lse_max);
    norm += li[c];
  }
  std::fill(out, out + dim_, 0.0);
  for (std::size_t c = 0; c < k_; ++c) {
    const double r = li[c] / norm;
    for (std::size_t i = 0; i < dim_; ++i) out[i] += r * u[c * dim_ + i];
  }
}

Tensor mixture_score(const GaussianMixture& gm, const Tensor& x, double t,
                     const SdeConfig& cfg) {
  const DiffusedMixture dm(gm, t, cfg);
  if (x.rank() == 1) {
    if (x.shape()[0] != gm.dim)
      throw DimensionError("mixture_score: dimension mismatch");
    std::vector<double> out(gm.dim);
    dm.score(x.data(), out.data());
    return Tensor(x.shape(), std::move(out));
  }
  if (x.rank() != 2 || x.cols() != gm.dim)
    throw DimensionError("mixture_score: expected [n," +
                         std::to_string(gm.dim) + "]");
  const std::size_t n = x.rows(), d = gm.dim;
  std::vector<double> out(n * d);
  const double* xd = x.data();
  double* od = out.data();
#pragma omp parallel for schedule(static)
  for (std::ptrdiff_t i = 0; i < static_cast<std::ptrdiff_t>(n); ++i)
    dm.score(xd + i * d, od + i * d);
  return Tensor(x.shape(), std::move(out));
}

Tensor mixture_score_rows(const GaussianMixture& gm, const Tensor& x,
                          const std::vector<double>& t, const SdeConfig& cfg) {
  if (x.rank() != 2 || x.cols() != gm.dim)
    throw DimensionError("mixture_score_rows: expected [n," +
                         std::to_string(gm.dim) + "]");
  if (t.size() != x.rows())
    throw DimensionError("mixture_score_rows: t length mismatch");
  const std::size_t n = x.rows(), d = gm.dim;
  std::vector<double> out(n * d);
  const double* xd = x.data();
  double* od = out.data();
#pragma omp parallel for schedule(dynamic, 16)
  for (std::ptrdiff_t i = 0; i < static_cast<std::ptrdiff_t>(n); ++i) {
    const DiffusedMixture dm(gm, t[i], cfg);
    dm.score(xd + i * d, od + i * d);
  }
  return Tensor(x.shape(), std::move(out));
}

double log_density(const GaussianMixture& gm, const std::vector<double>& x,
                   double t, const SdeConfig& cfg) {
  if (x.size() != gm.dim)
    throw DimensionError("log_density: dimension mismatch");
  const DiffusedMixture dm(gm, t, cfg);
  return dm.log_density(x.data());
}

double dsm_constant(const GaussianMixture& gm, double t,
                    const SdeConfig& cfg) {
  double var = 0.0;
  if (!gm.is_single_isotropic(&var))
    throw UnsupportedError(
        "dsm_constant: closed form requires a single isotropic component; "
        "use mc_dsm_constant");
  const double v = sde::variance(cfg, t);
  if (!(v > 0.0))
    throw DomainError("dsm_constant: v(t) <= 0 at t=" + std::to_string(t));
  return static_cast<double>(gm.dim) * var / (v * (var + v));
}

McEstimate mc_dsm_constant(const GaussianMixture& gm, double t,
                           const SdeConfig& cfg, std::int64_t n_draws,
                           Rng& rng) {
  gm.validate();
  if (n_draws < 1) throw DomainError("mc_dsm_constant: n_draws must be >= 1");
  const double v = sde::variance(cfg, t);
  if (!(v > 0.0))
    throw DomainError("mc_dsm_constant: v(t) <= 0 at t=" + std::to_string(t));
  const double sd = std::sqrt(v);
  const DiffusedMixture dm(gm, t, cfg);
  const std::size_t d = gm.dim;
  std::vector<double> vals(static_cast<std::size_t>(n_draws));
#pragma omp parallel for schedule(static)
  for (std::ptrdiff_t j = 0; j < static_cast<std::ptrdiff_t>(n_draws); ++j) {
    Rng stream = rng.fork(static_cast<std::uint64_t>(j));
    std::vector<double> x0 = gm.sample(stream);
    std::vector<double> xt(d), diff(d);
    for (std::size_t i = 0; i < d; ++i) {
      const double eps = stream.normal();
      xt[i] = x0[i] + sd * eps;
      diff[i] = -eps / sd;  // kernel score
    }
    std::vector<double> ms(d);
    dm.score(xt.data(), ms.data());
    double acc = 0.0;
    for (std::size_t i = 0; i < d; ++i) {
      const double e = diff[i] - ms[i];
      acc += e * e;
    }
    vals[static_cast<std::size_t>(j)] = acc;
  }
  double sum = 0.0;
  for (double x : vals) sum += x;
  const double mean = sum / static_cast<double>(n_draws);
  McEstimate out;
  out.estimate = mean;
  out.n_draws = n_draws;
  if (n_draws < 2) {
    out.std_err = std::numeric_limits<double>::quiet_NaN();
  } else {
    double ss = 0.0;
    for (double x : vals) ss += (x - mean) * (x - mean);
    out.std_err = std::sqrt(ss / static_cast<double>(n_draws - 1) /
                            static_cast<double>(n_draws));
  }
  return out;
}

}  // namespace scorelab::analytic
