#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <cmath>
#include <limits>

#include "doctest.h"
#include "scorelab/datasets.hpp"
#include "scorelab/mixture.hpp"
#include "scorelab/sde.hpp"
#include "testutil.hpp"

using namespace scorelab;
using numcore::Rng;
using numcore::Tensor;
using testutil::rel_err;

namespace {

sde::SdeConfig default_cfg() { return {}; }

// time at which v(t) equals the requested value, from the geometric schedule
double t_for_variance(const sde::SdeConfig& cfg, double v) {
  const double s2 = v + cfg.sigma_min * cfg.sigma_min;
  return cfg.horizon * 0.5 * std::log(s2 / (cfg.sigma_min * cfg.sigma_min)) /
         std::log(cfg.sigma_max / cfg.sigma_min);
}

}  // namespace

TEST_CASE("sigma: endpoints and geometric midpoint") {
  const auto cfg = default_cfg();
  CHECK(sde::sigma(cfg, 0.0) == doctest::Approx(0.01).epsilon(1e-12));
  CHECK(sde::sigma(cfg, 1.0) == doctest::Approx(50.0).epsilon(1e-12));
  CHECK(sde::sigma(cfg, 0.5) ==
        doctest::Approx(std::sqrt(0.01 * 50.0)).epsilon(1e-12));
}

TEST_CASE("sigma: domain errors outside [0, T]") {
  const auto cfg = default_cfg();
  CHECK_THROWS_AS(sde::sigma(cfg, -0.01), DomainError);
  CHECK_THROWS_AS(sde::sigma(cfg, 1.01), DomainError);
}

TEST_CASE("config: t_floor = 0 rejected") {
  auto cfg = default_cfg();
  cfg.t_floor = 0.0;
  CHECK_THROWS_AS(cfg.validate(), ConfigError);
}

TEST_CASE("diffusion_sq: value at t=0 and structural ratio") {
  const auto cfg = default_cfg();
  const double expected = 2.0 * std::log(5000.0) * 1e-4;
  CHECK(sde::diffusion_sq(cfg, 0.0) ==
        doctest::Approx(expected).epsilon(1e-12));
  CHECK(expected == doctest::Approx(1.70344e-3).epsilon(1e-5));
  // g^2(t) / sigma^2(t) is constant for the geometric schedule
  const double r0 = sde::diffusion_sq(cfg, 0.1) / sde::sigma_sq(cfg, 0.1);
  const double r1 = sde::diffusion_sq(cfg, 0.9) / sde::sigma_sq(cfg, 0.9);
  CHECK(r0 == doctest::Approx(r1).epsilon(1e-12));
}

TEST_CASE("diffusion_sq: matches finite difference of sigma^2") {
  const auto cfg = default_cfg();
  const double h = 1e-6, t = 0.3;
  const double fd =
      (sde::sigma_sq(cfg, t + h) - sde::sigma_sq(cfg, t - h)) / (2.0 * h);
  CHECK(rel_err(fd, sde::diffusion_sq(cfg, t)) < 1e-6);
}

TEST_CASE("variance: strictly increasing, positive above the floor") {
  const auto cfg = default_cfg();
  double prev = sde::variance(cfg, cfg.t_floor);
  CHECK(prev > 0.0);
  for (double t = 0.1; t <= 1.0; t += 0.1) {
    const double v = sde::variance(cfg, t);
    CHECK(v > prev);
    prev = v;
  }
}

TEST_CASE("perturb: Monte-Carlo mean and variance at the floor") {
  const auto cfg = default_cfg();
  const double t = cfg.t_floor;
  const double v = sde::variance(cfg, t);
  Rng rng(99);
  const std::size_t n = 100000;
  const Tensor x0({1, 1}, {0.7});
  double sum = 0.0, sq = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    const double d = sde::perturb(cfg, x0, t, rng).at(0) - 0.7;
    sum += d;
    sq += d * d;
  }
  const double mean = sum / n;
  const double var = sq / n - mean * mean;
  CHECK(std::fabs(var - v) < 0.05 * v);  // within 5%
  const double se = std::sqrt(v / n);
  CHECK(std::fabs(mean) < 3.0 * se);
}

TEST_CASE("perturb: deterministic under a fixed seed, guards the floor") {
  const auto cfg = default_cfg();
  const Tensor x0({2, 2}, {1.0, 2.0, 3.0, 4.0});
  Rng a(5), b(5);
  const Tensor xa = sde::perturb(cfg, x0, 0.4, a);
  const Tensor xb = sde::perturb(cfg, x0, 0.4, b);
  CHECK(xa.values() == xb.values());
  Rng c(5);
  CHECK_THROWS_AS(sde::perturb(cfg, x0, cfg.t_floor / 2, c), DomainError);
}

TEST_CASE("kernel_score: zero at the kernel mean, hand value at v=2") {
  const auto cfg = default_cfg();
  const Tensor x0({1, 1}, {0.0});
  CHECK(sde::kernel_score(cfg, x0, x0, 0.5).at(0) == 0.0);

  const double t = t_for_variance(cfg, 2.0);
  REQUIRE(sde::variance(cfg, t) == doctest::Approx(2.0).epsilon(1e-12));
  const Tensor x_t({1, 1}, {1.0});
  CHECK(sde::kernel_score(cfg, x_t, x0, t).at(0) ==
        doctest::Approx(-0.5).epsilon(1e-12));
}

TEST_CASE("kernel_score: matches finite differences of the Gaussian log pdf") {
  const auto cfg = default_cfg();
  const double t = 0.6;
  const double v = sde::variance(cfg, t);
  Rng rng(3);
  const std::size_t d = 3;
  Tensor x0 = Tensor::randn({1, d}, rng);
  Tensor x_t = Tensor::randn({1, d}, rng);
  const Tensor score = sde::kernel_score(cfg, x_t, x0, t);

  const auto logpdf = [&] {
    double acc = 0.0;
    for (std::size_t i = 0; i < d; ++i) {
      const double diff = x_t.at(i) - x0.at(i);
      acc += diff * diff;
    }
    return -acc / (2.0 * v) -
           0.5 * d * std::log(2.0 * 3.14159265358979323846 * v);
  };
  for (std::size_t i = 0; i < d; ++i) {
    const double fd = testutil::central_diff(logpdf, x_t.data() + i);
    CHECK(rel_err(fd, score.at(i)) < 1e-5);
  }
}

TEST_CASE("kernel_score: expectation of the target is zero over draws") {
  const auto cfg = default_cfg();
  const double t = 0.5;
  Rng rng(17);
  const Tensor x0({1, 2}, {1.0, -1.0});
  double sum0 = 0.0, sum1 = 0.0;
  const std::size_t n = 50000;
  for (std::size_t i = 0; i < n; ++i) {
    const Tensor x_t = sde::perturb(cfg, x0, t, rng);
    const Tensor s = sde::kernel_score(cfg, x_t, x0, t);
    sum0 += s.at(0);
    sum1 += s.at(1);
  }
  // each target coordinate is -eps/sqrt(v): sd of the mean is 1/sqrt(v n)
  const double se = 1.0 / std::sqrt(sde::variance(cfg, t) * n);
  CHECK(std::fabs(sum0 / n) < 3.0 * se);
  CHECK(std::fabs(sum1 / n) < 3.0 * se);
}

TEST_CASE("reverse_sample: standard normal oracle moments") {
  const auto cfg = default_cfg();
  const auto prior = analytic::GaussianMixture::single_isotropic(2, 1.0);
  const auto score_fn = [&](const Tensor& x, double t) {
    return analytic::mixture_score(prior, x, t, cfg);
  };
  Rng rng(123);
  const auto res = sde::reverse_sample(cfg, score_fn, 2, 1000, 10000, rng);
  CHECK(res.n_failed == 0);
  const double* s = res.samples.data();
  for (std::size_t j = 0; j < 2; ++j) {
    double mean = 0.0, var = 0.0;
    for (std::size_t i = 0; i < 10000; ++i) mean += s[i * 2 + j];
    mean /= 10000.0;
    for (std::size_t i = 0; i < 10000; ++i)
      var += (s[i * 2 + j] - mean) * (s[i * 2 + j] - mean);
    var /= 9999.0;
    CHECK(std::fabs(mean) < 0.05);
    CHECK(std::fabs(var - 1.0) < 0.1);
  }
}

TEST_CASE("reverse_integrate: one step equals the explicit update") {
  const auto cfg = default_cfg();
  const double t_start = 0.8, t_end = cfg.t_floor;
  const Tensor init({1, 2}, {0.3, -0.4});
  const double c0 = 1.3, c1 = -0.7;
  const auto score_fn = [&](const Tensor& x, double /*t*/) {
    std::vector<double> out(x.size());
    for (std::size_t i = 0; i < x.size(); i += 2) {
      out[i] = c0 * x.at(i);
      out[i + 1] = c1 * x.at(i + 1);
    }
    return Tensor(x.shape(), std::move(out));
  };
  Rng rng(31);
  const auto res = sde::reverse_integrate(cfg, score_fn, init, t_start, 1, rng);

  // replicate: per-sample stream fork(0); one normal per dimension
  Rng stream = Rng(31).fork(0);
  const double dt = t_start - t_end;
  const double g2 = sde::diffusion_sq(cfg, t_start);
  const double gsdt = std::sqrt(g2) * std::sqrt(dt);
  const double e0 = gsdt * stream.normal();
  const double e1 = gsdt * stream.normal();
  CHECK(res.samples.at(0) ==
        doctest::Approx(0.3 + g2 * (c0 * 0.3) * dt + e0).epsilon(1e-14));
  CHECK(res.samples.at(1) ==
        doctest::Approx(-0.4 + g2 * (c1 * -0.4) * dt + e1).epsilon(1e-14));
}

TEST_CASE("reverse_sample: bimodal mixture occupancy") {
  const auto cfg = default_cfg();
  const auto gm = analytic::make_ring_mixture(2, 2.0, 0.3);
  const auto score_fn = [&](const Tensor& x, double t) {
    return analytic::mixture_score(gm, x, t, cfg);
  };
  Rng rng(77);
  const std::size_t n = 4000;
  const auto res = sde::reverse_sample(cfg, score_fn, 2, 500, n, rng);
  std::size_t right = 0;
  for (std::size_t i = 0; i < n; ++i)
    right += res.samples.at(i * 2) > 0.0 ? 1 : 0;
  const double frac = static_cast<double>(right) / n;
  CHECK(frac > 0.35);
  CHECK(frac < 0.65);
}

TEST_CASE("reverse_sample: halving the step count keeps moments put") {
  const auto cfg = default_cfg();
  const auto prior = analytic::GaussianMixture::single_isotropic(1, 1.0);
  const auto score_fn = [&](const Tensor& x, double t) {
    return analytic::mixture_score(prior, x, t, cfg);
  };
  const std::size_t n = 20000;
  const auto stats = [&](int steps) {
    Rng rng(2024);  // common random numbers across the two step counts
    const auto res = sde::reverse_sample(cfg, score_fn, 1, steps, n, rng);
    double mean = 0.0, var = 0.0;
    for (std::size_t i = 0; i < n; ++i) mean += res.samples.at(i);
    mean /= static_cast<double>(n);
    for (std::size_t i = 0; i < n; ++i)
      var += (res.samples.at(i) - mean) * (res.samples.at(i) - mean);
    var /= static_cast<double>(n - 1);
    return std::pair<double, double>{mean, var};
  };
  const auto [m500, v500] = stats(500);
  const auto [m1000, v1000] = stats(1000);
  const double se_mean = std::sqrt(2.0 / n);
  const double se_var = std::sqrt(2.0 * 2.0 / n);
  CHECK(std::fabs(m500 - m1000) < 3.0 * se_mean);
  CHECK(std::fabs(v500 - v1000) < 3.0 * se_var);
}

TEST_CASE("reverse_integrate: non-finite scores throw with the step index") {
  const auto cfg = default_cfg();
  const auto score_fn = [&](const Tensor& x, double /*t*/) {
    std::vector<double> out(x.size(),
                            std::numeric_limits<double>::quiet_NaN());
    return Tensor(x.shape(), std::move(out));
  };
  const Tensor init({2, 1}, {0.0, 1.0});
  Rng rng(1);
  CHECK_THROWS_AS(sde::reverse_integrate(cfg, score_fn, init, 0.9, 10, rng),
                  NumericalError);
  Rng rng2(1);
  const auto res = sde::reverse_integrate(
      cfg, score_fn, init, 0.9, 10, rng2, sde::NonFinitePolicy::kFlagRow);
  CHECK(res.n_failed == 2);
  CHECK(res.ok[0] == 0);
}
