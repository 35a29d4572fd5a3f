#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <cmath>

#include "doctest.h"
#include "scorelab/datasets.hpp"
#include "scorelab/mixture.hpp"
#include "testutil.hpp"

using namespace scorelab;
using analytic::GaussianMixture;
using numcore::Rng;
using numcore::Tensor;
using testutil::rel_err;

namespace {

const sde::SdeConfig kCfg{};

double t_for_variance(double v) {
  const double s2 = v + kCfg.sigma_min * kCfg.sigma_min;
  return 0.5 * std::log(s2 / (kCfg.sigma_min * kCfg.sigma_min)) /
         std::log(kCfg.sigma_max / kCfg.sigma_min);
}

GaussianMixture random_mixture(std::size_t k, std::size_t d, Rng& rng) {
  GaussianMixture gm;
  gm.dim = d;
  double wsum = 0.0;
  std::vector<double> w(k);
  for (auto& x : w) {
    x = 0.2 + rng.uniform();
    wsum += x;
  }
  for (std::size_t c = 0; c < k; ++c) {
    gm.weights.push_back(w[c] / wsum);
    std::vector<double> mean(d);
    for (auto& m : mean) m = 2.0 * rng.normal();
    gm.means.push_back(std::move(mean));
    // random SPD: A A^T + 0.3 I
    std::vector<double> a(d * d);
    for (auto& v : a) v = 0.5 * rng.normal();
    std::vector<double> cov(d * d, 0.0);
    for (std::size_t i = 0; i < d; ++i)
      for (std::size_t j = 0; j < d; ++j) {
        for (std::size_t p = 0; p < d; ++p)
          cov[i * d + j] += a[i * d + p] * a[j * d + p];
        if (i == j) cov[i * d + j] += 0.3;
      }
    gm.covs.push_back(std::move(cov));
  }
  // exact unit sum
  double acc = 0.0;
  for (std::size_t c = 0; c + 1 < k; ++c) acc += gm.weights[c];
  gm.weights.back() = 1.0 - acc;
  return gm;
}

}  // namespace

TEST_CASE("mixture_score: standard normal gives -x at t=0") {
  const auto gm = GaussianMixture::single_isotropic(2, 1.0);
  const Tensor x({2}, {0.7, -1.3});
  const Tensor s = analytic::mixture_score(gm, x, 0.0, kCfg);
  CHECK(s.at(0) == doctest::Approx(-0.7).epsilon(1e-12));
  CHECK(s.at(1) == doctest::Approx(1.3).epsilon(1e-12));
}

TEST_CASE("mixture_score: symmetric two-mode mixture vanishes at the origin") {
  const auto gm = analytic::make_ring_mixture(2, 3.0, 0.5);
  const Tensor x({2}, {0.0, 0.0});
  const Tensor s = analytic::mixture_score(gm, x, 0.3, kCfg);
  CHECK(std::fabs(s.at(0)) < 1e-12);
  CHECK(std::fabs(s.at(1)) < 1e-12);
}

TEST_CASE("mixture_score: matches finite differences of the log density") {
  Rng rng(41);
  const auto gm = random_mixture(3, 2, rng);
  for (double t : {0.0, 0.2, 0.6}) {
    std::vector<double> x{rng.normal() * 2.0, rng.normal() * 2.0};
    const Tensor xt({2}, std::vector<double>(x));
    const Tensor s = analytic::mixture_score(gm, xt, t, kCfg);
    const auto logpdf = [&] { return analytic::log_density(gm, x, t, kCfg); };
    for (std::size_t i = 0; i < 2; ++i) {
      const double fd = testutil::central_diff(logpdf, x.data() + i);
      CHECK(rel_err(fd, s.at(i)) < 1e-5);
    }
  }
}

TEST_CASE("mixture_score: batch rows agree with single-point evaluation") {
  Rng rng(43);
  const auto gm = random_mixture(3, 2, rng);
  const Tensor batch = Tensor::randn({64, 2}, rng, 3.0);
  const Tensor s = analytic::mixture_score(gm, batch, 0.4, kCfg);
  for (std::size_t i = 0; i < 64; ++i) {
    const Tensor row({2}, {batch.at(i * 2), batch.at(i * 2 + 1)});
    const Tensor si = analytic::mixture_score(gm, row, 0.4, kCfg);
    CHECK(s.at(i * 2) == si.at(0));
    CHECK(s.at(i * 2 + 1) == si.at(1));
  }
}

TEST_CASE("mixture_score: prior dominance at the horizon") {
  // bounded mixture (means well inside sigma_max) against the wide prior
  const auto gm = analytic::make_ring_mixture(3, 0.4, 0.3);
  const double s_T2 = sde::sigma_sq(kCfg, kCfg.horizon);
  Rng rng(47);
  int checked = 0;
  while (checked < 20) {
    const double x0 = kCfg.sigma_max * rng.normal();
    const double x1 = kCfg.sigma_max * rng.normal();
    if (std::sqrt(x0 * x0 + x1 * x1) < 55.0) continue;
    const Tensor x({2}, {x0, x1});
    const Tensor s = analytic::mixture_score(gm, x, kCfg.horizon, kCfg);
    const double ref0 = -x0 / s_T2, ref1 = -x1 / s_T2;
    const double err = std::hypot(s.at(0) - ref0, s.at(1) - ref1) /
                       std::hypot(ref0, ref1);
    CHECK(err < 1e-2);
    ++checked;
  }
}

TEST_CASE("mixture_score: non-SPD covariance is a numerical error") {
  GaussianMixture gm;
  gm.dim = 2;
  gm.weights = {1.0};
  gm.means = {{0.0, 0.0}};
  gm.covs = {{-1.0, 0.0, 0.0, -1.0}};
  const Tensor x({2}, {0.1, 0.2});
  CHECK_THROWS_AS(analytic::mixture_score(gm, x, 0.0, kCfg), NumericalError);
}

TEST_CASE("mixture: weights must sum to one") {
  GaussianMixture gm;
  gm.dim = 1;
  gm.weights = {0.6, 0.6};
  gm.means = {{0.0}, {1.0}};
  gm.covs = {{1.0}, {1.0}};
  CHECK_THROWS_AS(gm.validate(), ConfigError);
}

TEST_CASE("dsm_constant: hand value 0.5 at unit variance and v=1") {
  const auto gm = GaussianMixture::single_isotropic(1, 1.0);
  const double t = t_for_variance(1.0);
  CHECK(analytic::dsm_constant(gm, t, kCfg) ==
        doctest::Approx(0.5).epsilon(1e-10));
}

TEST_CASE("dsm_constant: vanishes as v grows, doubles with dimension") {
  const auto gm1 = GaussianMixture::single_isotropic(1, 1.0);
  CHECK(analytic::dsm_constant(gm1, kCfg.horizon, kCfg) < 1e-3);
  const auto gm2 = GaussianMixture::single_isotropic(2, 1.0);
  const double t = t_for_variance(3.0);
  CHECK(analytic::dsm_constant(gm2, t, kCfg) ==
        doctest::Approx(2.0 * analytic::dsm_constant(gm1, t, kCfg))
            .epsilon(1e-12));
}

TEST_CASE("dsm_constant: closed form confirmed by a 1e6-draw estimate") {
  const auto gm = GaussianMixture::single_isotropic(1, 1.0);
  const double t = t_for_variance(1.0);
  Rng rng(53);
  const auto mc = analytic::mc_dsm_constant(gm, t, kCfg, 1000000, rng);
  CHECK(std::fabs(mc.estimate - 0.5) < 3.0 * mc.std_err);
  CHECK(mc.std_err < 0.01);
}

TEST_CASE("dsm_constant: multi-component mixtures are unsupported") {
  const auto gm = analytic::make_ring_mixture(2, 2.0, 0.5);
  CHECK_THROWS_AS(analytic::dsm_constant(gm, 0.5, kCfg), UnsupportedError);
}

TEST_CASE("mc_dsm_constant: degenerate n=1 is finite with flagged std_err") {
  const auto gm = GaussianMixture::single_isotropic(2, 1.0);
  Rng rng(57);
  const auto mc = analytic::mc_dsm_constant(gm, 0.5, kCfg, 1, rng);
  CHECK(std::isfinite(mc.estimate));
  CHECK(mc.estimate >= 0.0);
  CHECK(std::isnan(mc.std_err));
}

TEST_CASE("mc_dsm_constant: nonnegative and 1/sqrt(n) error decay") {
  const auto gm = GaussianMixture::single_isotropic(2, 1.3);
  const double t = t_for_variance(1.0);
  const double c_exact = analytic::dsm_constant(gm, t, kCfg);
  Rng rng(61);
  const auto small = analytic::mc_dsm_constant(gm, t, kCfg, 10000, rng);
  Rng rng2(611);
  const auto big = analytic::mc_dsm_constant(gm, t, kCfg, 100000, rng2);
  CHECK(small.estimate >= 0.0);
  CHECK(std::fabs(small.estimate - c_exact) < 4.0 * small.std_err);
  CHECK(std::fabs(big.estimate - c_exact) < 4.0 * big.std_err);
  const double ratio = small.std_err / big.std_err;
  CHECK(ratio > std::sqrt(10.0) / 2.0);
  CHECK(ratio < std::sqrt(10.0) * 2.0);
}

TEST_CASE("mc_dsm_constant: decreasing in t for a single Gaussian") {
  const auto gm = GaussianMixture::single_isotropic(2, 1.0);
  double prev = std::numeric_limits<double>::infinity();
  for (double t : {0.3, 0.5, 0.7, 0.9}) {
    const double c = analytic::dsm_constant(gm, t, kCfg);
    CHECK(c < prev);
    prev = c;
  }
}

TEST_CASE("make_dataset: mixture-3 component counts within binomial 3 sigma") {
  Rng rng(71);
  analytic::DatasetParams params;
  params.n = 3000;
  const auto toy = analytic::make_dataset("mixture-3", params, rng);
  REQUIRE(toy.mixture.has_value());
  CHECK(toy.data.size() == 3000);
  CHECK(toy.data.n_classes() == 3);
  std::vector<int> counts(3, 0);
  for (int l : toy.data.labels) ++counts[l];
  const double expect = 1000.0;
  const double sd = std::sqrt(3000.0 * (1.0 / 3.0) * (2.0 / 3.0));
  for (int c = 0; c < 3; ++c)
    CHECK(std::fabs(counts[c] - expect) < 3.0 * sd);
}

TEST_CASE("make_dataset: two-moons points stay inside the noise band") {
  Rng rng(73);
  analytic::DatasetParams params;
  params.n = 2000;
  params.radius = 4.0;
  params.noise = 0.35;
  const auto toy = analytic::make_dataset("two-moons", params, rng);
  CHECK_FALSE(toy.mixture.has_value());
  const double s = params.radius, cx = 0.5 * s, cy = 0.25 * s;
  for (std::size_t i = 0; i < toy.data.size(); ++i) {
    const double* p = toy.data.row(i);
    double qx, qy;
    if (toy.data.labels[i] == 0) {
      qx = p[0] + cx;
      qy = p[1] + cy;
    } else {
      qx = -p[0] + cx;
      qy = -p[1] + cy;
    }
    const double r = std::hypot(qx, qy);
    CHECK(r >= s - params.noise - 1e-12);
    CHECK(r <= s + params.noise + 1e-12);
    CHECK(qy >= -params.noise - 1e-12);
  }
}

TEST_CASE("make_dataset: rings stay inside their annuli") {
  Rng rng(79);
  analytic::DatasetParams params;
  params.n = 1000;
  params.radius = 4.0;
  params.noise = 0.3;
  const auto toy = analytic::make_dataset("rings", params, rng);
  for (std::size_t i = 0; i < toy.data.size(); ++i) {
    const double* p = toy.data.row(i);
    const double r = std::hypot(p[0], p[1]);
    const double target = toy.data.labels[i] == 0 ? 2.0 : 4.0;
    CHECK(std::fabs(r - target) <= params.noise + 1e-12);
  }
}

TEST_CASE("make_dataset: n=1 and unknown names") {
  Rng rng(83);
  analytic::DatasetParams params;
  params.n = 1;
  const auto toy = analytic::make_dataset("mixture-2", params, rng);
  CHECK(toy.data.size() == 1);
  CHECK(toy.data.points.size() == 2);
  CHECK_THROWS_AS(analytic::make_dataset("spirals", params, rng), ConfigError);
}

TEST_CASE("split_dataset: sizes and label preservation") {
  Rng rng(89);
  analytic::DatasetParams params;
  params.n = 1000;
  const auto toy = analytic::make_dataset("mixture-2", params, rng);
  Rng split_rng(7);
  const auto split = analytic::split_dataset(toy.data, 0.2, split_rng);
  CHECK(split.holdout.size() == 200);
  CHECK(split.train.size() == 800);
  std::vector<int> counts(2, 0);
  for (int l : split.train.labels) ++counts[l];
  for (int l : split.holdout.labels) ++counts[l];
  std::vector<int> full(2, 0);
  for (int l : toy.data.labels) ++full[l];
  CHECK(counts == full);
}
