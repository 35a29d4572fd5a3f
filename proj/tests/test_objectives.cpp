#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <cmath>

#include "doctest.h"
#include "scorelab/datasets.hpp"
#include "scorelab/objectives.hpp"
#include "testutil.hpp"

using namespace scorelab;
using analytic::GaussianMixture;
using numcore::Rng;
using numcore::Tensor;
using objectives::TimeWeighting;

namespace {

const sde::SdeConfig kCfg{};

double t_for_variance(double v) {
  const double s2 = v + kCfg.sigma_min * kCfg.sigma_min;
  return 0.5 * std::log(s2 / (kCfg.sigma_min * kCfg.sigma_min)) /
         std::log(kCfg.sigma_max / kCfg.sigma_min);
}

models::ScoreModel random_model(std::size_t d, int d_z, std::uint64_t seed) {
  Rng rng(seed);
  models::ScoreModel m(d, {12, 12}, d_z, kCfg, 8, rng);
  for (auto& [name, p] : m.named_parameters())
    for (std::size_t i = 0; i < p.size(); ++i)
      p.data()[i] += 0.2 * rng.normal();
  return m;
}

Tensor sample_batch(const GaussianMixture& gm, std::size_t n, Rng& rng) {
  std::vector<double> rows;
  rows.reserve(n * gm.dim);
  for (std::size_t i = 0; i < n; ++i) {
    const auto x = gm.sample(rng);
    rows.insert(rows.end(), x.begin(), x.end());
  }
  return Tensor({n, gm.dim}, std::move(rows));
}

}  // namespace

TEST_CASE("sample_t: uniform-sigma puts the mean of sigma at the midpoint") {
  Rng rng(3);
  const auto t = objectives::sample_t(TimeWeighting::uniform_sigma(), 100000,
                                      kCfg, rng);
  double mean_sigma = 0.0;
  for (double ti : t) mean_sigma += sde::sigma(kCfg, ti);
  mean_sigma /= static_cast<double>(t.size());
  CHECK(std::fabs(mean_sigma - 25.005) < 0.01 * 25.005);
}

TEST_CASE("sample_t: fixed-t is a delta, unset fixed_t is a config error") {
  Rng rng(5);
  const auto t = objectives::sample_t(TimeWeighting::fixed(0.7), 100, kCfg,
                                      rng);
  for (double ti : t) CHECK(ti == 0.7);
  TimeWeighting bad;
  bad.mode = TimeWeighting::Mode::kFixedT;
  CHECK_THROWS_AS(objectives::sample_t(bad, 10, kCfg, rng), ConfigError);
}

TEST_CASE("sample_t: uniform-t mean sits at the interval midpoint") {
  Rng rng(7);
  const auto t = objectives::sample_t(TimeWeighting::uniform_t(), 100000,
                                      kCfg, rng);
  double mean = 0.0;
  for (double ti : t) {
    CHECK(ti >= kCfg.t_floor);
    CHECK(ti <= kCfg.horizon);
    mean += ti;
  }
  mean /= static_cast<double>(t.size());
  const double expect = 0.5 * (kCfg.t_floor + kCfg.horizon);
  CHECK(std::fabs(mean - expect) < 0.01 * expect);
}

TEST_CASE("sample_t: lambda is sigma^2 and stays positive") {
  const TimeWeighting tw = TimeWeighting::uniform_t();
  for (double t : {kCfg.t_floor, 0.3, 1.0}) {
    CHECK(tw.lambda(t, kCfg) == sde::sigma_sq(kCfg, t));
    CHECK(tw.lambda(t, kCfg) > 0.0);
  }
}

TEST_CASE("dsm_loss: the kernel-score oracle drives the loss to zero") {
  Rng rng(11);
  const auto gm = analytic::make_ring_mixture(2, 2.0, 0.4);
  const Tensor x0 = sample_batch(gm, 64, rng);
  const objectives::ConditionedScoreFn oracle =
      [&x0](const Tensor& x_t, const std::vector<double>& t, const Tensor*) {
        std::vector<double> out(x_t.size());
        for (std::size_t i = 0; i < x_t.rows(); ++i) {
          const double v = sde::variance(kCfg, t[i]);
          for (std::size_t j = 0; j < x_t.cols(); ++j)
            out[i * x_t.cols() + j] =
                -(x_t.at(i * x_t.cols() + j) - x0.at(i * x_t.cols() + j)) / v;
        }
        return Tensor(x_t.shape(), std::move(out));
      };
  Rng loss_rng(13);
  const auto rep = objectives::dsm_loss_fn(oracle, x0,
                                           TimeWeighting::uniform_t(), kCfg,
                                           loss_rng);
  CHECK(rep.total >= 0.0);
  CHECK(rep.total < 1e-20);
}

TEST_CASE("dsm_loss: zero model at fixed t costs d * sigma^2 / v") {
  Rng rng(17);
  const auto gm = analytic::make_ring_mixture(2, 2.0, 0.4);
  const Tensor x0 = sample_batch(gm, 20000, rng);
  Rng model_rng(19);
  const models::ScoreModel zero_model(2, {8}, 2, kCfg, 8, model_rng);
  const double t = 0.5;
  Rng loss_rng(23);
  const auto rep = objectives::dsm_loss(zero_model, x0,
                                        TimeWeighting::fixed(t), kCfg,
                                        loss_rng);
  const double expect =
      2.0 * sde::sigma_sq(kCfg, t) / sde::variance(kCfg, t);
  // lambda ||eps||^2 / v is (sigma^2/v) chi^2_d: sd = (sigma^2/v) sqrt(2d/n)
  const double se = (sde::sigma_sq(kCfg, t) / sde::variance(kCfg, t)) *
                    std::sqrt(4.0 / 20000.0);
  CHECK(std::fabs(rep.total - expect) < 3.0 * se);
  CHECK(rep.batch_t.size() == 20000);
}

TEST_CASE("dsm_loss: zero model near d per example under uniform-sigma") {
  Rng rng(29);
  const auto gm = analytic::make_ring_mixture(2, 2.0, 0.4);
  const Tensor x0 = sample_batch(gm, 20000, rng);
  Rng model_rng(31);
  const models::ScoreModel zero_model(2, {8}, 2, kCfg, 8, model_rng);
  Rng loss_rng(37);
  const auto rep = objectives::dsm_loss(zero_model, x0,
                                        TimeWeighting::uniform_sigma(), kCfg,
                                        loss_rng);
  CHECK(std::fabs(rep.total - 2.0) < 0.06);
  CHECK(rep.total >= 0.0);
}

TEST_CASE("esm_loss: exact mixture score scores zero and stays nonnegative") {
  Rng rng(41);
  const auto gm = analytic::make_ring_mixture(2, 2.0, 0.4);
  const Tensor x0 = sample_batch(gm, 128, rng);
  const objectives::ConditionedScoreFn oracle =
      [&gm](const Tensor& x_t, const std::vector<double>& t, const Tensor*) {
        return analytic::mixture_score_rows(gm, x_t, t, kCfg);
      };
  Rng loss_rng(43);
  CHECK(objectives::esm_loss_fn(oracle, gm, x0, TimeWeighting::uniform_t(),
                                kCfg, loss_rng) < 1e-18);
  const auto m = random_model(2, 2, 47);
  Rng loss_rng2(47);
  CHECK(objectives::esm_loss(m, gm, x0, TimeWeighting::uniform_t(), kCfg,
                             loss_rng2) >= 0.0);
}

TEST_CASE("repr_loss: report identity holds bit-exactly") {
  Rng rng(53);
  const auto gm = analytic::make_ring_mixture(2, 2.0, 0.4);
  const Tensor x0 = sample_batch(gm, 16, rng);
  const auto m = random_model(2, 2, 59);
  Rng enc_rng(61);
  models::Encoder e(2, {12, 12}, 2, models::EncoderMode::kDeterministicL1,
                    enc_rng);
  Rng loss_rng(67);
  const auto rep = objectives::repr_loss(m, e, x0, TimeWeighting::uniform_t(),
                                         kCfg, loss_rng);
  CHECK(rep.total == rep.dsm_term + rep.reg_weight * rep.reg_term);
  CHECK(rep.reg_weight == 1e-5);  // L1 default
}

TEST_CASE("repr_loss: probabilistic default weight and reg plumbing") {
  Rng rng(71);
  const auto gm = analytic::make_ring_mixture(2, 2.0, 0.4);
  const Tensor x0 = sample_batch(gm, 16, rng);
  const auto m = random_model(2, 2, 73);
  Rng enc_rng(79);
  models::Encoder e(2, {12, 12}, 2, models::EncoderMode::kProbabilisticKL,
                    enc_rng);
  Rng loss_rng(83);
  const auto rep = objectives::repr_loss(m, e, x0, TimeWeighting::uniform_t(),
                                         kCfg, loss_rng);
  CHECK(rep.reg_weight == 1e-7);  // KL default
  // reg_term must equal the encoder's raw regularizer under the same draws
  Rng loss_rng2(83);
  const auto enc = e.encode(x0, loss_rng2).reg_raw;
  CHECK(rep.reg_term == enc.item());
}

TEST_CASE("repr_loss: dead conditioning reduces to the unconditional loss") {
  Rng rng(89);
  const auto gm = analytic::make_ring_mixture(2, 2.0, 0.4);
  const Tensor x0 = sample_batch(gm, 32, rng);
  auto m = random_model(2, 2, 97);
  m.zero_latent_conditioning();

  Rng rng_a(101);
  const auto uncond = objectives::dsm_loss(m, x0, TimeWeighting::uniform_t(),
                                           kCfg, rng_a);
  // arbitrary latent input, same noise stream: identical loss bit for bit
  const Tensor z = Tensor::randn({32, 2}, rng, 3.0);
  Rng rng_b(101);
  const auto cond = objectives::dsm_loss(m, x0, TimeWeighting::uniform_t(),
                                         kCfg, rng_b, &z);
  CHECK(cond.total == uncond.total);
}

TEST_CASE("decomposition: gap matches the closed-form constant") {
  // single Gaussian, unit variance, v(t) = 1, d = 2: C = 2*1/(1*(1+1)) = 1
  const auto gm = GaussianMixture::single_isotropic(2, 1.0);
  const double t = t_for_variance(1.0);
  const auto m = random_model(2, 2, 103);
  Rng rng(107);
  const auto res = objectives::decomposition_check(m, gm, t, kCfg, 20000, rng);
  CHECK(std::fabs(res.gap - 1.0) < 3.0 * res.gap_std_err);
  CHECK(std::fabs(res.floor - 1.0) < 3.0 * res.floor_std_err);
  CHECK(res.gap_std_err < 0.05);
}

TEST_CASE("decomposition: the gap is independent of the model parameters") {
  const auto gm = GaussianMixture::single_isotropic(2, 1.0);
  const double t = t_for_variance(1.0);
  const auto m1 = random_model(2, 2, 109);
  const auto m2 = random_model(2, 2, 113);
  Rng rng1(127), rng2(131);
  const auto r1 = objectives::decomposition_check(m1, gm, t, kCfg, 20000, rng1);
  const auto r2 = objectives::decomposition_check(m2, gm, t, kCfg, 20000, rng2);
  const double joint =
      std::sqrt(r1.gap_std_err * r1.gap_std_err +
                r2.gap_std_err * r2.gap_std_err);
  CHECK(std::fabs(r1.gap - r2.gap) < 3.0 * joint);
}

TEST_CASE("decomposition: identity holds across t on a two-mode mixture") {
  const auto gm = analytic::make_ring_mixture(2, 2.0, 0.4);
  const auto m = random_model(2, 2, 137);
  for (double t : {0.2, 0.5, 0.8}) {
    Rng rng(139 + static_cast<std::uint64_t>(1000 * t));
    const auto res = objectives::decomposition_check(m, gm, t, kCfg, 30000,
                                                     rng);
    const double joint =
        std::sqrt(res.gap_std_err * res.gap_std_err +
                  res.floor_std_err * res.floor_std_err);
    INFO("t = ", t);
    CHECK(std::fabs(res.gap - res.floor) < 3.0 * joint);
  }
}

TEST_CASE("decomposition: floor vanishes toward the horizon") {
  const auto gm = GaussianMixture::single_isotropic(2, 1.0);
  const auto m = random_model(2, 2, 149);
  Rng rng(151);
  const auto res = objectives::decomposition_check(m, gm, kCfg.horizon, kCfg,
                                                   5000, rng);
  CHECK(res.floor < 1e-5);
  CHECK(std::fabs(res.gap) < 1e-2);
}

TEST_CASE("decomposition: inverted kernel sign breaks the identity") {
  const auto gm = GaussianMixture::single_isotropic(2, 1.0);
  const double t = t_for_variance(1.0);
  const auto m = random_model(2, 2, 157);
  Rng rng(163);
  const auto res = objectives::decomposition_check(m, gm, t, kCfg, 20000, rng,
                                                   -1.0);
  const double joint =
      std::sqrt(res.gap_std_err * res.gap_std_err +
                res.floor_std_err * res.floor_std_err);
  CHECK(std::fabs(res.gap - res.floor) > 10.0 * joint);
}

TEST_CASE("dsm_loss: empty batch is a contract error") {
  Rng rng(167);
  const auto m = random_model(2, 2, 173);
  const Tensor empty({0, 2}, std::vector<double>{});
  CHECK_THROWS_AS(objectives::dsm_loss(m, empty, TimeWeighting::uniform_t(),
                                       kCfg, rng),
                  DimensionError);
}
