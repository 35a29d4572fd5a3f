#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <cmath>

#include "doctest.h"
#include "scorelab/datasets.hpp"
#include "scorelab/metrics.hpp"
#include "testutil.hpp"

using namespace scorelab;
using numcore::Rng;
using numcore::Tensor;

namespace {

const sde::SdeConfig kCfg{};

// independent reference: all pairwise distances materialized, then the
// textbook formula applied per point
double brute_silhouette(const std::vector<double>& pts, std::size_t dim,
                        const std::vector<int>& labels) {
  const std::size_t n = labels.size();
  std::vector<std::vector<double>> dist(n, std::vector<double>(n, 0.0));
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < n; ++j) {
      double acc = 0.0;
      for (std::size_t k = 0; k < dim; ++k) {
        const double d = pts[i * dim + k] - pts[j * dim + k];
        acc += d * d;
      }
      dist[i][j] = std::sqrt(acc);
    }
  int n_clusters = 0;
  for (int l : labels) n_clusters = std::max(n_clusters, l + 1);
  double total = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    std::size_t same = 0;
    for (std::size_t j = 0; j < n; ++j)
      if (j != i && labels[j] == labels[i]) ++same;
    if (same == 0) continue;  // singleton: contributes 0
    double a = 0.0;
    for (std::size_t j = 0; j < n; ++j)
      if (j != i && labels[j] == labels[i]) a += dist[i][j];
    a /= static_cast<double>(same);
    double b = std::numeric_limits<double>::infinity();
    for (int c = 0; c < n_clusters; ++c) {
      if (c == labels[i]) continue;
      double sum = 0.0;
      std::size_t cnt = 0;
      for (std::size_t j = 0; j < n; ++j)
        if (labels[j] == c) {
          sum += dist[i][j];
          ++cnt;
        }
      if (cnt > 0) b = std::min(b, sum / static_cast<double>(cnt));
    }
    const double denom = std::max(a, b);
    total += denom > 0.0 ? (b - a) / denom : 0.0;
  }
  return total / static_cast<double>(n);
}

}  // namespace

TEST_CASE("silhouette: well-separated clusters approach 1") {
  const std::vector<double> pts{0, 0, 0, 0.001, 10, 10, 10, 10.001};
  const std::vector<int> labels{0, 0, 1, 1};
  const auto rep = metrics::silhouette(pts, 2, labels);
  CHECK(rep.mean_score > 0.99);
  CHECK(rep.n_clusters == 2);
  for (double s : rep.per_point) {
    CHECK(s >= -1.0);
    CHECK(s <= 1.0);
  }
}

TEST_CASE("silhouette: identical points resolve to zero") {
  const std::vector<double> pts(8, 3.5);
  const std::vector<int> labels{0, 0, 1, 1};
  CHECK(metrics::silhouette(pts, 2, labels).mean_score == 0.0);
}

TEST_CASE("silhouette: six hand-placed points match the brute force exactly") {
  const std::vector<double> pts{0, 0, 1, 0, 0, 1, 10, 10, 11, 10, 10, 11};
  const std::vector<int> labels{0, 0, 0, 1, 1, 1};
  const auto rep = metrics::silhouette(pts, 2, labels);
  CHECK(std::fabs(rep.mean_score - brute_silhouette(pts, 2, labels)) < 1e-12);
  // mean is the arithmetic mean of the per-point values
  double mean = 0.0;
  for (double s : rep.per_point) mean += s;
  CHECK(rep.mean_score ==
        doctest::Approx(mean / rep.per_point.size()).epsilon(1e-15));
}

TEST_CASE("silhouette: 50 randomized instances match the brute force") {
  Rng rng(11);
  for (int rep_i = 0; rep_i < 50; ++rep_i) {
    const std::size_t n = 5 + static_cast<std::size_t>(rng.uniform_int(26));
    const std::size_t dim = 1 + static_cast<std::size_t>(rng.uniform_int(3));
    const int n_clusters = 2 + static_cast<int>(rng.uniform_int(3));
    std::vector<double> pts(n * dim);
    for (auto& p : pts) p = 3.0 * rng.normal();
    std::vector<int> labels(n);
    for (std::size_t i = 0; i < n; ++i)
      labels[i] = static_cast<int>(rng.uniform_int(n_clusters));
    labels[0] = 0;
    labels[1] = 1;  // guarantee two populated clusters
    const auto rep = metrics::silhouette(pts, dim, labels);
    CHECK(std::fabs(rep.mean_score - brute_silhouette(pts, dim, labels)) <
          1e-12);
  }
}

TEST_CASE("silhouette: invariant to translation, rotation, uniform scale") {
  Rng rng(13);
  const std::size_t n = 40;
  std::vector<double> pts(n * 2);
  std::vector<int> labels(n);
  for (std::size_t i = 0; i < n; ++i) {
    labels[i] = static_cast<int>(i % 3);
    pts[2 * i] = rng.normal() + 2.0 * labels[i];
    pts[2 * i + 1] = rng.normal() - labels[i];
  }
  const double base = metrics::silhouette(pts, 2, labels).mean_score;

  const double th = 0.83, c = std::cos(th), s = std::sin(th);
  std::vector<double> moved(n * 2);
  for (std::size_t i = 0; i < n; ++i) {
    const double x = pts[2 * i], y = pts[2 * i + 1];
    moved[2 * i] = 4.0 * (c * x - s * y) + 17.0;
    moved[2 * i + 1] = 4.0 * (s * x + c * y) - 5.0;
  }
  CHECK(std::fabs(metrics::silhouette(moved, 2, labels).mean_score - base) <
        1e-9);
}

TEST_CASE("silhouette: fewer than two clusters is a contract error") {
  const std::vector<double> pts{0, 0, 1, 1};
  CHECK_THROWS_AS(metrics::silhouette(pts, 2, {0, 0}), DimensionError);
  CHECK_THROWS_AS(metrics::silhouette({0.0, 0.0}, 2, {0}), DimensionError);
}

TEST_CASE("latent_grid: corner grid, midpoint, and endpoint exactness") {
  const auto corners = metrics::latent_grid(-1.0, 1.0, 2);
  REQUIRE(corners.size() == 4);
  CHECK(corners[0] == std::vector<double>{-1.0, -1.0});
  CHECK(corners[1] == std::vector<double>{-1.0, 1.0});
  CHECK(corners[2] == std::vector<double>{1.0, -1.0});
  CHECK(corners[3] == std::vector<double>{1.0, 1.0});

  const auto g3 = metrics::latent_grid(-1.0, 1.0, 3);
  REQUIRE(g3.size() == 9);
  CHECK(g3[4] == std::vector<double>{0.0, 0.0});

  const auto g11 = metrics::latent_grid(-1.0, 1.0, 11);
  CHECK(g11.size() == 121);
  double lo = 1e300, hi = -1e300;
  for (const auto& code : g11)
    for (double v : code) {
      lo = std::min(lo, v);
      hi = std::max(hi, v);
    }
  CHECK(lo == -1.0);
  CHECK(hi == 1.0);
}

TEST_CASE("latent_grid: deterministic and exactly symmetric about the center") {
  for (const auto [lo, hi] : {std::pair{-1.0, 1.0}, std::pair{-2.0, 2.0}}) {
    const auto a = metrics::latent_grid(lo, hi, 7);
    const auto b = metrics::latent_grid(lo, hi, 7);
    CHECK(a == b);
    const std::size_t n = a.size();
    for (std::size_t k = 0; k < n; ++k) {
      CHECK(a[k][0] == -a[n - 1 - k][0]);
      CHECK(a[k][1] == -a[n - 1 - k][1]);
    }
  }
  CHECK_THROWS_AS(metrics::latent_grid(-1.0, 1.0, 1), DomainError);
}

TEST_CASE("conditional_diversity: k=2 is the single pairwise distance") {
  Rng rng(17);
  models::ScoreModel m(2, {8, 8}, 2, kCfg, 8, rng);
  const std::vector<std::vector<double>> codes{{0.3, -0.3}};
  Rng div_rng(19);
  const auto div = metrics::conditional_diversity(m, codes, 2, 50, div_rng);
  REQUIRE(div.size() == 1);

  // replicate the sampling path to recover the two terminal samples
  const Tensor z({2, 2}, {0.3, -0.3, 0.3, -0.3});
  const auto score_fn = [&](const Tensor& x, double t) {
    return m.forward(x, std::vector<double>(x.rows(), t), z);
  };
  Rng code_rng = Rng(19).fork(0xD1BE0000ULL);
  const auto res = sde::reverse_sample(kCfg, score_fn, 2, 50, 2, code_rng);
  const double dx = res.samples.at(0) - res.samples.at(2);
  const double dy = res.samples.at(1) - res.samples.at(3);
  CHECK(div[0] == doctest::Approx(std::hypot(dx, dy)).epsilon(1e-12));
}

TEST_CASE("conditional_diversity: untrained model ignores the code") {
  Rng rng(23);
  models::ScoreModel m(2, {8, 8}, 2, kCfg, 8, rng);  // fresh: score is zero
  const std::vector<std::vector<double>> codes{{1.0, 1.0}, {-1.0, -1.0}};
  Rng div_rng(29);
  const auto div = metrics::conditional_diversity(m, codes, 16, 100, div_rng);
  REQUIRE(div.size() == 2);
  // pure diffusion: spread on the order of sigma(T), same for both codes
  CHECK(div[0] > 10.0);
  CHECK(div[1] > 10.0);
  CHECK(std::fabs(div[0] - div[1]) / (0.5 * (div[0] + div[1])) < 0.5);
}

TEST_CASE("silhouette_vs_t: single run reports zero stddev") {
  Rng rng(31);
  analytic::DatasetParams params;
  params.n = 240;
  const auto toy = analytic::make_dataset("mixture-2", params, rng);
  train::TrainOptions base;
  base.widths = {8, 8};
  base.d_z = 1;
  base.time_embed_dim = 8;
  base.phase1_iters = 60;
  base.phase2_iters = 0;
  base.batch_size = 16;
  base.seed = 5;
  const auto rows =
      metrics::silhouette_vs_t(toy.data, kCfg, {0.3, 0.7}, 1, base);
  REQUIRE(rows.size() == 2);
  for (const auto& row : rows) {
    CHECK(row.runs_ok == 1);
    CHECK(row.runs_failed == 0);
    CHECK(row.stddev == 0.0);
    CHECK(std::isfinite(row.mean));
  }
}

TEST_CASE("silhouette_vs_t: diverged training lands in runs_failed") {
  Rng rng(37);
  analytic::DatasetParams params;
  params.n = 240;
  const auto toy = analytic::make_dataset("mixture-2", params, rng);
  train::TrainOptions base;
  base.widths = {8, 8};
  base.d_z = 1;
  base.time_embed_dim = 8;
  base.phase1_iters = 40;
  base.phase2_iters = 0;
  base.batch_size = 16;
  base.lr = 1e154;  // guaranteed overflow within a few steps
  base.seed = 7;
  const auto rows = metrics::silhouette_vs_t(toy.data, kCfg, {0.5}, 2, base);
  REQUIRE(rows.size() == 1);
  CHECK(rows[0].runs_failed == 2);
  CHECK(rows[0].runs_ok == 0);
}
