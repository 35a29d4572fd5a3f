#include "scorelab/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "scorelab/errors.hpp"

namespace scorelab::metrics {

using numcore::Rng;
using numcore::Tensor;

SilhouetteReport silhouette(const std::vector<double>& points, std::size_t dim,
                            const std::vector<int>& labels) {
  const std::size_t n = labels.size();
  if (n < 2) throw DimensionError("silhouette: need at least 2 points");
  if (points.size() != n * dim)
    throw DimensionError("silhouette: points/labels size mismatch");
  int n_clusters = 0;
  for (int l : labels) {
    if (l < 0) throw DimensionError("silhouette: negative label");
    n_clusters = std::max(n_clusters, l + 1);
  }
  std::vector<std::size_t> cluster_size(n_clusters, 0);
  for (int l : labels) ++cluster_size[l];
  int populated = 0;
  for (std::size_t c : cluster_size) populated += c > 0 ? 1 : 0;
  if (populated < 2)
    throw DimensionError("silhouette: need at least 2 distinct clusters");

  SilhouetteReport rep;
  rep.n_clusters = n_clusters;
  rep.per_point.assign(n, 0.0);
  double* per_point = rep.per_point.data();

#pragma omp parallel for schedule(static)
  for (std::ptrdiff_t i = 0; i < static_cast<std::ptrdiff_t>(n); ++i) {
    if (cluster_size[labels[i]] == 1) {
      per_point[i] = 0.0;  // singleton convention
      continue;
    }
    std::vector<double> dist_sum(n_clusters, 0.0);
    const double* pi = points.data() + i * dim;
    for (std::size_t j = 0; j < n; ++j) {
      if (j == static_cast<std::size_t>(i)) continue;
      const double* pj = points.data() + j * dim;
      double acc = 0.0;
      for (std::size_t k = 0; k < dim; ++k) {
        const double dk = pi[k] - pj[k];
        acc += dk * dk;
      }
      dist_sum[labels[j]] += std::sqrt(acc);
    }
    const int li = labels[i];
    const double a =
        dist_sum[li] / static_cast<double>(cluster_size[li] - 1);
    double b = std::numeric_limits<double>::infinity();
    for (int c = 0; c < n_clusters; ++c) {
      if (c == li || cluster_size[c] == 0) continue;
      b = std::min(b, dist_sum[c] / static_cast<double>(cluster_size[c]));
    }
    const double denom = std::max(a, b);
    per_point[i] = denom > 0.0 ? (b - a) / denom : 0.0;
  }

  double sum = 0.0;
  for (double s : rep.per_point) sum += s;
  rep.mean_score = sum / static_cast<double>(n);
  return rep;
}

std::vector<std::vector<double>> latent_grid(double lo, double hi, int steps) {
  if (steps < 2) throw DomainError("latent_grid: steps must be >= 2");
  if (!(hi > lo)) throw DomainError("latent_grid: range must be increasing");
  // axis[k] = mid + half_step * (2k - (steps-1)): mirrored offsets negate
  // exactly, so the grid is bit-symmetric about the midpoint.
  const double mid = 0.5 * (lo + hi);
  const double half_step = (hi - lo) / (2.0 * (steps - 1));
  std::vector<double> axis(steps);
  for (int k = 0; k < steps; ++k)
    axis[k] = mid + half_step * static_cast<double>(2 * k - (steps - 1));
  std::vector<std::vector<double>> codes;
  codes.reserve(static_cast<std::size_t>(steps) * steps);
  for (int i = 0; i < steps; ++i)
    for (int j = 0; j < steps; ++j)
      codes.push_back({axis[i], axis[j]});
  return codes;
}

std::vector<double> conditional_diversity(
    const models::ScoreModel& m, const std::vector<std::vector<double>>& codes,
    int k_samples, int n_steps, numcore::Rng& rng) {
  if (k_samples < 2)
    throw DomainError("conditional_diversity: k_samples must be >= 2");
  const std::size_t d = m.data_dim();
  std::vector<double> out;
  out.reserve(codes.size());
  for (std::size_t ci = 0; ci < codes.size(); ++ci) {
    const auto& code = codes[ci];
    if (code.size() != static_cast<std::size_t>(m.latent_dim()))
      throw DimensionError("conditional_diversity: code dim mismatch");
    const std::size_t k = static_cast<std::size_t>(k_samples);
    std::vector<double> tile(k * code.size());
    for (std::size_t i = 0; i < k; ++i)
      std::copy(code.begin(), code.end(), tile.begin() + i * code.size());
    const Tensor z({k, code.size()}, std::move(tile));
    const auto score_fn = [&m, &z](const Tensor& x, double t) {
      return m.forward(x, std::vector<double>(x.rows(), t), z);
    };
    Rng code_rng = rng.fork(0xD1BE0000ULL + ci);
    const auto res = sde::reverse_sample(m.sde_config(), score_fn, d, n_steps,
                                         k, code_rng);
    const double* s = res.samples.data();
    double acc = 0.0;
    std::size_t pairs = 0;
    for (std::size_t i = 0; i < k; ++i)
      for (std::size_t j = i + 1; j < k; ++j, ++pairs) {
        double dd = 0.0;
        for (std::size_t c = 0; c < d; ++c) {
          const double diff = s[i * d + c] - s[j * d + c];
          dd += diff * diff;
        }
        acc += std::sqrt(dd);
      }
    out.push_back(acc / static_cast<double>(pairs));
  }
  return out;
}

double silhouette_cell(const analytic::LabeledDataset& data,
                       const sde::SdeConfig& cfg,
                       const train::TrainOptions& base, double t,
                       std::uint64_t cell_seed, double holdout_frac) {
  train::TrainOptions opt = base;
  opt.weighting = objectives::TimeWeighting::fixed(t);
  opt.seed = cell_seed;
  Rng split_rng = Rng(cell_seed).fork(0x5B117);
  const auto split = analytic::split_dataset(data, holdout_frac, split_rng);
  const auto res = train::train_model(split.train, cfg, opt);
  if (res.diverged)
    throw NumericalError("silhouette_cell: training diverged at t=" +
                         std::to_string(t));
  numcore::NoGradGuard ng;
  const std::size_t nh = split.holdout.size();
  const Tensor x({nh, data.dim},
                 std::vector<double>(split.holdout.points));
  const Tensor z = res.encoder.encode_mean(x);
  return silhouette(z.values(), z.cols(), split.holdout.labels).mean_score;
}

double diversity_cell(const analytic::LabeledDataset& data,
                      const sde::SdeConfig& cfg,
                      const train::TrainOptions& base, int d_z,
                      std::uint64_t cell_seed, int n_codes, int k_samples,
                      int n_steps) {
  train::TrainOptions opt = base;
  opt.d_z = d_z;
  opt.seed = cell_seed;
  Rng cell_rng(cell_seed);
  Rng split_rng = cell_rng.fork(0x5B117);
  const auto split = analytic::split_dataset(data, 0.2, split_rng);
  const auto res = train::train_model(split.train, cfg, opt);
  if (res.diverged)
    throw NumericalError("diversity_cell: training diverged at d_z=" +
                         std::to_string(d_z));
  numcore::NoGradGuard ng;
  const std::size_t nc =
      std::min<std::size_t>(static_cast<std::size_t>(n_codes),
                            split.holdout.size());
  if (nc == 0) throw DimensionError("diversity_cell: empty holdout");
  const Tensor x({nc, data.dim},
                 std::vector<double>(split.holdout.points.begin(),
                                     split.holdout.points.begin() +
                                         nc * data.dim));
  const Tensor z = res.encoder.encode_mean(x);
  std::vector<std::vector<double>> codes(nc);
  for (std::size_t i = 0; i < nc; ++i)
    codes[i].assign(z.data() + i * z.cols(), z.data() + (i + 1) * z.cols());
  Rng div_rng = cell_rng.fork(0xD1F);
  const auto per_code =
      conditional_diversity(res.model, codes, k_samples, n_steps, div_rng);
  double acc = 0.0;
  for (double v : per_code) acc += v;
  return acc / static_cast<double>(per_code.size());
}

std::vector<SilhouetteRow> silhouette_vs_t(const analytic::LabeledDataset& data,
                                           const sde::SdeConfig& cfg,
                                           const std::vector<double>& t_values,
                                           int runs,
                                           const train::TrainOptions& base,
                                           double holdout_frac) {
  if (runs < 1) throw DomainError("silhouette_vs_t: runs must be >= 1");
  const std::size_t n_cells = t_values.size() * static_cast<std::size_t>(runs);
  std::vector<double> cell_score(n_cells, 0.0);
  std::vector<std::uint8_t> cell_ok(n_cells, 0);
  const Rng seeder(base.seed);

#pragma omp parallel for schedule(dynamic)
  for (std::ptrdiff_t cell = 0; cell < static_cast<std::ptrdiff_t>(n_cells);
       ++cell) {
    const std::size_t ti = static_cast<std::size_t>(cell) /
                           static_cast<std::size_t>(runs);
    const std::uint64_t seed =
        seeder.fork(0xCE110000ULL + static_cast<std::uint64_t>(cell)).seed();
    try {
      cell_score[cell] = silhouette_cell(data, cfg, base, t_values[ti], seed,
                                         holdout_frac);
      cell_ok[cell] = 1;
    } catch (const NumericalError&) {
      cell_ok[cell] = 0;
    }
  }

  std::vector<SilhouetteRow> rows;
  rows.reserve(t_values.size());
  for (std::size_t ti = 0; ti < t_values.size(); ++ti) {
    SilhouetteRow row;
    row.t = t_values[ti];
    std::vector<double> vals;
    for (int r = 0; r < runs; ++r) {
      const std::size_t cell = ti * static_cast<std::size_t>(runs) +
                               static_cast<std::size_t>(r);
      if (cell_ok[cell])
        vals.push_back(cell_score[cell]);
      else
        ++row.runs_failed;
    }
    row.runs_ok = static_cast<int>(vals.size());
    if (!vals.empty()) {
      double sum = 0.0;
      for (double v : vals) sum += v;
      row.mean = sum / static_cast<double>(vals.size());
      if (vals.size() > 1) {
        double ss = 0.0;
        for (double v : vals) ss += (v - row.mean) * (v - row.mean);
        row.stddev = std::sqrt(ss / static_cast<double>(vals.size() - 1));
      }
    }
    rows.push_back(row);
  }
  return rows;
}

}  // namespace scorelab::metrics
