#include "scorelab/datasets.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "scorelab/errors.hpp"

namespace scorelab::analytic {

namespace {

constexpr double kPi = 3.14159265358979323846;

// Uniform draw from the disk of given radius.
void disk_noise(numcore::Rng& rng, double radius, double* dx, double* dy) {
  const double r = radius * std::sqrt(rng.uniform());
  const double a = 2.0 * kPi * rng.uniform();
  *dx = r * std::cos(a);
  *dy = r * std::sin(a);
}

LabeledDataset sample_mixture(const GaussianMixture& gm, const std::string& name,
                              std::size_t n, numcore::Rng& rng) {
  LabeledDataset ds;
  ds.name = name;
  ds.dim = gm.dim;
  ds.points.reserve(n * gm.dim);
  ds.labels.reserve(n);
  for (std::size_t i = 0; i < n; ++i) {
    int comp = 0;
    auto x = gm.sample(rng, &comp);
    ds.points.insert(ds.points.end(), x.begin(), x.end());
    ds.labels.push_back(comp);
  }
  return ds;
}

}  // namespace

int LabeledDataset::n_classes() const {
  int m = 0;
  for (int l : labels) m = std::max(m, l + 1);
  return m;
}

GaussianMixture make_ring_mixture(int k, double radius, double comp_std) {
  if (k < 1) throw ConfigError("mixture dataset: k must be >= 1");
  GaussianMixture gm;
  gm.dim = 2;
  const double w = 1.0 / k;
  for (int i = 0; i < k; ++i) {
    const double a = 2.0 * kPi * i / k;
    gm.weights.push_back(w);
    if (k == 1)
      gm.means.push_back({0.0, 0.0});
    else
      gm.means.push_back({radius * std::cos(a), radius * std::sin(a)});
    gm.covs.push_back(
        {comp_std * comp_std, 0.0, 0.0, comp_std * comp_std});
  }
  // exact unit weight sum regardless of k
  double acc = 0.0;
  for (std::size_t i = 0; i + 1 < gm.weights.size(); ++i) acc += gm.weights[i];
  gm.weights.back() = 1.0 - acc;
  gm.validate();
  return gm;
}

ToyDataset make_dataset(const std::string& name, const DatasetParams& params,
                        numcore::Rng& rng) {
  if (params.n < 1) throw ConfigError("dataset: n must be >= 1");
  ToyDataset out;
  if (name.rfind("mixture-", 0) == 0) {
    int k = 0;
    try {
      k = std::stoi(name.substr(8));
    } catch (...) {
      throw ConfigError("dataset: bad mixture spec '" + name + "'");
    }
    GaussianMixture gm = make_ring_mixture(k, params.radius, params.noise);
    out.data = sample_mixture(gm, name, params.n, rng);
    out.mixture = std::move(gm);
    return out;
  }
  if (name == "two-moons") {
    LabeledDataset ds;
    ds.name = name;
    ds.dim = 2;
    const double s = params.radius;
    const double cx = 0.5 * s, cy = 0.25 * s;
    for (std::size_t i = 0; i < params.n; ++i) {
      const int label = static_cast<int>(i % 2);
      const double th = kPi * rng.uniform();
      double px = s * std::cos(th) - cx;
      double py = s * std::sin(th) - cy;
      if (label == 1) {
        px = -px;
        py = -py;
      }
      double dx = 0.0, dy = 0.0;
      disk_noise(rng, params.noise, &dx, &dy);
      ds.points.push_back(px + dx);
      ds.points.push_back(py + dy);
      ds.labels.push_back(label);
    }
    out.data = std::move(ds);
    return out;
  }
  if (name == "rings") {
    LabeledDataset ds;
    ds.name = name;
    ds.dim = 2;
    for (std::size_t i = 0; i < params.n; ++i) {
      const int label = static_cast<int>(i % 2);
      const double r = label == 0 ? 0.5 * params.radius : params.radius;
      const double th = 2.0 * kPi * rng.uniform();
      double dx = 0.0, dy = 0.0;
      disk_noise(rng, params.noise, &dx, &dy);
      ds.points.push_back(r * std::cos(th) + dx);
      ds.points.push_back(r * std::sin(th) + dy);
      ds.labels.push_back(label);
    }
    out.data = std::move(ds);
    return out;
  }
  throw ConfigError("dataset: unknown name '" + name +
                    "' (expected mixture-k, two-moons, rings)");
}

DatasetSplit split_dataset(const LabeledDataset& data, double holdout_frac,
                           numcore::Rng& rng) {
  if (!(holdout_frac >= 0.0 && holdout_frac < 1.0))
    throw ConfigError("split: holdout_frac must be in [0, 1)");
  const std::size_t n = data.size();
  std::vector<std::size_t> idx(n);
  std::iota(idx.begin(), idx.end(), 0);
  for (std::size_t i = n; i > 1; --i)
    std::swap(idx[i - 1], idx[static_cast<std::size_t>(
                              rng.uniform_int(static_cast<std::int64_t>(i)))]);
  const std::size_t n_hold = static_cast<std::size_t>(
      std::floor(holdout_frac * static_cast<double>(n)));
  DatasetSplit split;
  split.train.name = data.name;
  split.train.dim = data.dim;
  split.holdout.name = data.name;
  split.holdout.dim = data.dim;
  for (std::size_t i = 0; i < n; ++i) {
    LabeledDataset& dst = i < n_hold ? split.holdout : split.train;
    const double* r = data.row(idx[i]);
    dst.points.insert(dst.points.end(), r, r + data.dim);
    dst.labels.push_back(data.labels[idx[i]]);
  }
  return split;
}

}  // namespace scorelab::analytic
