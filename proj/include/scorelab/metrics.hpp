#pragma once

#include <cstdint>
#include <vector>

#include "scorelab/datasets.hpp"
#include "scorelab/models.hpp"
#include "scorelab/trainer.hpp"

namespace scorelab::metrics {

struct SilhouetteReport {
  double mean_score = 0.0;
  std::vector<double> per_point;  // each in [-1, 1]
  int n_clusters = 0;
};

// Euclidean silhouette: s_i = (b_i - a_i) / max(a_i, b_i) with a_i the mean
// intra-cluster distance (excluding self) and b_i the smallest mean distance
// to another cluster. Singleton clusters and 0/0 resolve to 0.
SilhouetteReport silhouette(const std::vector<double>& points, std::size_t dim,
                            const std::vector<int>& labels);

// steps^2 codes on the uniform 2-D grid over [lo, hi]^2, exactly symmetric
// about the midpoint.
std::vector<std::vector<double>> latent_grid(double lo, double hi, int steps);

// For each code: k_samples reverse-SDE draws conditioned on that fixed code;
// returns the mean pairwise Euclidean distance per code.
std::vector<double> conditional_diversity(
    const models::ScoreModel& m, const std::vector<std::vector<double>>& codes,
    int k_samples, int n_steps, numcore::Rng& rng);

// One train-encode-score cell: trains a representation model with fixed-t
// weighting at the given t, encodes the held-out split, returns silhouette
// against the true labels. Throws NumericalError on training divergence.
double silhouette_cell(const analytic::LabeledDataset& data,
                       const sde::SdeConfig& cfg,
                       const train::TrainOptions& base, double t,
                       std::uint64_t cell_seed, double holdout_frac);

// One dimensionality cell: trains with the given latent dim, encodes
// n_codes held-out points, returns the mean conditional diversity.
double diversity_cell(const analytic::LabeledDataset& data,
                      const sde::SdeConfig& cfg,
                      const train::TrainOptions& base, int d_z,
                      std::uint64_t cell_seed, int n_codes, int k_samples,
                      int n_steps);

struct SilhouetteRow {
  double t = 0.0;
  double mean = 0.0;
  double stddev = 0.0;  // 0 when a single run succeeded
  int runs_ok = 0;
  int runs_failed = 0;
};

// Fixed-t silhouette sweep, `runs` independently seeded trainings per t.
// Diverged runs appear in runs_failed instead of silently vanishing.
// Cells may execute in parallel; per-cell seeds derive from base.seed only.
std::vector<SilhouetteRow> silhouette_vs_t(const analytic::LabeledDataset& data,
                                           const sde::SdeConfig& cfg,
                                           const std::vector<double>& t_values,
                                           int runs,
                                           const train::TrainOptions& base,
                                           double holdout_frac = 0.2);

}  // namespace scorelab::metrics
