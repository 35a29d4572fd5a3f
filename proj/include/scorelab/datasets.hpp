#pragma once

#include <optional>
#include <string>
#include <vector>

#include "scorelab/mixture.hpp"
#include "scorelab/rng.hpp"

namespace scorelab::analytic {

struct LabeledDataset {
  std::string name;
  std::size_t dim = 0;
  std::vector<double> points;  // n * dim, row-major
  std::vector<int> labels;     // n, in [0, n_classes)

  std::size_t size() const { return labels.size(); }
  const double* row(std::size_t i) const { return points.data() + i * dim; }
  int n_classes() const;
};

struct DatasetParams {
  std::size_t n = 4000;
  double radius = 4.0;  // mode circle radius / curve scale
  double noise = 0.35;  // component stddev (mixtures) or band half-width
};

// Toy sources: "mixture-k" (k Gaussian modes on a circle, carries its exact
// mixture for oracle use), "two-moons" and "rings" (bounded uniform-band
// noise, no analytic score).
struct ToyDataset {
  LabeledDataset data;
  std::optional<GaussianMixture> mixture;
};

// Equal-weight isotropic mixture with k modes on a circle of given radius
// (k=1: origin; k=2: +/- radius on the x axis).
GaussianMixture make_ring_mixture(int k, double radius, double comp_std);

ToyDataset make_dataset(const std::string& name, const DatasetParams& params,
                        numcore::Rng& rng);

// Deterministic shuffled split; holdout_frac in [0, 1).
struct DatasetSplit {
  LabeledDataset train;
  LabeledDataset holdout;
};
DatasetSplit split_dataset(const LabeledDataset& data, double holdout_frac,
                           numcore::Rng& rng);

}  // namespace scorelab::analytic
