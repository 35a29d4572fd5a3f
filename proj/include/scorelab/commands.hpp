#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "scorelab/checkpoint.hpp"
#include "scorelab/config.hpp"
#include "scorelab/datasets.hpp"
#include "scorelab/models.hpp"

namespace scorelab::cli {

inline constexpr int kExitOk = 0;
inline constexpr int kExitValidation = 1;
inline constexpr int kExitNumerical = 2;
inline constexpr int kExitVerification = 3;

// Dataset per the run config: toy generators, or IDX ingestion when
// dataset = idx.
analytic::ToyDataset build_dataset(const RunConfig& cfg, numcore::Rng& rng);

struct ModelBundle {
  RunConfig cfg;
  models::ScoreModel model;
  models::Encoder encoder;
};

Checkpoint snapshot(const RunConfig& cfg, const models::ScoreModel& m,
                    const models::Encoder& e);
// Rebuilds model + encoder from a checkpoint (the data dimension is read off
// the stored tensor shapes).
ModelBundle restore(const std::string& checkpoint_path);

// train: two-phase representation training; writes model.ckpt, loss.csv and
// config.txt under out_dir. On divergence the last periodic checkpoint is
// retained and the exit code is kExitNumerical.
int cmd_train(const RunConfig& cfg);

// check: gradient spot-checks, the DSM-ESM decomposition identity at three
// times, and reverse-sampler moments, against the config's analytic mixture.
// sabotage flips the sign of the kernel score inside the decomposition
// estimate (negative control; the check must then fail).
int cmd_check(const RunConfig& cfg, bool sabotage = false);

struct EncodeOptions {
  std::string checkpoint;
  std::optional<std::string> out_dir;
  std::optional<std::uint64_t> seed;
  bool export_mean = false;
};
int cmd_encode(const EncodeOptions& opt);

struct SampleOptions {
  std::string checkpoint;
  int grid_steps = 0;  // > 0: latent grid codes (d_z == 2 only)
  double grid_lo = -1.0;
  double grid_hi = 1.0;
  std::string codes_file;  // rows of comma-separated latent coordinates
  int n_steps = 0;         // 0: config sample_steps
  int k_per_code = 4;
  std::string ppm_path;  // optional scatter image
  int ppm_size = 512;
  std::optional<std::string> out_dir;
  std::optional<std::uint64_t> seed;
};
int cmd_sample(const SampleOptions& opt);

struct SweepOptions {
  std::string kind;  // "t" | "dz"
  std::vector<double> values;
  int runs = 3;
};
int cmd_sweep(const RunConfig& cfg, const SweepOptions& opt);

struct CrossDenoiseOptions {
  std::string checkpoint;
  double t_mid = 0.5;
  int pairs = 20;
  int n_steps = 0;  // 0: config sample_steps
  std::optional<std::string> out_dir;
  std::optional<std::uint64_t> seed;
};
// Starts reverse integration at t_mid from perturbed samples of class A while
// conditioning on the code of a class-B sample; reports which mode each
// result lands near.
int cmd_cross_denoise(const CrossDenoiseOptions& opt);

}  // namespace scorelab::cli
