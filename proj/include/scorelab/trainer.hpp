#pragma once

#include <cstdint>
#include <functional>
#include <optional>
#include <vector>

#include "scorelab/adam.hpp"
#include "scorelab/datasets.hpp"
#include "scorelab/models.hpp"
#include "scorelab/objectives.hpp"

namespace scorelab::train {

struct TrainOptions {
  std::vector<int> widths{64, 64, 64};
  int d_z = 2;
  int time_embed_dim = 32;
  models::EncoderMode encoder_mode = models::EncoderMode::kDeterministicL1;
  std::optional<double> reg_weight;  // unset: default for the encoder mode
  objectives::TimeWeighting weighting;  // phase 1
  int phase1_iters = 2000;
  int phase2_iters = 2000;  // uniform-t, frozen encoder; 0 disables
  int batch_size = 128;
  double lr = 2e-4;
  std::uint64_t seed = 1;
  bool conditional = true;     // false: unconditional dsm objective
  bool ablate_latent = false;  // conditional structure but z forced to 0
  int snapshot_every = 0;      // 0 disables periodic snapshots
};

// Called once per optimizer step (both phases, global step index).
using StepCallback =
    std::function<void(int step, int phase, const objectives::LossReport&)>;

// Called before the first step and every snapshot_every steps thereafter.
using SnapshotCallback = std::function<void(
    int step, const models::ScoreModel& m, const models::Encoder& e)>;

struct TrainResult {
  models::ScoreModel model;
  models::Encoder encoder;
  bool diverged = false;
  int steps_run = 0;
  double final_loss = 0.0;
};

// Two-phase training: phase 1 runs the representation objective under the
// configured weighting; phase 2 continues with uniform-t sampling and a
// frozen encoder. Stops early (diverged=true) on a non-finite loss.
TrainResult train_model(const analytic::LabeledDataset& data,
                        const sde::SdeConfig& cfg, const TrainOptions& opt,
                        const StepCallback& on_step = {},
                        const SnapshotCallback& on_snapshot = {});

}  // namespace scorelab::train
