#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "scorelab/models.hpp"
#include "scorelab/objectives.hpp"
#include "scorelab/sde.hpp"
#include "scorelab/trainer.hpp"

namespace scorelab::cli {

// Plain-text `key = value` run configuration, one flat namespace, `#`
// comments. Every field has a default, so the empty config is valid, and
// parse(render(c)) == c for any valid c.
struct RunConfig {
  // dataset
  std::string dataset = "mixture-2";  // mixture-k | two-moons | rings | idx
  std::uint64_t dataset_n = 4000;
  double dataset_radius = 4.0;
  double dataset_noise = 0.35;
  std::string idx_images;
  std::string idx_labels;
  int idx_pool = 1;
  // sde schedule
  double sigma_min = 0.01;
  double sigma_max = 50.0;
  double horizon = 1.0;
  double t_floor = 1e-3;
  // model
  std::vector<int> widths{64, 64, 64};
  int time_embed_dim = 32;
  int d_z = 2;
  std::string encoder_mode = "l1";  // l1 | kl
  std::optional<double> reg_weight;  // "auto": default for encoder_mode
  // training
  std::string time_weighting = "uniform-t";  // | uniform-sigma | fixed-t
  std::optional<double> fixed_t;             // "none" unless fixed-t
  int phase1_iters = 2000;
  int phase2_iters = 2000;
  int batch_size = 128;
  double lr = 2e-4;
  std::uint64_t seed = 1;
  std::string out_dir = "out";
  int checkpoint_every = 500;
  double holdout_frac = 0.2;
  int sample_steps = 500;

  static RunConfig parse(const std::string& text);
  static RunConfig load_file(const std::string& path);
  std::string render() const;
  void validate() const;

  sde::SdeConfig sde() const;
  models::EncoderMode encoder_mode_enum() const;
  objectives::TimeWeighting weighting() const;
  train::TrainOptions train_options() const;

  bool operator==(const RunConfig&) const = default;
};

// Locale-independent shortest round-trip formatting ('.' decimal separator).
std::string format_double(double v);
double parse_double(const std::string& s, const std::string& context);

}  // namespace scorelab::cli
