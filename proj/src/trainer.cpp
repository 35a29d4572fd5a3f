#include "scorelab/trainer.hpp"

#include <cmath>

#include "scorelab/errors.hpp"

namespace scorelab::train {

namespace {

using numcore::Rng;
using numcore::Tensor;

Tensor draw_batch(const analytic::LabeledDataset& data, std::size_t batch,
                  Rng& rng) {
  const std::size_t d = data.dim;
  std::vector<double> rows(batch * d);
  for (std::size_t i = 0; i < batch; ++i) {
    const auto idx = static_cast<std::size_t>(
        rng.uniform_int(static_cast<std::int64_t>(data.size())));
    const double* src = data.row(idx);
    std::copy(src, src + d, rows.begin() + i * d);
  }
  return Tensor({batch, d}, std::move(rows));
}

}  // namespace

TrainResult train_model(const analytic::LabeledDataset& data,
                        const sde::SdeConfig& cfg, const TrainOptions& opt,
                        const StepCallback& on_step,
                        const SnapshotCallback& on_snapshot) {
  if (data.size() == 0) throw ConfigError("train: empty dataset");
  if (opt.batch_size < 1) throw ConfigError("train: batch_size must be >= 1");
  opt.weighting.validate(cfg);

  Rng master(opt.seed);
  Rng init_rng = master.fork(0x1417);
  Rng batch_rng = master.fork(0xB47C);

  models::ScoreModel model(data.dim, opt.widths, opt.d_z, cfg,
                           opt.time_embed_dim, init_rng);
  models::Encoder encoder(data.dim, opt.widths, opt.d_z, opt.encoder_mode,
                          init_rng);

  numcore::AdamConfig adam_cfg;
  adam_cfg.learning_rate = opt.lr;
  numcore::AdamState adam_model(model.parameters(), adam_cfg);
  numcore::AdamState adam_encoder(encoder.parameters(), adam_cfg);
  const bool train_encoder = opt.conditional && !opt.ablate_latent;

  TrainResult result{std::move(model), std::move(encoder)};
  const auto batch = static_cast<std::size_t>(opt.batch_size);

  if (on_snapshot && opt.snapshot_every > 0)
    on_snapshot(0, result.model, result.encoder);

  const objectives::TimeWeighting uniform = objectives::TimeWeighting::uniform_t();
  int global_step = 0;
  for (int phase = 1; phase <= 2; ++phase) {
    const int iters = phase == 1 ? opt.phase1_iters : opt.phase2_iters;
    const objectives::TimeWeighting& tw = phase == 1 ? opt.weighting : uniform;
    for (int it = 0; it < iters; ++it, ++global_step) {
      Rng step_rng = master.fork(0x57E90000ULL + global_step);
      const Tensor x0 = draw_batch(data, batch, batch_rng);
      objectives::LossReport rep;
      bool diverged = false;
      try {
        if (!opt.conditional) {
          rep = objectives::dsm_loss(result.model, x0, tw, cfg, step_rng);
        } else if (opt.ablate_latent || phase == 2) {
          Tensor z;
          if (opt.ablate_latent) {
            z = result.model.zero_latent(batch);
          } else {
            numcore::NoGradGuard ng;  // frozen encoder
            z = result.encoder.encode(x0, step_rng).z;
          }
          rep = objectives::dsm_loss(result.model, x0, tw, cfg, step_rng, &z);
        } else {
          rep = objectives::repr_loss(result.model, result.encoder, x0, tw,
                                      cfg, step_rng, opt.reg_weight);
        }
      } catch (const NumericalError&) {
        diverged = true;
      }
      if (diverged || !std::isfinite(rep.total)) {
        result.diverged = true;
        result.steps_run = global_step;
        return result;
      }
      adam_model.zero_grad();
      adam_encoder.zero_grad();
      numcore::backward(rep.total_tensor);
      adam_model.step();
      if (phase == 1 && train_encoder) adam_encoder.step();
      result.final_loss = rep.total;
      if (on_step) on_step(global_step, phase, rep);
      if (on_snapshot && opt.snapshot_every > 0 &&
          (global_step + 1) % opt.snapshot_every == 0)
        on_snapshot(global_step + 1, result.model, result.encoder);
    }
  }
  result.steps_run = global_step;
  return result;
}

}  // namespace scorelab::train
