#include <cstdio>
#include <exception>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "scorelab/commands.hpp"
#include "scorelab/errors.hpp"

namespace {

using namespace scorelab;

cli::RunConfig load_config(const std::string& path,
                           const std::optional<std::uint64_t>& seed,
                           const std::optional<std::string>& out_dir) {
  cli::RunConfig cfg =
      path.empty() ? cli::RunConfig{} : cli::RunConfig::load_file(path);
  if (seed) cfg.seed = *seed;
  if (out_dir) cfg.out_dir = *out_dir;
  return cfg;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"scorelab: a desk-scale score-based representation lab"};
  app.require_subcommand(1);

  std::string config_path;
  std::optional<std::uint64_t> seed;
  std::optional<std::string> out_dir;

  const auto add_common = [&](CLI::App* cmd) {
    cmd->add_option("--config", config_path, "run configuration file");
    cmd->add_option("--seed", seed, "override the config seed");
    cmd->add_option("--out", out_dir, "override the output directory");
  };

  auto* train = app.add_subcommand("train", "two-phase representation training");
  add_common(train);

  auto* check = app.add_subcommand(
      "check", "verification suite against the analytic mixture oracle");
  add_common(check);
  bool sabotage = false;
  check->add_flag("--sabotage", sabotage,
                  "negative control: invert the kernel-score sign")
      ->group("");  // hidden

  auto* encode = app.add_subcommand("encode", "export latent codes as CSV");
  add_common(encode);
  cli::EncodeOptions enc_opt;
  encode->add_option("--checkpoint", enc_opt.checkpoint, "model checkpoint")
      ->required();
  encode->add_flag("--export-mean", enc_opt.export_mean,
                   "export encoder means instead of sampled codes");

  auto* sample = app.add_subcommand("sample",
                                    "code-conditional reverse-SDE sampling");
  add_common(sample);
  cli::SampleOptions smp_opt;
  sample->add_option("--checkpoint", smp_opt.checkpoint, "model checkpoint")
      ->required();
  sample->add_option("--grid-steps", smp_opt.grid_steps,
                     "latent grid resolution (d_z == 2)");
  sample->add_option("--grid-lo", smp_opt.grid_lo, "grid lower bound");
  sample->add_option("--grid-hi", smp_opt.grid_hi, "grid upper bound");
  sample->add_option("--codes", smp_opt.codes_file,
                     "file with comma-separated codes, one per line");
  sample->add_option("--n-steps", smp_opt.n_steps, "integration steps");
  sample->add_option("--k", smp_opt.k_per_code, "samples per code");
  sample->add_option("--ppm", smp_opt.ppm_path,
                     "write a scatter image (portable pixmap)");
  sample->add_option("--ppm-size", smp_opt.ppm_size, "image width and height");

  auto* sweep = app.add_subcommand(
      "sweep", "silhouette-vs-t or diversity-vs-d_z experiment grid");
  add_common(sweep);
  cli::SweepOptions swp_opt;
  sweep->add_option("--kind", swp_opt.kind, "t | dz")->required();
  sweep->add_option("--values", swp_opt.values, "grid values")
      ->required()
      ->delimiter(',');
  sweep->add_option("--runs", swp_opt.runs, "independent runs per value");

  auto* cross = app.add_subcommand(
      "cross-denoise", "denoise perturbed samples under a foreign code");
  add_common(cross);
  cli::CrossDenoiseOptions cd_opt;
  cross->add_option("--checkpoint", cd_opt.checkpoint, "model checkpoint")
      ->required();
  cross->add_option("--t-mid", cd_opt.t_mid, "perturbation time");
  cross->add_option("--pairs", cd_opt.pairs, "number of cross-class pairs");
  cross->add_option("--n-steps", cd_opt.n_steps, "integration steps");

  CLI11_PARSE(app, argc, argv);

  try {
    if (train->parsed())
      return cli::cmd_train(load_config(config_path, seed, out_dir));
    if (check->parsed())
      return cli::cmd_check(load_config(config_path, seed, out_dir), sabotage);
    if (encode->parsed()) {
      enc_opt.seed = seed;
      enc_opt.out_dir = out_dir;
      return cli::cmd_encode(enc_opt);
    }
    if (sample->parsed()) {
      smp_opt.seed = seed;
      smp_opt.out_dir = out_dir;
      return cli::cmd_sample(smp_opt);
    }
    if (sweep->parsed())
      return cli::cmd_sweep(load_config(config_path, seed, out_dir), swp_opt);
    if (cross->parsed()) {
      cd_opt.seed = seed;
      cd_opt.out_dir = out_dir;
      return cli::cmd_cross_denoise(cd_opt);
    }
  } catch (const NumericalError& e) {
    std::fprintf(stderr, "numerical error: %s\n", e.what());
    return cli::kExitNumerical;
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return cli::kExitValidation;
  }
  return cli::kExitValidation;
}
