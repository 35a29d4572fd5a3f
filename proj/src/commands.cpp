#include "scorelab/commands.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <map>
#include <sstream>

#include "scorelab/csv.hpp"
#include "scorelab/errors.hpp"
#include "scorelab/idx.hpp"
#include "scorelab/metrics.hpp"
#include "scorelab/objectives.hpp"
#include "scorelab/ppm.hpp"
#include "scorelab/trainer.hpp"

namespace scorelab::cli {

namespace fs = std::filesystem;
using numcore::NoGradGuard;
using numcore::Rng;
using numcore::Tensor;

namespace {

constexpr std::uint64_t kDataStream = 0xDA7A;
constexpr std::uint64_t kEncodeStream = 0xE7C0;
constexpr std::uint64_t kSampleStream = 0x5A3F0000;
constexpr std::uint64_t kCheckStream = 0xC4EC;
constexpr std::uint64_t kCellStream = 0x5EE90000;
constexpr std::uint64_t kPairStream = 0xFA17;

std::string join_path(const std::string& dir, const std::string& name) {
  return (fs::path(dir) / name).string();
}

// Batched encoder-mean evaluation (chunked so IDX-scale data stays cheap).
Tensor encode_all_mean(const models::Encoder& enc,
                       const analytic::LabeledDataset& data) {
  NoGradGuard ng;
  const std::size_t n = data.size(), d = data.dim;
  std::vector<double> out(n * static_cast<std::size_t>(enc.latent_dim()));
  const std::size_t chunk = 8192;
  for (std::size_t start = 0; start < n; start += chunk) {
    const std::size_t c = std::min(chunk, n - start);
    Tensor x({c, d}, std::vector<double>(data.points.begin() + start * d,
                                         data.points.begin() + (start + c) * d));
    const Tensor z = enc.encode_mean(x);
    std::copy(z.data(), z.data() + z.size(),
              out.begin() + start * static_cast<std::size_t>(enc.latent_dim()));
  }
  return Tensor({n, static_cast<std::size_t>(enc.latent_dim())},
                std::move(out));
}

std::vector<std::vector<double>> read_codes_file(const std::string& path,
                                                 int expected_dim) {
  std::ifstream in(path);
  if (!in) throw ConfigError("codes: cannot open '" + path + "'");
  std::vector<std::vector<double>> codes;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    const auto hash = line.find('#');
    if (hash != std::string::npos) line = line.substr(0, hash);
    if (line.find_first_not_of(" \t\r\n") == std::string::npos) continue;
    std::vector<double> row;
    std::stringstream ss(line);
    std::string cell;
    while (std::getline(ss, cell, ',')) {
      const auto a = cell.find_first_not_of(" \t\r");
      const auto b = cell.find_last_not_of(" \t\r");
      if (a == std::string::npos)
        throw ParseError("codes: empty cell at line " + std::to_string(lineno));
      row.push_back(parse_double(cell.substr(a, b - a + 1),
                                 "codes line " + std::to_string(lineno)));
    }
    if (static_cast<int>(row.size()) != expected_dim)
      throw ParseError("codes: line " + std::to_string(lineno) + " has " +
                       std::to_string(row.size()) + " values, expected " +
                       std::to_string(expected_dim));
    codes.push_back(std::move(row));
  }
  if (codes.empty()) throw ParseError("codes: no rows in '" + path + "'");
  return codes;
}

struct CellResult {
  bool ok = false;
  double value = 0.0;
};

// Sweep cells persist independently so an interrupted sweep resumes from the
// completed cells.
CellResult read_cell(const std::string& path) {
  std::ifstream in(path);
  CellResult res;
  if (!in) return res;
  std::string tag;
  in >> tag;
  if (tag == "ok") {
    std::string value;
    in >> value;
    res.value = parse_double(value, "cell file " + path);
    res.ok = true;
  } else if (tag == "failed") {
    res.ok = false;
    res.value = std::numeric_limits<double>::quiet_NaN();
  } else {
    throw ParseError("sweep: corrupt cell file '" + path + "'");
  }
  return res;
}

void write_cell(const std::string& path, const CellResult& res) {
  std::ofstream out(path, std::ios::trunc);
  if (res.ok)
    out << "ok " << format_double(res.value) << "\n";
  else
    out << "failed\n";
}

}  // namespace

analytic::ToyDataset build_dataset(const RunConfig& cfg, Rng& rng) {
  if (cfg.dataset == "idx") {
    analytic::ToyDataset out;
    out.data = load_idx(cfg.idx_images, cfg.idx_labels, cfg.idx_pool);
    return out;
  }
  analytic::DatasetParams params;
  params.n = cfg.dataset_n;
  params.radius = cfg.dataset_radius;
  params.noise = cfg.dataset_noise;
  return analytic::make_dataset(cfg.dataset, params, rng);
}

Checkpoint snapshot(const RunConfig& cfg, const models::ScoreModel& m,
                    const models::Encoder& e) {
  Checkpoint ck;
  for (auto& named : m.named_parameters()) ck.tensors.push_back(named);
  for (auto& named : e.named_parameters()) ck.tensors.push_back(named);
  ck.config_text = cfg.render();
  return ck;
}

ModelBundle restore(const std::string& checkpoint_path) {
  Checkpoint ck = load_checkpoint(checkpoint_path);
  RunConfig cfg = RunConfig::parse(ck.config_text);
  cfg.validate();
  std::map<std::string, Tensor> by_name;
  for (auto& [name, tensor] : ck.tensors) by_name.emplace(name, tensor);

  const auto it = by_name.find("score.trunk0.W");
  if (it == by_name.end())
    throw ParseError("checkpoint: missing tensor score.trunk0.W");
  const std::size_t data_dim = it->second.shape()[0];

  Rng init(0);
  ModelBundle bundle{
      cfg,
      models::ScoreModel(data_dim, cfg.widths, cfg.d_z, cfg.sde(),
                         cfg.time_embed_dim, init),
      models::Encoder(data_dim, cfg.widths, cfg.d_z, cfg.encoder_mode_enum(),
                      init)};

  auto assign_all = [&](const std::vector<std::pair<std::string, Tensor>>&
                            params) {
    for (const auto& [name, tensor] : params) {
      const auto found = by_name.find(name);
      if (found == by_name.end())
        throw ParseError("checkpoint: missing tensor " + name);
      if (found->second.shape() != tensor.shape())
        throw DimensionError("checkpoint: tensor " + name +
                             " has mismatched shape");
      Tensor dst = tensor;
      std::copy(found->second.data(), found->second.data() + dst.size(),
                dst.data());
      by_name.erase(found);
    }
  };
  assign_all(bundle.model.named_parameters());
  assign_all(bundle.encoder.named_parameters());
  if (!by_name.empty())
    throw ParseError("checkpoint: unexpected tensor " +
                     by_name.begin()->first);
  return bundle;
}

int cmd_train(const RunConfig& cfg) {
  cfg.validate();
  fs::create_directories(cfg.out_dir);
  Rng master(cfg.seed);
  Rng data_rng = master.fork(kDataStream);
  const auto toy = build_dataset(cfg, data_rng);

  const std::string ckpt_path = join_path(cfg.out_dir, "model.ckpt");
  CsvWriter loss_csv(join_path(cfg.out_dir, "loss.csv"),
                     {"step", "total", "dsm_term", "reg_term"});
  {
    std::ofstream cfg_out(join_path(cfg.out_dir, "config.txt"),
                          std::ios::trunc);
    cfg_out << cfg.render();
  }

  const auto on_step = [&](int step, int /*phase*/,
                           const objectives::LossReport& rep) {
    loss_csv.write_row({std::to_string(step), format_double(rep.total),
                        format_double(rep.dsm_term),
                        format_double(rep.reg_term)});
  };
  const auto on_snapshot = [&](int /*step*/, const models::ScoreModel& m,
                               const models::Encoder& e) {
    save_checkpoint(ckpt_path, snapshot(cfg, m, e));
  };

  const auto result = train::train_model(toy.data, cfg.sde(),
                                         cfg.train_options(), on_step,
                                         on_snapshot);
  loss_csv.flush();
  if (result.diverged) {
    std::fprintf(stderr,
                 "train: non-finite loss at step %d; last good checkpoint "
                 "retained at %s\n",
                 result.steps_run, ckpt_path.c_str());
    return kExitNumerical;
  }
  save_checkpoint(ckpt_path, snapshot(cfg, result.model, result.encoder));
  std::printf("train: %d steps, final loss %s, checkpoint %s\n",
              result.steps_run, format_double(result.final_loss).c_str(),
              ckpt_path.c_str());
  return kExitOk;
}

int cmd_check(const RunConfig& cfg, bool sabotage) {
  cfg.validate();
  Rng master(cfg.seed);
  Rng data_rng = master.fork(kDataStream);
  const auto toy = build_dataset(cfg, data_rng);
  if (!toy.mixture) {
    std::fprintf(stderr,
                 "check: dataset '%s' has no analytic mixture oracle; "
                 "use a mixture-k dataset\n",
                 cfg.dataset.c_str());
    return kExitValidation;
  }
  const auto& gm = *toy.mixture;
  const sde::SdeConfig sde_cfg = cfg.sde();
  bool all_ok = true;
  const auto report = [&](const char* name, bool ok, const std::string& info) {
    std::printf("check %-14s %s  %s\n", name, ok ? "PASS" : "FAIL",
                info.c_str());
    all_ok = all_ok && ok;
  };

  // 1. gradient spot check on a tiny conditional loss
  {
    Rng grad_rng = master.fork(kCheckStream);
    models::ScoreModel m(gm.dim, {8, 8}, 2, sde_cfg, 8, grad_rng);
    models::Encoder e(gm.dim, {8, 8}, 2, models::EncoderMode::kDeterministicL1,
                      grad_rng);
    // randomize the zero-initialized tensors so every path carries gradient
    for (auto& [name, p] : m.named_parameters()) {
      Tensor t = p;
      for (std::size_t i = 0; i < t.size(); ++i)
        t.data()[i] += 0.05 * grad_rng.normal();
    }
    std::vector<double> batch;
    for (int i = 0; i < 4; ++i) {
      const auto x = gm.sample(grad_rng);
      batch.insert(batch.end(), x.begin(), x.end());
    }
    const Tensor x0({4, gm.dim}, std::move(batch));
    const auto loss_value = [&](Rng rng_copy) {
      return objectives::repr_loss(m, e, x0,
                                   objectives::TimeWeighting::uniform_t(),
                                   sde_cfg, rng_copy)
          .total;
    };
    auto params = m.parameters();
    for (auto& p : e.parameters()) params.push_back(p);
    for (auto& p : params) p.zero_grad();
    {
      Rng rng_copy = master.fork(kCheckStream + 1);
      const auto rep = objectives::repr_loss(
          m, e, x0, objectives::TimeWeighting::uniform_t(), sde_cfg, rng_copy);
      numcore::backward(rep.total_tensor);
    }
    double worst = 0.0;
    const double h = 1e-6;
    Rng pick = master.fork(kCheckStream + 2);
    for (int probe = 0; probe < 24; ++probe) {
      auto& p = params[static_cast<std::size_t>(
          pick.uniform_int(static_cast<std::int64_t>(params.size())))];
      const auto i = static_cast<std::size_t>(
          pick.uniform_int(static_cast<std::int64_t>(p.size())));
      const double saved = p.data()[i];
      NoGradGuard ng;
      p.data()[i] = saved + h;
      const double up = loss_value(master.fork(kCheckStream + 1));
      p.data()[i] = saved - h;
      const double dn = loss_value(master.fork(kCheckStream + 1));
      p.data()[i] = saved;
      const double fd = (up - dn) / (2.0 * h);
      const double an = p.grad()[i];
      // the difference quotient itself carries ~eps*|loss|/h of round-off
      const double excess = std::fabs(fd - an) - 1e-6;
      if (excess <= 0.0) continue;
      worst = std::max(
          worst, excess / std::max({1e-6, std::fabs(fd), std::fabs(an)}));
    }
    report("gradients", worst < 1e-4,
           "max rel err " + format_double(worst) + " over 24 probes");
  }

  // 2. decomposition identity at three times
  {
    Rng model_rng = master.fork(kCheckStream + 3);
    models::ScoreModel m(gm.dim, cfg.widths, cfg.d_z, sde_cfg,
                         cfg.time_embed_dim, model_rng);
    const double kernel_sign = sabotage ? -1.0 : 1.0;
    for (double t : {0.2, 0.5, 0.8}) {
      if (t < sde_cfg.t_floor) t = sde_cfg.t_floor;
      Rng draw_rng = master.fork(kCheckStream + 100 +
                                 static_cast<std::uint64_t>(t * 1000));
      const auto res = objectives::decomposition_check(m, gm, t, sde_cfg,
                                                       40000, draw_rng,
                                                       kernel_sign);
      const double tol =
          3.0 * std::sqrt(res.gap_std_err * res.gap_std_err +
                          res.floor_std_err * res.floor_std_err);
      const bool ok = std::fabs(res.gap - res.floor) <= tol;
      report("decomposition", ok,
             "t=" + format_double(t) + " gap=" + format_double(res.gap) +
                 " floor=" + format_double(res.floor) + " +/- " +
                 format_double(tol));
    }
  }

  // 3. reverse-sampler moments against the standard normal oracle
  {
    const auto prior = analytic::GaussianMixture::single_isotropic(gm.dim, 1.0);
    const auto score_fn = [&](const Tensor& x, double t) {
      return analytic::mixture_score(prior, x, t, sde_cfg);
    };
    Rng samp_rng = master.fork(kCheckStream + 4);
    const auto res = sde::reverse_sample(sde_cfg, score_fn, gm.dim, 1000,
                                         10000, samp_rng);
    const double* s = res.samples.data();
    const std::size_t n = res.samples.rows(), d = res.samples.cols();
    bool ok = true;
    std::string info;
    for (std::size_t j = 0; j < d; ++j) {
      double mean = 0.0, var = 0.0;
      for (std::size_t i = 0; i < n; ++i) mean += s[i * d + j];
      mean /= static_cast<double>(n);
      for (std::size_t i = 0; i < n; ++i) {
        const double diff = s[i * d + j] - mean;
        var += diff * diff;
      }
      var /= static_cast<double>(n - 1);
      ok = ok && std::fabs(mean) <= 0.05 && std::fabs(var - 1.0) <= 0.1;
      if (j == 0)
        info = "dim0 mean=" + format_double(mean) +
               " var=" + format_double(var);
    }
    report("sampler", ok, info);
  }

  if (!all_ok) return kExitVerification;
  return kExitOk;
}

int cmd_encode(const EncodeOptions& opt) {
  ModelBundle bundle = restore(opt.checkpoint);
  RunConfig cfg = bundle.cfg;
  if (opt.seed) cfg.seed = *opt.seed;
  if (opt.out_dir) cfg.out_dir = *opt.out_dir;
  fs::create_directories(cfg.out_dir);

  Rng master(cfg.seed);
  // the dataset is the one the checkpoint was trained on: derive it from the
  // training seed so --seed only affects encoder sampling
  Rng data_rng = Rng(bundle.cfg.seed).fork(kDataStream);
  const auto toy = build_dataset(cfg, data_rng);
  const auto& data = toy.data;
  if (data.dim != bundle.model.data_dim())
    throw DimensionError("encode: dataset dim " + std::to_string(data.dim) +
                         " != checkpoint dim " +
                         std::to_string(bundle.model.data_dim()));

  const int d_z = bundle.encoder.latent_dim();
  Tensor z;
  if (opt.export_mean ||
      bundle.encoder.mode() == models::EncoderMode::kDeterministicL1) {
    z = encode_all_mean(bundle.encoder, data);
  } else {
    NoGradGuard ng;
    Rng enc_rng = master.fork(kEncodeStream);
    const Tensor x({data.size(), data.dim}, std::vector<double>(data.points));
    z = bundle.encoder.encode(x, enc_rng).z;
  }

  std::vector<std::string> header{"id"};
  for (int j = 1; j <= d_z; ++j) header.push_back("z_" + std::to_string(j));
  header.push_back("label");
  CsvWriter csv(join_path(cfg.out_dir, "latents.csv"), header);
  for (std::size_t i = 0; i < data.size(); ++i) {
    std::vector<std::string> row{std::to_string(i)};
    for (int j = 0; j < d_z; ++j)
      row.push_back(format_double(z.at(i * d_z + j)));
    row.push_back(std::to_string(data.labels[i]));
    csv.write_row(row);
  }
  std::printf("encode: %zu rows -> %s\n", data.size(),
              join_path(cfg.out_dir, "latents.csv").c_str());
  return kExitOk;
}

int cmd_sample(const SampleOptions& opt) {
  ModelBundle bundle = restore(opt.checkpoint);
  RunConfig cfg = bundle.cfg;
  if (opt.seed) cfg.seed = *opt.seed;
  if (opt.out_dir) cfg.out_dir = *opt.out_dir;
  fs::create_directories(cfg.out_dir);
  const int d_z = bundle.model.latent_dim();

  std::vector<std::vector<double>> codes;
  if (opt.grid_steps > 0) {
    if (d_z != 2)
      throw UnsupportedError("sample: latent grid requires d_z == 2, have " +
                             std::to_string(d_z));
    codes = metrics::latent_grid(opt.grid_lo, opt.grid_hi, opt.grid_steps);
  } else if (!opt.codes_file.empty()) {
    codes = read_codes_file(opt.codes_file, d_z);
  } else {
    throw ConfigError("sample: need --grid-steps or --codes FILE");
  }
  const int n_steps = opt.n_steps > 0 ? opt.n_steps : cfg.sample_steps;
  if (opt.k_per_code < 1)
    throw ConfigError("sample: k_per_code must be >= 1");
  const std::size_t k = static_cast<std::size_t>(opt.k_per_code);
  const std::size_t d = bundle.model.data_dim();

  std::vector<std::string> header{"code_id"};
  for (int j = 1; j <= d_z; ++j) header.push_back("z_" + std::to_string(j));
  header.push_back("sample_id");
  for (std::size_t j = 1; j <= d; ++j)
    header.push_back("x_" + std::to_string(j));
  header.push_back("status");
  CsvWriter csv(join_path(cfg.out_dir, "samples.csv"), header);

  Rng master(cfg.seed);
  std::vector<double> scatter_xy;
  std::vector<int> scatter_color;
  std::size_t failures = 0;
  for (std::size_t ci = 0; ci < codes.size(); ++ci) {
    const auto& code = codes[ci];
    std::vector<double> tile(k * code.size());
    for (std::size_t i = 0; i < k; ++i)
      std::copy(code.begin(), code.end(), tile.begin() + i * code.size());
    const Tensor z({k, code.size()}, std::move(tile));
    const auto score_fn = [&](const Tensor& x, double t) {
      return bundle.model.forward(x, std::vector<double>(x.rows(), t), z);
    };
    Rng code_rng = master.fork(kSampleStream + ci);
    const auto res =
        sde::reverse_sample(cfg.sde(), score_fn, d, n_steps, k, code_rng,
                            sde::NonFinitePolicy::kFlagRow);
    failures += res.n_failed;
    const double* s = res.samples.data();
    for (std::size_t i = 0; i < k; ++i) {
      std::vector<std::string> row{std::to_string(ci)};
      for (double zc : code) row.push_back(format_double(zc));
      row.push_back(std::to_string(i));
      for (std::size_t j = 0; j < d; ++j)
        row.push_back(format_double(s[i * d + j]));
      row.push_back(res.ok[i] ? "ok" : "nonfinite");
      csv.write_row(row);
      if (res.ok[i] && d >= 2) {
        scatter_xy.push_back(s[i * d]);
        scatter_xy.push_back(s[i * d + 1]);
        scatter_color.push_back(static_cast<int>(ci));
      }
    }
  }
  if (!opt.ppm_path.empty())
    write_scatter_ppm(join_path(cfg.out_dir, opt.ppm_path), scatter_xy,
                      scatter_color, opt.ppm_size, opt.ppm_size);
  std::printf("sample: %zu codes x %zu -> %s (%zu flagged)\n", codes.size(), k,
              join_path(cfg.out_dir, "samples.csv").c_str(), failures);
  return kExitOk;
}

int cmd_sweep(const RunConfig& cfg, const SweepOptions& opt) {
  cfg.validate();
  if (opt.kind != "t" && opt.kind != "dz")
    throw ConfigError("sweep: kind must be t or dz");
  if (opt.values.empty()) throw ConfigError("sweep: no values given");
  if (opt.runs < 1) throw ConfigError("sweep: runs must be >= 1");
  if (opt.kind == "dz")
    for (double v : opt.values)
      if (v < 1.0 || v != std::floor(v))
        throw ConfigError("sweep: dz values must be positive integers");

  fs::create_directories(join_path(cfg.out_dir, "cells"));
  Rng master(cfg.seed);
  Rng data_rng = master.fork(kDataStream);
  const auto toy = build_dataset(cfg, data_rng);
  const train::TrainOptions base = cfg.train_options();
  const sde::SdeConfig sde_cfg = cfg.sde();

  const std::size_t n_cells = opt.values.size() *
                              static_cast<std::size_t>(opt.runs);
  std::vector<CellResult> cells(n_cells);
  std::vector<std::string> cell_paths(n_cells);
  for (std::size_t c = 0; c < n_cells; ++c) {
    const std::size_t vi = c / static_cast<std::size_t>(opt.runs);
    const int run = static_cast<int>(c % static_cast<std::size_t>(opt.runs));
    const std::string tag =
        opt.kind + "_" +
        (opt.kind == "dz" ? std::to_string(static_cast<int>(opt.values[vi]))
                          : format_double(opt.values[vi])) +
        "_run" + std::to_string(run);
    cell_paths[c] = join_path(join_path(cfg.out_dir, "cells"), tag + ".cell");
  }

#pragma omp parallel for schedule(dynamic)
  for (std::ptrdiff_t c = 0; c < static_cast<std::ptrdiff_t>(n_cells); ++c) {
    const std::size_t vi = static_cast<std::size_t>(c) /
                           static_cast<std::size_t>(opt.runs);
    CellResult cell = read_cell(cell_paths[c]);
    if (!fs::exists(cell_paths[c])) {
      const std::uint64_t seed =
          master.fork(kCellStream + static_cast<std::uint64_t>(c)).seed();
      try {
        if (opt.kind == "t") {
          cell.value = metrics::silhouette_cell(toy.data, sde_cfg, base,
                                                opt.values[vi], seed,
                                                cfg.holdout_frac);
        } else {
          cell.value = metrics::diversity_cell(
              toy.data, sde_cfg, base, static_cast<int>(opt.values[vi]), seed,
              16, 8, cfg.sample_steps);
        }
        cell.ok = true;
      } catch (const NumericalError&) {
        cell.ok = false;
      }
      write_cell(cell_paths[c], cell);
    }
    cells[c] = cell;
  }

  CsvWriter csv(join_path(cfg.out_dir, "sweep.csv"),
                {"param", "mean", "std", "runs"});
  for (std::size_t vi = 0; vi < opt.values.size(); ++vi) {
    std::vector<double> vals;
    for (int r = 0; r < opt.runs; ++r) {
      const auto& cell = cells[vi * static_cast<std::size_t>(opt.runs) +
                               static_cast<std::size_t>(r)];
      if (cell.ok) vals.push_back(cell.value);
    }
    double mean = std::numeric_limits<double>::quiet_NaN();
    double sd = 0.0;
    if (!vals.empty()) {
      mean = 0.0;
      for (double v : vals) mean += v;
      mean /= static_cast<double>(vals.size());
      if (vals.size() > 1) {
        double ss = 0.0;
        for (double v : vals) ss += (v - mean) * (v - mean);
        sd = std::sqrt(ss / static_cast<double>(vals.size() - 1));
      }
    }
    const std::string param =
        opt.kind == "dz" ? std::to_string(static_cast<int>(opt.values[vi]))
                         : format_double(opt.values[vi]);
    csv.write_row({param, format_double(mean), format_double(sd),
                   std::to_string(vals.size())});
  }
  std::printf("sweep: %zu cells -> %s\n", n_cells,
              join_path(cfg.out_dir, "sweep.csv").c_str());
  return kExitOk;
}

int cmd_cross_denoise(const CrossDenoiseOptions& opt) {
  ModelBundle bundle = restore(opt.checkpoint);
  RunConfig cfg = bundle.cfg;
  if (opt.seed) cfg.seed = *opt.seed;
  if (opt.out_dir) cfg.out_dir = *opt.out_dir;
  fs::create_directories(cfg.out_dir);
  const sde::SdeConfig sde_cfg = cfg.sde();
  if (!(opt.t_mid >= sde_cfg.t_floor && opt.t_mid <= sde_cfg.horizon))
    throw ConfigError("cross-denoise: t_mid outside [t_floor, horizon]");
  if (opt.pairs < 1) throw ConfigError("cross-denoise: pairs must be >= 1");

  Rng master(cfg.seed);
  Rng data_rng = Rng(bundle.cfg.seed).fork(kDataStream);
  const auto toy = build_dataset(cfg, data_rng);
  const auto& data = toy.data;
  if (data.n_classes() < 2)
    throw ConfigError("cross-denoise: dataset needs at least 2 classes");
  const std::size_t d = data.dim;

  // class anchors: mixture component means when available, else centroids
  std::vector<std::vector<double>> anchors(
      static_cast<std::size_t>(data.n_classes()), std::vector<double>(d, 0.0));
  if (toy.mixture && toy.mixture->components() ==
                         static_cast<std::size_t>(data.n_classes())) {
    for (std::size_t c = 0; c < toy.mixture->components(); ++c)
      anchors[c] = toy.mixture->means[c];
  } else {
    std::vector<std::size_t> counts(anchors.size(), 0);
    for (std::size_t i = 0; i < data.size(); ++i) {
      const double* r = data.row(i);
      auto& a = anchors[static_cast<std::size_t>(data.labels[i])];
      for (std::size_t j = 0; j < d; ++j) a[j] += r[j];
      ++counts[static_cast<std::size_t>(data.labels[i])];
    }
    for (std::size_t c = 0; c < anchors.size(); ++c)
      if (counts[c] > 0)
        for (auto& v : anchors[c]) v /= static_cast<double>(counts[c]);
  }

  Rng pair_rng = master.fork(kPairStream);
  const std::size_t n_pairs = static_cast<std::size_t>(opt.pairs);
  std::vector<std::size_t> idx_a(n_pairs), idx_b(n_pairs);
  for (std::size_t p = 0; p < n_pairs; ++p) {
    const auto draw = [&] {
      return static_cast<std::size_t>(
          pair_rng.uniform_int(static_cast<std::int64_t>(data.size())));
    };
    idx_a[p] = draw();
    idx_b[p] = draw();
    for (int tries = 0;
         data.labels[idx_b[p]] == data.labels[idx_a[p]] && tries < 1000;
         ++tries)
      idx_b[p] = draw();
    if (data.labels[idx_b[p]] == data.labels[idx_a[p]])
      throw ConfigError("cross-denoise: could not find cross-class pair");
  }

  NoGradGuard ng;
  std::vector<double> a_rows(n_pairs * d), b_rows(n_pairs * d);
  for (std::size_t p = 0; p < n_pairs; ++p) {
    std::copy(data.row(idx_a[p]), data.row(idx_a[p]) + d,
              a_rows.begin() + p * d);
    std::copy(data.row(idx_b[p]), data.row(idx_b[p]) + d,
              b_rows.begin() + p * d);
  }
  const Tensor a({n_pairs, d}, std::move(a_rows));
  const Tensor b({n_pairs, d}, std::move(b_rows));
  const Tensor z_b = bundle.encoder.encode_mean(b);

  Rng perturb_rng = master.fork(kPairStream + 1);
  const Tensor x_mid = sde::perturb(sde_cfg, a, opt.t_mid, perturb_rng);
  const auto score_fn = [&](const Tensor& x, double t) {
    return bundle.model.forward(x, std::vector<double>(x.rows(), t), z_b);
  };
  const int n_steps = opt.n_steps > 0 ? opt.n_steps : cfg.sample_steps;
  Rng integ_rng = master.fork(kPairStream + 2);
  const auto res = sde::reverse_integrate(sde_cfg, score_fn, x_mid, opt.t_mid,
                                          n_steps, integ_rng,
                                          sde::NonFinitePolicy::kFlagRow);

  CsvWriter csv(join_path(cfg.out_dir, "cross_denoise.csv"),
                {"pair", "label_a", "label_b", "dist_to_a_mode",
                 "dist_to_b_mode", "closer_to_b"});
  const double* s = res.samples.data();
  std::size_t closer_to_b = 0;
  for (std::size_t p = 0; p < n_pairs; ++p) {
    const auto& anchor_a =
        anchors[static_cast<std::size_t>(data.labels[idx_a[p]])];
    const auto& anchor_b =
        anchors[static_cast<std::size_t>(data.labels[idx_b[p]])];
    double da = 0.0, db = 0.0;
    for (std::size_t j = 0; j < d; ++j) {
      da += (s[p * d + j] - anchor_a[j]) * (s[p * d + j] - anchor_a[j]);
      db += (s[p * d + j] - anchor_b[j]) * (s[p * d + j] - anchor_b[j]);
    }
    da = std::sqrt(da);
    db = std::sqrt(db);
    if (db < da) ++closer_to_b;
    csv.write_row({std::to_string(p), std::to_string(data.labels[idx_a[p]]),
                   std::to_string(data.labels[idx_b[p]]), format_double(da),
                   format_double(db), db < da ? "1" : "0"});
  }
  std::printf("cross-denoise: %zu/%zu landed nearer the conditioning mode\n",
              closer_to_b, n_pairs);
  return kExitOk;
}

}  // namespace scorelab::cli
