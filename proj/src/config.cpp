#include "scorelab/config.hpp"

#include <charconv>
#include <fstream>
#include <functional>
#include <map>
#include <sstream>

#include "scorelab/errors.hpp"

namespace scorelab::cli {

namespace {

std::string trim(const std::string& s) {
  std::size_t a = s.find_first_not_of(" \t\r\n");
  if (a == std::string::npos) return "";
  std::size_t b = s.find_last_not_of(" \t\r\n");
  return s.substr(a, b - a + 1);
}

std::int64_t parse_int(const std::string& s, const std::string& key) {
  std::int64_t v = 0;
  const auto [p, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc{} || p != s.data() + s.size())
    throw ConfigError("config: bad integer for " + key + ": '" + s + "'");
  return v;
}

std::uint64_t parse_u64(const std::string& s, const std::string& key) {
  std::uint64_t v = 0;
  const auto [p, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc{} || p != s.data() + s.size())
    throw ConfigError("config: bad unsigned integer for " + key + ": '" + s +
                      "'");
  return v;
}

std::vector<int> parse_widths(const std::string& s, const std::string& key) {
  std::vector<int> out;
  std::stringstream ss(s);
  std::string item;
  while (std::getline(ss, item, ',')) {
    item = trim(item);
    if (item.empty())
      throw ConfigError("config: empty entry in " + key + " list");
    out.push_back(static_cast<int>(parse_int(item, key)));
  }
  if (out.empty()) throw ConfigError("config: " + key + " must be non-empty");
  return out;
}

std::string render_widths(const std::vector<int>& w) {
  std::string s;
  for (std::size_t i = 0; i < w.size(); ++i) {
    if (i) s += ",";
    s += std::to_string(w[i]);
  }
  return s;
}

std::optional<double> parse_opt_double(const std::string& s,
                                       const std::string& key,
                                       const std::string& sentinel) {
  if (s == sentinel) return std::nullopt;
  return parse_double(s, key);
}

}  // namespace

std::string format_double(double v) {
  char buf[64];
  const auto [p, ec] = std::to_chars(buf, buf + sizeof(buf), v);
  if (ec != std::errc{}) throw NumericalError("format_double failed");
  return std::string(buf, p);
}

double parse_double(const std::string& s, const std::string& context) {
  double v = 0.0;
  const auto [p, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc{} || p != s.data() + s.size())
    throw ConfigError("config: bad real for " + context + ": '" + s + "'");
  return v;
}

RunConfig RunConfig::parse(const std::string& text) {
  RunConfig cfg;
  std::vector<std::string> unknown;
  const std::map<std::string, std::function<void(const std::string&)>>
      setters = {
          {"dataset", [&](const std::string& v) { cfg.dataset = v; }},
          {"dataset_n",
           [&](const std::string& v) { cfg.dataset_n = parse_u64(v, "dataset_n"); }},
          {"dataset_radius",
           [&](const std::string& v) {
             cfg.dataset_radius = parse_double(v, "dataset_radius");
           }},
          {"dataset_noise",
           [&](const std::string& v) {
             cfg.dataset_noise = parse_double(v, "dataset_noise");
           }},
          {"idx_images", [&](const std::string& v) { cfg.idx_images = v; }},
          {"idx_labels", [&](const std::string& v) { cfg.idx_labels = v; }},
          {"idx_pool",
           [&](const std::string& v) {
             cfg.idx_pool = static_cast<int>(parse_int(v, "idx_pool"));
           }},
          {"sigma_min",
           [&](const std::string& v) { cfg.sigma_min = parse_double(v, "sigma_min"); }},
          {"sigma_max",
           [&](const std::string& v) { cfg.sigma_max = parse_double(v, "sigma_max"); }},
          {"horizon",
           [&](const std::string& v) { cfg.horizon = parse_double(v, "horizon"); }},
          {"t_floor",
           [&](const std::string& v) { cfg.t_floor = parse_double(v, "t_floor"); }},
          {"widths",
           [&](const std::string& v) { cfg.widths = parse_widths(v, "widths"); }},
          {"time_embed_dim",
           [&](const std::string& v) {
             cfg.time_embed_dim = static_cast<int>(parse_int(v, "time_embed_dim"));
           }},
          {"d_z",
           [&](const std::string& v) {
             cfg.d_z = static_cast<int>(parse_int(v, "d_z"));
           }},
          {"encoder_mode", [&](const std::string& v) { cfg.encoder_mode = v; }},
          {"reg_weight",
           [&](const std::string& v) {
             cfg.reg_weight = parse_opt_double(v, "reg_weight", "auto");
           }},
          {"time_weighting",
           [&](const std::string& v) { cfg.time_weighting = v; }},
          {"fixed_t",
           [&](const std::string& v) {
             cfg.fixed_t = parse_opt_double(v, "fixed_t", "none");
           }},
          {"phase1_iters",
           [&](const std::string& v) {
             cfg.phase1_iters = static_cast<int>(parse_int(v, "phase1_iters"));
           }},
          {"phase2_iters",
           [&](const std::string& v) {
             cfg.phase2_iters = static_cast<int>(parse_int(v, "phase2_iters"));
           }},
          {"batch_size",
           [&](const std::string& v) {
             cfg.batch_size = static_cast<int>(parse_int(v, "batch_size"));
           }},
          {"lr", [&](const std::string& v) { cfg.lr = parse_double(v, "lr"); }},
          {"seed",
           [&](const std::string& v) { cfg.seed = parse_u64(v, "seed"); }},
          {"out_dir", [&](const std::string& v) { cfg.out_dir = v; }},
          {"checkpoint_every",
           [&](const std::string& v) {
             cfg.checkpoint_every =
                 static_cast<int>(parse_int(v, "checkpoint_every"));
           }},
          {"holdout_frac",
           [&](const std::string& v) {
             cfg.holdout_frac = parse_double(v, "holdout_frac");
           }},
          {"sample_steps",
           [&](const std::string& v) {
             cfg.sample_steps = static_cast<int>(parse_int(v, "sample_steps"));
           }},
      };

  std::stringstream ss(text);
  std::string line;
  while (std::getline(ss, line)) {
    const std::size_t hash = line.find('#');
    if (hash != std::string::npos) line = line.substr(0, hash);
    line = trim(line);
    if (line.empty()) continue;
    const std::size_t eq = line.find('=');
    if (eq == std::string::npos)
      throw ConfigError("config: expected 'key = value', got '" + line + "'");
    const std::string key = trim(line.substr(0, eq));
    const std::string value = trim(line.substr(eq + 1));
    const auto it = setters.find(key);
    if (it == setters.end()) {
      unknown.push_back(key);
      continue;
    }
    it->second(value);
  }
  if (!unknown.empty()) {
    std::string msg = "config: unknown keys:";
    for (const auto& k : unknown) msg += " " + k;
    throw ConfigError(msg);
  }
  return cfg;
}

RunConfig RunConfig::load_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("config: cannot open '" + path + "'");
  std::stringstream ss;
  ss << in.rdbuf();
  return parse(ss.str());
}

std::string RunConfig::render() const {
  std::ostringstream o;
  o << "# score-based representation lab run configuration\n";
  o << "dataset = " << dataset << "\n";
  o << "dataset_n = " << dataset_n << "\n";
  o << "dataset_radius = " << format_double(dataset_radius) << "\n";
  o << "dataset_noise = " << format_double(dataset_noise) << "\n";
  o << "idx_images = " << idx_images << "\n";
  o << "idx_labels = " << idx_labels << "\n";
  o << "idx_pool = " << idx_pool << "\n";
  o << "sigma_min = " << format_double(sigma_min) << "\n";
  o << "sigma_max = " << format_double(sigma_max) << "\n";
  o << "horizon = " << format_double(horizon) << "\n";
  o << "t_floor = " << format_double(t_floor) << "\n";
  o << "widths = " << render_widths(widths) << "\n";
  o << "time_embed_dim = " << time_embed_dim << "\n";
  o << "d_z = " << d_z << "\n";
  o << "encoder_mode = " << encoder_mode << "\n";
  o << "reg_weight = " << (reg_weight ? format_double(*reg_weight) : "auto")
    << "\n";
  o << "time_weighting = " << time_weighting << "\n";
  o << "fixed_t = " << (fixed_t ? format_double(*fixed_t) : "none") << "\n";
  o << "phase1_iters = " << phase1_iters << "\n";
  o << "phase2_iters = " << phase2_iters << "\n";
  o << "batch_size = " << batch_size << "\n";
  o << "lr = " << format_double(lr) << "\n";
  o << "seed = " << seed << "\n";
  o << "out_dir = " << out_dir << "\n";
  o << "checkpoint_every = " << checkpoint_every << "\n";
  o << "holdout_frac = " << format_double(holdout_frac) << "\n";
  o << "sample_steps = " << sample_steps << "\n";
  return o.str();
}

void RunConfig::validate() const {
  const bool toy = dataset.rfind("mixture-", 0) == 0 ||
                   dataset == "two-moons" || dataset == "rings";
  if (!toy && dataset != "idx")
    throw ConfigError("config: unknown dataset '" + dataset + "'");
  if (dataset == "idx" && (idx_images.empty() || idx_labels.empty()))
    throw ConfigError("config: dataset=idx requires idx_images and idx_labels");
  if (dataset_n < 1) throw ConfigError("config: dataset_n must be >= 1");
  if (idx_pool < 1) throw ConfigError("config: idx_pool must be >= 1");
  sde().validate();
  if (widths.empty()) throw ConfigError("config: widths must be non-empty");
  for (int w : widths)
    if (w < 1) throw ConfigError("config: widths must be positive");
  if (time_embed_dim < 2 || time_embed_dim % 2 != 0)
    throw ConfigError("config: time_embed_dim must be even and >= 2");
  if (d_z < 1) throw ConfigError("config: d_z must be >= 1");
  if (encoder_mode != "l1" && encoder_mode != "kl")
    throw ConfigError("config: encoder_mode must be l1 or kl");
  if (reg_weight && !(*reg_weight >= 0.0))
    throw ConfigError("config: reg_weight must be >= 0");
  weighting().validate(sde());
  if (phase1_iters < 0 || phase2_iters < 0)
    throw ConfigError("config: iteration counts must be >= 0");
  if (batch_size < 1) throw ConfigError("config: batch_size must be >= 1");
  if (!(lr > 0.0)) throw ConfigError("config: lr must be positive");
  if (checkpoint_every < 1)
    throw ConfigError("config: checkpoint_every must be >= 1");
  if (!(holdout_frac >= 0.0 && holdout_frac < 1.0))
    throw ConfigError("config: holdout_frac must be in [0, 1)");
  if (sample_steps < 1) throw ConfigError("config: sample_steps must be >= 1");
}

sde::SdeConfig RunConfig::sde() const {
  sde::SdeConfig c;
  c.sigma_min = sigma_min;
  c.sigma_max = sigma_max;
  c.horizon = horizon;
  c.t_floor = t_floor;
  return c;
}

models::EncoderMode RunConfig::encoder_mode_enum() const {
  if (encoder_mode == "l1") return models::EncoderMode::kDeterministicL1;
  if (encoder_mode == "kl") return models::EncoderMode::kProbabilisticKL;
  throw ConfigError("config: encoder_mode must be l1 or kl");
}

objectives::TimeWeighting RunConfig::weighting() const {
  objectives::TimeWeighting tw;
  if (time_weighting == "uniform-t")
    tw.mode = objectives::TimeWeighting::Mode::kUniformT;
  else if (time_weighting == "uniform-sigma")
    tw.mode = objectives::TimeWeighting::Mode::kUniformSigma;
  else if (time_weighting == "fixed-t")
    tw.mode = objectives::TimeWeighting::Mode::kFixedT;
  else
    throw ConfigError("config: unknown time_weighting '" + time_weighting +
                      "'");
  tw.fixed_t = fixed_t;
  return tw;
}

train::TrainOptions RunConfig::train_options() const {
  train::TrainOptions opt;
  opt.widths = widths;
  opt.d_z = d_z;
  opt.time_embed_dim = time_embed_dim;
  opt.encoder_mode = encoder_mode_enum();
  opt.reg_weight = reg_weight;
  opt.weighting = weighting();
  opt.phase1_iters = phase1_iters;
  opt.phase2_iters = phase2_iters;
  opt.batch_size = batch_size;
  opt.lr = lr;
  opt.seed = seed;
  opt.snapshot_every = checkpoint_every;
  return opt;
}

}  // namespace scorelab::cli
