#include "scorelab/models.hpp"

#include <cmath>

#include "scorelab/errors.hpp"

namespace scorelab::models {

namespace {

using numcore::add;
using numcore::add_row_bias;
using numcore::matmul;
using numcore::silu;

Dense make_dense(std::size_t in, std::size_t out, Rng& rng, bool zero_init) {
  Dense d;
  if (zero_init)
    d.weight = Tensor({in, out}, 0.0, true);
  else
    d.weight = Tensor::randn({in, out}, rng,
                             1.0 / std::sqrt(static_cast<double>(in)), true);
  d.bias = Tensor({out}, 0.0, true);
  return d;
}

Tensor dense_forward(const Dense& d, const Tensor& x) {
  return add_row_bias(matmul(x, d.weight), d.bias);
}

}  // namespace

Tensor TimeEmbedding::operator()(const std::vector<double>& t) const {
  if (dim < 2 || dim % 2 != 0)
    throw ConfigError("time embedding: dim must be even and >= 2");
  const std::size_t half = static_cast<std::size_t>(dim) / 2;
  std::vector<double> freqs(half, freq_min);
  if (half > 1) {
    const double ratio = freq_max / freq_min;
    for (std::size_t k = 0; k < half; ++k)
      freqs[k] = freq_min * std::pow(ratio, static_cast<double>(k) /
                                                static_cast<double>(half - 1));
  }
  const std::size_t n = t.size();
  std::vector<double> out(n * static_cast<std::size_t>(dim));
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t k = 0; k < half; ++k) {
      out[i * dim + 2 * k] = std::sin(freqs[k] * t[i]);
      out[i * dim + 2 * k + 1] = std::cos(freqs[k] * t[i]);
    }
  return Tensor({n, static_cast<std::size_t>(dim)}, std::move(out));
}

ScoreModel::ScoreModel(std::size_t data_dim, std::vector<int> widths,
                       int latent_dim, sde::SdeConfig sde_cfg,
                       int time_embed_dim, Rng& rng)
    : data_dim_(data_dim),
      widths_(std::move(widths)),
      latent_dim_(latent_dim),
      sde_(sde_cfg) {
  if (data_dim_ == 0) throw ConfigError("score model: data_dim must be > 0");
  if (widths_.empty()) throw ConfigError("score model: widths must be set");
  if (latent_dim_ < 1) throw ConfigError("score model: latent_dim must be >= 1");
  sde_.validate();
  embed_.dim = time_embed_dim;
  const std::size_t cond_dim = static_cast<std::size_t>(time_embed_dim);

  std::size_t in = data_dim_;
  for (int w : widths_) {
    if (w < 1) throw ConfigError("score model: widths must be positive");
    const auto width = static_cast<std::size_t>(w);
    trunk_.push_back(make_dense(in, width, rng, false));
    time_proj_.push_back(Tensor::randn(
        {cond_dim, width}, rng, 1.0 / std::sqrt(static_cast<double>(cond_dim)),
        true));
    z_proj_.push_back(Tensor({cond_dim, width}, 0.0, true));
    in = width;
  }
  out_ = make_dense(in, data_dim_, rng, true);

  std::size_t e_in = static_cast<std::size_t>(latent_dim_);
  for (int l = 0; l < 4; ++l) {
    expand_.push_back(make_dense(e_in, cond_dim, rng, false));
    e_in = cond_dim;
  }
}

Tensor ScoreModel::forward(const Tensor& x_t, const std::vector<double>& t,
                           const Tensor& z) const {
  if (x_t.rank() != 2 || x_t.cols() != data_dim_)
    throw DimensionError("score forward: x_t must be [batch," +
                         std::to_string(data_dim_) + "]");
  const std::size_t batch = x_t.rows();
  if (t.size() != batch)
    throw DimensionError("score forward: t length != batch");
  if (z.rank() != 2 || z.rows() != batch ||
      z.cols() != static_cast<std::size_t>(latent_dim_))
    throw DimensionError("score forward: z must be [batch," +
                         std::to_string(latent_dim_) + "]");

  const Tensor emb = embed_(t);

  Tensor rep = z;
  for (std::size_t l = 0; l < expand_.size(); ++l) {
    rep = dense_forward(expand_[l], rep);
    if (l + 1 < expand_.size()) rep = silu(rep);
  }

  Tensor h = x_t;
  for (std::size_t l = 0; l < trunk_.size(); ++l) {
    Tensor pre = dense_forward(trunk_[l], h);
    pre = add(pre, matmul(emb, time_proj_[l]));
    pre = add(pre, matmul(rep, z_proj_[l]));
    h = silu(pre);
  }
  Tensor raw = dense_forward(out_, h);

  std::vector<double> inv_sigma(batch);
  for (std::size_t i = 0; i < batch; ++i)
    inv_sigma[i] = 1.0 / sde::sigma(sde_, t[i]);
  return numcore::scale_rows(raw, Tensor({batch}, std::move(inv_sigma)));
}

Tensor ScoreModel::zero_latent(std::size_t batch) const {
  return Tensor({batch, static_cast<std::size_t>(latent_dim_)}, 0.0);
}

void ScoreModel::zero_latent_conditioning() {
  for (auto& p : z_proj_)
    std::fill(p.data(), p.data() + p.size(), 0.0);
}

std::vector<std::pair<std::string, Tensor>> ScoreModel::named_parameters()
    const {
  std::vector<std::pair<std::string, Tensor>> out;
  for (std::size_t l = 0; l < trunk_.size(); ++l) {
    const std::string base = "score.trunk" + std::to_string(l);
    out.emplace_back(base + ".W", trunk_[l].weight);
    out.emplace_back(base + ".b", trunk_[l].bias);
    out.emplace_back("score.cond" + std::to_string(l) + ".Wt", time_proj_[l]);
    out.emplace_back("score.cond" + std::to_string(l) + ".Wz", z_proj_[l]);
  }
  for (std::size_t l = 0; l < expand_.size(); ++l) {
    const std::string base = "score.expand" + std::to_string(l);
    out.emplace_back(base + ".W", expand_[l].weight);
    out.emplace_back(base + ".b", expand_[l].bias);
  }
  out.emplace_back("score.out.W", out_.weight);
  out.emplace_back("score.out.b", out_.bias);
  return out;
}

std::vector<Tensor> ScoreModel::parameters() const {
  std::vector<Tensor> out;
  for (auto& [name, t] : named_parameters()) out.push_back(t);
  return out;
}

Tensor l1_regularizer(const Tensor& z) {
  return numcore::mean(numcore::sum_rows(numcore::abs(z)));
}

Tensor kl_regularizer(const Tensor& mean, const Tensor& logvar) {
  using namespace numcore;
  // 0.5 * (exp(lv) + mean^2 - 1 - lv), summed over dims, averaged over batch
  Tensor term = sub(add(exp(logvar), square(mean)), add_scalar(logvar, 1.0));
  return mul_scalar(numcore::mean(sum_rows(term)), 0.5);
}

Encoder::Encoder(std::size_t data_dim, std::vector<int> trunk_widths,
                 int latent_dim, EncoderMode mode, Rng& rng)
    : data_dim_(data_dim), latent_dim_(latent_dim), mode_(mode) {
  if (data_dim_ == 0) throw ConfigError("encoder: data_dim must be > 0");
  if (trunk_widths.empty()) throw ConfigError("encoder: widths must be set");
  if (latent_dim_ < 1) throw ConfigError("encoder: latent_dim must be >= 1");
  std::size_t in = data_dim_;
  for (int w : trunk_widths) {
    if (w < 1) throw ConfigError("encoder: widths must be positive");
    trunk_.push_back(make_dense(in, static_cast<std::size_t>(w), rng, false));
    in = static_cast<std::size_t>(w);
  }
  const std::size_t head_width = 32;
  head_.push_back(make_dense(in, head_width, rng, false));
  head_.push_back(make_dense(head_width, head_width, rng, false));
  mean_head_ =
      make_dense(head_width, static_cast<std::size_t>(latent_dim_), rng, false);
  if (mode_ == EncoderMode::kProbabilisticKL)
    logvar_head_ = make_dense(head_width, static_cast<std::size_t>(latent_dim_),
                              rng, true);  // start at unit variance
}

Tensor Encoder::trunk_forward(const Tensor& x0) const {
  if (x0.rank() != 2 || x0.cols() != data_dim_)
    throw DimensionError("encoder: x0 must be [batch," +
                         std::to_string(data_dim_) + "]");
  Tensor h = x0;
  for (const auto& layer : trunk_) h = silu(dense_forward(layer, h));
  for (const auto& layer : head_) h = silu(dense_forward(layer, h));
  return h;
}

Encoder::Result Encoder::encode(const Tensor& x0, Rng& rng) const {
  Result res;
  const Tensor h = trunk_forward(x0);
  res.mean = dense_forward(mean_head_, h);
  if (mode_ == EncoderMode::kDeterministicL1) {
    res.z = res.mean;
    res.reg_raw = l1_regularizer(res.z);
    return res;
  }
  res.logvar = dense_forward(logvar_head_, h);
  Tensor eps = Tensor::randn(
      {x0.rows(), static_cast<std::size_t>(latent_dim_)}, rng);
  res.z = add(res.mean,
              numcore::mul(numcore::exp(numcore::mul_scalar(res.logvar, 0.5)),
                           eps));
  res.reg_raw = kl_regularizer(res.mean, res.logvar);
  return res;
}

Tensor Encoder::encode_mean(const Tensor& x0) const {
  return dense_forward(mean_head_, trunk_forward(x0));
}

std::vector<std::pair<std::string, Tensor>> Encoder::named_parameters() const {
  std::vector<std::pair<std::string, Tensor>> out;
  for (std::size_t l = 0; l < trunk_.size(); ++l) {
    const std::string base = "enc.trunk" + std::to_string(l);
    out.emplace_back(base + ".W", trunk_[l].weight);
    out.emplace_back(base + ".b", trunk_[l].bias);
  }
  for (std::size_t l = 0; l < head_.size(); ++l) {
    const std::string base = "enc.head" + std::to_string(l);
    out.emplace_back(base + ".W", head_[l].weight);
    out.emplace_back(base + ".b", head_[l].bias);
  }
  out.emplace_back("enc.mean.W", mean_head_.weight);
  out.emplace_back("enc.mean.b", mean_head_.bias);
  if (mode_ == EncoderMode::kProbabilisticKL) {
    out.emplace_back("enc.logvar.W", logvar_head_.weight);
    out.emplace_back("enc.logvar.b", logvar_head_.bias);
  }
  return out;
}

std::vector<Tensor> Encoder::parameters() const {
  std::vector<Tensor> out;
  for (auto& [name, t] : named_parameters()) out.push_back(t);
  return out;
}

}  // namespace scorelab::models
