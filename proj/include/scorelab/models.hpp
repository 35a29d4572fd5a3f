#pragma once

#include <string>
#include <utility>
#include <vector>

#include "scorelab/rng.hpp"
#include "scorelab/sde.hpp"
#include "scorelab/tensor.hpp"

namespace scorelab::models {

using numcore::Rng;
using numcore::Tensor;

// Sinusoidal features sin/cos(t * w_k) over a geometric frequency ladder.
// Deterministic and injective on any finite grid in [t_floor, T].
struct TimeEmbedding {
  int dim = 32;  // even
  double freq_min = 1.0;
  double freq_max = 1000.0;

  Tensor operator()(const std::vector<double>& t) const;  // [n, dim]
};

struct Dense {
  Tensor weight;  // [in, out]
  Tensor bias;    // [out]
};

// Conditional score network s(x_t, t, z): an MLP trunk over x_t where every
// hidden layer receives an additive bias projected from the time embedding
// and from a re-expanded latent code. The raw output is divided by sigma(t)
// so the network itself works on O(1) targets across the noise range.
class ScoreModel {
 public:
  ScoreModel(std::size_t data_dim, std::vector<int> widths, int latent_dim,
             sde::SdeConfig sde_cfg, int time_embed_dim, Rng& rng);

  // x_t: [batch, d]; t: batch times; z: [batch, d_z]. Returns [batch, d].
  Tensor forward(const Tensor& x_t, const std::vector<double>& t,
                 const Tensor& z) const;

  Tensor zero_latent(std::size_t batch) const;

  // Zeroes the per-layer latent projections: the network then reduces
  // exactly to its unconditional form (ablation switch).
  void zero_latent_conditioning();

  std::vector<std::pair<std::string, Tensor>> named_parameters() const;
  std::vector<Tensor> parameters() const;

  std::size_t data_dim() const { return data_dim_; }
  int latent_dim() const { return latent_dim_; }
  const std::vector<int>& widths() const { return widths_; }
  const sde::SdeConfig& sde_config() const { return sde_; }
  const TimeEmbedding& time_embedding() const { return embed_; }

 private:
  std::size_t data_dim_;
  std::vector<int> widths_;
  int latent_dim_;
  sde::SdeConfig sde_;
  TimeEmbedding embed_;
  std::vector<Dense> trunk_;
  std::vector<Tensor> time_proj_;  // [embed dim, width] per hidden layer
  std::vector<Tensor> z_proj_;     // [cond dim, width], zero-initialized
  std::vector<Dense> expand_;      // latent re-expansion, 4 dense layers
  Dense out_;                      // zero-initialized head
};

enum class EncoderMode {
  kDeterministicL1,
  kProbabilisticKL,
};

// mean over the batch of ||z||_1
Tensor l1_regularizer(const Tensor& z);
// mean over the batch of KL(N(mean, exp(logvar)) || N(0, I))
Tensor kl_regularizer(const Tensor& mean, const Tensor& logvar);

// E(x0): MLP trunk of the same depth as the score trunk, then three dense
// layers down to the latent space. Probabilistic mode keeps a second head for
// the log-variance and samples z by reparameterization.
class Encoder {
 public:
  Encoder(std::size_t data_dim, std::vector<int> trunk_widths, int latent_dim,
          EncoderMode mode, Rng& rng);

  struct Result {
    Tensor z;        // [batch, d_z]
    Tensor reg_raw;  // scalar: mean L1 norm or mean KL
    Tensor mean;     // [batch, d_z]
    Tensor logvar;   // defined in probabilistic mode only
  };

  Result encode(const Tensor& x0, Rng& rng) const;
  // Mean output only (deterministic regardless of mode).
  Tensor encode_mean(const Tensor& x0) const;

  std::vector<std::pair<std::string, Tensor>> named_parameters() const;
  std::vector<Tensor> parameters() const;

  EncoderMode mode() const { return mode_; }
  int latent_dim() const { return latent_dim_; }
  std::size_t data_dim() const { return data_dim_; }

 private:
  Tensor trunk_forward(const Tensor& x0) const;

  std::size_t data_dim_;
  int latent_dim_;
  EncoderMode mode_;
  std::vector<Dense> trunk_;
  std::vector<Dense> head_;  // two hidden dense layers
  Dense mean_head_;
  Dense logvar_head_;  // probabilistic mode only
};

}  // namespace scorelab::models
