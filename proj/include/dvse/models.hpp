#pragma once

#include <array>
#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "dvse/dataset.hpp"
#include "dvse/featkit.hpp"
#include "dvse/geom.hpp"
#include "dvse/nncore/layers.hpp"

namespace dvse {

inline constexpr int kWindowSeconds = 10;
inline constexpr double kVrefScale = 30.0;    // v_ref / 30 at the net input
inline constexpr double kPreintScale = 9.81;  // I / 9.81 at the net input

struct NoiseNetConfig {
  int embed_dim = 32;                      // per sensor
  std::string core = "gru";                // gru | lstm | tcn
  std::array<int, 2> core_hidden{32, 64};  // two stacked core layers
  int regression_hidden = 32;
};

struct MtnConfig {
  int blocks = 2;
  int layers_per_block = 3;
  int kernel = 2;
  int channels = 32;
  int head_hidden = 32;
};

struct DvseConfig {
  NoiseNetConfig noise;
  MtnConfig mtn;
  bool use_noise_net = true;  // off: disturbance term fixed to 0
  bool use_mtn = true;        // off: identity rotation
};

/// The two DVSE networks plus their composition into per-second forward
/// velocity deltas: dv_t = (R(theta_t) I_t) . [0,1,0] + N_t.
class DvseModel {
 public:
  DvseModel(const DvseConfig& cfg, std::uint64_t init_seed);

  const DvseConfig& config() const { return cfg_; }
  nn::ParameterStore& store() { return store_; }
  const nn::ParameterStore& store() const { return store_; }

  /// Per-second disturbance N_t. feat_steps: T tensors [n, 36] of normalized
  /// features; v_ref: [n, 1] in m/s.
  std::vector<nn::Tensor> noise_forward(const std::vector<nn::Tensor>& feat_steps,
                                        const nn::Tensor& v_ref);

  /// Per-second Euler angles, bounded to (-pi, pi) by pi*tanh.
  /// preint_steps: T tensors [n, 3] of raw acceleration integrals in m/s.
  std::vector<nn::Tensor> mtn_forward(const std::vector<nn::Tensor>& preint_steps);

  /// Composite forward: returns dv_hat [n, T]. theta_override replaces the
  /// MTN output with a fixed pose (used by oracles and ablation checks).
  nn::Tensor forward_dv(const std::vector<nn::Tensor>& feat_steps,
                        const std::vector<nn::Tensor>& preint_steps,
                        const nn::Tensor& v_ref,
                        const std::optional<EulerAngles>& theta_override = {});

 private:
  std::vector<nn::Tensor> core_forward(const std::vector<nn::Tensor>& x);

  DvseConfig cfg_;
  nn::ParameterStore store_;

  // Noise net.
  nn::Tensor emb_a_w_, emb_a_b_, emb_g_w_, emb_g_b_;
  nn::GruParams gru_[2];
  nn::LstmParams lstm_[2];
  nn::TemporalBlockParams noise_tcn_[2];
  nn::Tensor nhead0_w_, nhead0_b_, nhead1_w_, nhead1_b_;

  // Motion transformation net.
  std::vector<nn::TemporalBlockParams> mtn_blocks_;
  nn::Tensor mhead0_w_, mhead0_b_, mhead1_w_, mhead1_b_;
};

/// Forward-velocity delta from angles and integrals:
/// the y-row of R_x R_y R_z applied to I. All tensors [n, 1].
nn::Tensor rotated_forward_delta(const nn::Tensor& alpha, const nn::Tensor& beta,
                                 const nn::Tensor& gamma, const nn::Tensor& ix,
                                 const nn::Tensor& iy, const nn::Tensor& iz);

struct InferOptions {
  std::optional<EulerAngles> theta_override;
};

/// Slides a 10 s window with 10 s stride over the stream; window 1 seeds
/// v_ref = v0, later windows chain from the previous window's last estimate.
/// Output is clamped at >= 0; a trailing partial window is dropped.
std::vector<double> infer_autoregressive(DvseModel& model,
                                         const Normalizer& normalizer,
                                         const ImuStream& imu, double v0,
                                         const InferOptions& opts = {});

}  // namespace dvse
