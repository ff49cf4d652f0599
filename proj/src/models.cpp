#include "dvse/models.hpp"

#include <cmath>
#include <stdexcept>

namespace dvse {

using nn::Tensor;

DvseModel::DvseModel(const DvseConfig& cfg, std::uint64_t init_seed)
    : cfg_(cfg) {
  std::mt19937_64 rng(init_seed);
  const int emb = cfg.noise.embed_dim;
  const int core_in = 2 * emb;
  const auto& ch = cfg.noise.core_hidden;

  emb_a_w_ = store_.add("noise.emb_a.w", nn::init_uniform({kFeatPerSensor, emb}, kFeatPerSensor, rng));
  emb_a_b_ = store_.add("noise.emb_a.b", Tensor::param({emb}, std::vector<double>(emb, 0.0)));
  emb_g_w_ = store_.add("noise.emb_g.w", nn::init_uniform({kFeatPerSensor, emb}, kFeatPerSensor, rng));
  emb_g_b_ = store_.add("noise.emb_g.b", Tensor::param({emb}, std::vector<double>(emb, 0.0)));

  if (cfg.noise.core == "gru") {
    gru_[0] = nn::make_gru(store_, "noise.gru0", core_in, ch[0], rng);
    gru_[1] = nn::make_gru(store_, "noise.gru1", ch[0], ch[1], rng);
  } else if (cfg.noise.core == "lstm") {
    lstm_[0] = nn::make_lstm(store_, "noise.lstm0", core_in, ch[0], rng);
    lstm_[1] = nn::make_lstm(store_, "noise.lstm1", ch[0], ch[1], rng);
  } else if (cfg.noise.core == "tcn") {
    noise_tcn_[0] = nn::make_temporal_block(store_, "noise.tcn0", core_in, ch[0], 3, 2, 1, rng);
    noise_tcn_[1] = nn::make_temporal_block(store_, "noise.tcn1", ch[0], ch[1], 3, 2, 2, rng);
  } else {
    throw std::invalid_argument("DvseModel: unknown core " + cfg.noise.core);
  }

  const int reg = cfg.noise.regression_hidden;
  nhead0_w_ = store_.add("noise.head0.w", nn::init_uniform({ch[1] + 1, reg}, ch[1] + 1, rng));
  nhead0_b_ = store_.add("noise.head0.b", Tensor::param({reg}, std::vector<double>(reg, 0.0)));
  nhead1_w_ = store_.add("noise.head1.w", nn::init_uniform({reg, 1}, reg, rng));
  nhead1_b_ = store_.add("noise.head1.b", Tensor::param({1}, {0.0}));

  const auto& m = cfg.mtn;
  int cin = 6;
  for (int b = 0; b < m.blocks; ++b) {
    mtn_blocks_.push_back(nn::make_temporal_block(
        store_, "mtn.b" + std::to_string(b), cin, m.channels,
        m.layers_per_block, m.kernel, 1 << b, rng));
    cin = m.channels;
  }
  mhead0_w_ = store_.add("mtn.head0.w", nn::init_uniform({m.channels, m.head_hidden}, m.channels, rng));
  mhead0_b_ = store_.add("mtn.head0.b", Tensor::param({m.head_hidden}, std::vector<double>(m.head_hidden, 0.0)));
  mhead1_w_ = store_.add("mtn.head1.w", nn::init_uniform({m.head_hidden, 3}, m.head_hidden, rng));
  mhead1_b_ = store_.add("mtn.head1.b", Tensor::param({3}, std::vector<double>(3, 0.0)));
}

std::vector<Tensor> DvseModel::core_forward(const std::vector<Tensor>& x) {
  const int n = x.front().rows();
  const auto& ch = cfg_.noise.core_hidden;
  std::vector<Tensor> out;
  out.reserve(x.size());
  if (cfg_.noise.core == "gru") {
    Tensor h0 = Tensor::zeros({n, ch[0]});
    Tensor h1 = Tensor::zeros({n, ch[1]});
    for (const auto& xt : x) {
      h0 = nn::gru_cell(xt, h0, gru_[0]);
      h1 = nn::gru_cell(h0, h1, gru_[1]);
      out.push_back(h1);
    }
  } else if (cfg_.noise.core == "lstm") {
    Tensor h0 = Tensor::zeros({n, ch[0]}), c0 = Tensor::zeros({n, ch[0]});
    Tensor h1 = Tensor::zeros({n, ch[1]}), c1 = Tensor::zeros({n, ch[1]});
    for (const auto& xt : x) {
      std::tie(h0, c0) = nn::lstm_cell(xt, h0, c0, lstm_[0]);
      std::tie(h1, c1) = nn::lstm_cell(h0, h1, c1, lstm_[1]);
      out.push_back(h1);
    }
  } else {
    out = nn::temporal_block(x, noise_tcn_[0]);
    out = nn::temporal_block(out, noise_tcn_[1]);
  }
  return out;
}

std::vector<Tensor> DvseModel::noise_forward(const std::vector<Tensor>& feat_steps,
                                             const Tensor& v_ref) {
  std::vector<Tensor> embedded;
  embedded.reserve(feat_steps.size());
  for (const auto& f : feat_steps) {
    Tensor acc = nn::slice_cols(f, 0, kFeatPerSensor);
    Tensor gyr = nn::slice_cols(f, kFeatPerSensor, kFeatPerSensor);
    Tensor ea = nn::relu(nn::fc(acc, emb_a_w_, emb_a_b_));
    Tensor eg = nn::relu(nn::fc(gyr, emb_g_w_, emb_g_b_));
    embedded.push_back(nn::concat_cols({ea, eg}));
  }
  std::vector<Tensor> core = core_forward(embedded);
  Tensor vr = nn::scale(v_ref, 1.0 / kVrefScale);
  std::vector<Tensor> out;
  out.reserve(core.size());
  for (const auto& h : core) {
    Tensor r = nn::relu(nn::fc(nn::concat_cols({h, vr}), nhead0_w_, nhead0_b_));
    out.push_back(nn::fc(r, nhead1_w_, nhead1_b_));
  }
  return out;
}

std::vector<Tensor> DvseModel::mtn_forward(const std::vector<Tensor>& preint_steps) {
  const int n = preint_steps.front().rows();
  Tensor gravity_cols = Tensor::constant({n, 3}, [n]() {
    std::vector<double> d(n * 3, 0.0);
    for (int i = 0; i < n; ++i) d[i * 3 + 2] = 1.0;  // g / 9.81
    return d;
  }());
  std::vector<Tensor> x;
  x.reserve(preint_steps.size());
  for (const auto& p : preint_steps) {
    x.push_back(nn::concat_cols({nn::scale(p, 1.0 / kPreintScale), gravity_cols}));
  }
  for (const auto& block : mtn_blocks_) x = nn::temporal_block(x, block);
  std::vector<Tensor> theta;
  theta.reserve(x.size());
  for (const auto& h : x) {
    Tensor r = nn::relu(nn::fc(h, mhead0_w_, mhead0_b_));
    theta.push_back(nn::scale(nn::tanh_op(nn::fc(r, mhead1_w_, mhead1_b_)), M_PI));
  }
  return theta;
}

Tensor rotated_forward_delta(const Tensor& alpha, const Tensor& beta,
                             const Tensor& gamma, const Tensor& ix,
                             const Tensor& iy, const Tensor& iz) {
  using namespace nn;
  Tensor sa = sin_op(alpha), ca = cos_op(alpha);
  Tensor sb = sin_op(beta), cb = cos_op(beta);
  Tensor sg = sin_op(gamma), cg = cos_op(gamma);
  // y-row of R_x(a) R_y(b) R_z(g).
  Tensor r10 = add(mul(ca, sg), mul(sa, mul(sb, cg)));
  Tensor r11 = sub(mul(ca, cg), mul(sa, mul(sb, sg)));
  Tensor r12 = scale(mul(sa, cb), -1.0);
  return add(add(mul(r10, ix), mul(r11, iy)), mul(r12, iz));
}

Tensor DvseModel::forward_dv(const std::vector<Tensor>& feat_steps,
                             const std::vector<Tensor>& preint_steps,
                             const Tensor& v_ref,
                             const std::optional<EulerAngles>& theta_override) {
  const size_t T = preint_steps.size();
  const int n = preint_steps.front().rows();

  std::vector<Tensor> theta;
  if (theta_override) {
    Tensor fixed = Tensor::constant({n, 3}, [&]() {
      std::vector<double> d(n * 3);
      for (int i = 0; i < n; ++i) {
        d[i * 3 + 0] = theta_override->alpha;
        d[i * 3 + 1] = theta_override->beta;
        d[i * 3 + 2] = theta_override->gamma;
      }
      return d;
    }());
    theta.assign(T, fixed);
  } else if (cfg_.use_mtn) {
    theta = mtn_forward(preint_steps);
  } else {
    theta.assign(T, Tensor::zeros({n, 3}));
  }

  std::vector<Tensor> noise;
  if (cfg_.use_noise_net) {
    if (feat_steps.size() != T) {
      throw nn::ShapeError("forward_dv: feature/preint step count mismatch");
    }
    noise = noise_forward(feat_steps, v_ref);
  }

  std::vector<Tensor> dv_steps;
  dv_steps.reserve(T);
  for (size_t t = 0; t < T; ++t) {
    Tensor a = nn::slice_cols(theta[t], 0, 1);
    Tensor b = nn::slice_cols(theta[t], 1, 1);
    Tensor g = nn::slice_cols(theta[t], 2, 1);
    Tensor ix = nn::slice_cols(preint_steps[t], 0, 1);
    Tensor iy = nn::slice_cols(preint_steps[t], 1, 1);
    Tensor iz = nn::slice_cols(preint_steps[t], 2, 1);
    Tensor dv = rotated_forward_delta(a, b, g, ix, iy, iz);
    if (cfg_.use_noise_net) dv = nn::add(dv, noise[t]);
    dv_steps.push_back(dv);
  }
  return nn::concat_cols(dv_steps);
}

std::vector<double> infer_autoregressive(DvseModel& model,
                                         const Normalizer& normalizer,
                                         const ImuStream& imu, double v0,
                                         const InferOptions& opts) {
  if (v0 < 0) throw std::invalid_argument("infer_autoregressive: v0 must be >= 0");
  auto acc_windows = window_1s(imu.accel);
  auto gyr_windows = window_1s(imu.gyro);
  const int seconds = static_cast<int>(acc_windows.size());
  if (seconds < kWindowSeconds) {
    throw std::invalid_argument("infer_autoregressive: stream shorter than 10 s");
  }
  const int n_windows = seconds / kWindowSeconds;

  std::vector<double> speeds;
  speeds.reserve(n_windows * kWindowSeconds);
  double v_ref = v0;
  for (int w = 0; w < n_windows; ++w) {
    std::vector<Tensor> feat_steps, preint_steps;
    for (int s = 0; s < kWindowSeconds; ++s) {
      const int k = w * kWindowSeconds + s;
      auto af = extract_features(acc_windows[k]);
      auto gf = extract_features(gyr_windows[k]);
      std::vector<double> row(af.begin(), af.end());
      row.insert(row.end(), gf.begin(), gf.end());
      feat_steps.push_back(Tensor::constant({1, 36}, normalizer.apply(row)));
      const Vec3 I = preintegrate(acc_windows[k]).I;
      preint_steps.push_back(Tensor::constant({1, 3}, {I.x(), I.y(), I.z()}));
    }
    Tensor vr = Tensor::constant({1, 1}, {v_ref});
    Tensor dv = model.forward_dv(feat_steps, preint_steps, vr, opts.theta_override);
    double prefix = 0.0;
    for (int s = 0; s < kWindowSeconds; ++s) {
      prefix += dv.data()[s];
      speeds.push_back(std::max(0.0, v_ref + prefix));
    }
    v_ref = speeds.back();
  }
  return speeds;
}

}  // namespace dvse
