#include "dvse/trainer.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <ostream>
#include <random>
#include <stdexcept>

namespace dvse {
namespace {

std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

std::uint64_t derive_seed(std::uint64_t base, std::uint64_t stream) {
  return splitmix64(base ^ splitmix64(stream));
}

std::vector<double> window_feature_row(std::span<const Vec3> acc,
                                       std::span<const Vec3> gyr) {
  auto af = extract_features(acc);
  auto gf = extract_features(gyr);
  std::vector<double> row(af.begin(), af.end());
  row.insert(row.end(), gf.begin(), gf.end());
  return row;
}

}  // namespace

std::vector<WindowRef> build_windows(const std::vector<Trajectory>& trajs) {
  std::vector<WindowRef> out;
  for (int i = 0; i < static_cast<int>(trajs.size()); ++i) {
    const Trajectory& traj = trajs[i];
    const int dur = traj.duration_s();
    for (size_t k = 0; k < traj.gnss.t.size(); ++k) {
      if (traj.gnss.t[k] != static_cast<int>(k) + 1) {
        throw std::invalid_argument("build_windows: non-contiguous GNSS ticks");
      }
    }
    for (int s = 1; s + kWindowSeconds <= dur; s += kWindowSeconds) {
      out.push_back(WindowRef{i, s});
    }
  }
  return out;
}

SplitPlan split(const std::vector<Trajectory>& trajs, SplitMode mode,
                std::uint64_t seed) {
  SplitPlan plan;
  plan.mode = mode;
  plan.seed = seed;
  std::mt19937_64 rng(splitmix64(seed));
  if (mode == SplitMode::kTraditional) {
    std::vector<WindowRef> all = build_windows(trajs);
    std::shuffle(all.begin(), all.end(), rng);
    const size_t n = all.size();
    const size_t n_train = static_cast<size_t>(0.7 * n);
    const size_t n_val = static_cast<size_t>(0.1 * n);
    plan.train.assign(all.begin(), all.begin() + n_train);
    plan.val.assign(all.begin() + n_train, all.begin() + n_train + n_val);
    plan.test.assign(all.begin() + n_train + n_val, all.end());
  } else {
    if (trajs.size() < 5) {
      throw std::invalid_argument("split: trajectory mode needs >= 5 trajectories");
    }
    std::vector<int> ids(trajs.size());
    std::iota(ids.begin(), ids.end(), 0);
    std::shuffle(ids.begin(), ids.end(), rng);
    const size_t n_test = static_cast<size_t>(0.2 * ids.size());
    plan.test_trajectories.assign(ids.begin(), ids.begin() + n_test);
    std::sort(plan.test_trajectories.begin(), plan.test_trajectories.end());

    std::vector<WindowRef> rest;
    std::vector<WindowRef> all = build_windows(trajs);
    for (const auto& w : all) {
      if (std::binary_search(plan.test_trajectories.begin(),
                             plan.test_trajectories.end(), w.traj)) {
        plan.test.push_back(w);
      } else {
        rest.push_back(w);
      }
    }
    std::shuffle(rest.begin(), rest.end(), rng);
    const size_t n_train = static_cast<size_t>(0.8 * rest.size());
    plan.train.assign(rest.begin(), rest.begin() + n_train);
    plan.val.assign(rest.begin() + n_train, rest.end());
  }
  return plan;
}

nn::Tensor compute_loss(const nn::Tensor& dv_hat, const nn::Tensor& dv_target,
                        double lambda) {
  if (lambda < 0.0 || lambda > 1.0) {
    throw std::invalid_argument("compute_loss: lambda must be in [0, 1]");
  }
  nn::Tensor l_dv = nn::smooth_l1(dv_hat, dv_target);
  nn::Tensor l_v = nn::smooth_l1(nn::cumsum_cols(dv_hat), nn::cumsum_cols(dv_target));
  return nn::add(nn::scale(l_dv, lambda), nn::scale(l_v, 1.0 - lambda));
}

std::pair<nn::Tensor, int> loss_match(const nn::Tensor& dv_hat,
                                      const nn::Tensor& dv_target,
                                      double lambda) {
  const int T = dv_hat.cols();
  if (T < 2) throw std::invalid_argument("loss_match: needs T >= 2");
  nn::Tensor aligned = compute_loss(nn::slice_cols(dv_hat, 1, T - 1),
                                    nn::slice_cols(dv_target, 1, T - 1), lambda);
  nn::Tensor shifted = compute_loss(nn::slice_cols(dv_hat, 0, T - 1),
                                    nn::slice_cols(dv_target, 1, T - 1), lambda);
  return nn::minimum(aligned, shifted);
}

WindowBatch assemble_batch(const std::vector<Trajectory>& trajs,
                           const std::vector<WindowRef>& refs,
                           const Normalizer& normalizer, const Mat3* rotation) {
  const int n = static_cast<int>(refs.size());
  const int T = kWindowSeconds;
  WindowBatch batch;
  std::vector<std::vector<double>> feat(T, std::vector<double>(n * 36));
  std::vector<std::vector<double>> preint(T, std::vector<double>(n * 3));
  std::vector<double> vref(n);
  std::vector<double> target(n * T);

  std::vector<Vec3> acc(kSampleHz), gyr(kSampleHz);
  for (int i = 0; i < n; ++i) {
    const Trajectory& traj = trajs[refs[i].traj];
    const int s = refs[i].start_second;
    vref[i] = traj.gnss.speed[s - 1];
    for (int t = 0; t < T; ++t) {
      target[i * T + t] = traj.gnss.speed[s + t] - traj.gnss.speed[s + t - 1];
      const int base = (s + t) * kSampleHz;
      for (int j = 0; j < kSampleHz; ++j) {
        acc[j] = traj.imu.accel[base + j];
        gyr[j] = traj.imu.gyro[base + j];
        if (rotation) {
          acc[j] = *rotation * acc[j];
          gyr[j] = *rotation * gyr[j];
        }
      }
      std::vector<double> row = normalizer.apply(window_feature_row(acc, gyr));
      std::copy(row.begin(), row.end(), feat[t].begin() + i * 36);
      const Vec3 I = preintegrate(acc).I;
      for (int a = 0; a < 3; ++a) preint[t][i * 3 + a] = I[a];
    }
  }
  for (int t = 0; t < T; ++t) {
    batch.feat_steps.push_back(nn::Tensor::constant({n, 36}, std::move(feat[t])));
    batch.preint_steps.push_back(nn::Tensor::constant({n, 3}, std::move(preint[t])));
  }
  batch.v_ref = nn::Tensor::constant({n, 1}, std::move(vref));
  batch.dv_target = nn::Tensor::constant({n, T}, std::move(target));
  return batch;
}

namespace {

double eval_split_loss(DvseModel& model, const std::vector<Trajectory>& trajs,
                       const std::vector<WindowRef>& refs,
                       const Normalizer& norm, const TrainConfig& cfg) {
  if (refs.empty()) return 0.0;
  double total = 0.0;
  size_t count = 0;
  for (size_t off = 0; off < refs.size(); off += cfg.batch_size) {
    const size_t m = std::min<size_t>(cfg.batch_size, refs.size() - off);
    std::vector<WindowRef> chunk(refs.begin() + off, refs.begin() + off + m);
    WindowBatch b = assemble_batch(trajs, chunk, norm);
    nn::Tensor dv = model.forward_dv(b.feat_steps, b.preint_steps, b.v_ref);
    nn::Tensor loss = cfg.loss_matching
                          ? loss_match(dv, b.dv_target, cfg.lambda).first
                          : compute_loss(dv, b.dv_target, cfg.lambda);
    total += loss.item() * m;
    count += m;
  }
  return total / count;
}

}  // namespace

TrainResult train(const std::vector<Trajectory>& trajs, const TrainConfig& cfg,
                  std::ostream* metrics) {
  TrainResult result;
  result.split = split(trajs, cfg.split_mode, cfg.seed);
  if (result.split.train.empty()) {
    throw std::invalid_argument("train: empty training split");
  }

  // Normalizer statistics from un-augmented training windows only.
  {
    std::vector<std::vector<double>> rows;
    rows.reserve(result.split.train.size() * kWindowSeconds);
    for (const auto& w : result.split.train) {
      const Trajectory& traj = trajs[w.traj];
      for (int t = 0; t < kWindowSeconds; ++t) {
        const int base = (w.start_second + t) * kSampleHz;
        rows.push_back(window_feature_row(
            std::span<const Vec3>(traj.imu.accel).subspan(base, kSampleHz),
            std::span<const Vec3>(traj.imu.gyro).subspan(base, kSampleHz)));
      }
    }
    result.normalizer = fit_normalizer(rows);
  }

  DvseConfig mcfg;
  mcfg.noise.core = cfg.core;
  mcfg.use_noise_net = cfg.use_noise_net;
  mcfg.use_mtn = cfg.use_mtn;
  result.model = std::make_unique<DvseModel>(mcfg, derive_seed(cfg.seed, 7));
  DvseModel& model = *result.model;

  nn::AdamState adam;
  nn::adam_init(adam, model.store());
  nn::EmaState ema;
  nn::ema_init(ema, model.store(), cfg.ema_decay);
  nn::EarlyStopper stopper{cfg.patience, cfg.min_delta};

  const long steps_per_epoch =
      (result.split.train.size() + cfg.batch_size - 1) / cfg.batch_size;
  const long t_max = cfg.t_max > 0 ? cfg.t_max : cfg.max_epochs * steps_per_epoch;

  std::map<std::string, std::vector<double>> best_shadow = ema.shadow;
  double best_val = std::numeric_limits<double>::infinity();

  std::vector<WindowRef> order = result.split.train;
  for (int epoch = 1; epoch <= cfg.max_epochs; ++epoch) {
    std::mt19937_64 shuffle_rng(derive_seed(cfg.seed, 1000 + epoch));
    std::shuffle(order.begin(), order.end(), shuffle_rng);

    double train_loss = 0.0;
    size_t seen = 0;
    long shifted_batches = 0, total_batches = 0;
    double last_lr = cfg.lr;
    for (size_t off = 0; off < order.size(); off += cfg.batch_size) {
      const size_t m = std::min<size_t>(cfg.batch_size, order.size() - off);
      std::vector<WindowRef> chunk(order.begin() + off, order.begin() + off + m);

      const Mat3* rot = nullptr;
      Mat3 r;
      if (cfg.augmentation) {
        std::mt19937_64 arng(
            derive_seed(cfg.seed, 2000000ULL + epoch * 100000ULL + off));
        r = random_rotation(arng, cfg.aug_ranges).second;
        rot = &r;
      }
      WindowBatch b = assemble_batch(trajs, chunk, result.normalizer, rot);
      nn::Tensor dv = model.forward_dv(b.feat_steps, b.preint_steps, b.v_ref);
      nn::Tensor loss;
      if (cfg.loss_matching) {
        auto [l, which] = loss_match(dv, b.dv_target, cfg.lambda);
        loss = l;
        shifted_batches += which;
      } else {
        loss = compute_loss(dv, b.dv_target, cfg.lambda);
      }
      ++total_batches;
      train_loss += loss.item() * m;
      seen += m;

      model.store().zero_grads();
      loss.backward();
      last_lr = nn::cosine_lr(adam.t, t_max, cfg.lr, cfg.eta_min);
      nn::adam_step(model.store(), adam, last_lr);
      nn::ema_update(ema, model.store());
    }
    train_loss /= seen;

    // Validation with the EMA shadow weights (the evaluation weights).
    std::map<std::string, std::vector<double>> saved;
    for (auto& [name, t] : model.store().params) saved[name] = t.data();
    nn::ema_apply(ema, model.store());
    const double val_loss =
        eval_split_loss(model, trajs, result.split.val, result.normalizer, cfg);
    for (auto& [name, t] : model.store().params) t.data() = saved.at(name);

    EpochStats stats;
    stats.epoch = epoch;
    stats.train_loss = train_loss;
    stats.val_loss = val_loss;
    stats.lr = last_lr;
    stats.matched_branch_fraction =
        total_batches > 0 ? static_cast<double>(shifted_batches) / total_batches : 0.0;
    result.epochs.push_back(stats);
    if (metrics) {
      (*metrics) << "{\"epoch\":" << epoch << ",\"train_loss\":" << train_loss
                 << ",\"val_loss\":" << val_loss << ",\"lr\":" << last_lr
                 << ",\"matched_branch_fraction\":"
                 << stats.matched_branch_fraction << "}\n";
    }

    const bool stop = stopper.update(val_loss);
    if (stopper.improved_last) {
      best_shadow = ema.shadow;
      best_val = val_loss;
    }
    if (stop) break;
  }

  if (!std::isfinite(best_val)) {
    best_shadow = ema.shadow;
    best_val = result.epochs.empty() ? 0.0 : result.epochs.back().val_loss;
  }
  for (auto& [name, t] : model.store().params) t.data() = best_shadow.at(name);
  result.best_val_loss = best_val;
  return result;
}

}  // namespace dvse
