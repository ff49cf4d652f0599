#pragma once

#include <cstdint>
#include <iosfwd>
#include <memory>
#include <string>
#include <vector>

#include "dvse/dataset.hpp"
#include "dvse/models.hpp"
#include "dvse/nncore/optim.hpp"

namespace dvse {

/// One training window: 10 supervised seconds starting after `start_second`.
/// The window covers seconds start+1 .. start+10; v_ref is the GNSS tick at
/// start_second.
struct WindowRef {
  int traj = 0;
  int start_second = 1;
};

enum class SplitMode { kTraditional, kTrajectory };

struct SplitPlan {
  SplitMode mode = SplitMode::kTrajectory;
  std::uint64_t seed = 0;
  std::vector<WindowRef> train;
  std::vector<WindowRef> val;
  std::vector<WindowRef> test;
  std::vector<int> test_trajectories;  // trajectory mode only
};

/// All complete windows of a trajectory set, 10 s stride.
std::vector<WindowRef> build_windows(const std::vector<Trajectory>& trajs);

/// traditional: pooled windows shuffled 70/10/20.
/// trajectory: 20% of trajectory ids to test, remaining windows 80/20.
SplitPlan split(const std::vector<Trajectory>& trajs, SplitMode mode,
                std::uint64_t seed);

/// L = lambda * SmoothL1(dv) + (1 - lambda) * SmoothL1(prefix sums), both
/// mean-reduced over [n, T].
nn::Tensor compute_loss(const nn::Tensor& dv_hat, const nn::Tensor& dv_target,
                        double lambda);

/// min(aligned loss on steps [1:T), shifted loss of x[0:T-1) vs y[1:T)).
/// Second result: 0 = aligned branch, 1 = shifted branch.
std::pair<nn::Tensor, int> loss_match(const nn::Tensor& dv_hat,
                                      const nn::Tensor& dv_target,
                                      double lambda);

struct TrainConfig {
  int batch_size = 64;
  double lr = 1e-3;
  long t_max = 0;  // 0: total training steps
  double eta_min = 1e-5;
  double ema_decay = 0.999;
  int patience = 10;
  double min_delta = 1e-4;
  double lambda = 0.7;
  int max_epochs = 60;
  bool augmentation = true;
  AngleRanges aug_ranges;
  bool loss_matching = true;
  bool use_noise_net = true;
  bool use_mtn = true;
  std::string core = "gru";
  SplitMode split_mode = SplitMode::kTrajectory;
  std::uint64_t seed = 1;
};

struct EpochStats {
  int epoch = 0;
  double train_loss = 0.0;
  double val_loss = 0.0;
  double lr = 0.0;
  double matched_branch_fraction = 0.0;  // fraction of batches on the
                                         // 1 s shifted branch
};

struct TrainResult {
  std::unique_ptr<DvseModel> model;  // best EMA weights applied
  Normalizer normalizer;
  std::vector<EpochStats> epochs;
  SplitPlan split;
  double best_val_loss = 0.0;
};

/// Full training loop: augment -> features/preintegration -> forward ->
/// delay-matched loss -> Adam with cosine schedule -> EMA, with early
/// stopping on the EMA validation loss. Emits one JSON object per epoch to
/// `metrics` when given.
TrainResult train(const std::vector<Trajectory>& trajs, const TrainConfig& cfg,
                  std::ostream* metrics = nullptr);

/// Batch tensors for a set of windows; exposed for tests and evaluation.
struct WindowBatch {
  std::vector<nn::Tensor> feat_steps;    // T x [n, 36], normalized
  std::vector<nn::Tensor> preint_steps;  // T x [n, 3], raw m/s
  nn::Tensor v_ref;                      // [n, 1]
  nn::Tensor dv_target;                  // [n, T]
};

/// Assembles a batch; when `rotation` is non-null every accel/gyro sample of
/// every window is rotated by it before feature extraction, so augmentation
/// recomputes features and integrals after rotation.
WindowBatch assemble_batch(const std::vector<Trajectory>& trajs,
                           const std::vector<WindowRef>& refs,
                           const Normalizer& normalizer,
                           const Mat3* rotation = nullptr);

}  // namespace dvse
