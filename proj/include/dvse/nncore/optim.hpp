#pragma once

#include <limits>
#include <map>
#include <string>
#include <vector>

#include "dvse/nncore/layers.hpp"

namespace dvse::nn {

/// lr = eta_min + 0.5 (base - eta_min)(1 + cos(pi * step / t_max));
/// steps past t_max clamp to eta_min.
double cosine_lr(long step, long t_max, double base_lr, double eta_min);

struct AdamConfig {
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
};

struct AdamState {
  std::map<std::string, std::vector<double>> m;
  std::map<std::string, std::vector<double>> v;
  long t = 0;
};

void adam_init(AdamState& state, const ParameterStore& store);

/// One bias-corrected Adam update over every parameter in the store.
/// Throws if a parameter has no gradient, naming it.
void adam_step(ParameterStore& store, AdamState& state, double lr,
               const AdamConfig& cfg = {});

struct EmaState {
  std::map<std::string, std::vector<double>> shadow;
  double decay = 0.999;
};

void ema_init(EmaState& state, const ParameterStore& store, double decay);
void ema_update(EmaState& state, const ParameterStore& store);
/// Writes the shadow weights into the store (the evaluation weights).
void ema_apply(const EmaState& state, ParameterStore& store);

struct EarlyStopper {
  int patience = 10;
  double min_delta = 1e-4;
  double best = std::numeric_limits<double>::infinity();
  int epochs_since_best = 0;

  /// Feeds one validation metric; returns true when training should stop.
  /// improved() reports whether this call set a new best.
  bool update(double val_metric);
  bool improved_last = false;
};

}  // namespace dvse::nn
