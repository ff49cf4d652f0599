#include "dvse/nncore/optim.hpp"

#include <cmath>
#include <stdexcept>

namespace dvse::nn {

double cosine_lr(long step, long t_max, double base_lr, double eta_min) {
  if (step < 0) throw std::invalid_argument("cosine_lr: negative step");
  if (step >= t_max) return eta_min;
  return eta_min +
         0.5 * (base_lr - eta_min) *
             (1.0 + std::cos(M_PI * static_cast<double>(step) / t_max));
}

void adam_init(AdamState& state, const ParameterStore& store) {
  state.t = 0;
  state.m.clear();
  state.v.clear();
  for (const auto& [name, t] : store.params) {
    state.m[name].assign(t.numel(), 0.0);
    state.v[name].assign(t.numel(), 0.0);
  }
}

void adam_step(ParameterStore& store, AdamState& state, double lr,
               const AdamConfig& cfg) {
  state.t += 1;
  const double bc1 = 1.0 - std::pow(cfg.beta1, static_cast<double>(state.t));
  const double bc2 = 1.0 - std::pow(cfg.beta2, static_cast<double>(state.t));
  for (auto& [name, p] : store.params) {
    if (p.grad().size() != p.data().size()) {
      throw std::runtime_error("adam_step: missing gradient for " + name);
    }
    auto& m = state.m.at(name);
    auto& v = state.v.at(name);
    auto& w = p.data();
    const auto& g = p.grad();
    for (size_t i = 0; i < w.size(); ++i) {
      m[i] = cfg.beta1 * m[i] + (1.0 - cfg.beta1) * g[i];
      v[i] = cfg.beta2 * v[i] + (1.0 - cfg.beta2) * g[i] * g[i];
      const double mhat = m[i] / bc1;
      const double vhat = v[i] / bc2;
      w[i] -= lr * mhat / (std::sqrt(vhat) + cfg.eps);
    }
  }
}

void ema_init(EmaState& state, const ParameterStore& store, double decay) {
  state.decay = decay;
  state.shadow.clear();
  for (const auto& [name, t] : store.params) state.shadow[name] = t.data();
}

void ema_update(EmaState& state, const ParameterStore& store) {
  for (const auto& [name, t] : store.params) {
    auto& s = state.shadow.at(name);
    const auto& w = t.data();
    for (size_t i = 0; i < s.size(); ++i) {
      s[i] = state.decay * s[i] + (1.0 - state.decay) * w[i];
    }
  }
}

void ema_apply(const EmaState& state, ParameterStore& store) {
  for (auto& [name, t] : store.params) t.data() = state.shadow.at(name);
}

bool EarlyStopper::update(double val_metric) {
  improved_last = val_metric < best - min_delta;
  if (improved_last) {
    best = val_metric;
    epochs_since_best = 0;
  } else {
    ++epochs_since_best;
  }
  return epochs_since_best >= patience;
}

}  // namespace dvse::nn
