#pragma once

#include <cmath>
#include <functional>
#include <random>
#include <vector>

#include "dvse/nncore/tensor.hpp"

namespace testutil {

// Central finite-difference gradient check. `forward` rebuilds the graph from
// the given leaves on every call; `coords` optionally restricts the checked
// coordinates of each leaf (empty = all).
struct GradCheckResult {
  double max_rel_err = 0.0;
  int checked = 0;
};

inline GradCheckResult gradcheck(
    const std::function<dvse::nn::Tensor()>& forward,
    const std::vector<dvse::nn::Tensor>& leaves,
    const std::vector<std::vector<int>>& coords = {}, double eps = 1e-5) {
  for (const auto& leaf : leaves) {
    const_cast<dvse::nn::Tensor&>(leaf).zero_grad();
  }
  dvse::nn::Tensor out = forward();
  out.backward();
  std::vector<std::vector<double>> analytic;
  analytic.reserve(leaves.size());
  for (const auto& leaf : leaves) analytic.push_back(leaf.grad());

  GradCheckResult res;
  for (size_t li = 0; li < leaves.size(); ++li) {
    auto& leaf = const_cast<dvse::nn::Tensor&>(leaves[li]);
    std::vector<int> idx;
    if (li < coords.size() && !coords[li].empty()) {
      idx = coords[li];
    } else {
      idx.resize(leaf.numel());
      for (int i = 0; i < leaf.numel(); ++i) idx[i] = i;
    }
    for (int i : idx) {
      const double saved = leaf.data()[i];
      leaf.data()[i] = saved + eps;
      const double up = forward().item();
      leaf.data()[i] = saved - eps;
      const double dn = forward().item();
      leaf.data()[i] = saved;
      const double numeric = (up - dn) / (2.0 * eps);
      const double ga = analytic[li][i];
      const double denom = std::max({std::abs(ga), std::abs(numeric), 1e-3});
      res.max_rel_err = std::max(res.max_rel_err, std::abs(ga - numeric) / denom);
      ++res.checked;
    }
  }
  return res;
}

inline std::vector<int> sample_coords(int numel, int count,
                                      std::mt19937_64& rng) {
  if (numel <= count) {
    std::vector<int> all(numel);
    for (int i = 0; i < numel; ++i) all[i] = i;
    return all;
  }
  std::vector<int> out;
  std::uniform_int_distribution<int> u(0, numel - 1);
  for (int i = 0; i < count; ++i) out.push_back(u(rng));
  return out;
}

inline dvse::nn::Tensor random_tensor(std::vector<int> shape, double lo,
                                      double hi, std::mt19937_64& rng,
                                      bool requires_grad = true) {
  int n = 1;
  for (int d : shape) n *= d;
  std::uniform_real_distribution<double> u(lo, hi);
  std::vector<double> data(n);
  for (auto& v : data) v = u(rng);
  return requires_grad ? dvse::nn::Tensor::param(shape, data)
                       : dvse::nn::Tensor::constant(shape, data);
}

}  // namespace testutil
