#pragma once

#include <map>
#include <random>
#include <string>
#include <vector>

#include "dvse/nncore/tensor.hpp"

namespace dvse::nn {

/// Named trainable tensors; std::map keeps lexicographic iteration order.
struct ParameterStore {
  std::map<std::string, Tensor> params;

  Tensor& add(const std::string& name, Tensor t);
  Tensor& at(const std::string& name);
  const Tensor& at(const std::string& name) const;
  void zero_grads();
};

/// Uniform(-r, r) with r = 1/sqrt(fan_in), registered as a parameter.
Tensor init_uniform(std::vector<int> shape, int fan_in, std::mt19937_64& rng);

Tensor fc(const Tensor& x, const Tensor& w, const Tensor& b);

struct GruParams {
  Tensor wz, uz, bz;
  Tensor wr, ur, br;
  Tensor wh, uh, bh;
};

GruParams make_gru(ParameterStore& store, const std::string& prefix, int din,
                   int dh, std::mt19937_64& rng);

/// h_t = (1 - z) * h_prev + z * h_tilde (update gate scales the candidate).
Tensor gru_cell(const Tensor& x, const Tensor& h_prev, const GruParams& p);

struct LstmParams {
  Tensor wi, ui, bi;
  Tensor wf, uf, bf;
  Tensor wg, ug, bg;
  Tensor wo, uo, bo;
};

LstmParams make_lstm(ParameterStore& store, const std::string& prefix, int din,
                     int dh, std::mt19937_64& rng);

std::pair<Tensor, Tensor> lstm_cell(const Tensor& x, const Tensor& h_prev,
                                    const Tensor& c_prev, const LstmParams& p);

/// One causal dilated conv layer over a step sequence of [n, cin] tensors.
/// Tap 0 reads the current step, tap j reads step t - j*dilation; steps
/// before the sequence start contribute zero (implicit left padding).
struct ConvParams {
  std::vector<Tensor> w;  // per-tap [cin, cout]
  Tensor b;               // [cout]
  int dilation = 1;
};

ConvParams make_conv(ParameterStore& store, const std::string& prefix, int cin,
                     int cout, int kernel, int dilation, std::mt19937_64& rng);

std::vector<Tensor> causal_dilated_conv1d(const std::vector<Tensor>& x,
                                          const ConvParams& p);

/// n_layers causal convs sharing one dilation, each followed by relu, plus a
/// residual connection (1x1 projection when channel counts differ).
struct TemporalBlockParams {
  std::vector<ConvParams> convs;
  Tensor proj_w;  // [cin, cout]; undefined when cin == cout
};

TemporalBlockParams make_temporal_block(ParameterStore& store,
                                        const std::string& prefix, int cin,
                                        int cout, int n_layers, int kernel,
                                        int dilation, std::mt19937_64& rng);

std::vector<Tensor> temporal_block(const std::vector<Tensor>& x,
                                   const TemporalBlockParams& p);

/// 1 + n_layers * (k - 1) * sum_{i=1..n_blocks} 2^(i-1).
int receptive_field(int n_blocks, int n_layers, int kernel);

}  // namespace dvse::nn
