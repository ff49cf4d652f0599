#include "dvse/nncore/layers.hpp"

#include <cmath>
#include <stdexcept>

namespace dvse::nn {

Tensor& ParameterStore::add(const std::string& name, Tensor t) {
  auto [it, inserted] = params.emplace(name, std::move(t));
  if (!inserted) {
    throw std::invalid_argument("ParameterStore: duplicate name " + name);
  }
  return it->second;
}

Tensor& ParameterStore::at(const std::string& name) {
  auto it = params.find(name);
  if (it == params.end()) {
    throw std::invalid_argument("ParameterStore: unknown parameter " + name);
  }
  return it->second;
}

const Tensor& ParameterStore::at(const std::string& name) const {
  auto it = params.find(name);
  if (it == params.end()) {
    throw std::invalid_argument("ParameterStore: unknown parameter " + name);
  }
  return it->second;
}

void ParameterStore::zero_grads() {
  for (auto& [name, t] : params) t.zero_grad();
}

Tensor init_uniform(std::vector<int> shape, int fan_in, std::mt19937_64& rng) {
  const double r = 1.0 / std::sqrt(static_cast<double>(fan_in));
  std::uniform_real_distribution<double> dist(-r, r);
  int count = 1;
  for (int d : shape) count *= d;
  std::vector<double> data(count);
  for (auto& v : data) v = dist(rng);
  return Tensor::param(std::move(shape), std::move(data));
}

Tensor fc(const Tensor& x, const Tensor& w, const Tensor& b) {
  return add_bias(matmul(x, w), b);
}

GruParams make_gru(ParameterStore& store, const std::string& prefix, int din,
                   int dh, std::mt19937_64& rng) {
  GruParams p;
  p.wz = store.add(prefix + ".wz", init_uniform({din, dh}, din, rng));
  p.uz = store.add(prefix + ".uz", init_uniform({dh, dh}, dh, rng));
  p.bz = store.add(prefix + ".bz", Tensor::param({dh}, std::vector<double>(dh, 0.0)));
  p.wr = store.add(prefix + ".wr", init_uniform({din, dh}, din, rng));
  p.ur = store.add(prefix + ".ur", init_uniform({dh, dh}, dh, rng));
  p.br = store.add(prefix + ".br", Tensor::param({dh}, std::vector<double>(dh, 0.0)));
  p.wh = store.add(prefix + ".wh", init_uniform({din, dh}, din, rng));
  p.uh = store.add(prefix + ".uh", init_uniform({dh, dh}, dh, rng));
  p.bh = store.add(prefix + ".bh", Tensor::param({dh}, std::vector<double>(dh, 0.0)));
  return p;
}

Tensor gru_cell(const Tensor& x, const Tensor& h_prev, const GruParams& p) {
  Tensor z = sigmoid(add(fc(x, p.wz, p.bz), matmul(h_prev, p.uz)));
  Tensor r = sigmoid(add(fc(x, p.wr, p.br), matmul(h_prev, p.ur)));
  Tensor h_tilde = tanh_op(add(fc(x, p.wh, p.bh), matmul(mul(r, h_prev), p.uh)));
  Tensor one_minus_z = add_const(scale(z, -1.0), 1.0);
  return add(mul(one_minus_z, h_prev), mul(z, h_tilde));
}

LstmParams make_lstm(ParameterStore& store, const std::string& prefix, int din,
                     int dh, std::mt19937_64& rng) {
  LstmParams p;
  auto gate = [&](const char* g, Tensor& w, Tensor& u, Tensor& b) {
    w = store.add(prefix + ".w" + g, init_uniform({din, dh}, din, rng));
    u = store.add(prefix + ".u" + g, init_uniform({dh, dh}, dh, rng));
    b = store.add(prefix + ".b" + g, Tensor::param({dh}, std::vector<double>(dh, 0.0)));
  };
  gate("i", p.wi, p.ui, p.bi);
  gate("f", p.wf, p.uf, p.bf);
  gate("g", p.wg, p.ug, p.bg);
  gate("o", p.wo, p.uo, p.bo);
  return p;
}

std::pair<Tensor, Tensor> lstm_cell(const Tensor& x, const Tensor& h_prev,
                                    const Tensor& c_prev, const LstmParams& p) {
  Tensor i = sigmoid(add(fc(x, p.wi, p.bi), matmul(h_prev, p.ui)));
  Tensor f = sigmoid(add(fc(x, p.wf, p.bf), matmul(h_prev, p.uf)));
  Tensor g = tanh_op(add(fc(x, p.wg, p.bg), matmul(h_prev, p.ug)));
  Tensor o = sigmoid(add(fc(x, p.wo, p.bo), matmul(h_prev, p.uo)));
  Tensor c = add(mul(f, c_prev), mul(i, g));
  Tensor h = mul(o, tanh_op(c));
  return {h, c};
}

ConvParams make_conv(ParameterStore& store, const std::string& prefix, int cin,
                     int cout, int kernel, int dilation, std::mt19937_64& rng) {
  if (kernel < 1 || dilation < 1) {
    throw std::invalid_argument("make_conv: kernel and dilation must be >= 1");
  }
  ConvParams p;
  p.dilation = dilation;
  for (int j = 0; j < kernel; ++j) {
    p.w.push_back(store.add(prefix + ".w" + std::to_string(j),
                            init_uniform({cin, cout}, cin * kernel, rng)));
  }
  p.b = store.add(prefix + ".b", Tensor::param({cout}, std::vector<double>(cout, 0.0)));
  return p;
}

std::vector<Tensor> causal_dilated_conv1d(const std::vector<Tensor>& x,
                                          const ConvParams& p) {
  std::vector<Tensor> out;
  out.reserve(x.size());
  const int k = static_cast<int>(p.w.size());
  for (int t = 0; t < static_cast<int>(x.size()); ++t) {
    Tensor acc = add_bias(matmul(x[t], p.w[0]), p.b);
    for (int j = 1; j < k; ++j) {
      const int src = t - j * p.dilation;
      if (src < 0) continue;  // implicit zero padding
      acc = add(acc, matmul(x[src], p.w[j]));
    }
    out.push_back(acc);
  }
  return out;
}

TemporalBlockParams make_temporal_block(ParameterStore& store,
                                        const std::string& prefix, int cin,
                                        int cout, int n_layers, int kernel,
                                        int dilation, std::mt19937_64& rng) {
  TemporalBlockParams p;
  for (int l = 0; l < n_layers; ++l) {
    const int in = l == 0 ? cin : cout;
    p.convs.push_back(make_conv(store, prefix + ".c" + std::to_string(l), in,
                                cout, kernel, dilation, rng));
  }
  if (cin != cout) {
    p.proj_w = store.add(prefix + ".proj", init_uniform({cin, cout}, cin, rng));
  }
  return p;
}

std::vector<Tensor> temporal_block(const std::vector<Tensor>& x,
                                   const TemporalBlockParams& p) {
  std::vector<Tensor> h = x;
  for (const auto& conv : p.convs) {
    h = causal_dilated_conv1d(h, conv);
    for (auto& t : h) t = relu(t);
  }
  std::vector<Tensor> out;
  out.reserve(x.size());
  for (size_t t = 0; t < x.size(); ++t) {
    Tensor res = p.proj_w.defined() ? matmul(x[t], p.proj_w) : x[t];
    out.push_back(add(h[t], res));
  }
  return out;
}

int receptive_field(int n_blocks, int n_layers, int kernel) {
  int sum = 0;
  for (int i = 1; i <= n_blocks; ++i) sum += 1 << (i - 1);
  return 1 + n_layers * (kernel - 1) * sum;
}

}  // namespace dvse::nn
