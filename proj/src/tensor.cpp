#include "dvse/nncore/tensor.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>
#include <stdexcept>
#include <unordered_set>

namespace dvse::nn {
namespace {

std::shared_ptr<TensorNode> make_node(std::vector<int> shape,
                                      std::vector<std::shared_ptr<TensorNode>> parents) {
  auto n = std::make_shared<TensorNode>();
  n->shape = std::move(shape);
  int count = 1;
  for (int d : n->shape) count *= d;
  n->data.assign(count, 0.0);
  n->parents = std::move(parents);
  for (const auto& p : n->parents) {
    if (p->requires_grad) n->requires_grad = true;
  }
  return n;
}

void check_same_shape(const Tensor& a, const Tensor& b, const char* op) {
  if (a.shape() != b.shape()) {
    throw ShapeError(std::string(op) + ": shape mismatch " +
                     shape_str(a.shape()) + " vs " + shape_str(b.shape()));
  }
}

template <typename Fwd, typename Dfn>
Tensor unary_op(const Tensor& a, Fwd fwd, Dfn dfn) {
  auto out = make_node(a.shape(), {a.node()});
  const auto& x = a.data();
  for (size_t i = 0; i < x.size(); ++i) out->data[i] = fwd(x[i]);
  if (out->requires_grad) {
    auto pa = a.node();
    TensorNode* o = out.get();
    out->backprop = [pa, o, dfn]() {
      pa->ensure_grad();
      for (size_t i = 0; i < o->data.size(); ++i) {
        pa->grad[i] += o->grad[i] * dfn(pa->data[i], o->data[i]);
      }
    };
  }
  return Tensor(out);
}

}  // namespace

std::string shape_str(const std::vector<int>& s) {
  std::ostringstream os;
  os << "[";
  for (size_t i = 0; i < s.size(); ++i) os << (i ? "," : "") << s[i];
  os << "]";
  return os.str();
}

Tensor Tensor::zeros(std::vector<int> shape, bool requires_grad) {
  auto n = make_node(std::move(shape), {});
  n->requires_grad = requires_grad;
  if (requires_grad) n->ensure_grad();
  return Tensor(n);
}

Tensor Tensor::constant(std::vector<int> shape, std::vector<double> data) {
  auto n = make_node(std::move(shape), {});
  if (data.size() != n->data.size()) {
    throw ShapeError("Tensor::constant: data size does not match shape");
  }
  n->data = std::move(data);
  return Tensor(n);
}

Tensor Tensor::param(std::vector<int> shape, std::vector<double> data) {
  Tensor t = constant(std::move(shape), std::move(data));
  t.node()->requires_grad = true;
  t.node()->ensure_grad();
  return t;
}

Tensor Tensor::scalar(double v) { return constant({1}, {v}); }

Tensor Tensor::full(std::vector<int> shape, double v) {
  auto n = make_node(std::move(shape), {});
  std::fill(n->data.begin(), n->data.end(), v);
  return Tensor(n);
}

double Tensor::item() const {
  if (node_->data.size() != 1) {
    throw ShapeError("Tensor::item: not a scalar, shape " + shape_str(node_->shape));
  }
  return node_->data[0];
}

void Tensor::backward() const {
  if (node_->data.size() != 1) {
    throw ShapeError("backward: output must be scalar");
  }
  // Topological order by iterative DFS.
  std::vector<TensorNode*> order;
  std::unordered_set<TensorNode*> visited;
  std::vector<std::pair<TensorNode*, size_t>> stack;
  stack.emplace_back(node_.get(), 0);
  visited.insert(node_.get());
  while (!stack.empty()) {
    auto& [n, idx] = stack.back();
    if (idx < n->parents.size()) {
      TensorNode* p = n->parents[idx++].get();
      if (p->requires_grad && !visited.count(p)) {
        visited.insert(p);
        stack.emplace_back(p, 0);
      }
    } else {
      order.push_back(n);
      stack.pop_back();
    }
  }
  node_->ensure_grad();
  node_->grad[0] += 1.0;
  for (auto it = order.rbegin(); it != order.rend(); ++it) {
    if ((*it)->backprop) (*it)->backprop();
  }
}

Tensor matmul(const Tensor& a, const Tensor& b) {
  if (a.shape().size() != 2 || b.shape().size() != 2 || a.cols() != b.rows()) {
    throw ShapeError("matmul: incompatible shapes " + shape_str(a.shape()) +
                     " x " + shape_str(b.shape()));
  }
  const int n = a.rows(), p = a.cols(), m = b.cols();
  auto out = make_node({n, m}, {a.node(), b.node()});
  const double* A = a.data().data();
  const double* B = b.data().data();
  double* Y = out->data.data();
  for (int i = 0; i < n; ++i) {
    for (int k = 0; k < p; ++k) {
      const double aik = A[i * p + k];
      if (aik == 0.0) continue;
      const double* Brow = B + k * m;
      double* Yrow = Y + i * m;
      for (int j = 0; j < m; ++j) Yrow[j] += aik * Brow[j];
    }
  }
  if (out->requires_grad) {
    auto pa = a.node();
    auto pb = b.node();
    TensorNode* o = out.get();
    out->backprop = [pa, pb, o, n, p, m]() {
      const double* G = o->grad.data();
      if (pa->requires_grad) {
        pa->ensure_grad();
        const double* B = pb->data.data();
        for (int i = 0; i < n; ++i) {
          for (int k = 0; k < p; ++k) {
            double acc = 0.0;
            const double* Grow = G + i * m;
            const double* Brow = B + k * m;
            for (int j = 0; j < m; ++j) acc += Grow[j] * Brow[j];
            pa->grad[i * p + k] += acc;
          }
        }
      }
      if (pb->requires_grad) {
        pb->ensure_grad();
        const double* A = pa->data.data();
        for (int k = 0; k < p; ++k) {
          for (int i = 0; i < n; ++i) {
            const double aik = A[i * p + k];
            if (aik == 0.0) continue;
            const double* Grow = G + i * m;
            double* Brow = pb->grad.data() + k * m;
            for (int j = 0; j < m; ++j) Brow[j] += aik * Grow[j];
          }
        }
      }
    };
  }
  return Tensor(out);
}

Tensor add_bias(const Tensor& x, const Tensor& b) {
  if (x.shape().size() != 2 || b.shape().size() != 1 || x.cols() != b.shape()[0]) {
    throw ShapeError("add_bias: incompatible shapes " + shape_str(x.shape()) +
                     " + " + shape_str(b.shape()));
  }
  const int n = x.rows(), m = x.cols();
  auto out = make_node({n, m}, {x.node(), b.node()});
  for (int i = 0; i < n; ++i) {
    for (int j = 0; j < m; ++j) out->data[i * m + j] = x.data()[i * m + j] + b.data()[j];
  }
  if (out->requires_grad) {
    auto px = x.node();
    auto pb = b.node();
    TensorNode* o = out.get();
    out->backprop = [px, pb, o, n, m]() {
      if (px->requires_grad) {
        px->ensure_grad();
        for (size_t i = 0; i < o->grad.size(); ++i) px->grad[i] += o->grad[i];
      }
      if (pb->requires_grad) {
        pb->ensure_grad();
        for (int i = 0; i < n; ++i) {
          for (int j = 0; j < m; ++j) pb->grad[j] += o->grad[i * m + j];
        }
      }
    };
  }
  return Tensor(out);
}

Tensor add(const Tensor& a, const Tensor& b) {
  check_same_shape(a, b, "add");
  auto out = make_node(a.shape(), {a.node(), b.node()});
  for (size_t i = 0; i < out->data.size(); ++i) {
    out->data[i] = a.data()[i] + b.data()[i];
  }
  if (out->requires_grad) {
    auto pa = a.node();
    auto pb = b.node();
    TensorNode* o = out.get();
    out->backprop = [pa, pb, o]() {
      for (auto* p : {pa.get(), pb.get()}) {
        if (!p->requires_grad) continue;
        p->ensure_grad();
        for (size_t i = 0; i < o->grad.size(); ++i) p->grad[i] += o->grad[i];
      }
    };
  }
  return Tensor(out);
}

Tensor sub(const Tensor& a, const Tensor& b) {
  check_same_shape(a, b, "sub");
  auto out = make_node(a.shape(), {a.node(), b.node()});
  for (size_t i = 0; i < out->data.size(); ++i) {
    out->data[i] = a.data()[i] - b.data()[i];
  }
  if (out->requires_grad) {
    auto pa = a.node();
    auto pb = b.node();
    TensorNode* o = out.get();
    out->backprop = [pa, pb, o]() {
      if (pa->requires_grad) {
        pa->ensure_grad();
        for (size_t i = 0; i < o->grad.size(); ++i) pa->grad[i] += o->grad[i];
      }
      if (pb->requires_grad) {
        pb->ensure_grad();
        for (size_t i = 0; i < o->grad.size(); ++i) pb->grad[i] -= o->grad[i];
      }
    };
  }
  return Tensor(out);
}

Tensor mul(const Tensor& a, const Tensor& b) {
  check_same_shape(a, b, "mul");
  auto out = make_node(a.shape(), {a.node(), b.node()});
  for (size_t i = 0; i < out->data.size(); ++i) {
    out->data[i] = a.data()[i] * b.data()[i];
  }
  if (out->requires_grad) {
    auto pa = a.node();
    auto pb = b.node();
    TensorNode* o = out.get();
    out->backprop = [pa, pb, o]() {
      if (pa->requires_grad) {
        pa->ensure_grad();
        for (size_t i = 0; i < o->grad.size(); ++i) pa->grad[i] += o->grad[i] * pb->data[i];
      }
      if (pb->requires_grad) {
        pb->ensure_grad();
        for (size_t i = 0; i < o->grad.size(); ++i) pb->grad[i] += o->grad[i] * pa->data[i];
      }
    };
  }
  return Tensor(out);
}

Tensor scale(const Tensor& a, double s) {
  return unary_op(a, [s](double x) { return x * s; },
                  [s](double, double) { return s; });
}

Tensor add_const(const Tensor& a, double c) {
  return unary_op(a, [c](double x) { return x + c; },
                  [](double, double) { return 1.0; });
}

Tensor relu(const Tensor& a) {
  return unary_op(a, [](double x) { return x > 0.0 ? x : 0.0; },
                  [](double x, double) { return x > 0.0 ? 1.0 : 0.0; });
}

Tensor sigmoid(const Tensor& a) {
  return unary_op(a, [](double x) { return 1.0 / (1.0 + std::exp(-x)); },
                  [](double, double y) { return y * (1.0 - y); });
}

Tensor tanh_op(const Tensor& a) {
  return unary_op(a, [](double x) { return std::tanh(x); },
                  [](double, double y) { return 1.0 - y * y; });
}

Tensor sin_op(const Tensor& a) {
  return unary_op(a, [](double x) { return std::sin(x); },
                  [](double x, double) { return std::cos(x); });
}

Tensor cos_op(const Tensor& a) {
  return unary_op(a, [](double x) { return std::cos(x); },
                  [](double x, double) { return -std::sin(x); });
}

Tensor concat_cols(const std::vector<Tensor>& parts) {
  if (parts.empty()) throw ShapeError("concat_cols: empty input");
  const int n = parts.front().rows();
  int total = 0;
  std::vector<std::shared_ptr<TensorNode>> parents;
  for (const auto& p : parts) {
    if (p.shape().size() != 2 || p.rows() != n) {
      throw ShapeError("concat_cols: row mismatch");
    }
    total += p.cols();
    parents.push_back(p.node());
  }
  auto out = make_node({n, total}, std::move(parents));
  int off = 0;
  for (const auto& p : parts) {
    const int m = p.cols();
    for (int i = 0; i < n; ++i) {
      std::copy_n(p.data().data() + i * m, m, out->data.data() + i * total + off);
    }
    off += m;
  }
  if (out->requires_grad) {
    TensorNode* o = out.get();
    auto ps = out->parents;
    out->backprop = [ps, o, n, total]() {
      int off = 0;
      for (const auto& p : ps) {
        const int m = p->shape[1];
        if (p->requires_grad) {
          p->ensure_grad();
          for (int i = 0; i < n; ++i) {
            for (int j = 0; j < m; ++j) {
              p->grad[i * m + j] += o->grad[i * total + off + j];
            }
          }
        }
        off += m;
      }
    };
  }
  return Tensor(out);
}

Tensor slice_cols(const Tensor& a, int start, int len) {
  if (a.shape().size() != 2 || start < 0 || len < 1 || start + len > a.cols()) {
    throw ShapeError("slice_cols: bad slice");
  }
  const int n = a.rows(), m = a.cols();
  auto out = make_node({n, len}, {a.node()});
  for (int i = 0; i < n; ++i) {
    std::copy_n(a.data().data() + i * m + start, len, out->data.data() + i * len);
  }
  if (out->requires_grad) {
    auto pa = a.node();
    TensorNode* o = out.get();
    out->backprop = [pa, o, n, m, start, len]() {
      pa->ensure_grad();
      for (int i = 0; i < n; ++i) {
        for (int j = 0; j < len; ++j) {
          pa->grad[i * m + start + j] += o->grad[i * len + j];
        }
      }
    };
  }
  return Tensor(out);
}

Tensor sum_all(const Tensor& a) {
  auto out = make_node({1}, {a.node()});
  double s = 0.0;
  for (double v : a.data()) s += v;
  out->data[0] = s;
  if (out->requires_grad) {
    auto pa = a.node();
    TensorNode* o = out.get();
    out->backprop = [pa, o]() {
      pa->ensure_grad();
      for (auto& g : pa->grad) g += o->grad[0];
    };
  }
  return Tensor(out);
}

Tensor mean_all(const Tensor& a) {
  return scale(sum_all(a), 1.0 / a.numel());
}

Tensor cumsum_cols(const Tensor& a) {
  if (a.shape().size() != 2) throw ShapeError("cumsum_cols: need 2-D tensor");
  const int n = a.rows(), m = a.cols();
  auto out = make_node({n, m}, {a.node()});
  for (int i = 0; i < n; ++i) {
    double acc = 0.0;
    for (int j = 0; j < m; ++j) {
      acc += a.data()[i * m + j];
      out->data[i * m + j] = acc;
    }
  }
  if (out->requires_grad) {
    auto pa = a.node();
    TensorNode* o = out.get();
    out->backprop = [pa, o, n, m]() {
      pa->ensure_grad();
      for (int i = 0; i < n; ++i) {
        double acc = 0.0;
        for (int j = m - 1; j >= 0; --j) {
          acc += o->grad[i * m + j];
          pa->grad[i * m + j] += acc;
        }
      }
    };
  }
  return Tensor(out);
}

Tensor smooth_l1(const Tensor& x, const Tensor& y) {
  check_same_shape(x, y, "smooth_l1");
  auto out = make_node({1}, {x.node(), y.node()});
  const int n = x.numel();
  double s = 0.0;
  for (int i = 0; i < n; ++i) {
    const double d = x.data()[i] - y.data()[i];
    s += std::abs(d) < 1.0 ? 0.5 * d * d : std::abs(d) - 0.5;
  }
  out->data[0] = s / n;
  if (out->requires_grad) {
    auto px = x.node();
    auto py = y.node();
    TensorNode* o = out.get();
    out->backprop = [px, py, o, n]() {
      const double g = o->grad[0] / n;
      for (int i = 0; i < n; ++i) {
        const double d = px->data[i] - py->data[i];
        const double w = std::abs(d) < 1.0 ? d : (d > 0.0 ? 1.0 : -1.0);
        if (px->requires_grad) {
          px->ensure_grad();
          px->grad[i] += g * w;
        }
        if (py->requires_grad) {
          py->ensure_grad();
          py->grad[i] -= g * w;
        }
      }
    };
  }
  return Tensor(out);
}

std::pair<Tensor, int> minimum(const Tensor& a, const Tensor& b) {
  const int which = b.item() < a.item() ? 1 : 0;
  return {which == 0 ? a : b, which};
}

}  // namespace dvse::nn
