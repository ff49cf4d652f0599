#pragma once

#include <functional>
#include <memory>
#include <string>
#include <vector>

namespace dvse::nn {

struct TensorNode {
  std::vector<int> shape;
  std::vector<double> data;
  std::vector<double> grad;  // allocated lazily, same size as data
  bool requires_grad = false;
  std::vector<std::shared_ptr<TensorNode>> parents;
  std::function<void()> backprop;

  int numel() const { return static_cast<int>(data.size()); }
  void ensure_grad() {
    if (grad.size() != data.size()) grad.assign(data.size(), 0.0);
  }
};

/// Value-semantic handle to a tape node. Ops build the graph eagerly;
/// backward() on a scalar accumulates gradients into every node that
/// requires them.
class Tensor {
 public:
  Tensor() = default;
  explicit Tensor(std::shared_ptr<TensorNode> n) : node_(std::move(n)) {}

  static Tensor zeros(std::vector<int> shape, bool requires_grad = false);
  static Tensor constant(std::vector<int> shape, std::vector<double> data);
  static Tensor param(std::vector<int> shape, std::vector<double> data);
  static Tensor scalar(double v);
  static Tensor full(std::vector<int> shape, double v);

  bool defined() const { return node_ != nullptr; }
  const std::vector<int>& shape() const { return node_->shape; }
  int rows() const { return node_->shape.at(0); }
  int cols() const { return node_->shape.at(1); }
  int numel() const { return node_->numel(); }
  std::vector<double>& data() { return node_->data; }
  const std::vector<double>& data() const { return node_->data; }
  std::vector<double>& grad() { return node_->grad; }
  const std::vector<double>& grad() const { return node_->grad; }
  bool requires_grad() const { return node_->requires_grad; }
  double item() const;

  void zero_grad() { node_->ensure_grad(); std::fill(node_->grad.begin(), node_->grad.end(), 0.0); }

  /// Scalar tensors only: seeds d(out)/d(out) = 1 and runs the tape.
  void backward() const;

  std::shared_ptr<TensorNode> node() const { return node_; }

 private:
  std::shared_ptr<TensorNode> node_;
};

struct ShapeError : std::invalid_argument {
  using std::invalid_argument::invalid_argument;
};

std::string shape_str(const std::vector<int>& s);

// Linear algebra.
Tensor matmul(const Tensor& a, const Tensor& b);        // [n,p] x [p,m]
Tensor add_bias(const Tensor& x, const Tensor& b);      // [n,m] + [m]

// Elementwise, same shape.
Tensor add(const Tensor& a, const Tensor& b);
Tensor sub(const Tensor& a, const Tensor& b);
Tensor mul(const Tensor& a, const Tensor& b);

Tensor scale(const Tensor& a, double s);
Tensor add_const(const Tensor& a, double c);

Tensor relu(const Tensor& a);
Tensor sigmoid(const Tensor& a);
Tensor tanh_op(const Tensor& a);
Tensor sin_op(const Tensor& a);
Tensor cos_op(const Tensor& a);

// Shape plumbing on 2-D tensors.
Tensor concat_cols(const std::vector<Tensor>& parts);
Tensor slice_cols(const Tensor& a, int start, int len);

// Reductions and sequence ops.
Tensor sum_all(const Tensor& a);
Tensor mean_all(const Tensor& a);
Tensor cumsum_cols(const Tensor& a);  // prefix sums along dim 1

/// SmoothL1 between same-shape tensors, mean-reduced to a scalar:
/// 0.5 d^2 for |d| < 1, |d| - 0.5 otherwise.
Tensor smooth_l1(const Tensor& x, const Tensor& y);

/// Returns the smaller of two scalars and which branch won (0 = a, 1 = b).
/// Gradient flows only through the selected branch.
std::pair<Tensor, int> minimum(const Tensor& a, const Tensor& b);

}  // namespace dvse::nn
