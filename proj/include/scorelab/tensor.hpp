#pragma once

#include <cstddef>
#include <functional>
#include <memory>
#include <vector>

#include "scorelab/errors.hpp"
#include "scorelab/rng.hpp"

namespace scorelab::numcore {

// One node of the recorded computation graph. Ops append fresh nodes; a
// backward pass walks the recorded parents in reverse topological order.
struct TensorNode {
  std::vector<std::size_t> shape;
  std::vector<double> value;
  std::vector<double> grad;    // sized lazily; persistent on leaves
  bool requires_grad = false;  // leaf parameter flag
  bool in_graph = false;       // participates in gradient computation
  std::vector<std::shared_ptr<TensorNode>> parents;
  std::function<void(TensorNode&)> backprop;
};

bool grad_mode_enabled();

// Disables graph recording for its scope (evaluation / sampling paths).
class NoGradGuard {
 public:
  NoGradGuard();
  ~NoGradGuard();
  NoGradGuard(const NoGradGuard&) = delete;
  NoGradGuard& operator=(const NoGradGuard&) = delete;

 private:
  bool prev_;
};

// Dense row-major tensor of 64-bit reals. Cheap handle: copies share storage.
class Tensor {
 public:
  Tensor() = default;
  explicit Tensor(std::vector<std::size_t> shape, double fill = 0.0,
                  bool requires_grad = false);
  Tensor(std::vector<std::size_t> shape, std::vector<double> data,
         bool requires_grad = false);

  static Tensor scalar(double v);
  static Tensor zeros(std::vector<std::size_t> shape);
  static Tensor randn(std::vector<std::size_t> shape, Rng& rng,
                      double stddev = 1.0, bool requires_grad = false);

  bool defined() const { return node_ != nullptr; }
  const std::vector<std::size_t>& shape() const;
  std::size_t rank() const { return shape().size(); }
  std::size_t size() const;
  std::size_t rows() const;  // rank-2 only
  std::size_t cols() const;

  double* data();
  const double* data() const;
  const std::vector<double>& values() const;
  double item() const;  // size()==1
  double at(std::size_t i) const;

  bool requires_grad() const;
  Tensor& set_requires_grad(bool on);
  bool has_grad() const;
  const std::vector<double>& grad() const;  // throws if never populated
  void zero_grad();

  // Value copy detached from any recorded graph.
  Tensor detached() const;

  std::shared_ptr<TensorNode>& node() { return node_; }
  const std::shared_ptr<TensorNode>& node() const { return node_; }
  explicit Tensor(std::shared_ptr<TensorNode> node) : node_(std::move(node)) {}

 private:
  std::shared_ptr<TensorNode> node_;
};

// --- ops -------------------------------------------------------------------

Tensor matmul(const Tensor& a, const Tensor& b);
Tensor add(const Tensor& a, const Tensor& b);
Tensor sub(const Tensor& a, const Tensor& b);
Tensor mul(const Tensor& a, const Tensor& b);  // elementwise
Tensor add_scalar(const Tensor& a, double c);
Tensor mul_scalar(const Tensor& a, double c);
Tensor sum(const Tensor& a);       // -> scalar
Tensor mean(const Tensor& a);      // -> scalar
Tensor sum_rows(const Tensor& a);  // [m,n] -> [m]
Tensor add_row_bias(const Tensor& a, const Tensor& bias);  // [m,n] + [n]
Tensor scale_rows(const Tensor& a, const Tensor& s);       // [m,n] * [m]
Tensor relu(const Tensor& a);
Tensor silu(const Tensor& a);
Tensor tanh(const Tensor& a);
Tensor exp(const Tensor& a);
Tensor log(const Tensor& a);
Tensor square(const Tensor& a);
Tensor abs(const Tensor& a);

// Populates grads of every requires_grad leaf reachable from loss.
void backward(const Tensor& loss);

inline Tensor operator+(const Tensor& a, const Tensor& b) { return add(a, b); }
inline Tensor operator-(const Tensor& a, const Tensor& b) { return sub(a, b); }
inline Tensor operator*(const Tensor& a, const Tensor& b) { return mul(a, b); }
inline Tensor operator+(const Tensor& a, double c) { return add_scalar(a, c); }
inline Tensor operator-(const Tensor& a, double c) { return add_scalar(a, -c); }
inline Tensor operator*(const Tensor& a, double c) { return mul_scalar(a, c); }
inline Tensor operator*(double c, const Tensor& a) { return mul_scalar(a, c); }
inline Tensor operator-(const Tensor& a) { return mul_scalar(a, -1.0); }

}  // namespace scorelab::numcore
