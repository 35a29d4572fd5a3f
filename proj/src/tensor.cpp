#include "scorelab/tensor.hpp"

#include <cmath>
#include <string>
#include <unordered_set>
#include <utility>

#include "scorelab/kernels.hpp"

namespace scorelab::numcore {

namespace {

thread_local bool g_grad_mode = true;

std::size_t shape_product(const std::vector<std::size_t>& shape) {
  std::size_t n = 1;
  for (std::size_t e : shape) n *= e;
  return n;
}

std::string shape_str(const std::vector<std::size_t>& shape) {
  std::string s = "[";
  for (std::size_t i = 0; i < shape.size(); ++i) {
    if (i) s += ",";
    s += std::to_string(shape[i]);
  }
  return s + "]";
}

void require_same_shape(const Tensor& a, const Tensor& b, const char* op) {
  if (a.shape() != b.shape())
    throw DimensionError(std::string(op) + ": shape mismatch " +
                         shape_str(a.shape()) + " vs " + shape_str(b.shape()));
}

// Builds the result node; records parents/backprop only when grads can flow.
Tensor make_op(std::vector<std::size_t> shape, std::vector<double> value,
               std::vector<std::shared_ptr<TensorNode>> parents,
               std::function<void(TensorNode&)> backprop) {
  auto node = std::make_shared<TensorNode>();
  node->shape = std::move(shape);
  node->value = std::move(value);
  if (g_grad_mode) {
    bool any = false;
    for (const auto& p : parents) any = any || (p && p->in_graph);
    if (any) {
      node->in_graph = true;
      node->parents = std::move(parents);
      node->backprop = std::move(backprop);
    }
  }
  return Tensor(std::move(node));
}

bool wants(const std::shared_ptr<TensorNode>& p) { return p && p->in_graph; }

Tensor unary_op(const Tensor& a, double (*f)(double),
                double (*df)(double, double),  // (x, y) -> dy/dx
                const char* /*name*/) {
  const auto& x = a.values();
  std::vector<double> y(x.size());
  for (std::size_t i = 0; i < x.size(); ++i) y[i] = f(x[i]);
  auto pa = a.node();
  return make_op(a.shape(), std::move(y), {pa}, [df](TensorNode& self) {
    auto& p = self.parents[0];
    if (!wants(p)) return;
    for (std::size_t i = 0; i < self.value.size(); ++i)
      p->grad[i] += self.grad[i] * df(p->value[i], self.value[i]);
  });
}

}  // namespace

bool grad_mode_enabled() { return g_grad_mode; }

NoGradGuard::NoGradGuard() : prev_(g_grad_mode) { g_grad_mode = false; }
NoGradGuard::~NoGradGuard() { g_grad_mode = prev_; }

Tensor::Tensor(std::vector<std::size_t> shape, double fill, bool requires_grad)
    : node_(std::make_shared<TensorNode>()) {
  node_->shape = std::move(shape);
  node_->value.assign(shape_product(node_->shape), fill);
  node_->requires_grad = requires_grad;
  node_->in_graph = requires_grad;
}

Tensor::Tensor(std::vector<std::size_t> shape, std::vector<double> data,
               bool requires_grad)
    : node_(std::make_shared<TensorNode>()) {
  if (shape_product(shape) != data.size())
    throw DimensionError("tensor: shape " + shape_str(shape) +
                         " does not match data length " +
                         std::to_string(data.size()));
  node_->shape = std::move(shape);
  node_->value = std::move(data);
  node_->requires_grad = requires_grad;
  node_->in_graph = requires_grad;
}

Tensor Tensor::scalar(double v) { return Tensor({}, std::vector<double>{v}); }

Tensor Tensor::zeros(std::vector<std::size_t> shape) {
  return Tensor(std::move(shape), 0.0);
}

Tensor Tensor::randn(std::vector<std::size_t> shape, Rng& rng, double stddev,
                     bool requires_grad) {
  std::vector<double> v(shape_product(shape));
  for (auto& x : v) x = stddev * rng.normal();
  return Tensor(std::move(shape), std::move(v), requires_grad);
}

const std::vector<std::size_t>& Tensor::shape() const {
  if (!node_) throw DimensionError("tensor: undefined");
  return node_->shape;
}

std::size_t Tensor::size() const { return node_ ? node_->value.size() : 0; }

std::size_t Tensor::rows() const {
  if (rank() != 2) throw DimensionError("tensor: rows() needs rank 2");
  return shape()[0];
}

std::size_t Tensor::cols() const {
  if (rank() != 2) throw DimensionError("tensor: cols() needs rank 2");
  return shape()[1];
}

double* Tensor::data() { return node_->value.data(); }
const double* Tensor::data() const { return node_->value.data(); }

const std::vector<double>& Tensor::values() const {
  if (!node_) throw DimensionError("tensor: undefined");
  return node_->value;
}

double Tensor::item() const {
  if (size() != 1) throw DimensionError("tensor: item() needs size 1");
  return node_->value[0];
}

double Tensor::at(std::size_t i) const { return node_->value.at(i); }

bool Tensor::requires_grad() const { return node_ && node_->requires_grad; }

Tensor& Tensor::set_requires_grad(bool on) {
  node_->requires_grad = on;
  node_->in_graph = on || node_->backprop != nullptr;
  return *this;
}

bool Tensor::has_grad() const {
  return node_ && node_->grad.size() == node_->value.size();
}

const std::vector<double>& Tensor::grad() const {
  if (!has_grad()) throw DimensionError("tensor: grad not populated");
  return node_->grad;
}

void Tensor::zero_grad() {
  if (node_) node_->grad.assign(node_->value.size(), 0.0);
}

Tensor Tensor::detached() const {
  auto node = std::make_shared<TensorNode>();
  node->shape = node_->shape;
  node->value = node_->value;
  return Tensor(std::move(node));
}

// --- binary / structural ops -------------------------------------------------

Tensor matmul(const Tensor& a, const Tensor& b) {
  if (a.rank() != 2 || b.rank() != 2)
    throw DimensionError("matmul: rank-2 tensors required");
  const std::size_t m = a.shape()[0], k = a.shape()[1];
  const std::size_t k2 = b.shape()[0], n = b.shape()[1];
  if (k != k2)
    throw DimensionError("matmul: inner extents disagree (" +
                         std::to_string(k) + " vs " + std::to_string(k2) + ")");
  std::vector<double> out(m * n);
  kernels::gemm_nn(a.data(), b.data(), out.data(), m, k, n, false);
  auto pa = a.node(), pb = b.node();
  return make_op({m, n}, std::move(out), {pa, pb},
                 [m, k, n](TensorNode& self) {
                   auto& A = self.parents[0];
                   auto& B = self.parents[1];
                   if (wants(A))
                     kernels::gemm_nt(self.grad.data(), B->value.data(),
                                      A->grad.data(), m, n, k, true);
                   if (wants(B))
                     kernels::gemm_tn(A->value.data(), self.grad.data(),
                                      B->grad.data(), m, k, n, true);
                 });
}

Tensor add(const Tensor& a, const Tensor& b) {
  require_same_shape(a, b, "add");
  const auto& x = a.values();
  const auto& y = b.values();
  std::vector<double> out(x.size());
  for (std::size_t i = 0; i < x.size(); ++i) out[i] = x[i] + y[i];
  auto pa = a.node(), pb = b.node();
  return make_op(a.shape(), std::move(out), {pa, pb}, [](TensorNode& self) {
    for (int side = 0; side < 2; ++side) {
      auto& p = self.parents[side];
      if (!wants(p)) continue;
      for (std::size_t i = 0; i < self.grad.size(); ++i)
        p->grad[i] += self.grad[i];
    }
  });
}

Tensor sub(const Tensor& a, const Tensor& b) {
  require_same_shape(a, b, "sub");
  const auto& x = a.values();
  const auto& y = b.values();
  std::vector<double> out(x.size());
  for (std::size_t i = 0; i < x.size(); ++i) out[i] = x[i] - y[i];
  auto pa = a.node(), pb = b.node();
  return make_op(a.shape(), std::move(out), {pa, pb}, [](TensorNode& self) {
    auto& A = self.parents[0];
    auto& B = self.parents[1];
    if (wants(A))
      for (std::size_t i = 0; i < self.grad.size(); ++i)
        A->grad[i] += self.grad[i];
    if (wants(B))
      for (std::size_t i = 0; i < self.grad.size(); ++i)
        B->grad[i] -= self.grad[i];
  });
}

Tensor mul(const Tensor& a, const Tensor& b) {
  require_same_shape(a, b, "mul");
  const auto& x = a.values();
  const auto& y = b.values();
  std::vector<double> out(x.size());
  for (std::size_t i = 0; i < x.size(); ++i) out[i] = x[i] * y[i];
  auto pa = a.node(), pb = b.node();
  return make_op(a.shape(), std::move(out), {pa, pb}, [](TensorNode& self) {
    auto& A = self.parents[0];
    auto& B = self.parents[1];
    if (wants(A))
      for (std::size_t i = 0; i < self.grad.size(); ++i)
        A->grad[i] += self.grad[i] * B->value[i];
    if (wants(B))
      for (std::size_t i = 0; i < self.grad.size(); ++i)
        B->grad[i] += self.grad[i] * A->value[i];
  });
}

Tensor add_scalar(const Tensor& a, double c) {
  const auto& x = a.values();
  std::vector<double> out(x.size());
  for (std::size_t i = 0; i < x.size(); ++i) out[i] = x[i] + c;
  auto pa = a.node();
  return make_op(a.shape(), std::move(out), {pa}, [](TensorNode& self) {
    auto& p = self.parents[0];
    if (!wants(p)) return;
    for (std::size_t i = 0; i < self.grad.size(); ++i)
      p->grad[i] += self.grad[i];
  });
}

Tensor mul_scalar(const Tensor& a, double c) {
  const auto& x = a.values();
  std::vector<double> out(x.size());
  for (std::size_t i = 0; i < x.size(); ++i) out[i] = x[i] * c;
  auto pa = a.node();
  return make_op(a.shape(), std::move(out), {pa}, [c](TensorNode& self) {
    auto& p = self.parents[0];
    if (!wants(p)) return;
    for (std::size_t i = 0; i < self.grad.size(); ++i)
      p->grad[i] += c * self.grad[i];
  });
}

Tensor sum(const Tensor& a) {
  const auto& x = a.values();
  double s = 0.0;
  for (double v : x) s += v;
  auto pa = a.node();
  return make_op({}, {s}, {pa}, [](TensorNode& self) {
    auto& p = self.parents[0];
    if (!wants(p)) return;
    const double g = self.grad[0];
    for (auto& gi : p->grad) gi += g;
  });
}

Tensor mean(const Tensor& a) {
  if (a.size() == 0) throw DimensionError("mean: empty tensor");
  const auto& x = a.values();
  double s = 0.0;
  for (double v : x) s += v;
  const double inv_n = 1.0 / static_cast<double>(x.size());
  auto pa = a.node();
  return make_op({}, {s * inv_n}, {pa}, [inv_n](TensorNode& self) {
    auto& p = self.parents[0];
    if (!wants(p)) return;
    const double g = self.grad[0] * inv_n;
    for (auto& gi : p->grad) gi += g;
  });
}

Tensor sum_rows(const Tensor& a) {
  if (a.rank() != 2) throw DimensionError("sum_rows: rank-2 tensor required");
  const std::size_t m = a.shape()[0], n = a.shape()[1];
  const double* x = a.data();
  std::vector<double> out(m, 0.0);
  for (std::size_t i = 0; i < m; ++i) {
    double s = 0.0;
    for (std::size_t j = 0; j < n; ++j) s += x[i * n + j];
    out[i] = s;
  }
  auto pa = a.node();
  return make_op({m}, std::move(out), {pa}, [m, n](TensorNode& self) {
    auto& p = self.parents[0];
    if (!wants(p)) return;
    for (std::size_t i = 0; i < m; ++i) {
      const double g = self.grad[i];
      for (std::size_t j = 0; j < n; ++j) p->grad[i * n + j] += g;
    }
  });
}

Tensor add_row_bias(const Tensor& a, const Tensor& bias) {
  if (a.rank() != 2 || bias.rank() != 1)
    throw DimensionError("add_row_bias: need [m,n] and [n]");
  const std::size_t m = a.shape()[0], n = a.shape()[1];
  if (bias.shape()[0] != n)
    throw DimensionError("add_row_bias: bias length " +
                         std::to_string(bias.shape()[0]) + " != cols " +
                         std::to_string(n));
  const double* x = a.data();
  const double* b = bias.data();
  std::vector<double> out(m * n);
  for (std::size_t i = 0; i < m; ++i)
    for (std::size_t j = 0; j < n; ++j) out[i * n + j] = x[i * n + j] + b[j];
  auto pa = a.node(), pb = bias.node();
  return make_op({m, n}, std::move(out), {pa, pb}, [m, n](TensorNode& self) {
    auto& A = self.parents[0];
    auto& B = self.parents[1];
    if (wants(A))
      for (std::size_t i = 0; i < m * n; ++i) A->grad[i] += self.grad[i];
    if (wants(B))
      for (std::size_t i = 0; i < m; ++i)
        for (std::size_t j = 0; j < n; ++j)
          B->grad[j] += self.grad[i * n + j];
  });
}

Tensor scale_rows(const Tensor& a, const Tensor& s) {
  if (a.rank() != 2 || s.rank() != 1)
    throw DimensionError("scale_rows: need [m,n] and [m]");
  const std::size_t m = a.shape()[0], n = a.shape()[1];
  if (s.shape()[0] != m)
    throw DimensionError("scale_rows: scale length " +
                         std::to_string(s.shape()[0]) + " != rows " +
                         std::to_string(m));
  const double* x = a.data();
  const double* sv = s.data();
  std::vector<double> out(m * n);
  for (std::size_t i = 0; i < m; ++i)
    for (std::size_t j = 0; j < n; ++j) out[i * n + j] = x[i * n + j] * sv[i];
  auto pa = a.node(), ps = s.node();
  return make_op({m, n}, std::move(out), {pa, ps}, [m, n](TensorNode& self) {
    auto& A = self.parents[0];
    auto& S = self.parents[1];
    if (wants(A))
      for (std::size_t i = 0; i < m; ++i) {
        const double si = S->value[i];
        for (std::size_t j = 0; j < n; ++j)
          A->grad[i * n + j] += self.grad[i * n + j] * si;
      }
    if (wants(S))
      for (std::size_t i = 0; i < m; ++i) {
        double acc = 0.0;
        for (std::size_t j = 0; j < n; ++j)
          acc += self.grad[i * n + j] * A->value[i * n + j];
        S->grad[i] += acc;
      }
  });
}

// --- elementwise nonlinearities ----------------------------------------------

Tensor relu(const Tensor& a) {
  return unary_op(
      a, [](double x) { return x > 0.0 ? x : 0.0; },
      // gradient at exactly 0 is defined as 0
      [](double x, double) { return x > 0.0 ? 1.0 : 0.0; }, "relu");
}

Tensor silu(const Tensor& a) {
  return unary_op(
      a,
      [](double x) { return x / (1.0 + std::exp(-x)); },
      [](double x, double) {
        const double s = 1.0 / (1.0 + std::exp(-x));
        return s * (1.0 + x * (1.0 - s));
      },
      "silu");
}

Tensor tanh(const Tensor& a) {
  return unary_op(
      a, [](double x) { return std::tanh(x); },
      [](double, double y) { return 1.0 - y * y; }, "tanh");
}

Tensor exp(const Tensor& a) {
  return unary_op(
      a, [](double x) { return std::exp(x); },
      [](double, double y) { return y; }, "exp");
}

Tensor log(const Tensor& a) {
  for (double v : a.values())
    if (!(v > 0.0)) throw DomainError("log: non-positive input");
  return unary_op(
      a, [](double x) { return std::log(x); },
      [](double x, double) { return 1.0 / x; }, "log");
}

Tensor square(const Tensor& a) {
  return unary_op(
      a, [](double x) { return x * x; },
      [](double x, double) { return 2.0 * x; }, "square");
}

Tensor abs(const Tensor& a) {
  return unary_op(
      a, [](double x) { return std::fabs(x); },
      [](double x, double) { return x > 0.0 ? 1.0 : (x < 0.0 ? -1.0 : 0.0); },
      "abs");
}

// --- backward ----------------------------------------------------------------

void backward(const Tensor& loss) {
  const auto& root = loss.node();
  if (!root || root->value.size() != 1)
    throw DimensionError("backward: loss must be a scalar tensor");
  if (!root->in_graph) return;  // nothing requires grad

  // Post-order DFS: parents are appended before their consumers.
  std::vector<TensorNode*> order;
  std::unordered_set<TensorNode*> visited{root.get()};
  std::vector<std::pair<TensorNode*, std::size_t>> stack{{root.get(), 0}};
  while (!stack.empty()) {
    auto& [node, idx] = stack.back();
    if (idx < node->parents.size()) {
      TensorNode* p = node->parents[idx++].get();
      if (p && p->in_graph && !visited.count(p)) {
        visited.insert(p);
        stack.emplace_back(p, 0);
      }
    } else {
      order.push_back(node);
      stack.pop_back();
    }
  }

  // Intermediates get fresh zero grads; leaves keep and accumulate.
  for (TensorNode* n : order) {
    if (!n->requires_grad)
      n->grad.assign(n->value.size(), 0.0);
    else if (n->grad.size() != n->value.size())
      n->grad.assign(n->value.size(), 0.0);
  }
  root->grad[0] += 1.0;

  for (auto it = order.rbegin(); it != order.rend(); ++it)
    if ((*it)->backprop) (*it)->backprop(**it);
}

}  // namespace scorelab::numcore
