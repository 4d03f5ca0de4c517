#include "vulnloc/tensor.hpp"

#include <cmath>
#include <stdexcept>
#include <unordered_set>

namespace vulnloc {

namespace {

thread_local bool g_grad_enabled = true;

std::size_t shape_numel(const Shape& shape) {
  std::size_t n = 1;
  for (int extent : shape) {
    if (extent <= 0) throw std::invalid_argument("tensor extents must be positive");
    n *= static_cast<std::size_t>(extent);
  }
  return n;
}

}  // namespace

NoGradGuard::NoGradGuard() : previous_(g_grad_enabled) { g_grad_enabled = false; }
NoGradGuard::~NoGradGuard() { g_grad_enabled = previous_; }
bool NoGradGuard::grad_enabled() { return g_grad_enabled; }

Tensor Tensor::zeros(Shape shape, bool requires_grad) {
  return full(std::move(shape), 0.0, requires_grad);
}

Tensor Tensor::full(Shape shape, double value, bool requires_grad) {
  auto node = std::make_shared<detail::TensorNode>();
  std::size_t n = shape_numel(shape);
  node->shape = std::move(shape);
  node->data.assign(n, value);
  node->requires_grad = requires_grad;
  if (requires_grad) node->ensure_grad();
  return Tensor(std::move(node));
}

Tensor Tensor::from_data(Shape shape, std::vector<double> values,
                         bool requires_grad) {
  if (shape_numel(shape) != values.size()) {
    throw std::invalid_argument("tensor data length does not match shape");
  }
  auto node = std::make_shared<detail::TensorNode>();
  node->shape = std::move(shape);
  node->data = std::move(values);
  node->requires_grad = requires_grad;
  if (requires_grad) node->ensure_grad();
  return Tensor(std::move(node));
}

Tensor Tensor::scalar(double value, bool requires_grad) {
  return from_data({1, 1}, {value}, requires_grad);
}

Tensor Tensor::randn(Shape shape, Rng& rng, double stddev, bool requires_grad) {
  std::size_t n = shape_numel(shape);
  std::vector<double> values(n);
  for (auto& v : values) v = rng.normal(0.0, stddev);
  return from_data(std::move(shape), std::move(values), requires_grad);
}

int Tensor::rows() const {
  if (ndim() != 2) throw std::invalid_argument("rows(): tensor is not 2-D");
  return node_->shape[0];
}

int Tensor::cols() const {
  if (ndim() != 2) throw std::invalid_argument("cols(): tensor is not 2-D");
  return node_->shape[1];
}

double Tensor::at(int i, int j) const {
  return node_->data[static_cast<std::size_t>(i) * cols() + j];
}

double& Tensor::at(int i, int j) {
  return node_->data[static_cast<std::size_t>(i) * cols() + j];
}

double Tensor::item() const {
  if (numel() != 1) throw std::invalid_argument("item(): tensor has more than one element");
  return node_->data[0];
}

void Tensor::set_requires_grad(bool value) {
  node_->requires_grad = value;
  if (value) node_->ensure_grad();
}

const std::vector<double>& Tensor::grad() const {
  if (!node_->requires_grad || node_->grad.size() != node_->data.size()) {
    throw std::runtime_error("grad(): tensor has no gradient buffer");
  }
  return node_->grad;
}

double Tensor::grad_at(int i, int j) const {
  return grad()[static_cast<std::size_t>(i) * cols() + j];
}

void Tensor::zero_grad() {
  if (node_->requires_grad) node_->grad.assign(node_->data.size(), 0.0);
}

Tensor Tensor::detached_copy() const {
  return from_data(node_->shape, node_->data, false);
}

void Tensor::backward() {
  if (!node_) throw std::runtime_error("backward(): undefined tensor");
  if (numel() != 1) {
    throw std::invalid_argument("backward(): root must be a single-element tensor");
  }

  // Iterative post-order DFS; `expanded` marks nodes whose children are
  // already on the stack, so each node lands in `topo` exactly once.
  std::vector<detail::TensorNode*> topo;
  std::unordered_set<detail::TensorNode*> visited;
  std::vector<std::pair<detail::TensorNode*, bool>> stack;
  stack.emplace_back(node_.get(), false);
  while (!stack.empty()) {
    auto [cur, expanded] = stack.back();
    stack.pop_back();
    if (expanded) {
      topo.push_back(cur);
      continue;
    }
    if (visited.count(cur)) continue;
    visited.insert(cur);
    stack.emplace_back(cur, true);
    for (const auto& parent : cur->parents) {
      if (!visited.count(parent.get())) stack.emplace_back(parent.get(), false);
    }
  }

  node_->ensure_grad();
  node_->grad[0] += 1.0;
  for (auto it = topo.rbegin(); it != topo.rend(); ++it) {
    detail::TensorNode* n = *it;
    if (n->backward_fn) n->backward_fn(*n);
  }
}

void ensure_finite(const Tensor& t, const std::string& context) {
  for (double v : t.data()) {
    if (!std::isfinite(v)) {
      throw std::domain_error("non-finite value in " + context);
    }
  }
}

}  // namespace vulnloc
