#pragma once

#include <cstddef>
#include <functional>
#include <memory>
#include <string>
#include <vector>

#include "vulnloc/rng.hpp"

namespace vulnloc {

using Shape = std::vector<int>;

namespace detail {

// One node of the computation graph. Holds the forward value, the gradient
// accumulator, and a closure that pulls this node's gradient into its parents.
struct TensorNode {
  Shape shape;
  std::vector<double> data;
  std::vector<double> grad;  // same length as data iff requires_grad
  bool requires_grad = false;

  std::vector<std::shared_ptr<TensorNode>> parents;
  std::function<void(TensorNode&)> backward_fn;

  std::size_t numel() const { return data.size(); }
  void ensure_grad() {
    if (grad.size() != data.size()) grad.assign(data.size(), 0.0);
  }
};

}  // namespace detail

// Globally disables graph construction while alive (inference paths).
class NoGradGuard {
 public:
  NoGradGuard();
  ~NoGradGuard();
  NoGradGuard(const NoGradGuard&) = delete;
  NoGradGuard& operator=(const NoGradGuard&) = delete;

  static bool grad_enabled();

 private:
  bool previous_;
};

// Dense row-major tensor of doubles with reverse-mode autodiff.
// Values are immutable after construction except for gradient accumulation
// during backward(); copying a Tensor copies the handle, not the buffer.
class Tensor {
 public:
  Tensor() = default;
  explicit Tensor(std::shared_ptr<detail::TensorNode> node)
      : node_(std::move(node)) {}

  static Tensor zeros(Shape shape, bool requires_grad = false);
  static Tensor full(Shape shape, double value, bool requires_grad = false);
  static Tensor from_data(Shape shape, std::vector<double> values,
                          bool requires_grad = false);
  static Tensor scalar(double value, bool requires_grad = false);
  static Tensor randn(Shape shape, Rng& rng, double stddev,
                      bool requires_grad = false);

  bool defined() const { return node_ != nullptr; }
  const Shape& shape() const { return node_->shape; }
  int dim(int i) const { return node_->shape[static_cast<std::size_t>(i)]; }
  int ndim() const { return static_cast<int>(node_->shape.size()); }
  std::size_t numel() const { return node_->numel(); }

  // 2-D convenience; everything in this toolkit is at most rank 2
  int rows() const;
  int cols() const;
  double at(int i, int j) const;
  double& at(int i, int j);

  double operator[](std::size_t i) const { return node_->data[i]; }
  double& operator[](std::size_t i) { return node_->data[i]; }
  const std::vector<double>& data() const { return node_->data; }
  std::vector<double>& data() { return node_->data; }

  double item() const;  // value of a single-element tensor

  bool requires_grad() const { return node_->requires_grad; }
  void set_requires_grad(bool value);
  const std::vector<double>& grad() const;
  double grad_at(int i, int j) const;
  void zero_grad();

  // Reverse-mode sweep from a single-element tensor. Visits each reachable
  // node exactly once in reverse topological order and accumulates (never
  // overwrites) gradients into shared parents.
  void backward();

  // Deep copy of the value buffer; drops graph history.
  Tensor detached_copy() const;

  std::shared_ptr<detail::TensorNode> node() const { return node_; }

 private:
  std::shared_ptr<detail::TensorNode> node_;
};

// ---- operations -----------------------------------------------------------
// Every op returns a fresh tensor; when grad mode is on and an input requires
// grad, the result records a backward closure. Shape violations throw
// std::invalid_argument; numeric-domain violations throw std::domain_error.

Tensor matmul(const Tensor& a, const Tensor& b);
Tensor transpose(const Tensor& a);
Tensor add(const Tensor& a, const Tensor& b);
Tensor add_rowvec(const Tensor& a, const Tensor& bias);  // [n,d] + [1,d]
Tensor scale(const Tensor& a, double s);
Tensor scalar_mul(const Tensor& s, const Tensor& a);  // s is 1x1
Tensor relu(const Tensor& a);

// Row/column-wise softmax with max-subtraction. A slice consisting entirely
// of -inf has no finite mass to normalize and raises std::domain_error.
Tensor softmax(const Tensor& a, int axis);

Tensor layer_norm(const Tensor& x, const Tensor& gamma, const Tensor& beta,
                  double eps = 1e-5);
Tensor embedding_lookup(const Tensor& table, const std::vector<int>& ids);
Tensor concat_cols(const std::vector<Tensor>& parts);
Tensor slice_col(const Tensor& a, int col);            // -> [n,1]
Tensor gather_rows(const Tensor& a, const std::vector<int>& rows);

// Per-group row pooling used to fuse token vectors into statement vectors.
// Groups must be non-empty; max-pool ties route the gradient to the lowest
// member row index.
Tensor pool_rows_max(const Tensor& h, const std::vector<std::vector<int>>& groups);
Tensor pool_rows_mean(const Tensor& h, const std::vector<std::vector<int>>& groups);

// Mean binary cross-entropy of probabilities against one hard label.
// Probabilities are clamped to [1e-12, 1 - 1e-12] before the log.
Tensor cross_entropy(const Tensor& p, int label);

Tensor sum_all(const Tensor& a);
Tensor mean_all(const Tensor& a);

// Inverted-scale dropout; identity when rate == 0.
Tensor dropout(const Tensor& a, double rate, Rng& rng);

// Throws std::domain_error naming `context` if any value is NaN/Inf.
void ensure_finite(const Tensor& t, const std::string& context);

inline constexpr double kProbEps = 1e-12;

}  // namespace vulnloc
