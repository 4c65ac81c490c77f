#pragma once

#include <functional>
#include <memory>
#include <stdexcept>
#include <string>
#include <vector>

#include "pagan/nn/tensor.hpp"

namespace pagan::nn {

// Raised when an operation produces NaN/Inf or receives non-finite gradients.
class NumericalError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class Var;

// Computes input gradients from the output gradient `gy` of node `self`.
// Implementations are written in terms of differentiable ops so that the
// backward pass can itself be differentiated (needed for gradient penalties).
using BackwardFn = std::function<std::vector<Var>(const Var& gy, const Var& self)>;

struct Node {
  Tensor value;
  Tensor grad;  // empty until materialized
  bool requires_grad = false;
  bool is_leaf = true;
  std::string op;
  std::vector<Var> inputs;
  BackwardFn backward;
};

// Shared handle to a node of the dynamic computation graph.
class Var {
 public:
  Var() = default;
  explicit Var(std::shared_ptr<Node> node) : node_(std::move(node)) {}

  explicit operator bool() const { return static_cast<bool>(node_); }

  const Tensor& value() const { return node_->value; }
  Tensor& mutable_value() { return node_->value; }
  const Shape& shape() const { return node_->value.shape(); }
  std::size_t size() const { return node_->value.size(); }
  bool requires_grad() const { return node_->requires_grad; }

  bool has_grad() const { return !node_->grad.empty(); }
  // Accumulated gradient; materialized as zeros on first access.
  Tensor& grad();
  void zero_grad() { node_->grad = Tensor(); }

  Node* node() const { return node_.get(); }
  bool same_node(const Var& other) const { return node_ == other.node_; }

 private:
  std::shared_ptr<Node> node_;
};

Var constant(Tensor value);
Var parameter(Tensor value);

// Builds an interior node. Records inputs and the backward closure only when
// gradient recording is enabled and some input requires a gradient.
Var make_node(Tensor value, std::string op, std::vector<Var> inputs, BackwardFn backward);

bool grad_mode_enabled();

// Disables graph recording in the current thread for its lifetime.
class NoGradGuard {
 public:
  NoGradGuard();
  ~NoGradGuard();
  NoGradGuard(const NoGradGuard&) = delete;
  NoGradGuard& operator=(const NoGradGuard&) = delete;

 private:
  bool previous_;
};

// d(output)/d(wrt) contracted with `seed` (ones when empty). Unreached inputs
// get zero gradients. With create_graph the returned Vars are differentiable.
std::vector<Var> gradients(const Var& output, const std::vector<Var>& wrt,
                           const Tensor& seed = Tensor(), bool create_graph = false);

// Accumulates d(output)/d(leaf) into the .grad() of every reachable leaf
// that requires a gradient.
void backward(const Var& output, const Tensor& seed = Tensor());

}  // namespace pagan::nn
