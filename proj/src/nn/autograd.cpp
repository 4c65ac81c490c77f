#include "pagan/nn/autograd.hpp"

#include <algorithm>
#include <unordered_map>
#include <unordered_set>

#include "pagan/nn/ops.hpp"

namespace pagan::nn {

namespace {

thread_local bool t_grad_mode = true;

std::vector<Node*> topological_order(Node* root) {
  std::vector<Node*> order;
  std::unordered_set<Node*> visited;
  // Iterative post-order DFS.
  std::vector<std::pair<Node*, std::size_t>> stack;
  stack.emplace_back(root, 0);
  visited.insert(root);
  while (!stack.empty()) {
    auto& [node, next] = stack.back();
    if (next < node->inputs.size()) {
      Node* child = node->inputs[next++].node();
      if (child->requires_grad && visited.insert(child).second) stack.emplace_back(child, 0);
    } else {
      order.push_back(node);
      stack.pop_back();
    }
  }
  return order;  // inputs before consumers
}

// Runs the reverse sweep and returns the accumulated gradient of each node.
std::unordered_map<Node*, Var> reverse_sweep(const Var& output, const Tensor& seed) {
  std::unordered_map<Node*, Var> grads;
  if (!output.requires_grad()) return grads;
  Tensor seed_value = seed.empty() ? Tensor(output.shape(), 1.0) : seed;
  if (seed_value.shape() != output.shape()) {
    throw std::invalid_argument("gradient seed shape " + shape_string(seed_value.shape()) +
                                " does not match output " + shape_string(output.shape()));
  }
  grads.emplace(output.node(), constant(std::move(seed_value)));

  auto order = topological_order(output.node());
  // Keep the nodes alive while closures run.
  std::unordered_map<Node*, Var> handles;
  handles.emplace(output.node(), output);
  for (auto* node : order) {
    for (const auto& in : node->inputs) handles.emplace(in.node(), in);
  }

  for (auto it = order.rbegin(); it != order.rend(); ++it) {
    Node* node = *it;
    auto found = grads.find(node);
    if (found == grads.end() || node->is_leaf || !node->backward) continue;
    const Var gy = found->second;
    std::vector<Var> in_grads = node->backward(gy, handles.at(node));
    for (std::size_t i = 0; i < node->inputs.size(); ++i) {
      const Var& in = node->inputs[i];
      if (!in.requires_grad() || !in_grads[i]) continue;
      auto slot = grads.find(in.node());
      if (slot == grads.end()) {
        grads.emplace(in.node(), in_grads[i]);
      } else {
        slot->second = add(slot->second, in_grads[i]);
      }
    }
  }
  return grads;
}

}  // namespace

Tensor& Var::grad() {
  if (node_->grad.empty()) node_->grad = Tensor(node_->value.shape(), 0.0);
  return node_->grad;
}

Var constant(Tensor value) {
  auto node = std::make_shared<Node>();
  node->value = std::move(value);
  node->op = "constant";
  return Var(std::move(node));
}

Var parameter(Tensor value) {
  auto node = std::make_shared<Node>();
  node->value = std::move(value);
  node->requires_grad = true;
  node->op = "parameter";
  return Var(std::move(node));
}

Var make_node(Tensor value, std::string op, std::vector<Var> inputs, BackwardFn backward) {
  if (!value.all_finite()) throw NumericalError("non-finite value produced by op '" + op + "'");
  auto node = std::make_shared<Node>();
  node->value = std::move(value);
  node->op = std::move(op);
  node->is_leaf = false;
  const bool any = std::any_of(inputs.begin(), inputs.end(),
                               [](const Var& v) { return v.requires_grad(); });
  if (t_grad_mode && any) {
    node->requires_grad = true;
    node->inputs = std::move(inputs);
    node->backward = std::move(backward);
  }
  return Var(std::move(node));
}

bool grad_mode_enabled() { return t_grad_mode; }

NoGradGuard::NoGradGuard() : previous_(t_grad_mode) { t_grad_mode = false; }
NoGradGuard::~NoGradGuard() { t_grad_mode = previous_; }

std::vector<Var> gradients(const Var& output, const std::vector<Var>& wrt, const Tensor& seed,
                           bool create_graph) {
  std::unordered_map<Node*, Var> grads;
  if (create_graph) {
    grads = reverse_sweep(output, seed);
  } else {
    NoGradGuard guard;
    grads = reverse_sweep(output, seed);
  }
  std::vector<Var> out;
  out.reserve(wrt.size());
  for (const auto& w : wrt) {
    auto it = grads.find(w.node());
    out.push_back(it == grads.end() ? constant(Tensor(w.shape(), 0.0)) : it->second);
  }
  return out;
}

void backward(const Var& output, const Tensor& seed) {
  NoGradGuard guard;
  auto grads = reverse_sweep(output, seed);
  for (auto& [node, g] : grads) {
    if (!node->is_leaf) continue;
    if (node->grad.empty()) node->grad = Tensor(node->value.shape(), 0.0);
    auto dst = node->grad.values();
    auto src = g.value().values();
    for (std::size_t i = 0; i < dst.size(); ++i) dst[i] += src[i];
  }
}

}  // namespace pagan::nn
