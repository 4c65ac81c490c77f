#include "pagan/nn/adam.hpp"

#include <cmath>
#include <stdexcept>

namespace pagan::nn {

void AdamState::add_slot(const Shape& shape) {
  first_moment.emplace_back(shape, 0.0);
  second_moment.emplace_back(shape, 0.0);
  steps.push_back(0);
}

void adam_step(std::span<Tensor* const> params, std::span<const Tensor* const> grads,
               AdamState& state) {
  if (params.size() != grads.size() || params.size() != state.slots()) {
    throw std::invalid_argument("adam_step: parameter, gradient and state counts differ");
  }
  for (std::size_t i = 0; i < params.size(); ++i) {
    if (params[i]->shape() != grads[i]->shape() ||
        params[i]->shape() != state.first_moment[i].shape()) {
      throw std::invalid_argument("adam_step: shape mismatch for parameter " + std::to_string(i));
    }
    if (!grads[i]->all_finite()) throw NumericalError("adam_step: non-finite gradient");
  }
  const auto& h = state.hyper;
  for (std::size_t i = 0; i < params.size(); ++i) {
    const std::int64_t t = ++state.steps[i];
    const double c1 = 1.0 - std::pow(h.beta1, static_cast<double>(t));
    const double c2 = 1.0 - std::pow(h.beta2, static_cast<double>(t));
    auto p = params[i]->values();
    auto g = grads[i]->values();
    auto m = state.first_moment[i].values();
    auto v = state.second_moment[i].values();
    for (std::size_t j = 0; j < p.size(); ++j) {
      m[j] = h.beta1 * m[j] + (1.0 - h.beta1) * g[j];
      v[j] = h.beta2 * v[j] + (1.0 - h.beta2) * g[j] * g[j];
      const double m_hat = m[j] / c1;
      const double v_hat = v[j] / c2;
      p[j] -= h.lr * m_hat / (std::sqrt(v_hat) + h.eps);
    }
  }
}

Adam::Adam(AdamHyper hyper) { state_.hyper = hyper; }

Adam::Adam(std::vector<Var> params, AdamHyper hyper) : Adam(hyper) { add_parameters(params); }

void Adam::add_parameters(const std::vector<Var>& params) {
  for (const auto& p : params) {
    if (!p.requires_grad()) throw std::invalid_argument("Adam: parameter does not require grad");
    params_.push_back(p);
    state_.add_slot(p.shape());
  }
}

void Adam::step() {
  std::vector<Tensor*> values;
  std::vector<const Tensor*> grads;
  values.reserve(params_.size());
  grads.reserve(params_.size());
  for (auto& p : params_) {
    values.push_back(&p.mutable_value());
    grads.push_back(&p.grad());
  }
  adam_step(values, grads, state_);
  zero_grad();
}

void Adam::zero_grad() {
  for (auto& p : params_) p.zero_grad();
}

void Adam::reset() {
  const AdamHyper hyper = state_.hyper;
  state_ = AdamState{};
  state_.hyper = hyper;
  for (const auto& p : params_) state_.add_slot(p.shape());
}

}  // namespace pagan::nn
