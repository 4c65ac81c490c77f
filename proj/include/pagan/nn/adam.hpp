#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "pagan/nn/autograd.hpp"

namespace pagan::nn {

struct AdamHyper {
  double lr = 2e-4;
  double beta1 = 0.5;
  double beta2 = 0.999;
  double eps = 1e-8;
};

// Moments for a list of parameters. Parameters added later (e.g. new bit
// weights after a level-up) start with zero moments and their own step count.
struct AdamState {
  AdamHyper hyper;
  std::vector<Tensor> first_moment;
  std::vector<Tensor> second_moment;
  std::vector<std::int64_t> steps;

  void add_slot(const Shape& shape);
  std::size_t slots() const { return steps.size(); }
};

// Bias-corrected Adam update of params in place.
void adam_step(std::span<Tensor* const> params, std::span<const Tensor* const> grads,
               AdamState& state);

// Optimizer bound to graph parameters; consumes and clears their .grad().
class Adam {
 public:
  explicit Adam(AdamHyper hyper = {});
  Adam(std::vector<Var> params, AdamHyper hyper);

  void add_parameters(const std::vector<Var>& params);
  void step();
  void zero_grad();
  void reset();  // drops moments and step counts, keeps parameters

  double lr() const { return state_.hyper.lr; }
  void set_lr(double lr) { state_.hyper.lr = lr; }
  const AdamState& state() const { return state_; }
  const std::vector<Var>& parameters() const { return params_; }

 private:
  std::vector<Var> params_;
  AdamState state_;
};

}  // namespace pagan::nn
