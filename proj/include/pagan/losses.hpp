#pragma once

#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "pagan/bitaug.hpp"
#include "pagan/nn/ops.hpp"
#include "pagan/random.hpp"

// Adversarial objectives over checksum-labeled logits. "true" and "fake"
// always mean the TRUE/FAKE classes, never the real/synthetic origin.
namespace pagan::losses {

enum class Family { NS, Hinge, WganGp };
enum class GpVariant { OneCentered, ZeroCentered };

struct LossConfig {
  Family family = Family::NS;
  double label_smooth_positive = 1.0;
  double gp_weight = 0.0;
  GpVariant gp_variant = GpVariant::OneCentered;
  int wgan_draws = 1;
  long gp_rampup_iters = 0;

  // Throws std::invalid_argument when the invariants do not hold.
  void validate() const;
};

// 1 for the one-centered penalty, 0.1 for the zero-centered one.
double default_gp_weight(GpVariant variant);

std::string family_name(Family family);
Family parse_family(const std::string& name);
std::string gp_variant_name(GpVariant variant);
GpVariant parse_gp_variant(const std::string& name);

struct LossPair {
  nn::Var d_loss;
  nn::Var g_loss;
};

// Logits are raw scores; sigmoid is applied here through softplus, so
// -log sigmoid(t) = softplus(-t) and -log(1 - sigmoid(t)) = softplus(t).
LossPair ns_losses(const nn::Var& true_logits, const nn::Var& fake_logits, const LossConfig& cfg);
LossPair hinge_losses(const nn::Var& true_logits, const nn::Var& fake_logits);

// Maps samples [N, ...] and bits [N, level] to scores [N, 1].
using Critic = std::function<nn::Var(const nn::Var& samples, const nn::Tensor& bits)>;

struct WganResult {
  nn::Var d_objective;  // -(1/M) sum_m L_m, minimized by D
  nn::Var g_objective;  // max_m L_m, minimized by G
  std::vector<double> draw_losses;
  std::size_t best_draw = 0;
};

// L_m = mean critic score of TRUE rows - mean of FAKE rows, where draw m
// pairs bit sequence i with real row i and fake row i.
WganResult wgan_multidraw(const Critic& critic, const nn::Var& real, const nn::Var& fake,
                          const std::vector<std::vector<bitaug::BitSequence>>& draws);

// Penalty at x = a real + (1 - a) fake, one a ~ U(0,1) per pair; the pair
// shares its bit row so bit channels stay fixed along the line. Returns
// weight * mean(penalty) as a differentiable scalar.
nn::Var gradient_penalty(const Critic& critic, const nn::Tensor& real, const nn::Tensor& fake,
                         const nn::Tensor& bits, const LossConfig& cfg, double weight, Rng& rng);

// gp_weight ramped linearly from 0 over gp_rampup_iters after a level-up;
// the full weight when no level-up has happened or the ramp is disabled.
double effective_gp_weight(const LossConfig& cfg, std::optional<long> iters_since_level_up);

}  // namespace pagan::losses
