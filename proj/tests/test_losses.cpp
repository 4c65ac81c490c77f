#include <gtest/gtest.h>

#include <cmath>

#include "pagan/losses.hpp"
#include "pagan/nn/network.hpp"
#include "pagan/oracles.hpp"

namespace pagan::losses {
namespace {

using bitaug::BitSequence;
using nn::Tensor;
using nn::Var;

Tensor random_tensor(nn::Shape shape, Rng& rng, double sd = 1.0) {
  Tensor t(std::move(shape));
  for (double& v : t.values()) v = sd * standard_normal(rng);
  return t;
}

double scalar(const Var& v) { return v.value()[0]; }

double softplus_ref(double t) { return std::log1p(std::exp(t)); }

TEST(LossConfig, Validation) {
  LossConfig cfg;
  EXPECT_NO_THROW(cfg.validate());
  cfg.family = Family::WganGp;
  EXPECT_THROW(cfg.validate(), std::invalid_argument);
  cfg.gp_weight = 1.0;
  EXPECT_NO_THROW(cfg.validate());
  cfg.wgan_draws = 0;
  EXPECT_THROW(cfg.validate(), std::invalid_argument);
  cfg = LossConfig{};
  cfg.label_smooth_positive = 0.0;
  EXPECT_THROW(cfg.validate(), std::invalid_argument);
  EXPECT_EQ(parse_family(family_name(Family::Hinge)), Family::Hinge);
  EXPECT_EQ(parse_gp_variant(gp_variant_name(GpVariant::ZeroCentered)), GpVariant::ZeroCentered);
  EXPECT_EQ(default_gp_weight(GpVariant::OneCentered), 1.0);
  EXPECT_EQ(default_gp_weight(GpVariant::ZeroCentered), 0.1);
}

TEST(NsLoss, ZeroLogits) {
  const auto l = ns_losses(nn::constant(Tensor({5}, 0.0)), nn::constant(Tensor({3}, 0.0)), LossConfig{});
  EXPECT_NEAR(scalar(l.d_loss), 2.0 * std::log(2.0), 1e-14);
  EXPECT_NEAR(scalar(l.g_loss), 2.0 * std::log(2.0), 1e-14);
}

TEST(NsLoss, MatchesDirectFormula) {
  Rng rng(1);
  const Tensor t = random_tensor({6}, rng, 2.0), f = random_tensor({4}, rng, 2.0);
  LossConfig cfg;
  cfg.label_smooth_positive = 0.9;
  const auto l = ns_losses(nn::constant(t), nn::constant(f), cfg);
  double d = 0.0, g = 0.0;
  for (double v : t.values()) {
    d += (0.9 * softplus_ref(-v) + 0.1 * softplus_ref(v)) / 6.0;
    g += softplus_ref(v) / 6.0;
  }
  for (double v : f.values()) {
    d += softplus_ref(v) / 4.0;
    g += softplus_ref(-v) / 4.0;
  }
  EXPECT_NEAR(scalar(l.d_loss), d, 1e-12);
  EXPECT_NEAR(scalar(l.g_loss), g, 1e-12);
}

TEST(NsLoss, SmoothingTargetsPointNine) {
  // With a smoothed target only the positive term changes, and its minimizer
  // moves to sigmoid(t) = 0.9.
  const double logit = std::log(9.0);
  LossConfig cfg;
  cfg.label_smooth_positive = 0.9;
  Var t = nn::parameter(Tensor({1}, logit));
  auto l = ns_losses(t, nn::constant(Tensor({1}, 0.0)), cfg);
  const auto g = nn::gradients(l.d_loss, {t}).front();
  EXPECT_NEAR(g.value()[0], 0.0, 1e-12);
}

TEST(NsLoss, SwappingClassesExchangesRoles) {
  Rng rng(2);
  const Tensor a = random_tensor({7}, rng, 2.0), b = random_tensor({7}, rng, 2.0);
  const auto ab = ns_losses(nn::constant(a), nn::constant(b), LossConfig{});
  const auto ba = ns_losses(nn::constant(b), nn::constant(a), LossConfig{});
  EXPECT_NEAR(scalar(ab.d_loss), scalar(ba.g_loss), 1e-12);
  EXPECT_NEAR(scalar(ab.g_loss), scalar(ba.d_loss), 1e-12);
}

TEST(NsLoss, EmptyClass) {
  EXPECT_THROW(ns_losses(nn::constant(Tensor()), nn::constant(Tensor({2}, 0.0)), LossConfig{}),
               std::invalid_argument);
  EXPECT_THROW(hinge_losses(nn::constant(Tensor({2}, 0.0)), nn::constant(Tensor())), std::invalid_argument);
}

TEST(NsLoss, UniformLogitGradientsAreOpposite) {
  for (double u : {-1.5, 0.0, 0.7}) {
    Var t = nn::parameter(Tensor({4}, u)), f = nn::parameter(Tensor({4}, u));
    const auto g = nn::gradients(ns_losses(t, f, LossConfig{}).d_loss, {t, f});
    for (std::size_t i = 0; i < 4; ++i) {
      // d/dt softplus(-t) = -sigmoid(-t); d/df softplus(f) = sigmoid(f)
      const double lhs = g[0].value()[i], rhs = g[1].value()[i];
      EXPECT_NEAR(lhs + rhs, (1.0 / (1.0 + std::exp(-u)) - 1.0 / (1.0 + std::exp(u))) / 4.0, 1e-15);
      if (u == 0.0) EXPECT_NEAR(lhs, -rhs, 1e-15);
    }
  }
}

TEST(NsLoss, GeneratorLossFallsWithFakeLogits) {
  Rng rng(3);
  const Tensor t = random_tensor({5}, rng);
  Tensor f = random_tensor({5}, rng);
  double prev = scalar(ns_losses(nn::constant(t), nn::constant(f), LossConfig{}).g_loss);
  for (int step = 0; step < 10; ++step) {
    f[step % 5] += 0.5;
    const double now = scalar(ns_losses(nn::constant(t), nn::constant(f), LossConfig{}).g_loss);
    EXPECT_LT(now, prev);
    prev = now;
  }
}

TEST(NsLoss, ExtremeLogitsStayFinite) {
  const auto l = ns_losses(nn::constant(Tensor({2}, std::vector<double>{-800.0, 800.0})),
                           nn::constant(Tensor({1}, 900.0)), LossConfig{});
  EXPECT_TRUE(std::isfinite(scalar(l.d_loss)));
  EXPECT_TRUE(std::isfinite(scalar(l.g_loss)));
}

TEST(HingeLoss, Examples) {
  const auto met = hinge_losses(nn::constant(Tensor({3}, 1.0)), nn::constant(Tensor({2}, -1.0)));
  EXPECT_EQ(scalar(met.d_loss), 0.0);
  const auto zero = hinge_losses(nn::constant(Tensor({3}, 0.0)), nn::constant(Tensor({2}, 0.0)));
  EXPECT_EQ(scalar(zero.d_loss), 2.0);
  Rng rng(4);
  const Tensor a = random_tensor({4}, rng), b = random_tensor({4}, rng);
  const double ab = scalar(hinge_losses(nn::constant(a), nn::constant(b)).g_loss);
  const double ba = scalar(hinge_losses(nn::constant(b), nn::constant(a)).g_loss);
  EXPECT_NEAR(ab, -ba, 1e-15);
  double direct = 0.0;
  for (std::size_t i = 0; i < 4; ++i) direct += (a[i] - b[i]) / 4.0;
  EXPECT_NEAR(ab, direct, 1e-15);
}

// Linear critic on [samples | bits].
struct LinearCritic {
  Tensor w;
  std::size_t width;
  Var operator()(const Var& x, const Tensor& bits) const {
    const std::size_t n = x.shape()[0];
    std::vector<Var> cols{nn::reshape(x, {n, width})};
    if (!bits.empty()) cols.push_back(nn::constant(bits));
    const Var joined = nn::concat_columns(cols);
    const std::size_t d = joined.shape()[1];
    Tensor head({d, 1}, std::vector<double>(w.values().begin(), w.values().begin() + static_cast<std::ptrdiff_t>(d)));
    return nn::matmul(joined, nn::constant(std::move(head)));
  }
};

Critic make_linear(Rng& rng, std::size_t width, std::size_t max_bits) {
  LinearCritic c{random_tensor({width + max_bits}, rng), width};
  return [c](const Var& x, const Tensor& bits) { return c(x, bits); };
}

double draw_loss_reference(const Critic& critic, const Tensor& real, const Tensor& fake,
                           const std::vector<BitSequence>& bits) {
  const std::size_t n = real.dim(0);
  const Tensor b = bitaug::bits_matrix(bits, bits.front().length());
  const Tensor sr = critic(nn::constant(real), b).value(), sf = critic(nn::constant(fake), b).value();
  double t = 0.0, f = 0.0;
  std::size_t nt = 0, nf = 0;
  for (std::size_t i = 0; i < n; ++i) {
    const bool real_true = bits[i].parity() == 0;
    (real_true ? t : f) += sr[i];
    (real_true ? nt : nf) += 1;
    (real_true ? f : t) += sf[i];
    (real_true ? nf : nt) += 1;
  }
  return t / static_cast<double>(nt) - f / static_cast<double>(nf);
}

TEST(Wgan, SingleDrawIsCriticDifference) {
  Rng rng(5);
  const Critic critic = make_linear(rng, 3, 2);
  const Tensor real = random_tensor({6, 3}, rng), fake = random_tensor({6, 3}, rng);
  const std::vector<BitSequence> zeros(6, BitSequence{{}});
  const auto r = wgan_multidraw(critic, nn::constant(real), nn::constant(fake), {zeros});
  const Tensor sr = critic(nn::constant(real), Tensor()).value(), sf = critic(nn::constant(fake), Tensor()).value();
  double diff = 0.0;
  for (std::size_t i = 0; i < 6; ++i) diff += (sr[i] - sf[i]) / 6.0;
  EXPECT_NEAR(r.draw_losses[0], diff, 1e-13);
  EXPECT_NEAR(scalar(r.g_objective), diff, 1e-13);
  EXPECT_NEAR(scalar(r.d_objective), -diff, 1e-13);
}

TEST(Wgan, IdenticalDrawsAverageToEither) {
  Rng rng(6);
  const Critic critic = make_linear(rng, 2, 2);
  const Tensor real = random_tensor({4, 2}, rng), fake = random_tensor({4, 2}, rng);
  const auto draw = bitaug::sample_bits(2, 0.5, 4, rng);
  const auto one = wgan_multidraw(critic, nn::constant(real), nn::constant(fake), {draw});
  const auto two = wgan_multidraw(critic, nn::constant(real), nn::constant(fake), {draw, draw});
  EXPECT_EQ(scalar(two.d_objective), scalar(one.d_objective));
  EXPECT_EQ(scalar(two.g_objective), scalar(one.g_objective));
}

TEST(Wgan, OppositeDrawsReportMax) {
  Rng rng(7);
  const Critic critic = make_linear(rng, 2, 3);
  const Tensor real = random_tensor({5, 2}, rng), fake = random_tensor({5, 2}, rng, 3.0);
  for (int rep = 0; rep < 10; ++rep) {
    auto a = bitaug::sample_bits(3, 0.5, 5, rng);
    // Keep both classes populated in each draw.
    a[0].bits = {0, 0, 0};
    a[1].bits = {1, 0, 0};
    const auto b = bitaug::opposite_checksum_bits(a, rng);
    const auto r = wgan_multidraw(critic, nn::constant(real), nn::constant(fake), {a, b});
    const double la = draw_loss_reference(critic, real, fake, a), lb = draw_loss_reference(critic, real, fake, b);
    EXPECT_NEAR(r.draw_losses[0], la, 1e-12);
    EXPECT_NEAR(r.draw_losses[1], lb, 1e-12);
    EXPECT_NEAR(scalar(r.g_objective), std::max(la, lb), 1e-12);
    EXPECT_EQ(r.best_draw, la >= lb ? 0u : 1u);
    EXPECT_NEAR(scalar(r.d_objective), -0.5 * (la + lb), 1e-12);
  }
}

TEST(Wgan, ZeroDraws) {
  Rng rng(8);
  const Critic critic = make_linear(rng, 2, 0);
  const Tensor x = random_tensor({2, 2}, rng);
  EXPECT_THROW(wgan_multidraw(critic, nn::constant(x), nn::constant(x), {}), std::invalid_argument);
}

TEST(GradientPenalty, UnitLinearCriticHasNoOneCenteredPenalty) {
  Rng rng(9);
  Tensor w({3}, std::vector<double>{0.6, 0.0, 0.8});
  const Critic critic = [w](const Var& x, const Tensor&) {
    return nn::matmul(x, nn::constant(w.reshaped({3, 1})));
  };
  LossConfig cfg;
  cfg.family = Family::WganGp;
  cfg.gp_weight = 1.0;
  const Tensor real = random_tensor({5, 3}, rng), fake = random_tensor({5, 3}, rng);
  EXPECT_NEAR(scalar(gradient_penalty(critic, real, fake, Tensor(), cfg, 1.0, rng)), 0.0, 1e-14);
}

TEST(GradientPenalty, ConstantCritic) {
  Rng rng(10);
  const Critic critic = [](const Var& x, const Tensor&) {
    return nn::add_scalar(nn::scale(nn::matmul(x, nn::constant(Tensor({2, 1}, 0.0))), 1.0), 0.3);
  };
  const Tensor real = random_tensor({4, 2}, rng), fake = random_tensor({4, 2}, rng);
  LossConfig cfg;
  cfg.family = Family::WganGp;
  cfg.gp_weight = 1.0;
  EXPECT_NEAR(scalar(gradient_penalty(critic, real, fake, Tensor(), cfg, 1.0, rng)), 1.0, 1e-10);
  cfg.gp_variant = GpVariant::ZeroCentered;
  cfg.gp_weight = 0.1;
  EXPECT_EQ(scalar(gradient_penalty(critic, real, fake, Tensor(), cfg, 0.1, rng)), 0.0);
}

TEST(GradientPenalty, MatchesFiniteDifferences) {
  Rng rng(11);
  nn::NetworkSpec spec;
  spec.input_shape = {3};
  spec.layers = nn::parse_layers("aug,dense:5,tanh,dense:1");
  auto net = std::make_shared<nn::Network>(spec, rng);
  net->level_up(rng);
  const Critic critic = [net](const Var& x, const Tensor& bits) {
    Rng unused(0);
    return net->forward(x, &bits, nn::Mode::Eval, unused);
  };
  const Tensor real = random_tensor({3, 3}, rng), fake = random_tensor({3, 3}, rng);
  const Tensor bits = bitaug::bits_matrix(bitaug::sample_bits(1, 0.5, 3, rng), 1);
  for (auto variant : {GpVariant::OneCentered, GpVariant::ZeroCentered}) {
    LossConfig cfg;
    cfg.family = Family::WganGp;
    cfg.gp_variant = variant;
    cfg.gp_weight = default_gp_weight(variant);
    const std::uint64_t seed = rng();
    auto penalty = [&] {
      Rng r(seed);
      return gradient_penalty(critic, real, fake, bits, cfg, cfg.gp_weight, r);
    };
    auto params = net->parameters();
    const auto grads = nn::gradients(penalty(), params);
    std::vector<double*> coords;
    std::vector<double> analytic;
    for (std::size_t k = 0; k < params.size(); ++k)
      for (std::size_t i = 0; i < params[k].size(); ++i) {
        coords.push_back(&params[k].mutable_value()[i]);
        analytic.push_back(grads[k].value()[i]);
      }
    const auto check = oracles::finite_difference_check([&] { return scalar(penalty()); }, coords, analytic);
    EXPECT_LT(check.max_rel_error, 1e-4);
  }
}

TEST(GradientPenalty, RampAfterLevelUp) {
  LossConfig cfg;
  cfg.family = Family::WganGp;
  cfg.gp_weight = 1.0;
  cfg.gp_rampup_iters = 5000;
  EXPECT_DOUBLE_EQ(effective_gp_weight(cfg, 2500), 0.5);
  EXPECT_DOUBLE_EQ(effective_gp_weight(cfg, 0), 0.0);
  EXPECT_DOUBLE_EQ(effective_gp_weight(cfg, 7000), 1.0);
  EXPECT_DOUBLE_EQ(effective_gp_weight(cfg, std::nullopt), 1.0);
  cfg.gp_rampup_iters = 0;
  EXPECT_DOUBLE_EQ(effective_gp_weight(cfg, 10), 1.0);
}

TEST(LossGradients, NsAndHingeMatchFiniteDifferences) {
  Rng rng(12);
  Var t = nn::parameter(random_tensor({6}, rng, 2.0)), f = nn::parameter(random_tensor({5}, rng, 2.0));
  LossConfig cfg;
  cfg.label_smooth_positive = 0.9;
  // hinge kinks at +-1 are avoided by the draw
  for (double& v : t.mutable_value().values())
    if (std::abs(std::abs(v) - 1.0) < 0.05) v += 0.2;
  for (double& v : f.mutable_value().values())
    if (std::abs(std::abs(v) - 1.0) < 0.05) v += 0.2;
  const std::vector<std::function<Var()>> objectives{
      [&] { return ns_losses(t, f, cfg).d_loss; }, [&] { return ns_losses(t, f, cfg).g_loss; },
      [&] { return hinge_losses(t, f).d_loss; }, [&] { return hinge_losses(t, f).g_loss; }};
  for (const auto& obj : objectives) {
    const auto g = nn::gradients(obj(), {t, f});
    std::vector<double*> coords;
    std::vector<double> analytic;
    for (std::size_t k = 0; k < 2; ++k) {
      Var& v = k == 0 ? t : f;
      for (std::size_t i = 0; i < v.size(); ++i) {
        coords.push_back(&v.mutable_value()[i]);
        analytic.push_back(g[k].value()[i]);
      }
    }
    EXPECT_LT(oracles::finite_difference_check([&] { return scalar(obj()); }, coords, analytic).max_rel_error,
              1e-4);
  }
}

}  // namespace
}  // namespace pagan::losses
