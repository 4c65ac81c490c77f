#include "pagan/harness/verify.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <functional>
#include <sstream>
#include <stdexcept>

#include "pagan/bitaug.hpp"
#include "pagan/losses.hpp"
#include "pagan/metrics.hpp"
#include "pagan/nn/network.hpp"
#include "pagan/nn/spectral_norm.hpp"
#include "pagan/oracles.hpp"
#include "pagan/prob_oracle.hpp"

namespace pagan::harness {

namespace {

using nn::Tensor;
using nn::Var;

Tensor random_tensor(nn::Shape shape, Rng& rng, double sd = 1.0) {
  Tensor t(std::move(shape));
  for (double& v : t.values()) v = sd * standard_normal(rng);
  return t;
}

Tensor random_bits(std::size_t n, std::size_t level, Rng& rng) {
  return bitaug::bits_matrix(bitaug::sample_bits(level, 0.5, n, rng), level);
}

CheckResult finish(std::string name, double dev, double tol, std::string detail = {}) {
  CheckResult r;
  r.name = std::move(name);
  r.max_deviation = dev;
  r.tolerance = tol;
  r.passed = dev < tol;
  r.detail = std::move(detail);
  return r;
}

struct GradCase {
  std::string name;
  std::vector<Var> leaves;
  std::function<Var()> loss;
};

double grad_case_error(const GradCase& c) {
  const Var loss = c.loss();
  const auto grads = nn::gradients(loss, c.leaves);
  std::vector<double*> coords;
  std::vector<double> analytic;
  for (std::size_t i = 0; i < c.leaves.size(); ++i) {
    Var leaf = c.leaves[i];
    for (std::size_t j = 0; j < leaf.size(); ++j) {
      coords.push_back(leaf.mutable_value().data() + j);
      analytic.push_back(grads[i].value()[j]);
    }
  }
  return oracles::finite_difference_check([&] { return c.loss().value()[0]; }, coords, analytic).max_rel_error;
}

CheckResult run_grad_cases(const std::string& name, const std::vector<GradCase>& cases) {
  double worst = 0.0;
  std::string worst_name;
  for (const auto& c : cases) {
    const double e = grad_case_error(c);
    if (e >= worst) {
      worst = e;
      worst_name = c.name;
    }
  }
  return finish(name, worst, 1e-4, std::to_string(cases.size()) + " cases, worst: " + worst_name);
}

// Projects the network output onto a fixed random direction.
GradCase network_case(std::string name, nn::NetworkSpec spec, std::size_t batch, std::size_t level, nn::Mode mode,
                      std::uint64_t seed) {
  Rng rng(seed);
  auto net = std::make_shared<nn::Network>(std::move(spec), rng);
  for (std::size_t l = 0; l < level; ++l) net->level_up(rng);
  if (level > 0) {
    for (std::size_t i = 0; i < net->affine_count(); ++i) {
      for (auto& b : net->affine_layer(i).offsets) b.mutable_value()[0] = 0.3 * standard_normal(rng);
      for (auto& s : net->affine_layer(i).scales) s.mutable_value()[0] = 0.5 + uniform01(rng);
    }
  }
  nn::Shape in{batch};
  in.insert(in.end(), net->spec().input_shape.begin(), net->spec().input_shape.end());
  Var x = nn::parameter(random_tensor(in, rng));
  auto bits = std::make_shared<Tensor>(random_bits(batch, level, rng));
  nn::Shape out{batch};
  out.insert(out.end(), net->output_shape().begin(), net->output_shape().end());
  const Tensor proj = random_tensor(out, rng);
  GradCase c;
  c.name = std::move(name);
  c.leaves = net->parameters();
  c.leaves.push_back(x);
  c.loss = [net, x, bits, proj, mode, seed] {
    Rng r(seed + 1);
    const Var y = net->forward(x, bits.get(), mode, r);
    return nn::sum(nn::mul_constant(y, proj));
  };
  return c;
}

std::shared_ptr<nn::Network> small_critic(std::size_t level, nn::ActivationKind act, Rng& rng) {
  nn::NetworkSpec spec;
  spec.input_shape = {3};
  spec.layers = {nn::LayerSpec::augment_site(), nn::LayerSpec::dense(5), nn::LayerSpec::act(act),
                 nn::LayerSpec::dense(1)};
  auto net = std::make_shared<nn::Network>(spec, rng);
  for (std::size_t l = 0; l < level; ++l) net->level_up(rng);
  return net;
}

}  // namespace

CheckResult check_lemma1(int pairs, std::size_t space, int max_level) {
  Rng rng(101);
  double worst = 0.0, worst_oracle = 0.0;
  for (int i = 0; i < pairs; ++i) {
    const auto pd = prob::random_distribution(space, rng);
    const auto pg = prob::random_distribution(space, rng);
    const auto report = prob::verify_equality_chain(pd, pg, max_level, 1e-12);
    worst = std::max(worst, report.max_deviation);
    worst_oracle = std::max(worst_oracle, std::abs(report.base_js - oracles::js_by_entropy(pd.masses(), pg.masses())));
  }
  std::ostringstream d;
  d << pairs << " pairs, levels 1-" << max_level << ", JS vs entropy oracle " << worst_oracle;
  return finish("lemma1", std::max(worst, worst_oracle), 1e-12, d.str());
}

CheckResult check_theorem1(int max_level) {
  Rng rng(202);
  double worst = 0.0;
  double literal_gap = 0.0;
  std::size_t cells = 0;
  for (int l = 0; l <= max_level; ++l) {
    for (int rep = 0; rep < 10; ++rep) {
      const auto pd = prob::random_distribution(5, rng);
      const auto pg = prob::random_distribution(5, rng);
      const auto [p, q] = prob::build_level_joints(pd, pg, l);
      const auto dstar = prob::optimal_discriminator(p, q);
      for (std::size_t x = 0; x < p.space_size; ++x) {
        const double real_posterior = pd[x] / (pd[x] + pg[x]);
        for (std::size_t s = 0; s < p.sequences; ++s) {
          // Odd checksum hands the TRUE class the synthetic mass.
          const bool odd = std::popcount(s) % 2 == 1;
          const double target = odd ? pg[x] / (pd[x] + pg[x]) : real_posterior;
          worst = std::max(worst, std::abs(dstar.at(x, s) - target));
          const std::size_t same_parity = odd ? 1 : 0;
          worst = std::max(worst, std::abs(dstar.at(x, s) - dstar.at(x, same_parity)));
          literal_gap = std::max(literal_gap, std::abs(dstar.at(x, s) - real_posterior));
          ++cells;
        }
      }
    }
  }
  std::ostringstream detail;
  detail << cells << " cells, levels 0-" << max_level << ", odd-checksum cells differ from P_d/(P_d+P_g) by up to "
         << literal_gap;
  CheckResult r = finish("theorem1", worst, 0.0, detail.str());
  r.passed = worst == 0.0;
  return r;
}

CheckResult check_proposition1() {
  Rng rng(303);
  double worst = 0.0;
  int violations = 0;
  for (int rep = 0; rep < 50; ++rep) {
    const auto pd = prob::random_distribution(5, rng);
    const auto pg = prob::random_distribution(5, rng);
    const auto [gp, gq] = prob::generic_mixture_joints(pd, pg, prob::DiscreteDistribution({1.0, 0.0}),
                                                        prob::DiscreteDistribution({0.0, 1.0}));
    const auto [lp, lq] = prob::build_level_joints(pd, pg, 1);
    for (std::size_t i = 0; i < gp.masses.size(); ++i) {
      worst = std::max(worst, std::abs(gp.masses[i] - lp.masses[i]));
      worst = std::max(worst, std::abs(gq.masses[i] - lq.masses[i]));
    }
    const double base = prob::js_divergence(pd, pg);
    const auto sa = prob::random_distribution(3, rng);
    const auto sb = prob::random_distribution(3, rng);
    const auto [op, oq] = prob::generic_mixture_joints(pd, pg, sa, sb);
    if (prob::js_divergence(op, oq) > base + 1e-15) ++violations;
    // Disjoint supports on a 4-point augmentation space.
    const auto [dp, dq] = prob::generic_mixture_joints(pd, pg, prob::DiscreteDistribution({0.3, 0.7, 0.0, 0.0}),
                                                        prob::DiscreteDistribution({0.0, 0.0, 0.6, 0.4}));
    worst = std::max(worst, std::abs(prob::js_divergence(dp, dq) - base));
  }
  CheckResult r = finish("proposition1", worst, 1e-12, std::to_string(violations) + " overlap-bound violations");
  r.passed = r.passed && violations == 0;
  return r;
}

CheckResult check_checksum_recursion(int max_level) {
  // Data and generator supports are disjoint, so each x has a known origin.
  const prob::DiscreteDistribution pd({0.2, 0.5, 0.3, 0.0, 0.0, 0.0});
  const prob::DiscreteDistribution pg({0.0, 0.0, 0.0, 0.25, 0.25, 0.5});
  std::size_t mismatches = 0, cells = 0;
  for (int l = 0; l <= max_level; ++l) {
    const auto [p, q] = prob::build_level_joints(pd, pg, l);
    for (std::size_t x = 0; x < p.space_size; ++x) {
      const int origin = pd[x] > 0.0 ? bitaug::kDataOrigin : bitaug::kSyntheticOrigin;
      for (std::size_t s = 0; s < p.sequences; ++s) {
        const auto seq = bitaug::BitSequence::from_index(s, static_cast<std::size_t>(l));
        const bool true_class = bitaug::checksum_label(origin, seq) == bitaug::ClassLabel::True;
        if ((p.at(x, s) > 0.0) != true_class || (q.at(x, s) > 0.0) == true_class) ++mismatches;
        // Extending by 0 keeps the label, by 1 flips it.
        auto ext = seq;
        ext.bits.push_back(0);
        if (bitaug::checksum_label(origin, ext) != bitaug::checksum_label(origin, seq)) ++mismatches;
        ext.bits.back() = 1;
        if (bitaug::checksum_label(origin, ext) == bitaug::checksum_label(origin, seq)) ++mismatches;
        ++cells;
      }
    }
  }
  CheckResult r = finish("checksum", static_cast<double>(mismatches), 0.0,
                         std::to_string(cells) + " cells up to level " + std::to_string(max_level));
  r.passed = mismatches == 0;
  return r;
}

CheckResult check_zero_bit_level_up() {
  Rng rng(404);
  double worst = 0.0;
  int cases = 0;
  std::vector<nn::NetworkSpec> specs;
  {
    nn::NetworkSpec s;
    s.input_shape = {2};
    s.layers = {nn::LayerSpec::augment_site(), nn::LayerSpec::dense(16), nn::LayerSpec::act(nn::ActivationKind::LeakyRelu),
                nn::LayerSpec::dense(1)};
    specs.push_back(s);
    s.layers = {nn::LayerSpec::dense(16), nn::LayerSpec::act(nn::ActivationKind::LeakyRelu), nn::LayerSpec::augment_site(),
                nn::LayerSpec::dense(8), nn::LayerSpec::act(nn::ActivationKind::LeakyRelu), nn::LayerSpec::dense(1)};
    specs.push_back(s);
    s.input_shape = {1, 6, 6};
    s.layers = {nn::LayerSpec::conv(4, 3, 1, nn::Padding::Same), nn::LayerSpec::act(nn::ActivationKind::LeakyRelu),
                nn::LayerSpec::augment_site(), nn::LayerSpec::conv(4, 4, 2, nn::Padding::Same),
                nn::LayerSpec::act(nn::ActivationKind::LeakyRelu), nn::LayerSpec::sum_pool(), nn::LayerSpec::dense(1)};
    specs.push_back(s);
    s.layers.insert(s.layers.begin(), nn::LayerSpec::augment_site());
    s.layers.erase(s.layers.begin() + 3);
    specs.push_back(s);
  }
  for (const auto& spec : specs) {
    nn::Network net(spec, rng);
    for (std::size_t level = 0; level < 5; ++level) {
      // Train the existing modulation away from its initial values.
      for (std::size_t i = 0; i < net.affine_count(); ++i)
        for (auto& s : net.affine_layer(i).scales) s.mutable_value()[0] = 0.5 + uniform01(rng);
      nn::Shape in{8};
      in.insert(in.end(), spec.input_shape.begin(), spec.input_shape.end());
      const Tensor x = random_tensor(in, rng);
      const Tensor before_bits = random_bits(8, level, rng);
      const Tensor before = net.forward(nn::constant(x), &before_bits, nn::Mode::Eval, rng).value();
      net.level_up(rng);
      Tensor after_bits({8, level + 1}, 0.0);
      for (std::size_t r = 0; r < 8; ++r)
        for (std::size_t c = 0; c < level; ++c) after_bits.at(r, c) = before_bits.at(r, c);
      const Tensor after = net.forward(nn::constant(x), &after_bits, nn::Mode::Eval, rng).value();
      for (std::size_t i = 0; i < before.size(); ++i) worst = std::max(worst, std::abs(before[i] - after[i]));
      ++cases;
    }
  }
  CheckResult r = finish("zero_bit_level_up", worst, 0.0, std::to_string(cases) + " level-ups (dense/conv, input/feature)");
  r.passed = worst == 0.0;
  return r;
}

CheckResult check_conv_decomposition(int cases) {
  Rng rng(505);
  double worst = 0.0;
  std::uniform_int_distribution<std::size_t> kpick(1, 4), spick(1, 2), hpick(3, 7), cpick(1, 3), lpick(1, 4);
  for (int i = 0; i < cases; ++i) {
    const std::size_t k = kpick(rng), stride = spick(rng), c = cpick(rng), h = hpick(rng), w = hpick(rng);
    const auto pad = (i % 2 == 0 || h < k || w < k) ? nn::Padding::Same : nn::Padding::Valid;
    const auto g = nn::ConvGeometry::make(c, h, w, k, stride, pad);
    auto state = bitaug::make_conv_augment_layer(g, 3, false, rng);
    const std::size_t level = lpick(rng);
    for (std::size_t l = 0; l < level; ++l) bitaug::level_up(state, rng);
    for (std::size_t l = 0; l < level; ++l) {
      state.scales[l].mutable_value()[0] = 0.5 + uniform01(rng);
      state.offsets[l].mutable_value()[0] = 0.5 * standard_normal(rng);
    }
    state.bias.mutable_value() = random_tensor({3}, rng);
    const std::size_t n = 2;
    const Tensor phi = random_tensor({n, c, h, w}, rng);
    const Tensor bits = random_bits(n, level, rng);
    const Tensor concat = bitaug::augment_features(nn::constant(phi), state, bits).value();

    Tensor sum = oracles::naive_conv2d(phi, state.base_weights.value(), state.bias.value(), g);
    const auto g1 = nn::ConvGeometry::make(1, h, w, k, stride, pad);
    for (std::size_t l = 0; l < level; ++l) {
      Tensor channel({n, 1, h, w});
      for (std::size_t b = 0; b < n; ++b)
        for (std::size_t p = 0; p < h * w; ++p)
          channel[b * h * w + p] = bits.at(b, l) * state.scales[l].value()[0] + state.offsets[l].value()[0];
      const Tensor part = oracles::naive_conv2d(channel, state.bit_weights[l].value(), Tensor(), g1);
      for (std::size_t j = 0; j < sum.size(); ++j) sum[j] += part[j];
    }
    for (std::size_t j = 0; j < sum.size(); ++j) worst = std::max(worst, std::abs(sum[j] - concat[j]));
  }
  return finish("conv_decomposition", worst, 1e-6, std::to_string(cases) + " random geometries");
}

CheckResult check_layer_gradients() {
  using nn::ActivationKind;
  using nn::LayerSpec;
  std::vector<GradCase> cases;
  nn::NetworkSpec s;
  s.input_shape = {3};
  s.layers = {LayerSpec::act(ActivationKind::Identity)};
  cases.push_back(network_case("identity", s, 3, 0, nn::Mode::Eval, 1));
  s.layers = {LayerSpec::dense(6), LayerSpec::act(ActivationKind::LeakyRelu), LayerSpec::dense(2)};
  cases.push_back(network_case("mlp_lrelu", s, 4, 0, nn::Mode::Eval, 2));
  s.layers = {LayerSpec::dense(5), LayerSpec::act(ActivationKind::Tanh), LayerSpec::scaled(2.5), LayerSpec::dense(4),
              LayerSpec::act(ActivationKind::Relu), LayerSpec::reshaped({1, 2, 2})};
  cases.push_back(network_case("tanh_relu_scale_reshape", s, 3, 0, nn::Mode::Eval, 3));
  s.layers = {LayerSpec::dense(6), LayerSpec::act(ActivationKind::LeakyRelu), LayerSpec::drop(0.7, nn::DropoutVariant::Entrywise),
              LayerSpec::dense(1)};
  cases.push_back(network_case("dropout_entrywise", s, 4, 0, nn::Mode::Train, 4));
  s.layers = {LayerSpec::augment_site(), LayerSpec::dense(6), LayerSpec::act(ActivationKind::LeakyRelu), LayerSpec::dense(1)};
  cases.push_back(network_case("augmented_input_dense", s, 4, 2, nn::Mode::Eval, 5));
  s.spectral_norm = true;
  cases.push_back(network_case("spectral_norm_dense", s, 4, 2, nn::Mode::Eval, 6));
  s.spectral_norm = false;

  s.input_shape = {2, 5, 5};
  s.layers = {LayerSpec::conv(3, 3, 1, nn::Padding::Same), LayerSpec::act(ActivationKind::LeakyRelu),
              LayerSpec::conv(2, 2, 2, nn::Padding::Valid), LayerSpec::act(ActivationKind::Tanh), LayerSpec::sum_pool(),
              LayerSpec::dense(1)};
  cases.push_back(network_case("conv_same_valid_pool", s, 2, 0, nn::Mode::Eval, 7));
  s.layers = {LayerSpec::conv(3, 4, 2, nn::Padding::Same), LayerSpec::act(ActivationKind::LeakyRelu),
              LayerSpec::drop(0.6, nn::DropoutVariant::Spatial), LayerSpec::augment_site(),
              LayerSpec::conv(2, 3, 1, nn::Padding::Same), LayerSpec::sum_pool(), LayerSpec::dense(1)};
  cases.push_back(network_case("conv_spatial_dropout_augmented_feature", s, 2, 2, nn::Mode::Train, 8));
  s.layers = {LayerSpec::augment_site(), LayerSpec::conv(3, 1, 1, nn::Padding::Same), LayerSpec::act(ActivationKind::Tanh),
              LayerSpec::sum_pool(), LayerSpec::dense(1)};
  s.spectral_norm = true;
  cases.push_back(network_case("spectral_norm_conv_augmented_input", s, 2, 1, nn::Mode::Eval, 9));
  return run_grad_cases("layer_gradients", cases);
}

CheckResult check_loss_gradients() {
  Rng rng(606);
  std::vector<GradCase> cases;
  {
    Var t = nn::parameter(random_tensor({6}, rng, 2.0));
    Var f = nn::parameter(random_tensor({6}, rng, 2.0));
    losses::LossConfig cfg;
    cfg.label_smooth_positive = 0.9;
    cases.push_back({"ns_d_smoothed", {t, f}, [t, f, cfg] { return losses::ns_losses(t, f, cfg).d_loss; }});
    cases.push_back({"ns_g", {t, f}, [t, f, cfg] { return losses::ns_losses(t, f, cfg).g_loss; }});
  }
  {
    auto away_from_kinks = [&](std::size_t n) {
      Tensor v({n});
      for (double& x : v.values()) {
        do x = 3.0 * (2.0 * uniform01(rng) - 1.0);
        while (std::abs(std::abs(x) - 1.0) < 0.05);
      }
      return v;
    };
    Var t = nn::parameter(away_from_kinks(8));
    Var f = nn::parameter(away_from_kinks(8));
    cases.push_back({"hinge_d", {t, f}, [t, f] { return losses::hinge_losses(t, f).d_loss; }});
    cases.push_back({"hinge_g", {t, f}, [t, f] { return losses::hinge_losses(t, f).g_loss; }});
  }
  {
    auto net = small_critic(2, nn::ActivationKind::LeakyRelu, rng);
    Var real = nn::parameter(random_tensor({4, 3}, rng));
    Var fake = nn::parameter(random_tensor({4, 3}, rng));
    const auto first = bitaug::sample_bits(2, 0.5, 4, rng);
    const std::vector<std::vector<bitaug::BitSequence>> draws{first, bitaug::opposite_checksum_bits(first, rng)};
    losses::Critic critic = [net](const Var& x, const Tensor& b) {
      Rng r(0);
      return net->forward(x, &b, nn::Mode::Eval, r);
    };
    auto leaves = net->parameters();
    leaves.push_back(real);
    leaves.push_back(fake);
    cases.push_back({"wgan_d_two_draws", leaves, [=] { return losses::wgan_multidraw(critic, real, fake, draws).d_objective; }});
    cases.push_back({"wgan_g_two_draws", leaves, [=] { return losses::wgan_multidraw(critic, real, fake, draws).g_objective; }});
  }
  for (auto variant : {losses::GpVariant::OneCentered, losses::GpVariant::ZeroCentered}) {
    auto net = small_critic(1, nn::ActivationKind::Tanh, rng);
    const Tensor real = random_tensor({4, 3}, rng);
    const Tensor fake = random_tensor({4, 3}, rng);
    const Tensor bits = random_bits(4, 1, rng);
    losses::LossConfig cfg;
    cfg.family = losses::Family::WganGp;
    cfg.gp_variant = variant;
    cfg.gp_weight = losses::default_gp_weight(variant);
    losses::Critic critic = [net](const Var& x, const Tensor& b) {
      Rng r(0);
      return net->forward(x, &b, nn::Mode::Eval, r);
    };
    cases.push_back({"gradient_penalty_" + losses::gp_variant_name(variant), net->parameters(), [=] {
                       Rng r(99);
                       return losses::gradient_penalty(critic, real, fake, bits, cfg, cfg.gp_weight, r);
                     }});
  }
  return run_grad_cases("loss_gradients", cases);
}

namespace {

Eigen::MatrixXd random_orthonormal(std::size_t rows, std::size_t cols, Rng& rng) {
  Eigen::MatrixXd g(rows, cols);
  for (Eigen::Index i = 0; i < g.size(); ++i) g.data()[i] = standard_normal(rng);
  Eigen::HouseholderQR<Eigen::MatrixXd> qr(g);
  return qr.householderQ() * Eigen::MatrixXd::Identity(rows, cols);
}

double power_error(const Eigen::MatrixXd& m, Rng& rng) {
  const auto rows = static_cast<std::size_t>(m.rows()), cols = static_cast<std::size_t>(m.cols());
  Tensor w({rows, cols});
  for (std::size_t r = 0; r < rows; ++r)
    for (std::size_t c = 0; c < cols; ++c) w.at(r, c) = m(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(c));
  auto u = nn::init_power_vector(rows, rng);
  const auto res = nn::spectral_normalize(w, 50, u);
  return std::abs(res.sigma - oracles::largest_singular_value(m));
}

}  // namespace

// Power iteration converges like (sigma_2 / sigma_1)^k, so the test spectrum
// keeps a 10% gap below the top singular value.
CheckResult check_spectral_norm(int matrices) {
  Rng rng(707);
  std::uniform_int_distribution<std::size_t> dim(2, 64);
  double worst = 0.0, gaussian_worst = 0.0;
  int gaussian_misses = 0;
  for (int i = 0; i < matrices; ++i) {
    const std::size_t rows = dim(rng), cols = dim(rng), rank = std::min(rows, cols);
    Eigen::VectorXd sv(static_cast<Eigen::Index>(rank));
    const double top = 0.5 + 2.5 * uniform01(rng);
    sv(0) = top;
    for (Eigen::Index k = 1; k < sv.size(); ++k) sv(k) = 0.9 * top * uniform01(rng);
    const Eigen::MatrixXd m = random_orthonormal(rows, rank, rng) * sv.asDiagonal() *
                              random_orthonormal(cols, rank, rng).transpose();
    worst = std::max(worst, power_error(m, rng));

    Eigen::MatrixXd g(rows, cols);
    for (Eigen::Index k = 0; k < g.size(); ++k) g.data()[k] = standard_normal(rng) / std::sqrt(static_cast<double>(cols));
    const double ge = power_error(g, rng);
    gaussian_worst = std::max(gaussian_worst, ge);
    if (ge >= 1e-3) ++gaussian_misses;
  }
  std::ostringstream detail;
  detail << matrices << " matrices with a 10% spectral gap, 50 power iterations; iid Gaussian matrices: worst "
         << gaussian_worst << ", " << gaussian_misses << " above tolerance";
  return finish("spectral_norm", worst, 1e-3, detail.str());
}

CheckResult check_kid_oracle() {
  Rng rng(808);
  double worst = 0.0;
  for (int rep = 0; rep < 20; ++rep) {
    Eigen::MatrixXd x(4, 3), y(4, 3);
    for (int i = 0; i < 4; ++i)
      for (int j = 0; j < 3; ++j) {
        x(i, j) = standard_normal(rng);
        y(i, j) = standard_normal(rng) + 0.5;
      }
    worst = std::max(worst, std::abs(metrics::kid_unbiased(x, y) - oracles::kid_double_sum(x, y)));
  }
  return finish("kid_oracle", worst, 1e-12, "n = 4 against the explicit double sum");
}

CheckResult check_frechet_oracle() {
  Rng rng(909);
  double closed = 0.0, iterative = 0.0;
  for (int rep = 0; rep < 20; ++rep) {
    Eigen::MatrixXd a = Eigen::MatrixXd::Random(2, 2), b = Eigen::MatrixXd::Random(2, 2);
    metrics::SampleStats sa, sb;
    sa.cov = a * a.transpose() + 0.1 * Eigen::MatrixXd::Identity(2, 2);
    sb.cov = b * b.transpose() + 0.1 * Eigen::MatrixXd::Identity(2, 2);
    sa.mean = Eigen::VectorXd::Random(2);
    sb.mean = Eigen::VectorXd::Random(2);
    sa.count = sb.count = 100;
    closed = std::max(closed, std::abs(metrics::frechet_distance(sa, sa)));
    metrics::SampleStats shifted = sa;
    shifted.mean += sb.mean;
    closed = std::max(closed, std::abs(metrics::frechet_distance(sa, shifted) - sb.mean.squaredNorm()));
    const Eigen::MatrixXd cross = oracles::denman_beavers_sqrt(sa.cov * sb.cov);
    const double oracle = (sa.mean - sb.mean).squaredNorm() + sa.cov.trace() + sb.cov.trace() - 2.0 * cross.trace();
    iterative = std::max(iterative, std::abs(metrics::frechet_distance(sa, sb) - oracle));
  }
  std::ostringstream d;
  d << "closed-form cases " << closed << ", Denman-Beavers " << iterative;
  CheckResult r = finish("frechet_oracle", iterative, 1e-8, d.str());
  r.passed = r.passed && closed < 1e-12;
  r.max_deviation = std::max(closed, iterative);
  return r;
}

CheckResult check_gradient_diversity_oracle() {
  Rng rng(1010);
  double worst = 0.0;
  for (int rep = 0; rep < 5; ++rep) {
    Eigen::MatrixXd g(100, 50);
    for (Eigen::Index i = 0; i < g.rows(); ++i)
      for (Eigen::Index j = 0; j < g.cols(); ++j) g(i, j) = standard_normal(rng);
    const auto report = metrics::gradient_diversity(g);
    const auto spectrum = oracles::cosine_gram_spectrum(g);
    double gamma = 0.0;
    for (int i = 1; i <= 3; ++i) gamma += std::sqrt(spectrum[0] / spectrum[static_cast<std::size_t>(i)]);
    gamma /= 3.0;
    worst = std::max(worst, std::abs(report.gamma_bar - gamma));
    for (std::size_t i = 0; i < 4; ++i) worst = std::max(worst, std::abs(report.top_eigenvalues[i] - spectrum[i]));
  }
  return finish("gradient_diversity_oracle", worst, 1e-8, "100 x 50 Gaussian gradients against an SVD spectrum");
}

const std::vector<std::string>& verify_selectors() {
  static const std::vector<std::string> s{"lemma1",           "theorem1",  "proposition1", "checksum",
                                          "augment_identity", "gradients", "estimators",   "all"};
  return s;
}

std::vector<CheckResult> run_verify(const std::string& selector) {
  const auto& known = verify_selectors();
  if (std::find(known.begin(), known.end(), selector) == known.end()) {
    throw std::invalid_argument("unknown verify selector '" + selector + "'");
  }
  const bool all = selector == "all";
  std::vector<CheckResult> out;
  if (all || selector == "lemma1") out.push_back(check_lemma1());
  if (all || selector == "theorem1") out.push_back(check_theorem1());
  if (all || selector == "proposition1") out.push_back(check_proposition1());
  if (all || selector == "checksum") out.push_back(check_checksum_recursion());
  if (all || selector == "augment_identity") {
    out.push_back(check_zero_bit_level_up());
    out.push_back(check_conv_decomposition());
  }
  if (all || selector == "gradients") {
    out.push_back(check_layer_gradients());
    out.push_back(check_loss_gradients());
  }
  if (all || selector == "estimators") {
    out.push_back(check_spectral_norm());
    out.push_back(check_kid_oracle());
    out.push_back(check_frechet_oracle());
    out.push_back(check_gradient_diversity_oracle());
  }
  return out;
}

std::string format_check(const CheckResult& r) {
  std::ostringstream out;
  out << (r.passed ? "PASS " : "FAIL ") << r.name << " max_deviation=" << r.max_deviation << " tol=" << r.tolerance;
  if (!r.detail.empty()) out << " (" << r.detail << ")";
  return out.str();
}

}  // namespace pagan::harness
