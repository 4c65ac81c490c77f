#include "pagan/losses.hpp"

#include <algorithm>
#include <stdexcept>

namespace pagan::losses {

namespace {

void require_nonempty(const nn::Var& t, const nn::Var& f) {
  if (!t || !f || t.size() == 0 || f.size() == 0) throw std::invalid_argument("loss needs non-empty TRUE and FAKE classes");
}

nn::Var flat(const nn::Var& v) { return nn::reshape(v, {v.size()}); }

}  // namespace

void LossConfig::validate() const {
  if (!(label_smooth_positive > 0.0) || label_smooth_positive > 1.0) {
    throw std::invalid_argument("label_smooth_positive must be in (0,1]");
  }
  if (gp_weight < 0.0) throw std::invalid_argument("gp_weight must be >= 0");
  if (wgan_draws < 1) throw std::invalid_argument("wgan_draws must be >= 1");
  if (gp_rampup_iters < 0) throw std::invalid_argument("gp_rampup_iters must be >= 0");
  if (family == Family::WganGp && !(gp_weight > 0.0)) throw std::invalid_argument("WGAN-GP needs gp_weight > 0");
}

double default_gp_weight(GpVariant variant) { return variant == GpVariant::OneCentered ? 1.0 : 0.1; }

std::string family_name(Family family) {
  switch (family) {
    case Family::NS: return "ns";
    case Family::Hinge: return "hinge";
    case Family::WganGp: return "wgan_gp";
  }
  return "ns";
}

Family parse_family(const std::string& name) {
  if (name == "ns") return Family::NS;
  if (name == "hinge") return Family::Hinge;
  if (name == "wgan_gp") return Family::WganGp;
  throw std::invalid_argument("unknown loss family '" + name + "'");
}

std::string gp_variant_name(GpVariant variant) {
  return variant == GpVariant::OneCentered ? "one_centered" : "zero_centered";
}

GpVariant parse_gp_variant(const std::string& name) {
  if (name == "one_centered") return GpVariant::OneCentered;
  if (name == "zero_centered") return GpVariant::ZeroCentered;
  throw std::invalid_argument("unknown gradient penalty variant '" + name + "'");
}

LossPair ns_losses(const nn::Var& true_logits, const nn::Var& fake_logits, const LossConfig& cfg) {
  require_nonempty(true_logits, fake_logits);
  const nn::Var t = flat(true_logits);
  const nn::Var f = flat(fake_logits);
  const double y = cfg.label_smooth_positive;
  nn::Var positive = nn::scale(nn::softplus(nn::neg(t)), y);
  if (y < 1.0) positive = nn::add(positive, nn::scale(nn::softplus(t), 1.0 - y));
  LossPair out;
  out.d_loss = nn::add(nn::mean(positive), nn::mean(nn::softplus(f)));
  out.g_loss = nn::add(nn::mean(nn::softplus(nn::neg(f))), nn::mean(nn::softplus(t)));
  return out;
}

LossPair hinge_losses(const nn::Var& true_logits, const nn::Var& fake_logits) {
  require_nonempty(true_logits, fake_logits);
  const nn::Var t = flat(true_logits);
  const nn::Var f = flat(fake_logits);
  LossPair out;
  out.d_loss = nn::add(nn::mean(nn::relu(nn::add_scalar(nn::neg(t), 1.0))), nn::mean(nn::relu(nn::add_scalar(f, 1.0))));
  out.g_loss = nn::sub(nn::mean(t), nn::mean(f));
  return out;
}

WganResult wgan_multidraw(const Critic& critic, const nn::Var& real, const nn::Var& fake,
                          const std::vector<std::vector<bitaug::BitSequence>>& draws) {
  if (draws.empty()) throw std::invalid_argument("wgan_multidraw needs at least one bit draw");
  const nn::Var samples = nn::concat_rows({real, fake});
  std::vector<nn::Var> losses;
  WganResult out;
  for (const auto& bits : draws) {
    const auto layout = bitaug::pair_layout(bits);
    const nn::Var scores = flat(critic(samples, layout.bits()));
    const nn::Var l = nn::sub(nn::mean(nn::select_rows(scores, layout.true_rows())),
                              nn::mean(nn::select_rows(scores, layout.fake_rows())));
    out.draw_losses.push_back(l.value()[0]);
    losses.push_back(l);
  }
  nn::Var total = losses.front();
  for (std::size_t m = 1; m < losses.size(); ++m) total = nn::add(total, losses[m]);
  out.d_objective = nn::scale(total, -1.0 / static_cast<double>(losses.size()));
  out.best_draw = static_cast<std::size_t>(
      std::max_element(out.draw_losses.begin(), out.draw_losses.end()) - out.draw_losses.begin());
  out.g_objective = losses[out.best_draw];
  return out;
}

nn::Var gradient_penalty(const Critic& critic, const nn::Tensor& real, const nn::Tensor& fake,
                         const nn::Tensor& bits, const LossConfig& cfg, double weight, Rng& rng) {
  if (real.shape() != fake.shape() || real.rank() == 0) throw std::invalid_argument("gradient_penalty: shape mismatch");
  const std::size_t n = real.dim(0);
  const std::size_t row = real.size() / n;
  nn::Tensor mixed(real.shape());
  for (std::size_t i = 0; i < n; ++i) {
    const double a = uniform01(rng);
    for (std::size_t j = 0; j < row; ++j) mixed[i * row + j] = a * real[i * row + j] + (1.0 - a) * fake[i * row + j];
  }
  nn::Var x = nn::parameter(std::move(mixed));
  const nn::Var scores = critic(x, bits);
  const nn::Var g = nn::gradients(nn::sum(scores), {x}, {}, true).front();
  if (!g.value().all_finite()) throw nn::NumericalError("gradient penalty: non-finite critic gradient");
  const nn::Var norms_sq = nn::row_norms_squared(g);
  nn::Var per_sample;
  if (cfg.gp_variant == GpVariant::OneCentered) {
    per_sample = nn::square(nn::add_scalar(nn::sqrt(nn::add_scalar(norms_sq, 1e-24)), -1.0));
  } else {
    per_sample = norms_sq;
  }
  return nn::scale(nn::mean(per_sample), weight);
}

double effective_gp_weight(const LossConfig& cfg, std::optional<long> iters_since_level_up) {
  if (!iters_since_level_up || cfg.gp_rampup_iters <= 0) return cfg.gp_weight;
  const double frac = static_cast<double>(*iters_since_level_up) / static_cast<double>(cfg.gp_rampup_iters);
  return cfg.gp_weight * std::clamp(frac, 0.0, 1.0);
}

}  // namespace pagan::losses
