#include "pagan/scheduler.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace pagan::sched {

std::string warmup_name(WarmupKind kind) {
  switch (kind) {
    case WarmupKind::None: return "none";
    case WarmupKind::NewWeightOptimizer: return "new_weight_optimizer";
    case WarmupKind::BitProbRamp: return "bit_prob_ramp";
  }
  return "none";
}

WarmupKind parse_warmup(const std::string& name) {
  if (name == "none") return WarmupKind::None;
  if (name == "new_weight_optimizer") return WarmupKind::NewWeightOptimizer;
  if (name == "bit_prob_ramp") return WarmupKind::BitProbRamp;
  throw std::invalid_argument("unknown warm-up '" + name + "'");
}

long default_warmup_window(WarmupKind kind) {
  switch (kind) {
    case WarmupKind::NewWeightOptimizer: return 1000;
    case WarmupKind::BitProbRamp: return 5000;
    case WarmupKind::None: return 0;
  }
  return 0;
}

void SchedulerState::validate() const {
  if (!(threshold > 0.0 && threshold < 1.0)) throw std::invalid_argument("scheduler threshold must be in (0,1)");
  if (eval_interval <= 0) throw std::invalid_argument("eval interval must be positive");
  if (!(lr_decay > 0.0 && lr_decay < 1.0)) throw std::invalid_argument("lr_decay must be in (0,1)");
  if (!(lr_floor > 0.0)) throw std::invalid_argument("lr_floor must be positive");
  if (max_level > 20) throw std::invalid_argument("max level above 20");
  if (warmup.window < 0) throw std::invalid_argument("warm-up window must be >= 0");
}

bool saturated(const std::vector<double>& history, double current, double threshold) {
  if (history.size() < 2) return false;
  const double ref = 0.5 * (history[history.size() - 1] + history[history.size() - 2]);
  if (!(ref > 0.0)) return true;
  return (ref - current) / ref < threshold;
}

Decision progression_decision(SchedulerState& state, double current_kid) {
  if (!std::isfinite(current_kid)) throw std::invalid_argument("progression_decision: KID is not finite");
  if (state.level < state.max_level && saturated(state.kid_history, current_kid, state.threshold)) {
    ++state.level;
    state.kid_history.clear();
    return Decision::LevelUp;
  }
  state.kid_history.push_back(current_kid);
  return Decision::Hold;
}

Decision lr_adapt_decision(SchedulerState& state, double current_kid) {
  if (!std::isfinite(current_kid)) throw std::invalid_argument("lr_adapt_decision: KID is not finite");
  if (state.lr_d > state.lr_floor && saturated(state.kid_history, current_kid, state.threshold)) {
    state.lr_d = std::max(state.lr_floor, state.lr_d * state.lr_decay);
    state.kid_history.clear();
    return Decision::DecayLr;
  }
  state.kid_history.push_back(current_kid);
  return Decision::Hold;
}

WarmupDirectives warmup_controller(const SchedulerState& state, std::optional<long> iterations_since_level_up) {
  WarmupDirectives d;
  if (state.warmup.kind == WarmupKind::None || !iterations_since_level_up) return d;
  const long window = state.warmup.effective_window();
  const long it = std::max(0L, *iterations_since_level_up);
  d.active = it < window;
  if (state.warmup.kind == WarmupKind::NewWeightOptimizer) {
    d.route_new_weights_to_aux_optimizer = d.active;
  } else {
    d.p_one = 0.5 * std::min(1.0, static_cast<double>(it) / static_cast<double>(window));
  }
  return d;
}

}  // namespace pagan::sched
