#pragma once

#include <cstddef>
#include <optional>
#include <string>
#include <vector>

// Progression scheduling on KID saturation, the learning-rate adaptation
// baseline that reuses the same trigger, and post-level-up warm-up control.
namespace pagan::sched {

enum class WarmupKind { None, NewWeightOptimizer, BitProbRamp };

std::string warmup_name(WarmupKind kind);
WarmupKind parse_warmup(const std::string& name);
// 1000 iterations for the auxiliary optimizer, 5000 for the bit ramp.
long default_warmup_window(WarmupKind kind);

struct WarmupConfig {
  WarmupKind kind = WarmupKind::None;
  long window = 0;  // 0 picks default_warmup_window(kind)
  long effective_window() const { return window > 0 ? window : default_warmup_window(kind); }
};

struct SchedulerState {
  std::size_t level = 0;
  std::size_t max_level = 0;
  std::vector<double> kid_history;  // evaluations at the current level / lr
  long eval_interval = 500;
  double threshold = 0.05;
  WarmupConfig warmup;
  double lr_decay = 0.8;
  double lr_floor = 1e-4;
  double lr_d = 4e-4;

  void validate() const;
};

enum class Decision { Hold, LevelUp, DecayLr };

// Relative improvement of `current` over the mean of the last two history
// entries is below `threshold`. A non-positive reference counts as saturated.
// False with fewer than two entries.
bool saturated(const std::vector<double>& history, double current, double threshold);

// Appends `current` on hold; on level-up increments the level and clears the
// history. Holds at max_level.
Decision progression_decision(SchedulerState& state, double current_kid);

// Same trigger; multiplies lr_d by lr_decay (floored at lr_floor) and clears
// the history. Holds once lr_d is at the floor.
Decision lr_adapt_decision(SchedulerState& state, double current_kid);

struct WarmupDirectives {
  bool route_new_weights_to_aux_optimizer = false;
  double p_one = 0.5;
  bool active = false;  // inside the warm-up window
};

// iterations_since_level_up is empty before the first level-up.
WarmupDirectives warmup_controller(const SchedulerState& state, std::optional<long> iterations_since_level_up);

}  // namespace pagan::sched
