#include <gtest/gtest.h>

#include <random>

#include "pagan/scheduler.hpp"

namespace pagan::sched {
namespace {

SchedulerState state_with(std::vector<double> history, std::size_t max_level = 4) {
  SchedulerState s;
  s.max_level = max_level;
  s.kid_history = std::move(history);
  return s;
}

TEST(Progression, SaturatedLevelsUp) {
  auto s = state_with({0.10, 0.11});
  EXPECT_EQ(progression_decision(s, 0.104), Decision::LevelUp);
  EXPECT_EQ(s.level, 1u);
  EXPECT_TRUE(s.kid_history.empty());
}

TEST(Progression, ImprovingHolds) {
  auto s = state_with({0.20, 0.18});
  EXPECT_EQ(progression_decision(s, 0.15), Decision::Hold);
  EXPECT_EQ(s.level, 0u);
  EXPECT_EQ(s.kid_history, (std::vector<double>{0.20, 0.18, 0.15}));
}

TEST(Progression, NeedsTwoEntries) {
  auto s = state_with({});
  EXPECT_EQ(progression_decision(s, 5.0), Decision::Hold);
  EXPECT_EQ(progression_decision(s, 5.0), Decision::Hold);
  EXPECT_EQ(progression_decision(s, 5.0), Decision::LevelUp);
}

TEST(Progression, UsesLastTwoEntries) {
  auto s = state_with({100.0, 0.10, 0.11});
  EXPECT_EQ(progression_decision(s, 0.104), Decision::LevelUp);
}

TEST(Progression, NonPositiveReferenceCountsAsSaturated) {
  EXPECT_TRUE(saturated({-0.01, 0.0}, -0.5, 0.05));
  EXPECT_FALSE(saturated({0.1}, 0.0, 0.05));
}

TEST(Progression, HoldsAtMaxLevel) {
  auto s = state_with({1.0, 1.0}, 1);
  s.level = 1;
  EXPECT_EQ(progression_decision(s, 1.0), Decision::Hold);
  EXPECT_EQ(s.level, 1u);
}

TEST(Progression, NoBackToBackLevelUps) {
  std::mt19937_64 rng(3);
  std::uniform_real_distribution<double> kid(0.0, 1.0);
  auto s = state_with({}, 20);
  int since = 1000;
  for (int step = 0; step < 5000; ++step) {
    if (progression_decision(s, kid(rng)) == Decision::LevelUp) {
      EXPECT_GE(since, 2);
      since = 0;
    } else {
      ++since;
    }
  }
}

TEST(Progression, Validation) {
  SchedulerState s;
  s.threshold = 0.0;
  EXPECT_THROW(s.validate(), std::invalid_argument);
  s.threshold = 1.0;
  EXPECT_THROW(s.validate(), std::invalid_argument);
  s.threshold = 0.05;
  EXPECT_NO_THROW(s.validate());
}

TEST(LrAdapt, DecaysOnTrigger) {
  auto s = state_with({0.10, 0.11});
  s.lr_d = 4e-4;
  EXPECT_EQ(lr_adapt_decision(s, 0.104), Decision::DecayLr);
  EXPECT_DOUBLE_EQ(s.lr_d, 3.2e-4);
  EXPECT_TRUE(s.kid_history.empty());
}

TEST(LrAdapt, HoldsAtFloorAndWithoutTrigger) {
  auto s = state_with({0.10, 0.11});
  s.lr_d = 1e-4;
  EXPECT_EQ(lr_adapt_decision(s, 0.104), Decision::Hold);
  EXPECT_DOUBLE_EQ(s.lr_d, 1e-4);
  auto t = state_with({0.20, 0.18});
  t.lr_d = 4e-4;
  EXPECT_EQ(lr_adapt_decision(t, 0.15), Decision::Hold);
  EXPECT_DOUBLE_EQ(t.lr_d, 4e-4);
}

TEST(LrAdapt, FloorClamps) {
  SchedulerState s = state_with({});
  s.lr_d = 4e-4;
  std::vector<double> seen;
  for (int i = 0; i < 60; ++i)
    if (lr_adapt_decision(s, 1.0) == Decision::DecayLr) seen.push_back(s.lr_d);
  ASSERT_FALSE(seen.empty());
  EXPECT_DOUBLE_EQ(seen.back(), 1e-4);
  for (std::size_t i = 1; i < seen.size(); ++i) EXPECT_LT(seen[i], seen[i - 1]);
}

TEST(Warmup, AuxOptimizerWindow) {
  SchedulerState s;
  s.warmup = {WarmupKind::NewWeightOptimizer, 0};
  EXPECT_EQ(s.warmup.effective_window(), 1000);
  EXPECT_TRUE(warmup_controller(s, 500).route_new_weights_to_aux_optimizer);
  EXPECT_FALSE(warmup_controller(s, 1000).route_new_weights_to_aux_optimizer);
  EXPECT_FALSE(warmup_controller(s, std::nullopt).route_new_weights_to_aux_optimizer);
  EXPECT_EQ(warmup_controller(s, 500).p_one, 0.5);
}

TEST(Warmup, BitProbabilityRamp) {
  SchedulerState s;
  s.warmup = {WarmupKind::BitProbRamp, 0};
  EXPECT_EQ(s.warmup.effective_window(), 5000);
  EXPECT_DOUBLE_EQ(warmup_controller(s, 2500).p_one, 0.25);
  EXPECT_DOUBLE_EQ(warmup_controller(s, 0).p_one, 0.0);
  EXPECT_DOUBLE_EQ(warmup_controller(s, 9000).p_one, 0.5);
  EXPECT_FALSE(warmup_controller(s, 2500).route_new_weights_to_aux_optimizer);
}

TEST(Warmup, RampIsMonotoneAndCapped) {
  SchedulerState s;
  s.warmup = {WarmupKind::BitProbRamp, 300};
  double prev = -1.0;
  for (long it = 0; it < 1000; it += 7) {
    const double p = warmup_controller(s, it).p_one;
    EXPECT_GE(p, prev);
    EXPECT_LE(p, 0.5);
    prev = p;
  }
}

TEST(Warmup, None) {
  SchedulerState s;
  const auto w = warmup_controller(s, 10);
  EXPECT_FALSE(w.route_new_weights_to_aux_optimizer);
  EXPECT_EQ(w.p_one, 0.5);
  EXPECT_FALSE(w.active);
}

TEST(Warmup, Names) {
  for (auto k : {WarmupKind::None, WarmupKind::NewWeightOptimizer, WarmupKind::BitProbRamp})
    EXPECT_EQ(parse_warmup(warmup_name(k)), k);
  EXPECT_THROW(parse_warmup("sometimes"), std::invalid_argument);
}

}  // namespace
}  // namespace pagan::sched
