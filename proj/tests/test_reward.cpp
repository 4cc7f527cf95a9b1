#include <gtest/gtest.h>

#include <cmath>
#include <limits>

#include "support/generators.hpp"
#include "vsm/reward.hpp"

using namespace vsm;

TEST(TakeoffLanding, Examples) {
  EXPECT_EQ(takeoff_landing_coeff(EventRecord{EventKind::Takeoff, 100, 103, 80}), 5.0);
  EXPECT_EQ(takeoff_landing_coeff(EventRecord{EventKind::Takeoff, 100, 100, 25}), -5.0);
  EXPECT_EQ(takeoff_landing_coeff(EventRecord{EventKind::Landing, 100, 90, 50}), 5.0);
  EXPECT_EQ(takeoff_landing_coeff(std::nullopt), 0.0);
}

TEST(TakeoffLanding, WindowEdges) {
  EXPECT_EQ(takeoff_landing_coeff(EventRecord{EventKind::Takeoff, 100, 95, 80}), 5.0);
  EXPECT_EQ(takeoff_landing_coeff(EventRecord{EventKind::Takeoff, 100, 94, 80}), -5.0);
  EXPECT_EQ(takeoff_landing_coeff(EventRecord{EventKind::Takeoff, 100, 105, 80}), 5.0);
  EXPECT_EQ(takeoff_landing_coeff(EventRecord{EventKind::Takeoff, 100, 106, 80}), -5.0);
  EXPECT_EQ(takeoff_landing_coeff(EventRecord{EventKind::Landing, 100, 105, 80}), 5.0);
  EXPECT_EQ(takeoff_landing_coeff(EventRecord{EventKind::Landing, 100, 106, 80}), -5.0);
  EXPECT_EQ(takeoff_landing_coeff(EventRecord{EventKind::Landing, 100, 0, 80}), 5.0);
  EXPECT_EQ(takeoff_landing_coeff(EventRecord{EventKind::Landing, 100, 100, 30}), -5.0);
  EXPECT_EQ(takeoff_landing_coeff(EventRecord{EventKind::Landing, 100, 100, 30.0001}), 5.0);
}

TEST(Battery, Examples) {
  EXPECT_EQ(battery_coeff(100), 5.0);
  EXPECT_EQ(battery_coeff(30), 1.5);
  EXPECT_EQ(battery_coeff(29.999), -5.0);
  EXPECT_EQ(battery_coeff(0), -5.0);
}

TEST(Battery, MonotoneAboveFloorAndJumpsAtIt) {
  double prev = battery_coeff(30.0);
  for (double b = 30.0; b <= 100.0; b += 0.01) {
    const double c = battery_coeff(b);
    ASSERT_GE(c, prev);
    ASSERT_GE(c, 1.5);
    ASSERT_LE(c, 5.0);
    prev = c;
  }
  EXPECT_EQ(battery_coeff(std::nextafter(30.0, 0.0)), -5.0);
  EXPECT_GE(battery_coeff(30.0) - battery_coeff(std::nextafter(30.0, 0.0)), 6.5);
}

TEST(Delay, Examples) {
  EXPECT_EQ(delay_coeff(0), 5.0);
  EXPECT_NEAR(delay_coeff(std::log(2.0)), 0.0, 1e-12);
  const long double expected = -5.0L + 10.0L * std::exp(-10.0L);
  EXPECT_NEAR(delay_coeff(10), static_cast<double>(expected), 1e-12);
  EXPECT_NEAR(delay_coeff(10), -4.999546, 1e-6);
}

TEST(Delay, StrictlyDecreasingAndBounded) {
  double prev = delay_coeff(0);
  for (double d = 0.05; d < 30; d += 0.05) {
    const double c = delay_coeff(d);
    ASSERT_LT(c, prev);
    ASSERT_GT(c, -5.0);
    ASSERT_LE(c, 5.0);
    prev = c;
  }
}

TEST(Safety, Branches) {
  for (double d : {0.0, 2.0, 3.0, 3.5, std::numeric_limits<double>::infinity()})
    for (Action a : kAllActions) EXPECT_EQ(safety_coeff(true, d, a), 0.0);
  EXPECT_EQ(safety_coeff(false, 2.0, Action::AvoidCollision), 5.0);
  EXPECT_EQ(safety_coeff(false, 2.0, Action::ContinuePrevious), -5.0);
  EXPECT_EQ(safety_coeff(false, 3.0, Action::ContinuePrevious), -5.0);
  EXPECT_EQ(safety_coeff(false, 3.5, Action::StayStill), 0.0);
  EXPECT_EQ(safety_coeff(false, 3.5, Action::AvoidCollision), 0.0);
}

namespace {

StepOutcome neutral() {
  StepOutcome o;
  o.vehicle = 0;
  o.action = Action::StayStill;
  o.battery = 100;
  o.delay = 0;
  o.grounded = true;
  return o;
}

StepOutcome random_outcome(Rng& rng) {
  StepOutcome o;
  o.vehicle = rng.uniform_int(0, 3);
  o.action = action_from_index(rng.uniform_int(0, kNumActions - 1));
  if (rng.uniform() < 0.3)
    o.takeoff = EventRecord{EventKind::Takeoff, 100, rng.uniform_int(90, 110), gen::uniform(rng, 0, 100)};
  if (rng.uniform() < 0.3)
    o.landing = EventRecord{EventKind::Landing, 100, rng.uniform_int(80, 120), gen::uniform(rng, 0, 100)};
  o.battery = gen::uniform(rng, 0, 100);
  o.delay = gen::uniform(rng, 0, 20);
  o.grounded = rng.uniform() < 0.5;
  o.d_min = gen::uniform(rng, 0, 6);
  return o;
}

RewardWeights random_weights(Rng& rng) {
  return {gen::uniform(rng, 0, 3), gen::uniform(rng, 0, 3), gen::uniform(rng, 0, 3),
          gen::uniform(rng, 0, 3), gen::uniform(rng, 0, 3)};
}

}  // namespace

TEST(TotalReward, DefaultWeightsFollowStatedOrdering) {
  const RewardWeights w;
  EXPECT_GT(w.safety, w.delay);
  EXPECT_GT(w.delay, w.takeoff);
  EXPECT_GT(w.takeoff, w.landing);
  EXPECT_GT(w.landing, w.battery);
  EXPECT_EQ(w.safety, 2.2);
}

TEST(TotalReward, NeutralOutcome) {
  const RewardWeights w;
  const auto r = total_reward(neutral(), w);
  EXPECT_EQ(r.tau, 0.0);
  EXPECT_EQ(r.gamma, 0.0);
  EXPECT_EQ(r.lambda, 5.0);
  EXPECT_EQ(r.beta, 5.0);
  EXPECT_EQ(r.safety, 0.0);
  EXPECT_DOUBLE_EQ(r.total, w.battery * 5.0 + w.delay * 5.0);
  EXPECT_DOUBLE_EQ(r.total, 10.0);
}

TEST(TotalReward, ZeroSafetyWeightIgnoresConflicts) {
  RewardWeights w;
  w.safety = 0.0;
  auto o = neutral();
  o.grounded = false;
  for (double d : {0.0, 1.0, 2.9, 10.0}) {
    o.d_min = d;
    for (Action a : {Action::ContinuePrevious, Action::AvoidCollision}) {
      o.action = a;
      const auto with = total_reward(o, w);
      const auto none = total_reward(neutral(), w);
      EXPECT_DOUBLE_EQ(with.total, none.total);
    }
  }
}

TEST(TotalReward, ZeroWeightsGiveZero) {
  Rng rng(3);
  for (int i = 0; i < 100; ++i) EXPECT_EQ(total_reward(random_outcome(rng), RewardWeights{0, 0, 0, 0, 0}).total, 0.0);
}

TEST(TotalReward, NoActedVehicleIsZero) {
  StepOutcome o;
  EXPECT_EQ(total_reward(o, RewardWeights{}).total, 0.0);
}

TEST(TotalReward, BreakdownRangesAndComposition) {
  Rng rng(4);
  const RewardWeights w;
  for (int i = 0; i < 2000; ++i) {
    const auto r = total_reward(random_outcome(rng), w);
    for (double c : {r.tau, r.gamma, r.safety}) ASSERT_TRUE(c == -5.0 || c == 0.0 || c == 5.0);
    ASSERT_TRUE(r.lambda == -5.0 || (r.lambda >= 1.5 && r.lambda <= 5.0));
    ASSERT_GT(r.beta, -5.0);
    ASSERT_LE(r.beta, 5.0);
    ASSERT_DOUBLE_EQ(r.total, w.takeoff * r.tau + w.landing * r.gamma + w.battery * r.lambda + w.delay * r.beta +
                                  w.safety * r.safety);
  }
}

TEST(TotalReward, LinearInWeights) {
  Rng rng(5);
  for (int i = 0; i < 1000; ++i) {
    const auto o = random_outcome(rng);
    const auto a = random_weights(rng);
    const auto b = random_weights(rng);
    EXPECT_NEAR(total_reward(o, a + b).total, total_reward(o, a).total + total_reward(o, b).total, 1e-12);
  }
}

TEST(TotalReward, PositiveScalingPreservesOrder) {
  Rng rng(6);
  for (int i = 0; i < 1000; ++i) {
    const auto o1 = random_outcome(rng);
    const auto o2 = random_outcome(rng);
    const auto w = random_weights(rng);
    const double s = gen::uniform(rng, 0.01, 100.0);
    const double d = total_reward(o1, w).total - total_reward(o2, w).total;
    const double ds = total_reward(o1, w.scaled(s)).total - total_reward(o2, w.scaled(s)).total;
    if (std::abs(d) > 1e-9) EXPECT_EQ(d > 0, ds > 0);
    EXPECT_NEAR(total_reward(o1, w.scaled(s)).total, s * total_reward(o1, w).total, 1e-9 * (1 + s));
  }
}

TEST(RewardWeights, RejectsNegative) {
  EXPECT_THROW(validate(RewardWeights{-1, 1, 1, 1, 1}), std::invalid_argument);
  EXPECT_NO_THROW(validate(RewardWeights{}));
}
