#include "vsm/reward.hpp"

#include <cmath>
#include <stdexcept>

#include "vsm/config.hpp"

namespace vsm {

RewardWeights RewardWeights::operator+(const RewardWeights& o) const {
  return {takeoff + o.takeoff, landing + o.landing, battery + o.battery, delay + o.delay, safety + o.safety};
}

RewardWeights RewardWeights::scaled(double s) const {
  return {takeoff * s, landing * s, battery * s, delay * s, safety * s};
}

void validate(const RewardWeights& w) {
  for (double v : {w.takeoff, w.landing, w.battery, w.delay, w.safety})
    if (!(v >= 0.0) || !std::isfinite(v)) throw std::invalid_argument("reward weights must be finite and non-negative");
}

RewardWeights reward_weights_from(const KeyValueConfig& cfg, RewardWeights w) {
  if (auto v = cfg.get_double("reward.w_takeoff")) w.takeoff = *v;
  if (auto v = cfg.get_double("reward.w_landing")) w.landing = *v;
  if (auto v = cfg.get_double("reward.w_battery")) w.battery = *v;
  if (auto v = cfg.get_double("reward.w_delay")) w.delay = *v;
  if (auto v = cfg.get_double("reward.w_safety")) w.safety = *v;
  validate(w);
  return w;
}

bool is_good_event(const EventRecord& e) {
  const double late = e.actual_time - e.due_time;
  const bool punctual = e.kind == EventKind::Landing ? late <= kPunctualityWindow
                                                     : std::abs(late) <= kPunctualityWindow;
  return punctual && e.battery > kBatteryFloor;
}

double takeoff_landing_coeff(const std::optional<EventRecord>& event) {
  if (!event) return 0.0;
  return is_good_event(*event) ? 5.0 : -5.0;
}

double battery_coeff(double battery) { return battery >= kBatteryFloor ? 5.0 * battery / 100.0 : -5.0; }

double delay_coeff(double delay_minutes) { return -5.0 + 10.0 * std::exp(-delay_minutes); }

double safety_coeff(bool grounded, double d_min, Action action) {
  if (grounded) return 0.0;
  if (d_min <= kSeparationLimit) return action == Action::AvoidCollision ? 5.0 : -5.0;
  return 0.0;
}

RewardBreakdown total_reward(const StepOutcome& o, const RewardWeights& w) {
  RewardBreakdown r;
  if (!o.vehicle) return r;
  r.tau = takeoff_landing_coeff(o.takeoff);
  r.gamma = takeoff_landing_coeff(o.landing);
  r.lambda = battery_coeff(o.battery);
  r.beta = delay_coeff(o.delay);
  r.safety = safety_coeff(o.grounded, o.d_min, o.action);
  r.total = w.takeoff * r.tau + w.landing * r.gamma + w.battery * r.lambda + w.delay * r.beta + w.safety * r.safety;
  return r;
}

}  // namespace vsm
