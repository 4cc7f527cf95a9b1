#pragma once

// Per-step reward R = w1·τ + w2·γ + w3·λ + w4·β + w5·S.

#include <limits>
#include <optional>

#include "vsm/domain.hpp"

namespace vsm {

class KeyValueConfig;

struct RewardWeights {
  double takeoff = 1.1;   // w1, τ
  double landing = 1.0;   // w2, γ
  double battery = 0.8;   // w3, λ
  double delay = 1.2;     // w4, β
  double safety = 2.2;    // w5, S

  RewardWeights operator+(const RewardWeights& o) const;
  RewardWeights scaled(double s) const;

  friend bool operator==(const RewardWeights&, const RewardWeights&) = default;
};

void validate(const RewardWeights& w);
RewardWeights reward_weights_from(const KeyValueConfig& cfg, RewardWeights base = {});

// A takeoff or landing as it happened.
struct EventRecord {
  EventKind kind = EventKind::Takeoff;
  int due_time = 0;
  int actual_time = 0;
  double battery = 100.0;
};

inline constexpr double kPunctualityWindow = 5.0;  // minutes
inline constexpr double kBatteryFloor = 30.0;       // percent
inline constexpr double kSeparationLimit = 3.0;     // meters, inclusive for the safety term

// Good takeoff: within the window on either side. Good landing: not later than the window.
// Both require battery strictly above the floor.
bool is_good_event(const EventRecord& e);

double takeoff_landing_coeff(const std::optional<EventRecord>& event);
double battery_coeff(double battery);
double delay_coeff(double delay_minutes);
double safety_coeff(bool grounded, double d_min, Action action);

// Facts about one decision step, produced by the simulator.
struct StepOutcome {
  int minute = 0;
  std::optional<VehicleId> vehicle;
  Action action = Action::StayStill;
  std::optional<EventRecord> takeoff;  // of the acted vehicle
  std::optional<EventRecord> landing;  // of the acted vehicle
  double battery = 100.0;              // acted vehicle, after the step
  double delay = 0.0;                  // acted vehicle Δ_i, after the step
  bool grounded = true;                // acted vehicle, before the action
  bool en_route = false;
  double d_min = std::numeric_limits<double>::infinity();  // CPA against other en-route vehicles
  int collisions = 0;                  // new airborne contacts during the step (all vehicles)
  int takeoffs_good = 0, takeoffs_bad = 0;  // all vehicles
  int landings_good = 0, landings_bad = 0;
  double delay_minutes_added = 0.0;    // summed over all vehicles
  double mean_battery = 0.0;           // over all vehicles, after the step
};

struct RewardBreakdown {
  double tau = 0.0;
  double gamma = 0.0;
  double lambda = 0.0;
  double beta = 0.0;
  double safety = 0.0;
  double total = 0.0;
};

// Zero for steps without an acted vehicle.
RewardBreakdown total_reward(const StepOutcome& outcome, const RewardWeights& w);

}  // namespace vsm
