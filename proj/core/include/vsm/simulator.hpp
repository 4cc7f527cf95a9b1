#pragma once

// One-minute-step vertiport simulator: kinematics, battery, schedules, vehicle selection.

#include <array>
#include <cstdint>
#include <optional>
#include <stdexcept>
#include <variant>
#include <vector>

#include "vsm/domain.hpp"
#include "vsm/layout.hpp"
#include "vsm/reward.hpp"
#include "vsm/rng.hpp"

namespace vsm {

class KeyValueConfig;

// Discharge rate Ω per step: cruise distance when cruising, fixed drains otherwise.
struct BatteryModel {
  double drain_per_meter = 0.02;  // a 500 m round trip costs 10%
  double hover_drain = 0.5;
  double idle_drain = 0.25;
  double charge_rate = 10.0;

  // Signed battery change for one step. Charging on the battery port overrides idle drain.
  double delta(const VehicleStatus& status, PortType ground_port, double cruise_meters) const;
  // Applies a change and saturates into [0, 100].
  static double apply(double battery, double change);

  friend bool operator==(const BatteryModel&, const BatteryModel&) = default;
};

struct SimConfig {
  LayoutConfig layout;
  BatteryModel battery;
  double cruise_speed = 50.0;  // meters/minute
  double collision_threshold = 3.0;
  double conflict_horizon = 10.0;  // minutes
  int dwell_min = 10;  // minutes spent at a destination before heading home
  int dwell_max = 30;
  int episode_minutes = kEpisodeMinutes;

  friend bool operator==(const SimConfig&, const SimConfig&) = default;
};

void validate(const SimConfig& config);
SimConfig sim_config_from(const KeyValueConfig& cfg, SimConfig base = {});

enum class SimEventKind : std::uint8_t {
  TookOff,
  Landed,
  StartedCharge,
  CollisionOccurred,
  ScheduleIssued,
  AvoidanceExecuted,
};

std::string_view to_string(SimEventKind kind);

struct TookOffInfo {
  int due = 0;
  double battery = 0.0;
  bool good = false;
  NodeId port = 0;
  NodeId destination = 0;
  friend bool operator==(const TookOffInfo&, const TookOffInfo&) = default;
};
struct LandedInfo {
  int due = 0;
  double battery = 0.0;
  bool good = false;
  NodeId node = 0;
  bool forced = false;  // battery depleted in flight
  friend bool operator==(const LandedInfo&, const LandedInfo&) = default;
};
struct ChargeInfo {
  NodeId port = 0;
  double battery = 0.0;
  friend bool operator==(const ChargeInfo&, const ChargeInfo&) = default;
};
struct CollisionInfo {
  VehicleId other = 0;
  double distance = 0.0;
  friend bool operator==(const CollisionInfo&, const CollisionInfo&) = default;
};
struct ScheduleInfo {
  EventKind kind = EventKind::Takeoff;
  int due = 0;
  NodeId destination = 0;
  int reference_time = 0;
  friend bool operator==(const ScheduleInfo&, const ScheduleInfo&) = default;
};
struct AvoidanceInfo {
  double d_min = 0.0;
  friend bool operator==(const AvoidanceInfo&, const AvoidanceInfo&) = default;
};

using EventPayload = std::variant<TookOffInfo, LandedInfo, ChargeInfo, CollisionInfo, ScheduleInfo, AvoidanceInfo>;

struct SimEvent {
  int time = 0;
  VehicleId vehicle = 0;
  SimEventKind kind = SimEventKind::TookOff;
  EventPayload payload;
  friend bool operator==(const SimEvent&, const SimEvent&) = default;
};

// Bookkeeping that is not part of the observable vehicle state.
struct VehicleRuntime {
  bool decided = false;  // already acted on in the current selection round
  bool halted = false;   // avoidance hold for the current step
  int dwell_until = 0;
  friend bool operator==(const VehicleRuntime&, const VehicleRuntime&) = default;
};

struct SimState {
  int clock = 0;
  VertiportGraph vertiport;
  VehicleGraph vehicles;
  std::array<Schedule, kNumVehicles> schedules;
  Rng rng;
  std::vector<SimEvent> event_log;
  std::array<VehicleRuntime, kNumVehicles> runtime;
  std::array<bool, kNumVehicles * kNumVehicles> in_contact{};

  const VehicleNode& vehicle(VehicleId id) const { return vehicles.nodes.at(static_cast<std::size_t>(id)); }

  friend bool operator==(const SimState&, const SimState&) = default;
};

class InfeasibleAction : public std::logic_error {
 public:
  using std::logic_error::logic_error;
};

class EpisodeOver : public std::logic_error {
 public:
  using std::logic_error::logic_error;
};

bool in_airspace(const SimState& state, VehicleId id);

// Lowest-id vehicle inside the airspace that has not acted in the current round. Once every
// such vehicle has acted, a new round starts. None when no vehicle is inside the airspace.
std::optional<VehicleId> select_vehicle(const SimState& state);

ActionMask mask_for(const SimState& state, VehicleId id);

class Simulator {
 public:
  explicit Simulator(SimConfig config = {});

  const SimConfig& config() const { return config_; }

  SimState reset(std::uint64_t seed) const;

  // Applies the action to the acted vehicle (if any) and advances every vehicle one minute.
  // Throws InfeasibleAction when the mask forbids the action, EpisodeOver at the final minute.
  StepOutcome step(SimState& state, std::optional<VehicleId> vehicle, Action action) const;

  bool done(const SimState& state) const { return state.clock >= config_.episode_minutes; }

 private:
  SimConfig config_;
};

}  // namespace vsm
