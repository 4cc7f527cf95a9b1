#pragma once

// Non-learned decision functions: uniform random over feasible actions, and first-come-first-served.

#include <array>
#include <deque>

#include "vsm/episode.hpp"
#include "vsm/rng.hpp"

namespace vsm {

// Uniform choice among the feasible actions. Requires mask.any().
Action random_policy(const SimState& state, VehicleId vehicle, const ActionMask& mask, Rng& rng);

inline constexpr int kMaxRechargeSteps = 6;

struct FcfsState {
  std::deque<VehicleId> recharge_queue;  // waiting for / holding the battery port
  std::deque<VehicleId> takeoff_queue;   // charged, waiting for the takeoff window

  bool queued(VehicleId id) const;
};

// Lands queued vehicles on the battery port one after the other, holds each for
// min(steps-to-full, 6) steps, then takes them off in order once their window opens.
// Never commands collision avoidance.
Action fcfs_policy(const SimState& state, VehicleId vehicle, const ActionMask& mask, FcfsState& fcfs);

// Brings the queues in line with the simulator state: departed vehicles leave their queue,
// newly arrived ones join at the back (ascending id within the same minute).
void fcfs_sync(const SimState& state, FcfsState& fcfs);

// Policy wrappers owning their own state. Each returned object is for one episode at a time.
Policy make_random_policy(std::uint64_t seed);
Policy make_fcfs_policy();

}  // namespace vsm
