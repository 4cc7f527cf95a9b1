#pragma once

// Full-day episodes and their summaries.

#include <cstdint>
#include <functional>
#include <iosfwd>
#include <string>
#include <vector>

#include <nlohmann/json_fwd.hpp>

#include "vsm/reward.hpp"
#include "vsm/simulator.hpp"

namespace vsm {

// Decides an action for the selected vehicle. Must return an action allowed by the mask.
using Policy = std::function<Action(const SimState&, VehicleId, const ActionMask&)>;

// Called after every step with the post-step state.
using StepObserver = std::function<void(const SimState&, const StepOutcome&, const RewardBreakdown&)>;

struct EpisodeSummary {
  std::uint64_t seed = 0;
  int steps = 0;
  int decisions = 0;
  double cumulative_reward = 0.0;
  int good_takeoffs = 0;
  int bad_takeoffs = 0;
  int good_landings = 0;
  int bad_landings = 0;
  int collisions = 0;
  double cumulative_delay_hours = 0.0;  // summed over all vehicles
  double mean_battery = 0.0;            // over vehicles and steps

  friend bool operator==(const EpisodeSummary&, const EpisodeSummary&) = default;
};

EpisodeSummary run_episode(const Simulator& sim, const Policy& policy, std::uint64_t seed,
                           const RewardWeights& weights, const StepObserver& observer = {});

// Same as run_episode but also returns the final state (for the event log).
EpisodeSummary run_episode(const Simulator& sim, const Policy& policy, std::uint64_t seed,
                           const RewardWeights& weights, SimState& final_state,
                           const StepObserver& observer = {});

// One summary per line; the column order is stable.
std::string summary_csv_header();
std::string to_csv_row(const EpisodeSummary& s);
EpisodeSummary summary_from_csv_row(const std::string& line);
nlohmann::json to_json(const EpisodeSummary& s);

// `minute,vehicle,kind,payload...`, one event per line.
std::string format_event(const SimEvent& e);
void write_event_log(std::ostream& out, const std::vector<SimEvent>& events);

}  // namespace vsm
