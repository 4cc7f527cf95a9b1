#include "vsm/episode.hpp"

#include <cstdio>
#include <ostream>
#include <sstream>
#include <stdexcept>

#include <nlohmann/json.hpp>

namespace vsm {

EpisodeSummary run_episode(const Simulator& sim, const Policy& policy, std::uint64_t seed,
                           const RewardWeights& weights, SimState& state, const StepObserver& observer) {
  state = sim.reset(seed);
  EpisodeSummary sum;
  sum.seed = seed;
  double battery_acc = 0.0;
  double delay_minutes = 0.0;

  while (!sim.done(state)) {
    const auto vehicle = select_vehicle(state);
    Action action = Action::StayStill;
    if (vehicle) {
      action = policy(state, *vehicle, mask_for(state, *vehicle));
      ++sum.decisions;
    }
    const StepOutcome out = sim.step(state, vehicle, action);
    const RewardBreakdown r = total_reward(out, weights);

    ++sum.steps;
    sum.cumulative_reward += r.total;
    sum.good_takeoffs += out.takeoffs_good;
    sum.bad_takeoffs += out.takeoffs_bad;
    sum.good_landings += out.landings_good;
    sum.bad_landings += out.landings_bad;
    sum.collisions += out.collisions;
    delay_minutes += out.delay_minutes_added;
    battery_acc += out.mean_battery;
    if (observer) observer(state, out, r);
  }
  sum.cumulative_delay_hours = delay_minutes / 60.0;
  sum.mean_battery = sum.steps > 0 ? battery_acc / sum.steps : 0.0;
  return sum;
}

EpisodeSummary run_episode(const Simulator& sim, const Policy& policy, std::uint64_t seed,
                           const RewardWeights& weights, const StepObserver& observer) {
  SimState state;
  return run_episode(sim, policy, seed, weights, state, observer);
}

std::string summary_csv_header() {
  return "seed,steps,decisions,cumulative_reward,good_takeoffs,bad_takeoffs,good_landings,bad_landings,"
         "collisions,cumulative_delay_hours,mean_battery";
}

namespace {

std::string fmt_double(double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

}  // namespace

std::string to_csv_row(const EpisodeSummary& s) {
  std::ostringstream os;
  os << s.seed << ',' << s.steps << ',' << s.decisions << ',' << fmt_double(s.cumulative_reward) << ','
     << s.good_takeoffs << ',' << s.bad_takeoffs << ',' << s.good_landings << ',' << s.bad_landings << ','
     << s.collisions << ',' << fmt_double(s.cumulative_delay_hours) << ',' << fmt_double(s.mean_battery);
  return os.str();
}

EpisodeSummary summary_from_csv_row(const std::string& line) {
  std::vector<std::string> f;
  std::stringstream ss(line);
  for (std::string cell; std::getline(ss, cell, ',');) f.push_back(cell);
  if (f.size() != 11) throw std::invalid_argument("summary row must have 11 fields: " + line);
  EpisodeSummary s;
  s.seed = std::stoull(f[0]);
  s.steps = std::stoi(f[1]);
  s.decisions = std::stoi(f[2]);
  s.cumulative_reward = std::stod(f[3]);
  s.good_takeoffs = std::stoi(f[4]);
  s.bad_takeoffs = std::stoi(f[5]);
  s.good_landings = std::stoi(f[6]);
  s.bad_landings = std::stoi(f[7]);
  s.collisions = std::stoi(f[8]);
  s.cumulative_delay_hours = std::stod(f[9]);
  s.mean_battery = std::stod(f[10]);
  return s;
}

nlohmann::json to_json(const EpisodeSummary& s) {
  return {{"seed", s.seed},
          {"steps", s.steps},
          {"decisions", s.decisions},
          {"cumulative_reward", s.cumulative_reward},
          {"good_takeoffs", s.good_takeoffs},
          {"bad_takeoffs", s.bad_takeoffs},
          {"good_landings", s.good_landings},
          {"bad_landings", s.bad_landings},
          {"collisions", s.collisions},
          {"cumulative_delay_hours", s.cumulative_delay_hours},
          {"mean_battery", s.mean_battery}};
}

std::string format_event(const SimEvent& e) {
  std::ostringstream os;
  os << e.time << ',' << e.vehicle << ',' << to_string(e.kind);
  std::visit(
      [&os](const auto& p) {
        using T = std::decay_t<decltype(p)>;
        if constexpr (std::is_same_v<T, TookOffInfo>) {
          os << ",due=" << p.due << ",battery=" << fmt_double(p.battery) << ",good=" << p.good
             << ",port=" << p.port << ",destination=" << p.destination;
        } else if constexpr (std::is_same_v<T, LandedInfo>) {
          os << ",due=" << p.due << ",battery=" << fmt_double(p.battery) << ",good=" << p.good
             << ",node=" << p.node << ",forced=" << p.forced;
        } else if constexpr (std::is_same_v<T, ChargeInfo>) {
          os << ",port=" << p.port << ",battery=" << fmt_double(p.battery);
        } else if constexpr (std::is_same_v<T, CollisionInfo>) {
          os << ",other=" << p.other << ",distance=" << fmt_double(p.distance);
        } else if constexpr (std::is_same_v<T, ScheduleInfo>) {
          os << ",event=" << to_string(p.kind) << ",due=" << p.due << ",destination=" << p.destination
             << ",reference=" << p.reference_time;
        } else {
          os << ",d_min=" << fmt_double(p.d_min);
        }
      },
      e.payload);
  return os.str();
}

void write_event_log(std::ostream& out, const std::vector<SimEvent>& events) {
  for (const auto& e : events) out << format_event(e) << '\n';
}

}  // namespace vsm
