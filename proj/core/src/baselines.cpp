#include "vsm/baselines.hpp"

#include <algorithm>
#include <memory>
#include <stdexcept>

namespace vsm {

Action random_policy(const SimState&, VehicleId, const ActionMask& mask, Rng& rng) {
  const auto options = mask.feasible();
  if (options.empty()) throw std::invalid_argument("random_policy: empty mask");
  return options[static_cast<std::size_t>(rng.uniform_int(0, static_cast<int>(options.size()) - 1))];
}

bool FcfsState::queued(VehicleId id) const {
  return std::find(recharge_queue.begin(), recharge_queue.end(), id) != recharge_queue.end() ||
         std::find(takeoff_queue.begin(), takeoff_queue.end(), id) != takeoff_queue.end();
}

namespace {

void erase(std::deque<VehicleId>& q, VehicleId id) { q.erase(std::remove(q.begin(), q.end(), id), q.end()); }

bool outbound(const SimState& s, const VehicleNode& v) {
  const auto* cr = std::get_if<Cruising>(&v.status);
  return cr && s.vertiport.node(cr->target).type == PortType::Destination;
}

// Minute the vehicle last started charging, or -1.
int charge_start(const SimState& s, VehicleId id) {
  for (auto it = s.event_log.rbegin(); it != s.event_log.rend(); ++it)
    if (it->vehicle == id && it->kind == SimEventKind::StartedCharge) return it->time;
  return -1;
}

bool on_battery_port(const SimState& s, const VehicleNode& v) {
  const auto* g = std::get_if<GroundedAtPort>(&v.status);
  return g && s.vertiport.node(g->port).type == PortType::BatteryPort;
}

bool charge_complete(const SimState& s, const VehicleNode& v) {
  if (v.battery >= 100.0) return true;
  const int start = charge_start(s, v.id);
  return start >= 0 && s.clock - start >= kMaxRechargeSteps;
}

Action first_allowed(const ActionMask& mask, std::initializer_list<Action> prefs) {
  for (Action a : prefs)
    if (mask[a]) return a;
  return mask[Action::StayStill] ? Action::StayStill : Action::ContinuePrevious;
}

Action hold(const ActionMask& mask) { return first_allowed(mask, {Action::StayStill}); }

Action free_normal_port(const ActionMask& mask) {
  return first_allowed(mask, {Action::MoveOrLandNormalPort1, Action::MoveOrLandNormalPort2});
}

Action lowest_free_hover_spot(const ActionMask& mask) {
  return first_allowed(mask, {Action::MoveToHoverSpot1, Action::MoveToHoverSpot2, Action::MoveToHoverSpot3,
                              Action::MoveToHoverSpot4});
}

Action takeoff_queue_action(const SimState& s, const VehicleNode& v, const ActionMask& mask, bool head) {
  if (v.cruising()) return Action::ContinuePrevious;
  if (v.hovering()) return free_normal_port(mask);
  const auto* ev = s.schedules[static_cast<std::size_t>(v.id)].next();
  const bool window_open = ev && ev->kind == EventKind::Takeoff && s.clock >= ev->due_time - 5;
  if (head && window_open && mask[Action::Takeoff]) return Action::Takeoff;
  if (on_battery_port(s, v)) return free_normal_port(mask);
  return hold(mask);
}

}  // namespace

void fcfs_sync(const SimState& s, FcfsState& fcfs) {
  for (const auto& v : s.vehicles.nodes) {
    if (v.at_destination() || outbound(s, v)) {
      erase(fcfs.recharge_queue, v.id);
      erase(fcfs.takeoff_queue, v.id);
      continue;
    }
    if (fcfs.queued(v.id) || !in_airspace(s, v.id)) continue;
    if (v.grounded() && s.schedules[static_cast<std::size_t>(v.id)].has_pending(EventKind::Takeoff))
      fcfs.takeoff_queue.push_back(v.id);
    else
      fcfs.recharge_queue.push_back(v.id);
  }
}

Action fcfs_policy(const SimState& s, VehicleId id, const ActionMask& mask, FcfsState& fcfs) {
  fcfs_sync(s, fcfs);
  const auto& v = s.vehicle(id);

  auto in_recharge = std::find(fcfs.recharge_queue.begin(), fcfs.recharge_queue.end(), id);
  if (in_recharge != fcfs.recharge_queue.end()) {
    if (v.cruising()) return Action::ContinuePrevious;
    if (on_battery_port(s, v)) {
      if (!charge_complete(s, v)) return hold(mask);
      fcfs.recharge_queue.erase(in_recharge);
      fcfs.takeoff_queue.push_back(id);
      return takeoff_queue_action(s, v, mask, fcfs.takeoff_queue.front() == id);
    }
    if (fcfs.recharge_queue.front() == id) return first_allowed(mask, {Action::MoveOrLandBatteryPort1, Action::StayStill});
    if (v.grounded()) return lowest_free_hover_spot(mask);
    return hold(mask);
  }

  if (std::find(fcfs.takeoff_queue.begin(), fcfs.takeoff_queue.end(), id) != fcfs.takeoff_queue.end())
    return takeoff_queue_action(s, v, mask, fcfs.takeoff_queue.front() == id);

  return v.cruising() ? Action::ContinuePrevious : hold(mask);
}

Policy make_random_policy(std::uint64_t seed) {
  auto rng = std::make_shared<Rng>(seed);
  return [rng](const SimState& s, VehicleId id, const ActionMask& mask) { return random_policy(s, id, mask, *rng); };
}

Policy make_fcfs_policy() {
  struct Holder {
    FcfsState fcfs;
    int last_clock = -1;
  };
  auto h = std::make_shared<Holder>();
  return [h](const SimState& s, VehicleId id, const ActionMask& mask) {
    if (s.clock < h->last_clock) h->fcfs = FcfsState{};  // new episode
    h->last_clock = s.clock;
    return fcfs_policy(s, id, mask, h->fcfs);
  };
}

}  // namespace vsm
