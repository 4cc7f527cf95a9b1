#include "vsm/simulator.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "vsm/config.hpp"
#include "vsm/conflict.hpp"

namespace vsm {

double BatteryModel::delta(const VehicleStatus& status, PortType ground_port, double cruise_meters) const {
  switch (status.index()) {
    case 0: return ground_port == PortType::BatteryPort ? charge_rate : -idle_drain;
    case 1: return -hover_drain;
    case 2: return -drain_per_meter * cruise_meters;
    default: return 0.0;
  }
}

double BatteryModel::apply(double battery, double change) { return std::clamp(battery + change, 0.0, 100.0); }

void validate(const SimConfig& c) {
  validate(c.layout);
  if (!(c.cruise_speed > 0.0)) throw std::invalid_argument("sim: cruise_speed must be positive");
  if (!(c.collision_threshold > 0.0)) throw std::invalid_argument("sim: collision_threshold must be positive");
  if (!(c.conflict_horizon >= 0.0)) throw std::invalid_argument("sim: conflict_horizon must be >= 0");
  if (c.dwell_min < 0 || c.dwell_max < c.dwell_min) throw std::invalid_argument("sim: invalid dwell range");
  if (c.episode_minutes <= 0) throw std::invalid_argument("sim: episode_minutes must be positive");
  const auto& b = c.battery;
  for (double v : {b.drain_per_meter, b.hover_drain, b.idle_drain, b.charge_rate})
    if (!(v >= 0.0)) throw std::invalid_argument("sim: battery rates must be non-negative");
}

SimConfig sim_config_from(const KeyValueConfig& cfg, SimConfig c) {
  auto d = [&cfg](const char* key, double& out) {
    if (auto v = cfg.get_double(key)) out = *v;
  };
  auto i = [&cfg](const char* key, int& out) {
    if (auto v = cfg.get_int(key)) out = static_cast<int>(*v);
  };
  d("layout.port_spacing", c.layout.port_spacing);
  d("layout.hover_radius", c.layout.hover_radius);
  d("layout.destination_radius", c.layout.destination_radius);
  d("layout.destination_bearing_deg", c.layout.destination_bearing_deg);
  d("layout.airspace_radius", c.layout.airspace_radius);
  d("layout.landing_capture_radius", c.layout.landing_capture_radius);
  d("sim.cruise_speed", c.cruise_speed);
  d("sim.drain_per_meter", c.battery.drain_per_meter);
  d("sim.hover_drain", c.battery.hover_drain);
  d("sim.idle_drain", c.battery.idle_drain);
  d("sim.charge_rate", c.battery.charge_rate);
  d("sim.collision_threshold", c.collision_threshold);
  d("sim.conflict_horizon", c.conflict_horizon);
  i("sim.dwell_min", c.dwell_min);
  i("sim.dwell_max", c.dwell_max);
  i("sim.episode_minutes", c.episode_minutes);
  validate(c);
  return c;
}

std::string_view to_string(SimEventKind kind) {
  switch (kind) {
    case SimEventKind::TookOff: return "took_off";
    case SimEventKind::Landed: return "landed";
    case SimEventKind::StartedCharge: return "started_charge";
    case SimEventKind::CollisionOccurred: return "collision";
    case SimEventKind::ScheduleIssued: return "schedule_issued";
    case SimEventKind::AvoidanceExecuted: return "avoidance";
  }
  return "unknown";
}

bool in_airspace(const SimState& state, VehicleId id) {
  const auto& v = state.vehicle(id);
  if (v.grounded() || v.hovering()) return true;
  if (v.cruising()) return v.location.norm() <= state.vertiport.airspace_radius;
  return false;
}

std::optional<VehicleId> select_vehicle(const SimState& state) {
  std::optional<VehicleId> first;
  for (const auto& v : state.vehicles.nodes) {
    if (!in_airspace(state, v.id)) continue;
    if (!state.runtime[static_cast<std::size_t>(v.id)].decided) return v.id;
    if (!first) first = v.id;
  }
  return first;
}

ActionMask mask_for(const SimState& state, VehicleId id) {
  return feasible_mask(state.vehicle(id), state.vertiport, state.schedules.at(static_cast<std::size_t>(id)));
}

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

std::size_t ix(VehicleId id) { return static_cast<std::size_t>(id); }

class StepContext {
 public:
  StepContext(const SimConfig& config, SimState& state, StepOutcome& out)
      : c_(config), s_(state), out_(out) {}

  VehicleNode& vehicle(VehicleId id) { return s_.vehicles.nodes[ix(id)]; }
  PortNode& node(NodeId id) { return s_.vertiport.node(id); }

  void log(int time, VehicleId v, SimEventKind kind, EventPayload payload) {
    s_.event_log.push_back(SimEvent{time, v, kind, std::move(payload)});
  }

  void sync_schedule_status(VehicleId id) {
    auto& v = vehicle(id);
    const auto* e = s_.schedules[ix(id)].next();
    v.schedule_status.next_event = e ? e->kind : EventKind::None;
    v.schedule_status.event_time = e ? e->due_time : 0;
  }

  void issue(VehicleId id, EventKind kind, int reference_time, NodeId destination) {
    const int due = kind == EventKind::Takeoff ? reference_time + s_.rng.uniform_int(10, 20)
                                               : reference_time + s_.rng.uniform_int(5, 15);
    s_.schedules[ix(id)].events.push_back(ScheduledEvent{kind, due, destination, reference_time});
    vehicle(id).schedule_status.accumulated_delay = 0.0;
    sync_schedule_status(id);
    log(reference_time, id, SimEventKind::ScheduleIssued, ScheduleInfo{kind, due, destination, reference_time});
  }

  void issue_takeoff(VehicleId id, int return_time) {
    const NodeId dest = s_.vertiport.nth(PortType::Destination, s_.rng.uniform_int(0, kNumDestinations - 1));
    issue(id, EventKind::Takeoff, return_time, dest);
  }

  NodeId nearest_free_hover_spot(Vec2 from) {
    NodeId best = -1;
    double best_d = kInf;
    for (NodeId id : s_.vertiport.nodes_of(PortType::HoverSpot)) {
      if (!node(id).available) continue;
      double d = distance(from, node(id).location);
      if (d < best_d) {
        best_d = d;
        best = id;
      }
    }
    if (best < 0) throw std::logic_error("no free hover spot for an inbound vehicle");
    return best;
  }

  void start_cruise(VehicleId id, NodeId origin, NodeId target) {
    auto& v = vehicle(id);
    v.status = Cruising{origin, target};
    node(target).available = false;
    v.velocity = cruise_velocity(v.location, node(target).location);
  }

  Vec2 cruise_velocity(Vec2 from, Vec2 to) const {
    Vec2 d = to - from;
    double len = d.norm();
    if (len <= 0.0) return {};
    return (c_.cruise_speed / len) * d;
  }

  double leg_minutes(const VehicleNode& v) {
    const auto& cr = std::get<Cruising>(v.status);
    return distance(v.location, node(cr.target).location) / c_.cruise_speed;
  }

  // Arrival of a vehicle at a node it has reserved.
  void arrive(VehicleId id, NodeId at, int time, bool forced) {
    auto& v = vehicle(id);
    v.location = node(at).location;
    v.velocity = {};
    const PortType type = node(at).type;
    auto& sched = s_.schedules[ix(id)];

    if (type == PortType::NormalPort || type == PortType::BatteryPort) {
      v.status = GroundedAtPort{at};
      if (sched.has_pending(EventKind::Landing)) {
        const auto ev = sched.events.front();
        sched.events.pop_front();
        EventRecord rec{EventKind::Landing, ev.due_time, time, v.battery};
        const bool good = is_good_event(rec);
        (good ? out_.landings_good : out_.landings_bad) += 1;
        if (out_.vehicle == id) out_.landing = rec;
        log(time, id, SimEventKind::Landed, LandedInfo{ev.due_time, v.battery, good, at, forced});
        issue_takeoff(id, time);
      } else if (forced) {
        log(time, id, SimEventKind::Landed, LandedInfo{-1, v.battery, false, at, true});
      }
      if (type == PortType::BatteryPort) log(time, id, SimEventKind::StartedCharge, ChargeInfo{at, v.battery});
    } else if (type == PortType::HoverSpot) {
      v.status = Hovering{at};
      if (forced) log(time, id, SimEventKind::Landed, LandedInfo{-1, v.battery, false, at, true});
    } else {
      v.status = AtDestination{at};
      s_.runtime[ix(id)].dwell_until = time + s_.rng.uniform_int(c_.dwell_min, c_.dwell_max);
      s_.runtime[ix(id)].decided = false;
      if (forced) log(time, id, SimEventKind::Landed, LandedInfo{-1, v.battery, false, at, true});
    }
    sync_schedule_status(id);
  }

  double selected_d_min(VehicleId id) {
    const auto& v = vehicle(id);
    double best = kInf;
    for (const auto& o : s_.vehicles.nodes) {
      if (o.id == id || !o.cruising()) continue;
      const double horizon = std::min({c_.conflict_horizon, leg_minutes(v), leg_minutes(o)});
      ConflictQuery q{v.location, o.location, v.velocity, o.velocity};
      best = std::min(best, min_separation(q, horizon, c_.collision_threshold).d_min);
    }
    return best;
  }

  void apply_action(VehicleId id, Action action) {
    auto& v = vehicle(id);
    const int now = s_.clock;
    switch (action) {
      case Action::StayStill:
      case Action::ContinuePrevious:
        return;
      case Action::AvoidCollision: {
        s_.runtime[ix(id)].halted = true;
        log(now, id, SimEventKind::AvoidanceExecuted, AvoidanceInfo{out_.d_min});
        v.velocity = {};
        return;
      }
      case Action::Takeoff: {
        const NodeId port = std::get<GroundedAtPort>(v.status).port;
        auto& sched = s_.schedules[ix(id)];
        const auto ev = sched.events.front();
        sched.events.pop_front();
        EventRecord rec{EventKind::Takeoff, ev.due_time, now, v.battery};
        const bool good = is_good_event(rec);
        (good ? out_.takeoffs_good : out_.takeoffs_bad) += 1;
        out_.takeoff = rec;

        NodeId dest = ev.destination;
        if (!node(dest).available) {
          for (NodeId d : s_.vertiport.nodes_of(PortType::Destination))
            if (node(d).available) {
              dest = d;
              break;
            }
        }
        node(port).available = true;
        start_cruise(id, port, dest);
        sync_schedule_status(id);
        log(now, id, SimEventKind::TookOff, TookOffInfo{ev.due_time, v.battery, good, port, dest});
        return;
      }
      default: break;
    }

    const NodeId target = *action_target(action, s_.vertiport);
    const NodeId current = v.grounded() ? std::get<GroundedAtPort>(v.status).port : std::get<Hovering>(v.status).spot;
    const PortType ttype = node(target).type;
    const bool is_port = ttype == PortType::NormalPort || ttype == PortType::BatteryPort;

    node(current).available = true;
    if (v.hovering() && is_port &&
        distance(v.location, node(target).location) <= s_.vertiport.landing_capture_radius) {
      node(target).available = false;
      arrive(id, target, now, false);
      return;
    }
    start_cruise(id, current, target);
  }

 private:
  const SimConfig& c_;
  SimState& s_;
  StepOutcome& out_;
};

struct Motion {
  Vec2 p0;
  Vec2 velocity;
  double arrive_at = 2.0;  // fraction of the step; > 1 means no arrival
  bool airborne = false;
  bool airborne_after_arrival = false;
  double meters = 0.0;

  Vec2 position(double s) const { return p0 + std::min(s, arrive_at) * velocity; }
  bool airborne_at(double s) const { return airborne && (s <= arrive_at || airborne_after_arrival); }
  Vec2 velocity_at(double s) const { return s < arrive_at ? velocity : Vec2{}; }
};

double closest_approach(const Motion& a, const Motion& b) {
  std::vector<double> cuts{0.0, 1.0};
  for (double f : {a.arrive_at, b.arrive_at})
    if (f > 0.0 && f < 1.0) cuts.push_back(f);
  std::sort(cuts.begin(), cuts.end());

  double best = kInf;
  for (std::size_t k = 0; k + 1 < cuts.size(); ++k) {
    const double s0 = cuts[k], s1 = cuts[k + 1];
    if (s1 <= s0) continue;
    const double mid = 0.5 * (s0 + s1);
    if (!a.airborne_at(mid) || !b.airborne_at(mid)) continue;
    ConflictQuery q{a.position(s0), b.position(s0), a.velocity_at(mid), b.velocity_at(mid)};
    best = std::min(best, min_separation(q, s1 - s0).d_min);
  }
  return best;
}

}  // namespace

Simulator::Simulator(SimConfig config) : config_(std::move(config)) { validate(config_); }

SimState Simulator::reset(std::uint64_t seed) const {
  SimState s;
  s.rng = Rng(seed);
  s.vertiport = build_canonical_layout(config_.layout);
  s.vehicles.edges = Adjacency::complete(kNumVehicles);
  s.vehicles.nodes.resize(kNumVehicles);

  StepOutcome scratch;
  StepContext ctx(config_, s, scratch);

  const auto ports = [&] {
    auto p = s.vertiport.nodes_of(PortType::NormalPort);
    auto b = s.vertiport.nodes_of(PortType::BatteryPort);
    p.insert(p.end(), b.begin(), b.end());
    return p;
  }();
  const auto spots = s.vertiport.nodes_of(PortType::HoverSpot);
  const auto dests = s.vertiport.nodes_of(PortType::Destination);
  std::vector<bool> origin_used(s.vertiport.nodes.size(), false);

  auto pick_free = [&](const std::vector<NodeId>& ids, bool avoid_origins) -> std::optional<NodeId> {
    std::vector<NodeId> free;
    for (NodeId id : ids)
      if (s.vertiport.node(id).available && !(avoid_origins && origin_used[static_cast<std::size_t>(id)]))
        free.push_back(id);
    if (free.empty()) return std::nullopt;
    return free[static_cast<std::size_t>(s.rng.uniform_int(0, static_cast<int>(free.size()) - 1))];
  };

  for (VehicleId id = 0; id < kNumVehicles; ++id) {
    auto& v = s.vehicles.nodes[ix(id)];
    v.id = id;
    v.battery = 100.0;
    for (;;) {
      const int kind = s.rng.uniform_int(0, 3);
      if (kind == 0) {
        auto port = pick_free(ports, false);
        if (!port) continue;
        s.vertiport.node(*port).available = false;
        v.status = GroundedAtPort{*port};
        v.location = s.vertiport.node(*port).location;
        ctx.issue_takeoff(id, 0);
      } else if (kind == 1) {
        auto spot = pick_free(spots, false);
        if (!spot) continue;
        s.vertiport.node(*spot).available = false;
        v.status = Hovering{*spot};
        v.location = s.vertiport.node(*spot).location;
        ctx.issue(id, EventKind::Landing, 0, *spot);
      } else if (kind == 2) {
        auto origin = pick_free(dests, true);
        if (!origin) continue;
        origin_used[static_cast<std::size_t>(*origin)] = true;
        v.location = s.vertiport.node(*origin).location;
        const NodeId spot = ctx.nearest_free_hover_spot(v.location);
        ctx.issue(id, EventKind::Landing, 0, spot);
        ctx.start_cruise(id, *origin, spot);
      } else {
        auto dest = pick_free(dests, true);
        if (!dest) continue;
        origin_used[static_cast<std::size_t>(*dest)] = true;
        s.vertiport.node(*dest).available = false;
        v.status = AtDestination{*dest};
        v.location = s.vertiport.node(*dest).location;
        s.runtime[ix(id)].dwell_until = s.rng.uniform_int(config_.dwell_min, config_.dwell_max);
      }
      break;
    }
    ctx.sync_schedule_status(id);
  }
  return s;
}

StepOutcome Simulator::step(SimState& s, std::optional<VehicleId> acted, Action action) const {
  if (done(s)) throw EpisodeOver("episode is over at minute " + std::to_string(s.clock));

  StepOutcome out;
  out.minute = s.clock;
  out.vehicle = acted;
  out.action = action;
  StepContext ctx(config_, s, out);

  if (acted) {
    const VehicleId id = *acted;
    if (id < 0 || id >= kNumVehicles) throw std::out_of_range("vehicle id " + std::to_string(id));
    if (!mask_for(s, id)[action])
      throw InfeasibleAction("action " + std::string(to_string(action)) + " is infeasible for vehicle " +
                             std::to_string(id) + " (" + std::string(status_name(s.vehicle(id).status)) + ")");

    bool pending = false;
    for (const auto& v : s.vehicles.nodes)
      if (in_airspace(s, v.id) && !s.runtime[ix(v.id)].decided) pending = true;
    if (!pending)
      for (auto& r : s.runtime) r.decided = false;
    s.runtime[ix(id)].decided = true;

    const auto& v = s.vehicle(id);
    out.grounded = v.grounded();
    out.en_route = v.cruising();
    if (out.en_route) out.d_min = ctx.selected_d_min(id);
    ctx.apply_action(id, action);
  }

  // Motion over the minute.
  std::array<Motion, kNumVehicles> motion;
  for (auto& v : s.vehicles.nodes) {
    auto& m = motion[ix(v.id)];
    m.p0 = v.location;
    m.airborne = v.airborne();
    if (!v.cruising() || s.runtime[ix(v.id)].halted) continue;
    const auto& cr = std::get<Cruising>(v.status);
    const Vec2 target = s.vertiport.node(cr.target).location;
    const double remaining = distance(v.location, target);
    m.velocity = ctx.cruise_velocity(v.location, target);
    if (remaining <= config_.cruise_speed) {
      m.arrive_at = remaining / config_.cruise_speed;
      m.meters = remaining;
      m.airborne_after_arrival = s.vertiport.node(cr.target).type == PortType::HoverSpot;
      v.location = target;
    } else {
      m.meters = config_.cruise_speed;
      v.location = v.location + m.velocity;
    }
  }

  const int t1 = s.clock + 1;
  for (VehicleId i = 0; i < kNumVehicles; ++i) {
    for (VehicleId j = i + 1; j < kNumVehicles; ++j) {
      const double d = closest_approach(motion[ix(i)], motion[ix(j)]);
      auto& contact = s.in_contact[ix(i * kNumVehicles + j)];
      const bool now = d < config_.collision_threshold;
      if (now && !contact) {
        ++out.collisions;
        ctx.log(t1, i, SimEventKind::CollisionOccurred, CollisionInfo{j, d});
      }
      contact = now;
    }
  }

  for (auto& v : s.vehicles.nodes) {
    PortType ground = PortType::NormalPort;
    if (const auto* g = std::get_if<GroundedAtPort>(&v.status)) ground = s.vertiport.node(g->port).type;
    v.battery = BatteryModel::apply(v.battery, config_.battery.delta(v.status, ground, motion[ix(v.id)].meters));
  }

  s.clock = t1;

  for (auto& v : s.vehicles.nodes) {
    const auto* e = s.schedules[ix(v.id)].next();
    if (e && s.clock > e->due_time) {
      v.schedule_status.accumulated_delay += 1.0;
      out.delay_minutes_added += 1.0;
    }
  }

  for (VehicleId id = 0; id < kNumVehicles; ++id) {
    if (motion[ix(id)].arrive_at <= 1.0) ctx.arrive(id, std::get<Cruising>(s.vehicle(id).status).target, t1, false);
  }

  // Battery depleted in flight: put down at the nearest node that is free or already reserved.
  for (auto& v : s.vehicles.nodes) {
    if (!v.cruising() || v.battery > 0.0) continue;
    const NodeId reserved = std::get<Cruising>(v.status).target;
    NodeId best = reserved;
    double best_d = distance(v.location, s.vertiport.node(reserved).location);
    for (const auto& n : s.vertiport.nodes) {
      if (!n.available) continue;
      const double d = distance(v.location, n.location);
      if (d < best_d) {
        best_d = d;
        best = n.id;
      }
    }
    if (best != reserved) {
      s.vertiport.node(reserved).available = true;
      s.vertiport.node(best).available = false;
    }
    ctx.arrive(v.id, best, t1, true);
  }

  for (auto& v : s.vehicles.nodes) {
    const auto* at = std::get_if<AtDestination>(&v.status);
    if (!at || s.runtime[ix(v.id)].dwell_until > s.clock) continue;
    const NodeId dest = at->destination;
    s.vertiport.node(dest).available = true;
    const NodeId spot = ctx.nearest_free_hover_spot(v.location);
    s.schedules[ix(v.id)].events.clear();  // a forced landing out here leaves its landing pending
    ctx.issue(v.id, EventKind::Landing, s.clock, spot);
    ctx.start_cruise(v.id, dest, spot);
  }

  double battery_sum = 0.0;
  for (auto& v : s.vehicles.nodes) {
    auto& r = s.runtime[ix(v.id)];
    if (r.halted) {
      r.halted = false;
      if (const auto* cr = std::get_if<Cruising>(&v.status))
        v.velocity = ctx.cruise_velocity(v.location, s.vertiport.node(cr->target).location);
    }
    battery_sum += v.battery;
  }
  out.mean_battery = battery_sum / kNumVehicles;

  if (acted) {
    const auto& v = s.vehicle(*acted);
    out.battery = v.battery;
    out.delay = v.schedule_status.accumulated_delay;
  }
  return out;
}

}  // namespace vsm
