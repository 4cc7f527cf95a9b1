#include "vsm/domain.hpp"

#include <algorithm>

namespace vsm {

std::string_view to_string(PortType type) {
  switch (type) {
    case PortType::NormalPort: return "normal_port";
    case PortType::BatteryPort: return "battery_port";
    case PortType::HoverSpot: return "hover_spot";
    case PortType::Destination: return "destination";
  }
  return "unknown";
}

void Adjacency::connect(int a, int b) {
  if (a == b) throw std::invalid_argument("adjacency: self-loops are not allowed");
  if (a < 0 || b < 0 || a >= n_ || b >= n_) throw std::out_of_range("adjacency: node out of range");
  bits_[index(a, b)] = 1;
  bits_[index(b, a)] = 1;
}

int Adjacency::degree(int a) const {
  int d = 0;
  for (int b = 0; b < n_; ++b) d += connected(a, b) ? 1 : 0;
  return d;
}

bool Adjacency::symmetric() const {
  for (int a = 0; a < n_; ++a)
    for (int b = a + 1; b < n_; ++b)
      if (connected(a, b) != connected(b, a)) return false;
  return true;
}

bool Adjacency::has_self_loops() const {
  for (int a = 0; a < n_; ++a)
    if (connected(a, a)) return true;
  return false;
}

Adjacency Adjacency::complete(int nodes) {
  Adjacency adj(nodes);
  for (int a = 0; a < nodes; ++a)
    for (int b = a + 1; b < nodes; ++b) adj.connect(a, b);
  return adj;
}

Vec2 Bounds::normalize(Vec2 p) const {
  auto unit = [](double v, double lo, double hi) {
    if (hi <= lo) return 0.5;
    return std::clamp((v - lo) / (hi - lo), 0.0, 1.0);
  };
  return {unit(p.x, min.x, max.x), unit(p.y, min.y, max.y)};
}

std::vector<NodeId> VertiportGraph::nodes_of(PortType type) const {
  std::vector<NodeId> ids;
  for (const auto& n : nodes)
    if (n.type == type) ids.push_back(n.id);
  return ids;
}

NodeId VertiportGraph::nth(PortType type, int index) const {
  int seen = 0;
  for (const auto& n : nodes) {
    if (n.type != type) continue;
    if (seen++ == index) return n.id;
  }
  throw std::out_of_range("vertiport graph has too few nodes of type " + std::string(to_string(type)));
}

std::string_view status_name(const VehicleStatus& status) {
  switch (status.index()) {
    case 0: return "grounded";
    case 1: return "hovering";
    case 2: return "cruising";
    default: return "at_destination";
  }
}

std::string_view to_string(EventKind kind) {
  switch (kind) {
    case EventKind::Takeoff: return "takeoff";
    case EventKind::Landing: return "landing";
    case EventKind::None: return "none";
  }
  return "none";
}

namespace {

constexpr std::array<std::string_view, kNumActions> kActionNames = {
    "stay_still",        "takeoff",           "normal_port_1",    "normal_port_2",
    "battery_port_1",    "hover_spot_1",      "hover_spot_2",     "hover_spot_3",
    "hover_spot_4",      "continue_previous", "avoid_collision",
};

}  // namespace

Action action_from_index(int index) {
  if (index < 0 || index >= kNumActions) throw std::out_of_range("action index " + std::to_string(index));
  return static_cast<Action>(index);
}

std::string_view to_string(Action a) { return kActionNames[static_cast<std::size_t>(to_index(a))]; }

std::optional<Action> action_from_string(std::string_view name) {
  for (int i = 0; i < kNumActions; ++i)
    if (kActionNames[static_cast<std::size_t>(i)] == name) return static_cast<Action>(i);
  return std::nullopt;
}

std::optional<NodeId> action_target(Action a, const VertiportGraph& ports) {
  switch (a) {
    case Action::MoveOrLandNormalPort1: return ports.nth(PortType::NormalPort, 0);
    case Action::MoveOrLandNormalPort2: return ports.nth(PortType::NormalPort, 1);
    case Action::MoveOrLandBatteryPort1: return ports.nth(PortType::BatteryPort, 0);
    case Action::MoveToHoverSpot1: return ports.nth(PortType::HoverSpot, 0);
    case Action::MoveToHoverSpot2: return ports.nth(PortType::HoverSpot, 1);
    case Action::MoveToHoverSpot3: return ports.nth(PortType::HoverSpot, 2);
    case Action::MoveToHoverSpot4: return ports.nth(PortType::HoverSpot, 3);
    default: return std::nullopt;
  }
}

int ActionMask::count() const {
  return static_cast<int>(std::count(bits_.begin(), bits_.end(), true));
}

std::vector<Action> ActionMask::feasible() const {
  std::vector<Action> out;
  for (Action a : kAllActions)
    if ((*this)[a]) out.push_back(a);
  return out;
}

ActionMask ActionMask::all() {
  ActionMask m;
  for (Action a : kAllActions) m.set(a);
  return m;
}

ActionMask feasible_mask(const VehicleNode& vehicle, const VertiportGraph& ports, const Schedule& schedule) {
  ActionMask mask;
  mask.set(Action::ContinuePrevious);

  if (vehicle.cruising()) {
    mask.set(Action::AvoidCollision);
    return mask;
  }

  mask.set(Action::StayStill);
  if (vehicle.at_destination()) return mask;

  if (vehicle.grounded() && schedule.has_pending(EventKind::Takeoff)) mask.set(Action::Takeoff);

  for (Action a : kAllActions) {
    auto target = action_target(a, ports);
    if (target && ports.node(*target).available) mask.set(a);
  }
  return mask;
}

}  // namespace vsm
