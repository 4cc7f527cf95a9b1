#pragma once

// Shared domain types: vertiport graph, vehicle graph, schedules, actions and masks.

#include <array>
#include <cmath>
#include <cstdint>
#include <deque>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

namespace vsm {

inline constexpr int kNumVehicles = 4;
inline constexpr int kNumActions = 11;
inline constexpr int kEpisodeMinutes = 1440;

using NodeId = int;
using VehicleId = int;

struct Vec2 {
  double x = 0.0;
  double y = 0.0;

  friend constexpr Vec2 operator+(Vec2 a, Vec2 b) { return {a.x + b.x, a.y + b.y}; }
  friend constexpr Vec2 operator-(Vec2 a, Vec2 b) { return {a.x - b.x, a.y - b.y}; }
  friend constexpr Vec2 operator*(double s, Vec2 a) { return {s * a.x, s * a.y}; }
  friend constexpr bool operator==(Vec2, Vec2) = default;

  double norm() const { return std::hypot(x, y); }
  constexpr double dot(Vec2 o) const { return x * o.x + y * o.y; }
};

inline double distance(Vec2 a, Vec2 b) { return (a - b).norm(); }

enum class PortType : std::uint8_t { NormalPort, BatteryPort, HoverSpot, Destination };
inline constexpr int kNumPortTypes = 4;

std::string_view to_string(PortType type);

struct PortNode {
  NodeId id = 0;
  bool available = true;  // P_a: unoccupied and unreserved
  PortType type = PortType::NormalPort;
  Vec2 location;

  friend bool operator==(const PortNode&, const PortNode&) = default;
};

// Dense symmetric 0/1 adjacency without self-loops.
class Adjacency {
 public:
  Adjacency() = default;
  explicit Adjacency(int nodes) : n_(nodes), bits_(static_cast<std::size_t>(nodes * nodes), 0) {}

  int size() const { return n_; }
  bool connected(int a, int b) const { return bits_[index(a, b)] != 0; }
  void connect(int a, int b);
  int degree(int a) const;
  bool symmetric() const;
  bool has_self_loops() const;

  static Adjacency complete(int nodes);

  friend bool operator==(const Adjacency&, const Adjacency&) = default;

 private:
  std::size_t index(int a, int b) const { return static_cast<std::size_t>(a * n_ + b); }

  int n_ = 0;
  std::vector<std::uint8_t> bits_;
};

// Axis-aligned box used to normalize coordinates into [0,1].
struct Bounds {
  Vec2 min;
  Vec2 max;

  Vec2 normalize(Vec2 p) const;
  friend bool operator==(const Bounds&, const Bounds&) = default;
};

struct VertiportGraph {
  std::vector<PortNode> nodes;
  Adjacency edges;
  Bounds bounds;
  double landing_capture_radius = 5.0;
  double airspace_radius = 50.0;

  const PortNode& node(NodeId id) const { return nodes.at(static_cast<std::size_t>(id)); }
  PortNode& node(NodeId id) { return nodes.at(static_cast<std::size_t>(id)); }

  // Ids of all nodes of a type, in ascending order.
  std::vector<NodeId> nodes_of(PortType type) const;
  // Id of the index-th node (0-based) of a type.
  NodeId nth(PortType type, int index) const;

  friend bool operator==(const VertiportGraph&, const VertiportGraph&) = default;
};

// Vehicle status c_i.
struct GroundedAtPort {
  NodeId port = 0;
  friend bool operator==(const GroundedAtPort&, const GroundedAtPort&) = default;
};
struct Hovering {
  NodeId spot = 0;
  friend bool operator==(const Hovering&, const Hovering&) = default;
};
struct Cruising {
  NodeId origin = 0;
  NodeId target = 0;
  friend bool operator==(const Cruising&, const Cruising&) = default;
};
struct AtDestination {
  NodeId destination = 0;
  friend bool operator==(const AtDestination&, const AtDestination&) = default;
};

using VehicleStatus = std::variant<GroundedAtPort, Hovering, Cruising, AtDestination>;

std::string_view status_name(const VehicleStatus& status);

enum class EventKind : std::uint8_t { Takeoff, Landing, None };

std::string_view to_string(EventKind kind);

struct ScheduleStatus {
  EventKind next_event = EventKind::None;
  int event_time = 0;             // simulation minute the next event is due
  double accumulated_delay = 0.0; // Δ_i in minutes

  friend bool operator==(const ScheduleStatus&, const ScheduleStatus&) = default;
};

struct VehicleNode {
  VehicleId id = 0;
  VehicleStatus status = GroundedAtPort{};
  double battery = 100.0;  // percent
  ScheduleStatus schedule_status;
  Vec2 location;
  Vec2 velocity;  // meters/minute, zero unless cruising

  bool grounded() const { return std::holds_alternative<GroundedAtPort>(status); }
  bool hovering() const { return std::holds_alternative<Hovering>(status); }
  bool cruising() const { return std::holds_alternative<Cruising>(status); }
  bool at_destination() const { return std::holds_alternative<AtDestination>(status); }
  bool airborne() const { return hovering() || cruising(); }

  friend bool operator==(const VehicleNode&, const VehicleNode&) = default;
};

struct VehicleGraph {
  std::vector<VehicleNode> nodes;
  Adjacency edges;

  friend bool operator==(const VehicleGraph&, const VehicleGraph&) = default;
};

struct ScheduledEvent {
  EventKind kind = EventKind::Takeoff;
  int due_time = 0;
  NodeId destination = 0;
  int reference_time = 0;  // return time (takeoff) or depart-for-home time (landing)

  friend bool operator==(const ScheduledEvent&, const ScheduledEvent&) = default;
};

struct Schedule {
  std::deque<ScheduledEvent> events;

  const ScheduledEvent* next() const { return events.empty() ? nullptr : &events.front(); }
  bool has_pending(EventKind kind) const { return !events.empty() && events.front().kind == kind; }

  friend bool operator==(const Schedule&, const Schedule&) = default;
};

enum class Action : std::uint8_t {
  StayStill = 0,
  Takeoff,
  MoveOrLandNormalPort1,
  MoveOrLandNormalPort2,
  MoveOrLandBatteryPort1,
  MoveToHoverSpot1,
  MoveToHoverSpot2,
  MoveToHoverSpot3,
  MoveToHoverSpot4,
  ContinuePrevious,
  AvoidCollision,
};

constexpr int to_index(Action a) { return static_cast<int>(a); }

// Throws std::out_of_range for indices outside [0, kNumActions).
Action action_from_index(int index);

std::string_view to_string(Action a);
std::optional<Action> action_from_string(std::string_view name);

inline constexpr std::array<Action, kNumActions> kAllActions = {
    Action::StayStill,           Action::Takeoff,
    Action::MoveOrLandNormalPort1, Action::MoveOrLandNormalPort2,
    Action::MoveOrLandBatteryPort1, Action::MoveToHoverSpot1,
    Action::MoveToHoverSpot2,    Action::MoveToHoverSpot3,
    Action::MoveToHoverSpot4,    Action::ContinuePrevious,
    Action::AvoidCollision,
};

// Port node targeted by a move/land or hover action, if any.
std::optional<NodeId> action_target(Action a, const VertiportGraph& ports);

class ActionMask {
 public:
  ActionMask() { bits_.fill(false); }

  bool operator[](Action a) const { return bits_[static_cast<std::size_t>(to_index(a))]; }
  bool at(int index) const { return bits_.at(static_cast<std::size_t>(index)); }
  void set(Action a, bool value = true) { bits_[static_cast<std::size_t>(to_index(a))] = value; }

  int count() const;
  bool any() const { return count() > 0; }
  std::vector<Action> feasible() const;

  static ActionMask all();

  friend bool operator==(const ActionMask&, const ActionMask&) = default;

 private:
  std::array<bool, kNumActions> bits_{};
};

ActionMask feasible_mask(const VehicleNode& vehicle, const VertiportGraph& ports, const Schedule& schedule);

}  // namespace vsm
