#include "vsm/layout.hpp"

#include <algorithm>
#include <limits>
#include <numbers>

namespace vsm {

void validate(const LayoutConfig& c) {
  if (!(c.port_spacing > 0.0)) throw std::invalid_argument("layout: port_spacing must be positive");
  if (!(c.hover_radius > 0.0)) throw std::invalid_argument("layout: hover_radius must be positive");
  if (!(c.destination_radius > 0.0)) throw std::invalid_argument("layout: destination_radius must be positive");
  if (c.hover_radius >= c.destination_radius)
    throw std::invalid_argument("layout: hover_radius must be smaller than destination_radius");
  if (!(c.airspace_radius > 0.0)) throw std::invalid_argument("layout: airspace_radius must be positive");
  if (c.landing_capture_radius < 0.0) throw std::invalid_argument("layout: landing_capture_radius must be >= 0");
  if (!std::isfinite(c.destination_bearing_deg)) throw std::invalid_argument("layout: bearing must be finite");
}

namespace {

Vec2 polar(double radius, double degrees) {
  const double rad = degrees * std::numbers::pi / 180.0;
  return {radius * std::cos(rad), radius * std::sin(rad)};
}

}  // namespace

VertiportGraph build_canonical_layout(const LayoutConfig& config) {
  validate(config);

  VertiportGraph g;
  g.landing_capture_radius = config.landing_capture_radius;
  g.airspace_radius = config.airspace_radius;

  auto add = [&g](PortType type, Vec2 location) {
    g.nodes.push_back(PortNode{static_cast<NodeId>(g.nodes.size()), true, type, location});
  };

  add(PortType::NormalPort, {config.port_spacing, 0.0});
  add(PortType::NormalPort, {-config.port_spacing, 0.0});
  add(PortType::BatteryPort, {0.0, config.port_spacing});
  for (double deg : {45.0, 135.0, 225.0, 315.0}) add(PortType::HoverSpot, polar(config.hover_radius, deg));
  for (int k = 0; k < kNumDestinations; ++k)
    add(PortType::Destination,
        polar(config.destination_radius, config.destination_bearing_deg + 360.0 * k / kNumDestinations));

  // Complete graph over the airspace nodes, plus each destination to its nearest port.
  g.edges = Adjacency(kNumPortNodes);
  const int airspace_nodes = kNumNormalPorts + kNumBatteryPorts + kNumHoverSpots;
  for (int a = 0; a < airspace_nodes; ++a)
    for (int b = a + 1; b < airspace_nodes; ++b) g.edges.connect(a, b);

  const int ports = kNumNormalPorts + kNumBatteryPorts;
  for (int d = airspace_nodes; d < kNumPortNodes; ++d) {
    int nearest = 0;
    double best = std::numeric_limits<double>::infinity();
    for (int p = 0; p < ports; ++p) {
      double dist = distance(g.nodes[static_cast<std::size_t>(d)].location, g.nodes[static_cast<std::size_t>(p)].location);
      if (dist < best) {
        best = dist;
        nearest = p;
      }
    }
    g.edges.connect(d, nearest);
  }

  Vec2 lo{std::numeric_limits<double>::infinity(), std::numeric_limits<double>::infinity()};
  Vec2 hi{-lo.x, -lo.y};
  for (const auto& n : g.nodes) {
    lo = {std::min(lo.x, n.location.x), std::min(lo.y, n.location.y)};
    hi = {std::max(hi.x, n.location.x), std::max(hi.y, n.location.y)};
  }
  g.bounds = {lo, hi};
  return g;
}

}  // namespace vsm
