#pragma once

#include "vsm/domain.hpp"

namespace vsm {

// Geometry of the canonical vertiport. All distances in meters.
struct LayoutConfig {
  double port_spacing = 10.0;          // normal ports at (±spacing, 0), battery port at (0, spacing)
  double hover_radius = 25.0;          // hover spots at 45°, 135°, 225°, 315°
  double destination_radius = 250.0;   // 5 destinations, evenly spaced bearings
  double destination_bearing_deg = 90.0;  // bearing of the first destination
  double airspace_radius = 50.0;       // vehicles inside this radius can receive decisions
  double landing_capture_radius = 5.0;

  friend bool operator==(const LayoutConfig&, const LayoutConfig&) = default;
};

inline constexpr int kNumNormalPorts = 2;
inline constexpr int kNumBatteryPorts = 1;
inline constexpr int kNumHoverSpots = 4;
inline constexpr int kNumDestinations = 5;
inline constexpr int kNumPortNodes =
    kNumNormalPorts + kNumBatteryPorts + kNumHoverSpots + kNumDestinations;

// Node ids: 0,1 normal ports; 2 battery port; 3..6 hover spots; 7..11 destinations.
// Throws std::invalid_argument on degenerate geometry.
VertiportGraph build_canonical_layout(const LayoutConfig& config = {});

void validate(const LayoutConfig& config);

}  // namespace vsm
