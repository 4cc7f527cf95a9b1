#pragma once

// Closest-point-of-approach geometry for two constant-velocity vehicles.

#include <vector>

#include "vsm/domain.hpp"

namespace vsm {

inline constexpr double kSeparationThreshold = 3.0;  // meters
inline constexpr double kDefaultConflictHorizon = 10.0;  // minutes

struct ConflictQuery {
  Vec2 p1, p2;  // meters
  Vec2 v1, v2;  // meters/minute
};

struct ConflictResult {
  double t_min = 0.0;  // minutes, within [0, horizon]
  double d_min = 0.0;  // meters
  bool conflict = false;  // d_min < threshold
};

// D(t) = |(p1 - p2) + (v1 - v2) t|. Requires t >= 0.
double separation_at(const ConflictQuery& q, double t);

// Minimizes D over [0, horizon]. The unconstrained optimum
//   t* = -(Δv · Δp) / |Δv|²
// is clamped into the window; Δv = 0 yields t_min = 0.
ConflictResult min_separation(const ConflictQuery& q, double horizon = kDefaultConflictHorizon,
                              double threshold = kSeparationThreshold);

struct ConflictPair {
  VehicleId first = 0;
  VehicleId second = 0;
  ConflictResult result;
};

// Conflicting pairs among en-route (cruising) vehicles, by ascending (first, second).
std::vector<ConflictPair> pairwise_conflicts(const VehicleGraph& vehicles,
                                             double threshold = kSeparationThreshold,
                                             double horizon = kDefaultConflictHorizon);

}  // namespace vsm
