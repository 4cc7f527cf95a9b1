#include "vsm/conflict.hpp"

#include <algorithm>
#include <stdexcept>

namespace vsm {

double separation_at(const ConflictQuery& q, double t) {
  if (t < 0.0) throw std::invalid_argument("separation_at: t must be non-negative");
  const double dx = q.p1.x - q.p2.x + q.v1.x * t - q.v2.x * t;
  const double dy = q.p1.y - q.p2.y + q.v1.y * t - q.v2.y * t;
  return std::sqrt(dx * dx + dy * dy);
}

ConflictResult min_separation(const ConflictQuery& q, double horizon, double threshold) {
  const double dvx = q.v1.x - q.v2.x;
  const double dvy = q.v1.y - q.v2.y;
  const double dpx = q.p1.x - q.p2.x;
  const double dpy = q.p1.y - q.p2.y;

  const double denom = 2.0 * dvx * dvx + 2.0 * dvy * dvy;
  double t = 0.0;
  if (denom > 0.0) t = -(2.0 * dvx * dpx + 2.0 * dvy * dpy) / denom;
  t = std::clamp(t, 0.0, std::max(horizon, 0.0));

  ConflictResult r;
  r.t_min = t;
  r.d_min = separation_at(q, t);
  r.conflict = r.d_min < threshold;
  return r;
}

std::vector<ConflictPair> pairwise_conflicts(const VehicleGraph& vehicles, double threshold, double horizon) {
  std::vector<ConflictPair> out;
  const auto& n = vehicles.nodes;
  for (std::size_t i = 0; i < n.size(); ++i) {
    if (!n[i].cruising()) continue;
    for (std::size_t j = i + 1; j < n.size(); ++j) {
      if (!n[j].cruising()) continue;
      ConflictQuery q{n[i].location, n[j].location, n[i].velocity, n[j].velocity};
      auto r = min_separation(q, horizon, threshold);
      if (r.conflict) out.push_back({n[i].id, n[j].id, r});
    }
  }
  return out;
}

}  // namespace vsm
