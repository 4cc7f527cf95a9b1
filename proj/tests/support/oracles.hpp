#pragma once

#include <algorithm>
#include <cmath>

#include "vsm/conflict.hpp"

namespace vsm::gen {

// Minimum of D over [0, horizon] by dense sampling, then golden-section refinement inside the best cell.
inline double sampled_min(const ConflictQuery& q, double horizon, double step = 1e-4) {
  auto d2 = [&q](double t) {
    const double dx = (q.p1.x - q.p2.x) + (q.v1.x - q.v2.x) * t;
    const double dy = (q.p1.y - q.p2.y) + (q.v1.y - q.v2.y) * t;
    return dx * dx + dy * dy;
  };
  const long n = static_cast<long>(std::ceil(horizon / step));
  long best_k = 0;
  double best = d2(0.0);
  for (long k = 1; k <= n; ++k) {
    const double v = d2(std::min(horizon, static_cast<double>(k) * step));
    if (v < best) {
      best = v;
      best_k = k;
    }
  }
  double lo = std::max(0.0, static_cast<double>(best_k - 1) * step);
  double hi = std::min(horizon, static_cast<double>(best_k + 1) * step);
  const double g = (std::sqrt(5.0) - 1.0) / 2.0;
  for (int it = 0; it < 200 && hi - lo > 1e-15; ++it) {
    const double a = hi - g * (hi - lo);
    const double b = lo + g * (hi - lo);
    if (d2(a) < d2(b))
      hi = b;
    else
      lo = a;
  }
  return std::sqrt(std::min(best, d2(0.5 * (lo + hi))));
}

}  // namespace vsm::gen
