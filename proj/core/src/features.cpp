#include "vsm/features.hpp"

#include <algorithm>

namespace vsm {

Eigen::MatrixXd vertiport_features(const VertiportGraph& graph) {
  Eigen::MatrixXd f = Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(graph.nodes.size()), kVertiportFeatureDim);
  for (std::size_t i = 0; i < graph.nodes.size(); ++i) {
    const auto& n = graph.nodes[i];
    const auto row = static_cast<Eigen::Index>(i);
    f(row, 0) = n.available ? 1.0 : 0.0;
    f(row, 1 + static_cast<int>(n.type)) = 1.0;
    Vec2 p = graph.bounds.normalize(n.location);
    f(row, 5) = p.x;
    f(row, 6) = p.y;
  }
  return f;
}

Eigen::MatrixXd vehicle_features(const VehicleGraph& graph, int clock, const Bounds& bounds) {
  Eigen::MatrixXd f = Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(graph.nodes.size()), kVehicleFeatureDim);
  for (std::size_t i = 0; i < graph.nodes.size(); ++i) {
    const auto& v = graph.nodes[i];
    const auto row = static_cast<Eigen::Index>(i);
    f(row, static_cast<Eigen::Index>(v.status.index())) = 1.0;
    f(row, 4) = std::clamp(v.battery / 100.0, 0.0, 1.0);
    f(row, 5) = std::clamp(v.schedule_status.accumulated_delay / kDelayFeatureScale, 0.0, 1.0);
    if (v.schedule_status.next_event == EventKind::None) {
      f(row, 6) = 1.0;
    } else {
      double offset = v.schedule_status.event_time - clock;
      f(row, 6) = std::clamp((offset + kEventOffsetWindow) / (2.0 * kEventOffsetWindow), 0.0, 1.0);
    }
    Vec2 p = bounds.normalize(v.location);
    f(row, 7) = p.x;
    f(row, 8) = p.y;
  }
  return f;
}

Eigen::MatrixXd adjacency_matrix(const Adjacency& adjacency) {
  const int n = adjacency.size();
  Eigen::MatrixXd a = Eigen::MatrixXd::Zero(n, n);
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j) a(i, j) = adjacency.connected(i, j) ? 1.0 : 0.0;
  return a;
}

}  // namespace vsm
