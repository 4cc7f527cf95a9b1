#pragma once

// Node feature matrices for the vertiport and vehicle graphs. Every entry lies in [0,1].

#include <Eigen/Dense>

#include "vsm/domain.hpp"

namespace vsm {

// [P_a, one-hot(P_t) x4, x, y]
inline constexpr int kVertiportFeatureDim = 1 + kNumPortTypes + 2;
// [one-hot(c_i) x4, battery, delay, event offset, x, y]
inline constexpr int kVehicleFeatureDim = 4 + 1 + 1 + 1 + 2;

// Delay saturates at this many minutes in the normalized feature.
inline constexpr double kDelayFeatureScale = 60.0;
// Event-time offsets are mapped from [-window, +window] minutes onto [0,1].
inline constexpr double kEventOffsetWindow = 60.0;

Eigen::MatrixXd vertiport_features(const VertiportGraph& graph);
Eigen::MatrixXd vehicle_features(const VehicleGraph& graph, int clock, const Bounds& bounds);

// Plain 0/1 adjacency as a dense matrix.
Eigen::MatrixXd adjacency_matrix(const Adjacency& adjacency);

}  // namespace vsm
