#pragma once

// GCN and MLP actor-critic networks over simulator observations.

#include <array>
#include <memory>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "vsm/autodiff.hpp"
#include "vsm/features.hpp"
#include "vsm/rng.hpp"
#include "vsm/simulator.hpp"

namespace vsm {

inline constexpr double kLeakySlope = 0.1;
inline constexpr int kGcnHidden = 64;
inline constexpr int kHeadHidden = 64;
inline constexpr int kFusedDim = 3 * kGcnHidden;
inline constexpr int kFlatFeatureDim = kNumPortNodes * kVertiportFeatureDim + kNumVehicles * kVehicleFeatureDim;

struct NamedParameter {
  std::string name;
  ad::Tensor tensor;
};

// D^-1/2 (A + I) D^-1/2 for a symmetric 0/1 adjacency. Throws on non-square or asymmetric input.
Eigen::MatrixXd normalized_adjacency(const Eigen::MatrixXd& adjacency);

// rows x cols matrix with orthonormal rows or columns (whichever is fewer), scaled by gain.
Eigen::MatrixXd orthogonal_matrix(Eigen::Index rows, Eigen::Index cols, double gain, Rng& rng);

class Linear {
 public:
  Linear() = default;
  Linear(int in, int out, double gain, Rng& rng);

  ad::Tensor forward(const ad::Tensor& x) const { return ad::add_row(ad::matmul(x, weight), bias); }
  void collect(const std::string& prefix, std::vector<NamedParameter>& out) const;

  ad::Tensor weight;  // in x out
  ad::Tensor bias;    // 1 x out
};

class GcnLayer {
 public:
  GcnLayer() = default;
  GcnLayer(int in, int out, double gain, Rng& rng);
  explicit GcnLayer(Eigen::MatrixXd weight);

  // LeakyReLU(Â X W) for stacked blocks sharing node count; `normalized` holds one Â or one per block.
  ad::Tensor forward(const ad::Tensor& x, std::shared_ptr<const std::vector<Eigen::MatrixXd>> normalized) const;

  ad::Tensor weight;  // in x out
};

// Single-graph convenience: normalizes `adjacency` and applies the layer.
ad::Tensor gcn_forward(const GcnLayer& layer, const ad::Tensor& features, const Eigen::MatrixXd& adjacency);

// Normalized adjacencies of the two graphs; shared by every observation from one layout.
struct Topology {
  std::shared_ptr<const std::vector<Eigen::MatrixXd>> vertiport;
  std::shared_ptr<const std::vector<Eigen::MatrixXd>> vehicles;
};

std::shared_ptr<const Topology> make_topology(const VertiportGraph& ports, const VehicleGraph& vehicles);

struct Observation {
  Eigen::MatrixXd vertiport;  // kNumPortNodes x kVertiportFeatureDim
  Eigen::MatrixXd vehicles;   // kNumVehicles x kVehicleFeatureDim
  VehicleId selected = 0;
  ActionMask mask;
  std::shared_ptr<const Topology> topology;
};

Observation observe(const SimState& state, VehicleId selected, std::shared_ptr<const Topology> topology = nullptr);

// Row-major vertiport matrix followed by row-major vehicle matrix.
Eigen::RowVectorXd flatten_features(const Observation& obs);

enum class NetworkKind : std::uint32_t { Grl = 1, Mlp = 2 };

std::string_view to_string(NetworkKind kind);
NetworkKind network_kind_from_string(std::string_view name);  // "grl" or "mlp-rl"

struct NetworkOutput {
  ad::Tensor log_probs;  // B x kNumActions, -inf where masked
  ad::Tensor values;     // B x 1
};

using LogProbs = std::array<double, kNumActions>;

class ActorCritic {
 public:
  virtual ~ActorCritic() = default;

  virtual NetworkKind kind() const = 0;
  virtual NetworkOutput forward(std::span<const Observation* const> batch) const = 0;
  // Stable order and names; used by the optimizer and checkpoints.
  virtual std::vector<NamedParameter> parameters() const = 0;

  NetworkOutput forward(const Observation& obs) const;
  std::size_t parameter_count() const;
  // Copies parameter values from a network of the same kind and shape.
  void copy_parameters_from(const ActorCritic& other);
  void zero_grad();
};

class GrlNetwork final : public ActorCritic {
 public:
  explicit GrlNetwork(std::uint64_t seed);

  using ActorCritic::forward;
  NetworkKind kind() const override { return NetworkKind::Grl; }
  NetworkOutput forward(std::span<const Observation* const> batch) const override;
  std::vector<NamedParameter> parameters() const override;

  // Fused embedding [mean vertiport ⊕ mean vehicle ⊕ selected vehicle], B x kFusedDim.
  ad::Tensor encode(std::span<const Observation* const> batch) const;

 private:
  GcnLayer vp1_, vp2_, ev1_, ev2_;
  std::array<Linear, 4> policy_;
  std::array<Linear, 3> value_;
};

class MlpNetwork final : public ActorCritic {
 public:
  explicit MlpNetwork(std::uint64_t seed);

  using ActorCritic::forward;
  NetworkKind kind() const override { return NetworkKind::Mlp; }
  NetworkOutput forward(std::span<const Observation* const> batch) const override;
  std::vector<NamedParameter> parameters() const override;

  // flat: B x kFlatFeatureDim, masks: B x kNumActions of 0/1.
  NetworkOutput forward_flat(const Eigen::MatrixXd& flat, const Eigen::MatrixXd& masks) const;

 private:
  std::array<Linear, 2> extractor_;
  std::array<Linear, 4> policy_;
  std::array<Linear, 3> value_;
};

std::unique_ptr<ActorCritic> make_network(NetworkKind kind, std::uint64_t seed);
std::unique_ptr<ActorCritic> clone_network(const ActorCritic& net);

// Masked log-probabilities for one decision. Throws std::invalid_argument when the mask is empty.
LogProbs policy_forward(const ActorCritic& net, const Observation& obs);
LogProbs mlp_baseline_forward(const MlpNetwork& net, const Eigen::RowVectorXd& flat, const ActionMask& mask);

Eigen::MatrixXd mask_matrix(std::span<const Observation* const> batch);

// Highest-probability feasible action; ties go to the lowest index.
Action greedy_action(const LogProbs& log_probs);
Action sample_action(const LogProbs& log_probs, Rng& rng);

}  // namespace vsm
