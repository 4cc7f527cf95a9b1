#include "vsm/networks.hpp"

#include <cmath>
#include <limits>
#include <stdexcept>

namespace vsm {

using ad::Tensor;
using Eigen::Index;
using Eigen::MatrixXd;

namespace {

const double kHiddenGain = std::sqrt(2.0);
constexpr double kPolicyOutputGain = 0.01;
constexpr double kValueOutputGain = 1.0;

using Adjacencies = std::shared_ptr<const std::vector<MatrixXd>>;

void require_batch(std::span<const Observation* const> batch) {
  if (batch.empty()) throw std::invalid_argument("empty observation batch");
  for (const auto* o : batch) {
    if (o == nullptr) throw std::invalid_argument("null observation in batch");
    if (o->vertiport.rows() != kNumPortNodes || o->vertiport.cols() != kVertiportFeatureDim)
      throw ad::ShapeError("observation: vertiport features must be 12x7");
    if (o->vehicles.rows() != kNumVehicles || o->vehicles.cols() != kVehicleFeatureDim)
      throw ad::ShapeError("observation: vehicle features must be 4x9");
    if (o->selected < 0 || o->selected >= kNumVehicles) throw std::out_of_range("observation: selected vehicle");
    if (!o->topology) throw std::invalid_argument("observation: missing topology");
  }
}

// One shared adjacency when every observation uses the same topology, otherwise one per block.
Adjacencies batch_adjacency(std::span<const Observation* const> batch, Adjacencies Topology::*member) {
  const auto& first = (*batch[0]->topology).*member;
  bool shared = true;
  for (const auto* o : batch) shared = shared && ((*o->topology).*member == first || *((*o->topology).*member) == *first);
  if (shared) return first;
  auto blocks = std::make_shared<std::vector<MatrixXd>>();
  for (const auto* o : batch) blocks->push_back(((*o->topology).*member)->front());
  return blocks;
}

MatrixXd stack(std::span<const Observation* const> batch, MatrixXd Observation::*member, Index rows, Index cols) {
  MatrixXd out(rows * static_cast<Index>(batch.size()), cols);
  for (std::size_t b = 0; b < batch.size(); ++b) out.middleRows(static_cast<Index>(b) * rows, rows) = batch[b]->*member;
  return out;
}

Tensor policy_logits(const std::array<Linear, 4>& layers, const Tensor& z) {
  Tensor h = z;
  for (std::size_t i = 0; i + 1 < layers.size(); ++i) h = ad::tanh(layers[i].forward(h));
  return layers.back().forward(h);
}

Tensor value_output(const std::array<Linear, 3>& layers, const Tensor& z) {
  Tensor h = z;
  for (std::size_t i = 0; i + 1 < layers.size(); ++i) h = ad::leaky_relu(layers[i].forward(h), kLeakySlope);
  return layers.back().forward(h);
}

std::array<Linear, 4> make_policy_head(int in, Rng& rng) {
  return {Linear(in, kHeadHidden, kHiddenGain, rng), Linear(kHeadHidden, kHeadHidden, kHiddenGain, rng),
          Linear(kHeadHidden, kHeadHidden, kHiddenGain, rng), Linear(kHeadHidden, kNumActions, kPolicyOutputGain, rng)};
}

std::array<Linear, 3> make_value_head(int in, Rng& rng) {
  return {Linear(in, kHeadHidden, kHiddenGain, rng), Linear(kHeadHidden, kHeadHidden, kHiddenGain, rng),
          Linear(kHeadHidden, 1, kValueOutputGain, rng)};
}

void collect_heads(const std::array<Linear, 4>& policy, const std::array<Linear, 3>& value,
                   std::vector<NamedParameter>& out) {
  for (std::size_t i = 0; i < policy.size(); ++i) policy[i].collect("policy." + std::to_string(i), out);
  for (std::size_t i = 0; i < value.size(); ++i) value[i].collect("value." + std::to_string(i), out);
}

}  // namespace

MatrixXd normalized_adjacency(const MatrixXd& adjacency) {
  if (adjacency.rows() != adjacency.cols()) throw ad::ShapeError("adjacency must be square");
  if (adjacency != adjacency.transpose())
    throw std::invalid_argument("adjacency must be symmetric");
  MatrixXd a = adjacency + MatrixXd::Identity(adjacency.rows(), adjacency.cols());
  Eigen::VectorXd d = a.rowwise().sum().array().rsqrt().matrix();
  return d.asDiagonal() * a * d.asDiagonal();
}

MatrixXd orthogonal_matrix(Index rows, Index cols, double gain, Rng& rng) {
  const Index big = std::max(rows, cols);
  const Index small = std::min(rows, cols);
  MatrixXd g(big, small);
  for (Index j = 0; j < small; ++j)
    for (Index i = 0; i < big; ++i) g(i, j) = rng.normal();
  Eigen::HouseholderQR<MatrixXd> qr(g);
  MatrixXd q = qr.householderQ() * MatrixXd::Identity(big, small);
  const MatrixXd r = qr.matrixQR().topRows(small).triangularView<Eigen::Upper>();
  for (Index j = 0; j < small; ++j)
    if (r(j, j) < 0) q.col(j) = -q.col(j);
  q *= gain;
  return rows >= cols ? q : MatrixXd(q.transpose());
}

Linear::Linear(int in, int out, double gain, Rng& rng)
    : weight(Tensor::parameter(orthogonal_matrix(in, out, gain, rng))),
      bias(Tensor::parameter(MatrixXd::Zero(1, out))) {}

void Linear::collect(const std::string& prefix, std::vector<NamedParameter>& out) const {
  out.push_back({prefix + ".weight", weight});
  out.push_back({prefix + ".bias", bias});
}

GcnLayer::GcnLayer(int in, int out, double gain, Rng& rng)
    : weight(Tensor::parameter(orthogonal_matrix(in, out, gain, rng))) {}

GcnLayer::GcnLayer(MatrixXd w) : weight(Tensor::parameter(std::move(w))) {}

Tensor GcnLayer::forward(const Tensor& x, Adjacencies normalized) const {
  if (x.cols() != weight.rows())
    throw ad::ShapeError("gcn: feature width " + std::to_string(x.cols()) + " != weight rows " +
                         std::to_string(weight.rows()));
  return ad::leaky_relu(ad::graph_propagate(std::move(normalized), ad::matmul(x, weight)), kLeakySlope);
}

Tensor gcn_forward(const GcnLayer& layer, const Tensor& features, const MatrixXd& adjacency) {
  if (features.rows() != adjacency.rows())
    throw ad::ShapeError("gcn_forward: " + std::to_string(features.rows()) + " feature rows for " +
                         std::to_string(adjacency.rows()) + " nodes");
  auto a = std::make_shared<const std::vector<MatrixXd>>(1, normalized_adjacency(adjacency));
  return layer.forward(features, a);
}

std::shared_ptr<const Topology> make_topology(const VertiportGraph& ports, const VehicleGraph& vehicles) {
  auto t = std::make_shared<Topology>();
  t->vertiport = std::make_shared<const std::vector<MatrixXd>>(1, normalized_adjacency(adjacency_matrix(ports.edges)));
  t->vehicles = std::make_shared<const std::vector<MatrixXd>>(1, normalized_adjacency(adjacency_matrix(vehicles.edges)));
  return t;
}

Observation observe(const SimState& state, VehicleId selected, std::shared_ptr<const Topology> topology) {
  Observation o;
  o.vertiport = vertiport_features(state.vertiport);
  o.vehicles = vehicle_features(state.vehicles, state.clock, state.vertiport.bounds);
  o.selected = selected;
  o.mask = mask_for(state, selected);
  o.topology = topology ? std::move(topology) : make_topology(state.vertiport, state.vehicles);
  return o;
}

Eigen::RowVectorXd flatten_features(const Observation& obs) {
  Eigen::RowVectorXd flat(kFlatFeatureDim);
  Index k = 0;
  for (Index i = 0; i < obs.vertiport.rows(); ++i)
    for (Index j = 0; j < obs.vertiport.cols(); ++j) flat(k++) = obs.vertiport(i, j);
  for (Index i = 0; i < obs.vehicles.rows(); ++i)
    for (Index j = 0; j < obs.vehicles.cols(); ++j) flat(k++) = obs.vehicles(i, j);
  if (k != kFlatFeatureDim) throw ad::ShapeError("flatten_features: unexpected feature size");
  return flat;
}

std::string_view to_string(NetworkKind kind) { return kind == NetworkKind::Grl ? "grl" : "mlp-rl"; }

NetworkKind network_kind_from_string(std::string_view name) {
  if (name == "grl") return NetworkKind::Grl;
  if (name == "mlp-rl" || name == "mlp") return NetworkKind::Mlp;
  throw std::invalid_argument("unknown network kind: " + std::string(name));
}

MatrixXd mask_matrix(std::span<const Observation* const> batch) {
  MatrixXd m(static_cast<Index>(batch.size()), kNumActions);
  for (std::size_t b = 0; b < batch.size(); ++b)
    for (int a = 0; a < kNumActions; ++a) m(static_cast<Index>(b), a) = batch[b]->mask.at(a) ? 1.0 : 0.0;
  return m;
}

NetworkOutput ActorCritic::forward(const Observation& obs) const {
  const Observation* one[] = {&obs};
  return forward(std::span<const Observation* const>(one));
}

std::size_t ActorCritic::parameter_count() const {
  std::size_t n = 0;
  for (const auto& p : parameters()) n += static_cast<std::size_t>(p.tensor.value().size());
  return n;
}

void ActorCritic::copy_parameters_from(const ActorCritic& other) {
  if (other.kind() != kind()) throw std::invalid_argument("copy_parameters_from: network kinds differ");
  auto dst = parameters();
  const auto src = other.parameters();
  if (dst.size() != src.size()) throw std::invalid_argument("copy_parameters_from: parameter lists differ");
  for (std::size_t i = 0; i < dst.size(); ++i) {
    if (dst[i].name != src[i].name || dst[i].tensor.shape() != src[i].tensor.shape())
      throw std::invalid_argument("copy_parameters_from: mismatch at " + dst[i].name);
    dst[i].tensor.mutable_value() = src[i].tensor.value();
  }
}

void ActorCritic::zero_grad() {
  for (auto& p : parameters()) p.tensor.zero_grad();
}

GrlNetwork::GrlNetwork(std::uint64_t seed) {
  Rng rng(seed);
  vp1_ = GcnLayer(kVertiportFeatureDim, kGcnHidden, kHiddenGain, rng);
  vp2_ = GcnLayer(kGcnHidden, kGcnHidden, kHiddenGain, rng);
  ev1_ = GcnLayer(kVehicleFeatureDim, kGcnHidden, kHiddenGain, rng);
  ev2_ = GcnLayer(kGcnHidden, kGcnHidden, kHiddenGain, rng);
  policy_ = make_policy_head(kFusedDim, rng);
  value_ = make_value_head(kFusedDim, rng);
}

Tensor GrlNetwork::encode(std::span<const Observation* const> batch) const {
  require_batch(batch);
  const auto vp_adj = batch_adjacency(batch, &Topology::vertiport);
  const auto ev_adj = batch_adjacency(batch, &Topology::vehicles);

  Tensor vp = Tensor::constant(stack(batch, &Observation::vertiport, kNumPortNodes, kVertiportFeatureDim));
  vp = vp2_.forward(vp1_.forward(vp, vp_adj), vp_adj);
  Tensor ev = Tensor::constant(stack(batch, &Observation::vehicles, kNumVehicles, kVehicleFeatureDim));
  ev = ev2_.forward(ev1_.forward(ev, ev_adj), ev_adj);

  std::vector<Index> selected;
  selected.reserve(batch.size());
  for (std::size_t b = 0; b < batch.size(); ++b) selected.push_back(static_cast<Index>(b) * kNumVehicles + batch[b]->selected);

  const Tensor parts[] = {ad::segment_mean(vp, kNumPortNodes), ad::segment_mean(ev, kNumVehicles),
                          ad::gather_rows(ev, selected)};
  return ad::concat_cols(parts);
}

NetworkOutput GrlNetwork::forward(std::span<const Observation* const> batch) const {
  const Tensor z = encode(batch);
  return {ad::masked_log_softmax(policy_logits(policy_, z), mask_matrix(batch)), value_output(value_, z)};
}

std::vector<NamedParameter> GrlNetwork::parameters() const {
  std::vector<NamedParameter> out;
  out.push_back({"vertiport_gcn.0.weight", vp1_.weight});
  out.push_back({"vertiport_gcn.1.weight", vp2_.weight});
  out.push_back({"vehicle_gcn.0.weight", ev1_.weight});
  out.push_back({"vehicle_gcn.1.weight", ev2_.weight});
  collect_heads(policy_, value_, out);
  return out;
}

MlpNetwork::MlpNetwork(std::uint64_t seed) {
  Rng rng(seed);
  extractor_ = {Linear(kFlatFeatureDim, kFusedDim, kHiddenGain, rng), Linear(kFusedDim, kFusedDim, kHiddenGain, rng)};
  policy_ = make_policy_head(kFusedDim, rng);
  value_ = make_value_head(kFusedDim, rng);
}

NetworkOutput MlpNetwork::forward_flat(const MatrixXd& flat, const MatrixXd& masks) const {
  if (flat.cols() != kFlatFeatureDim)
    throw ad::ShapeError("mlp: flat input must have " + std::to_string(kFlatFeatureDim) + " columns");
  Tensor h = Tensor::constant(flat);
  for (const auto& layer : extractor_) h = ad::leaky_relu(layer.forward(h), kLeakySlope);
  return {ad::masked_log_softmax(policy_logits(policy_, h), masks), value_output(value_, h)};
}

NetworkOutput MlpNetwork::forward(std::span<const Observation* const> batch) const {
  require_batch(batch);
  MatrixXd flat(static_cast<Index>(batch.size()), kFlatFeatureDim);
  for (std::size_t b = 0; b < batch.size(); ++b) flat.row(static_cast<Index>(b)) = flatten_features(*batch[b]);
  return forward_flat(flat, mask_matrix(batch));
}

std::vector<NamedParameter> MlpNetwork::parameters() const {
  std::vector<NamedParameter> out;
  for (std::size_t i = 0; i < extractor_.size(); ++i) extractor_[i].collect("extractor." + std::to_string(i), out);
  collect_heads(policy_, value_, out);
  return out;
}

std::unique_ptr<ActorCritic> make_network(NetworkKind kind, std::uint64_t seed) {
  switch (kind) {
    case NetworkKind::Grl:
      return std::make_unique<GrlNetwork>(seed);
    case NetworkKind::Mlp:
      return std::make_unique<MlpNetwork>(seed);
  }
  throw std::invalid_argument("make_network: unknown kind");
}

std::unique_ptr<ActorCritic> clone_network(const ActorCritic& net) {
  auto copy = make_network(net.kind(), 0);
  copy->copy_parameters_from(net);
  return copy;
}

namespace {

LogProbs to_array(const MatrixXd& row) {
  LogProbs out;
  for (int a = 0; a < kNumActions; ++a) out[static_cast<std::size_t>(a)] = row(0, a);
  return out;
}

}  // namespace

LogProbs policy_forward(const ActorCritic& net, const Observation& obs) {
  ad::NoGradGuard guard;
  return to_array(net.forward(obs).log_probs.value());
}

LogProbs mlp_baseline_forward(const MlpNetwork& net, const Eigen::RowVectorXd& flat, const ActionMask& mask) {
  ad::NoGradGuard guard;
  MatrixXd m(1, kNumActions);
  for (int a = 0; a < kNumActions; ++a) m(0, a) = mask.at(a) ? 1.0 : 0.0;
  return to_array(net.forward_flat(flat, m).log_probs.value());
}

Action greedy_action(const LogProbs& lp) {
  int best = -1;
  for (int a = 0; a < kNumActions; ++a) {
    const double v = lp[static_cast<std::size_t>(a)];
    if (v == -std::numeric_limits<double>::infinity()) continue;
    if (best < 0 || v > lp[static_cast<std::size_t>(best)]) best = a;
  }
  if (best < 0) throw std::invalid_argument("greedy_action: no feasible action");
  return action_from_index(best);
}

Action sample_action(const LogProbs& lp, Rng& rng) {
  const double u = rng.uniform();
  double acc = 0.0;
  int last = -1;
  for (int a = 0; a < kNumActions; ++a) {
    const double p = std::exp(lp[static_cast<std::size_t>(a)]);
    if (p <= 0.0) continue;
    last = a;
    acc += p;
    if (u < acc) return action_from_index(a);
  }
  if (last < 0) throw std::invalid_argument("sample_action: no feasible action");
  return action_from_index(last);  // rounding left u beyond the accumulated mass
}

}  // namespace vsm
