#include <gtest/gtest.h>

#include <cmath>
#include <numeric>

#include "support/generators.hpp"
#include "vsm/baselines.hpp"
#include "vsm/networks.hpp"

using namespace vsm;
using Eigen::MatrixXd;
using gen::permute_rows;
using gen::permute_symmetric;
using gen::random_matrix;

namespace {

// Â computed entry by entry.
MatrixXd dense_normalized(const MatrixXd& a) {
  const auto n = a.rows();
  std::vector<double> deg(static_cast<std::size_t>(n), 1.0);
  for (Eigen::Index i = 0; i < n; ++i)
    for (Eigen::Index j = 0; j < n; ++j) deg[static_cast<std::size_t>(i)] += a(i, j);
  MatrixXd out(n, n);
  for (Eigen::Index i = 0; i < n; ++i)
    for (Eigen::Index j = 0; j < n; ++j) {
      const double aij = a(i, j) + (i == j ? 1.0 : 0.0);
      out(i, j) = aij / std::sqrt(deg[static_cast<std::size_t>(i)] * deg[static_cast<std::size_t>(j)]);
    }
  return out;
}

MatrixXd leaky(MatrixXd m) {
  for (Eigen::Index i = 0; i < m.size(); ++i)
    if (m(i) < 0) m(i) *= kLeakySlope;
  return m;
}

std::vector<Observation> sample_observations(int count, std::uint64_t seed) {
  const Simulator sim;
  std::vector<Observation> out;
  for (std::uint64_t s = seed; static_cast<int>(out.size()) < count; ++s) {
    gen::random_walk(sim, s, [&](const SimState& st, std::optional<VehicleId> id, Action) {
      if (id && static_cast<int>(out.size()) < count && st.clock % 7 == 0) out.push_back(observe(st, *id));
    });
  }
  return out;
}

double max_abs_diff(const LogProbs& a, const LogProbs& b) {
  double d = 0.0;
  for (int i = 0; i < kNumActions; ++i) {
    const auto ia = static_cast<std::size_t>(i);
    if (std::isinf(a[ia]) || std::isinf(b[ia])) {
      if (a[ia] != b[ia]) return INFINITY;
      continue;
    }
    d = std::max(d, std::abs(a[ia] - b[ia]));
  }
  return d;
}

}  // namespace

TEST(Gcn, NormalizedAdjacencyMatchesDenseOracle) {
  Rng rng(1);
  for (int trial = 0; trial < 20; ++trial) {
    const MatrixXd a = gen::random_adjacency(rng, 2 + trial % 10);
    EXPECT_TRUE(normalized_adjacency(a).isApprox(dense_normalized(a), 1e-14));
  }
  MatrixXd asym = MatrixXd::Zero(3, 3);
  asym(0, 1) = 1;
  EXPECT_THROW(normalized_adjacency(asym), std::invalid_argument);
  EXPECT_THROW(normalized_adjacency(MatrixXd::Zero(2, 3)), std::invalid_argument);
}

TEST(Gcn, LayerMatchesDenseOracle) {
  Rng rng(2);
  for (int trial = 0; trial < 10; ++trial) {
    const int n = 3 + trial;
    const MatrixXd a = gen::random_adjacency(rng, n);
    const MatrixXd x = random_matrix(rng, n, 7);
    const MatrixXd w = random_matrix(rng, 7, 5);
    const GcnLayer layer(w);
    const MatrixXd got = gcn_forward(layer, ad::Tensor::constant(x), a).value();
    EXPECT_TRUE(got.isApprox(leaky(dense_normalized(a) * x * w), 1e-12));
  }
}

TEST(Gcn, PermutationEquivariant) {
  Rng rng(3);
  for (int trial = 0; trial < 50; ++trial) {
    const int n = 12;
    const MatrixXd a = gen::random_adjacency(rng, n);
    const MatrixXd x = random_matrix(rng, n, 7);
    const GcnLayer layer(random_matrix(rng, 7, 16));
    const auto perm = gen::random_permutation(rng, n);
    const MatrixXd base = gcn_forward(layer, ad::Tensor::constant(x), a).value();
    const MatrixXd moved =
        gcn_forward(layer, ad::Tensor::constant(permute_rows(x, perm)), permute_symmetric(a, perm)).value();
    ASSERT_TRUE(moved.isApprox(permute_rows(base, perm), 1e-12));
  }
}

TEST(Init, OrthogonalWithGain) {
  Rng rng(4);
  const MatrixXd tall = orthogonal_matrix(192, 64, 2.0, rng);
  EXPECT_TRUE((tall.transpose() * tall).isApprox(4.0 * MatrixXd::Identity(64, 64), 1e-12));
  const MatrixXd wide = orthogonal_matrix(64, 11, 0.01, rng);
  EXPECT_TRUE((wide.transpose() * wide).isApprox(1e-4 * MatrixXd::Identity(11, 11), 1e-12));
  const MatrixXd fat = orthogonal_matrix(5, 9, 1.0, rng);
  EXPECT_TRUE((fat * fat.transpose()).isApprox(MatrixXd::Identity(5, 5), 1e-12));
}

TEST(Networks, ParameterCounts) {
  const std::size_t gcn = 7 * 64 + 64 * 64 + 9 * 64 + 64 * 64;
  const std::size_t policy = (192 * 64 + 64) + 2 * (64 * 64 + 64) + (64 * 11 + 11);
  const std::size_t value = (192 * 64 + 64) + (64 * 64 + 64) + (64 + 1);
  const std::size_t extractor = (120 * 192 + 192) + (192 * 192 + 192);
  EXPECT_EQ(GrlNetwork(1).parameter_count(), gcn + policy + value);
  EXPECT_EQ(MlpNetwork(1).parameter_count(), extractor + policy + value);
  EXPECT_EQ(kFlatFeatureDim, 120);
  EXPECT_EQ(kFusedDim, 192);
}

TEST(Networks, SameSeedSameWeights) {
  for (auto kind : {NetworkKind::Grl, NetworkKind::Mlp}) {
    const auto a = make_network(kind, 9);
    const auto b = make_network(kind, 9);
    const auto c = make_network(kind, 10);
    const auto pa = a->parameters(), pb = b->parameters(), pc = c->parameters();
    ASSERT_EQ(pa.size(), pb.size());
    bool any_diff = false;
    for (std::size_t i = 0; i < pa.size(); ++i) {
      EXPECT_EQ(pa[i].name, pb[i].name);
      EXPECT_EQ(pa[i].tensor.value(), pb[i].tensor.value());
      if (pa[i].tensor.value() != pc[i].tensor.value()) any_diff = true;
    }
    EXPECT_TRUE(any_diff);
  }
}

TEST(Networks, MaskedDistributionOverTrajectories) {
  const auto obs = sample_observations(200, 40);
  for (auto kind : {NetworkKind::Grl, NetworkKind::Mlp}) {
    const auto net = make_network(kind, 3);
    for (const auto& o : obs) {
      const auto lp = policy_forward(*net, o);
      double total = 0.0;
      for (int a = 0; a < kNumActions; ++a) {
        const double v = lp[static_cast<std::size_t>(a)];
        if (!o.mask.at(a)) {
          ASSERT_TRUE(std::isinf(v) && v < 0);
          continue;
        }
        ASSERT_TRUE(std::isfinite(v));
        total += std::exp(v);
      }
      ASSERT_NEAR(total, 1.0, 1e-12);
      ASSERT_TRUE(o.mask[greedy_action(lp)]);
    }
  }
}

TEST(Networks, SingleFeasibleActionHasProbabilityOne) {
  auto obs = sample_observations(1, 2).front();
  for (Action only : kAllActions) {
    obs.mask = ActionMask{};
    obs.mask.set(only);
    for (auto kind : {NetworkKind::Grl, NetworkKind::Mlp}) {
      const auto lp = policy_forward(*make_network(kind, 1), obs);
      EXPECT_EQ(lp[static_cast<std::size_t>(to_index(only))], 0.0);
    }
  }
  obs.mask = ActionMask{};
  EXPECT_THROW(policy_forward(GrlNetwork(1), obs), std::invalid_argument);
}

TEST(Networks, BatchMatchesSingleForward) {
  const auto obs = sample_observations(16, 5);
  std::vector<const Observation*> batch;
  for (const auto& o : obs) batch.push_back(&o);
  for (auto kind : {NetworkKind::Grl, NetworkKind::Mlp}) {
    const auto net = make_network(kind, 4);
    ad::NoGradGuard g;
    const auto out = net->forward(batch);
    for (std::size_t b = 0; b < obs.size(); ++b) {
      const auto single = net->forward(obs[b]);
      const auto row = static_cast<Eigen::Index>(b);
      EXPECT_NEAR(out.values.value()(row, 0), single.values.value()(0, 0), 1e-12);
      for (int a = 0; a < kNumActions; ++a)
        if (obs[b].mask.at(a)) EXPECT_NEAR(out.log_probs.value()(row, a), single.log_probs.value()(0, a), 1e-12);
    }
  }
}

TEST(Networks, GrlInvariantToNodeRelabeling) {
  const auto obs = sample_observations(30, 11);
  const GrlNetwork net(6);
  Rng rng(12);
  for (const auto& o : obs) {
    const auto vp_perm = gen::random_permutation(rng, kNumPortNodes);
    const auto ev_perm = gen::random_permutation(rng, kNumVehicles);
    Observation moved = o;
    moved.vertiport = permute_rows(o.vertiport, vp_perm);
    moved.vehicles = permute_rows(o.vehicles, ev_perm);
    moved.selected = static_cast<VehicleId>(std::find(ev_perm.begin(), ev_perm.end(), o.selected) - ev_perm.begin());
    auto topo = std::make_shared<Topology>();
    topo->vertiport = std::make_shared<const std::vector<MatrixXd>>(1, permute_symmetric((*o.topology->vertiport)[0], vp_perm));
    topo->vehicles = std::make_shared<const std::vector<MatrixXd>>(1, permute_symmetric((*o.topology->vehicles)[0], ev_perm));
    moved.topology = topo;

    ASSERT_LT(max_abs_diff(policy_forward(net, o), policy_forward(net, moved)), 1e-10);
    ad::NoGradGuard g;
    ASSERT_NEAR(net.forward(o).values.item(), net.forward(moved).values.item(), 1e-10);
  }
}

TEST(Networks, MlpSeesNodeOrder) {
  const auto obs = sample_observations(30, 11);
  const MlpNetwork net(6);
  Rng rng(12);
  int changed = 0;
  for (const auto& o : obs) {
    Observation moved = o;
    auto perm = gen::random_permutation(rng, kNumPortNodes);
    if (std::is_sorted(perm.begin(), perm.end())) std::swap(perm[0], perm[1]);
    moved.vertiport = permute_rows(o.vertiport, perm);
    if (moved.vertiport == o.vertiport) continue;
    if (max_abs_diff(policy_forward(net, o), policy_forward(net, moved)) > 1e-9) ++changed;
  }
  EXPECT_GT(changed, 0);
}

TEST(Networks, FlattenedLayout) {
  const auto o = sample_observations(1, 3).front();
  const auto flat = flatten_features(o);
  ASSERT_EQ(flat.size(), kFlatFeatureDim);
  EXPECT_EQ(flat(0), o.vertiport(0, 0));
  EXPECT_EQ(flat(kVertiportFeatureDim + 2), o.vertiport(1, 2));
  EXPECT_EQ(flat(kNumPortNodes * kVertiportFeatureDim + kVehicleFeatureDim + 1), o.vehicles(1, 1));
}

TEST(Networks, MlpBaselineForwardMatchesObservationPath) {
  const auto o = sample_observations(1, 8).front();
  const MlpNetwork net(2);
  EXPECT_LT(max_abs_diff(mlp_baseline_forward(net, flatten_features(o), o.mask), policy_forward(net, o)), 1e-12);
}

TEST(Networks, CloneAndCopyGiveIdenticalOutputs) {
  const auto o = sample_observations(1, 9).front();
  for (auto kind : {NetworkKind::Grl, NetworkKind::Mlp}) {
    const auto a = make_network(kind, 1);
    const auto b = clone_network(*a);
    EXPECT_EQ(max_abs_diff(policy_forward(*a, o), policy_forward(*b, o)), 0.0);
    const auto c = make_network(kind, 2);
    c->copy_parameters_from(*a);
    EXPECT_EQ(max_abs_diff(policy_forward(*a, o), policy_forward(*c, o)), 0.0);
  }
  const auto grl = make_network(NetworkKind::Grl, 1);
  EXPECT_THROW(grl->copy_parameters_from(MlpNetwork(1)), std::invalid_argument);
}

TEST(Networks, KindNames) {
  EXPECT_EQ(network_kind_from_string(to_string(NetworkKind::Grl)), NetworkKind::Grl);
  EXPECT_EQ(network_kind_from_string(to_string(NetworkKind::Mlp)), NetworkKind::Mlp);
  EXPECT_THROW(network_kind_from_string("cnn"), std::invalid_argument);
}

TEST(Sampling, GreedyTieGoesToLowestIndex) {
  LogProbs lp;
  lp.fill(-INFINITY);
  lp[3] = lp[7] = std::log(0.5);
  EXPECT_EQ(greedy_action(lp), action_from_index(3));
}

TEST(Sampling, FrequenciesMatchProbabilities) {
  LogProbs lp;
  lp.fill(-INFINITY);
  const std::array<double, 3> p{0.2, 0.5, 0.3};
  lp[0] = std::log(p[0]);
  lp[4] = std::log(p[1]);
  lp[9] = std::log(p[2]);
  Rng rng(77);
  std::array<int, kNumActions> counts{};
  const int n = 20000;
  for (int i = 0; i < n; ++i) ++counts[static_cast<std::size_t>(to_index(sample_action(lp, rng)))];
  EXPECT_EQ(counts[0] + counts[4] + counts[9], n);
  const std::array<int, 3> observed{counts[0], counts[4], counts[9]};
  double chi2 = 0.0;
  for (std::size_t i = 0; i < 3; ++i) chi2 += std::pow(observed[i] - n * p[i], 2) / (n * p[i]);
  EXPECT_LT(chi2, 13.82);  // df = 2, p = 0.001
}
