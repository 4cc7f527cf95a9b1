#include "vsm/trainer.hpp"

#include <cstdio>
#include <sstream>
#include <thread>

#include <nlohmann/json.hpp>

namespace vsm {

namespace {

constexpr std::uint64_t kEvaluationStream = 0x4556414c00000000ull;
constexpr std::uint64_t kShuffleStream = 0x5348554600000000ull;
constexpr std::uint64_t kInitStream = 0x494e495400000000ull;

nlohmann::json run_metadata(const TrainConfig& c, int episodes_done) {
  return {{"kind", std::string(to_string(c.kind))},
          {"seed", c.seed},
          {"episodes_done", episodes_done},
          {"weights",
           {{"takeoff", c.weights.takeoff},
            {"landing", c.weights.landing},
            {"battery", c.weights.battery},
            {"delay", c.weights.delay},
            {"safety", c.weights.safety}}},
          {"ppo",
           {{"clip", c.ppo.clip},
            {"discount", c.ppo.discount},
            {"gae_lambda", c.ppo.gae_lambda},
            {"epochs", c.ppo.epochs},
            {"minibatch", c.ppo.minibatch},
            {"learning_rate", c.ppo.learning_rate},
            {"entropy_coef", c.ppo.entropy_coef},
            {"value_coef", c.ppo.value_coef},
            {"reward_scale", c.ppo.reward_scale},
            {"max_grad_norm", c.ppo.max_grad_norm}}}};
}

std::string fmt(double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

}  // namespace

void validate(const TrainConfig& c) {
  validate(c.sim);
  validate(c.weights);
  validate(c.ppo);
  if (c.workers < 1) throw std::invalid_argument("workers must be >= 1");
}

std::uint64_t training_episode_seed(std::uint64_t seed, int episode) {
  return derive_seed(seed, static_cast<std::uint64_t>(episode));
}

std::uint64_t evaluation_episode_seed(std::uint64_t seed, int episode) {
  return derive_seed(seed, kEvaluationStream + static_cast<std::uint64_t>(episode));
}

std::uint64_t network_init_seed(std::uint64_t seed) { return derive_seed(seed, kInitStream); }

Rollout collect_rollout(const Simulator& sim, const ActorCritic& net, const RewardWeights& weights,
                        std::uint64_t env_seed, Rng& action_rng) {
  ad::NoGradGuard no_grad;
  Rollout r;
  std::shared_ptr<const Topology> topology;
  bool acted = false;

  const Policy policy = [&](const SimState& s, VehicleId id, const ActionMask&) {
    if (!topology) topology = make_topology(s.vertiport, s.vehicles);
    Transition t;
    t.obs = observe(s, id, topology);
    const NetworkOutput out = net.forward(t.obs);
    LogProbs lp;
    for (int a = 0; a < kNumActions; ++a) lp[static_cast<std::size_t>(a)] = out.log_probs.value()(0, a);
    const Action action = sample_action(lp, action_rng);
    t.action = to_index(action);
    t.log_prob = lp[static_cast<std::size_t>(t.action)];
    t.value = out.values.value()(0, 0);
    r.buffer.transitions.push_back(std::move(t));
    acted = true;
    return action;
  };
  const StepObserver observer = [&](const SimState&, const StepOutcome&, const RewardBreakdown& reward) {
    if (acted) r.buffer.transitions.back().reward = reward.total;
    acted = false;
  };
  r.summary = run_episode(sim, policy, env_seed, weights, observer);
  if (!r.buffer.empty()) r.buffer.transitions.back().done = true;
  return r;
}

std::string curve_csv_header() {
  return "episode,reward,policy_loss,value_loss,entropy,clip_fraction,decisions,collisions,env_seed";
}

std::string to_csv_row(const CurvePoint& p) {
  std::ostringstream os;
  os << p.episode << ',' << fmt(p.reward) << ',' << fmt(p.policy_loss) << ',' << fmt(p.value_loss) << ','
     << fmt(p.entropy) << ',' << fmt(p.clip_fraction) << ',' << p.decisions << ',' << p.collisions << ','
     << p.env_seed;
  return os.str();
}

Trainer::Trainer(TrainConfig config)
    : config_(std::move(config)), sim_(config_.sim), net_(make_network(config_.kind, network_init_seed(config_.seed))) {
  validate(config_);
  optimizer_ = std::make_unique<Adam>(net_->parameters(), AdamConfig{.learning_rate = config_.ppo.learning_rate});
}

Trainer::Trainer(TrainConfig config, const Checkpoint& resume) : Trainer(std::move(config)) {
  restore_parameters(*net_, resume);
  if (resume.has_optimizer) restore_optimizer(*optimizer_, resume);
  episodes_done_ = static_cast<int>(resume.episodes_done);
}

std::vector<CurvePoint> Trainer::train(int episodes, const std::function<void(const CurvePoint&)>& on_episode) {
  if (episodes < 0) throw std::invalid_argument("episode count must be >= 0");
  std::vector<CurvePoint> curve;
  const int end = episodes_done_ + episodes;
  while (episodes_done_ < end) {
    const int group = std::min(config_.workers, end - episodes_done_);
    std::vector<Rollout> rollouts(static_cast<std::size_t>(group));
    auto collect = [&](int k, const ActorCritic& snapshot) {
      const std::uint64_t env_seed = training_episode_seed(config_.seed, episodes_done_ + k);
      Rng action_rng(derive_seed(env_seed, 1));
      rollouts[static_cast<std::size_t>(k)] = collect_rollout(sim_, snapshot, config_.weights, env_seed, action_rng);
    };
    if (group == 1) {
      collect(0, *net_);
    } else {
      std::vector<std::unique_ptr<ActorCritic>> snapshots;
      for (int k = 0; k < group; ++k) snapshots.push_back(clone_network(*net_));
      std::vector<std::exception_ptr> errors(static_cast<std::size_t>(group));
      std::vector<std::thread> threads;
      for (int k = 0; k < group; ++k)
        threads.emplace_back([&, k] {
          try {
            collect(k, *snapshots[static_cast<std::size_t>(k)]);
          } catch (...) {
            errors[static_cast<std::size_t>(k)] = std::current_exception();
          }
        });
      for (auto& t : threads) t.join();
      for (auto& e : errors)
        if (e) std::rethrow_exception(e);
    }

    RolloutBuffer merged;
    for (auto& r : rollouts)
      for (auto& t : r.buffer.transitions) merged.transitions.push_back(std::move(t));

    UpdateStats stats;
    if (!merged.empty()) {
      Rng shuffle(derive_seed(config_.seed ^ kShuffleStream, static_cast<std::uint64_t>(episodes_done_)));
      stats = ppo_update(*net_, *optimizer_, merged, config_.ppo, shuffle);
    }

    for (int k = 0; k < group; ++k) {
      const auto& s = rollouts[static_cast<std::size_t>(k)].summary;
      CurvePoint p{.episode = episodes_done_ + k,
                   .env_seed = s.seed,
                   .reward = s.cumulative_reward,
                   .policy_loss = stats.policy_loss,
                   .value_loss = stats.value_loss,
                   .entropy = stats.entropy,
                   .clip_fraction = stats.clip_fraction,
                   .decisions = s.decisions,
                   .collisions = s.collisions};
      curve.push_back(p);
      if (on_episode) on_episode(p);
    }
    episodes_done_ += group;
  }
  return curve;
}

Checkpoint Trainer::checkpoint() const {
  return capture_checkpoint(*net_, optimizer_.get(), static_cast<std::uint64_t>(episodes_done_),
                            run_metadata(config_, episodes_done_).dump());
}

Policy make_greedy_policy(std::shared_ptr<const ActorCritic> net) {
  auto topology = std::make_shared<std::shared_ptr<const Topology>>();
  return [net = std::move(net), topology](const SimState& s, VehicleId id, const ActionMask&) {
    if (!*topology) *topology = make_topology(s.vertiport, s.vehicles);
    return greedy_action(policy_forward(*net, observe(s, id, *topology)));
  };
}

}  // namespace vsm
