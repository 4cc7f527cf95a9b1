#pragma once

// Rollout collection and the episode-by-episode PPO training loop.

#include <cstdint>
#include <functional>
#include <memory>
#include <string>
#include <vector>

#include "vsm/checkpoint.hpp"
#include "vsm/episode.hpp"
#include "vsm/ppo.hpp"

namespace vsm {

struct TrainConfig {
  NetworkKind kind = NetworkKind::Grl;
  SimConfig sim;
  RewardWeights weights;
  PpoConfig ppo;
  std::uint64_t seed = 0;
  int workers = 1;  // episodes collected concurrently per update; each gets its own parameter snapshot
};

void validate(const TrainConfig& config);

// Disjoint seed streams for training and evaluation episodes of a run.
std::uint64_t training_episode_seed(std::uint64_t seed, int episode);
std::uint64_t evaluation_episode_seed(std::uint64_t seed, int episode);
std::uint64_t network_init_seed(std::uint64_t seed);

struct Rollout {
  RolloutBuffer buffer;
  EpisodeSummary summary;
};

// Plays one full episode, sampling actions from the network's masked distribution.
Rollout collect_rollout(const Simulator& sim, const ActorCritic& net, const RewardWeights& weights,
                        std::uint64_t env_seed, Rng& action_rng);

struct CurvePoint {
  int episode = 0;
  std::uint64_t env_seed = 0;
  double reward = 0.0;
  double policy_loss = 0.0;
  double value_loss = 0.0;
  double entropy = 0.0;
  double clip_fraction = 0.0;
  int decisions = 0;
  int collisions = 0;
};

std::string curve_csv_header();
std::string to_csv_row(const CurvePoint& p);

class Trainer {
 public:
  explicit Trainer(TrainConfig config);
  // Continues a run; the checkpoint must come from a network of the configured kind.
  Trainer(TrainConfig config, const Checkpoint& resume);

  // Runs `episodes` further episodes, one PPO update per group of `workers` episodes.
  std::vector<CurvePoint> train(int episodes, const std::function<void(const CurvePoint&)>& on_episode = {});

  const ActorCritic& network() const { return *net_; }
  int episodes_done() const { return episodes_done_; }
  const TrainConfig& config() const { return config_; }
  Checkpoint checkpoint() const;

 private:
  TrainConfig config_;
  Simulator sim_;
  std::unique_ptr<ActorCritic> net_;
  std::unique_ptr<Adam> optimizer_;
  int episodes_done_ = 0;
};

// Greedy (argmax) decisions from a trained network.
Policy make_greedy_policy(std::shared_ptr<const ActorCritic> net);

}  // namespace vsm
