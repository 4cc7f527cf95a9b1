#pragma once

// Experiment plumbing shared by the CLI and the acceptance runner: evaluation over fresh seeds,
// aggregate reports, and the safety-weight ablation.

#include <cstdint>
#include <filesystem>
#include <functional>
#include <memory>
#include <string>
#include <vector>

#include <nlohmann/json_fwd.hpp>

#include "vsm/trainer.hpp"

namespace vsm {

struct ExperimentConfig {
  SimConfig sim;
  RewardWeights weights;
  PpoConfig ppo;
  int episodes = 200;      // training
  int eval_episodes = 50;
  std::vector<std::uint64_t> seeds{7};
  std::filesystem::path out_dir = "out";
  int workers = 1;         // evaluation threads and training rollout workers
};

void validate(const ExperimentConfig& config);
// Reads sim.*, reward.*, ppo.* and experiment.{episodes,eval_episodes,seeds,workers,out}.
ExperimentConfig experiment_config_from(const KeyValueConfig& cfg, ExperimentConfig base = {});

TrainConfig train_config_for(const ExperimentConfig& config, NetworkKind kind, std::uint64_t seed);

// Builds a fresh policy for one evaluation episode.
using PolicyFactory = std::function<Policy(std::uint64_t episode_seed)>;

enum class PolicyKind { Random, Fcfs, Grl, Mlp };
PolicyKind policy_kind_from_string(std::string_view name);  // random, fcfs, grl, mlp-rl
std::string_view to_string(PolicyKind kind);

PolicyFactory baseline_factory(PolicyKind kind);
// Greedy decisions of a trained network.
PolicyFactory learned_factory(std::shared_ptr<const ActorCritic> net);

struct EvaluatedEpisode {
  EpisodeSummary summary;
  std::vector<SimEvent> events;
};

// Runs evaluation_episode_seed(seed, 0..episodes-1). Episodes may run on `threads` threads;
// results are always in episode order.
std::vector<EvaluatedEpisode> evaluate_policy(const Simulator& sim, const PolicyFactory& factory,
                                              const RewardWeights& weights, std::uint64_t seed, int episodes,
                                              int threads = 1);

struct Aggregate {
  double mean = 0.0;
  double std = 0.0;  // sample standard deviation; 0 for a single value
  friend bool operator==(const Aggregate&, const Aggregate&) = default;
};

Aggregate aggregate(const std::vector<double>& values);

struct PolicyReport {
  std::string policy;
  std::vector<EpisodeSummary> episodes;
  Aggregate reward, delay_hours, collisions, good_takeoffs, bad_takeoffs, good_landings, bad_landings, mean_battery;

  friend bool operator==(const PolicyReport&, const PolicyReport&) = default;
};

PolicyReport make_report(std::string policy, std::vector<EpisodeSummary> episodes);

struct ComparisonReport {
  std::vector<PolicyReport> policies;
  const PolicyReport& at(std::string_view policy) const;
};

nlohmann::json to_json(const PolicyReport& r);
nlohmann::json to_json(const ComparisonReport& r);

void write_episodes_csv(const std::filesystem::path& path, const std::vector<EpisodeSummary>& rows);
std::vector<EpisodeSummary> read_episodes_csv(const std::filesystem::path& path);
// One line per event, prefixed with the episode index.
void write_event_logs(const std::filesystem::path& path, const std::vector<EvaluatedEpisode>& episodes);
void write_json(const std::filesystem::path& path, const nlohmann::json& j);

struct AblationResult {
  std::unique_ptr<ActorCritic> without_safety;  // w5 = 0
  std::unique_ptr<ActorCritic> with_safety;     // w5 as configured (2.2 by default)
  PolicyReport report_without;
  PolicyReport report_with;
};

// Trains two GRL agents that differ only in w5 and evaluates both on the same seeds, each scored
// under its own weights.
AblationResult ablate_safety(const ExperimentConfig& config, std::uint64_t seed,
                             const std::function<void(const std::string&, const CurvePoint&)>& on_episode = {});

}  // namespace vsm
