// vsm: train, evaluate and compare vertiport scheduling policies.

#include <cstdio>
#include <fstream>
#include <iostream>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <nlohmann/json.hpp>

#include "vsm/baselines.hpp"
#include "vsm/config.hpp"
#include "vsm/conflict.hpp"
#include "vsm/harness.hpp"

namespace fs = std::filesystem;
using namespace vsm;

namespace {

struct CommonOptions {
  std::string config_path;
  std::vector<std::string> overrides;
  std::optional<std::string> out;
  std::vector<std::uint64_t> seeds;
  std::optional<int> workers;
};

void add_common(CLI::App* cmd, CommonOptions& o) {
  cmd->add_option("-c,--config", o.config_path, "key = value config file")->check(CLI::ExistingFile);
  cmd->add_option("--set", o.overrides, "override a config key (key=value), repeatable");
  cmd->add_option("-o,--out", o.out, "output directory");
  cmd->add_option("-s,--seed", o.seeds, "seed, repeatable; overrides experiment.seeds");
  cmd->add_option("-j,--workers", o.workers, "worker threads")->check(CLI::PositiveNumber);
}

KeyValueConfig load_config(const CommonOptions& o) {
  auto cfg = KeyValueConfig::parse(default_config_text());
  if (!o.config_path.empty())
    for (const auto& [k, v] : KeyValueConfig::from_file(o.config_path).entries()) cfg.set(k, v);
  for (const auto& kv : o.overrides) {
    const auto eq = kv.find('=');
    if (eq == std::string::npos || eq == 0) throw std::invalid_argument("--set expects key=value, got '" + kv + "'");
    cfg.set(kv.substr(0, eq), kv.substr(eq + 1));
  }
  return cfg;
}

ExperimentConfig build_config(const CommonOptions& o, std::optional<int> train_episodes,
                              std::optional<int> eval_episodes) {
  ExperimentConfig c = experiment_config_from(load_config(o));
  if (o.out) c.out_dir = *o.out;
  if (!o.seeds.empty()) c.seeds = o.seeds;
  if (o.workers) c.workers = *o.workers;
  if (train_episodes) c.episodes = *train_episodes;
  if (eval_episodes) c.eval_episodes = *eval_episodes;
  validate(c);
  return c;
}

fs::path seed_dir(const ExperimentConfig& c, const std::string& name, std::uint64_t seed) {
  if (c.seeds.size() == 1) return c.out_dir;
  return c.out_dir / (name + "-seed" + std::to_string(seed));
}

NetworkKind network_kind_for(PolicyKind p) {
  if (p == PolicyKind::Grl) return NetworkKind::Grl;
  if (p == PolicyKind::Mlp) return NetworkKind::Mlp;
  throw std::invalid_argument(std::string(to_string(p)) + " is not a trainable policy");
}

std::ofstream open_out(const fs::path& path) {
  fs::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw std::runtime_error("cannot open " + path.string() + " for writing");
  return out;
}

std::shared_ptr<const ActorCritic> load_network(const fs::path& path, PolicyKind expected) {
  auto ckpt = load_checkpoint(path);
  if (ckpt.kind != network_kind_for(expected))
    throw std::invalid_argument(path.string() + " holds a " + std::string(to_string(ckpt.kind)) +
                                " network, not " + std::string(to_string(expected)));
  return network_from_checkpoint(ckpt);
}

// Trains one agent, streaming its curve to `dir`/curve.csv. Returns the network.
std::unique_ptr<ActorCritic> train_one(const ExperimentConfig& c, NetworkKind kind, std::uint64_t seed,
                                       const fs::path& dir, const std::string& resume = {}) {
  const auto tc = train_config_for(c, kind, seed);
  std::optional<Trainer> trainer;
  if (resume.empty())
    trainer.emplace(tc);
  else
    trainer.emplace(tc, load_checkpoint(resume));

  auto curve = open_out(dir / "curve.csv");
  curve << curve_csv_header() << '\n';
  trainer->train(c.episodes, [&](const CurvePoint& p) {
    curve << to_csv_row(p) << '\n' << std::flush;
    std::fprintf(stderr, "[%s seed %llu] episode %d reward %.1f collisions %d\n", std::string(to_string(kind)).c_str(),
                 static_cast<unsigned long long>(seed), p.episode, p.reward, p.collisions);
  });
  if (!curve) throw std::runtime_error("write failed: " + (dir / "curve.csv").string());
  const auto ckpt_path = dir / "checkpoint.vsmckpt";
  save_checkpoint(trainer->checkpoint(), ckpt_path);
  std::cout << ckpt_path.string() << '\n';
  return clone_network(trainer->network());
}

PolicyReport evaluate_and_write(const ExperimentConfig& c, const std::string& name, const PolicyFactory& factory,
                                const RewardWeights& weights, const fs::path& dir) {
  const Simulator sim(c.sim);
  std::vector<EvaluatedEpisode> all;
  for (std::uint64_t seed : c.seeds) {
    auto part = evaluate_policy(sim, factory, weights, seed, c.eval_episodes, c.workers);
    std::move(part.begin(), part.end(), std::back_inserter(all));
  }
  std::vector<EpisodeSummary> rows;
  for (const auto& e : all) rows.push_back(e.summary);
  auto report = make_report(name, std::move(rows));
  write_episodes_csv(dir / (name + "_episodes.csv"), report.episodes);
  write_event_logs(dir / (name + "_events.log"), all);
  write_json(dir / (name + "_report.json"), to_json(report));
  return report;
}

void print_table(const std::vector<PolicyReport>& reports) {
  std::printf("%-10s %18s %16s %14s %12s %12s %12s %12s %10s\n", "policy", "reward", "delay_h", "collisions",
              "good_to", "bad_to", "good_ld", "bad_ld", "battery");
  for (const auto& r : reports) {
    auto f = [](const Aggregate& a) {
      char b[48];
      std::snprintf(b, sizeof b, "%.2f±%.2f", a.mean, a.std);
      return std::string(b);
    };
    std::printf("%-10s %18s %16s %14s %12s %12s %12s %12s %10s\n", r.policy.c_str(), f(r.reward).c_str(),
                f(r.delay_hours).c_str(), f(r.collisions).c_str(), f(r.good_takeoffs).c_str(),
                f(r.bad_takeoffs).c_str(), f(r.good_landings).c_str(), f(r.bad_landings).c_str(),
                f(r.mean_battery).c_str());
  }
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Vertiport schedule management: simulator, baselines and GRL/MLP PPO agents"};
  app.require_subcommand(1);

  CommonOptions common;
  std::string policy_name;
  std::optional<int> episodes, eval_episodes;
  std::string checkpoint, resume, grl_checkpoint, mlp_checkpoint;

  auto* train = app.add_subcommand("train", "train a GRL or MLP-RL agent with PPO");
  add_common(train, common);
  train->add_option("-p,--policy", policy_name, "grl or mlp-rl")->required();
  train->add_option("-n,--episodes", episodes, "training episodes")->check(CLI::NonNegativeNumber);
  train->add_option("--resume", resume, "continue from a checkpoint")->check(CLI::ExistingFile);

  auto* evaluate = app.add_subcommand("evaluate", "evaluate one policy on fresh seeds");
  add_common(evaluate, common);
  evaluate->add_option("-p,--policy", policy_name, "random, fcfs, grl or mlp-rl")->required();
  evaluate->add_option("-n,--episodes", eval_episodes, "evaluation episodes per seed")->check(CLI::PositiveNumber);
  evaluate->add_option("--checkpoint", checkpoint, "trained network (grl, mlp-rl)")->check(CLI::ExistingFile);

  auto* compare = app.add_subcommand("compare", "evaluate all four policies side by side");
  add_common(compare, common);
  compare->add_option("-n,--episodes", episodes, "training episodes when no checkpoint is given")
      ->check(CLI::NonNegativeNumber);
  compare->add_option("--eval-episodes", eval_episodes, "evaluation episodes per seed")->check(CLI::PositiveNumber);
  compare->add_option("--grl-checkpoint", grl_checkpoint)->check(CLI::ExistingFile);
  compare->add_option("--mlp-checkpoint", mlp_checkpoint)->check(CLI::ExistingFile);

  auto* ablate = app.add_subcommand("ablate-safety", "train GRL with w5 = 0 and with the configured w5");
  add_common(ablate, common);
  ablate->add_option("-n,--episodes", episodes, "training episodes per agent")->check(CLI::NonNegativeNumber);
  ablate->add_option("--eval-episodes", eval_episodes, "evaluation episodes")->check(CLI::PositiveNumber);

  std::vector<double> p1, p2, v1, v2;
  double horizon = kDefaultConflictHorizon, threshold = kSeparationThreshold;
  auto* conflict = app.add_subcommand("conflict-check", "closest point of approach for two vehicles");
  conflict->add_option("--p1", p1, "x y (m)")->expected(2)->required();
  conflict->add_option("--p2", p2, "x y (m)")->expected(2)->required();
  conflict->add_option("--v1", v1, "vx vy (m/min)")->expected(2)->required();
  conflict->add_option("--v2", v2, "vx vy (m/min)")->expected(2)->required();
  conflict->add_option("--horizon", horizon, "minutes")->check(CLI::NonNegativeNumber);
  conflict->add_option("--threshold", threshold, "meters")->check(CLI::PositiveNumber);

  auto* simulate = app.add_subcommand("simulate", "run one logged episode");
  add_common(simulate, common);
  simulate->add_option("-p,--policy", policy_name, "random, fcfs, grl or mlp-rl")->required();
  simulate->add_option("--checkpoint", checkpoint, "trained network (grl, mlp-rl)")->check(CLI::ExistingFile);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e);
  }

  try {
    if (*train) {
      const auto c = build_config(common, episodes, std::nullopt);
      const auto kind = network_kind_for(policy_kind_from_string(policy_name));
      if (!resume.empty() && c.seeds.size() > 1) throw std::invalid_argument("--resume takes a single --seed");
      for (std::uint64_t seed : c.seeds) train_one(c, kind, seed, seed_dir(c, policy_name, seed), resume);
    } else if (*evaluate) {
      const auto c = build_config(common, std::nullopt, eval_episodes);
      const auto kind = policy_kind_from_string(policy_name);
      PolicyFactory factory;
      if (kind == PolicyKind::Grl || kind == PolicyKind::Mlp) {
        if (checkpoint.empty()) throw std::invalid_argument(policy_name + " needs --checkpoint");
        factory = learned_factory(load_network(checkpoint, kind));
      } else {
        factory = baseline_factory(kind);
      }
      print_table({evaluate_and_write(c, std::string(to_string(kind)), factory, c.weights, c.out_dir)});
    } else if (*compare) {
      const auto c = build_config(common, episodes, eval_episodes);
      const std::uint64_t train_seed = c.seeds.front();
      auto learned = [&](PolicyKind kind, const std::string& path) -> std::shared_ptr<const ActorCritic> {
        if (!path.empty()) return load_network(path, kind);
        return train_one(c, network_kind_for(kind), train_seed, c.out_dir / std::string(to_string(kind)));
      };
      ComparisonReport report;
      report.policies.push_back(
          evaluate_and_write(c, "grl", learned_factory(learned(PolicyKind::Grl, grl_checkpoint)), c.weights, c.out_dir));
      report.policies.push_back(evaluate_and_write(
          c, "mlp-rl", learned_factory(learned(PolicyKind::Mlp, mlp_checkpoint)), c.weights, c.out_dir));
      report.policies.push_back(
          evaluate_and_write(c, "fcfs", baseline_factory(PolicyKind::Fcfs), c.weights, c.out_dir));
      report.policies.push_back(
          evaluate_and_write(c, "random", baseline_factory(PolicyKind::Random), c.weights, c.out_dir));
      write_json(c.out_dir / "comparison.json", to_json(report));
      print_table(report.policies);
    } else if (*ablate) {
      const auto c = build_config(common, episodes, eval_episodes);
      for (std::uint64_t seed : c.seeds) {
        const auto dir = seed_dir(c, "ablation", seed);
        std::map<std::string, std::ofstream> curves;
        const auto result = ablate_safety(c, seed, [&](const std::string& name, const CurvePoint& p) {
          auto [it, fresh] = curves.try_emplace(name);
          if (fresh) {
            it->second = open_out(dir / (name + "_curve.csv"));
            it->second << curve_csv_header() << '\n';
          }
          it->second << to_csv_row(p) << '\n' << std::flush;
          std::fprintf(stderr, "[%s seed %llu] episode %d reward %.1f collisions %d\n", name.c_str(),
                       static_cast<unsigned long long>(seed), p.episode, p.reward, p.collisions);
        });
        save_checkpoint(capture_checkpoint(*result.without_safety, nullptr, c.episodes),
                        dir / (result.report_without.policy + ".vsmckpt"));
        save_checkpoint(capture_checkpoint(*result.with_safety, nullptr, c.episodes),
                        dir / (result.report_with.policy + ".vsmckpt"));
        for (const auto* r : {&result.report_without, &result.report_with})
          write_episodes_csv(dir / (r->policy + "_episodes.csv"), r->episodes);
        write_json(dir / "ablation.json",
                   {{"seed", seed},
                    {"without_safety", to_json(result.report_without)},
                    {"with_safety", to_json(result.report_with)}});
        print_table({result.report_without, result.report_with});
      }
    } else if (*conflict) {
      const ConflictQuery q{{p1[0], p1[1]}, {p2[0], p2[1]}, {v1[0], v1[1]}, {v2[0], v2[1]}};
      const auto r = min_separation(q, horizon, threshold);
      std::cout << nlohmann::json{{"t_min", r.t_min}, {"d_min", r.d_min}, {"conflict", r.conflict}}.dump() << '\n';
    } else if (*simulate) {
      const auto c = build_config(common, std::nullopt, std::nullopt);
      if (c.seeds.size() != 1) throw std::invalid_argument("simulate takes a single --seed");
      const auto kind = policy_kind_from_string(policy_name);
      Policy policy;
      if (kind == PolicyKind::Grl || kind == PolicyKind::Mlp) {
        if (checkpoint.empty()) throw std::invalid_argument(policy_name + " needs --checkpoint");
        policy = make_greedy_policy(load_network(checkpoint, kind));
      } else {
        policy = baseline_factory(kind)(c.seeds.front());
      }
      const Simulator sim(c.sim);
      SimState final_state;
      const auto summary = run_episode(sim, policy, c.seeds.front(), c.weights, final_state);
      auto log = open_out(c.out_dir / "events.log");
      write_event_log(log, final_state.event_log);
      if (!log) throw std::runtime_error("write failed: " + (c.out_dir / "events.log").string());
      write_json(c.out_dir / "summary.json", to_json(summary));
      std::cout << to_json(summary).dump() << '\n';
    }
  } catch (const std::exception& e) {
    std::fprintf(stderr, "vsm: error: %s\n", e.what());
    return 1;
  }
  return 0;
}
