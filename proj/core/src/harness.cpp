#include "vsm/harness.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <fstream>
#include <mutex>
#include <set>
#include <sstream>
#include <stdexcept>
#include <thread>

#include <nlohmann/json.hpp>

#include "vsm/baselines.hpp"
#include "vsm/config.hpp"

namespace vsm {

void validate(const ExperimentConfig& c) {
  validate(c.sim);
  validate(c.weights);
  validate(c.ppo);
  if (c.episodes < 0) throw std::invalid_argument("experiment.episodes must be >= 0");
  if (c.eval_episodes < 1) throw std::invalid_argument("experiment.eval_episodes must be >= 1");
  if (c.seeds.empty()) throw std::invalid_argument("experiment.seeds must not be empty");
  if (std::set<std::uint64_t>(c.seeds.begin(), c.seeds.end()).size() != c.seeds.size())
    throw std::invalid_argument("experiment.seeds must be distinct");
  if (c.workers < 1) throw std::invalid_argument("experiment.workers must be >= 1");
}

ExperimentConfig experiment_config_from(const KeyValueConfig& cfg, ExperimentConfig c) {
  c.sim = sim_config_from(cfg, c.sim);
  c.weights = reward_weights_from(cfg, c.weights);
  c.ppo = ppo_config_from(cfg, c.ppo);
  if (auto v = cfg.get_int("experiment.episodes")) c.episodes = static_cast<int>(*v);
  if (auto v = cfg.get_int("experiment.eval_episodes")) c.eval_episodes = static_cast<int>(*v);
  if (auto v = cfg.get_int("experiment.workers")) c.workers = static_cast<int>(*v);
  if (auto v = cfg.get("experiment.out")) c.out_dir = *v;
  if (auto v = cfg.get("experiment.seeds")) {
    c.seeds.clear();
    std::stringstream ss(*v);
    for (std::string item; std::getline(ss, item, ',');) {
      std::size_t used = 0;
      try {
        c.seeds.push_back(std::stoull(item, &used));
      } catch (const std::exception&) {
        used = 0;
      }
      if (used == 0) throw std::invalid_argument("experiment.seeds: not an integer: '" + item + "'");
    }
  }
  return c;
}

TrainConfig train_config_for(const ExperimentConfig& c, NetworkKind kind, std::uint64_t seed) {
  TrainConfig t;
  t.kind = kind;
  t.sim = c.sim;
  t.weights = c.weights;
  t.ppo = c.ppo;
  t.seed = seed;
  t.workers = c.workers;
  return t;
}

PolicyKind policy_kind_from_string(std::string_view name) {
  if (name == "random") return PolicyKind::Random;
  if (name == "fcfs") return PolicyKind::Fcfs;
  if (name == "grl") return PolicyKind::Grl;
  if (name == "mlp-rl" || name == "mlp") return PolicyKind::Mlp;
  throw std::invalid_argument("unknown policy: " + std::string(name));
}

std::string_view to_string(PolicyKind kind) {
  switch (kind) {
    case PolicyKind::Random: return "random";
    case PolicyKind::Fcfs: return "fcfs";
    case PolicyKind::Grl: return "grl";
    case PolicyKind::Mlp: return "mlp-rl";
  }
  return "?";
}

PolicyFactory baseline_factory(PolicyKind kind) {
  if (kind == PolicyKind::Random)
    return [](std::uint64_t episode_seed) { return make_random_policy(derive_seed(episode_seed, 1)); };
  if (kind == PolicyKind::Fcfs) return [](std::uint64_t) { return make_fcfs_policy(); };
  throw std::invalid_argument("baseline_factory: " + std::string(to_string(kind)) + " needs a trained network");
}

PolicyFactory learned_factory(std::shared_ptr<const ActorCritic> net) {
  if (!net) throw std::invalid_argument("learned_factory: null network");
  return [net](std::uint64_t) { return make_greedy_policy(net); };
}

std::vector<EvaluatedEpisode> evaluate_policy(const Simulator& sim, const PolicyFactory& factory,
                                              const RewardWeights& weights, std::uint64_t seed, int episodes,
                                              int threads) {
  if (episodes < 1) throw std::invalid_argument("evaluate_policy: episodes must be >= 1");
  std::vector<EvaluatedEpisode> out(static_cast<std::size_t>(episodes));
  auto run = [&](int i) {
    const std::uint64_t es = evaluation_episode_seed(seed, i);
    SimState final_state;
    auto& slot = out[static_cast<std::size_t>(i)];
    slot.summary = run_episode(sim, factory(es), es, weights, final_state);
    slot.events = std::move(final_state.event_log);
  };

  threads = std::clamp(threads, 1, episodes);
  if (threads == 1) {
    for (int i = 0; i < episodes; ++i) run(i);
    return out;
  }
  std::atomic<int> next{0};
  std::exception_ptr error;
  std::mutex error_mutex;
  std::vector<std::thread> pool;
  for (int t = 0; t < threads; ++t)
    pool.emplace_back([&] {
      for (int i = next++; i < episodes; i = next++) {
        try {
          run(i);
        } catch (...) {
          std::lock_guard lock(error_mutex);
          if (!error) error = std::current_exception();
        }
      }
    });
  for (auto& th : pool) th.join();
  if (error) std::rethrow_exception(error);
  return out;
}

Aggregate aggregate(const std::vector<double>& values) {
  if (values.empty()) return {};
  double sum = 0.0;
  for (double v : values) sum += v;
  const double mean = sum / static_cast<double>(values.size());
  if (values.size() == 1) return {mean, 0.0};
  double ss = 0.0;
  for (double v : values) ss += (v - mean) * (v - mean);
  return {mean, std::sqrt(ss / static_cast<double>(values.size() - 1))};
}

PolicyReport make_report(std::string policy, std::vector<EpisodeSummary> episodes) {
  PolicyReport r;
  r.policy = std::move(policy);
  auto column = [&](auto field) {
    std::vector<double> v;
    v.reserve(episodes.size());
    for (const auto& e : episodes) v.push_back(static_cast<double>(field(e)));
    return aggregate(v);
  };
  r.reward = column([](const EpisodeSummary& e) { return e.cumulative_reward; });
  r.delay_hours = column([](const EpisodeSummary& e) { return e.cumulative_delay_hours; });
  r.collisions = column([](const EpisodeSummary& e) { return e.collisions; });
  r.good_takeoffs = column([](const EpisodeSummary& e) { return e.good_takeoffs; });
  r.bad_takeoffs = column([](const EpisodeSummary& e) { return e.bad_takeoffs; });
  r.good_landings = column([](const EpisodeSummary& e) { return e.good_landings; });
  r.bad_landings = column([](const EpisodeSummary& e) { return e.bad_landings; });
  r.mean_battery = column([](const EpisodeSummary& e) { return e.mean_battery; });
  r.episodes = std::move(episodes);
  return r;
}

const PolicyReport& ComparisonReport::at(std::string_view policy) const {
  for (const auto& p : policies)
    if (p.policy == policy) return p;
  throw std::out_of_range("no report for policy " + std::string(policy));
}

namespace {

nlohmann::json to_json(const Aggregate& a) { return {{"mean", a.mean}, {"std", a.std}}; }

}  // namespace

nlohmann::json to_json(const PolicyReport& r) {
  return {{"policy", r.policy},
          {"episodes", r.episodes.size()},
          {"reward", to_json(r.reward)},
          {"cumulative_delay_hours", to_json(r.delay_hours)},
          {"collisions", to_json(r.collisions)},
          {"good_takeoffs", to_json(r.good_takeoffs)},
          {"bad_takeoffs", to_json(r.bad_takeoffs)},
          {"good_landings", to_json(r.good_landings)},
          {"bad_landings", to_json(r.bad_landings)},
          {"mean_battery", to_json(r.mean_battery)}};
}

nlohmann::json to_json(const ComparisonReport& r) {
  nlohmann::json arr = nlohmann::json::array();
  for (const auto& p : r.policies) arr.push_back(to_json(p));
  return {{"policies", arr}};
}

namespace {

std::ofstream open_for_write(const std::filesystem::path& path) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw std::runtime_error("cannot open " + path.string() + " for writing");
  return out;
}

void finish(std::ofstream& out, const std::filesystem::path& path) {
  out.flush();
  if (!out) throw std::runtime_error("write failed: " + path.string());
}

}  // namespace

void write_episodes_csv(const std::filesystem::path& path, const std::vector<EpisodeSummary>& rows) {
  auto out = open_for_write(path);
  out << summary_csv_header() << '\n';
  for (const auto& r : rows) out << to_csv_row(r) << '\n';
  finish(out, path);
}

std::vector<EpisodeSummary> read_episodes_csv(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open " + path.string());
  std::string line;
  if (!std::getline(in, line) || line != summary_csv_header())
    throw std::runtime_error(path.string() + ": unexpected header");
  std::vector<EpisodeSummary> rows;
  while (std::getline(in, line))
    if (!line.empty()) rows.push_back(summary_from_csv_row(line));
  return rows;
}

void write_event_logs(const std::filesystem::path& path, const std::vector<EvaluatedEpisode>& episodes) {
  auto out = open_for_write(path);
  for (std::size_t i = 0; i < episodes.size(); ++i)
    for (const auto& e : episodes[i].events) out << i << ',' << format_event(e) << '\n';
  finish(out, path);
}

void write_json(const std::filesystem::path& path, const nlohmann::json& j) {
  auto out = open_for_write(path);
  out << j.dump(2) << '\n';
  finish(out, path);
}

AblationResult ablate_safety(const ExperimentConfig& config, std::uint64_t seed,
                             const std::function<void(const std::string&, const CurvePoint&)>& on_episode) {
  validate(config);
  if (!(config.weights.safety > 0.0)) throw std::invalid_argument("ablate-safety needs a positive reward.w_safety");

  AblationResult result;
  const Simulator sim(config.sim);
  auto run = [&](double w5, const std::string& label, std::unique_ptr<ActorCritic>& net, PolicyReport& report) {
    ExperimentConfig c = config;
    c.weights.safety = w5;
    Trainer trainer(train_config_for(c, NetworkKind::Grl, seed));
    trainer.train(c.episodes, [&](const CurvePoint& p) {
      if (on_episode) on_episode(label, p);
    });
    net = clone_network(trainer.network());
    const std::shared_ptr<const ActorCritic> shared(clone_network(*net));
    const auto eval = evaluate_policy(sim, learned_factory(shared), c.weights, seed, c.eval_episodes, c.workers);
    std::vector<EpisodeSummary> rows;
    for (const auto& e : eval) rows.push_back(e.summary);
    report = make_report(label, std::move(rows));
  };
  run(0.0, "grl-w5-0", result.without_safety, result.report_without);
  run(config.weights.safety, "grl-w5-" + std::to_string(config.weights.safety).substr(0, 3), result.with_safety,
      result.report_with);
  return result;
}

}  // namespace vsm
