#include <gtest/gtest.h>

#include <cmath>
#include <filesystem>
#include <fstream>
#include <sstream>

#include <unistd.h>

#include <nlohmann/json.hpp>

#include "support/generators.hpp"
#include "vsm/config.hpp"
#include "vsm/harness.hpp"

using namespace vsm;

namespace {

std::filesystem::path scratch_dir(const std::string& name) {
  auto dir = std::filesystem::temp_directory_path() / ("vsm_harness_" + name + "_" + std::to_string(::getpid()));
  std::filesystem::remove_all(dir);
  return dir;
}

std::vector<EpisodeSummary> summaries(const std::vector<EvaluatedEpisode>& eval) {
  std::vector<EpisodeSummary> out;
  for (const auto& e : eval) out.push_back(e.summary);
  return out;
}

}  // namespace

TEST(Aggregate, MatchesTwoPassOracle) {
  Rng rng(5);
  for (int trial = 0; trial < 200; ++trial) {
    const int n = 2 + static_cast<int>(rng.uniform() * 40);
    std::vector<double> v;
    for (int i = 0; i < n; ++i) v.push_back(gen::uniform(rng, -500.0, 500.0));
    long double mean = 0;
    for (double x : v) mean += x;
    mean /= n;
    long double ss = 0;
    for (double x : v) ss += (x - mean) * (x - mean);
    const auto a = aggregate(v);
    ASSERT_NEAR(a.mean, static_cast<double>(mean), 1e-9);
    ASSERT_NEAR(a.std, std::sqrt(static_cast<double>(ss / (n - 1))), 1e-9);
  }
  EXPECT_EQ(aggregate({3.5}), (Aggregate{3.5, 0.0}));
  EXPECT_EQ(aggregate({}), (Aggregate{}));
}

TEST(PolicyKind, NamesRoundTrip) {
  for (auto k : {PolicyKind::Random, PolicyKind::Fcfs, PolicyKind::Grl, PolicyKind::Mlp})
    EXPECT_EQ(policy_kind_from_string(to_string(k)), k);
  EXPECT_THROW(policy_kind_from_string("dqn"), std::invalid_argument);
  EXPECT_THROW(baseline_factory(PolicyKind::Grl), std::invalid_argument);
}

TEST(Evaluate, FcfsDeterministicAcrossThreadCounts) {
  const Simulator sim;
  const auto a = evaluate_policy(sim, baseline_factory(PolicyKind::Fcfs), RewardWeights{}, 3, 6, 1);
  const auto b = evaluate_policy(sim, baseline_factory(PolicyKind::Fcfs), RewardWeights{}, 3, 6, 4);
  ASSERT_EQ(a.size(), 6u);
  for (std::size_t i = 0; i < a.size(); ++i) {
    EXPECT_EQ(a[i].summary, b[i].summary);
    EXPECT_EQ(a[i].summary.seed, evaluation_episode_seed(3, static_cast<int>(i)));
    EXPECT_EQ(a[i].events.size(), b[i].events.size());
  }
}

TEST(Evaluate, RandomDiffersAcrossSeeds) {
  const Simulator sim;
  const auto a = summaries(evaluate_policy(sim, baseline_factory(PolicyKind::Random), RewardWeights{}, 1, 3));
  const auto b = summaries(evaluate_policy(sim, baseline_factory(PolicyKind::Random), RewardWeights{}, 2, 3));
  for (std::size_t i = 0; i < a.size(); ++i) EXPECT_NE(a[i], b[i]);
}

TEST(Report, AggregatesRecomputableFromCsv) {
  const Simulator sim;
  const auto eval = evaluate_policy(sim, baseline_factory(PolicyKind::Random), RewardWeights{}, 11, 5);
  const auto report = make_report("random", summaries(eval));
  const auto dir = scratch_dir("csv");
  write_episodes_csv(dir / "episodes.csv", report.episodes);
  const auto rows = read_episodes_csv(dir / "episodes.csv");
  EXPECT_EQ(make_report("random", rows), report);

  write_json(dir / "report.json", to_json(report));
  std::ifstream in(dir / "report.json");
  const auto j = nlohmann::json::parse(in);
  EXPECT_EQ(j.at("policy"), "random");
  EXPECT_EQ(j.at("episodes"), 5);
  EXPECT_DOUBLE_EQ(j.at("collisions").at("mean").get<double>(), report.collisions.mean);
  std::filesystem::remove_all(dir);
}

TEST(Report, EventLogLinesCarryEpisodeIndex) {
  const Simulator sim;
  const auto eval = evaluate_policy(sim, baseline_factory(PolicyKind::Fcfs), RewardWeights{}, 4, 2);
  const auto dir = scratch_dir("events");
  write_event_logs(dir / "events.log", eval);
  std::ifstream in(dir / "events.log");
  std::size_t count[2] = {0, 0};
  for (std::string line; std::getline(in, line);) {
    const auto comma = line.find(',');
    ASSERT_NE(comma, std::string::npos);
    const int ep = std::stoi(line.substr(0, comma));
    ASSERT_TRUE(ep == 0 || ep == 1) << line;
    ++count[ep];
  }
  EXPECT_EQ(count[0], eval[0].events.size());
  EXPECT_EQ(count[1], eval[1].events.size());
  std::filesystem::remove_all(dir);
}

TEST(Report, MissingCsvOrBadHeaderThrows) {
  const auto dir = scratch_dir("bad");
  EXPECT_THROW(read_episodes_csv(dir / "nope.csv"), std::runtime_error);
  std::filesystem::create_directories(dir);
  std::ofstream(dir / "x.csv") << "a,b,c\n";
  EXPECT_THROW(read_episodes_csv(dir / "x.csv"), std::runtime_error);
  std::filesystem::remove_all(dir);
}

TEST(ExperimentConfig, ReadsOverrides) {
  auto cfg = KeyValueConfig::parse(
      "experiment.episodes = 12\nexperiment.eval_episodes = 3\nexperiment.seeds = 1,2,3\n"
      "experiment.workers = 2\nreward.w_safety = 0\n");
  const auto c = experiment_config_from(cfg);
  EXPECT_EQ(c.episodes, 12);
  EXPECT_EQ(c.eval_episodes, 3);
  EXPECT_EQ(c.seeds, (std::vector<std::uint64_t>{1, 2, 3}));
  EXPECT_EQ(c.workers, 2);
  EXPECT_EQ(c.weights.safety, 0.0);
  EXPECT_NO_THROW(validate(c));

  EXPECT_THROW(experiment_config_from(KeyValueConfig::parse("experiment.seeds = 1,x\n")), std::invalid_argument);
  ExperimentConfig dup;
  dup.seeds = {4, 4};
  EXPECT_THROW(validate(dup), std::invalid_argument);
  ExperimentConfig zero;
  zero.eval_episodes = 0;
  EXPECT_THROW(validate(zero), std::invalid_argument);
}

TEST(Ablation, RejectsZeroSafetyWeight) {
  ExperimentConfig c;
  c.weights.safety = 0.0;
  EXPECT_THROW(ablate_safety(c, 1), std::invalid_argument);
}

TEST(Ablation, TinyRunScoresEachAgentUnderItsOwnWeights) {
  ExperimentConfig c;
  c.episodes = 1;
  c.eval_episodes = 2;
  int seen_without = 0, seen_with = 0;
  const auto r = ablate_safety(c, 9, [&](const std::string& name, const CurvePoint&) {
    (name == "grl-w5-0" ? seen_without : seen_with)++;
  });
  EXPECT_EQ(seen_without, 1);
  EXPECT_EQ(seen_with, 1);
  ASSERT_TRUE(r.without_safety && r.with_safety);
  ASSERT_EQ(r.report_without.episodes.size(), 2u);

  // Replaying the w5=0 agent under w5=0 weights reproduces its rewards.
  const Simulator sim;
  RewardWeights w0 = c.weights;
  w0.safety = 0.0;
  const std::shared_ptr<const ActorCritic> net(clone_network(*r.without_safety));
  const auto replay = summaries(evaluate_policy(sim, learned_factory(net), w0, 9, 2));
  EXPECT_EQ(replay, r.report_without.episodes);
}

TEST(ExperimentConfig, DefaultTextMatchesDefaults) {
  const auto c = experiment_config_from(KeyValueConfig::parse(default_config_text()));
  const ExperimentConfig d;
  EXPECT_EQ(c.episodes, d.episodes);
  EXPECT_EQ(c.eval_episodes, d.eval_episodes);
  EXPECT_EQ(c.seeds, d.seeds);
  EXPECT_EQ(c.workers, d.workers);
  EXPECT_EQ(c.out_dir, d.out_dir);
  EXPECT_EQ(c.weights, d.weights);
  EXPECT_EQ(c.sim, d.sim);
}
