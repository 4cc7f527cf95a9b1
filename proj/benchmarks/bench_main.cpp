#include <benchmark/benchmark.h>

#include "vsm/baselines.hpp"
#include "vsm/conflict.hpp"
#include "vsm/trainer.hpp"

using namespace vsm;

static void BM_MinSeparation(benchmark::State& state) {
  Rng rng(1);
  std::vector<ConflictQuery> qs;
  for (int i = 0; i < 1024; ++i) {
    auto u = [&] { return rng.uniform() * 200.0 - 100.0; };
    qs.push_back({{u(), u()}, {u(), u()}, {u() / 2, u() / 2}, {u() / 2, u() / 2}});
  }
  std::size_t i = 0;
  for (auto _ : state) {
    benchmark::DoNotOptimize(min_separation(qs[i++ & 1023]));
  }
}
BENCHMARK(BM_MinSeparation);

// One full day driven by a policy; reports simulated minutes per second.
static void BM_Episode(benchmark::State& state) {
  const Simulator sim;
  const bool fcfs = state.range(0) == 1;
  std::uint64_t seed = 0;
  for (auto _ : state) {
    const Policy p = fcfs ? make_fcfs_policy() : make_random_policy(seed);
    benchmark::DoNotOptimize(run_episode(sim, p, seed++, RewardWeights{}));
  }
  state.SetItemsProcessed(state.iterations() * sim.config().episode_minutes);
  state.SetLabel(fcfs ? "fcfs" : "random");
}
BENCHMARK(BM_Episode)->Arg(0)->Arg(1)->Unit(benchmark::kMillisecond);

static void BM_SimStep(benchmark::State& state) {
  const Simulator sim;
  SimState s = sim.reset(3);
  Rng rng(4);
  for (auto _ : state) {
    if (sim.done(s)) {
      state.PauseTiming();
      s = sim.reset(3);
      state.ResumeTiming();
    }
    const auto id = select_vehicle(s);
    const Action a = id ? random_policy(s, *id, mask_for(s, *id), rng) : Action::StayStill;
    benchmark::DoNotOptimize(sim.step(s, id, a));
  }
}
BENCHMARK(BM_SimStep);

static void BM_PolicyForward(benchmark::State& state) {
  const auto kind = state.range(0) == 0 ? NetworkKind::Grl : NetworkKind::Mlp;
  const auto net = make_network(kind, 5);
  const Simulator sim;
  const SimState s = sim.reset(5);
  const auto obs = observe(s, 0);
  for (auto _ : state) {
    benchmark::DoNotOptimize(policy_forward(*net, obs));
  }
  state.SetLabel(std::string(to_string(kind)));
}
BENCHMARK(BM_PolicyForward)->Arg(0)->Arg(1);

static void BM_PpoUpdate(benchmark::State& state) {
  const auto kind = state.range(0) == 0 ? NetworkKind::Grl : NetworkKind::Mlp;
  const Simulator sim;
  const auto net = make_network(kind, 6);
  Rng action_rng(7);
  const auto rollout = collect_rollout(sim, *net, RewardWeights{}, 8, action_rng);
  const PpoConfig config;
  for (auto _ : state) {
    state.PauseTiming();
    auto copy = clone_network(*net);
    Adam adam(copy->parameters(), AdamConfig{.learning_rate = config.learning_rate});
    Rng shuffle(9);
    state.ResumeTiming();
    benchmark::DoNotOptimize(ppo_update(*copy, adam, rollout.buffer, config, shuffle));
  }
  state.SetItemsProcessed(state.iterations() * static_cast<std::int64_t>(rollout.buffer.size()) * config.epochs);
  state.SetLabel(std::string(to_string(kind)));
}
BENCHMARK(BM_PpoUpdate)->Arg(0)->Arg(1)->Unit(benchmark::kMillisecond);

BENCHMARK_MAIN();
