#include <benchmark/benchmark.h>

#include <random>

#include "pedghmm/cost_map.hpp"
#include "pedghmm/delaunay.hpp"
#include "pedghmm/eval.hpp"
#include "pedghmm/inference.hpp"
#include "pedghmm/synthetic.hpp"

using namespace pedghmm;

namespace {

struct StreetFixture {
  SceneDescription scene = synthetic::street_scene();
  PotentialCostMap map = compute_potential_map(scene, 0.5, 0);
  ModelSetup setup;
  std::vector<Trajectory> walks;

  explicit StreetFixture(double tau) {
    LearningConfig cfg;
    cfg.sigma_obs = tau / 2.0;
    setup = make_proposed(map, list_destinations(scene), tau, 0.05, cfg);
    walks = synthetic::legal_trajectories(8, false, {}, 7);
  }
};

const StreetFixture& street(double tau) {
  static const StreetFixture coarse(2.5);
  static const StreetFixture fine(1.25);
  return tau > 2.0 ? coarse : fine;
}

double tau_arg(const benchmark::State& state) { return state.range(0) == 0 ? 2.5 : 1.25; }

void BM_FilterUpdate(benchmark::State& state) {
  const StreetFixture& f = street(tau_arg(state));
  const GhmmModel& m = f.setup.model;
  const auto obs = f.walks.front().positions();
  Belief b = initial_belief(m);
  std::size_t k = 0;
  for (auto _ : state) {
    b = filter_update(m, b, obs[k]);
    if (++k == obs.size()) {
      k = 0;
      b = initial_belief(m);
    }
    benchmark::DoNotOptimize(b.weights.data());
  }
  state.counters["states"] = static_cast<double>(m.state_count());
}
BENCHMARK(BM_FilterUpdate)->Arg(0)->Arg(1);

void BM_Predict(benchmark::State& state) {
  const StreetFixture& f = street(2.5);
  const GhmmModel& m = f.setup.model;
  Belief b = initial_belief(m);
  for (Vec2 o : f.walks.front().positions()) b = filter_update(m, b, o);
  for (auto _ : state) benchmark::DoNotOptimize(predict(m, b, state.range(0)));
}
BENCHMARK(BM_Predict)->Arg(10)->Arg(75);

void BM_BaumWelch(benchmark::State& state) {
  const StreetFixture& f = street(2.5);
  const ObservationSequence seq{f.walks.front().positions(), std::nullopt};
  for (auto _ : state) benchmark::DoNotOptimize(incremental_baum_welch(f.setup.model, seq, 0.1));
  state.counters["T"] = static_cast<double>(seq.positions.size());
}
BENCHMARK(BM_BaumWelch)->Unit(benchmark::kMillisecond);

void BM_ItmUpdate(benchmark::State& state) {
  const StreetFixture& f = street(2.5);
  TopologicalMap topo = f.setup.topology;
  std::mt19937_64 rng(3);
  std::uniform_real_distribution<double> ux(0.0, 40.0), uy(0.0, 24.0);
  for (auto _ : state) benchmark::DoNotOptimize(itm_update(topo, {ux(rng), uy(rng)}));
}
BENCHMARK(BM_ItmUpdate);

void BM_Delaunay(benchmark::State& state) {
  std::mt19937_64 rng(4);
  std::uniform_real_distribution<double> u(0.0, 100.0);
  std::vector<Vec2> pts(static_cast<std::size_t>(state.range(0)));
  for (Vec2& p : pts) p = {u(rng), u(rng)};
  for (auto _ : state) benchmark::DoNotOptimize(delaunay_edges(pts));
  state.SetComplexityN(state.range(0));
}
BENCHMARK(BM_Delaunay)->RangeMultiplier(4)->Range(16, 1024)->Complexity();

void BM_Train(benchmark::State& state) {
  const StreetFixture& f = street(2.5);
  const auto corpus = synthetic::legal_trajectories(10, true, {}, 9);
  for (auto _ : state) {
    ModelSetup s = f.setup;
    benchmark::DoNotOptimize(train(s, corpus, f.map));
  }
}
BENCHMARK(BM_Train)->Unit(benchmark::kMillisecond);

}  // namespace

BENCHMARK_MAIN();
