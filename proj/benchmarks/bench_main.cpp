#include <cstdint>
#include <vector>

#include <benchmark/benchmark.h>

#include <Eigen/Dense>

#include "glassbox/attribution.hpp"
#include "glassbox/gti.hpp"
#include "glassbox/markov.hpp"
#include "glassbox/rng.hpp"
#include "glassbox/trace_sim.hpp"

using namespace glassbox;

namespace {

void BM_StationarySolve(benchmark::State& state) {
  const markov::MarkovBranchProcess proc(0.2, 0.3);
  const markov::JointChain chain = markov::build_joint_chain(proc, markov::two_bit_automaton());
  for (auto _ : state) {
    benchmark::DoNotOptimize(markov::stationary(chain).pi);
  }
}
BENCHMARK(BM_StationarySolve);

void BM_MispredRateGeneral(benchmark::State& state) {
  const markov::MarkovBranchProcess proc(0.2, 0.3);
  const markov::PredictorAutomaton pred = markov::two_bit_automaton();
  for (auto _ : state) {
    benchmark::DoNotOptimize(markov::mispred_rate_general(proc, pred));
  }
}
BENCHMARK(BM_MispredRateGeneral);

void BM_TraceGeneration(benchmark::State& state) {
  trace_sim::TraceConfig cfg;
  cfg.length = state.range(0);
  cfg.process = markov::MarkovBranchProcess(0.2, 0.3);
  cfg.seed = 7;
  for (auto _ : state) {
    benchmark::DoNotOptimize(trace_sim::generate_trace(cfg).mispredict_count);
  }
  state.SetItemsProcessed(state.iterations() * state.range(0));
}
BENCHMARK(BM_TraceGeneration)->Arg(10000)->Arg(100000);

gti::Dataset bench_dataset(int n, int k) {
  Rng rng(11);
  gti::Dataset d;
  d.features.resize(n, k);
  d.targets.resize(n);
  for (int i = 0; i < n; ++i) {
    double y = 0.3;
    for (int j = 0; j < k; ++j) {
      d.features(i, j) = rng.uniform(-1.0, 1.0);
      y += (0.5 + 0.2 * j) * d.features(i, j);
    }
    d.targets(i) = y + 0.4 * rng.normal();
  }
  return d;
}

void BM_OlsFit(benchmark::State& state) {
  const gti::Dataset d = bench_dataset(static_cast<int>(state.range(0)), 6);
  for (auto _ : state) {
    benchmark::DoNotOptimize(gti::fit_ols(d, gti::Transform::kPoly2).coefficients);
  }
}
BENCHMARK(BM_OlsFit)->Arg(200)->Arg(2000);

void BM_BootstrapCi(benchmark::State& state) {
  const gti::Dataset d = bench_dataset(200, 4);
  for (auto _ : state) {
    benchmark::DoNotOptimize(
        gti::gti_bootstrap_ci(d, gti::Transform::kIdentity, static_cast<int>(state.range(0)),
                              0.95, 3));
  }
}
BENCHMARK(BM_BootstrapCi)->Arg(100)->Arg(400);

void BM_DOptimalSelect(benchmark::State& state) {
  Rng rng(5);
  Eigen::MatrixXd cand(state.range(0), 4);
  for (Eigen::Index i = 0; i < cand.rows(); ++i) {
    cand(i, 0) = 1.0;
    for (Eigen::Index j = 1; j < 4; ++j) cand(i, j) = rng.uniform(-1.0, 1.0);
  }
  for (auto _ : state) {
    benchmark::DoNotOptimize(gti::d_optimal_select(cand, 12));
  }
}
BENCHMARK(BM_DOptimalSelect)->Arg(64)->Arg(256);

attribution::CoalitionGame bench_game(int k) {
  attribution::CoalitionGame g;
  g.num_players = k;
  g.value = [](std::uint64_t mask) {
    double s = 0.0;
    for (int i = 0; i < 20; ++i)
      if (mask & (1ull << i)) s += 0.1 + 0.05 * i;
    return s * s;
  };
  return g;
}

void BM_ShapleyExact(benchmark::State& state) {
  const attribution::CoalitionGame g = bench_game(static_cast<int>(state.range(0)));
  for (auto _ : state) {
    benchmark::DoNotOptimize(attribution::shapley_exact(g).values);
  }
}
BENCHMARK(BM_ShapleyExact)->Arg(8)->Arg(12)->Arg(16);

void BM_ShapleyMc(benchmark::State& state) {
  const attribution::CoalitionGame g = bench_game(12);
  for (auto _ : state) {
    benchmark::DoNotOptimize(attribution::shapley_mc(g, state.range(0), 9).values);
  }
}
BENCHMARK(BM_ShapleyMc)->Arg(100)->Arg(738);

}  // namespace

BENCHMARK_MAIN();
