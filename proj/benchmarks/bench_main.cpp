#include <benchmark/benchmark.h>

#include <random>
#include <vector>

#include "mtlsa/confweight.hpp"
#include "mtlsa/distweight.hpp"
#include "mtlsa/nncore.hpp"
#include "mtlsa/trainer.hpp"

using namespace mtlsa;

namespace {

std::vector<std::vector<double>> gaussian_points(std::size_t n, std::size_t d, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> g(0.0, 1.0);
  std::vector<std::vector<double>> out(n, std::vector<double>(d));
  for (auto& p : out) {
    for (auto& v : p) v = g(rng);
    p[0] += 4.0 * static_cast<double>(rng() % 4);
  }
  return out;
}

void BM_SolveEmd(benchmark::State& state) {
  const auto k = static_cast<std::size_t>(state.range(0));
  std::mt19937_64 rng(1);
  std::uniform_real_distribution<double> u(0.1, 1.0);
  std::vector<double> supply(k), demand(k);
  double ss = 0, sd = 0;
  for (std::size_t i = 0; i < k; ++i) {
    ss += supply[i] = u(rng);
    sd += demand[i] = u(rng);
  }
  for (std::size_t i = 0; i < k; ++i) {
    supply[i] /= ss;
    demand[i] /= sd;
  }
  Matrix cost(k, k);
  for (double& c : cost.values()) c = u(rng);
  for (auto _ : state) benchmark::DoNotOptimize(solve_emd(supply, demand, cost).total_cost);
}
BENCHMARK(BM_SolveEmd)->Arg(4)->Arg(16)->Arg(64);

void BM_FitGmm(benchmark::State& state) {
  const auto pts = gaussian_points(static_cast<std::size_t>(state.range(0)), 16, 2);
  for (auto _ : state) benchmark::DoNotOptimize(fit_gmm(pts, 4, 3).log_likelihood_trace.back());
}
BENCHMARK(BM_FitGmm)->Arg(200)->Arg(1000);

void BM_ConfidenceWeights(benchmark::State& state) {
  const auto n = static_cast<std::size_t>(state.range(0));
  const auto pts = gaussian_points(n, 16, 4);
  std::vector<LabelVector> softs;
  for (std::size_t i = 0; i < n; ++i) {
    const double a = 0.2 + 0.6 * static_cast<double>(i % 5) / 4.0;
    softs.emplace_back(std::vector<double>{a, (1 - a) / 2, (1 - a) / 2});
  }
  for (auto _ : state) benchmark::DoNotOptimize(confidence_weights(softs, pts).w_s.data());
}
BENCHMARK(BM_ConfidenceWeights)->Arg(200)->Arg(1000);

void BM_BackwardStep(benchmark::State& state) {
  auto net = init_net({2, 16}, 3, 3, 5);
  auto adam = AdamState::for_net(net, AdamOptions{1e-3});
  const auto pts = gaussian_points(32, 2, 6);
  std::vector<std::span<const double>> inputs(pts.begin(), pts.end());
  std::vector<LabelVector> ta(32, LabelVector::one_hot(0, 3)), tb(32, LabelVector::uniform(3));
  std::vector<LossMask> mask(32);
  for (auto _ : state) benchmark::DoNotOptimize(backward_step(net, adam, {inputs, ta, tb, mask}).total);
}
BENCHMARK(BM_BackwardStep);

}  // namespace
BENCHMARK_MAIN();
