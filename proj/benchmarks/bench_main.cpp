#include <random>

#include <benchmark/benchmark.h>

#include "sharing/clearing.hpp"
#include "sharing/equilibrium.hpp"
#include "sharing/qp.hpp"
#include "sharing/sweeps.hpp"

using namespace sharing;

namespace {

Scenario seven_bus(int count, int resources = 1) {
  RandomRanges r;
  r.resources = resources;
  return random_scenario(seven_bus_network(), 1.0, count, 11, r);
}

void BM_ClearMarket(benchmark::State& state) {
  const auto s = seven_bus(static_cast<int>(state.range(0)));
  std::mt19937_64 rng(3);
  std::uniform_real_distribution<double> u(-20.0, 20.0);
  Eigen::VectorXd bids(s.num_prosumers());
  for (int i = 0; i < bids.size(); ++i) bids(i) = u(rng);
  const auto map = s.bus_map();
  for (auto _ : state) benchmark::DoNotOptimize(clear_market(s.network, {bids, s.a}, map));
}
BENCHMARK(BM_ClearMarket)->Arg(2)->Arg(10)->Arg(30);

void BM_SolveGne(benchmark::State& state) {
  const auto s = seven_bus(static_cast<int>(state.range(0)), 2);
  for (auto _ : state) benchmark::DoNotOptimize(solve_gne(s));
}
BENCHMARK(BM_SolveGne)->Arg(2)->Arg(10)->Arg(30);

void BM_SocialOptimum(benchmark::State& state) {
  const auto s = seven_bus(static_cast<int>(state.range(0)), 2);
  for (auto _ : state) benchmark::DoNotOptimize(solve_social_optimum(s));
}
BENCHMARK(BM_SocialOptimum)->Arg(10)->Arg(30);

void BM_BestResponseDynamics(benchmark::State& state) {
  auto s = seven_bus(static_cast<int>(state.range(0)));
  s.network = with_common_limit(s.network, 1000.0);
  const Eigen::VectorXd zero = Eigen::VectorXd::Zero(s.num_prosumers());
  for (auto _ : state) benchmark::DoNotOptimize(best_response_dynamics(s, zero));
}
BENCHMARK(BM_BestResponseDynamics)->Arg(2)->Arg(10);

void BM_QpDense(benchmark::State& state) {
  const int n = static_cast<int>(state.range(0));
  std::mt19937_64 rng(5);
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  auto p = qp::Problem::with_variables(n);
  for (int j = 0; j < n; ++j) {
    p.hessian_diag(j) = 1.0 + u(rng) * 0.5;
    p.linear(j) = 5.0 * u(rng);
  }
  p.ineq_matrix = Eigen::MatrixXd::NullaryExpr(n, n, [&] { return u(rng); });
  p.ineq_lower = Eigen::VectorXd::Constant(n, -1.0);
  p.ineq_upper = Eigen::VectorXd::Constant(n, 1.0);
  for (auto _ : state) benchmark::DoNotOptimize(qp::solve(p));
}
BENCHMARK(BM_QpDense)->Arg(4)->Arg(16)->Arg(64);

}  // namespace
BENCHMARK_MAIN();
