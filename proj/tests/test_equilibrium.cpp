#include <gtest/gtest.h>

#include "fixtures.hpp"
#include "sharing/equilibrium.hpp"

using namespace sharing;

TEST(Gne, UncongestedBenchmarkExact) {
  const auto s = fixtures::benchmark(10.0);
  const auto g = solve_gne(s);
  EXPECT_NEAR(g.output(0), 38.0 / 7.0, 1e-9);
  EXPECT_NEAR(g.output(1), 32.0 / 7.0, 1e-9);
  EXPECT_NEAR(g.bids(0), 190.0 / 7.0, 1e-9);
  EXPECT_NEAR(g.bids(1), 32.0, 1e-9);
  EXPECT_NEAR(g.kappa, -207.0 / 7.0, 1e-9);
  EXPECT_FALSE(g.congested());
  EXPECT_NEAR(g.cost(0), 91.0 / 49.0, 1e-9);
  EXPECT_NEAR(g.platform_revenue, 0.0, 1e-9);
}

TEST(Gne, CongestedBenchmarkExact) {
  const auto s = fixtures::benchmark(2.0);
  const auto g = solve_gne(s);
  EXPECT_NEAR(g.output(0), 5.0, 1e-9);
  EXPECT_NEAR(g.output(1), 5.0, 1e-9);
  EXPECT_NEAR(g.bids(0), 25.0, 1e-9);
  EXPECT_NEAR(g.bids(1), 35.0, 1e-9);
  EXPECT_NEAR(g.kappa, -27.0, 1e-9);
  EXPECT_NEAR(g.tau_lower(0), 6.0, 1e-9);
  EXPECT_NEAR(g.tau_upper(0), 0.0, 1e-12);
  EXPECT_NEAR(g.platform_revenue, 12.0, 1e-9);
  EXPECT_TRUE(g.congested());
}

TEST(Gne, SymmetricPairDoesNotTrade) {
  Scenario s = fixtures::benchmark(10.0);
  s.prosumers = {{0, {2.0}, 4.0}, {1, {2.0}, 4.0}};
  const auto g = solve_gne(s);
  EXPECT_LT(g.q.cwiseAbs().maxCoeff(), 1e-12);
  EXPECT_NEAR(g.lambda(0), 16.0, 1e-12);
  EXPECT_NEAR(g.lambda(1), 16.0, 1e-12);
  EXPECT_NEAR(g.kappa, -16.0, 1e-12);
}

TEST(Gne, NeedsTwoProsumers) {
  Scenario s = fixtures::benchmark(10.0);
  s.prosumers.pop_back();
  EXPECT_THROW(solve_gne(s), std::invalid_argument);
  EXPECT_NO_THROW(solve_social_optimum(s));
}

TEST(Gne, NoProfitableDeviationOnRandomScenarios) {
  // Independent of the centralized problem: search each prosumer's bid line.
  RandomRanges ranges;
  for (int n = 0; n < 12; ++n) {
    const Network net = n % 2 ? seven_bus_network() : triangle_network(2.0);
    ranges.resources = 1 + n % 3;
    const auto s = random_scenario(net, 1.0, 2 + n % 5, 77, ranges, n);
    const auto g = solve_gne(s);
    EXPECT_LT(max_unilateral_gain(s, g.bids, CostModel::regulated), 1e-7) << "scenario " << n;
  }
}

TEST(Gne, EqualMarginalsAndLoopClosure) {
  RandomRanges ranges;
  ranges.resources = 3;
  const auto s = random_scenario(seven_bus_network(), 0.7, 9, 5, ranges);
  const auto g = solve_gne(s);
  const auto d = verify_equilibrium(g, s);
  EXPECT_LT(d.marginal_residual, 1e-8);
  EXPECT_LT(d.loop_closure_residual, 1e-6);
  EXPECT_LT(d.decomposition_residual, 1e-6);
  EXPECT_LT(d.revenue_residual, 1e-6);
}

TEST(Sco, BenchmarkValues) {
  const auto s10 = solve_social_optimum(fixtures::benchmark(10.0));
  EXPECT_NEAR(s10.output(0), 35.0 / 6.0, 1e-9);
  EXPECT_NEAR(s10.output(1), 25.0 / 6.0, 1e-9);
  EXPECT_NEAR(s10.total_disutility, 5250.0 / 36.0, 1e-9);
  const auto s2 = solve_social_optimum(fixtures::benchmark(2.0));
  EXPECT_NEAR(s2.output(0), 5.0, 1e-9);
  EXPECT_NEAR(s2.total_disutility, 150.0, 1e-9);
  EXPECT_NEAR(s2.nodal_prices(0), 25.0, 1e-9);
  EXPECT_NEAR(s2.nodal_prices(1), 35.0, 1e-9);
}

TEST(Sco, SingleProsumerSplitsOwnDemand) {
  Scenario s;
  s.network = Network::build(2, {{0, 1, 1.0, 1.0}});
  s.prosumers = {{0, {1.0, 3.0}, 8.0}};
  const auto o = solve_social_optimum(s);
  EXPECT_NEAR(o.p[0](0), 6.0, 1e-12);
  EXPECT_NEAR(o.p[0](1), 2.0, 1e-12);
}

TEST(Sco, RelaxingLimitsNeverHurts) {
  for (int n = 0; n < 10; ++n) {
    const auto s = random_scenario(seven_bus_network(), 1.0, 6 + n, 31, {}, n);
    Scenario relaxed = s;
    auto lines = s.network.lines();
    for (auto& l : lines) l.flow_limit *= 1.5;
    relaxed.network = Network::build(7, lines);
    EXPECT_LE(solve_social_optimum(relaxed).total_disutility,
              solve_social_optimum(s).total_disutility + 1e-9);
    EXPECT_LE(solve_gne(relaxed).total_disutility, solve_gne(s).total_disutility + 1e-9);
  }
}

TEST(Brd, ConvergesToBenchmark) {
  for (auto mode : {BrdMode::sequential, BrdMode::simultaneous}) {
    BrdOptions o;
    o.mode = mode;
    const auto r = best_response_dynamics(fixtures::benchmark(10.0), Eigen::Vector2d::Zero(), o);
    EXPECT_TRUE(r.converged);
    EXPECT_NEAR(r.bids(0), 190.0 / 7.0, 1e-6);
    EXPECT_NEAR(r.bids(1), 32.0, 1e-6);
  }
}

TEST(Brd, CongestedRegulatedConverges) {
  const auto r = best_response_dynamics(fixtures::benchmark(2.0), Eigen::Vector2d::Zero());
  EXPECT_TRUE(r.converged);
  EXPECT_NEAR(r.bids(0), 25.0, 1e-6);
  EXPECT_NEAR(r.bids(1), 35.0, 1e-6);
}

TEST(Brd, FixedPointIsStationary) {
  const auto s = fixtures::benchmark(10.0);
  const auto r = best_response_dynamics(s, solve_gne(s).bids);
  EXPECT_TRUE(r.converged);
  EXPECT_EQ(r.rounds, 1);
  EXPECT_LT(r.last_change, 1e-9);
}

TEST(Brd, ReportsNonConvergence) {
  BrdOptions o;
  o.max_rounds = 2;
  const auto r = best_response_dynamics(fixtures::benchmark(10.0), Eigen::Vector2d::Zero(), o);
  EXPECT_FALSE(r.converged);
  EXPECT_EQ(r.rounds, 2);
  EXPECT_EQ(r.trajectory.size(), 3u);
}

TEST(Continuum, UncongestedIsIsolated) {
  const auto c = detect_continuum(fixtures::benchmark(10.0));
  EXPECT_FALSE(c.congested);
  EXPECT_TRUE(c.isolated);
  EXPECT_LT(c.equilibrium_gain, 1e-6);
}

TEST(Continuum, CongestedLineOfEquilibria) {
  const auto c = detect_continuum(fixtures::benchmark(2.0));
  EXPECT_TRUE(c.congested);
  EXPECT_FALSE(c.isolated);
  ASSERT_GE(c.witnesses.size(), 5u);
  for (const auto& b : c.witnesses) EXPECT_NEAR(b(0), b(1) - 4.0, 1e-9);
  // Far from the segment a deviation pays.
  EXPECT_GT(*std::max_element(c.max_gain.begin(), c.max_gain.end()), 1e-3);
}

TEST(Verify, BenchmarkDiagnostics) {
  const auto s = fixtures::benchmark(10.0);
  const auto d = verify_equilibrium(solve_gne(s), s);
  EXPECT_TRUE(d.pareto_ok);
  EXPECT_NEAR(d.baseline(0), 22.5, 1e-12);
  EXPECT_NEAR(d.baseline(1), 171.5, 1e-12);
  EXPECT_NEAR(d.cost(1), 144.959, 1e-3);
  EXPECT_LT(d.decomposition_residual, 1e-9);
  EXPECT_NEAR(d.congestion_rent, 0.0, 1e-12);
  EXPECT_GE(d.per_capita_gap, 0.0);
  EXPECT_DOUBLE_EQ(d.gap_bound, 10.0);
}

TEST(Partition, IdentityForOne) {
  const auto s = random_scenario(triangle_network(3.0), 1.0, 4, 8, {1, 5, -5, 12, 4});
  const auto g = solve_gne(s);
  const auto same = equal_partition(s, g, 1);
  ASSERT_EQ(same.num_prosumers(), 4);
  for (int i = 0; i < 4; ++i) {
    EXPECT_EQ(same.prosumers[i].c, s.prosumers[i].c);
    EXPECT_EQ(same.prosumers[i].demand, s.prosumers[i].demand);
  }
}

TEST(Partition, DemandsTelescope) {
  Scenario s = fixtures::benchmark(10.0);
  s.prosumers = {{0, {2.0, 3.0}, 3.0}, {1, {1.0, 4.0}, 9.0}};
  const auto g = solve_gne(s);
  const auto split = equal_partition(s, g, 2);
  ASSERT_EQ(split.num_prosumers(), 4);
  EXPECT_NEAR(split.prosumers[0].demand + split.prosumers[1].demand, 3.0, 1e-12);
  EXPECT_NEAR(split.prosumers[2].demand + split.prosumers[3].demand, 9.0, 1e-12);
  EXPECT_EQ(split.prosumers[3].bus, 1);
  EXPECT_EQ(split.prosumers[1].c, std::vector<double>{3.0});
  EXPECT_LE(solve_gne(split).total_disutility, g.total_disutility + 1e-7);
  EXPECT_THROW(equal_partition(s, g, 3), std::invalid_argument);
  EXPECT_THROW(equal_partition(s, g, 0), std::invalid_argument);
}
