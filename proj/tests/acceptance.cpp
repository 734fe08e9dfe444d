// Acceptance checks for the sharing market library. One line per criterion.
#include <cmath>
#include <cstdio>
#include <functional>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include "fixtures.hpp"
#include "random_qp.hpp"
#include "sharing/equilibrium.hpp"
#include "sharing/qp.hpp"
#include "sharing/sweeps.hpp"

using namespace sharing;

namespace {

struct Outcome {
  bool pass = true;
  std::string detail;
};

std::string fmt(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.3g", v);
  return buf;
}

// The 200 random scenarios shared by criteria 4-6.
std::vector<Scenario> property_scenarios() {
  std::vector<Scenario> out;
  for (int n = 0; n < 200; ++n) {
    const Network net = n % 2 ? seven_bus_network() : triangle_network(2.5);
    RandomRanges ranges;
    ranges.resources = 1 + n % 3;
    const int count = 2 + (n / 2) % 9;
    for (int draw = n;; draw += 1000) {
      auto s = random_scenario(net, 1.0, count, 20240601, ranges, draw);
      try {
        solve_gne(s);
        solve_social_optimum(s);
      } catch (const qp::InfeasibleError&) {
        continue;
      }
      out.push_back(std::move(s));
      break;
    }
  }
  return out;
}

Outcome benchmark_uncongested() {
  const auto g = solve_gne(fixtures::benchmark(10.0));
  const double err = std::max({std::abs(g.bids(0) - 27.14), std::abs(g.bids(1) - 32.00),
                               std::abs(g.output(0) - 5.43), std::abs(g.output(1) - 4.57)});
  return {err <= 1e-2, "b*=(" + fmt(g.bids(0)) + "," + fmt(g.bids(1)) + ") p*=(" +
                           fmt(g.output(0)) + "," + fmt(g.output(1)) + ") max err " + fmt(err)};
}

Outcome benchmark_congested() {
  const auto g = solve_gne(fixtures::benchmark(2.0));
  const double bid_err = std::max(std::abs(g.bids(0) - 25.0), std::abs(g.bids(1) - 35.0));
  const double p_err = std::max(std::abs(g.output(0) - 5.0), std::abs(g.output(1) - 5.0));
  return {bid_err <= 1e-2 && p_err <= 1e-6, "b*=(" + fmt(g.bids(0)) + "," + fmt(g.bids(1)) +
                                                ") p* err " + fmt(p_err)};
}

Outcome continuum() {
  const auto c = detect_continuum(fixtures::benchmark(2.0));
  double off_line = 0.0;
  for (const auto& b : c.witnesses) off_line = std::max(off_line, std::abs(b(0) - (b(1) - 4.0)));
  const bool pass = c.congested && !c.isolated && c.witnesses.size() >= 5 && off_line <= 1e-9;
  return {pass, std::to_string(c.witnesses.size()) + " witnesses on b1=b2-2F; " + c.summary};
}

Outcome pareto(const std::vector<Scenario>& scenarios) {
  double worst = -1e300;
  for (const auto& s : scenarios) {
    const auto d = verify_equilibrium(solve_gne(s), s);
    worst = std::max(worst, d.pareto_margin);
  }
  return {worst <= 1e-7, std::to_string(scenarios.size()) + " scenarios, max(cost - baseline) " +
                             fmt(worst)};
}

Outcome decomposition(const std::vector<Scenario>& scenarios) {
  double decomp = 0.0, revenue = 0.0, lowest = 1e300;
  int congested = 0;
  for (const auto& s : scenarios) {
    const auto g = solve_gne(s);
    const auto d = verify_equilibrium(g, s);
    decomp = std::max(decomp, d.decomposition_residual);
    revenue = std::max(revenue, d.revenue_residual);
    lowest = std::min(lowest, d.platform_revenue);
    congested += g.congested();
  }
  return {decomp <= 1e-6 && revenue <= 1e-6 && lowest >= -1e-7,
          "decomposition " + fmt(decomp) + ", revenue identity " + fmt(revenue) +
              ", min revenue " + fmt(lowest) + ", congested " + std::to_string(congested)};
}

Outcome efficiency(const std::vector<Scenario>& scenarios) {
  double low = 1e300, slack = 1e300;
  for (const auto& s : scenarios) {
    const auto d = verify_equilibrium(solve_gne(s), s);
    low = std::min(low, d.per_capita_gap);
    slack = std::min(slack, d.gap_bound - d.per_capita_gap);
  }
  Scenario base;
  base.network = seven_bus_network();
  const auto rows = count_sweep(base, {2, 5, 10, 20, 30}, 20240501);
  bool rows_ok = true;
  for (const auto& r : rows) rows_ok = rows_ok && r.min_gap >= -1e-7 && r.max_gap <= r.bound + 1e-7;
  const bool trend = rows.back().avg_gap < rows.front().avg_gap;
  return {low >= -1e-7 && slack >= -1e-7 && rows_ok && trend,
          "min gap " + fmt(low) + ", min bound slack " + fmt(slack) + ", sweep avg I=2 " +
              fmt(rows.front().avg_gap) + " -> I=30 " + fmt(rows.back().avg_gap)};
}

bool same_scenario(const Scenario& a, const Scenario& b) {
  if (a.a != b.a || a.num_prosumers() != b.num_prosumers()) return false;
  for (int i = 0; i < a.num_prosumers(); ++i) {
    const auto& p = a.prosumers[i];
    const auto& q = b.prosumers[i];
    if (p.bus != q.bus || p.c != q.c || p.demand != q.demand) return false;
  }
  return a.network.ptdf() == b.network.ptdf();
}

Outcome partition() {
  double worst = -1e300;
  bool identity = true;
  RandomRanges ranges;
  ranges.resources = 4;
  for (int n = 0; n < 20; ++n) {
    const Network net = n % 2 ? seven_bus_network() : triangle_network(3.0);
    const auto s = random_scenario(net, 1.0, 2 + n % 5, 20240602, ranges, n);
    const auto g = solve_gne(s);
    const auto same = equal_partition(s, g, 1);
    identity = identity && same_scenario(s, same) &&
               solve_gne(same).total_disutility == g.total_disutility;
    for (int m : {2, 4}) {
      const auto after = solve_gne(equal_partition(s, g, m));
      worst = std::max(worst, after.total_disutility - g.total_disutility);
    }
  }
  return {worst <= 1e-7 && identity,
          "max(after - before) " + fmt(worst) + ", M=1 identity " + (identity ? "yes" : "no")};
}

Outcome flow_sweep_check() {
  const auto rows = flow_sweep(fixtures::triangle(1.0), linear_grid(1.0, 3.5, 0.25));
  bool monotone = true, variance = true;
  double worst_rel = 0.0;
  for (std::size_t k = 0; k < rows.size(); ++k) {
    worst_rel = std::max(worst_rel, std::abs(rows[k].relative_diff));
    variance = variance && rows[k].smk_variance <= rows[k].sco_variance + 1e-9;
    if (k > 0) {
      monotone = monotone && rows[k].smk_cost <= rows[k - 1].smk_cost + 1e-9 &&
                 rows[k].sco_cost <= rows[k - 1].sco_cost + 1e-9;
    }
  }
  return {monotone && variance && worst_rel < 5e-4,
          std::to_string(rows.size()) + " points, max relative diff " + fmt(100 * worst_rel) +
              "%, monotone " + (monotone ? "yes" : "no") + ", SMK variance <= SCO " +
              (variance ? "yes" : "no")};
}

Outcome solver_oracle() {
  std::mt19937_64 rng(20240603);
  double primal = 0.0, kkt = 0.0;
  for (int trial = 0; trial < 500; ++trial) {
    const int n = 1 + trial % 4;
    const int ranges = trial % 7;
    const int eqs = trial % 5 == 0 ? 1 : 0;
    const auto p = fixtures::random_qp(rng, n, ranges, eqs);
    const auto s = qp::solve(p);
    const auto o = qp::enumerate_oracle(p);
    primal = std::max(primal, (s.x - o.x).cwiseAbs().maxCoeff());
    kkt = std::max(kkt, qp::kkt_residuals(p, s).max());
  }
  return {primal <= 1e-8 && kkt <= 1e-8,
          "500 QPs, max primal gap " + fmt(primal) + ", max KKT residual " + fmt(kkt)};
}

Outcome loop_closure() {
  double bid_err = 0.0, loop = 0.0;
  int converged = 0, congested = 0, max_rounds = 0;
  for (int n = 0; n < 100; ++n) {
    RandomRanges ranges;
    ranges.resources = 1 + n % 3;
    const Network net = n % 2 ? with_common_limit(seven_bus_network(), 1000.0)
                              : triangle_network(1000.0);
    const auto s = random_scenario(net, 1.0, 2 + n % 9, 20240604, ranges, n);
    const auto g = solve_gne(s);
    congested += g.congested();
    const auto r = best_response_dynamics(s, Eigen::VectorXd::Zero(s.num_prosumers()));
    converged += r.converged;
    max_rounds = std::max(max_rounds, r.rounds);
    bid_err = std::max(bid_err, (r.bids - g.bids).cwiseAbs().maxCoeff());
    loop = std::max(loop, verify_equilibrium(g, s).loop_closure_residual);
  }
  return {converged == 100 && congested == 0 && bid_err <= 1e-5 && loop <= 1e-6,
          std::to_string(converged) + "/100 converged (max " + std::to_string(max_rounds) +
              " rounds), bid gap " + fmt(bid_err) + ", re-clear gap " + fmt(loop)};
}

}  // namespace

int main() {
  const auto scenarios = property_scenarios();
  const std::vector<std::pair<std::string, std::function<Outcome()>>> criteria{
      {"benchmark reproduction, uncongested", benchmark_uncongested},
      {"benchmark reproduction, congested", benchmark_congested},
      {"continuum detection", continuum},
      {"Pareto improvement", [&] { return pareto(scenarios); }},
      {"price decomposition and congestion rent", [&] { return decomposition(scenarios); }},
      {"efficiency gap bound and trend", [&] { return efficiency(scenarios); }},
      {"equal partition", partition},
      {"flow sweep", flow_sweep_check},
      {"solver oracle equivalence", solver_oracle},
      {"mechanism loop closure", loop_closure},
  };
  int failures = 0;
  for (std::size_t k = 0; k < criteria.size(); ++k) {
    Outcome o;
    try {
      o = criteria[k].second();
    } catch (const std::exception& e) {
      o = {false, std::string("exception: ") + e.what()};
    }
    failures += !o.pass;
    std::printf("[%s] %2zu %s: %s\n", o.pass ? "PASS" : "FAIL", k + 1, criteria[k].first.c_str(),
                o.detail.c_str());
  }
  std::printf("%d/%zu criteria passed\n", static_cast<int>(criteria.size()) - failures,
              criteria.size());
  return failures == 0 ? 0 : 1;
}
