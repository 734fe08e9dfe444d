#pragma once

#include <cstdint>
#include <vector>

#include <Eigen/Dense>

#include "sharing/network.hpp"
#include "sharing/scenario.hpp"

namespace sharing {

/// Three buses in a ring, unit reactances, common flow limit on every line.
/// Lines: 0->1, 1->2, 0->2.
Network triangle_network(double flow_limit, int slack_bus = 0);

/// Reference 7-bus meshed network with 9 lines of varied reactance and limit.
/// See scenarios/seven_bus.json for the same data in file form.
Network seven_bus_network();

/// Returns a copy of `network` with every line limit set to `flow_limit`.
Network with_common_limit(const Network& network, double flow_limit);

/// Ranges for seeded random prosumer draws.
struct RandomRanges {
  double c_min = 1.0;
  double c_max = 5.0;
  double demand_min = -5.0;
  double demand_max = 12.0;
  int resources = 1;
};

/// Draws I prosumers on `network`, prosumer i at bus i mod V. The stream is
/// seeded from (seed, I, draw) so each draw index gives an independent sample.
Scenario random_scenario(const Network& network, double a, int num_prosumers,
                         std::uint64_t seed, const RandomRanges& ranges = {}, int draw = 0);

struct CountSweepRow {
  int num_prosumers = 0;
  int scenarios = 0;
  int redraws = 0;
  double avg_gap = 0.0;       // per-capita disutility gap, GNE minus SCO
  double min_gap = 0.0;
  double max_gap = 0.0;
  double avg_relative = 0.0;  // (GNE - SCO) / SCO total disutility
  double bound = 0.0;         // G^D * F_hat / (a (I-1))
  int gne_iterations = 0;
};

/// For each I, solves `per_count` random scenarios on the base network and
/// averages the per-capita gap. Draws whose solves report infeasibility are
/// replaced and counted in `redraws`.
std::vector<CountSweepRow> count_sweep(const Scenario& base, const std::vector<int>& counts,
                                       std::uint64_t seed, const RandomRanges& ranges = {},
                                       int per_count = 10);

struct FlowSweepRow {
  double flow_limit = 0.0;
  double sco_cost = 0.0;
  double smk_cost = 0.0;
  double relative_diff = 0.0;  // (smk - sco) / sco
  Eigen::VectorXd sco_prices;
  Eigen::VectorXd smk_prices;
  double sco_variance = 0.0;
  double smk_variance = 0.0;
  int gne_iterations = 0;
};

/// Re-solves the base scenario with every line limit set to each grid value.
std::vector<FlowSweepRow> flow_sweep(const Scenario& base, const std::vector<double>& grid);

/// Inclusive arithmetic grid; the last point is snapped to `stop`.
std::vector<double> linear_grid(double start, double stop, double step);

}  // namespace sharing
