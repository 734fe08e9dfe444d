#include "sharing/sweeps.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <random>
#include <stdexcept>

#include "sharing/clearing.hpp"
#include "sharing/equilibrium.hpp"
#include "sharing/qp.hpp"

namespace sharing {

Network triangle_network(double flow_limit, int slack_bus) {
  return Network::build(3,
                        {{0, 1, 1.0, flow_limit}, {1, 2, 1.0, flow_limit}, {0, 2, 1.0, flow_limit}},
                        slack_bus);
}

Network seven_bus_network() {
  // Two loops (0-1-2, 1-2-4-3) joined to a tail loop 3-4-6-5.
  return Network::build(7, {
                               {0, 1, 0.10, 8.0},
                               {0, 2, 0.15, 6.0},
                               {1, 2, 0.12, 5.0},
                               {1, 3, 0.20, 6.0},
                               {2, 4, 0.18, 5.0},
                               {3, 4, 0.10, 4.0},
                               {3, 5, 0.25, 5.0},
                               {4, 6, 0.15, 6.0},
                               {5, 6, 0.20, 4.0},
                           });
}

Network with_common_limit(const Network& network, double flow_limit) {
  auto lines = network.lines();
  for (auto& line : lines) line.flow_limit = flow_limit;
  return Network::build(network.num_buses(), std::move(lines), network.slack_bus());
}

Scenario random_scenario(const Network& network, double a, int num_prosumers, std::uint64_t seed,
                         const RandomRanges& ranges, int draw) {
  if (num_prosumers < 1) throw std::invalid_argument("need at least one prosumer");
  if (ranges.resources < 1) throw std::invalid_argument("need at least one resource");
  if (!(ranges.c_min > 0.0) || ranges.c_max < ranges.c_min ||
      ranges.demand_max < ranges.demand_min) {
    throw std::invalid_argument("invalid random ranges");
  }
  std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32),
                    static_cast<std::uint32_t>(num_prosumers), static_cast<std::uint32_t>(draw)};
  std::mt19937_64 rng(seq);
  std::uniform_real_distribution<double> cost(ranges.c_min, ranges.c_max);
  std::uniform_real_distribution<double> demand(ranges.demand_min, ranges.demand_max);

  Scenario s;
  s.a = a;
  s.network = network;
  for (int i = 0; i < num_prosumers; ++i) {
    Prosumer p;
    p.bus = i % network.num_buses();
    for (int k = 0; k < ranges.resources; ++k) p.c.push_back(cost(rng));
    p.demand = demand(rng);
    s.prosumers.push_back(std::move(p));
  }
  return s;
}

std::vector<CountSweepRow> count_sweep(const Scenario& base, const std::vector<int>& counts,
                                       std::uint64_t seed, const RandomRanges& ranges,
                                       int per_count) {
  constexpr int kMaxRedraws = 100;
  std::vector<CountSweepRow> rows;
  for (int count : counts) {
    if (count < 2) throw std::invalid_argument("count sweep needs I >= 2");
    CountSweepRow row;
    row.num_prosumers = count;
    row.min_gap = std::numeric_limits<double>::infinity();
    row.max_gap = -std::numeric_limits<double>::infinity();
    int draw = 0;
    while (row.scenarios < per_count) {
      const auto scenario = random_scenario(base.network, base.a, count, seed, ranges, draw++);
      try {
        const auto gne = solve_gne(scenario);
        const auto sco = solve_social_optimum(scenario);
        const double gap = (gne.total_disutility - sco.total_disutility) / count;
        row.avg_gap += gap;
        row.avg_relative += (gne.total_disutility - sco.total_disutility) /
                            std::max(sco.total_disutility, 1e-12);
        row.min_gap = std::min(row.min_gap, gap);
        row.max_gap = std::max(row.max_gap, gap);
        row.gne_iterations += gne.iterations;
        ++row.scenarios;
      } catch (const qp::InfeasibleError&) {
        if (++row.redraws > kMaxRedraws) throw;
      }
    }
    row.avg_gap /= per_count;
    row.avg_relative /= per_count;
    row.bound = base.network.max_degree() * base.network.max_flow_limit() / (base.a * (count - 1));
    rows.push_back(row);
  }
  return rows;
}

std::vector<FlowSweepRow> flow_sweep(const Scenario& base, const std::vector<double>& grid) {
  std::vector<FlowSweepRow> rows;
  Scenario scenario = base;
  for (double limit : grid) {
    scenario.network = with_common_limit(base.network, limit);
    const auto gne = solve_gne(scenario);
    const auto sco = solve_social_optimum(scenario);
    FlowSweepRow row;
    row.flow_limit = limit;
    row.sco_cost = sco.total_disutility;
    row.smk_cost = gne.total_disutility;
    row.relative_diff = (row.smk_cost - row.sco_cost) / std::max(row.sco_cost, 1e-12);
    row.sco_prices = sco.nodal_prices;
    row.smk_prices = gne.regulated_prices;
    row.sco_variance = price_variance(row.sco_prices);
    row.smk_variance = price_variance(row.smk_prices);
    row.gne_iterations = gne.iterations;
    rows.push_back(std::move(row));
  }
  return rows;
}

std::vector<double> linear_grid(double start, double stop, double step) {
  if (!(step > 0.0) || stop < start) throw std::invalid_argument("invalid grid");
  std::vector<double> grid;
  const int n = static_cast<int>(std::floor((stop - start) / step + 1e-9));
  for (int k = 0; k <= n; ++k) grid.push_back(start + k * step);
  if (stop - grid.back() > 1e-9 * (1.0 + std::abs(stop))) grid.push_back(stop);
  return grid;
}

}  // namespace sharing
