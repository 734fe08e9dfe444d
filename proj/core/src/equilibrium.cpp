#include "sharing/equilibrium.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>
#include <stdexcept>

#include "sharing/qp.hpp"

namespace sharing {

namespace {

constexpr double kDualTolerance = 1e-9;
constexpr double kWitnessTolerance = 1e-6;

std::vector<int> resource_offsets(const Scenario& scenario) {
  std::vector<int> offsets(scenario.num_prosumers() + 1, 0);
  for (int i = 0; i < scenario.num_prosumers(); ++i) {
    offsets[i + 1] = offsets[i] + scenario.prosumers[i].num_resources();
  }
  return offsets;
}

std::vector<Eigen::VectorXd> unpack(const Scenario& scenario, const std::vector<int>& offsets,
                                    const Eigen::VectorXd& x) {
  std::vector<Eigen::VectorXd> p;
  p.reserve(scenario.prosumers.size());
  for (int i = 0; i < scenario.num_prosumers(); ++i) {
    p.push_back(x.segment(offsets[i], scenario.prosumers[i].num_resources()));
  }
  return p;
}

bool any_positive(const Eigen::VectorXd& v) {
  return v.size() > 0 && v.maxCoeff() > kDualTolerance;
}

}  // namespace

EquilibriumResult solve_gne(const Scenario& scenario) {
  scenario.validate(true);
  const int num = scenario.num_prosumers();
  const double a = scenario.a;
  const double damping = a * (num - 1);
  const auto offsets = resource_offsets(scenario);
  const int num_p = offsets.back();
  const int n = num_p + num;
  const int num_lines = scenario.network.num_lines();
  const Eigen::MatrixXd factors = scenario.factors();
  const Eigen::VectorXd demand = scenario.demands();

  auto problem = qp::Problem::with_variables(n);
  for (int i = 0; i < num; ++i) {
    for (int k = 0; k < scenario.prosumers[i].num_resources(); ++k) {
      problem.hessian_diag(offsets[i] + k) = 2.0 * scenario.prosumers[i].c[k];
    }
    problem.hessian_diag(num_p + i) = 1.0 / damping;
  }
  // Rows 0..I-1 link each prosumer's output to its net trade y_i; row I is the
  // system balance, whose dual is kappa.
  problem.eq_matrix = Eigen::MatrixXd::Zero(num + 1, n);
  problem.eq_rhs = Eigen::VectorXd::Zero(num + 1);
  for (int i = 0; i < num; ++i) {
    problem.eq_matrix.block(i, offsets[i], 1, scenario.prosumers[i].num_resources()).setOnes();
    problem.eq_matrix(i, num_p + i) = 1.0;
    problem.eq_rhs(i) = demand(i);
  }
  problem.eq_matrix.block(num, 0, 1, num_p).setOnes();
  problem.eq_rhs(num) = demand.sum();

  problem.ineq_matrix = Eigen::MatrixXd::Zero(num_lines, n);
  problem.ineq_matrix.rightCols(num) = factors;
  problem.ineq_lower.resize(num_lines);
  problem.ineq_upper.resize(num_lines);
  for (int l = 0; l < num_lines; ++l) {
    problem.ineq_lower(l) = -scenario.network.lines()[l].flow_limit;
    problem.ineq_upper(l) = scenario.network.lines()[l].flow_limit;
  }

  const auto solution = qp::solve(problem);

  EquilibriumResult r;
  r.p = unpack(scenario, offsets, solution.x);
  r.output.resize(num);
  r.lambda.resize(num);
  for (int i = 0; i < num; ++i) {
    const auto& prosumer = scenario.prosumers[i];
    r.output(i) = r.p[i].sum();
    r.lambda(i) = 2.0 * prosumer.c_bar() * r.output(i) + (r.output(i) - demand(i)) / damping;
  }
  r.q = demand - r.output;
  r.bids = r.q + a * r.lambda;
  r.kappa = solution.eq_duals(num);
  r.tau_lower = solution.lower_duals;
  r.tau_upper = solution.upper_duals;
  r.flows = factors * r.q;
  for (int l = 0; l < num_lines; ++l) {
    if (solution.active_set[l] != qp::Bound::free) r.binding_lines.push_back(l);
  }
  r.iterations = solution.iterations;

  r.clearing = clear_market(scenario.network, {r.bids, a}, scenario.bus_map());
  Eigen::VectorXd md(num);
  r.disutility.resize(num);
  for (int i = 0; i < num; ++i) {
    const auto& prosumer = scenario.prosumers[i];
    md(i) = 2.0 * prosumer.c_bar() * (demand(i) - r.clearing.q(i));
    r.disutility(i) = disutility(prosumer, r.p[i]);
  }
  r.regulated_prices = regulate_prices(r.clearing, md, a);
  const auto settlement = settle(r.regulated_prices, r.clearing);
  r.sharing_cost = settlement.cost;
  r.platform_revenue = settlement.revenue;
  r.cost = r.disutility + r.sharing_cost;
  r.total_disutility = r.disutility.sum();
  return r;
}

SocialOptimum solve_social_optimum(const Scenario& scenario) {
  scenario.validate(false);
  const int num = scenario.num_prosumers();
  const auto offsets = resource_offsets(scenario);
  const int n = offsets.back();
  const int num_lines = scenario.network.num_lines();
  const Eigen::MatrixXd factors = scenario.factors();
  const Eigen::VectorXd demand = scenario.demands();
  const Eigen::VectorXd base_flow = factors * demand;

  auto problem = qp::Problem::with_variables(n);
  for (int i = 0; i < num; ++i) {
    for (int k = 0; k < scenario.prosumers[i].num_resources(); ++k) {
      problem.hessian_diag(offsets[i] + k) = 2.0 * scenario.prosumers[i].c[k];
    }
  }
  problem.eq_matrix = Eigen::MatrixXd::Ones(1, n);
  problem.eq_rhs = Eigen::VectorXd::Constant(1, demand.sum());
  // flow_l = sum_i pi_il (D_i - P_i)
  problem.ineq_matrix = Eigen::MatrixXd::Zero(num_lines, n);
  for (int i = 0; i < num; ++i) {
    for (int k = 0; k < scenario.prosumers[i].num_resources(); ++k) {
      problem.ineq_matrix.col(offsets[i] + k) = -factors.col(i);
    }
  }
  problem.ineq_lower.resize(num_lines);
  problem.ineq_upper.resize(num_lines);
  for (int l = 0; l < num_lines; ++l) {
    const double limit = scenario.network.lines()[l].flow_limit;
    problem.ineq_lower(l) = -limit - base_flow(l);
    problem.ineq_upper(l) = limit - base_flow(l);
  }

  const auto solution = qp::solve(problem);

  SocialOptimum s;
  s.p = unpack(scenario, offsets, solution.x);
  s.output.resize(num);
  s.nodal_prices.resize(num);
  for (int i = 0; i < num; ++i) {
    const auto& prosumer = scenario.prosumers[i];
    s.output(i) = s.p[i].sum();
    s.nodal_prices(i) = 2.0 * prosumer.c_bar() * s.output(i);
    s.total_disutility += disutility(prosumer, s.p[i]);
  }
  s.kappa = solution.eq_duals(0);
  s.tau_lower = solution.lower_duals;
  s.tau_upper = solution.upper_duals;
  s.flows = factors * (demand - s.output);
  s.iterations = solution.iterations;
  return s;
}

BrdResult best_response_dynamics(const Scenario& scenario, const Eigen::VectorXd& initial_bids,
                                 const BrdOptions& options) {
  scenario.validate(true);
  const int num = scenario.num_prosumers();
  if (initial_bids.size() != num) throw std::invalid_argument("initial bids have wrong length");

  BrdResult result;
  Eigen::VectorXd bids = initial_bids;
  result.trajectory.push_back(bids);
  for (int round = 1; round <= options.max_rounds; ++round) {
    Eigen::VectorXd next = bids;
    try {
      for (int i = 0; i < num; ++i) {
        const auto& reference = options.mode == BrdMode::sequential ? next : bids;
        next(i) = best_response(scenario, i, reference).bid;
      }
    } catch (const qp::InfeasibleError& e) {
      throw qp::InfeasibleError("round " + std::to_string(round) + ": " + e.what(),
                                e.constraint(), e.is_equality());
    }
    result.last_change = (next - bids).cwiseAbs().maxCoeff();
    bids = next;
    result.trajectory.push_back(bids);
    result.rounds = round;
    if (result.last_change <= options.tolerance) {
      result.converged = true;
      break;
    }
  }
  result.bids = bids;
  return result;
}

double max_unilateral_gain(const Scenario& scenario, const Eigen::VectorXd& bids, CostModel model,
                           double window) {
  const int num = scenario.num_prosumers();
  constexpr int kGrid = 161;
  double worst = 0.0;
  for (int i = 0; i < num; ++i) {
    auto cost = [&](double bid) { return cost_at_bid(scenario, i, bids, bid, model); };
    const double current = cost(bids(i));
    const double step = 2.0 * window / (kGrid - 1);
    double best_bid = bids(i);
    double best = current;
    for (int g = 0; g < kGrid; ++g) {
      const double candidate = bids(i) - window + g * step;
      const double value = cost(candidate);
      if (value < best) {
        best = value;
        best_bid = candidate;
      }
    }
    // Golden-section refinement around the best grid point.
    const double ratio = (std::sqrt(5.0) - 1.0) / 2.0;
    double lo = best_bid - step;
    double hi = best_bid + step;
    double x1 = hi - ratio * (hi - lo);
    double x2 = lo + ratio * (hi - lo);
    double f1 = cost(x1);
    double f2 = cost(x2);
    for (int it = 0; it < 80; ++it) {
      if (f1 <= f2) {
        hi = x2;
        x2 = x1;
        f2 = f1;
        x1 = hi - ratio * (hi - lo);
        f1 = cost(x1);
      } else {
        lo = x1;
        x1 = x2;
        f1 = f2;
        x2 = lo + ratio * (hi - lo);
        f2 = cost(x2);
      }
    }
    best = std::min({best, f1, f2});
    worst = std::max(worst, current - best);
  }
  return worst;
}

ContinuumReport detect_continuum(const Scenario& scenario) {
  const auto gne = solve_gne(scenario);
  ContinuumReport report;
  report.binding_lines = gne.binding_lines;
  report.congested = any_positive(gne.tau_lower) || any_positive(gne.tau_upper);

  std::ostringstream summary;
  if (!report.congested) {
    report.isolated = true;
    report.equilibrium_gain = max_unilateral_gain(scenario, gne.bids, CostModel::intuitive);
    summary << "isolated GNE exists (uncongested); max unilateral gain "
            << report.equilibrium_gain;
    report.summary = summary.str();
    return report;
  }

  // Profiles b = y* + a*price*1 all clear at the equilibrium quantities y* with
  // a uniform price; sample the price +-10 bid units around the mean nodal price.
  const double anchor = gne.lambda.mean();
  const auto map = scenario.bus_map();
  for (int s = -20; s <= 20; ++s) {
    const double price = anchor + 0.5 * s / scenario.a;
    const Eigen::VectorXd bids =
        gne.q + Eigen::VectorXd::Constant(scenario.num_prosumers(), scenario.a * price);
    const auto clearing = clear_market(scenario.network, {bids, scenario.a}, map);
    if ((clearing.q - gne.q).cwiseAbs().maxCoeff() > 1e-7) continue;
    const double gain = max_unilateral_gain(scenario, bids, CostModel::intuitive);
    report.sampled_prices.push_back(price);
    report.sampled_bids.push_back(bids);
    report.max_gain.push_back(gain);
    if (gain <= kWitnessTolerance) report.witnesses.push_back(bids);
  }
  report.isolated = false;
  if (report.witnesses.size() >= 5) {
    summary << "no isolated GNE; continuum witnessed by " << report.witnesses.size()
            << " deviation-proof profiles";
  } else {
    summary << "congested; only " << report.witnesses.size()
            << " deviation-proof profiles found on the uniform-price line";
  }
  report.summary = summary.str();
  return report;
}

EquilibriumDiagnostics verify_equilibrium(const EquilibriumResult& result,
                                          const Scenario& scenario) {
  const int num = scenario.num_prosumers();
  const Eigen::MatrixXd factors = scenario.factors();
  EquilibriumDiagnostics d;

  d.cost = result.cost;
  d.baseline.resize(num);
  for (int i = 0; i < num; ++i) d.baseline(i) = individual_cost(scenario.prosumers[i]);
  d.pareto_margin = (d.cost - d.baseline).maxCoeff();
  d.pareto_ok = d.pareto_margin <= 1e-7;

  const Eigen::VectorXd congestion =
      factors.transpose() * (result.tau_lower - result.tau_upper);
  d.decomposition_residual =
      (result.clearing.lambda.array() + result.kappa + congestion.array()).abs().maxCoeff();
  d.regulation_residual = (result.regulated_prices - result.clearing.lambda).cwiseAbs().maxCoeff();

  d.platform_revenue = result.platform_revenue;
  for (int l = 0; l < scenario.network.num_lines(); ++l) {
    d.congestion_rent +=
        scenario.network.lines()[l].flow_limit * (result.tau_lower(l) + result.tau_upper(l));
  }
  d.revenue_residual = std::abs(d.platform_revenue - d.congestion_rent);

  const auto sco = solve_social_optimum(scenario);
  d.gne_disutility = result.total_disutility;
  d.sco_disutility = sco.total_disutility;
  d.per_capita_gap = (d.gne_disutility - d.sco_disutility) / num;
  d.gap_bound = scenario.network.max_degree() * scenario.network.max_flow_limit() /
                (scenario.a * (num - 1));

  for (int i = 0; i < num; ++i) {
    const auto& prosumer = scenario.prosumers[i];
    const double md = 2.0 * prosumer.c_bar() * result.output(i);
    for (int k = 0; k < prosumer.num_resources(); ++k) {
      d.marginal_residual =
          std::max(d.marginal_residual, std::abs(2.0 * prosumer.c[k] * result.p[i](k) - md));
    }
  }
  d.loop_closure_residual = (result.clearing.q - result.q).cwiseAbs().maxCoeff();
  return d;
}

Scenario equal_partition(const Scenario& scenario, const EquilibriumResult& gne, int parts) {
  if (parts < 1) throw std::invalid_argument("partition count must be positive");
  if (static_cast<int>(gne.p.size()) != scenario.num_prosumers()) {
    throw std::invalid_argument("equilibrium does not belong to this scenario");
  }
  for (int i = 0; i < scenario.num_prosumers(); ++i) {
    const int k = scenario.prosumers[i].num_resources();
    if (k % parts != 0) {
      throw std::invalid_argument("prosumer " + std::to_string(i) + " has " + std::to_string(k) +
                                  " resources, not divisible by " + std::to_string(parts));
    }
    if (gne.p[i].size() != k) {
      throw std::invalid_argument("equilibrium dispatch does not match prosumer " +
                                  std::to_string(i));
    }
  }
  if (parts == 1) return scenario;

  Scenario out;
  out.a = scenario.a;
  out.network = scenario.network;
  for (int i = 0; i < scenario.num_prosumers(); ++i) {
    const auto& parent = scenario.prosumers[i];
    const int block = parent.num_resources() / parts;
    const double net_share = (gne.p[i].sum() - parent.demand) / parts;
    for (int m = 0; m < parts; ++m) {
      Prosumer child;
      child.bus = parent.bus;
      child.c.assign(parent.c.begin() + m * block, parent.c.begin() + (m + 1) * block);
      child.demand = gne.p[i].segment(m * block, block).sum() - net_share;
      out.prosumers.push_back(std::move(child));
    }
  }
  return out;
}

}  // namespace sharing
