#include "sharing/prosumer.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <string>

#include "sharing/clearing.hpp"
#include "sharing/qp.hpp"
#include "sharing/scenario.hpp"

namespace sharing {

double Prosumer::c_bar() const {
  double inv = 0.0;
  for (double ck : c) inv += 1.0 / ck;
  return 1.0 / inv;
}

void Prosumer::validate() const {
  if (c.empty()) throw std::invalid_argument("prosumer has no resources");
  for (std::size_t k = 0; k < c.size(); ++k) {
    if (!(c[k] > 0.0) || !std::isfinite(c[k])) {
      throw std::invalid_argument("cost coefficient " + std::to_string(k) +
                                  " must be positive and finite");
    }
  }
  if (!std::isfinite(demand)) throw std::invalid_argument("demand must be finite");
}

Dispatch split_dispatch(const Prosumer& prosumer, double total) {
  const double cbar = prosumer.c_bar();
  Dispatch d;
  d.p.resize(prosumer.num_resources());
  for (int k = 0; k < prosumer.num_resources(); ++k) d.p(k) = cbar / prosumer.c[k] * total;
  d.total = total;
  d.md = 2.0 * cbar * total;
  return d;
}

double disutility(const Prosumer& prosumer, const Eigen::VectorXd& p) {
  if (p.size() != prosumer.num_resources()) {
    throw std::invalid_argument("dispatch length does not match resource count");
  }
  double f = 0.0;
  for (int k = 0; k < prosumer.num_resources(); ++k) f += prosumer.c[k] * p(k) * p(k);
  return f;
}

double individual_cost(const Prosumer& prosumer) {
  return prosumer.c_bar() * prosumer.demand * prosumer.demand;
}

double regulated_cost(const Prosumer& prosumer, double lambda, double bid, double a,
                      int num_prosumers) {
  if (num_prosumers < 2) {
    throw std::invalid_argument("regulated cost needs at least two prosumers");
  }
  const double q = bid - a * lambda;
  const double total = prosumer.demand - q;
  const double cbar = prosumer.c_bar();
  const double md = 2.0 * cbar * total;
  const double reference = md - q / (a * (num_prosumers - 1));
  return cbar * total * total + std::max(lambda * q, reference * q);
}

double intuitive_cost(const Prosumer& prosumer, double lambda, double bid, double a) {
  const double q = bid - a * lambda;
  const double total = prosumer.demand - q;
  return prosumer.c_bar() * total * total + lambda * q;
}

double cost_at_bid(const Scenario& scenario, int i, const Eigen::VectorXd& profile, double bid,
                   CostModel model) {
  Eigen::VectorXd bids = profile;
  bids(i) = bid;
  const auto map = scenario.bus_map();
  const auto clearing = clear_market(scenario.network, {bids, scenario.a}, map);
  const auto& prosumer = scenario.prosumers[i];
  return model == CostModel::regulated
             ? regulated_cost(prosumer, clearing.lambda(i), bid, scenario.a,
                              scenario.num_prosumers())
             : intuitive_cost(prosumer, clearing.lambda(i), bid, scenario.a);
}

BestResponse best_response(const Scenario& scenario, int i, const Eigen::VectorXd& profile) {
  const int num = scenario.num_prosumers();
  if (num < 2) throw std::invalid_argument("best response needs at least two prosumers");
  if (i < 0 || i >= num) throw std::invalid_argument("prosumer index out of range");
  if (profile.size() != num) throw std::invalid_argument("bid profile has wrong length");

  const auto& prosumer = scenario.prosumers[i];
  const double a = scenario.a;
  const double cbar = prosumer.c_bar();
  const double inv_rest = 1.0 / (num - 1);
  // i's term: (w y_i - 2 a cbar D_i)^2 / w  with  w = 2 a cbar + 1/(I-1)
  const double weight = 2.0 * a * cbar + inv_rest;

  const Eigen::MatrixXd factors = scenario.factors();
  const int num_lines = scenario.network.num_lines();

  auto problem = qp::Problem::with_variables(num);
  for (int j = 0; j < num; ++j) {
    if (j == i) {
      problem.hessian_diag(j) = 2.0 * weight;
      problem.linear(j) = -4.0 * a * cbar * prosumer.demand;
    } else {
      problem.hessian_diag(j) = 2.0;
      problem.linear(j) = -2.0 * profile(j);
    }
  }
  problem.eq_matrix = Eigen::MatrixXd::Ones(1, num);
  problem.eq_rhs = Eigen::VectorXd::Zero(1);
  problem.ineq_matrix = factors;
  problem.ineq_lower.resize(num_lines);
  problem.ineq_upper.resize(num_lines);
  for (int l = 0; l < num_lines; ++l) {
    problem.ineq_lower(l) = -scenario.network.lines()[l].flow_limit;
    problem.ineq_upper(l) = scenario.network.lines()[l].flow_limit;
  }
  const auto solution = qp::solve(problem);

  const double y = solution.x(i);
  BestResponse br;
  br.quantity = y;
  br.bid = 2.0 * a * cbar * (prosumer.demand - y) + (num - 2) * inv_rest * y;
  br.dispatch = split_dispatch(prosumer, prosumer.demand - y);
  br.iterations = solution.iterations;
  const double lambda = (br.bid - y) / a;
  br.cost = regulated_cost(prosumer, lambda, br.bid, a, num);
  return br;
}

BestResponse best_response_search(const Scenario& scenario, int i, const Eigen::VectorXd& profile,
                                  CostModel model) {
  const int num = scenario.num_prosumers();
  if (num < 2) throw std::invalid_argument("best response needs at least two prosumers");
  if (i < 0 || i >= num) throw std::invalid_argument("prosumer index out of range");
  if (profile.size() != num) throw std::invalid_argument("bid profile has wrong length");

  const auto& prosumer = scenario.prosumers[i];
  double others = 0.0;
  for (int j = 0; j < num; ++j) {
    if (j != i) others = std::max(others, std::abs(profile(j)));
  }
  double total_limit = 0.0;
  for (const auto& line : scenario.network.lines()) total_limit += line.flow_limit;
  const double width = 4.0 * (1.0 + others + 2.0 * scenario.a * prosumer.c_bar() *
                                                 std::abs(prosumer.demand) +
                               std::abs(prosumer.demand) + total_limit);

  auto cost = [&](double bid) { return cost_at_bid(scenario, i, profile, bid, model); };

  const double ratio = (std::sqrt(5.0) - 1.0) / 2.0;
  double lo = -width;
  double hi = width;
  double x1 = hi - ratio * (hi - lo);
  double x2 = lo + ratio * (hi - lo);
  double f1 = cost(x1);
  double f2 = cost(x2);
  int evaluations = 2;
  while (hi - lo > 1e-11 * (1.0 + std::abs(lo) + std::abs(hi)) && evaluations < 400) {
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
    ++evaluations;
  }

  BestResponse br;
  br.bid = 0.5 * (lo + hi);
  Eigen::VectorXd bids = profile;
  bids(i) = br.bid;
  const auto clearing = clear_market(scenario.network, {bids, scenario.a}, scenario.bus_map());
  br.quantity = clearing.q(i);
  br.dispatch = split_dispatch(prosumer, prosumer.demand - br.quantity);
  br.cost = model == CostModel::regulated
                ? regulated_cost(prosumer, clearing.lambda(i), br.bid, scenario.a, num)
                : intuitive_cost(prosumer, clearing.lambda(i), br.bid, scenario.a);
  br.iterations = evaluations;
  return br;
}

}  // namespace sharing
