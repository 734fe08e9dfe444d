#include "sharing/clearing.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <string>

#include "sharing/qp.hpp"

namespace sharing {

ClearingResult clear_market(const Network& network, const BidProfile& bids,
                            std::span<const int> prosumer_bus) {
  const auto num = static_cast<int>(bids.bids.size());
  if (num < 1) throw std::invalid_argument("clearing needs at least one bid");
  if (static_cast<std::size_t>(num) != prosumer_bus.size()) {
    throw std::invalid_argument("bid count does not match the prosumer bus map");
  }
  if (!(bids.a > 0.0)) throw std::invalid_argument("price sensitivity a must be positive");

  const Eigen::MatrixXd factors = network.prosumer_factors(prosumer_bus);
  const Eigen::VectorXd base_flow = factors * bids.bids;
  const int num_lines = network.num_lines();

  auto problem = qp::Problem::with_variables(num);
  problem.hessian_diag.setConstant(2.0 / num);
  problem.eq_matrix = Eigen::MatrixXd::Constant(1, num, bids.a);
  problem.eq_rhs = Eigen::VectorXd::Constant(1, bids.bids.sum());
  // flow_l = sum_i pi_il (b_i - a lambda_i)
  problem.ineq_matrix = -bids.a * factors;
  problem.ineq_lower.resize(num_lines);
  problem.ineq_upper.resize(num_lines);
  for (int l = 0; l < num_lines; ++l) {
    const double limit = network.lines()[l].flow_limit;
    problem.ineq_lower(l) = -limit - base_flow(l);
    problem.ineq_upper(l) = limit - base_flow(l);
  }

  const auto solution = qp::solve(problem);

  ClearingResult result;
  result.lambda = solution.x;
  result.q = bids.bids - bids.a * solution.x;
  result.eta = solution.eq_duals(0);
  result.alpha_lower = solution.lower_duals;
  result.alpha_upper = solution.upper_duals;
  result.flows = factors * result.q;
  for (int l = 0; l < num_lines; ++l) {
    if (solution.active_set[l] != qp::Bound::free) result.binding_lines.push_back(l);
  }
  result.iterations = solution.iterations;
  return result;
}

Eigen::VectorXd regulate_prices(const ClearingResult& clearing, const Eigen::VectorXd& md,
                                double a) {
  const auto num = clearing.lambda.size();
  if (num < 2) throw std::invalid_argument("price regulation needs at least two prosumers");
  if (md.size() != num) throw std::invalid_argument("marginal disutility vector has wrong length");
  Eigen::VectorXd regulated(num);
  const double damping = a * static_cast<double>(num - 1);
  for (Eigen::Index i = 0; i < num; ++i) {
    const double q = clearing.q(i);
    const double reference = md(i) - q / damping;
    regulated(i) = q >= 0.0 ? std::max(clearing.lambda(i), reference)
                            : std::min(clearing.lambda(i), reference);
  }
  return regulated;
}

Settlement settle(const Eigen::VectorXd& regulated_prices, const ClearingResult& clearing) {
  if (regulated_prices.size() != clearing.q.size()) {
    throw std::invalid_argument("price and quantity vectors differ in length");
  }
  Settlement s;
  s.cost = regulated_prices.cwiseProduct(clearing.q);
  s.revenue = s.cost.sum();
  return s;
}

double price_variance(const Eigen::VectorXd& prices) {
  if (prices.size() == 0) return 0.0;
  const double mean = prices.mean();
  return (prices.array() - mean).square().mean();
}

}  // namespace sharing
