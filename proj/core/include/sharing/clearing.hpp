#pragma once

#include <span>
#include <vector>

#include <Eigen/Dense>

#include "sharing/network.hpp"

namespace sharing {

/// Bids of all prosumers under the supply-demand function q_i = -a*lambda_i + b_i.
struct BidProfile {
  Eigen::VectorXd bids;
  double a = 1.0;
};

/// Outcome of one platform clearing. q_i > 0 means prosumer i buys.
struct ClearingResult {
  Eigen::VectorXd lambda;
  Eigen::VectorXd q;
  double eta = 0.0;               // balance dual
  Eigen::VectorXd alpha_lower;    // per-line dual of flow >= -F
  Eigen::VectorXd alpha_upper;    // per-line dual of flow <= F
  Eigen::VectorXd flows;          // sum_i pi_il q_i
  std::vector<int> binding_lines;
  int iterations = 0;
};

struct Settlement {
  Eigen::VectorXd cost;  // s_i > 0 is a payment by prosumer i
  double revenue = 0.0;  // sum of s_i, collected by the platform
};

/// Clears the market: minimizes sum(lambda_i^2)/I subject to zero net quantity
/// and the line-flow limits. Prices may be negative. Throws
/// qp::InfeasibleError if the limits cannot be met.
ClearingResult clear_market(const Network& network, const BidProfile& bids,
                            std::span<const int> prosumer_bus);

/// Regulated prices. For a buyer (q_i >= 0) the price is raised to at least
/// md_i - q_i/(a(I-1)); for a seller it is capped at that value. q_i == 0 takes
/// the buyer branch, which does not affect settlement.
Eigen::VectorXd regulate_prices(const ClearingResult& clearing, const Eigen::VectorXd& md,
                                double a);

Settlement settle(const Eigen::VectorXd& regulated_prices, const ClearingResult& clearing);

/// Population variance (1/I) * sum (x_i - mean)^2.
double price_variance(const Eigen::VectorXd& prices);

}  // namespace sharing
