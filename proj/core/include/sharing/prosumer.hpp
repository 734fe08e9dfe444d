#pragma once

#include <vector>

#include <Eigen/Dense>

namespace sharing {

struct Scenario;

/// A prosumer holding K quadratic-cost resources, f(p) = sum_k c_k p_k^2, that
/// must deliver a demand reduction D (any sign).
struct Prosumer {
  int bus = 0;
  std::vector<double> c;
  double demand = 0.0;

  int num_resources() const { return static_cast<int>(c.size()); }

  /// Aggregate coefficient 1 / sum_k(1/c_k). Cost of producing a total P
  /// optimally is c_bar * P^2.
  double c_bar() const;

  /// Throws std::invalid_argument if there are no resources or a coefficient is
  /// not strictly positive.
  void validate() const;
};

/// Cost-minimal split of a total output across the resources.
struct Dispatch {
  Eigen::VectorXd p;
  double total = 0.0;
  double md = 0.0;  // marginal disutility 2 * c_bar * total, equal to 2 c_k p_k
};

/// p_k = (c_bar / c_k) * total. Equalizes c_k p_k across resources.
Dispatch split_dispatch(const Prosumer& prosumer, double total);

double disutility(const Prosumer& prosumer, const Eigen::VectorXd& p);

/// c_bar * D^2: what the prosumer pays covering D alone.
double individual_cost(const Prosumer& prosumer);

/// Cost under the regulated mechanism: f + max(lambda q, (md - q/(a(I-1))) q)
/// with q = bid - a*lambda and the dispatch covering D - q.
/// Throws std::invalid_argument when num_prosumers < 2.
double regulated_cost(const Prosumer& prosumer, double lambda, double bid, double a,
                      int num_prosumers);

/// Cost under the unregulated mechanism: f + lambda q.
double intuitive_cost(const Prosumer& prosumer, double lambda, double bid, double a);

enum class CostModel { regulated, intuitive };

/// Evaluates prosumer i's cost when it bids `bid` and everyone else keeps the
/// bids in `profile`, through a full market clearing.
double cost_at_bid(const Scenario& scenario, int i, const Eigen::VectorXd& profile, double bid,
                   CostModel model = CostModel::regulated);

struct BestResponse {
  double bid = 0.0;
  double quantity = 0.0;  // cleared q_i at that bid
  Dispatch dispatch;
  double cost = 0.0;      // regulated cost at that bid
  int iterations = 0;
};

/// Exact best response of prosumer i to the other entries of `profile` under
/// the regulated mechanism. Solves the modified clearing problem in which i's
/// own deviation term is replaced by its cost-weighted target, then maps the
/// resulting quantity back to a bid. Entry i of `profile` is ignored.
BestResponse best_response(const Scenario& scenario, int i, const Eigen::VectorXd& profile);

/// Golden-section search over the bid with the clearing oracle. Slow; used to
/// cross-check best_response. Where the cost is flat in the bid (a congested
/// line pins q_i) the returned bid may differ from best_response while the
/// cost agrees.
BestResponse best_response_search(const Scenario& scenario, int i, const Eigen::VectorXd& profile,
                                  CostModel model = CostModel::regulated);

}  // namespace sharing
