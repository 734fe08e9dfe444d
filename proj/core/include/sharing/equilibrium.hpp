#pragma once

#include <string>
#include <vector>

#include <Eigen/Dense>

#include "sharing/clearing.hpp"
#include "sharing/scenario.hpp"

namespace sharing {

/// The unique equilibrium of the regulated sharing game.
struct EquilibriumResult {
  std::vector<Eigen::VectorXd> p;  // per prosumer, per resource
  Eigen::VectorXd output;          // sum_k p_i^k
  Eigen::VectorXd q;               // D_i - output_i, > 0 means buying
  Eigen::VectorXd bids;
  Eigen::VectorXd lambda;          // 2 c_i^k p_i^k + (output_i - D_i) / (a(I-1))
  double kappa = 0.0;              // balance dual
  Eigen::VectorXd tau_lower;       // per-line duals
  Eigen::VectorXd tau_upper;
  Eigen::VectorXd flows;
  std::vector<int> binding_lines;

  // Market outcome when the platform clears at `bids`.
  ClearingResult clearing;
  Eigen::VectorXd regulated_prices;
  Eigen::VectorXd sharing_cost;    // s_i
  Eigen::VectorXd disutility;      // f_i(p_i)
  Eigen::VectorXd cost;            // f_i + s_i
  double total_disutility = 0.0;
  double platform_revenue = 0.0;
  int iterations = 0;

  bool congested() const { return !binding_lines.empty(); }
};

/// Socially optimal dispatch: least total disutility under balance and flows.
struct SocialOptimum {
  std::vector<Eigen::VectorXd> p;
  Eigen::VectorXd output;
  double total_disutility = 0.0;
  double kappa = 0.0;
  Eigen::VectorXd tau_lower;
  Eigen::VectorXd tau_upper;
  Eigen::VectorXd nodal_prices;    // marginal disutility 2 c_bar_i output_i
  Eigen::VectorXd flows;
  int iterations = 0;
};

/// Equilibrium through the centralized problem
///   min sum f_i(p_i) + sum (D_i - P_i)^2 / (2a(I-1))
///   s.t. sum P_i = sum D_i,  -F <= sum_i pi_il (D_i - P_i) <= F,
/// with auxiliary net-trade variables keeping the Hessian diagonal. Bids are
/// recovered as D_i - P_i + a*lambda_i and the market is re-cleared at them.
EquilibriumResult solve_gne(const Scenario& scenario);

SocialOptimum solve_social_optimum(const Scenario& scenario);

enum class BrdMode { sequential, simultaneous };

struct BrdOptions {
  BrdMode mode = BrdMode::sequential;
  double tolerance = 1e-8;
  int max_rounds = 500;
};

struct BrdResult {
  std::vector<Eigen::VectorXd> trajectory;  // trajectory[0] is the start
  Eigen::VectorXd bids;
  bool converged = false;
  int rounds = 0;
  double last_change = 0.0;
};

/// Iterated best responses. Non-convergence is reported, not thrown; a
/// clearing failure is rethrown with the round index.
BrdResult best_response_dynamics(const Scenario& scenario, const Eigen::VectorXd& initial_bids,
                                 const BrdOptions& options = {});

/// Unregulated-game check of whether the equilibrium is isolated.
struct ContinuumReport {
  bool congested = false;
  bool isolated = false;
  std::vector<int> binding_lines;
  /// Uncongested case: worst unilateral gain at the equilibrium bids.
  double equilibrium_gain = 0.0;
  /// Congested case: sampled profiles b = y* + price * 1, all clearing at y*.
  std::vector<double> sampled_prices;
  std::vector<Eigen::VectorXd> sampled_bids;
  std::vector<double> max_gain;     // per sample, worst unilateral gain
  std::vector<Eigen::VectorXd> witnesses;  // samples with max_gain <= 1e-6
  std::string summary;
};

ContinuumReport detect_continuum(const Scenario& scenario);

/// Largest cost reduction any single prosumer can obtain by changing its own
/// bid, found by a grid plus golden-section refinement over +-window.
double max_unilateral_gain(const Scenario& scenario, const Eigen::VectorXd& bids, CostModel model,
                           double window = 20.0);

struct EquilibriumDiagnostics {
  Eigen::VectorXd cost;
  Eigen::VectorXd baseline;  // c_bar_i D_i^2
  double pareto_margin = 0.0;  // max_i (cost_i - baseline_i)
  bool pareto_ok = false;

  double decomposition_residual = 0.0;  // max_i |lambda_i + kappa + pi tau- - pi tau+|
  double regulation_residual = 0.0;     // max_i |lambda^c_i - lambda_i|

  double platform_revenue = 0.0;
  double congestion_rent = 0.0;         // sum_l F_l (tau-_l + tau+_l)
  double revenue_residual = 0.0;

  double gne_disutility = 0.0;
  double sco_disutility = 0.0;
  double per_capita_gap = 0.0;
  double gap_bound = 0.0;               // G^D * F_hat / (a (I-1))

  double marginal_residual = 0.0;         // max |2 c_i^k p_i^k - md_i|
  double loop_closure_residual = 0.0;   // max |q_clear - (D - P)|
};

EquilibriumDiagnostics verify_equilibrium(const EquilibriumResult& result,
                                          const Scenario& scenario);

/// Splits every prosumer into M sub-prosumers with K/M consecutive resources
/// each, at the parent's bus, with demands chosen so each block carries 1/M of
/// the parent's net position at `gne`. M == 1 returns the scenario unchanged.
/// Throws std::invalid_argument if M does not divide some K.
Scenario equal_partition(const Scenario& scenario, const EquilibriumResult& gne, int parts);

}  // namespace sharing
