#pragma once

#include <limits>
#include <stdexcept>
#include <string>
#include <vector>

#include <Eigen/Dense>

namespace sharing::qp {

inline constexpr double kInf = std::numeric_limits<double>::infinity();

/// Strictly convex QP with a diagonal Hessian:
///
///   min  1/2 x' diag(h) x + g' x
///   s.t. E x = e
///        lower <= A x <= upper      (entries may be -inf / +inf)
struct Problem {
  Eigen::VectorXd hessian_diag;
  Eigen::VectorXd linear;
  Eigen::MatrixXd eq_matrix;
  Eigen::VectorXd eq_rhs;
  Eigen::MatrixXd ineq_matrix;
  Eigen::VectorXd ineq_lower;
  Eigen::VectorXd ineq_upper;

  /// Empty problem in n variables: zero objective, no constraints. Callers
  /// fill in the Hessian and constraints.
  static Problem with_variables(int n);

  int num_vars() const { return static_cast<int>(hessian_diag.size()); }
  int num_eq() const { return static_cast<int>(eq_matrix.rows()); }
  int num_ineq() const { return static_cast<int>(ineq_matrix.rows()); }

  /// Throws std::invalid_argument when dimensions disagree, the Hessian is not
  /// strictly positive, or some lower bound exceeds its upper bound.
  void validate() const;

  double objective(const Eigen::VectorXd& x) const;
};

enum class Bound { free, lower, upper };

struct Solution {
  Eigen::VectorXd x;
  Eigen::VectorXd eq_duals;
  Eigen::VectorXd lower_duals;
  Eigen::VectorXd upper_duals;
  std::vector<Bound> active_set;
  int iterations = 0;
  double objective = 0.0;
};

struct Options {
  /// Feasibility / optimality tolerance used inside the working-set loop.
  double tolerance = 1e-9;
  /// 0 selects the default cap of 100 * (n + M).
  int max_iterations = 0;
};

/// Thrown when no point satisfies the constraints. The certificate is the
/// constraint that could not be satisfied once the others in the working set
/// were enforced.
class InfeasibleError : public std::runtime_error {
 public:
  InfeasibleError(std::string message, int constraint, bool is_equality)
      : std::runtime_error(std::move(message)), constraint_(constraint), equality_(is_equality) {}
  int constraint() const { return constraint_; }
  bool is_equality() const { return equality_; }

 private:
  int constraint_;
  bool equality_;
};

/// Iteration cap exceeded or a numerical breakdown.
class SolverError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct KktResiduals {
  double stationarity = 0.0;
  double primal = 0.0;
  double dual = 0.0;
  double complementarity = 0.0;
  double max() const;
};

/// Dual active-set solve (Goldfarb-Idnani). Starts from the unconstrained
/// minimizer, enforces the equalities, then repeatedly adds the most violated
/// range side and drops blocking multipliers until primal feasible. Multipliers
/// are re-solved on the final working set so the KKT system holds to rounding.
Solution solve(const Problem& problem, const Options& options = {});

/// Brute force over all 3^M {free, lower, upper} assignments. Test oracle only.
Solution enumerate_oracle(const Problem& problem, int max_ranges = 12);

KktResiduals kkt_residuals(const Problem& problem, const Solution& solution);

}  // namespace sharing::qp
