#pragma once

#include <random>

#include "sharing/qp.hpp"

namespace fixtures {

// Random strictly convex QP built around a feasible point x0, so every draw is
// feasible. Roughly a fifth of range sides are infinite.
inline sharing::qp::Problem random_qp(std::mt19937_64& rng, int n, int ranges, int eqs) {
  namespace qp = sharing::qp;
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  std::uniform_real_distribution<double> h(0.2, 4.0);
  auto p = qp::Problem::with_variables(n);
  Eigen::VectorXd x0(n);
  for (int j = 0; j < n; ++j) {
    p.hessian_diag(j) = h(rng);
    p.linear(j) = 3.0 * u(rng);
    x0(j) = u(rng);
  }
  p.eq_matrix.resize(eqs, n);
  for (int r = 0; r < eqs; ++r)
    for (int j = 0; j < n; ++j) p.eq_matrix(r, j) = u(rng);
  p.eq_rhs = p.eq_matrix * x0;
  p.ineq_matrix.resize(ranges, n);
  p.ineq_lower.resize(ranges);
  p.ineq_upper.resize(ranges);
  for (int r = 0; r < ranges; ++r) {
    for (int j = 0; j < n; ++j) p.ineq_matrix(r, j) = u(rng);
    const double at = p.ineq_matrix.row(r).dot(x0);
    p.ineq_lower(r) = u(rng) < -0.6 ? -qp::kInf : at - 0.5 * (1.0 + u(rng));
    p.ineq_upper(r) = u(rng) > 0.6 ? qp::kInf : at + 0.5 * (1.0 + u(rng));
  }
  return p;
}

}  // namespace fixtures
