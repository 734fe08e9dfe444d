#include "sharing/qp.hpp"

#include <algorithm>
#include <cmath>
#include <optional>

namespace sharing::qp {

namespace {

enum class Kind { equality, lower, upper };

struct Working {
  Kind kind;
  int index;
  double sign = 1.0;  // orientation of an equality row
};

Eigen::VectorXd normal_of(const Problem& p, const Working& w) {
  switch (w.kind) {
    case Kind::equality:
      return w.sign * p.eq_matrix.row(w.index).transpose();
    case Kind::lower:
      return p.ineq_matrix.row(w.index).transpose();
    case Kind::upper:
      return -p.ineq_matrix.row(w.index).transpose();
  }
  return {};
}

double rhs_of(const Problem& p, const Working& w) {
  switch (w.kind) {
    case Kind::equality:
      return w.sign * p.eq_rhs(w.index);
    case Kind::lower:
      return p.ineq_lower(w.index);
    case Kind::upper:
      return -p.ineq_upper(w.index);
  }
  return 0.0;
}

// Ordering key used for deterministic tie-breaking among working constraints.
int order_key(const Problem& p, const Working& w) {
  return w.kind == Kind::equality ? w.index : p.num_eq() + w.index;
}

double bound_tolerance(double tol, double bound) { return tol * (1.0 + std::abs(bound)); }

class DualActiveSet {
 public:
  DualActiveSet(const Problem& problem, const Options& options)
      : p_(problem),
        tol_(options.tolerance),
        max_iterations_(options.max_iterations > 0
                            ? options.max_iterations
                            : 100 * (problem.num_vars() + problem.num_ineq())),
        inv_h_(problem.hessian_diag.cwiseInverse()),
        scale_(inv_h_.cwiseSqrt()) {
    x_ = -inv_h_.cwiseProduct(p_.linear);
  }

  Solution run() {
    for (int i = 0; i < p_.num_eq(); ++i) {
      Working w{Kind::equality, i, 1.0};
      const double c = p_.eq_matrix.row(i).dot(x_) - p_.eq_rhs(i);
      if (c > 0.0) w.sign = -1.0;
      enforce(w);
    }
    while (true) {
      const auto violated = most_violated();
      if (!violated) break;
      enforce(*violated);
    }
    polish();
    return package();
  }

 private:
  std::optional<Working> most_violated() const {
    std::vector<bool> in_set(p_.num_ineq(), false);
    for (const auto& w : working_) {
      if (w.kind != Kind::equality) in_set[w.index] = true;
    }
    std::optional<Working> best;
    double worst = 0.0;
    for (int j = 0; j < p_.num_ineq(); ++j) {
      if (in_set[j]) continue;
      const double ax = p_.ineq_matrix.row(j).dot(x_);
      const double lo = p_.ineq_lower(j);
      const double up = p_.ineq_upper(j);
      if (std::isfinite(lo)) {
        const double v = lo - ax;
        if (v > bound_tolerance(tol_, lo) && v > worst) {
          worst = v;
          best = Working{Kind::lower, j};
        }
      }
      if (std::isfinite(up)) {
        const double v = ax - up;
        if (v > bound_tolerance(tol_, up) && v > worst) {
          worst = v;
          best = Working{Kind::upper, j};
        }
      }
    }
    return best;
  }

  Eigen::MatrixXd scaled_normals() const {
    Eigen::MatrixXd n(p_.num_vars(), static_cast<Eigen::Index>(working_.size()));
    for (std::size_t j = 0; j < working_.size(); ++j) {
      n.col(static_cast<Eigen::Index>(j)) = scale_.cwiseProduct(normal_of(p_, working_[j]));
    }
    return n;
  }

  // Moves x until constraint w is satisfied with equality, dropping working
  // inequalities whose multipliers would turn negative, then adds w.
  void enforce(const Working& w) {
    const Eigen::VectorXd normal = normal_of(p_, w);
    const double rhs = rhs_of(p_, w);
    const Eigen::VectorXd scaled_normal = scale_.cwiseProduct(normal);
    const double normal_size = scaled_normal.squaredNorm();
    double added_multiplier = 0.0;

    while (true) {
      const double c = normal.dot(x_) - rhs;
      const auto m = static_cast<Eigen::Index>(working_.size());

      Eigen::VectorXd r = Eigen::VectorXd::Zero(m);
      Eigen::VectorXd resid = scaled_normal;
      if (m > 0) {
        const Eigen::MatrixXd n = scaled_normals();
        Eigen::ColPivHouseholderQR<Eigen::MatrixXd> qr(n);
        r = qr.solve(scaled_normal);
        resid = scaled_normal - n * r;
      }
      const double zz = resid.squaredNorm();
      const bool dependent = normal_size == 0.0 || zz <= 1e-13 * normal_size;

      double t1 = kInf;
      int blocking = -1;
      for (Eigen::Index j = 0; j < m; ++j) {
        if (working_[j].kind == Kind::equality || r(j) <= 1e-12) continue;
        const double ratio = multipliers_[j] / r(j);
        if (ratio < t1 || (ratio == t1 && blocking >= 0 &&
                           order_key(p_, working_[j]) < order_key(p_, working_[blocking]))) {
          t1 = ratio;
          blocking = static_cast<int>(j);
        }
      }

      if (dependent && blocking < 0) {
        if (std::abs(c) <= bound_tolerance(tol_, rhs) && w.kind == Kind::equality) {
          return;  // redundant equality row
        }
        if (c >= -bound_tolerance(tol_, rhs)) {
          return;  // already satisfied and implied by the working set
        }
        const bool eq = w.kind == Kind::equality;
        throw InfeasibleError(
            std::string(eq ? "equality" : "range") + " constraint " + std::to_string(w.index) +
                (eq ? "" : (w.kind == Kind::lower ? " (lower side)" : " (upper side)")) +
                " cannot be satisfied together with the active constraints",
            w.index, eq);
      }

      const double t2 = dependent ? kInf : -c / zz;
      const double t = std::min(t1, t2);

      if (!dependent) x_ += t * scale_.cwiseProduct(resid);
      for (Eigen::Index j = 0; j < m; ++j) {
        multipliers_[j] -= t * r(j);
        if (working_[j].kind != Kind::equality && multipliers_[j] < 0.0) multipliers_[j] = 0.0;
      }
      added_multiplier += t;

      if (++iterations_ > max_iterations_) {
        throw SolverError("active-set iteration cap of " + std::to_string(max_iterations_) +
                          " exceeded");
      }

      if (t2 <= t1) {
        working_.push_back(w);
        multipliers_.push_back(added_multiplier);
        return;
      }
      working_.erase(working_.begin() + blocking);
      multipliers_.erase(multipliers_.begin() + blocking);
    }
  }

  // Re-solves the equality-constrained KKT system on the final working set.
  void polish() {
    const auto m = static_cast<Eigen::Index>(working_.size());
    if (m == 0) {
      x_ = -inv_h_.cwiseProduct(p_.linear);
      return;
    }
    Eigen::MatrixXd normals(p_.num_vars(), m);
    Eigen::VectorXd rhs(m);
    for (Eigen::Index j = 0; j < m; ++j) {
      normals.col(j) = normal_of(p_, working_[j]);
      rhs(j) = rhs_of(p_, working_[j]);
    }
    const Eigen::MatrixXd scaled = scale_.asDiagonal() * normals;
    const Eigen::MatrixXd gram = scaled.transpose() * scaled;
    const Eigen::VectorXd b = rhs + normals.transpose() * inv_h_.cwiseProduct(p_.linear);
    Eigen::LDLT<Eigen::MatrixXd> ldlt(gram);
    if (ldlt.info() != Eigen::Success) return;
    const Eigen::VectorXd u = ldlt.solve(b);
    if (!u.allFinite()) return;
    for (Eigen::Index j = 0; j < m; ++j) {
      if (working_[j].kind != Kind::equality && u(j) < -std::sqrt(tol_)) return;
    }
    x_ = inv_h_.cwiseProduct(normals * u - p_.linear);
    for (Eigen::Index j = 0; j < m; ++j) {
      multipliers_[j] = working_[j].kind == Kind::equality ? u(j) : std::max(0.0, u(j));
    }
  }

  Solution package() const {
    Solution s;
    s.x = x_;
    s.eq_duals = Eigen::VectorXd::Zero(p_.num_eq());
    s.lower_duals = Eigen::VectorXd::Zero(p_.num_ineq());
    s.upper_duals = Eigen::VectorXd::Zero(p_.num_ineq());
    s.active_set.assign(p_.num_ineq(), Bound::free);
    for (std::size_t j = 0; j < working_.size(); ++j) {
      const auto& w = working_[j];
      switch (w.kind) {
        case Kind::equality:
          s.eq_duals(w.index) = -w.sign * multipliers_[j];
          break;
        case Kind::lower:
          s.lower_duals(w.index) = multipliers_[j];
          s.active_set[w.index] = Bound::lower;
          break;
        case Kind::upper:
          s.upper_duals(w.index) = multipliers_[j];
          s.active_set[w.index] = Bound::upper;
          break;
      }
    }
    // Weakly active constraints are reported at their bound with a zero dual.
    for (int j = 0; j < p_.num_ineq(); ++j) {
      if (s.active_set[j] != Bound::free) continue;
      const double ax = p_.ineq_matrix.row(j).dot(x_);
      if (std::isfinite(p_.ineq_lower(j)) &&
          std::abs(ax - p_.ineq_lower(j)) <= bound_tolerance(tol_, p_.ineq_lower(j))) {
        s.active_set[j] = Bound::lower;
      } else if (std::isfinite(p_.ineq_upper(j)) &&
                 std::abs(ax - p_.ineq_upper(j)) <= bound_tolerance(tol_, p_.ineq_upper(j))) {
        s.active_set[j] = Bound::upper;
      }
    }
    s.iterations = iterations_;
    s.objective = p_.objective(x_);
    return s;
  }

  const Problem& p_;
  double tol_;
  int max_iterations_;
  Eigen::VectorXd inv_h_;
  Eigen::VectorXd scale_;
  Eigen::VectorXd x_;
  std::vector<Working> working_;
  std::vector<double> multipliers_;
  int iterations_ = 0;
};

}  // namespace

Problem Problem::with_variables(int n) {
  Problem p;
  p.hessian_diag = Eigen::VectorXd::Ones(n);
  p.linear = Eigen::VectorXd::Zero(n);
  p.eq_matrix = Eigen::MatrixXd::Zero(0, n);
  p.eq_rhs = Eigen::VectorXd::Zero(0);
  p.ineq_matrix = Eigen::MatrixXd::Zero(0, n);
  p.ineq_lower = Eigen::VectorXd::Zero(0);
  p.ineq_upper = Eigen::VectorXd::Zero(0);
  return p;
}

void Problem::validate() const {
  const auto n = hessian_diag.size();
  if (n == 0) throw std::invalid_argument("QP has no variables");
  if (linear.size() != n) throw std::invalid_argument("linear term has wrong length");
  if (eq_matrix.cols() != n || eq_matrix.rows() != eq_rhs.size()) {
    throw std::invalid_argument("equality block has inconsistent dimensions");
  }
  if (ineq_matrix.cols() != n || ineq_matrix.rows() != ineq_lower.size() ||
      ineq_matrix.rows() != ineq_upper.size()) {
    throw std::invalid_argument("range block has inconsistent dimensions");
  }
  for (Eigen::Index i = 0; i < n; ++i) {
    if (!(hessian_diag(i) > 0.0) || !std::isfinite(hessian_diag(i))) {
      throw std::invalid_argument("Hessian diagonal entry " + std::to_string(i) +
                                  " is not strictly positive");
    }
  }
  for (Eigen::Index j = 0; j < ineq_lower.size(); ++j) {
    if (ineq_lower(j) > ineq_upper(j)) {
      throw std::invalid_argument("range " + std::to_string(j) + " has lower > upper");
    }
  }
}

double Problem::objective(const Eigen::VectorXd& x) const {
  return 0.5 * x.dot(hessian_diag.cwiseProduct(x)) + linear.dot(x);
}

double KktResiduals::max() const {
  return std::max({stationarity, primal, dual, complementarity});
}

Solution solve(const Problem& problem, const Options& options) {
  problem.validate();
  return DualActiveSet(problem, options).run();
}

Solution enumerate_oracle(const Problem& problem, int max_ranges) {
  problem.validate();
  const int n = problem.num_vars();
  const int e = problem.num_eq();
  const int m = problem.num_ineq();
  if (m > max_ranges) {
    throw std::invalid_argument("enumeration oracle limited to " + std::to_string(max_ranges) +
                                " ranges");
  }
  long long combos = 1;
  for (int j = 0; j < m; ++j) combos *= 3;

  constexpr double kTol = 1e-9;
  std::vector<int> status(m);
  for (long long code = 0; code < combos; ++code) {
    long long rest = code;
    bool usable = true;
    std::vector<int> chosen;
    for (int j = 0; j < m; ++j) {
      status[j] = static_cast<int>(rest % 3);
      rest /= 3;
      if (status[j] == 1 && !std::isfinite(problem.ineq_lower(j))) usable = false;
      if (status[j] == 2 && !std::isfinite(problem.ineq_upper(j))) usable = false;
      if (status[j] != 0) chosen.push_back(j);
    }
    if (!usable) continue;

    const int k = e + static_cast<int>(chosen.size());
    Eigen::MatrixXd normals(n, k);
    Eigen::VectorXd rhs(k);
    for (int i = 0; i < e; ++i) {
      normals.col(i) = problem.eq_matrix.row(i).transpose();
      rhs(i) = problem.eq_rhs(i);
    }
    for (std::size_t c = 0; c < chosen.size(); ++c) {
      const int j = chosen[c];
      const double s = status[j] == 1 ? 1.0 : -1.0;
      normals.col(e + static_cast<int>(c)) = s * problem.ineq_matrix.row(j).transpose();
      rhs(e + static_cast<int>(c)) =
          status[j] == 1 ? problem.ineq_lower(j) : -problem.ineq_upper(j);
    }

    // [ H  -N ] [x]   [-g]
    // [ N'  0 ] [u] = [ b]
    Eigen::MatrixXd kkt = Eigen::MatrixXd::Zero(n + k, n + k);
    kkt.topLeftCorner(n, n) = problem.hessian_diag.asDiagonal();
    kkt.topRightCorner(n, k) = -normals;
    kkt.bottomLeftCorner(k, n) = normals.transpose();
    Eigen::VectorXd b(n + k);
    b << -problem.linear, rhs;
    Eigen::FullPivLU<Eigen::MatrixXd> lu(kkt);
    if (lu.rank() < n + k) continue;
    const Eigen::VectorXd sol = lu.solve(b);
    const Eigen::VectorXd x = sol.head(n);
    const Eigen::VectorXd u = sol.tail(k);

    bool ok = true;
    for (std::size_t c = 0; c < chosen.size() && ok; ++c) {
      if (u(e + static_cast<int>(c)) < -kTol) ok = false;
    }
    for (int j = 0; j < m && ok; ++j) {
      const double ax = problem.ineq_matrix.row(j).dot(x);
      if (ax < problem.ineq_lower(j) - bound_tolerance(kTol, problem.ineq_lower(j))) ok = false;
      if (ax > problem.ineq_upper(j) + bound_tolerance(kTol, problem.ineq_upper(j))) ok = false;
    }
    if (!ok) continue;

    Solution s;
    s.x = x;
    s.eq_duals = -u.head(e);
    s.lower_duals = Eigen::VectorXd::Zero(m);
    s.upper_duals = Eigen::VectorXd::Zero(m);
    s.active_set.assign(m, Bound::free);
    for (std::size_t c = 0; c < chosen.size(); ++c) {
      const int j = chosen[c];
      const double mult = std::max(0.0, u(e + static_cast<int>(c)));
      if (status[j] == 1) {
        s.lower_duals(j) = mult;
        s.active_set[j] = Bound::lower;
      } else {
        s.upper_duals(j) = mult;
        s.active_set[j] = Bound::upper;
      }
    }
    s.iterations = static_cast<int>(code);
    s.objective = problem.objective(x);
    return s;
  }
  throw InfeasibleError("no active-set assignment yields a feasible KKT point", -1, false);
}

KktResiduals kkt_residuals(const Problem& problem, const Solution& s) {
  KktResiduals r;
  Eigen::VectorXd grad = problem.hessian_diag.cwiseProduct(s.x) + problem.linear;
  if (problem.num_eq() > 0) grad += problem.eq_matrix.transpose() * s.eq_duals;
  if (problem.num_ineq() > 0) {
    grad += problem.ineq_matrix.transpose() * (s.upper_duals - s.lower_duals);
  }
  r.stationarity = grad.cwiseAbs().maxCoeff();

  if (problem.num_eq() > 0) {
    r.primal = (problem.eq_matrix * s.x - problem.eq_rhs).cwiseAbs().maxCoeff();
  }
  for (int j = 0; j < problem.num_ineq(); ++j) {
    const double ax = problem.ineq_matrix.row(j).dot(s.x);
    const double lo = problem.ineq_lower(j);
    const double up = problem.ineq_upper(j);
    r.primal = std::max({r.primal, lo - ax, ax - up});
    r.dual = std::max({r.dual, -s.lower_duals(j), -s.upper_duals(j)});
    const double gap_lo = std::isfinite(lo) ? s.lower_duals(j) * std::abs(ax - lo)
                                            : (s.lower_duals(j) > 0.0 ? kInf : 0.0);
    const double gap_up = std::isfinite(up) ? s.upper_duals(j) * std::abs(up - ax)
                                            : (s.upper_duals(j) > 0.0 ? kInf : 0.0);
    r.complementarity = std::max({r.complementarity, gap_lo, gap_up});
  }
  return r;
}

}  // namespace sharing::qp
