#pragma once

#include <optional>
#include <string_view>
#include <vector>

#include "ofo/types.hpp"

namespace ofo {

/// Dense convex quadratic program
///
///   minimize    1/2 x' H x + g' x
///   subject to  A_ineq x <= b_ineq
///               A_eq   x  = b_eq
///
/// H must be symmetric positive semi-definite. Any of the constraint blocks may
/// have zero rows.
struct QpProblem {
  Matrix H;
  Vector g;
  Matrix A_ineq;
  Vector b_ineq;
  Matrix A_eq;
  Vector b_eq;

  /// Problem in n variables with no objective and no constraints.
  static QpProblem empty(int n);

  int num_variables() const { return static_cast<int>(g.size()); }
  void add_inequality(const Vector& row, double rhs);
  void add_equality(const Vector& row, double rhs);

  /// Throws ConfigError on inconsistent shapes or a non-symmetric H.
  void validate() const;
  double objective(const Vector& x) const;
};

enum class QpStatus { optimal, infeasible, unbounded, max_iter };

std::string_view to_string(QpStatus status);

struct QpSolution {
  Vector x;
  Vector lambda;  // one per inequality row, >= 0
  Vector mu;      // one per equality row
  QpStatus status = QpStatus::max_iter;
  int iterations = 0;
  /// Smallest achievable maximum constraint violation; positive certifies
  /// infeasibility.
  double infeasibility = 0.0;
  /// Inequality rows held active at termination, in the order they entered.
  std::vector<int> active_set;

  bool optimal() const { return status == QpStatus::optimal; }
};

struct QpOptions {
  /// 0 picks a bound proportional to the problem size.
  int max_iter = 0;
  /// Used as the starting point when it is feasible.
  std::optional<Vector> warm_start;
};

/// Primal active-set solver for small dense problems.
///
/// Finds a feasible start with a max-violation phase-one program when the warm
/// start (or the minimum-norm equality solution) is infeasible. Zero-curvature
/// directions of the reduced Hessian are followed as rays, so singular H is
/// handled without perturbing the objective. Among equally blocking
/// constraints the lowest index enters the working set. Deterministic.
QpSolution solve_qp(const QpProblem& problem, const QpOptions& options = {});

/// Max of stationarity, primal infeasibility, multiplier negativity and
/// complementarity violations (infinity norms). Zero at an exact optimum.
double kkt_residual(const QpProblem& problem, const QpSolution& solution);

}  // namespace ofo
