#include <algorithm>
#include <cmath>
#include <limits>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include <Eigen/SVD>

#include "ofo/controller.hpp"
#include "ofo/errors.hpp"

namespace ofo {

namespace {

// Weight of |s - s_ref|^2 in the upper program over (w, s); only breaks ties
// among equally good lower-level solutions.
constexpr double kTieBreakWeight = 1e-6;

// Multiples of the largest |v' s| over the box at which extra fixed-point
// starts are seeded.
constexpr double kSeedScales[] = {0.5, 1.5, 3.0};

void append_rows(QpProblem& qp, const Matrix& rows, const Vector& rhs) {
  const auto m = qp.A_ineq.rows();
  qp.A_ineq.conservativeResize(m + rows.rows(), Eigen::NoChange);
  qp.b_ineq.conservativeResize(m + rhs.size());
  qp.A_ineq.bottomRows(rows.rows()) = rows;
  qp.b_ineq.tail(rhs.size()) = rhs;
}

// Lifted magnitude split for a given excitation p = v' (alpha w + s).
std::pair<double, double> lift(double p, double epsilon) {
  if (std::abs(p) >= epsilon) return {std::max(p, 0.0), std::max(-p, 0.0)};
  return {0.5 * (epsilon + p), 0.5 * (epsilon - p)};
}

double excitation(const Vector& w, const Vector& s, const Vector& v_perp, double alpha) {
  const Vector delta = alpha * w + s;
  return v_perp.dot(delta);
}

// Pushes s along v_perp until |v' (alpha w + s)| >= epsilon holds in floating
// point. Only rounding-sized deficits are closed; a point that sits inside the
// relaxation by more than that is the lower optimum and is left alone.
void enforce_margin(const Vector& w, Vector& s, const Vector& v_perp, const PeParameters& prm,
                    double preferred_sign) {
  for (int attempt = 0; attempt < 8; ++attempt) {
    const double p = excitation(w, s, v_perp, prm.alpha);
    if (std::abs(p) >= prm.epsilon) return;
    const double sign = p > 0 ? 1.0 : (p < 0 ? -1.0 : preferred_sign);
    const double deficit = prm.epsilon - std::abs(p);
    if (deficit > 1e-6 * prm.epsilon) return;
    const double step = deficit * (1.0 + 1e-6) + 4.0 * std::numeric_limits<double>::epsilon();
    s = (s + sign * step * v_perp).cwiseMax(prm.s_lo).cwiseMin(prm.s_hi);
  }
}

// The lower objective only sees grad' s and z+ + z-, so its optimal set is a
// face. When the solver returns a point inside the relaxation (|p| < epsilon
// with both z+ and z- positive), slide s along that face, keeping grad' s, the
// active bounds and the rows of `keep` fixed, until |p| = epsilon. Objective
// and multipliers are unchanged by the move.
void move_to_margin(const Vector& w, Vector& s, const Vector& grad, const Vector& v_perp,
                    const PeParameters& prm, double sign, const Matrix& keep) {
  const auto n = static_cast<int>(s.size());
  std::vector<char> fixed(n, 0);
  for (int i = 0; i < n; ++i) {
    fixed[i] = (s(i) >= prm.s_hi - 1e-12 || s(i) <= prm.s_lo + 1e-12) ? 1 : 0;
  }
  for (int pass = 0; pass < n; ++pass) {
    const double p = excitation(w, s, v_perp, prm.alpha);
    if (std::abs(p) >= prm.epsilon) return;
    const double target = (p > 0 ? 1.0 : (p < 0 ? -1.0 : sign)) * prm.epsilon;
    Matrix rows(keep.rows() + 1, n);
    rows << grad.transpose(), keep;
    Vector d = v_perp;
    for (int i = 0; i < n; ++i) {
      if (!fixed[i]) continue;
      d(i) = 0.0;
      rows.col(i).setZero();
    }
    Eigen::JacobiSVD<Matrix> svd(rows.transpose(), Eigen::ComputeThinU);
    const Vector& sv = svd.singularValues();
    for (int k = 0; k < sv.size(); ++k) {
      if (sv(k) <= 1e-12 * std::max(1.0, sv(0))) break;
      d -= svd.matrixU().col(k).dot(d) * svd.matrixU().col(k);
    }
    const double slope = v_perp.dot(d);
    if (std::abs(slope) <= 1e-12) return;
    double t = (target - p) / slope;
    int block = -1;
    for (int i = 0; i < n; ++i) {
      if (fixed[i] || d(i) == 0.0) continue;
      const double limit = (t * d(i) > 0 ? prm.s_hi : prm.s_lo) - s(i);
      if (std::abs(t * d(i)) > std::abs(limit)) {
        t = limit / d(i);
        block = i;
      }
    }
    s += t * d;
    if (block < 0) return;
    s(block) = t * d(block) > 0 ? prm.s_hi : prm.s_lo;
    fixed[block] = 1;
  }
}

double lower_objective(const Vector& w, const Vector& s, const Vector& v_perp, const Vector& grad,
                       const PeParameters& prm) {
  const double gs = grad.dot(s);
  const double p = excitation(w, s, v_perp, prm.alpha);
  return 0.5 * gs * gs + prm.gamma * std::max(std::abs(p), prm.epsilon);
}

// Re-lifts s at w and evaluates its KKT residual against the supplied
// lower-level multipliers.
PerturbationSolution certify(const Vector& w, Vector s, const Vector& v_perp, const Vector& grad,
                             const PeParameters& prm, const PerturbationSolution& lower) {
  const double sign = lower.z_plus >= lower.z_minus ? 1.0 : -1.0;
  // The solver accepts bound violations up to its feasibility tolerance.
  s = s.cwiseMax(prm.s_lo).cwiseMin(prm.s_hi);
  enforce_margin(w, s, v_perp, prm, sign);
  PerturbationSolution out;
  out.s = s;
  std::tie(out.z_plus, out.z_minus) = lift(excitation(w, s, v_perp, prm.alpha), prm.epsilon);
  out.lambda = lower.lambda;
  out.mu = lower.mu;

  const QpProblem qp = lower_problem(w, v_perp, grad, prm);
  QpSolution candidate;
  candidate.x.resize(s.size() + 2);
  candidate.x << s, out.z_plus, out.z_minus;
  candidate.lambda = out.lambda;
  candidate.mu = Vector::Constant(1, out.mu);
  out.objective = qp.objective(candidate.x);
  out.kkt_residual = kkt_residual(qp, candidate);
  return out;
}

}  // namespace

QpProblem lower_problem(const Vector& w, const Vector& v_perp, const Vector& grad,
                        const PeParameters& params) {
  const auto n = static_cast<int>(w.size());
  if (v_perp.size() != n || grad.size() != n) throw ConfigError("lower_problem: size mismatch");
  QpProblem qp = QpProblem::empty(n + 2);
  qp.H.topLeftCorner(n, n) = grad * grad.transpose();
  qp.g(n) = params.gamma;
  qp.g(n + 1) = params.gamma;

  qp.A_ineq = Matrix::Zero(2 * n + 3, n + 2);
  qp.b_ineq = Vector::Zero(2 * n + 3);
  for (int i = 0; i < n; ++i) {
    qp.A_ineq(i, i) = 1.0;
    qp.b_ineq(i) = params.s_hi;
    qp.A_ineq(n + i, i) = -1.0;
    qp.b_ineq(n + i) = -params.s_lo;
  }
  qp.A_ineq(2 * n, n) = -1.0;
  qp.A_ineq(2 * n, n + 1) = -1.0;
  qp.b_ineq(2 * n) = -params.epsilon;
  qp.A_ineq(2 * n + 1, n) = -1.0;
  qp.A_ineq(2 * n + 2, n + 1) = -1.0;

  // z+ - z- - v' s = alpha v' w
  Vector row = Vector::Zero(n + 2);
  row.head(n) = -v_perp;
  row(n) = 1.0;
  row(n + 1) = -1.0;
  qp.add_equality(row, params.alpha * v_perp.dot(w));
  return qp;
}

PerturbationSolution solve_lower(const Vector& w, const Vector& v_perp, const Vector& grad,
                                 const PeParameters& params) {
  const auto n = static_cast<int>(w.size());
  if (std::abs(v_perp.norm() - 1.0) > 1e-12) throw ConfigError("v_perp must be a unit vector");
  const QpProblem qp = lower_problem(w, v_perp, grad, params);

  // Start from the smallest s that already meets the margin, with one-sided z.
  const double p0 = params.alpha * v_perp.dot(w);
  const double sign = p0 >= 0 ? 1.0 : -1.0;
  Vector s0 = Vector::Zero(n);
  if (std::abs(p0) < params.epsilon) {
    s0 = ((sign * params.epsilon - p0) * v_perp).cwiseMax(params.s_lo).cwiseMin(params.s_hi);
  }
  const double p = p0 + v_perp.dot(s0);
  const auto [zp, zm] = lift(p, params.epsilon);
  QpOptions options;
  options.warm_start = Vector(n + 2);
  *options.warm_start << s0, zp, zm;

  const QpSolution sol = solve_qp(qp, options);
  if (!sol.optimal()) {
    throw NumericalError(std::string("lower-level program ") + std::string(to_string(sol.status)));
  }
  PerturbationSolution raw;
  raw.s = sol.x.head(n).cwiseMax(params.s_lo).cwiseMin(params.s_hi);
  raw.z_plus = sol.x(n);
  raw.z_minus = sol.x(n + 1);
  move_to_margin(w, raw.s, grad, v_perp, params, raw.z_plus >= raw.z_minus ? 1.0 : -1.0,
                 Matrix(0, n));
  raw.lambda = sol.lambda;
  raw.mu = sol.mu(0);
  return certify(w, raw.s, v_perp, grad, params, raw);
}

PeStepResult solve_pe_step(const Vector& u, const Vector& y, const Matrix& jac,
                           const CostModel& cost, const ConstraintSpec& spec,
                           const ExcitationWindow& window, const PeParameters& params) {
  params.validate();
  const auto n = static_cast<int>(u.size());
  const Vector grad = descent_gradient(u, y, jac, cost);
  const NullspaceResult ns = left_nullspace(window);
  const Vector& v = ns.v_perp;
  const double alpha = params.alpha;

  PeStepResult result;
  result.v_perp = v;
  result.degenerate_window = ns.degenerate;

  auto upper_with_fixed_s = [&](const Vector& s) -> std::optional<Vector> {
    // u + alpha w + s in U  <=>  (u + s) + alpha w in U; likewise for Y.
    const Vector u_shift = u + s;
    const Vector y_shift = y + jac * s;
    try {
      return project_step(grad, Vector::Zero(n), spec, jac, u_shift, y_shift, alpha);
    } catch (const NumericalError&) {
      return std::nullopt;
    }
  };

  // Upper program restricted to one complementarity branch of the lower
  // program: the lower constraints active at `lower` are kept as equalities
  // with free nonnegative multipliers, the others as inequalities with zero
  // multipliers, and the lower stationarity conditions are imposed. Within
  // the branch every feasible s is lower-optimal for its own w, so w may move
  // the lower solution along. `mirror` swaps which of z+ and z- is zero.
  const QpProblem lower_shape = lower_problem(Vector::Zero(n), v, grad, params);
  auto branch_of = [&](const PerturbationSolution& lower, bool mirror) {
    const auto& al = lower_shape.A_ineq;
    const Vector& bl = lower_shape.b_ineq;
    Vector xl(n + 2);
    xl << lower.s, lower.z_plus, lower.z_minus;
    const Vector slack = bl - al * xl;
    std::vector<char> active(al.rows(), 0);
    for (Eigen::Index r = 0; r < al.rows(); ++r) {
      active[r] = slack(r) <= 1e-9 * std::max(1.0, std::abs(bl(r))) || lower.lambda(r) > 1e-12;
    }
    if (mirror) std::swap(active[2 * n + 1], active[2 * n + 2]);
    return active;
  };
  auto upper_on_branch = [&](const Vector& w_start, const PerturbationSolution& lower,
                             const std::vector<char>& active)
      -> std::optional<std::pair<Vector, Vector>> {
    const auto& al = lower_shape.A_ineq;
    const Vector& bl = lower_shape.b_ineq;
    const auto ml = static_cast<int>(al.rows());
    const int nl = n + 2;
    const int iw = 0, is = n, il = n + nl, imu = il + ml, nv = imu + 1;
    Vector xl(nl);
    xl << lower.s, lower.z_plus, lower.z_minus;

    QpProblem qp = QpProblem::empty(nv);
    qp.H.block(iw, iw, n, n) = 2.0 * Matrix::Identity(n, n);
    qp.g.segment(iw, n) = 2.0 * grad;
    qp.H.block(is, is, n, n) = 2.0 * kTieBreakWeight * Matrix::Identity(n, n);
    qp.g.segment(is, n) = -2.0 * kTieBreakWeight * lower.s;

    const auto& in = spec.input_set;
    Matrix rows = Matrix::Zero(in.rows(), nv);
    rows.middleCols(iw, n) = alpha * in.A;
    rows.middleCols(is, n) = in.A;
    append_rows(qp, rows, in.b - in.A * u);
    if (spec.output_set) {
      const auto& out = *spec.output_set;
      const Matrix aj = out.A * jac;
      Matrix out_rows = Matrix::Zero(out.rows(), nv);
      out_rows.middleCols(iw, n) = alpha * aj;
      out_rows.middleCols(is, n) = aj;
      append_rows(qp, out_rows, out.b - out.A * y);
    }

    for (int r = 0; r < ml; ++r) {
      Vector row = Vector::Zero(nv);
      row.segment(is, nl) = al.row(r).transpose();
      Vector dual = Vector::Zero(nv);
      dual(il + r) = 1.0;
      if (active[r]) {
        qp.add_equality(row, bl(r));
        qp.add_inequality(-dual, 0.0);
      } else {
        qp.add_inequality(row, bl(r));
        qp.add_equality(dual, 0.0);
      }
    }
    const Vector eq_row = lower_shape.A_eq.row(0).transpose();
    {
      Vector row = Vector::Zero(nv);
      row.segment(is, nl) = eq_row;
      row.segment(iw, n) = -alpha * v;
      qp.add_equality(row, 0.0);
    }
    for (int c = 0; c < nl; ++c) {
      Vector row = Vector::Zero(nv);
      row.segment(is, nl) = lower_shape.H.row(c).transpose();
      row.segment(il, ml) = al.col(c);
      row(imu) = eq_row(c);
      qp.add_equality(row, -lower_shape.g(c));
    }

    QpOptions options;
    options.warm_start = Vector(nv);
    *options.warm_start << w_start, xl, lower.lambda, lower.mu;
    const QpSolution sol = solve_qp(qp, options);
    if (!sol.optimal()) return std::nullopt;
    return std::make_pair(Vector(sol.x.segment(iw, n)), Vector(sol.x.segment(is, n)));
  };

  auto lower_sign = [](const PerturbationSolution& lower) {
    return lower.z_plus >= lower.z_minus ? 1.0 : -1.0;
  };
  auto sign_free = [&](const PerturbationSolution& lower) {
    return std::abs(lower.mu) <= 1e-12 * std::max(1.0, params.gamma) &&
           lower.z_plus + lower.z_minus <= params.epsilon * (1.0 + 1e-9);
  };

  std::optional<std::pair<Vector, PerturbationSolution>> best;
  double best_objective = std::numeric_limits<double>::infinity();
  int current_start = 0;
  int best_start = 0;
  std::vector<std::pair<int, bool>> runs;

  // Keeps (w, s) if s is optimal for the lower program at w (certified with
  // the multipliers of `lower`, solved at the same w) and the move is feasible.
  auto consider = [&](const Vector& w, const Vector& s_in, const PerturbationSolution& lower,
                      double sign) {
    // Constraints of U (and Y) that are tight at the move stay tight while s
    // slides to the margin.
    Vector s = s_in.cwiseMax(params.s_lo).cwiseMin(params.s_hi);
    const auto& in = spec.input_set;
    const Vector slack_u = in.b - in.A * (u + alpha * w + s);
    Matrix keep(0, n);
    auto keep_tight = [&](const Matrix& a, const Vector& slack) {
      for (Eigen::Index r = 0; r < a.rows(); ++r) {
        if (slack(r) > 1e-8) continue;
        keep.conservativeResize(keep.rows() + 1, Eigen::NoChange);
        keep.row(keep.rows() - 1) = a.row(r);
      }
    };
    keep_tight(in.A, slack_u);
    if (spec.output_set) {
      const auto& out = *spec.output_set;
      const Matrix aj = out.A * jac;
      keep_tight(aj, out.b - out.A * (y + alpha * jac * w + jac * s));
    }
    move_to_margin(w, s, grad, v, params, sign, keep);
    const PerturbationSolution cert = certify(w, s, v, grad, params, lower);
    const double tol = 1e-10 * std::max(1.0, std::abs(lower.objective));
    if (lower_objective(w, cert.s, v, grad, params) > lower.objective + tol) return;
    if (cert.kkt_residual > 1e-6) return;
    const Vector u_next = u + alpha * w + cert.s;
    if (!spec.input_set.contains(u_next, 1e-11)) return;
    if (spec.output_set &&
        !spec.output_set->contains(y + alpha * jac * w + jac * cert.s, 1e-11)) {
      return;
    }
    const double obj = (w + grad).squaredNorm();
    if (obj < best_objective) {
      best_objective = obj;
      best = std::make_pair(w, cert);
      best_start = current_start;
    }
  };

  const std::optional<Vector> w0 = upper_with_fixed_s(Vector::Zero(n));
  if (!w0) throw NumericalError("upper-level program infeasible with zero perturbation");

  // A branch program has a unique w, so a start that reaches a branch some
  // earlier iteration already solved would only retrace that path.
  std::set<std::vector<char>> visited;

  // Fixed-point iteration from (w_init, s_init). The bilevel program is not
  // convex, so it is run from more than one start and the best certified
  // point wins.
  auto run_from = [&](Vector w, Vector s, int start) {
    current_start = start;
    int iterations = 0;
    bool converged = false;
    for (int k = 1; k <= params.fp_max_iter; ++k) {
      iterations = k;
      const PerturbationSolution lower = solve_lower(w, v, grad, params);
      const double sign = lower_sign(lower);
      consider(w, s, lower, sign);
      consider(w, lower.s, lower, sign);

      // With a free multiplier on the lifting row the lower program cannot
      // tell +epsilon from -epsilon, so both faces are tried.
      std::optional<std::pair<Vector, Vector>> face;
      double face_objective = std::numeric_limits<double>::infinity();
      bool retraced = false;
      for (bool mirror : {false, true}) {
        if (mirror && !sign_free(lower)) break;
        const auto branch = branch_of(lower, mirror);
        if (!visited.insert(branch).second) {
          retraced = true;
          continue;
        }
        auto cand = upper_on_branch(w, lower, branch);
        if (!cand) continue;
        const double obj = (cand->first + grad).squaredNorm();
        if (obj < face_objective) {
          face_objective = obj;
          face = std::move(cand);
        }
      }

      if (!face && retraced) break;
      Vector w_next;
      Vector s_next;
      if (face) {
        std::tie(w_next, s_next) = std::move(*face);
      } else if (auto w_fixed = upper_with_fixed_s(lower.s)) {
        w_next = std::move(*w_fixed);
        s_next = lower.s;
      } else {
        break;
      }
      const double change =
          std::max((w_next - w).cwiseAbs().maxCoeff(), (s_next - s).cwiseAbs().maxCoeff());
      w = std::move(w_next);
      s = std::move(s_next);
      if (change <= params.fp_tol) {
        converged = true;
        break;
      }
    }
    const PerturbationSolution lower = solve_lower(w, v, grad, params);
    consider(w, s, lower, lower_sign(lower));
    consider(w, lower.s, lower, lower_sign(lower));
    runs.push_back({iterations, converged});
  };

  run_from(*w0, Vector::Zero(n), 0);
  // Second start: s takes back the part of the free step -alpha grad that
  // the constraints cut off, and w is re-projected around it.
  const Vector s_back = (alpha * (*w0 + grad)).cwiseMax(params.s_lo).cwiseMin(params.s_hi);
  if (s_back.cwiseAbs().maxCoeff() > params.fp_tol) {
    if (auto w_back = upper_with_fixed_s(s_back)) run_from(*w_back, s_back, 1);
  }
  // Third start: no step at all. Near it the lower program can cancel the
  // excitation with a tiny s, a branch the other starts may never visit.
  run_from(Vector::Zero(n), Vector::Zero(n), 2);
  // Further starts spread over the excitation of the step itself,
  // p0 = alpha v' w. The lower solution depends on w only through p0, and its
  // branch changes where s can no longer cancel p0.
  double reach = 0.0;
  for (int i = 0; i < n; ++i) reach += std::max(v(i) * params.s_hi, v(i) * params.s_lo);
  int start = 3;
  for (double scale : kSeedScales) {
    for (double sg : {1.0, -1.0}) {
      const Vector w_seed = (sg * scale * reach + sg * params.epsilon) / alpha * v;
      const PerturbationSolution lower = solve_lower(w_seed, v, grad, params);
      const auto branch = branch_of(lower, false);
      if (visited.count(branch) == 0) {
        if (auto cand = upper_on_branch(w_seed, lower, branch)) {
          run_from(cand->first, cand->second, start);
        }
      }
      ++start;
    }
  }
  result.fp_iterations = runs[best ? best_start : 0].first;
  result.converged = runs[best ? best_start : 0].second;

  if (!best) {
    result.fallback = true;
    result.w = *w0;
    const PerturbationSolution lower = solve_lower(*w0, v, grad, params);
    PerturbationSolution zero;
    zero.s = Vector::Zero(n);
    std::tie(zero.z_plus, zero.z_minus) =
        lift(excitation(*w0, zero.s, v, alpha), params.epsilon);
    zero.lambda = lower.lambda;
    zero.mu = lower.mu;
    zero.objective = lower_objective(*w0, zero.s, v, grad, params);
    zero.kkt_residual = std::numeric_limits<double>::infinity();
    result.perturbation = zero;
    result.upper_objective = (*w0 + grad).squaredNorm();
    return result;
  }
  result.w = best->first;
  result.perturbation = best->second;
  result.upper_objective = best_objective;
  return result;
}

}  // namespace ofo
