// Independent reference computations used only by the tests.
#pragma once

#include <algorithm>
#include <cmath>
#include <limits>
#include <optional>
#include <random>
#include <vector>

#include <Eigen/Dense>

#include "ofo/controller.hpp"
#include "ofo/plant.hpp"
#include "ofo/qp.hpp"

namespace oracle {

using ofo::Matrix;
using ofo::Vector;

struct EnumResult {
  Vector x;
  Vector lambda;
  double objective = std::numeric_limits<double>::infinity();
  bool found = false;
};

// Solves the KKT system for every subset of active inequalities and keeps the
// primal- and dual-feasible point with the lowest objective.
inline EnumResult enumerate_qp(const ofo::QpProblem& p) {
  const auto n = p.g.size();
  const auto m = p.A_ineq.rows();
  const auto me = p.A_eq.rows();
  EnumResult best;
  for (long mask = 0; mask < (1L << m); ++mask) {
    std::vector<int> act;
    for (int i = 0; i < m; ++i) {
      if (mask & (1L << i)) act.push_back(i);
    }
    const auto k = static_cast<Eigen::Index>(act.size());
    Matrix kkt = Matrix::Zero(n + k + me, n + k + me);
    Vector rhs = Vector::Zero(n + k + me);
    kkt.topLeftCorner(n, n) = p.H;
    rhs.head(n) = -p.g;
    for (Eigen::Index j = 0; j < k; ++j) {
      kkt.block(0, n + j, n, 1) = p.A_ineq.row(act[j]).transpose();
      kkt.block(n + j, 0, 1, n) = p.A_ineq.row(act[j]);
      rhs(n + j) = p.b_ineq(act[j]);
    }
    if (me > 0) {
      kkt.block(0, n + k, n, me) = p.A_eq.transpose();
      kkt.block(n + k, 0, me, n) = p.A_eq;
      rhs.tail(me) = p.b_eq;
    }
    const Eigen::FullPivLU<Matrix> lu(kkt);
    if (!lu.isInvertible()) continue;
    const Vector sol = lu.solve(rhs);
    const Vector x = sol.head(n);
    if (m > 0 && (p.A_ineq * x - p.b_ineq).maxCoeff() > 1e-9) continue;
    if (k > 0 && sol.segment(n, k).minCoeff() < -1e-9) continue;
    const double obj = p.objective(x);
    if (obj < best.objective - 1e-12) {
      best.objective = obj;
      best.x = x;
      best.lambda = Vector::Zero(m);
      for (Eigen::Index j = 0; j < k; ++j) best.lambda(act[j]) = sol(n + j);
      best.found = true;
    }
  }
  return best;
}

// Feasible random QP with a positive definite Hessian.
inline ofo::QpProblem random_qp(std::mt19937_64& rng, int n, int m) {
  std::normal_distribution<double> normal;
  std::uniform_real_distribution<double> unif(0.0, 1.0);
  ofo::QpProblem p = ofo::QpProblem::empty(n);
  Matrix l = Matrix::NullaryExpr(n, n, [&] { return normal(rng); });
  p.H = l * l.transpose() + 0.1 * Matrix::Identity(n, n);
  p.H = 0.5 * (p.H + p.H.transpose());
  p.g = Vector::NullaryExpr(n, [&] { return 3.0 * normal(rng); });
  const Vector x0 = Vector::NullaryExpr(n, [&] { return normal(rng); });
  p.A_ineq = Matrix::NullaryExpr(m, n, [&] { return normal(rng); });
  p.b_ineq = p.A_ineq * x0 + Vector::NullaryExpr(m, [&] { return unif(rng); });
  return p;
}

// Brute force over a grid of s in the box for the lower-level objective.
struct GridResult {
  double objective = std::numeric_limits<double>::infinity();
  Vector s;
};

inline double lower_value(const Vector& w, const Vector& s, const Vector& v, const Vector& grad,
                          const ofo::PeParameters& prm) {
  const double gs = grad.dot(s);
  const double p = v.dot(prm.alpha * w + s);
  return 0.5 * gs * gs + prm.gamma * std::max(std::abs(p), prm.epsilon);
}

inline GridResult grid_lower3(const Vector& w, const Vector& v, const Vector& grad,
                              const ofo::PeParameters& prm, double h) {
  GridResult best;
  const int steps = static_cast<int>(std::lround((prm.s_hi - prm.s_lo) / h));
  Vector s(3);
  for (int i = 0; i <= steps; ++i) {
    s(0) = prm.s_lo + i * h;
    for (int j = 0; j <= steps; ++j) {
      s(1) = prm.s_lo + j * h;
      for (int k = 0; k <= steps; ++k) {
        s(2) = prm.s_lo + k * h;
        const double f = lower_value(w, s, v, grad, prm);
        if (f < best.objective) {
          best.objective = f;
          best.s = s;
        }
      }
    }
  }
  return best;
}

// Single-level form of the bilevel step: the lower program is replaced by its
// KKT conditions and every active/inactive choice for its 2n+3 inequality
// rows is solved as a convex QP in (w, s, z+, z-, lambda, mu). The least
// ||w + grad||^2 over all branches is the global optimum.
inline double mpcc_enumeration(const Vector& u, const Vector& grad, const ofo::PolyhedralSet& in,
                               const Vector& v, const ofo::PeParameters& prm) {
  const int n = static_cast<int>(u.size());
  const int ml = 2 * n + 3;
  const int nl = n + 2;
  // Variable layout: w[n], x_l = (s[n], z+, z-), lambda[ml], mu.
  const int iw = 0;
  const int ix = n;
  const int il = n + nl;
  const int imu = il + ml;
  const int nv = imu + 1;

  const ofo::QpProblem lower = ofo::lower_problem(Vector::Zero(n), v, grad, prm);
  const Matrix& al = lower.A_ineq;
  const Vector& bl = lower.b_ineq;
  const Vector eq_row = lower.A_eq.row(0).transpose();  // (-v, 1, -1)

  double best = std::numeric_limits<double>::infinity();
  for (int mask = 0; mask < (1 << ml); ++mask) {
    ofo::QpProblem qp = ofo::QpProblem::empty(nv);
    qp.H.block(iw, iw, n, n) = 2.0 * Matrix::Identity(n, n);
    qp.g.segment(iw, n) = 2.0 * grad;

    // Upper feasibility: A (u + alpha w + s) <= b.
    for (int r = 0; r < in.rows(); ++r) {
      Vector row = Vector::Zero(nv);
      row.segment(iw, n) = prm.alpha * in.A.row(r).transpose();
      row.segment(ix, n) = in.A.row(r).transpose();
      qp.add_inequality(row, in.b(r) - in.A.row(r).dot(u));
    }
    // Lower primal feasibility.
    for (int r = 0; r < ml; ++r) {
      Vector row = Vector::Zero(nv);
      row.segment(ix, nl) = al.row(r).transpose();
      if (mask & (1 << r)) {
        qp.add_equality(row, bl(r));
      } else {
        qp.add_inequality(row, bl(r));
      }
    }
    {
      Vector row = Vector::Zero(nv);
      row.segment(ix, nl) = eq_row;
      row.segment(iw, n) = -prm.alpha * v;
      qp.add_equality(row, 0.0);
    }
    // Stationarity: H_l x_l + g_l + A_l' lambda + eq_row mu = 0.
    for (int c = 0; c < nl; ++c) {
      Vector row = Vector::Zero(nv);
      row.segment(ix, nl) = lower.H.row(c).transpose();
      row.segment(il, ml) = al.col(c);
      row(imu) = eq_row(c);
      qp.add_equality(row, -lower.g(c));
    }
    // Dual feasibility and the complementarity branch.
    for (int r = 0; r < ml; ++r) {
      Vector row = Vector::Zero(nv);
      row(il + r) = 1.0;
      if (mask & (1 << r)) {
        qp.add_inequality(-row, 0.0);
      } else {
        qp.add_equality(row, 0.0);
      }
    }
    const ofo::QpSolution sol = ofo::solve_qp(qp);
    if (!sol.optimal()) continue;
    const double obj = (sol.x.segment(iw, n) + grad).squaredNorm();
    best = std::min(best, obj);
  }
  return best;
}

// Static optimum of the gas-lift problem for a given cap, from the Table 1
// curves written out here independently of the plant module. The choke terms
// are linear with positive net price, so every choke sits at 1; injection
// follows from marginal-profit equalization with bisection on the shared
// multiplier.
struct StaticOptimum {
  double cost = 0.0;
  std::vector<double> q_inj;
};

inline StaticOptimum gas_lift_optimum(double cap) {
  struct W {
    double a, b, c, d, rg, rw;
  };
  const W wells[] = {{5, 25, .05, 2, .10, .30},
                     {6, 35, .15, 3, .12, .12},
                     {5, 20, .025, 1, .10, .20},
                     {10, 40, .175, 5, .10, .20}};
  const double po = 5, pg = 1, pw = 0.3, pinj = 0.7, norm = 34.5;
  auto net = [&](const W& w) { return po + pg * w.rg - pw * w.rw; };
  auto marginal = [&](const W& w, double q) {
    return net(w) * (w.a * w.b / ((1 + w.b * q) * std::log(10.0)) - 2 * w.c * q) / norm - pinj;
  };
  auto best_q = [&](const W& w, double lam) {
    if (marginal(w, 0.0) <= lam) return 0.0;
    if (marginal(w, 1.0) >= lam) return 1.0;
    double lo = 0.0, hi = 1.0;
    for (int it = 0; it < 200; ++it) {
      const double mid = 0.5 * (lo + hi);
      (marginal(w, mid) > lam ? lo : hi) = mid;
    }
    return 0.5 * (lo + hi);
  };
  auto total = [&](double lam) {
    double s = 0;
    for (const auto& w : wells) s += best_q(w, lam);
    return s;
  };
  double lam = 0.0;
  if (total(0.0) > cap) {
    double lo = 0.0, hi = 100.0;
    for (int it = 0; it < 200; ++it) {
      const double mid = 0.5 * (lo + hi);
      (total(mid) > cap ? lo : hi) = mid;
    }
    lam = hi;
  }
  StaticOptimum out;
  for (const auto& w : wells) {
    const double q = best_q(w, lam);
    const double oil = (w.a * std::log10(1 + w.b * q) - w.c * q * q + w.d) / norm;
    out.cost += -net(w) * oil + pinj * q;
    out.q_inj.push_back(q);
  }
  return out;
}

inline Matrix finite_difference_jacobian(const ofo::FieldModel& field, const Vector& u,
                                         double h = 1e-6) {
  const Vector y0 = ofo::evaluate(field, u);
  Matrix jac(y0.size(), u.size());
  for (int j = 0; j < u.size(); ++j) {
    Vector up = u, um = u;
    const double hp = std::min(h, 1.0 - u(j));
    const double hm = std::min(h, u(j));
    up(j) += hp;
    um(j) -= hm;
    jac.col(j) = (ofo::evaluate(field, up) - ofo::evaluate(field, um)) / (hp + hm);
  }
  return jac;
}

}  // namespace oracle
