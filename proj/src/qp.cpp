#include "ofo/qp.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

#include "ofo/errors.hpp"

namespace ofo {

QpProblem QpProblem::empty(int n) {
  return {Matrix::Zero(n, n), Vector::Zero(n), Matrix::Zero(0, n), Vector::Zero(0),
          Matrix::Zero(0, n), Vector::Zero(0)};
}

namespace {

void append_row(Matrix& a, Vector& b, const Vector& row, double rhs) {
  const auto m = a.rows();
  a.conservativeResize(m + 1, Eigen::NoChange);
  b.conservativeResize(m + 1);
  a.row(m) = row.transpose();
  b(m) = rhs;
}

double inf_norm(const Vector& v) { return v.size() == 0 ? 0.0 : v.cwiseAbs().maxCoeff(); }

double max_violation(const Matrix& a, const Vector& b, const Vector& x) {
  if (a.rows() == 0) return 0.0;
  return std::max(0.0, (a * x - b).maxCoeff());
}

}  // namespace

void QpProblem::add_inequality(const Vector& row, double rhs) {
  append_row(A_ineq, b_ineq, row, rhs);
}

void QpProblem::add_equality(const Vector& row, double rhs) { append_row(A_eq, b_eq, row, rhs); }

void QpProblem::validate() const {
  const auto n = g.size();
  if (H.rows() != n || H.cols() != n) throw ConfigError("qp: H must be n x n");
  if (A_ineq.cols() != n || A_ineq.rows() != b_ineq.size()) {
    throw ConfigError("qp: inequality block has inconsistent shape");
  }
  if (A_eq.cols() != n || A_eq.rows() != b_eq.size()) {
    throw ConfigError("qp: equality block has inconsistent shape");
  }
  if (n > 0) {
    const double scale = std::max(1.0, H.cwiseAbs().maxCoeff());
    if ((H - H.transpose()).cwiseAbs().maxCoeff() > 1e-12 * scale) {
      throw ConfigError("qp: H is not symmetric");
    }
  }
  if (!H.allFinite() || !g.allFinite() || !A_ineq.allFinite() || !b_ineq.allFinite() ||
      !A_eq.allFinite() || !b_eq.allFinite()) {
    throw ConfigError("qp: non-finite problem data");
  }
}

double QpProblem::objective(const Vector& x) const { return 0.5 * x.dot(H * x) + g.dot(x); }

std::string_view to_string(QpStatus status) {
  switch (status) {
    case QpStatus::optimal: return "optimal";
    case QpStatus::infeasible: return "infeasible";
    case QpStatus::unbounded: return "unbounded";
    case QpStatus::max_iter: return "max_iter";
  }
  return "unknown";
}

namespace {

// Active-set iterations from a feasible x. Equality rows in `a_eq` must be
// linearly independent; `work` holds the inequality rows currently treated as
// equalities.
struct ActiveSetResult {
  QpStatus status = QpStatus::max_iter;
  Vector mu;      // per row of a_eq
  Vector lambda;  // per row of a_in
};

ActiveSetResult active_set_iterations(const Matrix& h, const Vector& g, const Matrix& a_eq,
                                      const Matrix& a_in, const Vector& b_in, Vector& x,
                                      std::vector<int>& work, int max_iter, int& iterations) {
  const auto n = static_cast<int>(x.size());
  const auto n_eq = static_cast<int>(a_eq.rows());
  const auto n_in = static_cast<int>(a_in.rows());
  const double h_scale = std::max(1.0, h.size() ? h.cwiseAbs().maxCoeff() : 0.0);
  const double curvature_tol = 1e-12 * h_scale;

  std::vector<char> in_work(n_in, 0);
  for (int i : work) in_work[i] = 1;

  ActiveSetResult result;
  // Set after a full, unblocked Newton step: x minimizes over the current
  // working set even if rounding makes the recomputed step nonzero.
  bool stationary = false;
  while (iterations < max_iter) {
    ++iterations;
    const int k = n_eq + static_cast<int>(work.size());
    Matrix aw(k, n);
    if (n_eq > 0) aw.topRows(n_eq) = a_eq;
    for (int j = 0; j < static_cast<int>(work.size()); ++j) aw.row(n_eq + j) = a_in.row(work[j]);

    const Vector q = h * x + g;
    const double q_scale = std::max(1.0, inf_norm(q));

    Eigen::HouseholderQR<Matrix> qr;
    Matrix z;
    if (k == 0) {
      z = Matrix::Identity(n, n);
    } else {
      qr.compute(aw.transpose());
      const Matrix q_full = qr.householderQ();
      z = q_full.rightCols(n - k);
    }

    Vector p = Vector::Zero(n);
    bool ray = false;
    if (n - k > 0) {
      const Matrix h_red = z.transpose() * h * z;
      const Vector q_red = z.transpose() * q;
      const Eigen::SelfAdjointEigenSolver<Matrix> eig(h_red);
      const Vector& evals = eig.eigenvalues();
      const Matrix& evecs = eig.eigenvectors();
      const Vector coeff = evecs.transpose() * q_red;

      Vector flat_part = Vector::Zero(n - k);
      Vector newton_part = Vector::Zero(n - k);
      for (int i = 0; i < n - k; ++i) {
        if (evals(i) <= curvature_tol) {
          flat_part(i) = coeff(i);
        } else {
          newton_part(i) = coeff(i) / evals(i);
        }
      }
      if (flat_part.norm() > 1e-11 * q_scale) {
        // Zero-curvature descent direction: follow it until something blocks.
        p = -z * (evecs * flat_part);
        ray = true;
      } else {
        p = -z * (evecs * newton_part);
      }
    }

    const double p_norm = inf_norm(p);
    if (!ray && (stationary || p_norm <= 1e-13 * std::max(1.0, inf_norm(x)))) {
      Vector nu = Vector::Zero(k);
      if (k > 0) {
        // aw' = Q1 R, so aw' nu = -q in the least-squares sense is R nu = Q1' (-q).
        const Vector rhs = (qr.householderQ().transpose() * (-q)).head(k);
        nu = qr.matrixQR().topLeftCorner(k, k).triangularView<Eigen::Upper>().solve(rhs);
      }
      int drop = -1;
      double most_negative = -1e-11 * q_scale;
      for (int j = 0; j < static_cast<int>(work.size()); ++j) {
        const double lam = nu(n_eq + j);
        if (lam < most_negative ||
            (drop >= 0 && lam == most_negative && work[j] < work[drop])) {
          most_negative = lam;
          drop = j;
        }
      }
      if (drop < 0) {
        result.status = QpStatus::optimal;
        result.mu = nu.head(n_eq);
        result.lambda = Vector::Zero(n_in);
        for (int j = 0; j < static_cast<int>(work.size()); ++j) {
          result.lambda(work[j]) = std::max(0.0, nu(n_eq + j));
        }
        return result;
      }
      in_work[work[drop]] = 0;
      work.erase(work.begin() + drop);
      stationary = false;
      continue;
    }

    double tau = ray ? std::numeric_limits<double>::infinity() : 1.0;
    int block = -1;
    const double p_l2 = p.norm();
    for (int i = 0; i < n_in; ++i) {
      if (in_work[i]) continue;
      const double ap = a_in.row(i).dot(p);
      if (ap <= 1e-14 * a_in.row(i).norm() * p_l2) continue;
      const double slack = std::max(0.0, b_in(i) - a_in.row(i).dot(x));
      const double step = slack / ap;
      if (step < tau) {
        tau = step;
        block = i;
      }
    }
    if (block < 0 && ray) {
      result.status = QpStatus::unbounded;
      return result;
    }
    x += tau * p;
    if (block >= 0) {
      work.push_back(block);
      in_work[block] = 1;
    }
    stationary = !ray && block < 0;
  }
  result.status = QpStatus::max_iter;
  return result;
}

}  // namespace

QpSolution solve_qp(const QpProblem& problem, const QpOptions& options) {
  problem.validate();
  const int n = problem.num_variables();
  const auto n_in = static_cast<int>(problem.A_ineq.rows());
  const auto n_eq = static_cast<int>(problem.A_eq.rows());

  QpSolution sol;
  sol.x = Vector::Zero(n);
  sol.lambda = Vector::Zero(n_in);
  sol.mu = Vector::Zero(n_eq);
  const int max_iter = options.max_iter > 0 ? options.max_iter : 50 * (n + n_in + n_eq) + 50;
  const double feas_tol = 1e-9;

  // Keep a linearly independent subset of the equality rows.
  std::vector<int> eq_rows;
  Matrix a_eq(0, n);
  Vector b_eq(0);
  Vector x = Vector::Zero(n);
  if (n_eq > 0) {
    Eigen::ColPivHouseholderQR<Matrix> qr(problem.A_eq.transpose());
    qr.setThreshold(1e-12);
    const auto rank = static_cast<int>(qr.rank());
    for (int i = 0; i < rank; ++i) eq_rows.push_back(qr.colsPermutation().indices()(i));
    std::sort(eq_rows.begin(), eq_rows.end());
    a_eq.resize(rank, n);
    b_eq.resize(rank);
    for (int i = 0; i < rank; ++i) {
      a_eq.row(i) = problem.A_eq.row(eq_rows[i]);
      b_eq(i) = problem.b_eq(eq_rows[i]);
    }
    if (rank > 0) x = a_eq.completeOrthogonalDecomposition().solve(b_eq);
    const double residual = inf_norm(problem.A_eq * x - problem.b_eq);
    if (residual > feas_tol * std::max(1.0, inf_norm(problem.b_eq))) {
      sol.status = QpStatus::infeasible;
      sol.infeasibility = residual;
      sol.x = x;
      return sol;
    }
  }

  if (options.warm_start && options.warm_start->size() == n) {
    const Vector& w = *options.warm_start;
    const double eq_res = n_eq > 0 ? inf_norm(problem.A_eq * w - problem.b_eq) : 0.0;
    if (eq_res <= 1e-12 * std::max(1.0, inf_norm(problem.b_eq))) x = w;
  }

  int iterations = 0;
  const double b_scale = std::max(1.0, inf_norm(problem.b_ineq));
  const double violation = max_violation(problem.A_ineq, problem.b_ineq, x);
  if (violation > 1e-14 * b_scale) {
    // Phase one: minimize t subject to A x - t <= b, t >= 0, equalities kept.
    Matrix h1 = Matrix::Zero(n + 1, n + 1);
    Vector g1 = Vector::Zero(n + 1);
    g1(n) = 1.0;
    Matrix a_eq1 = Matrix::Zero(a_eq.rows(), n + 1);
    a_eq1.leftCols(n) = a_eq;
    Matrix a_in1 = Matrix::Zero(n_in + 1, n + 1);
    a_in1.topLeftCorner(n_in, n) = problem.A_ineq;
    a_in1.col(n).setConstant(-1.0);
    Vector b_in1 = Vector::Zero(n_in + 1);
    b_in1.head(n_in) = problem.b_ineq;
    Vector x1(n + 1);
    x1 << x, violation;
    std::vector<int> work1;
    const auto phase1 = active_set_iterations(h1, g1, a_eq1, a_in1, b_in1, x1, work1, max_iter,
                                              iterations);
    sol.iterations = iterations;
    if (phase1.status != QpStatus::optimal) {
      sol.status = QpStatus::max_iter;
      sol.x = x1.head(n);
      return sol;
    }
    if (x1(n) > feas_tol) {
      sol.status = QpStatus::infeasible;
      sol.infeasibility = x1(n);
      sol.x = x1.head(n);
      sol.lambda = phase1.lambda.head(n_in);
      for (int i = 0; i < static_cast<int>(eq_rows.size()); ++i) sol.mu(eq_rows[i]) = phase1.mu(i);
      return sol;
    }
    x = x1.head(n);
  }

  std::vector<int> work;
  const auto phase2 = active_set_iterations(problem.H, problem.g, a_eq, problem.A_ineq,
                                            problem.b_ineq, x, work, max_iter, iterations);
  sol.x = x;
  sol.iterations = iterations;
  sol.status = phase2.status;
  sol.active_set = work;
  if (phase2.status == QpStatus::optimal) {
    sol.lambda = phase2.lambda;
    for (int i = 0; i < static_cast<int>(eq_rows.size()); ++i) sol.mu(eq_rows[i]) = phase2.mu(i);
  }
  return sol;
}

double kkt_residual(const QpProblem& problem, const QpSolution& solution) {
  const Vector& x = solution.x;
  Vector stationarity = problem.H * x + problem.g;
  double residual = 0.0;
  if (problem.A_ineq.rows() > 0) {
    stationarity += problem.A_ineq.transpose() * solution.lambda;
    const Vector slack = problem.A_ineq * x - problem.b_ineq;
    residual = std::max(residual, std::max(0.0, slack.maxCoeff()));
    residual = std::max(residual, std::max(0.0, (-solution.lambda).maxCoeff()));
    residual = std::max(residual, solution.lambda.cwiseProduct(slack).cwiseAbs().maxCoeff());
  }
  if (problem.A_eq.rows() > 0) {
    stationarity += problem.A_eq.transpose() * solution.mu;
    residual = std::max(residual, inf_norm(problem.A_eq * x - problem.b_eq));
  }
  return std::max(residual, inf_norm(stationarity));
}

}  // namespace ofo
