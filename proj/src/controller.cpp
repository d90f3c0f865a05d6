#include "ofo/controller.hpp"

#include <cmath>
#include <limits>
#include <string>

#include <spdlog/spdlog.h>

#include "ofo/errors.hpp"

namespace ofo {

ExcitationWindow::ExcitationWindow(int n_u) : n_u_(n_u) {
  if (n_u <= 0) throw ConfigError("excitation window needs a positive input dimension");
}

void ExcitationWindow::push(const Vector& delta) {
  if (delta.size() != n_u_) throw ConfigError("window delta has wrong length");
  if (capacity() == 0) return;
  if (full()) deltas_.pop_front();
  deltas_.push_back(delta);
}

Matrix ExcitationWindow::matrix() const {
  Matrix m(n_u_, size());
  for (int j = 0; j < size(); ++j) m.col(j) = deltas_[j];
  return m;
}

void PeParameters::validate() const {
  if (!(alpha > 0)) throw ConfigError("alpha must be positive");
  if (!(epsilon > 0)) throw ConfigError("epsilon must be positive");
  if (gamma < 0) throw ConfigError("gamma must be non-negative");
  if (!(s_lo <= 0 && 0 <= s_hi)) throw ConfigError("perturbation bounds must bracket zero");
  if (sigma_noise < 0) throw ConfigError("sigma_noise must be non-negative");
  if (fp_max_iter < 1) throw ConfigError("fp_max_iter must be at least 1");
  if (!(fp_tol > 0)) throw ConfigError("fp_tol must be positive");
}

Vector descent_gradient(const Vector& u, const Vector& y, const Matrix& jac,
                        const CostModel& cost) {
  if (jac.rows() != y.size() || jac.cols() != u.size()) {
    throw ConfigError("descent_gradient: Jacobian shape does not match (u, y)");
  }
  return cost.grad_u(u, y) + jac.transpose() * cost.grad_y(u, y);
}

Vector project_step(const Vector& grad, const Vector& perturb, const ConstraintSpec& spec,
                    const Matrix& jac, const Vector& u, const Vector& y, double alpha) {
  const auto n = static_cast<int>(u.size());
  if (grad.size() != n || perturb.size() != n || spec.input_set.dim() != n) {
    throw ConfigError("project_step: dimension mismatch");
  }
  QpProblem qp = QpProblem::empty(n);
  qp.H = 2.0 * Matrix::Identity(n, n);
  qp.g = 2.0 * (grad + perturb);
  const auto& in = spec.input_set;
  qp.A_ineq = alpha * in.A;
  qp.b_ineq = in.b - in.A * u;
  if (spec.output_set) {
    const auto& out = *spec.output_set;
    const Matrix rows = alpha * out.A * jac;
    const Vector rhs = out.b - out.A * y;
    const auto m = qp.A_ineq.rows();
    qp.A_ineq.conservativeResize(m + rows.rows(), Eigen::NoChange);
    qp.b_ineq.conservativeResize(m + rhs.size());
    qp.A_ineq.bottomRows(rows.rows()) = rows;
    qp.b_ineq.tail(rhs.size()) = rhs;
  }
  QpOptions options;
  options.warm_start = Vector::Zero(n);
  const QpSolution sol = solve_qp(qp, options);
  if (!sol.optimal()) {
    throw NumericalError(std::string("projection program ") + std::string(to_string(sol.status)));
  }
  return sol.x;
}

Vector gaussian_perturbation(std::mt19937_64& rng, double sigma, int n_u) {
  if (sigma < 0) throw ConfigError("perturbation standard deviation must be non-negative");
  Vector s = Vector::Zero(n_u);
  if (sigma == 0) return s;
  std::normal_distribution<double> normal(0.0, sigma);
  for (int i = 0; i < n_u; ++i) s(i) = normal(rng);
  return s;
}

NullspaceResult left_nullspace(const ExcitationWindow& window) {
  const int n = window.dimension();
  NullspaceResult result;
  if (window.size() == 0) {
    result.v_perp = Vector::Unit(n, n - 1);
    result.degenerate = true;
    return result;
  }
  const Matrix m = window.matrix();
  const Eigen::JacobiSVD<Matrix> svd(m, Eigen::ComputeFullU);
  result.v_perp = svd.matrixU().col(n - 1);
  // Fix the sign so the largest entry is positive.
  Eigen::Index imax = 0;
  result.v_perp.cwiseAbs().maxCoeff(&imax);
  if (result.v_perp(imax) < 0) result.v_perp = -result.v_perp;

  const Vector& sv = svd.singularValues();
  const double tol = n * std::numeric_limits<double>::epsilon() * sv(0);
  const bool rank_deficient = !(sv(0) > 0) || sv(sv.size() - 1) <= tol;
  result.degenerate = !window.full() || rank_deficient;
  return result;
}

bool excitation_check(const ExcitationWindow& window, const Vector& candidate, double epsilon) {
  if (candidate.size() != window.dimension()) {
    throw ConfigError("excitation_check: candidate has wrong length");
  }
  const NullspaceResult ns = left_nullspace(window);
  if (ns.degenerate) return false;
  return std::abs(ns.v_perp.dot(candidate)) >= epsilon;
}

std::string_view to_string(Variant variant) {
  switch (variant) {
    case Variant::plain: return "plain";
    case Variant::gaussian: return "gaussian";
    case Variant::pe: return "pe";
    case Variant::oracle: return "oracle";
  }
  return "unknown";
}

Variant parse_variant(std::string_view name) {
  if (name == "plain") return Variant::plain;
  if (name == "gaussian") return Variant::gaussian;
  if (name == "pe") return Variant::pe;
  if (name == "oracle") return Variant::oracle;
  throw ConfigError("unknown controller variant '" + std::string(name) + "'");
}

Controller::Controller(Variant variant, CostModel cost, PeParameters params, NoiseModel noise,
                       SensitivityEstimate initial, Vector u0, std::uint64_t seed,
                       JacobianOracle oracle)
    : variant_(variant),
      cost_(std::move(cost)),
      params_(params),
      noise_(noise),
      estimate_(std::move(initial)),
      oracle_(std::move(oracle)),
      window_(static_cast<int>(u0.size())),
      rng_(seed),
      u_(std::move(u0)) {
  params_.validate();
  noise_.validate();
  estimate_.validate();
  if (estimate_.n_u != u_.size()) throw ConfigError("initial estimate does not match u0");
  if (variant_ == Variant::oracle && !oracle_) {
    throw ConfigError("oracle variant requires a Jacobian oracle");
  }
}

Matrix Controller::current_jacobian() const {
  return variant_ == Variant::oracle ? oracle_(u_) : jacobian(estimate_);
}

StepRecord Controller::step(const Vector& y_meas, const ConstraintSpec& spec) {
  const int n = static_cast<int>(u_.size());
  if (y_meas.size() != estimate_.n_y) throw ConfigError("measurement has wrong length");

  StepRecord rec;
  rec.t = t_;
  rec.u = u_;
  rec.y = y_meas;
  rec.s = Vector::Zero(n);
  try {
    if (u_prev_ && variant_ != Variant::oracle) {
      try {
        estimate_ = update(estimate_, noise_, u_ - *u_prev_, y_meas - *y_prev_);
      } catch (const SingularUpdateError& e) {
        spdlog::warn("step {}: sensitivity update skipped ({})", t_, e.what());
        rec.estimator_skipped = true;
      }
    }
    const Matrix jac = current_jacobian();
    const Vector grad = descent_gradient(u_, y_meas, jac, cost_);

    switch (variant_) {
      case Variant::plain:
      case Variant::oracle:
        rec.w = project_step(grad, Vector::Zero(n), spec, jac, u_, y_meas, params_.alpha);
        rec.delta_u = params_.alpha * rec.w;
        break;
      case Variant::gaussian:
        rec.s = gaussian_perturbation(rng_, params_.sigma_noise, n);
        rec.w = project_step(grad, rec.s, spec, jac, u_, y_meas, params_.alpha);
        rec.delta_u = params_.alpha * rec.w;
        break;
      case Variant::pe: {
        const PeStepResult pe = solve_pe_step(u_, y_meas, jac, cost_, spec, window_, params_);
        rec.w = pe.w;
        rec.s = pe.perturbation.s;
        rec.delta_u = params_.alpha * pe.w + pe.perturbation.s;
        rec.fp_iterations = pe.fp_iterations;
        rec.fp_converged = pe.converged;
        rec.fallback = pe.fallback;
        rec.z_plus = pe.perturbation.z_plus;
        rec.z_minus = pe.perturbation.z_minus;
        rec.lower_kkt = pe.perturbation.kkt_residual;
        if (pe.degenerate_window && window_.full()) {
          spdlog::debug("step {}: rank-deficient excitation window", t_);
        }
        break;
      }
    }
  } catch (const NumericalError& e) {
    throw NumericalError("step " + std::to_string(t_) + ": " + e.what());
  }

  const NullspaceResult ns = left_nullspace(window_);
  rec.excitation = std::abs(ns.v_perp.dot(rec.delta_u));
  rec.degenerate_window = ns.degenerate;
  rec.warmup = !window_.full();
  rec.excited = !ns.degenerate && rec.excitation >= params_.epsilon;

  rec.u_next = u_ + rec.delta_u;
  const double violation = spec.input_set.max_violation(rec.u_next);
  if (violation > 1e-9) {
    throw NumericalError("step " + std::to_string(t_) + ": next input violates the input set by " +
                         fmt::format("{:.3g}", violation));
  }

  window_.push(rec.delta_u);
  u_prev_ = u_;
  y_prev_ = y_meas;
  u_ = rec.u_next;
  ++t_;
  return rec;
}

}  // namespace ofo
