#pragma once

#include <cstdint>
#include <deque>
#include <functional>
#include <optional>
#include <random>
#include <string_view>

#include "ofo/constraints.hpp"
#include "ofo/estimator.hpp"
#include "ofo/qp.hpp"
#include "ofo/types.hpp"

namespace ofo {

/// Minimized objective Phi(u, y) with its partial gradients.
struct CostModel {
  std::function<double(const Vector& u, const Vector& y)> value;
  std::function<Vector(const Vector& u, const Vector& y)> grad_u;
  std::function<Vector(const Vector& u, const Vector& y)> grad_y;
};

/// The last n_u - 1 applied input deltas, oldest first.
class ExcitationWindow {
 public:
  explicit ExcitationWindow(int n_u);

  int dimension() const { return n_u_; }
  int capacity() const { return n_u_ - 1; }
  int size() const { return static_cast<int>(deltas_.size()); }
  bool full() const { return size() == capacity(); }

  /// Appends a delta, evicting the oldest when at capacity.
  void push(const Vector& delta);
  /// n_u x size() matrix with one delta per column.
  Matrix matrix() const;
  const std::deque<Vector>& deltas() const { return deltas_; }

 private:
  int n_u_;
  std::deque<Vector> deltas_;
};

struct PeParameters {
  double alpha = 0.001;
  double epsilon = 1e-9;
  double gamma = 4.0;
  double s_lo = -0.005;
  double s_hi = 0.005;
  double sigma_noise = 5.0;
  int fp_max_iter = 20;
  double fp_tol = 1e-9;

  void validate() const;
};

/// Lower-level solution: perturbation, lifted magnitude split, and the
/// multipliers of the (2 n_u + 3) inequality rows and the lifting equality.
struct PerturbationSolution {
  Vector s;
  double z_plus = 0.0;
  double z_minus = 0.0;
  Vector lambda;
  double mu = 0.0;
  double objective = 0.0;
  /// KKT residual of (s, z, lambda, mu) for the lower-level program.
  double kkt_residual = 0.0;
};

struct NullspaceResult {
  Vector v_perp;
  bool degenerate = false;
};

Vector descent_gradient(const Vector& u, const Vector& y, const Matrix& jac,
                        const CostModel& cost);

/// Projected step
///   argmin_w |w + grad + perturb|^2
///   s.t. u + alpha w in U,  y + alpha jac w in Y.
/// Throws NumericalError if the program is infeasible.
Vector project_step(const Vector& grad, const Vector& perturb, const ConstraintSpec& spec,
                    const Matrix& jac, const Vector& u, const Vector& y, double alpha);

Vector gaussian_perturbation(std::mt19937_64& rng, double sigma, int n_u);

/// Unit vector orthogonal to every delta in the window, taken as the left
/// singular vector of the smallest singular value. `degenerate` is set when the
/// window is under-filled or rank deficient.
NullspaceResult left_nullspace(const ExcitationWindow& window);

/// True iff |v_perp' candidate| >= epsilon for a full, non-degenerate window.
bool excitation_check(const ExcitationWindow& window, const Vector& candidate, double epsilon);

/// Lower-level program in x = (s, z+, z-):
///   min 1/2 (grad' s)^2 + gamma (z+ + z-)
///   s.t. s_lo <= s <= s_hi, z+ + z- >= epsilon, z+ >= 0, z- >= 0,
///        z+ - z- = v_perp' (alpha w + s).
QpProblem lower_problem(const Vector& w, const Vector& v_perp, const Vector& grad,
                        const PeParameters& params);

PerturbationSolution solve_lower(const Vector& w, const Vector& v_perp, const Vector& grad,
                                 const PeParameters& params);

struct PeStepResult {
  Vector w;
  PerturbationSolution perturbation;
  Vector v_perp;
  bool degenerate_window = false;
  int fp_iterations = 0;
  bool converged = false;
  /// No bilevel-feasible pair was found; s = 0 and w is the plain step.
  bool fallback = false;
  double upper_objective = 0.0;
};

/// Bilevel persistently exciting step: w minimizes |w + grad|^2 subject to
/// u + alpha w + s in U (and the output estimate in Y) while s solves the
/// lower-level program for that w.
PeStepResult solve_pe_step(const Vector& u, const Vector& y, const Matrix& jac,
                           const CostModel& cost, const ConstraintSpec& spec,
                           const ExcitationWindow& window, const PeParameters& params);

enum class Variant { plain, gaussian, pe, oracle };

std::string_view to_string(Variant variant);
Variant parse_variant(std::string_view name);

using JacobianOracle = std::function<Matrix(const Vector& u)>;

struct StepRecord {
  int t = 0;
  Vector u;
  Vector y;
  Vector w;
  /// Perturbation: the Gaussian sample for the gaussian variant, the applied
  /// s for pe, zero otherwise.
  Vector s;
  Vector delta_u;
  Vector u_next;
  double excitation = 0.0;  // |v_perp' delta_u|
  bool excited = false;
  bool warmup = true;
  bool degenerate_window = false;
  int fp_iterations = 0;
  bool fp_converged = true;
  bool fallback = false;
  bool estimator_skipped = false;
  /// pe only: lifted split and KKT residual of the lower-level solution.
  double z_plus = 0.0;
  double z_minus = 0.0;
  double lower_kkt = 0.0;
};

class Controller {
 public:
  Controller(Variant variant, CostModel cost, PeParameters params, NoiseModel noise,
             SensitivityEstimate initial, Vector u0, std::uint64_t seed,
             JacobianOracle oracle = {});

  /// One closed-loop iteration with the plant output measured at input().
  /// Returns the record whose u_next the caller applies.
  StepRecord step(const Vector& y_meas, const ConstraintSpec& spec);

  Variant variant() const { return variant_; }
  const Vector& input() const { return u_; }
  int step_index() const { return t_; }
  const SensitivityEstimate& estimate() const { return estimate_; }
  const ExcitationWindow& window() const { return window_; }
  /// Sensitivity the next step will use.
  Matrix current_jacobian() const;

 private:
  Variant variant_;
  CostModel cost_;
  PeParameters params_;
  NoiseModel noise_;
  SensitivityEstimate estimate_;
  JacobianOracle oracle_;
  ExcitationWindow window_;
  std::mt19937_64 rng_;
  Vector u_;
  std::optional<Vector> u_prev_;
  std::optional<Vector> y_prev_;
  int t_ = 0;
};

}  // namespace ofo
