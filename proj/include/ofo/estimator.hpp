#pragma once

#include "ofo/types.hpp"

namespace ofo {

/// Scalar coefficients of the input-dependent noise covariances. Each one
/// multiplies an identity of the dimension the update needs.
struct NoiseModel {
  double sigma_p1 = 1.0;
  double sigma_p2 = 1.0;
  double sigma_m1 = 0.01;
  double sigma_m2 = 0.01;
  double sigma_m3 = 0.01;

  void validate() const;
};

struct NoiseCovariances {
  Matrix sigma_p;  // (n_u n_y) square, process noise
  Matrix sigma_m;  // n_y square, measurement noise
};

NoiseCovariances noise_covariances(const NoiseModel& model, const Vector& delta_u, int n_y);

/// Column-wise vectorized Jacobian estimate and its covariance.
///
/// Entry j*n_y + i of h_hat is d y_i / d u_j.
struct SensitivityEstimate {
  int n_u = 0;
  int n_y = 0;
  Vector h_hat;
  Matrix sigma;

  /// h_hat of ones and identity covariance.
  static SensitivityEstimate initial(int n_u, int n_y, double h0 = 1.0, double sigma0 = 1.0);
  static SensitivityEstimate from_jacobian(const Matrix& jac, double sigma0 = 1.0);

  /// Throws ConfigError when the shape, symmetry or PSD invariants fail.
  void validate() const;
};

/// One recursive least-squares step on the pair (delta_u, delta_y).
///
/// Uses the Joseph-form covariance update. Throws SingularUpdateError when the
/// innovation matrix cannot be factored; the input state is left untouched so
/// the caller may skip the step.
SensitivityEstimate update(const SensitivityEstimate& state, const NoiseModel& model,
                           const Vector& delta_u, const Vector& delta_y);

Matrix jacobian(const SensitivityEstimate& state);
Vector vectorize(const Matrix& jac);

}  // namespace ofo
