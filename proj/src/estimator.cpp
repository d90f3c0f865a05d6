#include "ofo/estimator.hpp"

#include <string>

#include "ofo/errors.hpp"

namespace ofo {

void NoiseModel::validate() const {
  if (sigma_p1 < 0 || sigma_p2 < 0 || sigma_m1 < 0 || sigma_m2 < 0 || sigma_m3 < 0) {
    throw ConfigError("noise model coefficients must be non-negative");
  }
}

NoiseCovariances noise_covariances(const NoiseModel& model, const Vector& delta_u, int n_y) {
  if (n_y <= 0) throw ConfigError("noise_covariances: n_y must be positive");
  const auto n_u = static_cast<int>(delta_u.size());
  if (n_u == 0) throw ConfigError("noise_covariances: empty input delta");
  const double sq = delta_u.squaredNorm();
  const double m = model.sigma_m1 + model.sigma_m2 * sq + model.sigma_m3 * sq * sq;
  const double p = model.sigma_p1 + model.sigma_p2 * sq;
  return {p * Matrix::Identity(n_u * n_y, n_u * n_y), m * Matrix::Identity(n_y, n_y)};
}

SensitivityEstimate SensitivityEstimate::initial(int n_u, int n_y, double h0, double sigma0) {
  if (n_u <= 0 || n_y <= 0) throw ConfigError("estimate dimensions must be positive");
  const int n = n_u * n_y;
  return {n_u, n_y, Vector::Constant(n, h0), sigma0 * Matrix::Identity(n, n)};
}

SensitivityEstimate SensitivityEstimate::from_jacobian(const Matrix& jac, double sigma0) {
  auto est = initial(static_cast<int>(jac.cols()), static_cast<int>(jac.rows()), 0.0, sigma0);
  est.h_hat = vectorize(jac);
  return est;
}

void SensitivityEstimate::validate() const {
  const long n = static_cast<long>(n_u) * n_y;
  if (n_u <= 0 || n_y <= 0) throw ConfigError("estimate dimensions must be positive");
  if (h_hat.size() != n) throw ConfigError("h_hat length must equal n_u * n_y");
  if (sigma.rows() != n || sigma.cols() != n) throw ConfigError("covariance has wrong shape");
  const double scale = sigma.cwiseAbs().maxCoeff();
  if ((sigma - sigma.transpose()).cwiseAbs().maxCoeff() > 1e-12 * std::max(1.0, scale)) {
    throw ConfigError("covariance is not symmetric");
  }
  const double min_eig = Eigen::SelfAdjointEigenSolver<Matrix>(sigma, Eigen::EigenvaluesOnly)
                             .eigenvalues()
                             .minCoeff();
  if (min_eig < -1e-10 * sigma.norm()) {
    throw ConfigError("covariance is not positive semi-definite (min eigenvalue " +
                      std::to_string(min_eig) + ")");
  }
}

namespace {

// U = delta_u^T kron I_{n_y}: row i holds delta_u_j at column j*n_y + i.
Matrix kron_regressor(const Vector& delta_u, int n_y) {
  const auto n_u = static_cast<int>(delta_u.size());
  Matrix u_delta = Matrix::Zero(n_y, n_u * n_y);
  for (int j = 0; j < n_u; ++j) {
    for (int i = 0; i < n_y; ++i) u_delta(i, j * n_y + i) = delta_u(j);
  }
  return u_delta;
}

}  // namespace

SensitivityEstimate update(const SensitivityEstimate& state, const NoiseModel& model,
                           const Vector& delta_u, const Vector& delta_y) {
  if (delta_u.size() != state.n_u || delta_y.size() != state.n_y) {
    throw ConfigError("update: delta dimensions do not match the estimate");
  }
  const auto [sigma_p, sigma_m] = noise_covariances(model, delta_u, state.n_y);

  SensitivityEstimate next = state;
  if (delta_u.isZero(0.0)) {
    // K = 0 because U = 0; only the process noise accumulates.
    next.sigma = state.sigma + sigma_p;
    return next;
  }

  const Matrix u_delta = kron_regressor(delta_u, state.n_y);
  const Matrix u_sigma = u_delta * state.sigma;  // n_y x n
  Matrix innovation = sigma_m + u_sigma * u_delta.transpose();
  innovation = 0.5 * (innovation + innovation.transpose()).eval();

  const Eigen::LLT<Matrix> llt(innovation);
  const double scale = innovation.diagonal().cwiseAbs().maxCoeff();
  if (llt.info() != Eigen::Success || !(scale > 0.0)) {
    throw SingularUpdateError("innovation matrix is not positive definite");
  }
  const Vector pivots = Matrix(llt.matrixL()).diagonal();
  if (pivots.cwiseAbs2().minCoeff() <= 1e-14 * scale) {
    throw SingularUpdateError("innovation matrix is numerically singular");
  }

  // K = Sigma U^T S^-1 = (S^-1 U Sigma)^T since Sigma and S are symmetric.
  const Matrix gain = llt.solve(u_sigma).transpose();  // n x n_y

  next.h_hat = state.h_hat + gain * (delta_y - u_delta * state.h_hat);

  // Joseph form (I - K U) Sigma (I - K U)^T evaluated right to left so the
  // n x n identity is never formed.
  const Matrix left = state.sigma - gain * u_sigma;  // (I - K U) Sigma
  Matrix sigma_next = left - (left * u_delta.transpose()) * gain.transpose();
  sigma_next.noalias() += (gain * sigma_m) * gain.transpose();
  sigma_next += sigma_p;
  next.sigma = 0.5 * (sigma_next + sigma_next.transpose());
  return next;
}

Matrix jacobian(const SensitivityEstimate& state) {
  return Eigen::Map<const Matrix>(state.h_hat.data(), state.n_y, state.n_u);
}

Vector vectorize(const Matrix& jac) {
  return Eigen::Map<const Vector>(jac.data(), jac.size());
}

}  // namespace ofo
