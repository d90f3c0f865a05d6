#include <doctest.h>

#include <random>

#include <Eigen/Eigenvalues>

#include "ofo/errors.hpp"
#include "ofo/estimator.hpp"

using ofo::Matrix;
using ofo::NoiseModel;
using ofo::SensitivityEstimate;
using ofo::Vector;

TEST_CASE("noise covariances follow the input-delta norm") {
  NoiseModel m{0.01, 0.01, 0.01, 0.01, 0.01};
  auto c = ofo::noise_covariances(m, Vector::Zero(2), 3);
  CHECK((c.sigma_m - 0.01 * Matrix::Identity(3, 3)).norm() < 1e-15);

  Vector du(2);
  du << 0.6, 0.8;  // unit norm
  c = ofo::noise_covariances(m, du, 3);
  CHECK((c.sigma_m - 0.03 * Matrix::Identity(3, 3)).norm() < 1e-15);

  NoiseModel p{1.0, 1.0, 0.0, 0.0, 0.0};
  du << 0.3, 0.4;  // squared norm 0.25
  c = ofo::noise_covariances(p, du, 3);
  CHECK(c.sigma_p.rows() == 6);
  CHECK((c.sigma_p - 1.25 * Matrix::Identity(6, 6)).norm() < 1e-15);
}

TEST_CASE("negative noise coefficients are rejected") {
  NoiseModel m;
  m.sigma_m2 = -1.0;
  CHECK_THROWS_AS(m.validate(), ofo::ConfigError);
}

TEST_CASE("jacobian de-vectorizes column-wise") {
  SensitivityEstimate s = SensitivityEstimate::initial(2, 2);
  s.h_hat << 1, 0, 0, 1;
  CHECK(ofo::jacobian(s) == Matrix::Identity(2, 2));
  CHECK(ofo::jacobian(SensitivityEstimate::initial(3, 2)) == Matrix::Ones(2, 3));

  const Matrix m = Matrix::Random(3, 2);
  CHECK(ofo::jacobian(SensitivityEstimate::from_jacobian(m)) == m);
  CHECK(ofo::vectorize(m)(1) == m(1, 0));
  CHECK(ofo::vectorize(m)(3) == m(0, 1));
}

TEST_CASE("zero input delta only inflates the covariance") {
  NoiseModel m;
  SensitivityEstimate s = SensitivityEstimate::initial(2, 3, 0.5, 2.0);
  const auto next = ofo::update(s, m, Vector::Zero(2), Vector::Random(3));
  CHECK(next.h_hat == s.h_hat);
  const auto cov = ofo::noise_covariances(m, Vector::Zero(2), 3);
  CHECK((next.sigma - (s.sigma + cov.sigma_p)).norm() < 1e-14);
}

TEST_CASE("scalar case matches the closed-form Kalman recursion") {
  NoiseModel m;  // defaults: process 1, 1; measurement 0.01 each
  SensitivityEstimate s = SensitivityEstimate::initial(1, 1);
  double h = 1.0;
  double p = 1.0;
  const double du = 0.1;
  for (int k = 0; k < 50; ++k) {
    const double dy = 2.0 * du;
    const double q = m.sigma_p1 + m.sigma_p2 * du * du;
    const double r = m.sigma_m1 + m.sigma_m2 * du * du + m.sigma_m3 * du * du * du * du;
    const double gain = p * du / (r + du * p * du);
    h += gain * (dy - du * h);
    p = (1 - gain * du) * p * (1 - gain * du) + gain * r * gain + q;
    s = ofo::update(s, m, Vector::Constant(1, du), Vector::Constant(1, dy));
    CHECK(s.h_hat(0) == doctest::Approx(h).epsilon(1e-12));
    CHECK(s.sigma(0, 0) == doctest::Approx(p).epsilon(1e-12));
  }
  CHECK(std::abs(s.h_hat(0) - 2.0) <= 1e-3);
}

TEST_CASE("noiseless updates reproduce the regularized batch least-squares solve") {
  std::mt19937_64 rng(5);
  std::normal_distribution<double> normal;
  const int n_u = 3, n_y = 2;
  const Matrix g = Matrix::NullaryExpr(n_y, n_u, [&] { return normal(rng); });
  const double r = 0.2;
  NoiseModel m{0.0, 0.0, r, 0.0, 0.0};
  SensitivityEstimate s = SensitivityEstimate::initial(n_u, n_y);

  // Posterior normal equations: (I + sum U'U / r) h = h0 + sum U' dy / r.
  Matrix info = Matrix::Identity(n_u * n_y, n_u * n_y);
  Vector rhs = Vector::Ones(n_u * n_y);
  for (int k = 0; k < 12; ++k) {
    const Vector du = Vector::NullaryExpr(n_u, [&] { return normal(rng); });
    const Vector dy = g * du;
    Matrix u(n_y, n_u * n_y);
    for (int j = 0; j < n_u; ++j) u.middleCols(j * n_y, n_y) = du(j) * Matrix::Identity(n_y, n_y);
    info += u.transpose() * u / r;
    rhs += u.transpose() * dy / r;
    s = ofo::update(s, m, du, dy);
    const Vector batch = info.ldlt().solve(rhs);
    CHECK((s.h_hat - batch).norm() <= 1e-9 * std::max(1.0, batch.norm()));
  }
}

TEST_CASE("recovers G rather than its transpose") {
  const int n_u = 2, n_y = 3;
  Matrix g(n_y, n_u);
  g << 1, 2, 3, 4, 5, 6;
  NoiseModel m{0.0, 0.0, 1e-12, 0.0, 0.0};
  SensitivityEstimate s = SensitivityEstimate::initial(n_u, n_y);
  for (int k = 0; k < 10 * n_u; ++k) {
    Vector du = Vector::Zero(n_u);
    du(k % n_u) = 0.1 * (1 + k % 3);
    du((k + 1) % n_u) += 0.05;
    s = ofo::update(s, m, du, g * du);
  }
  CHECK((ofo::jacobian(s) - g).norm() <= 1e-6);
}

TEST_CASE("covariance stays symmetric positive semi-definite") {
  std::mt19937_64 rng(9);
  std::normal_distribution<double> normal;
  std::uniform_real_distribution<double> unif(0.0, 1.0);
  const int n_u = 3, n_y = 2;
  SensitivityEstimate s = SensitivityEstimate::initial(n_u, n_y);
  NoiseModel m;
  for (int k = 0; k < 10000; ++k) {
    const double scale = std::pow(10.0, -4.0 * unif(rng));
    const Vector du = Vector::NullaryExpr(n_u, [&] { return scale * normal(rng); });
    const Vector dy = Vector::NullaryExpr(n_y, [&] { return normal(rng); });
    s = ofo::update(s, m, du, dy);
    if (k % 100 == 0) {
      REQUIRE((s.sigma - s.sigma.transpose()).norm() == 0.0);
      const double lo = Eigen::SelfAdjointEigenSolver<Matrix>(s.sigma).eigenvalues().minCoeff();
      REQUIRE(lo >= -1e-10 * s.sigma.norm());
    }
  }
}

TEST_CASE("shape errors are reported") {
  SensitivityEstimate s = SensitivityEstimate::initial(2, 2);
  CHECK_THROWS_AS(ofo::update(s, NoiseModel{}, Vector::Zero(3), Vector::Zero(2)), ofo::ConfigError);
  CHECK_THROWS_AS(ofo::update(s, NoiseModel{}, Vector::Zero(2), Vector::Zero(1)), ofo::ConfigError);
}
