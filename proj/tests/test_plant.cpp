#include <doctest.h>

#include <cmath>
#include <random>

#include "ofo/errors.hpp"
#include "ofo/plant.hpp"
#include "oracles.hpp"

using ofo::Matrix;
using ofo::Vector;

namespace {

Vector random_input(std::mt19937_64& rng, int n, double lo = 0.0, double hi = 1.0) {
  std::uniform_real_distribution<double> unif(lo, hi);
  return Vector::NullaryExpr(n, [&] { return unif(rng); });
}

}  // namespace

TEST_CASE("zero input gives zero output") {
  const auto field = ofo::default_field();
  CHECK(ofo::evaluate(field, Vector::Zero(8)).isZero(0.0));
}

TEST_CASE("curve values at hand-computed points") {
  const auto field = ofo::default_field();
  Vector u = Vector::Zero(8);
  u(0) = 1.0;
  u(1) = 1.0;
  u(6) = 0.5;
  u(7) = 1.0;
  const Vector y = ofo::evaluate(field, u);
  CHECK(y(0) == doctest::Approx((5 * std::log10(26.0) - 0.05 + 2) / 34.5).epsilon(1e-14));
  CHECK(y(0) == doctest::Approx(0.26159).epsilon(1e-5));
  CHECK(y(9) == doctest::Approx(0.52691).epsilon(1e-5));
  CHECK(y(1) == doctest::Approx(0.3 * y(0)).epsilon(1e-15));
  CHECK(y(2) == doctest::Approx(0.1 * y(0)).epsilon(1e-15));
}

TEST_CASE("inputs outside the box are a domain error") {
  const auto field = ofo::default_field();
  Vector u = Vector::Constant(8, 0.5);
  u(3) = 1.0 + 1e-6;
  CHECK_THROWS_AS(ofo::evaluate(field, u), ofo::DomainError);
  u(3) = -1e-6;
  CHECK_THROWS_AS(ofo::evaluate(field, u), ofo::DomainError);
  u(3) = 1.0 + 1e-10;
  CHECK_NOTHROW(ofo::evaluate(field, u));
  CHECK_THROWS_AS(ofo::evaluate(field, Vector::Zero(6)), ofo::ConfigError);
}

TEST_CASE("output ratios are exact and oil is non-negative on the box") {
  const auto field = ofo::default_field();
  std::mt19937_64 rng(1);
  for (int k = 0; k < 200; ++k) {
    const Vector y = ofo::evaluate(field, random_input(rng, 8));
    for (int i = 0; i < 4; ++i) {
      CHECK(y(3 * i) >= 0.0);
      CHECK(y(3 * i + 1) == field.wells[i].r_w * y(3 * i));
      CHECK(y(3 * i + 2) == field.wells[i].r_g * y(3 * i));
    }
  }
}

TEST_CASE("analytic Jacobian matches finite differences") {
  const auto field = ofo::default_field();
  std::mt19937_64 rng(2);
  for (int k = 0; k < 100; ++k) {
    const Vector u = random_input(rng, 8, 0.01, 0.99);
    const Matrix jac = ofo::analytic_jacobian(field, u);
    const Matrix fd = oracle::finite_difference_jacobian(field, u);
    CHECK((jac - fd).norm() <= 1e-6 * jac.norm());
  }
  const Matrix jac = ofo::analytic_jacobian(field, random_input(rng, 8));
  CHECK(jac(0, 1) == doctest::Approx(2.0 / 34.5).epsilon(1e-15));
  CHECK(jac.block(0, 2, 3, 2).isZero(0.0));
  CHECK(jac.block(3, 0, 3, 2).isZero(0.0));
}

TEST_CASE("cost with Table 1 prices") {
  ofo::FieldModel one;
  one.wells = {ofo::default_field().wells[0]};
  Vector u(2), y(3);
  u << 0.1, 0.0;
  y << 0.2, 0.3 * 0.2, 0.1 * 0.2;
  CHECK(ofo::profit(one, u, y) == doctest::Approx(-0.932).epsilon(1e-14));
  CHECK(ofo::profit(one, Vector::Zero(2), Vector::Zero(3)) == 0.0);

  ofo::FieldModel twice = one;
  twice.prices = {10.0, 2.0, 0.6, 1.4};
  CHECK(ofo::profit(twice, u, y) == doctest::Approx(2 * ofo::profit(one, u, y)).epsilon(1e-14));

  Vector gy = ofo::cost_grad_y(one);
  CHECK(gy(0) == -5.0);
  CHECK(gy(1) == 0.3);
  CHECK(gy(2) == -1.0);
  CHECK(ofo::cost_grad_u(one)(0) == 0.7);
}

TEST_CASE("availability rows") {
  auto set = ofo::availability_constraints(4.0, 4);
  CHECK(set.rows() == 1 + 16);
  CHECK(set.contains(Vector::Ones(8)));

  set = ofo::availability_constraints(0.0, 4);
  Vector u = Vector::Zero(8);
  u(1) = u(3) = 1.0;
  CHECK(set.contains(u));
  u(0) = 1e-3;
  CHECK_FALSE(set.contains(u));

  set = ofo::availability_constraints(2.0, 4);
  u = Vector::Zero(8);
  u(0) = u(2) = 0.7;
  u(4) = 0.7;
  CHECK(set.max_violation(u) == doctest::Approx(0.1).epsilon(1e-12));
}
