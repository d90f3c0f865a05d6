#include "ofo/plant.hpp"

#include <cmath>
#include <numbers>
#include <string>

#include "ofo/errors.hpp"

namespace ofo {

double GlprCurve::oil(double q_inj, double v) const {
  return (log_gain * std::log10(1.0 + saturation * q_inj) - quad_loss * q_inj * q_inj +
          choke_gain * v) /
         norm;
}

double GlprCurve::d_oil_d_inj(double q_inj) const {
  return (log_gain * saturation / ((1.0 + saturation * q_inj) * std::numbers::ln10) -
          2.0 * quad_loss * q_inj) /
         norm;
}

void FieldModel::validate() const {
  if (wells.empty()) throw ConfigError("field needs at least one well");
  for (const auto& w : wells) {
    if (!(w.glpr.norm > 0)) throw ConfigError("GLPR normalization must be positive");
    if (w.r_g < 0 || w.r_w < 0) throw ConfigError("output ratios must be non-negative");
  }
  const auto& p = prices;
  if (p.p_o < 0 || p.p_g < 0 || p.p_w < 0 || p.p_inj < 0) {
    throw ConfigError("prices must be non-negative");
  }
  if (measurement_noise_std < 0) throw ConfigError("measurement noise must be non-negative");
}

FieldModel default_field() {
  FieldModel field;
  field.wells = {
      {{5.0, 25.0, 0.05, 2.0, 34.5}, 0.10, 0.30},
      {{6.0, 35.0, 0.15, 3.0, 34.5}, 0.12, 0.12},
      {{5.0, 20.0, 0.025, 1.0, 34.5}, 0.10, 0.20},
      {{10.0, 40.0, 0.175, 5.0, 34.5}, 0.10, 0.20},
  };
  return field;
}

namespace {

void check_domain(const FieldModel& field, const Vector& u) {
  if (u.size() != field.n_u()) {
    throw ConfigError("plant input has length " + std::to_string(u.size()) + ", expected " +
                      std::to_string(field.n_u()));
  }
  constexpr double tol = 1e-9;
  for (int i = 0; i < u.size(); ++i) {
    if (!(u(i) >= -tol && u(i) <= 1.0 + tol)) {
      throw DomainError("plant input " + std::to_string(i) + " = " + std::to_string(u(i)) +
                        " outside [0, 1]");
    }
  }
}

}  // namespace

Vector evaluate(const FieldModel& field, const Vector& u) {
  check_domain(field, u);
  Vector y(field.n_y());
  for (int i = 0; i < field.num_wells(); ++i) {
    const auto& well = field.wells[i];
    const double oil = well.glpr.oil(u(2 * i), u(2 * i + 1));
    y(3 * i) = oil;
    y(3 * i + 1) = well.r_w * oil;
    y(3 * i + 2) = well.r_g * oil;
  }
  return y;
}

Vector measure(const FieldModel& field, const Vector& u, std::mt19937_64& rng) {
  Vector y = evaluate(field, u);
  if (field.measurement_noise_std > 0) {
    std::normal_distribution<double> noise(0.0, field.measurement_noise_std);
    for (int i = 0; i < y.size(); ++i) y(i) += noise(rng);
  }
  return y;
}

Matrix analytic_jacobian(const FieldModel& field, const Vector& u) {
  check_domain(field, u);
  Matrix jac = Matrix::Zero(field.n_y(), field.n_u());
  for (int i = 0; i < field.num_wells(); ++i) {
    const auto& well = field.wells[i];
    const double d_inj = well.glpr.d_oil_d_inj(u(2 * i));
    const double d_choke = well.glpr.d_oil_d_choke();
    const double ratios[3] = {1.0, well.r_w, well.r_g};
    for (int r = 0; r < 3; ++r) {
      jac(3 * i + r, 2 * i) = ratios[r] * d_inj;
      jac(3 * i + r, 2 * i + 1) = ratios[r] * d_choke;
    }
  }
  return jac;
}

double profit(const FieldModel& field, const Vector& u, const Vector& y) {
  if (u.size() != field.n_u() || y.size() != field.n_y()) {
    throw ConfigError("profit: dimension mismatch");
  }
  return cost_grad_u(field).dot(u) + cost_grad_y(field).dot(y);
}

Vector cost_grad_u(const FieldModel& field) {
  Vector g = Vector::Zero(field.n_u());
  for (int i = 0; i < field.num_wells(); ++i) g(2 * i) = field.prices.p_inj;
  return g;
}

Vector cost_grad_y(const FieldModel& field) {
  // Prices meet their own flows: output order is (oil, water, gas).
  Vector g(field.n_y());
  for (int i = 0; i < field.num_wells(); ++i) {
    g(3 * i) = -field.prices.p_o;
    g(3 * i + 1) = field.prices.p_w;
    g(3 * i + 2) = -field.prices.p_g;
  }
  return g;
}

PolyhedralSet availability_constraints(double cap, int num_wells) {
  if (cap < 0) throw ConfigError("gas-lift availability must be non-negative");
  if (num_wells <= 0) throw ConfigError("need at least one well");
  const int n_u = 2 * num_wells;
  PolyhedralSet set = PolyhedralSet::unconstrained(n_u);
  Vector total = Vector::Zero(n_u);
  for (int i = 0; i < num_wells; ++i) total(2 * i) = 1.0;
  set.add_row(total, cap);
  const PolyhedralSet box = PolyhedralSet::box(Vector::Zero(n_u), Vector::Ones(n_u));
  for (int r = 0; r < box.rows(); ++r) set.add_row(box.A.row(r).transpose(), box.b(r));
  return set;
}

}  // namespace ofo
