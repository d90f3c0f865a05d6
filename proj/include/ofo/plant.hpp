#pragma once

#include <random>
#include <vector>

#include "ofo/constraints.hpp"
#include "ofo/types.hpp"

namespace ofo {

/// Normalized gas-lift performance curve
///   q_o = (log_gain * log10(1 + saturation * q_inj) - quad_loss * q_inj^2
///          + choke_gain * v) / norm
struct GlprCurve {
  double log_gain = 0.0;
  double saturation = 0.0;
  double quad_loss = 0.0;
  double choke_gain = 0.0;
  double norm = 1.0;

  double oil(double q_inj, double v) const;
  double d_oil_d_inj(double q_inj) const;
  double d_oil_d_choke() const { return choke_gain / norm; }
};

struct WellModel {
  GlprCurve glpr;
  double r_g = 0.0;  // gas / oil
  double r_w = 0.0;  // water / oil
};

struct PriceModel {
  double p_o = 5.0;
  double p_g = 1.0;
  double p_w = 0.3;
  double p_inj = 0.7;
};

/// N wells sharing one gas-lift supply. Inputs are stacked per well as
/// (q_inj, v), outputs as (oil, water, gas).
struct FieldModel {
  std::vector<WellModel> wells;
  PriceModel prices;
  /// Standard deviation of additive Gaussian noise on every measured output.
  double measurement_noise_std = 0.0;

  int num_wells() const { return static_cast<int>(wells.size()); }
  int n_u() const { return 2 * num_wells(); }
  int n_y() const { return 3 * num_wells(); }
  void validate() const;
};

/// The four-well field with the published curves, ratios and prices.
FieldModel default_field();

Vector evaluate(const FieldModel& field, const Vector& u);
/// evaluate() plus measurement noise drawn from `rng` when the field has any.
Vector measure(const FieldModel& field, const Vector& u, std::mt19937_64& rng);
Matrix analytic_jacobian(const FieldModel& field, const Vector& u);

/// Minimized cost (negative profit)
///   sum_i -p_o q_o + p_w q_w - p_g q_g + p_inj q_inj.
double profit(const FieldModel& field, const Vector& u, const Vector& y);
Vector cost_grad_u(const FieldModel& field);
Vector cost_grad_y(const FieldModel& field);

/// Shared gas-lift row sum(q_inj) <= cap (row 0) followed by the [0, 1] box on
/// every input.
PolyhedralSet availability_constraints(double cap, int num_wells);

}  // namespace ofo
