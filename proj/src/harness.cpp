#include <random>
#include <string>

#include <spdlog/spdlog.h>

#include "ofo/errors.hpp"
#include "ofo/harness.hpp"

namespace ofo {

std::vector<double> ScenarioTrace::costs() const {
  std::vector<double> out;
  out.reserve(rows.size());
  for (const auto& r : rows) out.push_back(r.cost);
  return out;
}

std::vector<double> ScenarioTrace::caps() const {
  std::vector<double> out;
  out.reserve(rows.size());
  for (const auto& r : rows) out.push_back(r.cap);
  return out;
}

int ScenarioTrace::violations() const {
  int count = 0;
  for (const auto& r : rows) count += (!r.warmup && !r.excited) ? 1 : 0;
  return count;
}

int ScenarioTrace::post_warmup_steps() const {
  int count = 0;
  for (const auto& r : rows) count += r.warmup ? 0 : 1;
  return count;
}

namespace {

CostModel field_cost(const FieldModel& field) {
  const Vector gu = cost_grad_u(field);
  const Vector gy = cost_grad_y(field);
  return {[field](const Vector& u, const Vector& y) { return profit(field, u, y); },
          [gu](const Vector&, const Vector&) { return gu; },
          [gy](const Vector&, const Vector&) { return gy; }};
}

}  // namespace

ScenarioTrace run_scenario(const ScenarioConfig& config) {
  config.validate();
  const FieldModel& field = config.field;
  const int n_u = field.n_u();
  const int n_y = field.n_y();

  JacobianOracle oracle;
  if (config.variant == Variant::oracle) {
    oracle = [field](const Vector& u) { return analytic_jacobian(field, u); };
  }
  Controller controller(config.variant, field_cost(field), config.params, config.noise,
                        SensitivityEstimate::initial(n_u, n_y, config.h0, config.sigma0),
                        config.initial_input(), config.seed, oracle);
  // The plant noise stream is separate from the controller's perturbation stream.
  std::mt19937_64 plant_rng(config.seed ^ 0x9e3779b97f4a7c15ULL);

  ScenarioTrace trace;
  trace.label = std::string(to_string(config.variant));
  trace.n_u = n_u;
  trace.n_y = n_y;
  trace.rows.reserve(config.steps);

  ConstraintSpec spec;
  double active_cap = -1.0;
  for (int t = 0; t < config.steps; ++t) {
    const double cap = config.cap_at(t);
    if (cap != active_cap) {
      spec.input_set = availability_constraints(cap, field.num_wells());
      active_cap = cap;
    }
    const Vector u = controller.input();
    const Vector y_true = evaluate(field, u);
    const Vector y_meas = field.measurement_noise_std > 0 ? measure(field, u, plant_rng) : y_true;

    StepRecord rec;
    try {
      rec = controller.step(y_meas, spec);
    } catch (const NumericalError& e) {
      throw NumericalError(trace.label + " run aborted: " + e.what());
    }

    TraceRow row;
    row.t = t;
    row.cap = cap;
    row.cost = profit(field, u, y_true);
    row.u = u;
    row.y = y_meas;
    row.s = rec.s;
    row.excitation = rec.excitation;
    row.excited = rec.excited;
    row.warmup = rec.warmup;
    row.fp_iterations = rec.fp_iterations;
    row.fp_converged = rec.fp_converged;
    if (config.variant != Variant::oracle) {
      row.estimate_error = (jacobian(controller.estimate()) - analytic_jacobian(field, u)).norm();
    }
    if (rec.fallback) spdlog::debug("step {}: excitation fallback to the plain step", t);
    trace.rows.push_back(std::move(row));
  }
  return trace;
}

}  // namespace ofo
