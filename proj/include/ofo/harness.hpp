#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "ofo/controller.hpp"
#include "ofo/estimator.hpp"
#include "ofo/plant.hpp"

namespace ofo {

struct AvailabilityStep {
  int start = 0;
  double cap = 0.0;
};

struct ScenarioConfig {
  FieldModel field = default_field();
  Variant variant = Variant::pe;
  PeParameters params;
  NoiseModel noise;
  double h0 = 1.0;      // initial value of every sensitivity entry
  double sigma0 = 1.0;  // initial covariance scale
  /// Initial input; empty means (0.1, 0.5) per well.
  Vector u0;
  std::vector<AvailabilityStep> schedule{{0, 2.0}, {100, 1.2}, {200, 2.6}, {300, 1.6}, {400, 2.2}};
  int steps = 500;
  std::uint64_t seed = 1;

  Vector initial_input() const;
  double cap_at(int t) const;
  /// Throws ConfigError when any invariant fails.
  void validate() const;
};

ScenarioConfig parse_config(const std::string& yaml_text);
ScenarioConfig load_config(const std::string& path);
std::string to_yaml(const ScenarioConfig& config);

struct TraceRow {
  int t = 0;
  double cap = 0.0;
  double cost = 0.0;
  Vector u;
  Vector y;
  Vector s;
  double excitation = 0.0;
  bool excited = false;
  bool warmup = true;
  double estimate_error = 0.0;
  int fp_iterations = 0;
  bool fp_converged = true;
};

struct ScenarioTrace {
  std::string label;
  int n_u = 0;
  int n_y = 0;
  std::vector<TraceRow> rows;

  std::vector<double> costs() const;
  std::vector<double> caps() const;
  /// Post-warm-up steps whose applied delta failed the excitation check.
  int violations() const;
  int post_warmup_steps() const;
};

/// Closed loop: measure y at u_t, step the controller, apply u_{t+1}.
/// The oracle variant replaces the estimate with the analytic Jacobian.
ScenarioTrace run_scenario(const ScenarioConfig& config);

struct MonteCarloSummary {
  std::vector<double> mean;
  std::vector<double> stddev;  // population standard deviation
  std::vector<double> cap;
  int runs = 0;
  std::vector<std::uint64_t> seeds;
  std::vector<std::uint64_t> failed_seeds;
};

/// Seed of run i is config.seed + i.
std::uint64_t run_seed(const ScenarioConfig& config, int run);

/// Independent runs in parallel (OpenMP). The reduction runs in seed order, so
/// the result does not depend on scheduling and equals monte_carlo_serial.
MonteCarloSummary monte_carlo(const ScenarioConfig& config, int runs);
MonteCarloSummary monte_carlo_serial(const ScenarioConfig& config, int runs);

}  // namespace ofo
