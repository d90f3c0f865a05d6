#include <cmath>
#include <exception>
#include <string>

#include <spdlog/spdlog.h>

#include "ofo/errors.hpp"
#include "ofo/harness.hpp"

namespace ofo {

std::uint64_t run_seed(const ScenarioConfig& config, int run) {
  return config.seed + static_cast<std::uint64_t>(run);
}

namespace {

struct RunOutcome {
  std::vector<double> costs;
  bool ok = false;
  std::string error;
};

RunOutcome one_run(const ScenarioConfig& config, int run) {
  RunOutcome out;
  ScenarioConfig cfg = config;
  cfg.seed = run_seed(config, run);
  try {
    out.costs = run_scenario(cfg).costs();
    out.ok = true;
  } catch (const std::exception& e) {
    out.error = e.what();
  }
  return out;
}

MonteCarloSummary reduce(const ScenarioConfig& config, const std::vector<RunOutcome>& outcomes) {
  const int runs = static_cast<int>(outcomes.size());
  MonteCarloSummary summary;
  summary.runs = runs;
  for (int i = 0; i < runs; ++i) {
    const auto seed = run_seed(config, i);
    summary.seeds.push_back(seed);
    if (!outcomes[i].ok) {
      summary.failed_seeds.push_back(seed);
      spdlog::warn("monte carlo run with seed {} failed: {}", seed, outcomes[i].error);
    }
  }
  const int completed = runs - static_cast<int>(summary.failed_seeds.size());
  if (completed == 0 || 20 * completed < 19 * runs) {
    throw NumericalError("monte carlo aborted: " + std::to_string(runs - completed) + " of " +
                         std::to_string(runs) + " runs failed");
  }

  const auto steps = static_cast<std::size_t>(config.steps);
  summary.mean.assign(steps, 0.0);
  summary.stddev.assign(steps, 0.0);
  summary.cap.resize(steps);
  for (std::size_t t = 0; t < steps; ++t) summary.cap[t] = config.cap_at(static_cast<int>(t));

  for (const auto& o : outcomes) {
    if (!o.ok) continue;
    for (std::size_t t = 0; t < steps; ++t) summary.mean[t] += o.costs[t];
  }
  for (auto& m : summary.mean) m /= completed;
  for (const auto& o : outcomes) {
    if (!o.ok) continue;
    for (std::size_t t = 0; t < steps; ++t) {
      const double d = o.costs[t] - summary.mean[t];
      summary.stddev[t] += d * d;
    }
  }
  for (auto& s : summary.stddev) s = std::sqrt(s / completed);
  return summary;
}

}  // namespace

MonteCarloSummary monte_carlo(const ScenarioConfig& config, int runs) {
  if (runs <= 0) throw ConfigError("monte carlo needs at least one run");
  config.validate();
  std::vector<RunOutcome> outcomes(runs);
#pragma omp parallel for schedule(dynamic)
  for (int i = 0; i < runs; ++i) outcomes[i] = one_run(config, i);
  return reduce(config, outcomes);
}

MonteCarloSummary monte_carlo_serial(const ScenarioConfig& config, int runs) {
  if (runs <= 0) throw ConfigError("monte carlo needs at least one run");
  config.validate();
  std::vector<RunOutcome> outcomes(runs);
  for (int i = 0; i < runs; ++i) outcomes[i] = one_run(config, i);
  return reduce(config, outcomes);
}

}  // namespace ofo
