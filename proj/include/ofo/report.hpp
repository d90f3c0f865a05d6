#pragma once

#include <optional>
#include <string>
#include <vector>

#include "ofo/harness.hpp"

namespace ofo {

/// One controller's cost series, from a single trace or a Monte Carlo mean.
struct CostSeries {
  std::string label;
  std::vector<double> costs;
  std::vector<double> caps;
  std::optional<int> violations;
  std::optional<int> post_warmup_steps;

  static CostSeries from_trace(const ScenarioTrace& trace);
  static CostSeries from_summary(const MonteCarloSummary& summary, std::string label);
};

struct SeriesMetrics {
  std::string label;
  double cumulative_profit = 0.0;  // -sum of cost
  std::optional<int> violations;
  std::optional<int> post_warmup_steps;
  /// Against the oracle series, when one is given. Regret is cost minus oracle cost.
  std::vector<double> regret;
  double cumulative_regret = 0.0;
  /// Regret summed over the last availability segment, in percent of the
  /// oracle profit over that segment.
  double final_segment_regret_pct = 0.0;
};

struct CompareReport {
  std::vector<SeriesMetrics> series;
  /// pct_diff[i][j] = 100 (P_i - P_j) / |P_j| for cumulative profits P.
  std::vector<std::vector<double>> pct_diff;
  std::optional<std::size_t> oracle_index;
  int final_segment_start = 0;

  std::string to_text() const;
};

/// First step of the last constant-cap stretch.
int final_segment_start(const std::vector<double>& caps);

/// Throws ConfigError when the series differ in length or schedule.
CompareReport compare_report(const std::vector<CostSeries>& series,
                             std::optional<std::size_t> oracle_index = std::nullopt);

}  // namespace ofo
