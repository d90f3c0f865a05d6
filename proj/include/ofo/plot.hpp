#pragma once

#include <string>
#include <vector>

#include "ofo/harness.hpp"
#include "ofo/report.hpp"

namespace ofo {

struct PlotSeries {
  CostSeries series;
  /// Optional +-1 std band (Monte Carlo summaries).
  std::vector<double> stddev;
};

/// Cost against step, one polyline per series, with the availability cap on a
/// secondary axis. Writes a standalone SVG.
void render_cost_plot(const std::vector<PlotSeries>& series, const std::string& path);

/// One panel per input coordinate with the applied perturbation of each trace.
/// Perturbations of traces labelled "pe" are divided by alpha so they share a
/// scale with the gradient-space Gaussian samples.
void render_perturbation_plot(const std::vector<ScenarioTrace>& traces, double alpha,
                              const std::string& path);

}  // namespace ofo
