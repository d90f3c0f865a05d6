#include "ofo/report.hpp"

#include <cmath>
#include <cstdio>

#include "ofo/errors.hpp"

namespace ofo {

CostSeries CostSeries::from_trace(const ScenarioTrace& trace) {
  return {trace.label, trace.costs(), trace.caps(), trace.violations(), trace.post_warmup_steps()};
}

CostSeries CostSeries::from_summary(const MonteCarloSummary& summary, std::string label) {
  return {std::move(label), summary.mean, summary.cap, std::nullopt, std::nullopt};
}

int final_segment_start(const std::vector<double>& caps) {
  int start = 0;
  for (std::size_t t = 1; t < caps.size(); ++t) {
    if (caps[t] != caps[t - 1]) start = static_cast<int>(t);
  }
  return start;
}

CompareReport compare_report(const std::vector<CostSeries>& series,
                             std::optional<std::size_t> oracle_index) {
  if (series.empty()) throw ConfigError("compare needs at least one series");
  if (oracle_index && *oracle_index >= series.size()) throw ConfigError("oracle index out of range");
  const auto& ref = series.front();
  for (const auto& s : series) {
    if (s.costs.size() != ref.costs.size() || s.costs.size() != s.caps.size()) {
      throw ConfigError("series '" + s.label + "' has a different step count");
    }
    if (s.caps != ref.caps) throw ConfigError("series '" + s.label + "' has a different schedule");
  }
  CompareReport report;
  report.oracle_index = oracle_index;
  report.final_segment_start = final_segment_start(ref.caps);
  const auto steps = ref.costs.size();
  const auto seg = static_cast<std::size_t>(report.final_segment_start);

  for (const auto& s : series) {
    SeriesMetrics m;
    m.label = s.label;
    for (double c : s.costs) m.cumulative_profit -= c;
    m.violations = s.violations;
    m.post_warmup_steps = s.post_warmup_steps;
    if (oracle_index) {
      const auto& oracle = series[*oracle_index].costs;
      m.regret.resize(steps);
      double seg_regret = 0.0;
      double seg_profit = 0.0;
      for (std::size_t t = 0; t < steps; ++t) {
        m.regret[t] = s.costs[t] - oracle[t];
        m.cumulative_regret += m.regret[t];
        if (t >= seg) {
          seg_regret += m.regret[t];
          seg_profit -= oracle[t];
        }
      }
      m.final_segment_regret_pct = seg_profit != 0.0 ? 100.0 * seg_regret / std::abs(seg_profit) : 0.0;
    }
    report.series.push_back(std::move(m));
  }
  const auto k = report.series.size();
  report.pct_diff.assign(k, std::vector<double>(k, 0.0));
  for (std::size_t i = 0; i < k; ++i) {
    for (std::size_t j = 0; j < k; ++j) {
      const double pj = report.series[j].cumulative_profit;
      const double pi = report.series[i].cumulative_profit;
      report.pct_diff[i][j] = pi == pj ? 0.0 : 100.0 * (pi - pj) / std::abs(pj);
    }
  }
  return report;
}

std::string CompareReport::to_text() const {
  std::string out;
  char buf[256];
  std::snprintf(buf, sizeof buf, "%-16s %16s %12s %14s %14s\n", "series", "cum_profit", "violations",
                "cum_regret", "final_seg_%");
  out += buf;
  for (const auto& m : series) {
    const std::string viol = m.violations ? std::to_string(*m.violations) + "/" +
                                                std::to_string(m.post_warmup_steps.value_or(0))
                                          : "-";
    if (oracle_index) {
      std::snprintf(buf, sizeof buf, "%-16s %16.6f %12s %14.6f %14.6f\n", m.label.c_str(),
                    m.cumulative_profit, viol.c_str(), m.cumulative_regret,
                    m.final_segment_regret_pct);
    } else {
      std::snprintf(buf, sizeof buf, "%-16s %16.6f %12s %14s %14s\n", m.label.c_str(),
                    m.cumulative_profit, viol.c_str(), "-", "-");
    }
    out += buf;
  }
  out += "\nprofit difference in percent (row vs column)\n";
  std::snprintf(buf, sizeof buf, "%-16s", "");
  out += buf;
  for (const auto& m : series) {
    std::snprintf(buf, sizeof buf, " %12s", m.label.substr(0, 12).c_str());
    out += buf;
  }
  out += "\n";
  for (std::size_t i = 0; i < series.size(); ++i) {
    std::snprintf(buf, sizeof buf, "%-16s", series[i].label.c_str());
    out += buf;
    for (double d : pct_diff[i]) {
      std::snprintf(buf, sizeof buf, " %12.4f", d);
      out += buf;
    }
    out += "\n";
  }
  return out;
}

}  // namespace ofo
