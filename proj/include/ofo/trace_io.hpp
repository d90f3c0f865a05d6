#pragma once

#include <string>

#include "ofo/harness.hpp"

namespace ofo {

/// Trace CSV header, with u_i, y_i and s_i expanded per index:
///   t,cap,cost,u_0..,y_0..,s_0..,excitation,excited,warmup,est_error,fp_iter,fp_converged
/// Floats are written with 17 significant digits so a re-import is exact.
std::string trace_header(int n_u, int n_y);

/// Throws IoError on an empty trace (no file is created) or a write failure.
void export_csv(const ScenarioTrace& trace, const std::string& path);
/// The label is the file stem.
ScenarioTrace import_csv(const std::string& path);

/// Header t,cap,mean,std.
void export_summary_csv(const MonteCarloSummary& summary, const std::string& path);
MonteCarloSummary import_summary_csv(const std::string& path);

/// True when the file starts with the summary header.
bool is_summary_csv(const std::string& path);

}  // namespace ofo
