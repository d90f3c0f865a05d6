#include "ofo/trace_io.hpp"

#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <vector>

#include "ofo/errors.hpp"

namespace ofo {

namespace {

constexpr const char* summary_header = "t,cap,mean,std";

void put(std::string& line, double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  line += buf;
}

std::vector<std::string> split(const std::string& line) {
  std::vector<std::string> out;
  std::stringstream ss(line);
  std::string cell;
  while (std::getline(ss, cell, ',')) out.push_back(cell);
  if (!line.empty() && line.back() == ',') out.emplace_back();
  return out;
}

double parse_double(const std::string& cell, const std::string& path, int line) {
  char* end = nullptr;
  const double v = std::strtod(cell.c_str(), &end);
  if (cell.empty() || end != cell.c_str() + cell.size()) {
    throw IoError(path + ":" + std::to_string(line) + ": bad number '" + cell + "'");
  }
  return v;
}

std::ifstream open_in(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open '" + path + "'");
  return in;
}

void write_file(const std::string& path, const std::string& content) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot write '" + path + "'");
  out << content;
  out.close();
  if (!out) throw IoError("write failed for '" + path + "'");
}

std::string strip_cr(std::string line) {
  if (!line.empty() && line.back() == '\r') line.pop_back();
  return line;
}

}  // namespace

std::string trace_header(int n_u, int n_y) {
  std::string h = "t,cap,cost";
  for (int i = 0; i < n_u; ++i) h += ",u_" + std::to_string(i);
  for (int i = 0; i < n_y; ++i) h += ",y_" + std::to_string(i);
  for (int i = 0; i < n_u; ++i) h += ",s_" + std::to_string(i);
  h += ",excitation,excited,warmup,est_error,fp_iter,fp_converged";
  return h;
}

void export_csv(const ScenarioTrace& trace, const std::string& path) {
  if (trace.rows.empty()) throw IoError("refusing to export an empty trace to '" + path + "'");
  std::string out = trace_header(trace.n_u, trace.n_y) + "\n";
  for (const auto& r : trace.rows) {
    std::string line = std::to_string(r.t) + ",";
    put(line, r.cap);
    line += ",";
    put(line, r.cost);
    for (const Vector* v : {&r.u, &r.y, &r.s}) {
      for (int i = 0; i < v->size(); ++i) {
        line += ",";
        put(line, (*v)(i));
      }
    }
    line += ",";
    put(line, r.excitation);
    line += r.excited ? ",1" : ",0";
    line += r.warmup ? ",1," : ",0,";
    put(line, r.estimate_error);
    line += "," + std::to_string(r.fp_iterations) + (r.fp_converged ? ",1" : ",0");
    out += line + "\n";
  }
  write_file(path, out);
}

ScenarioTrace import_csv(const std::string& path) {
  auto in = open_in(path);
  std::string line;
  if (!std::getline(in, line)) throw IoError("'" + path + "' is empty");
  const auto header = split(strip_cr(line));
  int n_u = 0;
  int n_y = 0;
  for (const auto& h : header) {
    n_u += h.rfind("u_", 0) == 0 ? 1 : 0;
    n_y += h.rfind("y_", 0) == 0 ? 1 : 0;
  }
  if (strip_cr(line) != trace_header(n_u, n_y)) {
    throw IoError("'" + path + "' does not have the trace header");
  }
  ScenarioTrace trace;
  trace.label = std::filesystem::path(path).stem().string();
  trace.n_u = n_u;
  trace.n_y = n_y;
  int lineno = 1;
  while (std::getline(in, line)) {
    ++lineno;
    line = strip_cr(line);
    if (line.empty()) continue;
    const auto cells = split(line);
    if (cells.size() != header.size()) {
      throw IoError(path + ":" + std::to_string(lineno) + ": expected " +
                    std::to_string(header.size()) + " fields");
    }
    std::size_t c = 0;
    auto next = [&] { return parse_double(cells[c++], path, lineno); };
    TraceRow r;
    r.t = static_cast<int>(next());
    r.cap = next();
    r.cost = next();
    r.u.resize(n_u);
    r.y.resize(n_y);
    r.s.resize(n_u);
    for (int i = 0; i < n_u; ++i) r.u(i) = next();
    for (int i = 0; i < n_y; ++i) r.y(i) = next();
    for (int i = 0; i < n_u; ++i) r.s(i) = next();
    r.excitation = next();
    r.excited = next() != 0.0;
    r.warmup = next() != 0.0;
    r.estimate_error = next();
    r.fp_iterations = static_cast<int>(next());
    r.fp_converged = next() != 0.0;
    trace.rows.push_back(std::move(r));
  }
  if (trace.rows.empty()) throw IoError("'" + path + "' has no rows");
  return trace;
}

void export_summary_csv(const MonteCarloSummary& summary, const std::string& path) {
  if (summary.mean.empty()) throw IoError("refusing to export an empty summary to '" + path + "'");
  std::string out = std::string(summary_header) + "\n";
  for (std::size_t t = 0; t < summary.mean.size(); ++t) {
    std::string line = std::to_string(t) + ",";
    put(line, summary.cap[t]);
    line += ",";
    put(line, summary.mean[t]);
    line += ",";
    put(line, summary.stddev[t]);
    out += line + "\n";
  }
  write_file(path, out);
}

MonteCarloSummary import_summary_csv(const std::string& path) {
  auto in = open_in(path);
  std::string line;
  if (!std::getline(in, line) || strip_cr(line) != summary_header) {
    throw IoError("'" + path + "' does not have the summary header");
  }
  MonteCarloSummary s;
  int lineno = 1;
  while (std::getline(in, line)) {
    ++lineno;
    line = strip_cr(line);
    if (line.empty()) continue;
    const auto cells = split(line);
    if (cells.size() != 4) throw IoError(path + ":" + std::to_string(lineno) + ": expected 4 fields");
    s.cap.push_back(parse_double(cells[1], path, lineno));
    s.mean.push_back(parse_double(cells[2], path, lineno));
    s.stddev.push_back(parse_double(cells[3], path, lineno));
  }
  if (s.mean.empty()) throw IoError("'" + path + "' has no rows");
  return s;
}

bool is_summary_csv(const std::string& path) {
  auto in = open_in(path);
  std::string line;
  return std::getline(in, line) && strip_cr(line) == summary_header;
}

}  // namespace ofo
