#include "ofo/plot.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <limits>

#include "ofo/errors.hpp"

namespace ofo {

namespace {

const char* const palette[] = {"#1f77b4", "#d62728", "#2ca02c", "#ff7f0e", "#9467bd", "#8c564b"};

struct Axis {
  double lo = 0.0;
  double hi = 1.0;
  double px_lo = 0.0;  // pixel of lo
  double px_hi = 1.0;  // pixel of hi
  double map(double v) const { return px_lo + (v - lo) / (hi - lo) * (px_hi - px_lo); }
};

Axis padded(double lo, double hi, double px_lo, double px_hi) {
  if (!(hi > lo)) {
    const double d = std::max(1e-12, std::abs(lo) * 0.05 + 1e-12);
    lo -= d;
    hi += d;
  }
  const double pad = 0.05 * (hi - lo);
  return {lo - pad, hi + pad, px_lo, px_hi};
}

std::string num(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.4g", v);
  return buf;
}

std::string polyline(const std::vector<double>& ys, const Axis& x, const Axis& y,
                     const std::string& color, const std::string& extra = "") {
  std::string out = "<polyline fill=\"none\" stroke=\"" + color + "\" stroke-width=\"1.2\"" +
                    extra + " points=\"";
  for (std::size_t t = 0; t < ys.size(); ++t) {
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.2f,%.2f ", x.map(static_cast<double>(t)), y.map(ys[t]));
    out += buf;
  }
  return out + "\"/>\n";
}

std::string band(const std::vector<double>& mean, const std::vector<double>& sd, const Axis& x,
                 const Axis& y, const std::string& color) {
  std::string out = "<polygon fill=\"" + color + "\" fill-opacity=\"0.2\" stroke=\"none\" points=\"";
  char buf[64];
  for (std::size_t t = 0; t < mean.size(); ++t) {
    std::snprintf(buf, sizeof buf, "%.2f,%.2f ", x.map(static_cast<double>(t)),
                  y.map(mean[t] + sd[t]));
    out += buf;
  }
  for (std::size_t t = mean.size(); t-- > 0;) {
    std::snprintf(buf, sizeof buf, "%.2f,%.2f ", x.map(static_cast<double>(t)),
                  y.map(mean[t] - sd[t]));
    out += buf;
  }
  return out + "\"/>\n";
}

std::string text(double x, double y, const std::string& s, const std::string& anchor = "middle",
                 const std::string& extra = "") {
  char buf[96];
  std::snprintf(buf, sizeof buf, "<text x=\"%.1f\" y=\"%.1f\" text-anchor=\"%s\"", x, y,
                anchor.c_str());
  return std::string(buf) + extra + ">" + s + "</text>\n";
}

std::string frame(const Axis& x, const Axis& y) {
  char buf[160];
  std::snprintf(buf, sizeof buf,
                "<rect x=\"%.1f\" y=\"%.1f\" width=\"%.1f\" height=\"%.1f\" fill=\"none\" "
                "stroke=\"#444\"/>\n",
                x.px_lo, y.px_hi, x.px_hi - x.px_lo, y.px_lo - y.px_hi);
  std::string out = buf;
  for (int k = 0; k <= 4; ++k) {
    const double xv = x.lo + (x.hi - x.lo) * k / 4.0;
    const double yv = y.lo + (y.hi - y.lo) * k / 4.0;
    out += text(x.map(xv), y.px_lo + 14, num(xv));
    out += text(x.px_lo - 4, y.map(yv) + 4, num(yv), "end");
  }
  return out;
}

void write_svg(const std::string& path, const std::string& body, int width, int height) {
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw IoError("cannot write '" + path + "'");
  out << "<?xml version=\"1.0\" encoding=\"UTF-8\"?>\n"
      << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << width << "\" height=\"" << height
      << "\" font-family=\"sans-serif\" font-size=\"11\">\n"
      << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n"
      << body << "</svg>\n";
  if (!out) throw IoError("write failed for '" + path + "'");
}

}  // namespace

void render_cost_plot(const std::vector<PlotSeries>& series, const std::string& path) {
  if (series.empty()) throw ConfigError("nothing to plot");
  const auto steps = series.front().series.costs.size();
  if (steps == 0) throw ConfigError("cannot plot an empty series");
  double lo = std::numeric_limits<double>::infinity();
  double hi = -lo;
  for (const auto& s : series) {
    if (s.series.costs.size() != steps) throw ConfigError("plot series differ in length");
    for (std::size_t t = 0; t < steps; ++t) {
      const double sd = s.stddev.empty() ? 0.0 : s.stddev[t];
      lo = std::min(lo, s.series.costs[t] - sd);
      hi = std::max(hi, s.series.costs[t] + sd);
    }
  }
  const auto& caps = series.front().series.caps;
  const double cap_hi = *std::max_element(caps.begin(), caps.end());

  const int width = 820;
  const int height = 440;
  const Axis x{0.0, static_cast<double>(steps - 1), 70.0, width - 80.0};
  const Axis y = padded(lo, hi, height - 50.0, 40.0);
  const Axis y_cap = padded(0.0, cap_hi, height - 50.0, 40.0);

  std::string body = frame(x, y);
  for (int k = 0; k <= 4; ++k) {
    const double v = y_cap.lo + (y_cap.hi - y_cap.lo) * k / 4.0;
    body += text(x.px_hi + 4, y_cap.map(v) + 4, num(v), "start", " fill=\"#777\"");
  }
  body += text((x.px_lo + x.px_hi) / 2, height - 12.0, "time step");
  body += text(16, height / 2.0, "cost", "middle", " transform=\"rotate(-90 16 220)\"");
  body += text(width - 14.0, height / 2.0, "gas-lift availability", "middle",
               " fill=\"#777\" transform=\"rotate(90 806 220)\"");
  body += "<g id=\"cap\">\n" +
          polyline(caps, x, y_cap, "#777", " stroke-dasharray=\"4 3\"") + "</g>\n";
  for (std::size_t i = 0; i < series.size(); ++i) {
    const std::string color = palette[i % std::size(palette)];
    const auto& s = series[i];
    body += "<g id=\"series-" + std::to_string(i) + "\">\n";
    if (!s.stddev.empty()) body += band(s.series.costs, s.stddev, x, y, color);
    body += polyline(s.series.costs, x, y, color) + "</g>\n";
    body += "<line x1=\"" + num(x.px_lo + 10) + "\" y1=\"" + num(52.0 + 14 * i) + "\" x2=\"" +
            num(x.px_lo + 30) + "\" y2=\"" + num(52.0 + 14 * i) + "\" stroke=\"" + color + "\"/>\n";
    body += text(x.px_lo + 34, 56.0 + 14 * i, s.series.label, "start");
  }
  write_svg(path, body, width, height);
}

void render_perturbation_plot(const std::vector<ScenarioTrace>& traces, double alpha,
                              const std::string& path) {
  if (traces.empty()) throw ConfigError("nothing to plot");
  const int n_u = traces.front().n_u;
  for (const auto& tr : traces) {
    if (tr.rows.empty()) throw ConfigError("cannot plot an empty trace");
    if (tr.n_u != n_u) throw ConfigError("traces differ in input dimension");
  }
  const int width = 820;
  const int panel = 120;
  const int height = 40 + panel * n_u + 30;
  std::string body;
  for (int i = 0; i < n_u; ++i) {
    std::vector<std::vector<double>> lines;
    double lo = std::numeric_limits<double>::infinity();
    double hi = -lo;
    std::size_t steps = 0;
    for (const auto& tr : traces) {
      const double scale = tr.label == "pe" ? 1.0 / alpha : 1.0;
      std::vector<double> v;
      for (const auto& r : tr.rows) v.push_back(scale * r.s(i));
      lo = std::min(lo, *std::min_element(v.begin(), v.end()));
      hi = std::max(hi, *std::max_element(v.begin(), v.end()));
      steps = std::max(steps, v.size());
      lines.push_back(std::move(v));
    }
    const double top = 30.0 + panel * i;
    const Axis x{0.0, static_cast<double>(std::max<std::size_t>(steps, 2) - 1), 70.0,
                 width - 30.0};
    const Axis y = padded(lo, hi, top + panel - 20.0, top + 4.0);
    body += frame(x, y);
    body += text(x.px_lo + 6, top + 16, "u_" + std::to_string(i), "start");
    for (std::size_t k = 0; k < lines.size(); ++k) {
      body += polyline(lines[k], x, y, palette[k % std::size(palette)]);
    }
  }
  for (std::size_t k = 0; k < traces.size(); ++k) {
    body += text(80.0 + 120.0 * k, 16.0, traces[k].label, "start",
                 std::string(" fill=\"") + palette[k % std::size(palette)] + "\"");
  }
  write_svg(path, body, width, height);
}

}  // namespace ofo
