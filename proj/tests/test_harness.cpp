#include <doctest.h>

#include <cmath>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "ofo/errors.hpp"
#include "ofo/harness.hpp"
#include "ofo/plot.hpp"
#include "ofo/report.hpp"
#include "ofo/trace_io.hpp"
#include "oracles.hpp"

namespace fs = std::filesystem;
using ofo::Vector;

namespace {

fs::path scratch(const std::string& name) {
  const fs::path dir = fs::temp_directory_path() / "ofo_tests";
  fs::create_directories(dir);
  return dir / name;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::stringstream s;
  s << in.rdbuf();
  return s.str();
}

ofo::ScenarioConfig short_config(ofo::Variant variant, int steps = 60) {
  ofo::ScenarioConfig cfg;
  cfg.variant = variant;
  cfg.steps = steps;
  cfg.schedule = {{0, 2.0}, {steps / 2, 1.2}};
  return cfg;
}

}  // namespace

TEST_CASE("config parsing") {
  const auto cfg = ofo::parse_config(R"(
variant: gaussian
steps: 40
seed: 9
controller: {alpha: 0.002, sigma_noise: 3}
estimator: {sigma_m1: 0.5, h0: 0.25}
initial_input: {per_well: [0.2, 0.4]}
availability:
  - {start: 0, cap: 1.5}
  - {start: 20, cap: 1.0}
)");
  CHECK(cfg.variant == ofo::Variant::gaussian);
  CHECK(cfg.steps == 40);
  CHECK(cfg.seed == 9);
  CHECK(cfg.params.alpha == 0.002);
  CHECK(cfg.params.sigma_noise == 3.0);
  CHECK(cfg.params.gamma == 4.0);
  CHECK(cfg.noise.sigma_m1 == 0.5);
  CHECK(cfg.h0 == 0.25);
  CHECK(cfg.initial_input()(6) == 0.2);
  CHECK(cfg.initial_input()(7) == 0.4);
  CHECK(cfg.cap_at(19) == 1.5);
  CHECK(cfg.cap_at(20) == 1.0);

  const auto round = ofo::parse_config(ofo::to_yaml(cfg));
  CHECK(ofo::to_yaml(round) == ofo::to_yaml(cfg));
  CHECK(ofo::parse_config("").steps == 500);
}

TEST_CASE("config errors") {
  CHECK_THROWS_AS(ofo::parse_config("stepz: 3"), ofo::ConfigError);
  CHECK_THROWS_AS(ofo::parse_config("controller: {alpah: 1}"), ofo::ConfigError);
  CHECK_THROWS_AS(ofo::parse_config("variant: fancy"), ofo::ConfigError);
  CHECK_THROWS_AS(ofo::parse_config("steps: [1"), ofo::ConfigError);
  CHECK_THROWS_AS(ofo::parse_config("controller: {alpha: -1}"), ofo::ConfigError);
  CHECK_THROWS_AS(ofo::parse_config("availability: [{start: 1, cap: 2}]"), ofo::ConfigError);
  CHECK_THROWS_AS(ofo::parse_config("availability: [{start: 0, cap: 2}, {start: 0, cap: 1}]"),
                  ofo::ConfigError);
  // Sum of injection 4 * 0.6 exceeds the first cap.
  CHECK_THROWS_AS(ofo::parse_config("initial_input: {per_well: [0.6, 0.5]}"), ofo::ConfigError);
  CHECK_THROWS_AS(ofo::load_config("/nonexistent/config.yaml"), ofo::IoError);
}

TEST_CASE("trace rows follow the schedule and are deterministic") {
  const auto cfg = short_config(ofo::Variant::pe);
  const auto a = ofo::run_scenario(cfg);
  REQUIRE(a.rows.size() == 60);
  for (const auto& r : a.rows) CHECK(r.cap == cfg.cap_at(r.t));
  for (std::size_t t = 1; t < a.rows.size(); ++t) CHECK(a.rows[t].t == a.rows[t - 1].t + 1);

  const auto b = ofo::run_scenario(cfg);
  ofo::export_csv(a, scratch("det_a.csv").string());
  ofo::export_csv(b, scratch("det_b.csv").string());
  CHECK(slurp(scratch("det_a.csv")) == slurp(scratch("det_b.csv")));
}

TEST_CASE("csv round trip is exact") {
  const auto trace = ofo::run_scenario(short_config(ofo::Variant::gaussian, 20));
  const auto path = scratch("gaussian.csv").string();
  ofo::export_csv(trace, path);
  const auto back = ofo::import_csv(path);
  CHECK(back.label == "gaussian");
  REQUIRE(back.rows.size() == trace.rows.size());
  for (std::size_t t = 0; t < trace.rows.size(); ++t) {
    const auto& x = trace.rows[t];
    const auto& y = back.rows[t];
    CHECK(x.t == y.t);
    CHECK(x.cap == y.cap);
    CHECK(x.cost == y.cost);
    CHECK(x.u == y.u);
    CHECK(x.y == y.y);
    CHECK(x.s == y.s);
    CHECK(x.excitation == y.excitation);
    CHECK(x.excited == y.excited);
    CHECK(x.warmup == y.warmup);
    CHECK(x.estimate_error == y.estimate_error);
    CHECK(x.fp_iterations == y.fp_iterations);
    CHECK(x.fp_converged == y.fp_converged);
  }
  std::ifstream in(path);
  std::string header;
  std::getline(in, header);
  CHECK(header.rfind("t,cap,cost,u_0,", 0) == 0);
}

TEST_CASE("empty trace is not written") {
  const auto path = scratch("empty.csv");
  fs::remove(path);
  ofo::ScenarioTrace empty;
  CHECK_THROWS_AS(ofo::export_csv(empty, path.string()), ofo::IoError);
  CHECK_FALSE(fs::exists(path));
  CHECK_THROWS_AS(ofo::export_csv(ofo::run_scenario(short_config(ofo::Variant::plain, 4)),
                                  "/nonexistent/dir/x.csv"),
                  ofo::IoError);
}

TEST_CASE("monte carlo summary") {
  auto cfg = short_config(ofo::Variant::gaussian, 30);
  const auto one = ofo::monte_carlo(cfg, 1);
  const auto single = ofo::run_scenario(cfg).costs();
  CHECK(one.mean == single);
  for (double s : one.stddev) CHECK(s == 0.0);

  const int k = 6;
  const auto par = ofo::monte_carlo(cfg, k);
  const auto ser = ofo::monte_carlo_serial(cfg, k);
  CHECK(par.mean == ser.mean);
  CHECK(par.stddev == ser.stddev);
  CHECK(par.runs == k);
  CHECK(par.seeds.size() == static_cast<std::size_t>(k));
  std::vector<double> mean(cfg.steps, 0.0);
  for (int i = 0; i < k; ++i) {
    auto c = cfg;
    c.seed = ofo::run_seed(cfg, i);
    const auto costs = ofo::run_scenario(c).costs();
    for (int t = 0; t < cfg.steps; ++t) mean[t] += costs[t];
  }
  for (auto& m : mean) m /= k;
  CHECK(par.mean == mean);
  for (double s : par.stddev) CHECK(s >= 0.0);

  cfg.params.sigma_noise = 0.0;
  for (double s : ofo::monte_carlo(cfg, 4).stddev) CHECK(s == 0.0);
  CHECK_THROWS_AS(ofo::monte_carlo(cfg, 0), ofo::ConfigError);
}

TEST_CASE("compare report") {
  const auto trace = ofo::run_scenario(short_config(ofo::Variant::plain, 40));
  auto a = ofo::CostSeries::from_trace(trace);
  auto b = a;
  b.label = "copy";
  auto report = ofo::compare_report({a, b});
  CHECK(report.pct_diff[0][1] == 0.0);

  // Oracle against itself shifted by one step.
  auto shifted = a;
  for (std::size_t t = 0; t + 1 < a.costs.size(); ++t) shifted.costs[t] = a.costs[t + 1];
  report = ofo::compare_report({shifted, a}, 1);
  for (std::size_t t = 0; t + 1 < a.costs.size(); ++t) {
    CHECK(report.series[0].regret[t] == a.costs[t + 1] - a.costs[t]);
  }
  CHECK(report.final_segment_start == 20);

  auto other = a;
  other.caps.back() += 1.0;
  CHECK_THROWS_AS(ofo::compare_report({a, other}), ofo::ConfigError);
  other = a;
  other.costs.pop_back();
  other.caps.pop_back();
  CHECK_THROWS_AS(ofo::compare_report({a, other}), ofo::ConfigError);
}

TEST_CASE("comparison plot holds both series and the cap") {
  const auto p = ofo::run_scenario(short_config(ofo::Variant::plain, 30));
  auto g = ofo::run_scenario(short_config(ofo::Variant::pe, 30));
  const auto path = scratch("cost.svg");
  ofo::render_cost_plot({{ofo::CostSeries::from_trace(p), {}}, {ofo::CostSeries::from_trace(g), {}}},
                        path.string());
  const std::string svg = slurp(path);
  CHECK(svg.find("<svg") != std::string::npos);
  CHECK(svg.find("id=\"series-0\"") != std::string::npos);
  CHECK(svg.find("id=\"series-1\"") != std::string::npos);
  CHECK(svg.find("id=\"cap\"") != std::string::npos);
  CHECK(svg.find(">plain<") != std::string::npos);
  CHECK(svg.find(">pe<") != std::string::npos);

  const auto pert = scratch("perturbation.svg");
  ofo::render_perturbation_plot({p, g}, 0.001, pert.string());
  CHECK(slurp(pert).find(">u_7<") != std::string::npos);
}

TEST_CASE("oracle variant reaches the static optimum for a constant cap") {
  ofo::ScenarioConfig cfg;
  cfg.variant = ofo::Variant::oracle;
  cfg.params.alpha = 0.05;
  cfg.steps = 1500;
  cfg.schedule = {{0, 1.6}};
  const auto trace = ofo::run_scenario(cfg);
  const auto& last = trace.rows.back();
  const auto& prev = trace.rows[trace.rows.size() - 2];
  CHECK((last.u - prev.u).norm() < 1e-6);
  const auto opt = oracle::gas_lift_optimum(1.6);
  CHECK(std::abs(last.cost - opt.cost) <= 1e-8 * std::abs(opt.cost));
  for (int i = 0; i < 4; ++i) CHECK(std::abs(last.u(2 * i) - opt.q_inj[i]) < 1e-6);
}
