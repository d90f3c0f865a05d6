// ofo: run, compare and plot feedback-optimization scenarios.
//
// Exit codes: 0 ok, 1 config error, 2 numerical failure, 3 I/O error.
// OFO_LOG_LEVEL sets the log level (trace, debug, info, warn, error, off).

#include <cstdlib>
#include <filesystem>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <spdlog/spdlog.h>

#include "ofo/errors.hpp"
#include "ofo/harness.hpp"
#include "ofo/plot.hpp"
#include "ofo/report.hpp"
#include "ofo/trace_io.hpp"

namespace fs = std::filesystem;

namespace {

enum Exit { ok = 0, config_error = 1, numerical_error = 2, io_error = 3 };

void ensure_dir(const std::string& dir) {
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec) throw ofo::IoError("cannot create directory '" + dir + "': " + ec.message());
}

struct Loaded {
  std::vector<ofo::ScenarioTrace> traces;
  std::vector<ofo::PlotSeries> series;
};

Loaded load_all(const std::vector<std::string>& paths) {
  Loaded out;
  for (const auto& p : paths) {
    if (ofo::is_summary_csv(p)) {
      const auto s = ofo::import_summary_csv(p);
      out.series.push_back({ofo::CostSeries::from_summary(s, fs::path(p).stem().string()), s.stddev});
    } else {
      auto tr = ofo::import_csv(p);
      out.series.push_back({ofo::CostSeries::from_trace(tr), {}});
      out.traces.push_back(std::move(tr));
    }
  }
  return out;
}

}  // namespace

int main(int argc, char** argv) {
  if (const char* level = std::getenv("OFO_LOG_LEVEL")) {
    spdlog::set_level(spdlog::level::from_str(level));
  } else {
    spdlog::set_level(spdlog::level::warn);
  }

  CLI::App app{"Online feedback optimization scenarios for a gas-lifted oil field"};
  app.require_subcommand(1);

  std::string config_path;
  std::string out_dir = ".";
  std::optional<std::uint64_t> seed;
  std::optional<std::string> variant;
  int runs = 100;
  std::vector<std::string> inputs;
  std::optional<std::string> oracle_path;
  double alpha = 0.001;

  auto* run = app.add_subcommand("run", "simulate one closed-loop scenario and write <variant>.csv");
  run->add_option("config", config_path, "YAML scenario file")->required();
  run->add_option("--out", out_dir, "output directory");
  run->add_option("--seed", seed, "override the config seed");
  run->add_option("--variant", variant, "override the controller variant");

  auto* mc = app.add_subcommand("montecarlo", "seeded repetitions, writes <variant>_mc.csv");
  mc->add_option("config", config_path, "YAML scenario file")->required();
  mc->add_option("--runs", runs, "number of runs")->required()->check(CLI::PositiveNumber);
  mc->add_option("--out", out_dir, "output directory");
  mc->add_option("--seed", seed, "override the base seed");
  mc->add_option("--variant", variant, "override the controller variant");

  auto* cmp = app.add_subcommand("compare", "profit, regret and violation metrics");
  cmp->add_option("traces", inputs, "trace or summary CSV files")->required();
  cmp->add_option("--oracle", oracle_path, "oracle trace used for regret");

  auto* plot = app.add_subcommand("plot", "write cost.svg and perturbation.svg");
  plot->add_option("traces", inputs, "trace or summary CSV files")->required();
  plot->add_option("--out", out_dir, "output directory");
  plot->add_option("--alpha", alpha, "step size used to scale PE perturbations");

  auto* val = app.add_subcommand("validate", "parse and check a config, print the resolved YAML");
  val->add_option("config", config_path, "YAML scenario file")->required();

  CLI11_PARSE(app, argc, argv);

  try {
    if (*run || *mc || *val) {
      auto cfg = ofo::load_config(config_path);
      if (seed) cfg.seed = *seed;
      if (variant) cfg.variant = ofo::parse_variant(*variant);
      cfg.validate();
      const std::string name(ofo::to_string(cfg.variant));
      if (*val) {
        std::cout << ofo::to_yaml(cfg);
      } else if (*run) {
        ensure_dir(out_dir);
        const auto trace = ofo::run_scenario(cfg);
        const auto path = (fs::path(out_dir) / (name + ".csv")).string();
        ofo::export_csv(trace, path);
        std::cout << path << ": " << trace.rows.size() << " steps, violations "
                  << trace.violations() << "/" << trace.post_warmup_steps() << "\n";
      } else {
        ensure_dir(out_dir);
        const auto summary = ofo::monte_carlo(cfg, runs);
        const auto path = (fs::path(out_dir) / (name + "_mc.csv")).string();
        ofo::export_summary_csv(summary, path);
        std::cout << path << ": " << summary.runs - summary.failed_seeds.size() << "/"
                  << summary.runs << " runs completed\n";
      }
    } else if (*cmp) {
      std::vector<std::string> all = inputs;
      std::optional<std::size_t> oracle_index;
      if (oracle_path) {
        oracle_index = all.size();
        all.push_back(*oracle_path);
      }
      const auto loaded = load_all(all);
      std::vector<ofo::CostSeries> series;
      for (const auto& s : loaded.series) series.push_back(s.series);
      std::cout << ofo::compare_report(series, oracle_index).to_text();
    } else if (*plot) {
      ensure_dir(out_dir);
      const auto loaded = load_all(inputs);
      const auto cost = (fs::path(out_dir) / "cost.svg").string();
      ofo::render_cost_plot(loaded.series, cost);
      std::cout << cost << "\n";
      if (!loaded.traces.empty()) {
        const auto pert = (fs::path(out_dir) / "perturbation.svg").string();
        ofo::render_perturbation_plot(loaded.traces, alpha, pert);
        std::cout << pert << "\n";
      }
    }
  } catch (const ofo::ConfigError& e) {
    spdlog::error("config: {}", e.what());
    return config_error;
  } catch (const ofo::NumericalError& e) {
    spdlog::error("numerical: {}", e.what());
    return numerical_error;
  } catch (const ofo::DomainError& e) {
    spdlog::error("numerical: {}", e.what());
    return numerical_error;
  } catch (const ofo::IoError& e) {
    spdlog::error("io: {}", e.what());
    return io_error;
  }
  return ok;
}
