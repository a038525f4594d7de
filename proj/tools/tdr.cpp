// tdr: calibrate, simulate, run and evaluate the danger-recognition pipeline.

#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "tdr/cli.hpp"

namespace {

std::vector<double> parse_horizons(const std::string& text) {
  std::vector<double> out;
  std::stringstream ss(text);
  std::string item;
  while (std::getline(ss, item, ',')) {
    std::size_t used = 0;
    const double v = std::stod(item, &used);
    if (used != item.size()) throw std::invalid_argument(item);
    out.push_back(v);
  }
  return out;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Traffic danger recognition from calibrated surveillance video"};
  app.require_subcommand(1);
  app.set_version_flag("--version", tdr::cli::kVersion);

  std::string lines, calib, scene, detections, out, scenario, outputs, gt, report, horizons;
  std::uint64_t seed = 0;
  double threshold = 0.0, grid_cell = 0.0;

  auto* calibrate = app.add_subcommand("calibrate", "Fit vanishing points from labeled lines");
  calibrate->add_option("--lines", lines, "Lines file (calibration JSON with parallel_lines)")->required();
  calibrate->add_option("--out", out, "Calibration JSON to write")->required();

  auto* simulate = app.add_subcommand("simulate", "Render a synthetic scenario");
  simulate->add_option("--scenario", scenario, "Scenario JSON")->required();
  simulate->add_option("--seed", seed, "Random seed")->required();
  simulate->add_option("--out", out, "Output directory")->required();

  auto* run = app.add_subcommand("run", "Process a detections stream");
  run->add_option("--calib", calib, "Calibration JSON")->required();
  run->add_option("--scene", scene, "Scene config JSON")->required();
  run->add_option("--detections", detections, "Detections JSON Lines")->required();
  run->add_option("--out", out, "Output directory")->required();
  auto* threshold_opt = run->add_option("--threshold", threshold, "Alert threshold in meters");
  auto* horizons_opt = run->add_option("--horizons", horizons, "Comma-separated prediction horizons in seconds");
  auto* grid_opt = run->add_option("--grid-cell", grid_cell, "Danger map cell size in meters");

  auto* eval = app.add_subcommand("eval", "Score pipeline outputs against ground truth");
  eval->add_option("--outputs", outputs, "Directory written by run")->required();
  eval->add_option("--gt", gt, "Ground-truth JSON Lines")->required();
  eval->add_option("--scenario", scenario, "scenario.json written by simulate")->required();
  eval->add_option("--calib", calib, "Calibration JSON")->required();
  eval->add_option("--report", report, "Report JSON to write")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : tdr::cli::config_error;
  }

  if (calibrate->parsed()) return tdr::cli::cmd_calibrate(lines, out, std::cout, std::cerr);
  if (simulate->parsed()) return tdr::cli::cmd_simulate(scenario, seed, out, std::cout, std::cerr);
  if (run->parsed()) {
    tdr::cli::RunOverrides ov;
    if (*threshold_opt) ov.threshold = threshold;
    if (*grid_opt) ov.grid_cell = grid_cell;
    if (*horizons_opt) {
      try {
        ov.horizons = parse_horizons(horizons);
      } catch (const std::exception&) {
        std::cerr << "error: --horizons expects comma-separated seconds, got \"" << horizons << "\"\n";
        return tdr::cli::config_error;
      }
    }
    return tdr::cli::cmd_run(calib, scene, detections, out, ov, std::cout, std::cerr);
  }
  return tdr::cli::cmd_eval(outputs, gt, scenario, calib, report, std::cout, std::cerr);
}
