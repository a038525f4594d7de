#include <gtest/gtest.h>

#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>

#include "tdr/cli.hpp"

using namespace tdr;
using nlohmann::json;
namespace fs = std::filesystem;

namespace {

const fs::path kData = TDR_DATA_DIR;

fs::path scratch(const std::string& name) {
  const fs::path p = fs::path(::testing::TempDir()) / ("tdr_cli_" + name);
  fs::remove_all(p);
  fs::create_directories(p);
  return p;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

json load(const fs::path& p) { return json::parse(slurp(p)); }

struct Outcome {
  int code;
  std::string out;
  std::string err;
};

Outcome simulate(const fs::path& scenario, std::uint64_t seed, const fs::path& dir) {
  std::ostringstream out, err;
  const int code = cli::cmd_simulate(scenario, seed, dir, out, err);
  return {code, out.str(), err.str()};
}

Outcome run(const fs::path& sim, const fs::path& detections, const fs::path& dir, const fs::path& scene = {}) {
  std::ostringstream out, err;
  const int code = cli::cmd_run(sim / "calibration.json", scene.empty() ? sim / "scene.json" : scene, detections,
                                dir, {}, out, err);
  return {code, out.str(), err.str()};
}

Outcome eval(const fs::path& sim, const fs::path& outputs, const fs::path& gt, const fs::path& report) {
  std::ostringstream out, err;
  const int code =
      cli::cmd_eval(outputs, gt, sim / "scenario.json", sim / "calibration.json", report, out, err);
  return {code, out.str(), err.str()};
}

}  // namespace

TEST(Cli, SimulateRunEval) {
  const fs::path dir = scratch("pipeline");
  const Outcome s = simulate(kData / "scenarios" / "highway.json", 7, dir / "sim");
  ASSERT_EQ(s.code, 0) << s.err;
  EXPECT_EQ(json::parse(s.out)["command"], "simulate");
  for (const char* f : {"detections.jsonl", "ground_truth.jsonl", "scenario.json", "calibration.json", "lines.json",
                        "scene.json", "manifest.json"})
    EXPECT_TRUE(fs::exists(dir / "sim" / f)) << f;

  const Outcome r = run(dir / "sim", dir / "sim" / "detections.jsonl", dir / "out");
  ASSERT_EQ(r.code, 0) << r.err;
  EXPECT_TRUE(fs::exists(dir / "out" / "frames.jsonl"));
  EXPECT_TRUE(fs::exists(dir / "out" / "alerts.jsonl"));
  EXPECT_EQ(load(dir / "out" / "manifest.json")["command"], "run");

  const Outcome e = eval(dir / "sim", dir / "out", dir / "sim" / "ground_truth.jsonl", dir / "report.json");
  ASSERT_EQ(e.code, 0) << e.err;
  const json rep = load(dir / "report.json");
  for (const char* k : {"distance", "speed", "prediction", "matching"}) EXPECT_TRUE(rep.contains(k)) << k;
  EXPECT_EQ(rep["matching"]["recall"], 1.0);
  EXPECT_TRUE(rep["prediction"].contains("+0.12"));
  EXPECT_TRUE(rep["prediction"].contains("+0.24"));
  EXPECT_LT(rep["distance"]["toward_u"]["abs_mean"].get<double>(), 1e-6);
  EXPECT_LT(rep["speed"]["abs_mean"].get<double>(), 3.0);
}

TEST(Cli, CalibrateFromSimulatorLines) {
  const fs::path dir = scratch("calibrate");
  ASSERT_EQ(simulate(kData / "scenarios" / "collision.json", 1, dir).code, 0);
  std::ostringstream out, err;
  ASSERT_EQ(cli::cmd_calibrate(dir / "lines.json", dir / "fitted.json", out, err), 0) << err.str();
  const json fitted = load(dir / "fitted.json"), truth = load(dir / "calibration.json");
  for (const char* vp : {"u", "v"}) {
    const double dx = fitted[vp][0].get<double>() - truth[vp][0].get<double>();
    const double dy = fitted[vp][1].get<double>() - truth[vp][1].get<double>();
    EXPECT_LT(std::hypot(dx, dy), 1.0) << vp;
  }
}

TEST(Cli, CalibrateSingleSegmentNamesGroup) {
  const fs::path dir = scratch("single");
  std::ofstream(dir / "lines.json") << R"({"image_size":[1920,1080],"parallel_lines":{"u":[[0,0,10,1]],"v":[[0,0,10,0],[0,9,10,8]]}})";
  std::ostringstream out, err;
  EXPECT_EQ(cli::cmd_calibrate(dir / "lines.json", dir / "c.json", out, err), 2);
  EXPECT_NE(err.str().find("group u"), std::string::npos) << err.str();
  EXPECT_FALSE(fs::exists(dir / "c.json"));
}

TEST(Cli, RunEmptyDetections) {
  const fs::path dir = scratch("empty");
  ASSERT_EQ(simulate(kData / "scenarios" / "collision.json", 1, dir / "sim").code, 0);
  std::ofstream(dir / "none.jsonl").close();
  const Outcome r = run(dir / "sim", dir / "none.jsonl", dir / "out");
  ASSERT_EQ(r.code, 0) << r.err;
  EXPECT_EQ(slurp(dir / "out" / "frames.jsonl"), "");
  EXPECT_EQ(slurp(dir / "out" / "alerts.jsonl"), "");
  EXPECT_EQ(json::parse(r.out)["frames"], 0);
}

TEST(Cli, RunMalformedLineSeven) {
  const fs::path dir = scratch("malformed");
  ASSERT_EQ(simulate(kData / "scenarios" / "collision.json", 1, dir / "sim").code, 0);
  std::ifstream in(dir / "sim" / "detections.jsonl");
  std::ofstream bad(dir / "bad.jsonl");
  std::string line;
  for (int k = 1; k <= 10 && std::getline(in, line); ++k) bad << (k == 7 ? line.substr(0, line.size() / 2) : line) << "\n";
  bad.close();
  const Outcome r = run(dir / "sim", dir / "bad.jsonl", dir / "out");
  EXPECT_EQ(r.code, 2);
  EXPECT_NE(r.err.find("line 7"), std::string::npos) << r.err;
}

TEST(Cli, ConfigErrorsExitThree) {
  const fs::path dir = scratch("config");
  ASSERT_EQ(simulate(kData / "scenarios" / "collision.json", 1, dir / "sim").code, 0);
  std::ofstream(dir / "scene.json") << R"({"fps": 0})";
  EXPECT_EQ(run(dir / "sim", dir / "sim" / "detections.jsonl", dir / "out", dir / "scene.json").code, 3);
  std::ofstream(dir / "scenario.json") << R"({"duration": -4})";
  EXPECT_EQ(simulate(dir / "scenario.json", 1, dir / "sim2").code, 3);
  EXPECT_EQ(simulate(dir / "missing.json", 1, dir / "sim3").code, 3);
}

TEST(Cli, EvalMismatchedGroundTruth) {
  const fs::path dir = scratch("mismatch");
  ASSERT_EQ(simulate(kData / "scenarios" / "highway.json", 1, dir / "a").code, 0);
  ASSERT_EQ(simulate(kData / "scenarios" / "collision.json", 1, dir / "b").code, 0);
  ASSERT_EQ(run(dir / "a", dir / "a" / "detections.jsonl", dir / "out").code, 0);
  // The highway run lasts longer than the collision ground truth.
  const Outcome e = eval(dir / "a", dir / "out", dir / "b" / "ground_truth.jsonl", dir / "report.json");
  EXPECT_EQ(e.code, 2);
  EXPECT_NE(e.err.find("no ground truth"), std::string::npos) << e.err;
}

TEST(Cli, SimulateIsDeterministic) {
  const fs::path dir = scratch("determinism");
  ASSERT_EQ(simulate(kData / "scenarios" / "highway.json", 3, dir / "a").code, 0);
  ASSERT_EQ(simulate(kData / "scenarios" / "highway.json", 3, dir / "b").code, 0);
  for (const char* f : {"detections.jsonl", "ground_truth.jsonl", "scenario.json", "calibration.json"})
    EXPECT_EQ(slurp(dir / "a" / f), slurp(dir / "b" / f)) << f;
}
