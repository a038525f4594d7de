#include <gtest/gtest.h>

#include <sstream>
#include <string>

#include "tdr/io.hpp"

using namespace tdr;
using nlohmann::json;

namespace {

const char* kDetection =
    R"({"frame":3,"class":"bus","score":0.9,"bbox":[10,20,30,40],"contour":[[10,20],[40,20],[40,60]],"track_id":7})";

Errc code_of(const std::function<void()>& f) {
  try {
    f();
  } catch (const Error& e) {
    return e.code();
  }
  ADD_FAILURE() << "no error raised";
  return Errc::invalid_argument;
}

std::string message_of(const std::function<void()>& f) {
  try {
    f();
  } catch (const Error& e) {
    return e.what();
  }
  return {};
}

}  // namespace

TEST(Detections, ParseAndRoundTrip) {
  const DetectionRecord d = io::parse_detection(json::parse(kDetection), "x");
  EXPECT_EQ(d.frame_no, 3);
  EXPECT_EQ(d.cls, VehicleClass::bus);
  EXPECT_EQ(d.bbox, (BBox{10, 20, 30, 40}));
  EXPECT_EQ(d.contour.size(), 3u);
  EXPECT_EQ(d.track_id, 7);
  EXPECT_EQ(io::parse_detection(io::detection_to_json(d), "x"), d);
}

TEST(Detections, NullTrackId) {
  json j = json::parse(kDetection);
  j["track_id"] = nullptr;
  EXPECT_FALSE(io::parse_detection(j, "x").track_id.has_value());
  j.erase("track_id");
  EXPECT_FALSE(io::parse_detection(j, "x").track_id.has_value());
}

TEST(Detections, SchemaViolations) {
  auto with = [](const std::string& key, const json& value) {
    json j = json::parse(kDetection);
    if (value.is_discarded()) {
      j.erase(key);
    } else {
      j[key] = value;
    }
    return j;
  };
  const json gone = json(json::value_t::discarded);
  for (const json& j : {with("class", "bicycle"), with("score", 1.5), with("bbox", json::array({1, 2, 3})),
                        with("contour", json::array({json::array({1, 2})})), with("frame", 1.5),
                        with("track_id", "seven"), with("bbox", gone), with("frame", gone)}) {
    EXPECT_EQ(code_of([&] { io::parse_detection(j, "line 1"); }), Errc::parse_error) << j.dump();
  }
}

TEST(Detections, StreamReportsLineNumbers) {
  std::stringstream ss;
  for (int k = 0; k < 6; ++k) {
    json j = json::parse(kDetection);
    j["frame"] = k;
    ss << j.dump() << "\n";
  }
  ss << "{\"frame\": 6, oops\n";
  const std::string msg = message_of([&] { io::read_detections(ss); });
  EXPECT_NE(msg.find("line 7"), std::string::npos) << msg;
}

TEST(Detections, BlankLinesAndEmptyStream) {
  std::stringstream empty;
  EXPECT_TRUE(io::read_detections(empty).empty());
  std::stringstream ss;
  ss << "\n" << kDetection << "\n   \n" << kDetection << "\n";
  EXPECT_EQ(io::read_detections(ss).size(), 2u);
}

TEST(Detections, FramesMustNotGoBack) {
  std::stringstream ss;
  json a = json::parse(kDetection), b = a;
  b["frame"] = 2;
  ss << a.dump() << "\n" << b.dump() << "\n";
  EXPECT_EQ(code_of([&] { io::read_detections(ss); }), Errc::stale_frame);
}

TEST(Calibration, FromVanishingPoints) {
  const json j{{"u", {3, 1}}, {"v", {-1, 1}}, {"c", {0, 0}}, {"d", 10}, {"lambda", 0.5}};
  const io::CalibrationFile cf = io::parse_calibration(j);
  EXPECT_NEAR(cf.calib.f, std::sqrt(2.0), 1e-12);
  EXPECT_EQ(cf.calib.lambda, 0.5);
  EXPECT_EQ(cf.width, 0);
  const io::CalibrationFile back = io::parse_calibration(io::calibration_to_json(cf));
  EXPECT_EQ(back.calib.u, cf.calib.u);
  EXPECT_EQ(back.calib.f, cf.calib.f);
  EXPECT_EQ(back.calib.plane.d, cf.calib.plane.d);
}

TEST(Calibration, FromParallelLines) {
  // Lines through (3, 1) and through (-1, 1).
  const json j{{"image_size", {2, 2}},
               {"c", {0, 0}},
               {"parallel_lines",
                {{"u", {{0, 0, 1.5, 0.5}, {3, 0, 3, 0.5}}}, {"v", {{0, 0, -0.5, 0.5}, {-1, 3, -1, 2}}}}}};
  const io::CalibrationFile cf = io::parse_calibration(j);
  EXPECT_NEAR(cf.calib.u.x, 3, 1e-9);
  EXPECT_NEAR(cf.calib.u.y, 1, 1e-9);
  EXPECT_NEAR(cf.calib.v.x, -1, 1e-9);
  EXPECT_NEAR(cf.calib.v.y, 1, 1e-9);
}

TEST(Calibration, DefaultsPrincipalPointToImageCentre) {
  const json j{{"u", {2000, 100}}, {"v", {-5000, 150}}, {"image_size", {1920, 1080}}};
  const io::CalibrationFile cf = io::parse_calibration(j);
  EXPECT_EQ(cf.calib.c, (ImagePoint{960, 540}));
}

TEST(Calibration, Errors) {
  const json one_u{{"image_size", {1920, 1080}},
                   {"parallel_lines", {{"u", {{0, 0, 1, 1}}}, {"v", {{0, 0, 1, 0}, {0, 5, 1, 5}}}}}};
  const std::string msg = message_of([&] { io::parse_calibration(one_u); });
  EXPECT_NE(msg.find("group u"), std::string::npos) << msg;
  const json parallel{{"image_size", {1920, 1080}},
                      {"parallel_lines", {{"u", {{0, 0, 1, 0}, {0, 5, 1, 5}}}, {"v", {{0, 0, 1, 1}, {0, 5, 1, 6}}}}}};
  EXPECT_EQ(code_of([&] { io::parse_calibration(parallel); }), Errc::all_parallel);
  EXPECT_EQ(code_of([&] { io::parse_calibration(json{{"u", {3, 1}}}); }), Errc::config_error);
  EXPECT_EQ(code_of([&] { io::parse_calibration(json{{"u", {2, 0}}, {"v", {2, 1}}, {"c", {0, 0}}}); }),
            Errc::non_physical);
}

TEST(Scene, DefaultsOverridesAndRoundTrip) {
  const SceneConfig d = io::parse_scene(json::object());
  EXPECT_EQ(d.min_area, 900);
  EXPECT_EQ(d.horizons, (std::vector<double>{0.12, 0.24}));
  const SceneConfig s = io::parse_scene(json{{"alert_threshold", 3.5}, {"horizons", {0.2}}, {"max_age", 4}});
  EXPECT_EQ(s.alert_threshold, 3.5);
  EXPECT_EQ(s.horizons, (std::vector<double>{0.2}));
  EXPECT_EQ(s.max_age, 4);
  const SceneConfig back = io::parse_scene(io::scene_to_json(s));
  EXPECT_EQ(io::scene_to_json(back), io::scene_to_json(s));
  EXPECT_EQ(code_of([] { io::parse_scene(json{{"fps", -1}}); }), Errc::config_error);
  EXPECT_EQ(code_of([] { io::parse_scene(json{{"min_area", "big"}}); }), Errc::config_error);
}

TEST(Scenario, ParsesDegreesAndVehicles) {
  const json j = json::parse(R"({
    "camera": {"pitch_deg": 20, "yaw_deg": -10, "image_size": [1280, 720], "fps": 30},
    "vehicles": [{"class": "truck", "position": [1, 2], "velocity": [0, 20], "spawn": 3}, {"id": 9}],
    "noise": {"contour_sigma_px": 0.5},
    "duration": 12,
    "measurement_area": [0, 30]
  })");
  const ScenarioConfig s = io::parse_scenario(j);
  EXPECT_NEAR(s.camera.pitch, 20 * std::numbers::pi / 180, 1e-15);
  EXPECT_NEAR(s.camera.yaw, -10 * std::numbers::pi / 180, 1e-15);
  EXPECT_EQ(s.camera.c, (ImagePoint{640, 360}));
  EXPECT_EQ(s.camera.fps, 30);
  ASSERT_EQ(s.vehicles.size(), 2u);
  EXPECT_EQ(s.vehicles[0].id, 1);
  EXPECT_EQ(s.vehicles[0].cls, VehicleClass::truck);
  EXPECT_EQ(s.vehicles[0].spawn, 3);
  EXPECT_EQ(s.vehicles[1].id, 9);
  EXPECT_EQ(s.contour_sigma, 0.5);
  EXPECT_EQ(s.duration, 12);
  EXPECT_EQ(code_of([] { io::parse_scenario(json{{"vehicles", {{{"class", "tram"}}}}}); }), Errc::config_error);
  EXPECT_EQ(code_of([] { io::parse_scenario(json{{"duration", 0}}); }), Errc::config_error);
}

TEST(DangerRaster, GraymapBytes) {
  DangerMap m;
  m.grid = {{0, 0}, 0.1, 3, 2};
  m.cells = {0.0, 0.5, 1.0, 0.25, 0.002, 0.998};
  const std::string pgm = io::danger_pgm(m);
  const std::string header = "P5\n3 2\n255\n";
  ASSERT_EQ(pgm.size(), header.size() + 6);
  EXPECT_EQ(pgm.substr(0, header.size()), header);
  const std::string px = pgm.substr(header.size());
  const int expect[] = {0, 128, 255, 64, 1, 254};
  for (int k = 0; k < 6; ++k) EXPECT_EQ(static_cast<unsigned char>(px[k]), expect[k]);
  const json side = io::danger_sidecar(m, 12);
  EXPECT_EQ(side["width"], 3);
  EXPECT_EQ(side["cell"], 0.1);
}

TEST(FrameOutput, Schema) {
  FrameOutput f;
  f.frame_no = 4;
  FrameTrack t;
  t.track_id = 2;
  t.box_residual = 3.0;
  f.tracks = {t};
  f.alerts = {{4, 1, 2, 1.5, 2.0}};
  f.dropped = {{0, std::nullopt, "TooSmall"}};
  f.danger = {DangerMap{{{0, 0}, 0.1, 0, 0}, {}, 0.12}};
  const json j = io::frame_to_json(f, {""}, 2.0);
  EXPECT_EQ(j["frame"], 4);
  EXPECT_TRUE(j["tracks"][0]["speed_kmh"].is_null());
  EXPECT_EQ(j["tracks"][0]["box_inconsistent"], true);
  EXPECT_EQ(j["alerts"][0]["distance"], 1.5);
  EXPECT_EQ(j["dropped"][0]["reason"], "TooSmall");
  EXPECT_TRUE(j["danger"][0]["file"].is_null());
}
