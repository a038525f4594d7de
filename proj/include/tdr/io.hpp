#pragma once

// JSON and raster formats for calibration, scenes, detections, pipeline
// outputs, ground truth and scenarios.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <istream>
#include <numbers>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "json.hpp"
#include "tdr/calib.hpp"
#include "tdr/danger.hpp"
#include "tdr/error.hpp"
#include "tdr/pipeline.hpp"
#include "tdr/simulate.hpp"

namespace tdr::io {

using nlohmann::json;

inline json to_json(const Point2<ImageTag>& p) { return json::array({p.x, p.y}); }
inline json to_json(const Point2<PlaneTag>& p) { return json::array({p.x, p.y}); }
inline json to_json(const Quadrangle& q) {
  json a = json::array();
  for (const auto& p : q.corners) a.push_back(to_json(p));
  return a;
}

namespace detail {

[[noreturn]] inline void fail(Errc code, const std::string& where, const std::string& what) {
  throw Error(code, where.empty() ? what : where + ": " + what);
}

inline double number(const json& j, const std::string& key, Errc code, const std::string& where) {
  if (!j.contains(key)) fail(code, where, "missing field \"" + key + "\"");
  const json& v = j.at(key);
  if (!v.is_number()) fail(code, where, "field \"" + key + "\" must be a number");
  const double x = v.get<double>();
  if (!std::isfinite(x)) fail(code, where, "field \"" + key + "\" must be finite");
  return x;
}

inline double number_or(const json& j, const std::string& key, double fallback, Errc code,
                        const std::string& where) {
  return j.contains(key) ? number(j, key, code, where) : fallback;
}

template <class Tag>
Point2<Tag> point(const json& v, Errc code, const std::string& where, const std::string& what) {
  if (!v.is_array() || v.size() != 2 || !v[0].is_number() || !v[1].is_number()) {
    fail(code, where, what + " must be a [x, y] pair");
  }
  const Point2<Tag> p{v[0].get<double>(), v[1].get<double>()};
  if (!is_finite(p)) fail(code, where, what + " must be finite");
  return p;
}

template <class Tag>
std::vector<Point2<Tag>> points(const json& v, Errc code, const std::string& where, const std::string& what) {
  if (!v.is_array()) fail(code, where, what + " must be an array of points");
  std::vector<Point2<Tag>> out;
  for (const auto& p : v) out.push_back(point<Tag>(p, code, where, what));
  return out;
}

inline json parse_text(const std::string& text, Errc code, const std::string& where) {
  try {
    return json::parse(text);
  } catch (const json::parse_error& e) {
    fail(code, where, std::string("malformed JSON: ") + e.what());
  }
}

}  // namespace detail

inline json read_json_file(const std::filesystem::path& path, Errc code) {
  std::ifstream in(path);
  if (!in) throw Error(code, "cannot read " + path.string());
  std::stringstream ss;
  ss << in.rdbuf();
  return detail::parse_text(ss.str(), code, path.string());
}

inline void write_text(const std::filesystem::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error(Errc::invalid_argument, "cannot write " + path.string());
  out << text;
}

// ---- calibration ----

struct CalibrationFile {
  CameraCalibration calib;
  int width = 0;
  int height = 0;
};

/// Reads a calibration object; u and v are fitted from "parallel_lines" when
/// absent. Structural problems raise ConfigError; geometric ones keep their
/// own codes (AllParallel, NonPhysical, ...).
inline CalibrationFile parse_calibration(const json& j) {
  constexpr Errc cfg = Errc::config_error;
  const std::string where = "calibration";
  if (!j.is_object()) detail::fail(cfg, where, "expected a JSON object");
  CalibrationFile out;
  std::optional<ImagePoint> c;
  if (j.contains("image_size")) {
    const auto& s = j.at("image_size");
    if (!s.is_array() || s.size() != 2 || !s[0].is_number_integer() || !s[1].is_number_integer() ||
        s[0].get<long>() <= 0 || s[1].get<long>() <= 0) {
      detail::fail(cfg, where, "image_size must be [width, height] positive integers");
    }
    out.width = s[0].get<int>();
    out.height = s[1].get<int>();
  }
  if (j.contains("c")) c = detail::point<ImageTag>(j.at("c"), cfg, where, "c");
  if (!c) {
    if (out.width == 0) detail::fail(cfg, where, "needs \"c\" or \"image_size\"");
    c = ImagePoint{out.width / 2.0, out.height / 2.0};
  }
  if (out.width == 0) {
    out.width = static_cast<int>(std::lround(2.0 * c->x));
    out.height = static_cast<int>(std::lround(2.0 * c->y));
  }
  auto vp = [&](const std::string& name) -> ImagePoint {
    if (j.contains(name)) return detail::point<ImageTag>(j.at(name), cfg, where, name);
    if (!j.contains("parallel_lines") || !j.at("parallel_lines").contains(name)) {
      detail::fail(cfg, where, "needs \"" + name + "\" or parallel_lines." + name);
    }
    const json& group = j.at("parallel_lines").at(name);
    if (!group.is_array()) detail::fail(cfg, where, "parallel_lines." + name + " must be an array");
    std::vector<LineSegment> segs;
    for (const auto& s : group) {
      if (!s.is_array() || s.size() != 4) detail::fail(cfg, where, "parallel_lines." + name + " entries are [x1,y1,x2,y2]");
      for (const auto& x : s)
        if (!x.is_number()) detail::fail(cfg, where, "parallel_lines." + name + " entries must be numbers");
      segs.push_back({{s[0].get<double>(), s[1].get<double>()}, {s[2].get<double>(), s[3].get<double>()}});
    }
    try {
      return fit_vanishing_point(segs);
    } catch (const Error& e) {
      throw Error(e.code(), "group " + name + ": " + e.what());
    }
  };
  const ImagePoint u = vp("u");
  const ImagePoint v = vp("v");
  const double d = detail::number_or(j, "d", 10.0, cfg, where);
  const double lambda = detail::number_or(j, "lambda", 1.0, cfg, where);
  out.calib = derive_camera(u, v, *c, d, lambda);
  return out;
}

inline json calibration_to_json(const CalibrationFile& cf) {
  const CameraCalibration& c = cf.calib;
  const PlaneBasis basis = plane_basis(c);
  json r = json::array();
  for (const auto& row : basis.r) r.push_back(json::array({row[0], row[1], row[2]}));
  json out{{"u", to_json(c.u)},
           {"v", to_json(c.v)},
           {"c", to_json(c.c)},
           {"d", c.d},
           {"lambda", c.lambda},
           {"f", c.f},
           {"w", to_json(c.w)},
           {"plane", json::array({c.plane.a, c.plane.b, c.plane.c, c.plane.d})},
           {"basis", {{"r", r}, {"alpha", basis.alpha}, {"beta", basis.beta}, {"gamma", basis.gamma}}}};
  if (cf.width > 0) out["image_size"] = json::array({cf.width, cf.height});
  return out;
}

// ---- scene ----

inline SceneConfig parse_scene(const json& j) {
  constexpr Errc cfg = Errc::config_error;
  const std::string where = "scene";
  if (!j.is_object()) detail::fail(cfg, where, "expected a JSON object");
  SceneConfig s;
  if (j.contains("road_polygon")) s.road_polygon = detail::points<ImageTag>(j.at("road_polygon"), cfg, where, "road_polygon");
  s.min_area = detail::number_or(j, "min_area", s.min_area, cfg, where);
  s.border_margin = detail::number_or(j, "border_margin", s.border_margin, cfg, where);
  s.fps = detail::number_or(j, "fps", s.fps, cfg, where);
  s.alert_threshold = detail::number_or(j, "alert_threshold", s.alert_threshold, cfg, where);
  if (j.contains("horizons")) {
    const auto& h = j.at("horizons");
    if (!h.is_array()) detail::fail(cfg, where, "horizons must be an array of seconds");
    s.horizons.clear();
    for (const auto& x : h) {
      if (!x.is_number()) detail::fail(cfg, where, "horizons must be numbers");
      s.horizons.push_back(x.get<double>());
    }
  }
  s.delta = detail::number_or(j, "delta", s.delta, cfg, where);
  s.sigma0 = detail::number_or(j, "sigma0", s.sigma0, cfg, where);
  s.sigma_rate = detail::number_or(j, "sigma_rate", s.sigma_rate, cfg, where);
  s.grid_cell = detail::number_or(j, "grid_cell", s.grid_cell, cfg, where);
  s.min_history = static_cast<std::size_t>(detail::number_or(j, "min_history", 5.0, cfg, where));
  s.max_age = static_cast<long>(detail::number_or(j, "max_age", 12.0, cfg, where));
  s.iou_gate = detail::number_or(j, "iou_gate", s.iou_gate, cfg, where);
  s.closure_tolerance = detail::number_or(j, "closure_tolerance", s.closure_tolerance, cfg, where);
  s.validate();
  return s;
}

inline json scene_to_json(const SceneConfig& s) {
  json poly = json::array();
  for (const auto& p : s.road_polygon) poly.push_back(to_json(p));
  return json{{"road_polygon", poly},       {"min_area", s.min_area},
              {"border_margin", s.border_margin}, {"fps", s.fps},
              {"alert_threshold", s.alert_threshold}, {"horizons", s.horizons},
              {"delta", s.delta},           {"sigma0", s.sigma0},
              {"sigma_rate", s.sigma_rate}, {"grid_cell", s.grid_cell},
              {"min_history", s.min_history}, {"max_age", s.max_age},
              {"iou_gate", s.iou_gate},     {"closure_tolerance", s.closure_tolerance}};
}

// ---- detections ----

inline DetectionRecord parse_detection(const json& j, const std::string& where) {
  constexpr Errc pe = Errc::parse_error;
  if (!j.is_object()) detail::fail(pe, where, "expected a JSON object");
  DetectionRecord d;
  if (!j.contains("frame") || !j.at("frame").is_number_integer()) detail::fail(pe, where, "\"frame\" must be an integer");
  d.frame_no = j.at("frame").get<long>();
  if (!j.contains("class") || !j.at("class").is_string()) detail::fail(pe, where, "\"class\" must be a string");
  const auto cls = parse_vehicle_class(j.at("class").get<std::string>());
  if (!cls) detail::fail(pe, where, "\"class\" must be car, bus or truck");
  d.cls = *cls;
  d.score = detail::number(j, "score", pe, where);
  if (d.score < 0.0 || d.score > 1.0) detail::fail(pe, where, "\"score\" must lie in [0, 1]");
  if (!j.contains("bbox")) detail::fail(pe, where, "missing field \"bbox\"");
  const auto& b = j.at("bbox");
  if (!b.is_array() || b.size() != 4) detail::fail(pe, where, "\"bbox\" must be [x, y, w, h]");
  for (const auto& x : b)
    if (!x.is_number() || !std::isfinite(x.get<double>())) detail::fail(pe, where, "\"bbox\" entries must be finite numbers");
  d.bbox = {b[0].get<double>(), b[1].get<double>(), b[2].get<double>(), b[3].get<double>()};
  if (d.bbox.w < 0.0 || d.bbox.h < 0.0) detail::fail(pe, where, "\"bbox\" width and height must be non-negative");
  if (!j.contains("contour")) detail::fail(pe, where, "missing field \"contour\"");
  d.contour = detail::points<ImageTag>(j.at("contour"), pe, where, "contour");
  if (d.contour.size() < 3) detail::fail(pe, where, "\"contour\" needs at least 3 points");
  if (j.contains("track_id") && !j.at("track_id").is_null()) {
    if (!j.at("track_id").is_number_integer()) detail::fail(pe, where, "\"track_id\" must be an integer or null");
    d.track_id = j.at("track_id").get<long>();
  }
  return d;
}

inline json detection_to_json(const DetectionRecord& d) {
  json contour = json::array();
  for (const auto& p : d.contour) contour.push_back(to_json(p));
  return json{{"frame", d.frame_no},
              {"class", to_string(d.cls)},
              {"score", d.score},
              {"bbox", json::array({d.bbox.x, d.bbox.y, d.bbox.w, d.bbox.h})},
              {"contour", contour},
              {"track_id", d.track_id ? json(*d.track_id) : json(nullptr)}};
}

/// Parses a JSON Lines stream; blank lines are skipped. Errors name the line.
inline std::vector<DetectionRecord> read_detections(std::istream& in) {
  std::vector<DetectionRecord> out;
  std::string line;
  long line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    const std::string where = "line " + std::to_string(line_no);
    out.push_back(parse_detection(detail::parse_text(line, Errc::parse_error, where), where));
    if (out.size() >= 2 && out.back().frame_no < out[out.size() - 2].frame_no) {
      throw Error(Errc::stale_frame, where + ": frame " + std::to_string(out.back().frame_no) +
                                         " goes back in time");
    }
  }
  return out;
}

// ---- pipeline output ----

inline json snapshot_to_json(const PredictionSnapshot& s) {
  return json{{"t_offset", s.t_offset},       {"center", to_json(s.center)},
              {"speed", to_json(s.speed)},     {"acceleration", to_json(s.acceleration)},
              {"variance", s.variance},        {"footprint", to_json(s.footprint)}};
}

inline json alert_to_json(const ProximityAlert& a) {
  return json{{"frame", a.frame_no},
              {"track_a", a.track_a},
              {"track_b", a.track_b},
              {"distance", a.distance},
              {"threshold", a.threshold}};
}

inline const char* to_string(BoxLabeling l) noexcept {
  switch (l) {
    case BoxLabeling::tilt_order: return "tilt_order";
    case BoxLabeling::relabeled: return "relabeled";
    case BoxLabeling::two_face: return "two_face";
  }
  return "tilt_order";
}

/// `danger_files[h]` is the raster written for horizon h, or empty.
inline json frame_to_json(const FrameOutput& f, const std::vector<std::string>& danger_files,
                          double closure_tolerance = 2.0) {
  json tracks = json::array();
  for (const auto& t : f.tracks) {
    json preds = json::array();
    for (const auto& p : t.predictions) preds.push_back(snapshot_to_json(p));
    tracks.push_back({{"track_id", t.track_id},
                      {"class", to_string(t.cls)},
                      {"footprint", to_json(t.footprint)},
                      {"center", to_json(t.center)},
                      {"velocity", to_json(t.velocity)},
                      {"speed_kmh", t.speed_kmh ? json(*t.speed_kmh) : json(nullptr)},
                      {"history", t.history},
                      {"box_labeling", to_string(t.labeling)},
                      {"box_residual", t.box_residual},
                      {"box_inconsistent", t.box_residual > closure_tolerance},
                      {"predictions", preds}});
  }
  json alerts = json::array();
  for (const auto& a : f.alerts) alerts.push_back(alert_to_json(a));
  json dropped = json::array();
  for (const auto& d : f.dropped) {
    dropped.push_back({{"index", d.index},
                       {"track_id", d.track_id ? json(*d.track_id) : json(nullptr)},
                       {"reason", d.reason}});
  }
  json danger = json::array();
  for (std::size_t h = 0; h < f.danger.size(); ++h) {
    const std::string file = h < danger_files.size() ? danger_files[h] : std::string();
    danger.push_back({{"t_offset", f.danger[h].t_offset},
                      {"max", f.danger[h].max()},
                      {"file", file.empty() ? json(nullptr) : json(file)}});
  }
  return json{{"frame", f.frame_no}, {"tracks", tracks}, {"alerts", alerts}, {"dropped", dropped}, {"danger", danger}};
}

/// 8-bit binary graymap, value round(255 p); row r holds cells with j = r.
inline std::string danger_pgm(const DangerMap& m) {
  std::string out = "P5\n" + std::to_string(m.grid.nx) + " " + std::to_string(m.grid.ny) + "\n255\n";
  out.reserve(out.size() + m.cells.size());
  for (double p : m.cells) out.push_back(static_cast<char>(static_cast<std::uint8_t>(std::lround(255.0 * std::clamp(p, 0.0, 1.0)))));
  return out;
}

inline json danger_sidecar(const DangerMap& m, long frame_no) {
  return json{{"frame", frame_no},
              {"origin", to_json(m.grid.origin)},
              {"cell", m.grid.cell},
              {"width", m.grid.nx},
              {"height", m.grid.ny},
              {"t_offset", m.t_offset},
              {"max", m.max()}};
}

// ---- simulation ----

inline CameraPose parse_camera(const json& j) {
  constexpr Errc cfg = Errc::config_error;
  const std::string where = "scenario.camera";
  if (!j.is_object()) detail::fail(cfg, where, "expected a JSON object");
  CameraPose p;
  constexpr double deg = std::numbers::pi / 180.0;
  if (j.contains("image_size")) {
    const auto& s = j.at("image_size");
    if (!s.is_array() || s.size() != 2 || !s[0].is_number_integer() || !s[1].is_number_integer()) {
      detail::fail(cfg, where, "image_size must be [width, height]");
    }
    p.width = s[0].get<int>();
    p.height = s[1].get<int>();
  }
  p.c = j.contains("c") ? detail::point<ImageTag>(j.at("c"), cfg, where, "c") : ImagePoint{p.width / 2.0, p.height / 2.0};
  p.f = detail::number_or(j, "f", p.f, cfg, where);
  p.pitch = detail::number_or(j, "pitch_deg", p.pitch / deg, cfg, where) * deg;
  p.yaw = detail::number_or(j, "yaw_deg", p.yaw / deg, cfg, where) * deg;
  p.roll = detail::number_or(j, "roll_deg", p.roll / deg, cfg, where) * deg;
  p.height_m = detail::number_or(j, "height_m", p.height_m, cfg, where);
  p.lambda = detail::number_or(j, "lambda", p.lambda, cfg, where);
  p.fps = detail::number_or(j, "fps", p.fps, cfg, where);
  return p;
}

inline ScenarioConfig parse_scenario(const json& j) {
  constexpr Errc cfg = Errc::config_error;
  const std::string where = "scenario";
  if (!j.is_object()) detail::fail(cfg, where, "expected a JSON object");
  ScenarioConfig s;
  if (j.contains("camera")) s.camera = parse_camera(j.at("camera"));
  auto pair = [&](const json& v, const std::string& what) {
    const auto p = detail::point<PlaneTag>(v, cfg, where, what);
    return std::array<double, 2>{p.x, p.y};
  };
  if (j.contains("vehicles")) {
    if (!j.at("vehicles").is_array()) detail::fail(cfg, where, "vehicles must be an array");
    long next = 1;
    for (const auto& v : j.at("vehicles")) {
      const std::string w = where + ".vehicle";
      if (!v.is_object()) detail::fail(cfg, w, "expected a JSON object");
      SimVehicle veh;
      veh.id = static_cast<long>(detail::number_or(v, "id", static_cast<double>(next), cfg, w));
      next = veh.id + 1;
      if (v.contains("class")) {
        const auto c = v.at("class").is_string() ? parse_vehicle_class(v.at("class").get<std::string>()) : std::nullopt;
        if (!c) detail::fail(cfg, w, "class must be car, bus or truck");
        veh.cls = *c;
      }
      veh.length = detail::number_or(v, "length", veh.length, cfg, w);
      veh.width = detail::number_or(v, "width", veh.width, cfg, w);
      veh.height = detail::number_or(v, "height", veh.height, cfg, w);
      if (v.contains("position")) veh.position = pair(v.at("position"), "position");
      if (v.contains("velocity")) veh.velocity = pair(v.at("velocity"), "velocity");
      if (v.contains("acceleration")) veh.acceleration = pair(v.at("acceleration"), "acceleration");
      veh.spawn = static_cast<long>(detail::number_or(v, "spawn", 0.0, cfg, w));
      veh.despawn = static_cast<long>(detail::number_or(v, "despawn", -1.0, cfg, w));
      s.vehicles.push_back(veh);
    }
  }
  if (j.contains("noise")) {
    const auto& n = j.at("noise");
    s.contour_sigma = detail::number_or(n, "contour_sigma_px", 0.0, cfg, where);
    s.drop_probability = detail::number_or(n, "drop_probability", 0.0, cfg, where);
  }
  s.duration = static_cast<long>(detail::number_or(j, "duration", static_cast<double>(s.duration), cfg, where));
  if (j.contains("measurement_area")) s.measurement_area = pair(j.at("measurement_area"), "measurement_area");
  if (j.contains("emit_track_ids")) {
    if (!j.at("emit_track_ids").is_boolean()) detail::fail(cfg, where, "emit_track_ids must be a boolean");
    s.emit_track_ids = j.at("emit_track_ids").get<bool>();
  }
  s.validate();
  return s;
}

inline json truth_to_json(const VehicleTruth& t) {
  json corners = nullptr;
  if (t.corners_image) {
    corners = json::array();
    for (const auto& p : *t.corners_image) corners.push_back(to_json(p));
  }
  return json{{"frame", t.frame_no},
              {"vehicle", t.vehicle},
              {"center", to_json(t.center)},
              {"velocity", to_json(t.velocity)},
              {"speed_kmh", t.speed_kmh},
              {"position_m", json::array({t.position_m[0], t.position_m[1]})},
              {"footprint", to_json(t.footprint)},
              {"corners_image", corners},
              {"detected", t.detected}};
}

struct TruthRecord {
  long frame_no = 0;
  long vehicle = 0;
  PlanePoint center;
  double speed_kmh = 0.0;
};

inline TruthRecord parse_truth(const json& j, const std::string& where) {
  constexpr Errc pe = Errc::parse_error;
  if (!j.is_object()) detail::fail(pe, where, "expected a JSON object");
  TruthRecord t;
  if (!j.contains("frame") || !j.at("frame").is_number_integer()) detail::fail(pe, where, "\"frame\" must be an integer");
  if (!j.contains("vehicle") || !j.at("vehicle").is_number_integer()) detail::fail(pe, where, "\"vehicle\" must be an integer");
  t.frame_no = j.at("frame").get<long>();
  t.vehicle = j.at("vehicle").get<long>();
  if (!j.contains("center")) detail::fail(pe, where, "missing field \"center\"");
  t.center = detail::point<PlaneTag>(j.at("center"), pe, where, "center");
  t.speed_kmh = detail::number(j, "speed_kmh", pe, where);
  return t;
}

inline json scenario_summary_to_json(const SimulationResult& r) {
  json periods = json::array();
  for (const auto& p : r.periods) {
    periods.push_back({{"id", p.id}, {"enter_time", p.enter_time}, {"exit_time", p.exit_time}});
  }
  json lines = json::array();
  for (const auto& l : r.measurement_lines) {
    lines.push_back({{"group", l.group}, {"a", to_json(l.a)}, {"b", to_json(l.b)}, {"length_m", l.length_m}});
  }
  return json{{"fps", r.camera.pose.fps},
              {"lambda", r.camera.pose.lambda},
              {"measurement_area_plane", json::array({r.measurement_area_plane[0], r.measurement_area_plane[1]})},
              {"periods", periods},
              {"measurement_lines", lines}};
}

inline json lines_to_json(const SimulationResult& r) {
  auto group = [](const std::vector<LineSegment>& segs) {
    json g = json::array();
    for (const auto& s : segs) g.push_back(json::array({s.a.x, s.a.y, s.b.x, s.b.y}));
    return g;
  };
  const auto& cal = r.camera.calib;
  return json{{"image_size", json::array({r.camera.pose.width, r.camera.pose.height})},
              {"c", to_json(cal.c)},
              {"d", cal.d},
              {"lambda", cal.lambda},
              {"parallel_lines", {{"u", group(r.lines_u)}, {"v", group(r.lines_v)}}}};
}

}  // namespace tdr::io
