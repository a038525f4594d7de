#pragma once

// Command implementations behind the `tdr` executable. Each returns the
// process exit code: 0 success, 2 input or data error, 3 configuration error.

#include <chrono>
#include <cmath>
#include <ctime>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <map>
#include <optional>
#include <ostream>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "tdr/evalharness.hpp"
#include "tdr/io.hpp"
#include "tdr/pipeline.hpp"
#include "tdr/simulate.hpp"

namespace tdr::cli {

inline constexpr const char* kVersion = "0.1.0";

enum ExitCode { ok = 0, data_error = 2, config_error = 3 };

namespace fs = std::filesystem;
using nlohmann::json;

namespace detail {

inline std::string utc_now() {
  const std::time_t now = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
  std::tm tm{};
  gmtime_r(&now, &tm);
  std::ostringstream ss;
  ss << std::put_time(&tm, "%Y-%m-%dT%H:%M:%SZ");
  return ss.str();
}

inline void write_manifest(const fs::path& dir, const std::string& command, const json& args,
                           std::optional<std::uint64_t> seed) {
  json m{{"command", command},
         {"args", args},
         {"seed", seed ? json(*seed) : json(nullptr)},
         {"version", kVersion},
         {"wall_clock", utc_now()}};
  io::write_text(dir / "manifest.json", m.dump(2) + "\n");
}

inline void ensure_dir(const fs::path& dir) {
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec) throw Error(Errc::invalid_argument, "cannot create directory " + dir.string() + ": " + ec.message());
}

inline int report(const Error& e, std::ostream& err, int code) {
  err << "error: " << e.what() << "\n";
  return code;
}

inline int exit_for(const Error& e) { return e.code() == Errc::config_error ? config_error : data_error; }

inline json stats_json(const ErrorStats& s) {
  return json{{"abs_mean", s.absolute.mean},
              {"abs_median", s.absolute.median},
              {"rel_mean", s.relative.mean},
              {"rel_median", s.relative.median},
              {"count", s.absolute.count}};
}

inline std::string horizon_key(double h) {
  std::ostringstream ss;
  ss << "+" << std::fixed << std::setprecision(2) << h;
  return ss.str();
}

}  // namespace detail

// ---------------------------------------------------------------- calibrate

inline int cmd_calibrate(const fs::path& lines_path, const fs::path& out_path, std::ostream& out,
                         std::ostream& err) {
  try {
    const json j = io::read_json_file(lines_path, Errc::parse_error);
    const io::CalibrationFile cf = io::parse_calibration(j);
    if (out_path.has_parent_path()) detail::ensure_dir(out_path.parent_path());
    io::write_text(out_path, io::calibration_to_json(cf).dump(2) + "\n");
    out << json{{"command", "calibrate"}, {"u", io::to_json(cf.calib.u)}, {"v", io::to_json(cf.calib.v)},
                {"f", cf.calib.f}, {"out", out_path.string()}}.dump()
        << "\n";
    return ok;
  } catch (const Error& e) {
    return detail::report(e, err, data_error);
  }
}

// ---------------------------------------------------------------- simulate

inline int cmd_simulate(const fs::path& scenario_path, std::uint64_t seed, const fs::path& out_dir,
                        std::ostream& out, std::ostream& err) {
  ScenarioConfig cfg;
  try {
    cfg = io::parse_scenario(io::read_json_file(scenario_path, Errc::config_error));
  } catch (const Error& e) {
    return detail::report(e, err, config_error);
  }
  try {
    const SimulationResult res = simulate_scenario(cfg, seed);
    detail::ensure_dir(out_dir);
    std::string dets, truth;
    for (const auto& d : res.detections) dets += io::detection_to_json(d).dump() + "\n";
    for (const auto& t : res.truth) truth += io::truth_to_json(t).dump() + "\n";
    io::write_text(out_dir / "detections.jsonl", dets);
    io::write_text(out_dir / "ground_truth.jsonl", truth);
    io::write_text(out_dir / "scenario.json", io::scenario_summary_to_json(res).dump(2) + "\n");
    io::write_text(out_dir / "calibration.json",
                   io::calibration_to_json({res.camera.calib, cfg.camera.width, cfg.camera.height}).dump(2) + "\n");
    io::write_text(out_dir / "lines.json", io::lines_to_json(res).dump(2) + "\n");
    SceneConfig scene;
    scene.fps = cfg.camera.fps;
    io::write_text(out_dir / "scene.json", io::scene_to_json(scene).dump(2) + "\n");
    detail::write_manifest(out_dir, "simulate",
                           {{"scenario", scenario_path.string()}, {"out", out_dir.string()}}, seed);
    out << json{{"command", "simulate"}, {"frames", cfg.duration}, {"vehicles", cfg.vehicles.size()},
                {"detections", res.detections.size()}, {"out", out_dir.string()}}.dump()
        << "\n";
    return ok;
  } catch (const Error& e) {
    return detail::report(e, err, detail::exit_for(e));
  }
}

// ---------------------------------------------------------------- run

struct RunOverrides {
  std::optional<double> threshold;
  std::optional<std::vector<double>> horizons;
  std::optional<double> grid_cell;
};

inline int cmd_run(const fs::path& calib_path, const fs::path& scene_path, const fs::path& detections_path,
                   const fs::path& out_dir, const RunOverrides& overrides, std::ostream& out, std::ostream& err) {
  io::CalibrationFile cf;
  SceneConfig scene;
  try {
    cf = io::parse_calibration(io::read_json_file(calib_path, Errc::config_error));
    scene = io::parse_scene(io::read_json_file(scene_path, Errc::config_error));
    if (overrides.threshold) scene.alert_threshold = *overrides.threshold;
    if (overrides.horizons) scene.horizons = *overrides.horizons;
    if (overrides.grid_cell) scene.grid_cell = *overrides.grid_cell;
    scene.validate();
  } catch (const Error& e) {
    return detail::report(e, err, config_error);
  }

  try {
    std::ifstream in(detections_path);
    if (!in) throw Error(Errc::parse_error, "cannot read " + detections_path.string());
    const std::vector<DetectionRecord> dets = io::read_detections(in);

    detail::ensure_dir(out_dir);
    detail::ensure_dir(out_dir / "danger");
    Pipeline pipeline(cf.calib, scene, cf.width, cf.height);
    std::ofstream frames(out_dir / "frames.jsonl", std::ios::binary);
    std::ofstream alerts(out_dir / "alerts.jsonl", std::ios::binary);
    if (!frames || !alerts) throw Error(Errc::invalid_argument, "cannot write outputs in " + out_dir.string());

    std::size_t n_frames = 0, n_alerts = 0, n_dropped = 0, n_rasters = 0;
    std::set<long> ids;
    for (std::size_t i = 0; i < dets.size();) {
      std::size_t j = i;
      while (j < dets.size() && dets[j].frame_no == dets[i].frame_no) ++j;
      const long frame_no = dets[i].frame_no;
      FrameOutput fo = pipeline.process_frame(frame_no, {dets.begin() + i, dets.begin() + j});
      std::vector<std::string> files(fo.danger.size());
      for (std::size_t h = 0; h < fo.danger.size(); ++h) {
        const DangerMap& m = fo.danger[h];
        if (!(m.max() > 0.0)) continue;
        std::ostringstream name;
        name << "f" << std::setw(6) << std::setfill('0') << frame_no << "_h" << h;
        files[h] = "danger/" + name.str() + ".pgm";
        io::write_text(out_dir / files[h], io::danger_pgm(m));
        io::write_text(out_dir / ("danger/" + name.str() + ".json"), io::danger_sidecar(m, frame_no).dump(2) + "\n");
        ++n_rasters;
      }
      frames << io::frame_to_json(fo, files, scene.closure_tolerance).dump() << "\n";
      for (const auto& a : fo.alerts) alerts << io::alert_to_json(a).dump() << "\n";
      for (const auto& t : fo.tracks) ids.insert(t.track_id);
      ++n_frames;
      n_alerts += fo.alerts.size();
      n_dropped += fo.dropped.size();
      i = j;
    }
    json args{{"calib", calib_path.string()},
              {"scene", scene_path.string()},
              {"detections", detections_path.string()},
              {"out", out_dir.string()},
              {"threshold", scene.alert_threshold},
              {"horizons", scene.horizons},
              {"grid_cell", scene.grid_cell}};
    detail::write_manifest(out_dir, "run", args, std::nullopt);
    out << json{{"command", "run"},     {"frames", n_frames},   {"detections", dets.size()},
                {"tracks", ids.size()}, {"alerts", n_alerts},   {"dropped", n_dropped},
                {"danger_rasters", n_rasters}, {"out", out_dir.string()}}.dump()
        << "\n";
    return ok;
  } catch (const Error& e) {
    return detail::report(e, err, detail::exit_for(e));
  }
}

// ---------------------------------------------------------------- eval

namespace detail {

struct TrackObs {
  long frame_no = 0;
  PlanePoint center;
  std::optional<double> speed_kmh;
  std::size_t history = 0;
  std::vector<std::pair<double, PredictionSnapshot>> predictions;
};

inline std::map<long, std::vector<TrackObs>> read_frames(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw Error(Errc::parse_error, "cannot read " + path.string());
  std::map<long, std::vector<TrackObs>> tracks;
  std::string line;
  long line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    const std::string where = path.filename().string() + " line " + std::to_string(line_no);
    const json j = io::detail::parse_text(line, Errc::parse_error, where);
    try {
      const long frame = j.at("frame").get<long>();
      for (const auto& t : j.at("tracks")) {
        TrackObs o;
        o.frame_no = frame;
        o.center = io::detail::point<PlaneTag>(t.at("center"), Errc::parse_error, where, "center");
        if (!t.at("speed_kmh").is_null()) o.speed_kmh = t.at("speed_kmh").get<double>();
        o.history = t.at("history").get<std::size_t>();
        for (const auto& p : t.at("predictions")) {
          PredictionSnapshot s;
          s.t_offset = p.at("t_offset").get<double>();
          s.center = io::detail::point<PlaneTag>(p.at("center"), Errc::parse_error, where, "center");
          s.speed = io::detail::point<PlaneTag>(p.at("speed"), Errc::parse_error, where, "speed");
          o.predictions.emplace_back(s.t_offset, s);
        }
        tracks[t.at("track_id").get<long>()].push_back(std::move(o));
      }
    } catch (const json::exception& e) {
      throw Error(Errc::parse_error, where + ": " + e.what());
    }
  }
  return tracks;
}

}  // namespace detail

inline int cmd_eval(const fs::path& outputs_dir, const fs::path& gt_path, const fs::path& scenario_path,
                    const fs::path& calib_path, const fs::path& report_path, std::ostream& out, std::ostream& err) {
  io::CalibrationFile cf;
  try {
    cf = io::parse_calibration(io::read_json_file(calib_path, Errc::config_error));
  } catch (const Error& e) {
    return detail::report(e, err, config_error);
  }
  try {
    const PlaneBasis basis = plane_basis(cf.calib);
    const double lambda = cf.calib.lambda;
    const auto tracks = detail::read_frames(outputs_dir / "frames.jsonl");

    std::ifstream gin(gt_path);
    if (!gin) throw Error(Errc::parse_error, "cannot read " + gt_path.string());
    std::map<long, std::map<long, io::TruthRecord>> gt_by_frame;  // frame -> vehicle -> record
    std::map<long, std::vector<io::TruthRecord>> gt_by_vehicle;
    std::string line;
    long line_no = 0;
    while (std::getline(gin, line)) {
      ++line_no;
      if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
      const std::string where = gt_path.filename().string() + " line " + std::to_string(line_no);
      const io::TruthRecord t = io::parse_truth(io::detail::parse_text(line, Errc::parse_error, where), where);
      gt_by_frame[t.frame_no][t.vehicle] = t;
      gt_by_vehicle[t.vehicle].push_back(t);
    }

    const json sc = io::read_json_file(scenario_path, Errc::parse_error);
    double fps = 0.0;
    std::array<double, 2> area{};
    std::vector<PeriodRecord> gt_periods;
    std::vector<MeasurementLine> lines;
    try {
      fps = sc.at("fps").get<double>();
      area = {sc.at("measurement_area_plane")[0].get<double>(), sc.at("measurement_area_plane")[1].get<double>()};
      for (const auto& p : sc.at("periods")) {
        gt_periods.push_back({p.at("id").get<long>(), p.at("enter_time").get<double>(), p.at("exit_time").get<double>()});
      }
      for (const auto& l : sc.at("measurement_lines")) {
        lines.push_back({l.at("group").get<std::string>(),
                         io::detail::point<ImageTag>(l.at("a"), Errc::parse_error, "scenario", "a"),
                         io::detail::point<ImageTag>(l.at("b"), Errc::parse_error, "scenario", "b"),
                         l.at("length_m").get<double>()});
      }
    } catch (const json::exception& e) {
      throw Error(Errc::parse_error, scenario_path.string() + ": " + e.what());
    }
    if (!(fps > 0.0)) throw Error(Errc::parse_error, "scenario fps must be positive");

    // Track -> vehicle by majority of nearest true centers.
    std::map<long, long> track_vehicle;
    for (const auto& [id, obs] : tracks) {
      std::map<long, int> votes;
      for (const auto& o : obs) {
        const auto it = gt_by_frame.find(o.frame_no);
        if (it == gt_by_frame.end() || it->second.empty()) {
          throw Error(Errc::parse_error, "track " + std::to_string(id) + " at frame " + std::to_string(o.frame_no) +
                                             " has no ground truth in that frame");
        }
        long best = -1;
        double best_d = 0.0;
        for (const auto& [vid, t] : it->second) {
          const double d = distance(o.center, t.center);
          if (best < 0 || d < best_d) {
            best = vid;
            best_d = d;
          }
        }
        ++votes[best];
      }
      long winner = -1;
      int most = 0;
      for (const auto& [vid, n] : votes) {
        if (n > most) {
          most = n;
          winner = vid;
        }
      }
      track_vehicle[id] = winner;
    }

    // Presence periods of estimated tracks.
    std::vector<PeriodRecord> est_periods;
    std::vector<long> est_ids;
    for (const auto& [id, obs] : tracks) {
      long first = -1, last = -1;
      for (const auto& o : obs) {
        if (o.center.y >= area[0] && o.center.y <= area[1]) {
          if (first < 0) first = o.frame_no;
          last = o.frame_no;
        }
      }
      if (first >= 0) {
        est_periods.push_back({id, first / fps, (last + 1) / fps});
        est_ids.push_back(id);
      }
    }
    const MatchResult match = match_periods(est_periods, gt_periods, 0.5);

    json speed;
    std::vector<std::pair<double, double>> speed_pairs;
    for (const auto& m : match.matches) {
      const auto& obs = tracks.at(est_ids[m.est]);
      std::optional<double> est;
      for (auto it = obs.rbegin(); it != obs.rend() && !est; ++it) est = it->speed_kmh;
      const PeriodRecord& gp = gt_periods[m.gt];
      double sum = 0.0;
      int n = 0;
      for (const auto& t : gt_by_vehicle[gp.id]) {
        const double time = t.frame_no / fps;
        if (time >= gp.enter_time - 1e-9 && time < gp.exit_time - 1e-9) {
          sum += t.speed_kmh;
          ++n;
        }
      }
      if (est && n > 0) speed_pairs.emplace_back(*est, sum / n);
    }
    try {
      speed = detail::stats_json(speed_metrics(speed_pairs));
    } catch (const Error& e) {
      speed = {{"count", 0}, {"error", to_string(e.code())}};
    }

    std::vector<PredictionSample> samples;
    for (const auto& [id, obs] : tracks) {
      const long vid = track_vehicle.at(id);
      for (const auto& o : obs) {
        for (const auto& [h, snap] : o.predictions) {
          const long target = o.frame_no + std::lround(h * fps);
          const auto fit = gt_by_frame.find(target);
          if (fit == gt_by_frame.end()) continue;
          const auto vit = fit->second.find(vid);
          if (vit == fit->second.end()) continue;
          samples.push_back({h, o.history, lambda * distance(snap.center, vit->second.center),
                             speed_kmh(snap.speed, lambda), vit->second.speed_kmh});
        }
      }
    }
    json prediction = json::object();
    for (const auto& [h, st] : prediction_metrics(samples, 5)) {
      prediction[detail::horizon_key(h)] = {{"location_abs_mean", st.location.mean},
                                            {"location_abs_median", st.location.median},
                                            {"speed_abs_mean", st.speed.absolute.mean},
                                            {"speed_abs_median", st.speed.absolute.median},
                                            {"speed_rel_mean", st.speed.relative.mean},
                                            {"speed_rel_median", st.speed.relative.median},
                                            {"count", st.location.count}};
    }

    json distance_section = json::object();
    for (const auto& [group, st] : distance_metrics(lines, cf.calib, basis)) distance_section[group] = detail::stats_json(st);

    json report{{"distance", distance_section},
                {"speed", speed},
                {"prediction", prediction},
                {"matching",
                 {{"recall", match.recall},
                  {"matched", match.matches.size()},
                  {"gt_count", gt_periods.size()},
                  {"est_count", est_periods.size()},
                  {"unmatched_estimates", match.unmatched_estimates},
                  {"l_iou", 0.5}}},
                {"median", "lower-middle"}};
    if (report_path.has_parent_path()) detail::ensure_dir(report_path.parent_path());
    io::write_text(report_path, report.dump(2) + "\n");
    out << json{{"command", "eval"}, {"recall", match.recall}, {"matched", match.matches.size()},
                {"report", report_path.string()}}.dump()
        << "\n";
    return ok;
  } catch (const Error& e) {
    return detail::report(e, err, detail::exit_for(e));
  }
}

}  // namespace tdr::cli
