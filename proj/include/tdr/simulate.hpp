#pragma once

// Synthetic scenes: cuboid vehicles moving on a known road plane, seen by a
// known pinhole camera. Produces detections plus exact ground truth.
//
// Vehicle positions are given in meters on the road: s across the road
// (toward v), t along the traffic direction (toward u), both measured from the
// road point seen at the principal point.

#include <algorithm>
#include <array>
#include <cmath>
#include <numbers>
#include <optional>
#include <random>
#include <string>
#include <vector>

#include "tdr/box3d.hpp"
#include "tdr/calib.hpp"
#include "tdr/error.hpp"
#include "tdr/geometry.hpp"
#include "tdr/pipeline.hpp"

namespace tdr {

struct CameraPose {
  ImagePoint c{960.0, 540.0};
  double f = 1400.0;
  double pitch = 0.3;  // radians, positive looks down at the road
  double yaw = 0.2;    // radians, traffic direction relative to the optical axis
  double roll = 0.0;   // radians
  double height_m = 8.0;
  double lambda = 0.01;  // meters per world unit
  int width = 1920;
  int height = 1080;
  double fps = 25.0;
};

/// A camera pose resolved into the calibration the pipeline would recover plus
/// the road-plane frame used to place vehicles.
struct SimCamera {
  CameraPose pose;
  CameraCalibration calib;  // exact; d chosen so the road lies in front of the camera
  PlaneBasis basis;
  Vec3 origin_m;  // road point on the optical axis, meters from C
  Vec3 up;        // unit road normal pointing toward the camera side
  Vec3 along;     // unit, traffic direction (toward u)
  Vec3 across;    // unit, toward v
};

inline ImagePoint forward_project(const WorldPoint& P, const CameraCalibration& cal) {
  const Vec3 r = P - cal.center();
  if (!(r.z > 0.0)) throw Error(Errc::behind_camera, "point is not in front of the camera");
  return {cal.c.x + cal.f * r.x / r.z, cal.c.y + cal.f * r.y / r.z};
}

inline SimCamera make_camera(const CameraPose& pose) {
  if (!(pose.f > 0.0) || !(pose.lambda > 0.0) || !(pose.height_m > 0.0) || !(pose.fps > 0.0) || pose.width <= 0 ||
      pose.height <= 0) {
    throw Error(Errc::config_error, "camera needs positive f, lambda, height_m, fps and image size");
  }
  auto rotate = [&](Vec3 d) {
    const double cp = std::cos(pose.pitch), sp = std::sin(pose.pitch);
    d = {d.x, d.y * cp - d.z * sp, d.y * sp + d.z * cp};
    const double cr = std::cos(pose.roll), sr = std::sin(pose.roll);
    return Vec3{d.x * cr - d.y * sr, d.x * sr + d.y * cr, d.z};
  };
  const Vec3 fwd = rotate({std::sin(pose.yaw), 0.0, std::cos(pose.yaw)});
  const Vec3 side = rotate({std::cos(pose.yaw), 0.0, -std::sin(pose.yaw)});
  auto vanish = [&](const Vec3& d) {
    if (std::abs(d.z) < 1e-9) throw Error(Errc::config_error, "a road direction is parallel to the image plane");
    return ImagePoint{pose.c.x + pose.f * d.x / d.z, pose.c.y + pose.f * d.y / d.z};
  };
  SimCamera cam;
  cam.pose = pose;
  CameraCalibration probe = derive_camera(vanish(fwd), vanish(side), pose.c, 1.0, pose.lambda);
  const Vec3 n = probe.plane.normal();
  if (std::abs(n.z) < 1e-9) throw Error(Errc::config_error, "optical axis is parallel to the road");
  // Road plane n.X = s*h (X in meters from C) so that the optical axis meets it in front.
  const double s = n.z > 0.0 ? 1.0 : -1.0;
  const double d = -dot(n, probe.center()) - s * pose.height_m / pose.lambda;
  cam.calib = derive_camera(probe.u, probe.v, pose.c, d, pose.lambda);
  cam.basis = plane_basis(cam.calib);
  cam.origin_m = {0.0, 0.0, pose.height_m / std::abs(n.z)};
  cam.up = n * (-s);
  cam.along = cam.basis.u_hat();
  cam.across = cam.basis.v_hat();
  return cam;
}

/// World point (camera model units) of a road-frame position in meters.
inline WorldPoint road_point(const SimCamera& cam, double s, double t, double z = 0.0) {
  const Vec3 x = cam.origin_m + cam.across * s + cam.along * t + cam.up * z;
  return cam.calib.center() + x / cam.pose.lambda;
}

inline PlanePoint road_to_plane(const SimCamera& cam, double s, double t) {
  return to_plane_coords(road_point(cam, s, t), cam.basis);
}

struct SimVehicle {
  long id = 1;
  VehicleClass cls = VehicleClass::car;
  double length = 4.5;  // meters, along the traffic direction
  double width = 1.8;
  double height = 1.5;
  std::array<double, 2> position{0.0, 0.0};  // (s, t) meters at spawn
  std::array<double, 2> velocity{0.0, 0.0};  // m/s
  std::array<double, 2> acceleration{0.0, 0.0};
  long spawn = 0;
  long despawn = -1;  // last frame inclusive; -1 runs to the end
};

struct ScenarioConfig {
  CameraPose camera;
  std::vector<SimVehicle> vehicles;
  double contour_sigma = 0.0;  // pixels
  double drop_probability = 0.0;
  long duration = 100;  // frames
  std::array<double, 2> measurement_area{-20.0, 20.0};  // t range in meters
  bool emit_track_ids = true;

  void validate() const {
    auto bad = [](const std::string& what) { throw Error(Errc::config_error, what); };
    if (!(camera.fps > 0.0)) bad("fps must be positive");
    if (duration <= 0) bad("duration must be positive");
    if (!(contour_sigma >= 0.0)) bad("contour_sigma must be non-negative");
    if (!(drop_probability >= 0.0 && drop_probability <= 1.0)) bad("drop_probability must lie in [0, 1]");
    if (!(measurement_area[1] > measurement_area[0])) bad("measurement_area must be increasing");
    for (const auto& v : vehicles) {
      if (!(v.length > 0.0 && v.width > 0.0 && v.height > 0.0)) bad("vehicle dimensions must be positive");
      if (v.despawn >= 0 && v.despawn < v.spawn) bad("vehicle despawns before it spawns");
    }
  }
};

struct VehicleTruth {
  long frame_no = 0;
  long vehicle = 0;
  std::array<double, 2> position_m{};  // (s, t)
  std::array<double, 2> velocity_m{};  // m/s
  PlanePoint center;
  PlaneVector velocity;  // plane units per second
  double speed_kmh = 0.0;
  Quadrangle footprint;
  std::array<WorldPoint, 8> corners_world{};  // bottom A..D then top E..H
  std::optional<std::array<ImagePoint, 8>> corners_image;  // absent when a corner is behind the camera
  bool detected = false;
};

struct PeriodRecord {
  long id = 0;
  double enter_time = 0.0;  // seconds
  double exit_time = 0.0;
};

struct MeasurementLine {
  std::string group;  // "u" or "v"
  ImagePoint a;
  ImagePoint b;
  double length_m = 0.0;
};

struct SimulationResult {
  SimCamera camera;
  std::vector<DetectionRecord> detections;
  std::vector<VehicleTruth> truth;
  std::vector<PeriodRecord> periods;
  std::array<double, 2> measurement_area_plane{};  // t range in plane units
  std::vector<MeasurementLine> measurement_lines;
  std::vector<LineSegment> lines_u;
  std::vector<LineSegment> lines_v;
};

/// Eight cuboid corners: bottom face (rear-left, rear-right, front-right,
/// front-left) then the top face in the same order.
inline std::array<WorldPoint, 8> vehicle_corners(const SimCamera& cam, double s, double t, double length,
                                                 double width, double height) {
  const double hl = 0.5 * length, hw = 0.5 * width;
  const std::array<std::array<double, 2>, 4> base{{{-hw, -hl}, {hw, -hl}, {hw, hl}, {-hw, hl}}};
  std::array<WorldPoint, 8> out{};
  for (int k = 0; k < 4; ++k) {
    out[k] = road_point(cam, s + base[k][0], t + base[k][1], 0.0);
    out[k + 4] = road_point(cam, s + base[k][0], t + base[k][1], height);
  }
  return out;
}

namespace detail {

// Sutherland-Hodgman clip of a convex polygon to the image rectangle.
inline std::vector<ImagePoint> clip_to_image(std::vector<ImagePoint> poly, double width, double height) {
  auto clip_edge = [](const std::vector<ImagePoint>& in, auto inside, auto cut) {
    std::vector<ImagePoint> out;
    for (std::size_t i = 0; i < in.size(); ++i) {
      const ImagePoint& a = in[i];
      const ImagePoint& b = in[(i + 1) % in.size()];
      const bool ia = inside(a), ib = inside(b);
      if (ia) out.push_back(a);
      if (ia != ib) out.push_back(cut(a, b));
    }
    return out;
  };
  auto at_x = [](double x) {
    return [x](const ImagePoint& a, const ImagePoint& b) {
      return ImagePoint{x, a.y + (b.y - a.y) * (x - a.x) / (b.x - a.x)};
    };
  };
  auto at_y = [](double y) {
    return [y](const ImagePoint& a, const ImagePoint& b) {
      return ImagePoint{a.x + (b.x - a.x) * (y - a.y) / (b.y - a.y), y};
    };
  };
  poly = clip_edge(poly, [](const ImagePoint& p) { return p.x >= 0.0; }, at_x(0.0));
  if (poly.empty()) return poly;
  poly = clip_edge(poly, [&](const ImagePoint& p) { return p.x <= width - 1.0; }, at_x(width - 1.0));
  if (poly.empty()) return poly;
  poly = clip_edge(poly, [](const ImagePoint& p) { return p.y >= 0.0; }, at_y(0.0));
  if (poly.empty()) return poly;
  return clip_edge(poly, [&](const ImagePoint& p) { return p.y <= height - 1.0; }, at_y(height - 1.0));
}

}  // namespace detail

inline SimulationResult simulate_scenario(const ScenarioConfig& cfg, std::uint64_t seed) {
  cfg.validate();
  SimulationResult res;
  res.camera = make_camera(cfg.camera);
  const SimCamera& cam = res.camera;
  const double fps = cfg.camera.fps;
  const double lambda = cfg.camera.lambda;
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> jitter(0.0, 1.0);
  std::uniform_real_distribution<double> unit(0.0, 1.0);

  for (long frame = 0; frame < cfg.duration; ++frame) {
    for (const SimVehicle& veh : cfg.vehicles) {
      const long last = veh.despawn < 0 ? cfg.duration - 1 : veh.despawn;
      if (frame < veh.spawn || frame > last) continue;
      const double tau = static_cast<double>(frame - veh.spawn) / fps;
      VehicleTruth gt;
      gt.frame_no = frame;
      gt.vehicle = veh.id;
      for (int k = 0; k < 2; ++k) {
        gt.position_m[k] = veh.position[k] + veh.velocity[k] * tau + 0.5 * veh.acceleration[k] * tau * tau;
        gt.velocity_m[k] = veh.velocity[k] + veh.acceleration[k] * tau;
      }
      gt.center = road_to_plane(cam, gt.position_m[0], gt.position_m[1]);
      gt.velocity = PlaneVector{gt.velocity_m[0], gt.velocity_m[1]} / lambda;
      gt.speed_kmh = std::hypot(gt.velocity_m[0], gt.velocity_m[1]) * 3.6;
      gt.corners_world = vehicle_corners(cam, gt.position_m[0], gt.position_m[1], veh.length, veh.width, veh.height);
      for (int k = 0; k < 4; ++k) gt.footprint.corners[k] = to_plane_coords(gt.corners_world[k], cam.basis);

      std::array<ImagePoint, 8> img{};
      bool in_front = true;
      for (int k = 0; k < 8 && in_front; ++k) {
        try {
          img[k] = forward_project(gt.corners_world[k], cam.calib);
        } catch (const Error&) {
          in_front = false;
        }
      }
      // Random draws happen for every live vehicle so streams stay aligned
      // regardless of visibility.
      const bool dropped = unit(rng) < cfg.drop_probability;
      std::vector<double> noise(16);
      for (auto& n : noise) n = jitter(rng);
      if (in_front) {
        gt.corners_image = img;
        std::vector<ImagePoint> hull = convex_hull(std::vector<ImagePoint>(img.begin(), img.end()));
        for (std::size_t k = 0; k < hull.size() && cfg.contour_sigma > 0.0; ++k) {
          hull[k] += ImagePoint{noise[2 * k], noise[2 * k + 1]} * cfg.contour_sigma;
        }
        hull = detail::clip_to_image(std::move(hull), cfg.camera.width, cfg.camera.height);
        if (hull.size() >= 3 && !dropped) {
          DetectionRecord det;
          det.frame_no = frame;
          det.cls = veh.cls;
          det.score = 1.0;
          double x0 = hull[0].x, y0 = hull[0].y, x1 = x0, y1 = y0;
          for (const auto& p : hull) {
            x0 = std::min(x0, p.x);
            y0 = std::min(y0, p.y);
            x1 = std::max(x1, p.x);
            y1 = std::max(y1, p.y);
          }
          det.bbox = {x0, y0, x1 - x0, y1 - y0};
          det.contour = std::move(hull);
          if (cfg.emit_track_ids) det.track_id = veh.id;
          res.detections.push_back(std::move(det));
          gt.detected = true;
        }
      }
      res.truth.push_back(gt);
    }
  }

  // Presence periods: frames whose true center lies in the measurement area;
  // frame k covers [k, k+1) / fps.
  for (const SimVehicle& veh : cfg.vehicles) {
    long first = -1, last = -1;
    for (const auto& gt : res.truth) {
      if (gt.vehicle != veh.id) continue;
      const double t = gt.position_m[1];
      if (t >= cfg.measurement_area[0] && t <= cfg.measurement_area[1]) {
        if (first < 0) first = gt.frame_no;
        last = gt.frame_no;
      }
    }
    if (first >= 0) res.periods.push_back({veh.id, first / fps, (last + 1) / fps});
  }
  res.measurement_area_plane = {road_to_plane(cam, 0.0, cfg.measurement_area[0]).y,
                                road_to_plane(cam, 0.0, cfg.measurement_area[1]).y};
  if (res.measurement_area_plane[0] > res.measurement_area_plane[1]) {
    std::swap(res.measurement_area_plane[0], res.measurement_area_plane[1]);
  }

  // Lane markings for calibration and measurement lines with known lengths.
  auto project = [&](double s, double t) { return forward_project(road_point(cam, s, t), cam.calib); };
  for (double s : {-5.25, -1.75, 1.75, 5.25}) res.lines_u.push_back({project(s, 0.0), project(s, 30.0)});
  for (double t : {0.0, 10.0, 20.0}) res.lines_v.push_back({project(-5.0, t), project(5.0, t)});
  for (double t : {-5.0, 5.0, 15.0}) {
    for (double s : {-3.5, 0.0, 3.5}) {
      res.measurement_lines.push_back({"u", project(s, t), project(s, t + 6.0), 6.0});
      res.measurement_lines.push_back({"v", project(s - 1.75, t), project(s + 1.75, t), 3.5});
    }
  }
  return res;
}

}  // namespace tdr
