#pragma once

// Shared generators for randomized tests.

#include <cmath>
#include <numbers>
#include <random>

#include "tdr/calib.hpp"
#include "tdr/simulate.hpp"

namespace tdr::testkit {

inline double uniform(std::mt19937_64& rng, double lo, double hi) {
  return std::uniform_real_distribution<double>(lo, hi)(rng);
}

/// Random u, v, c with (u - c).(v - c) < 0 and a finite vertical vanishing point.
inline CameraCalibration random_calibration(std::mt19937_64& rng, double d = 10.0, double lambda = 1.0) {
  while (true) {
    const ImagePoint c{uniform(rng, 600, 1300), uniform(rng, 300, 800)};
    const double a = uniform(rng, 0, 2 * std::numbers::pi);
    const double b = a + uniform(rng, 0.6 * std::numbers::pi, 1.4 * std::numbers::pi);
    const double ru = uniform(rng, 200, 5000), rv = uniform(rng, 200, 20000);
    const ImagePoint u = c + ImagePoint{std::cos(a), std::sin(a)} * ru;
    const ImagePoint v = c + ImagePoint{std::cos(b), std::sin(b)} * rv;
    try {
      return derive_camera(u, v, c, d, lambda);
    } catch (const Error&) {
    }
  }
}

/// Typical roadside camera: looking down the road, mild yaw and roll.
inline CameraPose random_pose(std::mt19937_64& rng) {
  CameraPose p;
  p.f = uniform(rng, 900, 2100);
  p.pitch = uniform(rng, 0.15, 0.65);
  p.yaw = uniform(rng, 0.08, 0.6) * (uniform(rng, 0, 1) < 0.5 ? -1.0 : 1.0);
  p.roll = uniform(rng, -0.1, 0.1);
  p.height_m = uniform(rng, 5, 15);
  p.lambda = uniform(rng, 0.005, 0.05);
  return p;
}

/// Unit vectors spanning the road plane of `cal`.
inline void plane_axes(const CameraCalibration& cal, Vec3& e1, Vec3& e2) {
  const Vec3 n = cal.plane.normal();
  const Vec3 helper = std::abs(n.x) < 0.9 ? Vec3{1, 0, 0} : Vec3{0, 1, 0};
  e1 = normalized(cross(n, helper));
  e2 = cross(n, e1);
}

}  // namespace tdr::testkit
