#pragma once

// Camera geometry from two vanishing points.
//
// World frame: x and y parallel to the image axes, z along the optical axis,
// camera centre at C = (c_x, c_y, 0) and the image plane at z = f. World
// units are pixel-scaled; lambda converts plane distances to meters.

#include <algorithm>
#include <cmath>
#include <span>
#include <string>

#include "tdr/error.hpp"
#include "tdr/geometry.hpp"

namespace tdr {

struct LineSegment {
  ImagePoint a;
  ImagePoint b;
};

/// Road plane a*x + b*y + c*z + d = 0 with unit (a, b, c).
struct Plane {
  double a = 0.0;
  double b = 0.0;
  double c = 0.0;
  double d = 0.0;

  Vec3 normal() const noexcept { return {a, b, c}; }
  double evaluate(const WorldPoint& p) const noexcept { return a * p.x + b * p.y + c * p.z + d; }
};

struct CameraCalibration {
  ImagePoint u;  // traffic-direction vanishing point
  ImagePoint v;  // cross-road vanishing point
  ImagePoint c;  // principal point
  double f = 0.0;
  double d = 10.0;
  double lambda = 1.0;  // meters per plane unit
  Plane plane;
  WorldPoint U;  // [u_x, u_y, f]
  WorldPoint V;  // [v_x, v_y, f]
  Vec3 W;        // (U - C) x (V - C), road normal direction
  ImagePoint w;  // vertical vanishing point

  WorldPoint center() const noexcept { return {c.x, c.y, 0.0}; }
};

/// Rotation with rows V/|V|, W/|W|, U/|U| (directions taken from C), plus its
/// decomposition r = Rx(alpha) * Ry(beta) * Rz(gamma).
struct PlaneBasis {
  Mat3 r{};
  double alpha = 0.0;
  double beta = 0.0;
  double gamma = 0.0;

  Vec3 v_hat() const noexcept { return {r[0][0], r[0][1], r[0][2]}; }
  Vec3 w_hat() const noexcept { return {r[1][0], r[1][1], r[1][2]}; }
  Vec3 u_hat() const noexcept { return {r[2][0], r[2][1], r[2][2]}; }
};

/// Least-squares intersection of the extended segments: minimizes the sum of
/// squared perpendicular distances via the 2x2 normal equations.
inline ImagePoint fit_vanishing_point(std::span<const LineSegment> segments) {
  if (segments.size() < 2) {
    throw Error(Errc::invalid_argument, "at least 2 segments are required, got " + std::to_string(segments.size()));
  }
  double m00 = 0.0, m01 = 0.0, m11 = 0.0, r0 = 0.0, r1 = 0.0;
  for (const auto& s : segments) {
    const ImagePoint dir = s.b - s.a;
    const double len = norm(dir);
    if (!(len > 0.0) || !is_finite(s.a) || !is_finite(s.b)) {
      throw Error(Errc::invalid_argument, "segment endpoints must be finite and distinct");
    }
    const ImagePoint n{-dir.y / len, dir.x / len};
    const double offset = dot(n, s.a);
    m00 += n.x * n.x;
    m01 += n.x * n.y;
    m11 += n.y * n.y;
    r0 += n.x * offset;
    r1 += n.y * offset;
  }
  const double half_trace = 0.5 * (m00 + m11);
  const double det = m00 * m11 - m01 * m01;
  const double disc = std::sqrt(std::max(0.0, half_trace * half_trace - det));
  const double lmax = half_trace + disc;
  const double lmin = half_trace - disc;
  if (!(lmin > 0.0) || lmax / lmin > 1e12) {
    throw Error(Errc::all_parallel, "labeled lines do not converge to a vanishing point");
  }
  return {(m11 * r0 - m01 * r1) / det, (m00 * r1 - m01 * r0) / det};
}

inline CameraCalibration derive_camera(ImagePoint u, ImagePoint v, ImagePoint c, double d = 10.0, double lambda = 1.0) {
  if (!is_finite(u) || !is_finite(v) || !is_finite(c)) throw Error(Errc::invalid_argument, "non-finite calibration point");
  if (!(lambda > 0.0) || !std::isfinite(lambda)) throw Error(Errc::invalid_argument, "lambda must be positive");
  if (d == 0.0 || !std::isfinite(d)) throw Error(Errc::invalid_argument, "plane offset d must be non-zero");

  const double uv = dot(u - c, v - c);
  if (!(uv < 0.0)) {
    throw Error(Errc::non_physical, "(u - c).(v - c) = " + std::to_string(uv) + " must be negative");
  }
  CameraCalibration cal;
  cal.u = u;
  cal.v = v;
  cal.c = c;
  cal.d = d;
  cal.lambda = lambda;
  cal.f = std::sqrt(-uv);
  cal.U = {u.x, u.y, cal.f};
  cal.V = {v.x, v.y, cal.f};
  const WorldPoint C = cal.center();
  cal.W = cross(cal.U - C, cal.V - C);
  if (std::abs(cal.W.z) < 1e-12) {
    throw Error(Errc::vertical_at_infinity, "vertical vanishing point is at infinity");
  }
  cal.w = ImagePoint{cal.W.x, cal.W.y} / cal.W.z * cal.f + c;
  const Vec3 n = Vec3{cal.w.x, cal.w.y, cal.f} - C;
  const Vec3 nh = normalized(n);
  cal.plane = {nh.x, nh.y, nh.z, d};
  return cal;
}

/// Intersects the viewing ray of `p` with the road plane.
inline WorldPoint project_to_plane(const ImagePoint& p, const CameraCalibration& cal) {
  const WorldPoint C = cal.center();
  const Vec3 g = Vec3{p.x, p.y, cal.f} - C;
  const double denom = dot(cal.plane.normal(), g);
  if (std::abs(denom) < 1e-12) {
    throw Error(Errc::horizon_point, "pixel (" + std::to_string(p.x) + ", " + std::to_string(p.y) +
                                         ") lies on the horizon of the road plane");
  }
  const double t = -cal.plane.evaluate(C) / denom;
  return C + g * t;
}

/// Rx(alpha) * Ry(beta) * Rz(gamma) with the sign layout used by plane_basis.
inline Mat3 euler_to_matrix(double alpha, double beta, double gamma) {
  const double ca = std::cos(alpha), sa = std::sin(alpha);
  const double cb = std::cos(beta), sb = std::sin(beta);
  const double cg = std::cos(gamma), sg = std::sin(gamma);
  const Mat3 rx{{{1, 0, 0}, {0, ca, sa}, {0, -sa, ca}}};
  const Mat3 ry{{{cb, 0, -sb}, {0, 1, 0}, {sb, 0, cb}}};
  const Mat3 rz{{{cg, sg, 0}, {-sg, cg, 0}, {0, 0, 1}}};
  return multiply(multiply(rx, ry), rz);
}

struct EulerAngles {
  double alpha = 0.0;
  double beta = 0.0;
  double gamma = 0.0;
};

/// Inverse of euler_to_matrix. At gimbal lock (cos beta = 0) only one
/// combination of alpha and gamma is observable; gamma is set to 0.
inline EulerAngles decompose_euler(const Mat3& r) {
  // r[0][2] = -sin(beta); r[0][1] / r[0][0] = tan(gamma); r[1][2] / r[2][2] = tan(alpha).
  EulerAngles e;
  e.beta = std::asin(std::clamp(-r[0][2], -1.0, 1.0));
  if (std::abs(std::cos(e.beta)) > 1e-12) {
    e.alpha = std::atan2(r[1][2], r[2][2]);
    e.gamma = std::atan2(r[0][1], r[0][0]);
  } else {
    const double sb = -r[0][2];
    e.alpha = std::atan2(r[1][0] * sb, r[1][1]);
  }
  return e;
}

inline PlaneBasis plane_basis(const CameraCalibration& cal) {
  const WorldPoint C = cal.center();
  const Vec3 vh = normalized(cal.V - C);
  Vec3 wh = normalized(cal.W);
  const Vec3 uh = normalized(cal.U - C);
  PlaneBasis basis;
  basis.r = {{{vh.x, vh.y, vh.z}, {wh.x, wh.y, wh.z}, {uh.x, uh.y, uh.z}}};
  if (determinant(basis.r) < 0.0) {
    wh = -wh;
    basis.r[1] = {wh.x, wh.y, wh.z};
  }
  const EulerAngles e = decompose_euler(basis.r);
  basis.alpha = e.alpha;
  basis.beta = e.beta;
  basis.gamma = e.gamma;
  return basis;
}

/// Plane coordinates: components along V and U; the normal component is dropped.
inline PlanePoint to_plane_coords(const WorldPoint& p, const PlaneBasis& basis) {
  return {dot(p, basis.v_hat()), dot(p, basis.u_hat())};
}

inline PlanePoint image_to_plane(const ImagePoint& p, const CameraCalibration& cal, const PlaneBasis& basis) {
  return to_plane_coords(project_to_plane(p, cal), basis);
}

/// Real-world length in meters of the image segment p1-p2 laid on the road.
inline double measure_distance(const ImagePoint& p1, const ImagePoint& p2, const CameraCalibration& cal,
                               const PlaneBasis& basis) {
  return cal.lambda * distance(image_to_plane(p1, cal, basis), image_to_plane(p2, cal, basis));
}

}  // namespace tdr
