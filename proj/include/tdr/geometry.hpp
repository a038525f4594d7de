#pragma once

// Small fixed-size vector types and planar polygon predicates shared by every
// module. Image and plane coordinates are distinct types so a pixel can never
// be passed where a road-plane coordinate is expected.

#include <algorithm>
#include <array>
#include <cmath>
#include <cstddef>
#include <optional>
#include <span>
#include <vector>

namespace tdr {

template <class Tag>
struct Point2 {
  double x = 0.0;
  double y = 0.0;

  constexpr Point2& operator+=(const Point2& o) noexcept {
    x += o.x;
    y += o.y;
    return *this;
  }
  constexpr Point2& operator-=(const Point2& o) noexcept {
    x -= o.x;
    y -= o.y;
    return *this;
  }
  constexpr Point2& operator*=(double k) noexcept {
    x *= k;
    y *= k;
    return *this;
  }
  friend constexpr Point2 operator+(Point2 a, const Point2& b) noexcept { return a += b; }
  friend constexpr Point2 operator-(Point2 a, const Point2& b) noexcept { return a -= b; }
  friend constexpr Point2 operator-(const Point2& a) noexcept { return {-a.x, -a.y}; }
  friend constexpr Point2 operator*(Point2 a, double k) noexcept { return a *= k; }
  friend constexpr Point2 operator*(double k, Point2 a) noexcept { return a *= k; }
  friend constexpr Point2 operator/(const Point2& a, double k) noexcept { return {a.x / k, a.y / k}; }
  friend constexpr bool operator==(const Point2&, const Point2&) = default;
};

struct ImageTag {};
struct PlaneTag {};

/// Pixel coordinates, origin top-left, y down.
using ImagePoint = Point2<ImageTag>;
/// Road-plane coordinates in plane units: x is s (along V), y is t (along U,
/// the traffic direction).
using PlanePoint = Point2<PlaneTag>;
/// Plane-space displacement or velocity.
using PlaneVector = Point2<PlaneTag>;

template <class Tag>
constexpr double dot(const Point2<Tag>& a, const Point2<Tag>& b) noexcept {
  return a.x * b.x + a.y * b.y;
}
template <class Tag>
constexpr double cross(const Point2<Tag>& a, const Point2<Tag>& b) noexcept {
  return a.x * b.y - a.y * b.x;
}
template <class Tag>
inline double norm(const Point2<Tag>& a) noexcept {
  return std::hypot(a.x, a.y);
}
template <class Tag>
inline double distance(const Point2<Tag>& a, const Point2<Tag>& b) noexcept {
  return norm(a - b);
}
template <class Tag>
constexpr bool is_finite(const Point2<Tag>& a) noexcept {
  return std::isfinite(a.x) && std::isfinite(a.y);
}

struct Vec3 {
  double x = 0.0;
  double y = 0.0;
  double z = 0.0;

  friend constexpr Vec3 operator+(const Vec3& a, const Vec3& b) noexcept {
    return {a.x + b.x, a.y + b.y, a.z + b.z};
  }
  friend constexpr Vec3 operator-(const Vec3& a, const Vec3& b) noexcept {
    return {a.x - b.x, a.y - b.y, a.z - b.z};
  }
  friend constexpr Vec3 operator-(const Vec3& a) noexcept { return {-a.x, -a.y, -a.z}; }
  friend constexpr Vec3 operator*(const Vec3& a, double k) noexcept { return {a.x * k, a.y * k, a.z * k}; }
  friend constexpr Vec3 operator*(double k, const Vec3& a) noexcept { return a * k; }
  friend constexpr Vec3 operator/(const Vec3& a, double k) noexcept { return {a.x / k, a.y / k, a.z / k}; }
  friend constexpr bool operator==(const Vec3&, const Vec3&) = default;
};

/// World coordinates of the camera model: camera-aligned axes, pixel scale.
using WorldPoint = Vec3;

constexpr double dot(const Vec3& a, const Vec3& b) noexcept { return a.x * b.x + a.y * b.y + a.z * b.z; }
constexpr Vec3 cross(const Vec3& a, const Vec3& b) noexcept {
  return {a.y * b.z - a.z * b.y, a.z * b.x - a.x * b.z, a.x * b.y - a.y * b.x};
}
inline double norm(const Vec3& a) noexcept { return std::sqrt(dot(a, a)); }
inline Vec3 normalized(const Vec3& a) noexcept { return a / norm(a); }

using Mat3 = std::array<std::array<double, 3>, 3>;

constexpr Mat3 multiply(const Mat3& a, const Mat3& b) noexcept {
  Mat3 r{};
  for (int i = 0; i < 3; ++i)
    for (int j = 0; j < 3; ++j)
      for (int k = 0; k < 3; ++k) r[i][j] += a[i][k] * b[k][j];
  return r;
}
constexpr Mat3 transpose(const Mat3& a) noexcept {
  Mat3 r{};
  for (int i = 0; i < 3; ++i)
    for (int j = 0; j < 3; ++j) r[i][j] = a[j][i];
  return r;
}
constexpr double determinant(const Mat3& m) noexcept {
  return m[0][0] * (m[1][1] * m[2][2] - m[1][2] * m[2][1]) -
         m[0][1] * (m[1][0] * m[2][2] - m[1][2] * m[2][0]) +
         m[0][2] * (m[1][0] * m[2][1] - m[1][1] * m[2][0]);
}

/// Infinite line through `point` with direction `direction` (not necessarily unit).
struct Line2 {
  ImagePoint point;
  ImagePoint direction;
};

/// Intersection of two infinite lines; nullopt when |cross(d1, d2)| is below
/// `eps` after normalizing both directions.
inline std::optional<ImagePoint> intersect(const Line2& l1, const Line2& l2, double eps = 1e-12) {
  const ImagePoint d1 = l1.direction / norm(l1.direction);
  const ImagePoint d2 = l2.direction / norm(l2.direction);
  const double denom = cross(d1, d2);
  if (!(std::abs(denom) >= eps)) return std::nullopt;
  const double t = cross(l2.point - l1.point, d2) / denom;
  return l1.point + d1 * t;
}

/// Perpendicular distance from `p` to the infinite line `l`.
inline double line_distance(const ImagePoint& p, const Line2& l) {
  return std::abs(cross(l.direction, p - l.point)) / norm(l.direction);
}

/// Euclidean distance from `p` to the closed segment [a, b].
template <class Tag>
double point_segment_distance(const Point2<Tag>& p, const Point2<Tag>& a, const Point2<Tag>& b) {
  const Point2<Tag> ab = b - a;
  const double len2 = dot(ab, ab);
  if (len2 == 0.0) return distance(p, a);
  const double t = std::clamp(dot(p - a, ab) / len2, 0.0, 1.0);
  return distance(p, a + ab * t);
}

/// Shoelace signed area; positive when the vertex order turns from +x toward +y.
template <class Tag>
double signed_area(std::span<const Point2<Tag>> poly) {
  double acc = 0.0;
  const std::size_t n = poly.size();
  for (std::size_t i = 0; i < n; ++i) acc += cross(poly[i], poly[(i + 1) % n]);
  return 0.5 * acc;
}

namespace detail {
template <class Tag>
int orientation(const Point2<Tag>& a, const Point2<Tag>& b, const Point2<Tag>& c) {
  const double v = cross(b - a, c - a);
  return (v > 0.0) - (v < 0.0);
}
template <class Tag>
bool on_segment(const Point2<Tag>& a, const Point2<Tag>& b, const Point2<Tag>& p) {
  return std::min(a.x, b.x) <= p.x && p.x <= std::max(a.x, b.x) && std::min(a.y, b.y) <= p.y &&
         p.y <= std::max(a.y, b.y);
}
}  // namespace detail

/// True when closed segments [a, b] and [c, d] share at least one point.
template <class Tag>
bool segments_intersect(const Point2<Tag>& a, const Point2<Tag>& b, const Point2<Tag>& c, const Point2<Tag>& d) {
  const int o1 = detail::orientation(a, b, c);
  const int o2 = detail::orientation(a, b, d);
  const int o3 = detail::orientation(c, d, a);
  const int o4 = detail::orientation(c, d, b);
  if (o1 != o2 && o3 != o4) return true;
  if (o1 == 0 && detail::on_segment(a, b, c)) return true;
  if (o2 == 0 && detail::on_segment(a, b, d)) return true;
  if (o3 == 0 && detail::on_segment(c, d, a)) return true;
  if (o4 == 0 && detail::on_segment(c, d, b)) return true;
  return false;
}

/// Crossing-number containment test. Points exactly on the boundary may go
/// either way; callers that need boundary contact test the edges separately.
template <class Tag>
bool point_in_polygon(const Point2<Tag>& p, std::span<const Point2<Tag>> poly) {
  bool inside = false;
  const std::size_t n = poly.size();
  for (std::size_t i = 0, j = n - 1; i < n; j = i++) {
    const auto& a = poly[i];
    const auto& b = poly[j];
    if ((a.y > p.y) != (b.y > p.y)) {
      const double x_cross = a.x + (p.y - a.y) * (b.x - a.x) / (b.y - a.y);
      if (p.x < x_cross) inside = !inside;
    }
  }
  return inside;
}

/// Andrew's monotone chain. Returns the hull counterclockwise in the
/// signed-area sense (positive area), collinear points dropped.
template <class Tag>
std::vector<Point2<Tag>> convex_hull(std::vector<Point2<Tag>> pts) {
  std::sort(pts.begin(), pts.end(), [](const auto& a, const auto& b) { return a.x < b.x || (a.x == b.x && a.y < b.y); });
  pts.erase(std::unique(pts.begin(), pts.end()), pts.end());
  if (pts.size() < 3) return pts;
  std::vector<Point2<Tag>> hull(2 * pts.size());
  std::size_t k = 0;
  for (const auto& p : pts) {
    while (k >= 2 && cross(hull[k - 1] - hull[k - 2], p - hull[k - 2]) <= 0.0) --k;
    hull[k++] = p;
  }
  for (std::size_t i = pts.size() - 1, lower = k + 1; i-- > 0;) {
    const auto& p = pts[i];
    while (k >= lower && cross(hull[k - 1] - hull[k - 2], p - hull[k - 2]) <= 0.0) --k;
    hull[k++] = p;
  }
  hull.resize(k - 1);
  return hull;
}

/// Four plane points in cyclic order: a vehicle footprint.
struct Quadrangle {
  std::array<PlanePoint, 4> corners;

  std::span<const PlanePoint> points() const noexcept { return corners; }
  double area() const { return std::abs(signed_area(points())); }
  friend bool operator==(const Quadrangle&, const Quadrangle&) = default;
};

inline Quadrangle translated(const Quadrangle& q, const PlaneVector& offset) {
  Quadrangle out = q;
  for (auto& p : out.corners) p += offset;
  return out;
}

}  // namespace tdr
