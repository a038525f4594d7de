#pragma once

// Vehicle outlines: border following on binary masks and polygon simplification.

#include <array>
#include <cstdint>
#include <queue>
#include <utility>
#include <vector>

#include "tdr/error.hpp"
#include "tdr/geometry.hpp"

namespace tdr {

struct BinaryMask {
  int width = 0;
  int height = 0;
  std::vector<std::uint8_t> data;  // row-major, non-zero = foreground

  BinaryMask() = default;
  BinaryMask(int w, int h) : width(w), height(h), data(static_cast<std::size_t>(w) * h, 0) {}

  bool at(int x, int y) const noexcept {
    return x >= 0 && y >= 0 && x < width && y < height && data[static_cast<std::size_t>(y) * width + x] != 0;
  }
  void set(int x, int y, bool value = true) { data[static_cast<std::size_t>(y) * width + x] = value ? 1 : 0; }
};

/// Closed polygon outline of a vehicle in image coordinates.
struct Contour {
  std::vector<ImagePoint> points;

  std::span<const ImagePoint> view() const noexcept { return points; }
};

namespace detail {

// Neighbour offsets (dx, dy); increasing index turns clockwise on screen.
inline constexpr std::array<std::pair<int, int>, 8> kRing{
    {{1, 0}, {1, 1}, {0, 1}, {-1, 1}, {-1, 0}, {-1, -1}, {0, -1}, {1, -1}}};

inline int ring_index(int dx, int dy) {
  for (int k = 0; k < 8; ++k)
    if (kRing[k].first == dx && kRing[k].second == dy) return k;
  return -1;
}

// Labels 8-connected components and returns the pixels of the largest one
// (ties go to the component found first in raster order).
inline std::vector<std::pair<int, int>> largest_component(const BinaryMask& mask) {
  std::vector<int> label(mask.data.size(), -1);
  std::vector<std::pair<int, int>> best;
  int next = 0;
  for (int y = 0; y < mask.height; ++y) {
    for (int x = 0; x < mask.width; ++x) {
      const std::size_t idx = static_cast<std::size_t>(y) * mask.width + x;
      if (!mask.data[idx] || label[idx] >= 0) continue;
      std::vector<std::pair<int, int>> pixels;
      std::queue<std::pair<int, int>> open;
      open.emplace(x, y);
      label[idx] = next;
      while (!open.empty()) {
        const auto [cx, cy] = open.front();
        open.pop();
        pixels.emplace_back(cx, cy);
        for (const auto& [dx, dy] : kRing) {
          const int nx = cx + dx, ny = cy + dy;
          if (!mask.at(nx, ny)) continue;
          const std::size_t nidx = static_cast<std::size_t>(ny) * mask.width + nx;
          if (label[nidx] >= 0) continue;
          label[nidx] = next;
          open.emplace(nx, ny);
        }
      }
      if (pixels.size() > best.size()) best = std::move(pixels);
      ++next;
    }
  }
  return best;
}

inline void douglas_peucker(std::span<const ImagePoint> pts, std::size_t first, std::size_t last, double tol,
                            std::vector<bool>& keep) {
  if (last <= first + 1) return;
  double worst = -1.0;
  std::size_t worst_idx = first;
  for (std::size_t i = first + 1; i < last; ++i) {
    const double dist = point_segment_distance(pts[i], pts[first], pts[last % pts.size()]);
    if (dist > worst) {
      worst = dist;
      worst_idx = i;
    }
  }
  if (worst > tol) {
    keep[worst_idx] = true;
    douglas_peucker(pts, first, worst_idx, tol, keep);
    douglas_peucker(pts, worst_idx, last, tol, keep);
  }
}

}  // namespace detail

/// Outer border of the largest 8-connected foreground component, traced with
/// Suzuki-Abe border following. Points are pixel centres ordered with positive
/// signed area.
inline Contour extract_contour(const BinaryMask& mask) {
  const auto pixels = detail::largest_component(mask);
  if (pixels.empty()) throw Error(Errc::empty_mask, "mask has no foreground pixel");

  BinaryMask comp(mask.width, mask.height);
  std::pair<int, int> start = pixels.front();
  for (const auto& [x, y] : pixels) {
    comp.set(x, y);
    if (y < start.second || (y == start.second && x < start.first)) start = {x, y};
  }

  Contour out;
  const auto [sx, sy] = start;
  // Search clockwise from the west neighbour (known background) for the first
  // foreground neighbour.
  int first_dir = -1;
  for (int step = 0; step < 8; ++step) {
    const int k = (4 + step) % 8;
    if (comp.at(sx + detail::kRing[k].first, sy + detail::kRing[k].second)) {
      first_dir = k;
      break;
    }
  }
  if (first_dir < 0) {
    out.points.push_back({static_cast<double>(sx), static_cast<double>(sy)});
    return out;
  }
  const std::pair<int, int> p1{sx + detail::kRing[first_dir].first, sy + detail::kRing[first_dir].second};
  std::pair<int, int> p2 = p1;
  std::pair<int, int> p3 = start;
  while (true) {
    const int back = detail::ring_index(p2.first - p3.first, p2.second - p3.second);
    std::pair<int, int> p4 = p3;
    for (int step = 1; step <= 8; ++step) {
      const int k = ((back - step) % 8 + 8) % 8;
      const int nx = p3.first + detail::kRing[k].first, ny = p3.second + detail::kRing[k].second;
      if (comp.at(nx, ny)) {
        p4 = {nx, ny};
        break;
      }
    }
    out.points.push_back({static_cast<double>(p3.first), static_cast<double>(p3.second)});
    if (p4 == start && p3 == p1) break;
    p2 = p3;
    p3 = p4;
  }
  if (signed_area(out.view()) < 0.0) std::reverse(out.points.begin(), out.points.end());
  return out;
}

/// Douglas-Peucker on the closed outline: every removed point stays within
/// `tolerance` pixels of the simplified polygon.
inline Contour simplify_contour(const Contour& contour, double tolerance = 0.5) {
  const auto& pts = contour.points;
  const std::size_t n = pts.size();
  if (n <= 3) return contour;
  std::size_t far = 0;
  double far_dist = -1.0;
  for (std::size_t i = 1; i < n; ++i) {
    const double dist = distance(pts[i], pts[0]);
    if (dist > far_dist) {
      far_dist = dist;
      far = i;
    }
  }
  std::vector<bool> keep(n, false);
  keep[0] = true;
  keep[far] = true;
  detail::douglas_peucker(pts, 0, far, tolerance, keep);
  detail::douglas_peucker(pts, far, n, tolerance, keep);
  Contour out;
  for (std::size_t i = 0; i < n; ++i)
    if (keep[i]) out.points.push_back(pts[i]);
  if (out.points.size() < 3) return contour;
  return out;
}

}  // namespace tdr
