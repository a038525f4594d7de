#pragma once

// Danger recognition: pairwise footprint distances and occupancy heat maps.

#include <algorithm>
#include <cmath>
#include <limits>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "tdr/error.hpp"
#include "tdr/geometry.hpp"
#include "tdr/kinematics.hpp"

namespace tdr {

struct PlaneSegment {
  PlanePoint a;
  PlanePoint b;
};

inline double point_edge_distance(const PlanePoint& p, const PlaneSegment& e) {
  return point_segment_distance(p, e.a, e.b);
}

/// True when the closed quadrangles share at least one point.
inline bool quads_touch(const Quadrangle& q1, const Quadrangle& q2) {
  for (int i = 0; i < 4; ++i) {
    for (int j = 0; j < 4; ++j) {
      if (segments_intersect(q1.corners[i], q1.corners[(i + 1) % 4], q2.corners[j], q2.corners[(j + 1) % 4])) {
        return true;
      }
    }
  }
  return point_in_polygon(q1.corners[0], q2.points()) || point_in_polygon(q2.corners[0], q1.points());
}

/// Minimum distance between two quadrangles. The closest pair of boundary
/// points always has a vertex on one side, so 32 vertex-edge candidates
/// suffice once contact has been ruled out.
inline double quad_distance(const Quadrangle& q1, const Quadrangle& q2) {
  if (quads_touch(q1, q2)) return 0.0;
  double best = std::numeric_limits<double>::infinity();
  for (int i = 0; i < 4; ++i) {
    const PlaneSegment e1{q1.corners[i], q1.corners[(i + 1) % 4]};
    const PlaneSegment e2{q2.corners[i], q2.corners[(i + 1) % 4]};
    for (int k = 0; k < 4; ++k) {
      best = std::min(best, point_edge_distance(q2.corners[k], e1));
      best = std::min(best, point_edge_distance(q1.corners[k], e2));
    }
  }
  return best;
}

struct ProximityAlert {
  long frame_no = 0;
  long track_a = 0;
  long track_b = 0;
  double distance = 0.0;   // meters
  double threshold = 0.0;  // meters
};

/// One alert per unordered pair closer than `threshold` meters; track_a < track_b.
inline std::vector<ProximityAlert> proximity_alerts(std::span<const std::pair<long, Quadrangle>> footprints,
                                                    double threshold, double lambda, long frame_no = 0) {
  if (!(threshold > 0.0)) throw Error(Errc::invalid_argument, "alert threshold must be positive");
  std::vector<ProximityAlert> out;
  for (std::size_t i = 0; i < footprints.size(); ++i) {
    for (std::size_t j = i + 1; j < footprints.size(); ++j) {
      const double d = lambda * quad_distance(footprints[i].second, footprints[j].second);
      if (d < threshold) {
        const long a = std::min(footprints[i].first, footprints[j].first);
        const long b = std::max(footprints[i].first, footprints[j].first);
        out.push_back({frame_no, a, b, d, threshold});
      }
    }
  }
  return out;
}

/// Axis-aligned raster over plane coordinates. Cell (i, j) spans
/// [origin.x + i*cell, origin.x + (i+1)*cell) x [origin.y + j*cell, ...).
struct GridSpec {
  PlanePoint origin;
  double cell = 0.1;
  int nx = 0;
  int ny = 0;

  PlanePoint cell_center(int i, int j) const noexcept {
    return {origin.x + (i + 0.5) * cell, origin.y + (j + 0.5) * cell};
  }
  std::size_t size() const noexcept { return static_cast<std::size_t>(nx) * static_cast<std::size_t>(ny); }
  friend bool operator==(const GridSpec&, const GridSpec&) = default;
};

struct HeatMap {
  GridSpec grid;
  std::vector<double> cells;  // row-major, index j * nx + i
  double t_offset = 0.0;
  long track_id = 0;

  double at(int i, int j) const { return cells[static_cast<std::size_t>(j) * grid.nx + i]; }
};

struct DangerMap {
  GridSpec grid;
  std::vector<double> cells;
  double t_offset = 0.0;

  double at(int i, int j) const { return cells[static_cast<std::size_t>(j) * grid.nx + i]; }
  double max() const { return cells.empty() ? 0.0 : *std::max_element(cells.begin(), cells.end()); }
};

namespace detail {

struct Bounds {
  double x0, y0, x1, y1;
};

inline Bounds footprint_bounds(const Quadrangle& q, double margin) {
  Bounds b{q.corners[0].x, q.corners[0].y, q.corners[0].x, q.corners[0].y};
  for (const auto& p : q.corners) {
    b.x0 = std::min(b.x0, p.x);
    b.y0 = std::min(b.y0, p.y);
    b.x1 = std::max(b.x1, p.x);
    b.y1 = std::max(b.y1, p.y);
  }
  return {b.x0 - margin, b.y0 - margin, b.x1 + margin, b.y1 + margin};
}

// Probability mass of N(0, sigma^2) over each cell-wide bin, truncated at 4 sigma.
inline std::vector<double> gaussian_bins(double sigma, double cell) {
  if (!(sigma > 0.0)) return {1.0};
  const int half = static_cast<int>(std::floor(4.0 * sigma / cell + 0.5));
  std::vector<double> w(2 * half + 1);
  const double scale = cell / (sigma * std::sqrt(2.0));
  double total = 0.0;
  for (int k = -half; k <= half; ++k) {
    const double v = 0.5 * (std::erf((k + 0.5) * scale) - std::erf((k - 0.5) * scale));
    w[k + half] = v;
    total += v;
  }
  for (auto& v : w) v /= total;
  return w;
}

// Fraction of the square [x0, x0 + h) x [y0, y0 + h) covered by `q`.
inline double cell_coverage(const Quadrangle& q, double x0, double y0, double h) {
  std::vector<PlanePoint> poly(q.corners.begin(), q.corners.end()), next;
  auto cut = [&](auto inside, auto cross_at) {
    next.clear();
    for (std::size_t i = 0; i < poly.size(); ++i) {
      const PlanePoint& a = poly[i];
      const PlanePoint& b = poly[(i + 1) % poly.size()];
      const bool ia = inside(a), ib = inside(b);
      if (ia) next.push_back(a);
      if (ia != ib) next.push_back(cross_at(a, b));
    }
    poly.swap(next);
  };
  auto at_x = [](double x) {
    return [x](const PlanePoint& a, const PlanePoint& b) {
      return PlanePoint{x, a.y + (b.y - a.y) * (x - a.x) / (b.x - a.x)};
    };
  };
  auto at_y = [](double y) {
    return [y](const PlanePoint& a, const PlanePoint& b) {
      return PlanePoint{a.x + (b.x - a.x) * (y - a.y) / (b.y - a.y), y};
    };
  };
  const double x1 = x0 + h, y1 = y0 + h;
  cut([&](const PlanePoint& p) { return p.x >= x0; }, at_x(x0));
  if (poly.size() < 3) return 0.0;
  cut([&](const PlanePoint& p) { return p.x <= x1; }, at_x(x1));
  if (poly.size() < 3) return 0.0;
  cut([&](const PlanePoint& p) { return p.y >= y0; }, at_y(y0));
  if (poly.size() < 3) return 0.0;
  cut([&](const PlanePoint& p) { return p.y <= y1; }, at_y(y1));
  if (poly.size() < 3) return 0.0;
  return std::min(1.0, std::abs(signed_area(std::span<const PlanePoint>(poly))) / (h * h));
}

}  // namespace detail

/// Grid on the lattice of multiples of `cell` that covers the footprint of
/// `snap` plus 4 sigma and one spare cell on every side.
inline GridSpec heatmap_window(const PredictionSnapshot& snap, double cell) {
  if (!(cell > 0.0)) throw Error(Errc::invalid_argument, "grid cell must be positive");
  const auto b = detail::footprint_bounds(snap.footprint, 4.0 * std::sqrt(snap.variance) + cell);
  const double i0 = std::floor(b.x0 / cell), j0 = std::floor(b.y0 / cell);
  const double i1 = std::ceil(b.x1 / cell), j1 = std::ceil(b.y1 / cell);
  return {{i0 * cell, j0 * cell}, cell, static_cast<int>(i1 - i0), static_cast<int>(j1 - j0)};
}

/// Smallest lattice grid holding every snapshot's window.
inline GridSpec grid_covering(std::span<const PredictionSnapshot> snaps, double cell) {
  if (snaps.empty()) return {{0.0, 0.0}, cell, 0, 0};
  GridSpec g = heatmap_window(snaps[0], cell);
  double x1 = g.origin.x + g.nx * cell, y1 = g.origin.y + g.ny * cell;
  for (const auto& s : snaps.subspan(1)) {
    const GridSpec w = heatmap_window(s, cell);
    g.origin.x = std::min(g.origin.x, w.origin.x);
    g.origin.y = std::min(g.origin.y, w.origin.y);
    x1 = std::max(x1, w.origin.x + w.nx * cell);
    y1 = std::max(y1, w.origin.y + w.ny * cell);
  }
  g.nx = static_cast<int>(std::lround((x1 - g.origin.x) / cell));
  g.ny = static_cast<int>(std::lround((y1 - g.origin.y) / cell));
  return g;
}

/// Probability that each cell centre is covered by the footprint when its
/// centre is drawn from N(center, variance * I): the footprint convolved with
/// a binned Gaussian. Zero variance gives the cell-centre indicator.
inline HeatMap vehicle_heatmap(const PredictionSnapshot& snap, const GridSpec& grid, long track_id = 0) {
  if (!(grid.cell > 0.0) || grid.nx <= 0 || grid.ny <= 0) throw Error(Errc::invalid_argument, "empty grid");
  const double sigma = std::sqrt(std::max(0.0, snap.variance));
  const auto need = detail::footprint_bounds(snap.footprint, 4.0 * sigma);
  const double tol = 1e-9 * grid.cell;
  if (need.x0 < grid.origin.x - tol || need.y0 < grid.origin.y - tol ||
      need.x1 > grid.origin.x + grid.nx * grid.cell + tol || need.y1 > grid.origin.y + grid.ny * grid.cell + tol) {
    throw Error(Errc::grid_too_small, "grid does not cover the footprint plus 4 sigma");
  }

  HeatMap hm{grid, std::vector<double>(grid.size(), 0.0), snap.t_offset, track_id};
  const auto bb = detail::footprint_bounds(snap.footprint, 0.0);
  if (!(sigma > 0.0)) {
    const int i_lo = std::max(0, static_cast<int>(std::floor((bb.x0 - grid.origin.x) / grid.cell)) - 1);
    const int i_hi = std::min(grid.nx - 1, static_cast<int>(std::ceil((bb.x1 - grid.origin.x) / grid.cell)) + 1);
    const int j_lo = std::max(0, static_cast<int>(std::floor((bb.y0 - grid.origin.y) / grid.cell)) - 1);
    const int j_hi = std::min(grid.ny - 1, static_cast<int>(std::ceil((bb.y1 - grid.origin.y) / grid.cell)) + 1);
    for (int j = j_lo; j <= j_hi; ++j)
      for (int i = i_lo; i <= i_hi; ++i)
        if (point_in_polygon(grid.cell_center(i, j), snap.footprint.points()))
          hm.cells[static_cast<std::size_t>(j) * grid.nx + i] = 1.0;
    return hm;
  }

  // Exact footprint coverage on a sub-grid fine enough that mass placement
  // inside a sub-cell is negligible against sigma, convolved with the binned
  // Gaussian and read back at the cell centres. An odd factor keeps every
  // cell centre on a sub-cell centre.
  int k = static_cast<int>(std::ceil(4.0 * grid.cell / sigma));
  k = std::clamp(k | 1, 1, 25);
  const double h = grid.cell / k;
  const int fnx = grid.nx * k, fny = grid.ny * k;
  const int fi0 = std::max(0, static_cast<int>(std::floor((bb.x0 - grid.origin.x) / h)));
  const int fi1 = std::min(fnx - 1, static_cast<int>(std::floor((bb.x1 - grid.origin.x) / h)));
  const int fj0 = std::max(0, static_cast<int>(std::floor((bb.y0 - grid.origin.y) / h)));
  const int fj1 = std::min(fny - 1, static_cast<int>(std::floor((bb.y1 - grid.origin.y) / h)));
  if (fi1 < fi0 || fj1 < fj0) return hm;
  const int cw = fi1 - fi0 + 1, ch = fj1 - fj0 + 1;
  std::vector<double> cover(static_cast<std::size_t>(cw) * ch);
  for (int fj = fj0; fj <= fj1; ++fj)
    for (int fi = fi0; fi <= fi1; ++fi)
      cover[static_cast<std::size_t>(fj - fj0) * cw + (fi - fi0)] =
          detail::cell_coverage(snap.footprint, grid.origin.x + fi * h, grid.origin.y + fj * h, h);

  const auto w = detail::gaussian_bins(sigma, h);
  const int half = static_cast<int>(w.size() / 2);
  // Horizontal pass evaluated only at cell-centre columns.
  std::vector<double> tmp(static_cast<std::size_t>(ch) * grid.nx, 0.0);
  for (int r = 0; r < ch; ++r) {
    for (int i = 0; i < grid.nx; ++i) {
      const int ci = i * k + k / 2;
      const int lo = std::max(fi0, ci - half), hi = std::min(fi1, ci + half);
      double acc = 0.0;
      for (int s = lo; s <= hi; ++s) acc += w[ci - s + half] * cover[static_cast<std::size_t>(r) * cw + (s - fi0)];
      tmp[static_cast<std::size_t>(r) * grid.nx + i] = acc;
    }
  }
  for (int j = 0; j < grid.ny; ++j) {
    const int cj = j * k + k / 2;
    const int lo = std::max(fj0, cj - half), hi = std::min(fj1, cj + half);
    if (lo > hi) continue;
    for (int i = 0; i < grid.nx; ++i) {
      double acc = 0.0;
      for (int s = lo; s <= hi; ++s) acc += w[cj - s + half] * tmp[static_cast<std::size_t>(s - fj0) * grid.nx + i];
      hm.cells[static_cast<std::size_t>(j) * grid.nx + i] = std::clamp(acc, 0.0, 1.0);
    }
  }
  return hm;
}

/// Per cell, the probability that at least two vehicles are present, with
/// independent occupancies. Heat maps may be windows of one shared lattice;
/// the result spans their union.
inline DangerMap danger_map(std::span<const HeatMap> maps) {
  if (maps.empty()) throw Error(Errc::invalid_argument, "danger map needs at least one heat map");
  const GridSpec& ref = maps[0].grid;
  const double cell = ref.cell;
  std::vector<std::pair<long, long>> offsets;
  long i_min = 0, j_min = 0, i_max = ref.nx, j_max = ref.ny;
  for (const auto& m : maps) {
    if (m.grid.cell != cell || m.t_offset != maps[0].t_offset) {
      throw Error(Errc::grid_mismatch, "heat maps differ in cell size or time offset");
    }
    const double fi = (m.grid.origin.x - ref.origin.x) / cell;
    const double fj = (m.grid.origin.y - ref.origin.y) / cell;
    const long oi = std::lround(fi), oj = std::lround(fj);
    if (std::abs(fi - oi) > 1e-6 || std::abs(fj - oj) > 1e-6) {
      throw Error(Errc::grid_mismatch, "heat map origins are not on a common lattice");
    }
    if (m.cells.size() != m.grid.size()) throw Error(Errc::grid_mismatch, "heat map size does not match its grid");
    offsets.emplace_back(oi, oj);
    i_min = std::min(i_min, oi);
    j_min = std::min(j_min, oj);
    i_max = std::max(i_max, oi + m.grid.nx);
    j_max = std::max(j_max, oj + m.grid.ny);
  }
  DangerMap out;
  out.t_offset = maps[0].t_offset;
  out.grid = {{ref.origin.x + i_min * cell, ref.origin.y + j_min * cell},
              cell,
              static_cast<int>(i_max - i_min),
              static_cast<int>(j_max - j_min)};
  const std::size_t n = out.grid.size();
  std::vector<double> none(n, 1.0), one(n, 0.0);
  out.cells.assign(n, 0.0);
  for (std::size_t k = 0; k < maps.size(); ++k) {
    const auto& m = maps[k];
    const long di = offsets[k].first - i_min, dj = offsets[k].second - j_min;
    for (int j = 0; j < m.grid.ny; ++j) {
      for (int i = 0; i < m.grid.nx; ++i) {
        const double p = m.at(i, j);
        if (p == 0.0) continue;
        const std::size_t idx = static_cast<std::size_t>(j + dj) * out.grid.nx + static_cast<std::size_t>(i + di);
        out.cells[idx] = std::min(1.0, out.cells[idx] + one[idx] * p);
        one[idx] = one[idx] * (1.0 - p) + none[idx] * p;
        none[idx] *= 1.0 - p;
      }
    }
  }
  return out;
}

}  // namespace tdr
