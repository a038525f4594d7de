#pragma once

// 3D bounding boxes from vehicle outlines and the three vanishing points.
//
// Vertex layout (edge directions):
//   V edges: AB, DC, EF, HG
//   U edges: AD, BC, FG, EH
//   W edges: AE, BF, DH, CG
// ABCD and EFGH are the two faces parallel to the road.

#include <algorithm>
#include <array>
#include <cmath>
#include <numbers>
#include <string>
#include <vector>

#include "tdr/calib.hpp"
#include "tdr/contour.hpp"
#include "tdr/error.hpp"
#include "tdr/geometry.hpp"

namespace tdr {

enum class VanishingId { u = 0, v = 1, w = 2 };

/// The two extreme lines through a vanishing point that bound the outline.
/// Directions are unit vectors pointing from the vanishing point toward the
/// outline; the outline lies at non-negative cross product from l_min and
/// non-positive cross product from l_max.
struct TangentPair {
  VanishingId anchor = VanishingId::u;
  ImagePoint vp;
  Line2 l_min;
  Line2 l_max;
  ImagePoint touch_min;  // outline point on l_min
  ImagePoint touch_max;  // outline point on l_max
  double tilt_min = 0.0;  // in [0, pi)
  double tilt_max = 0.0;  // in [0, pi)
};

/// How the eight vertices were assigned.
enum class BoxLabeling {
  tilt_order,  // tangent min/max labels already match the silhouette
  relabeled,   // three visible faces, labels re-paired along the silhouette
  two_face,    // two visible faces; interior vertices share an edge
};

struct Box3D {
  std::array<ImagePoint, 8> vertices{};  // A..H
  BoxLabeling labeling = BoxLabeling::tilt_order;
  double closure_residual = 0.0;  // pixels; over-determined vertex miss distance
  ImagePoint u, v, w;

  const ImagePoint& A() const { return vertices[0]; }
  const ImagePoint& B() const { return vertices[1]; }
  const ImagePoint& C() const { return vertices[2]; }
  const ImagePoint& D() const { return vertices[3]; }
  const ImagePoint& E() const { return vertices[4]; }
  const ImagePoint& F() const { return vertices[5]; }
  const ImagePoint& G() const { return vertices[6]; }
  const ImagePoint& H() const { return vertices[7]; }
};

enum class BoxVertex { A = 0, B, C, D, E, F, G, H };

/// Edges of the box grouped by the vanishing point they converge to.
inline constexpr std::array<std::array<std::pair<int, int>, 4>, 3> kBoxEdges{{
    {{{0, 3}, {1, 2}, {5, 6}, {4, 7}}},  // U: AD, BC, FG, EH
    {{{0, 1}, {3, 2}, {4, 5}, {7, 6}}},  // V: AB, DC, EF, HG
    {{{0, 4}, {1, 5}, {3, 7}, {2, 6}}},  // W: AE, BF, DH, CG
}};

inline TangentPair tangent_lines(const Contour& contour, const ImagePoint& vp, VanishingId anchor = VanishingId::u) {
  const auto& pts = contour.points;
  if (pts.empty()) throw Error(Errc::invalid_argument, "empty contour");
  constexpr double two_pi = 2.0 * std::numbers::pi;

  std::vector<std::pair<double, std::size_t>> angles;
  angles.reserve(pts.size());
  for (std::size_t i = 0; i < pts.size(); ++i) {
    const ImagePoint d = pts[i] - vp;
    if (d.x == 0.0 && d.y == 0.0) throw Error(Errc::vanishing_point_inside_hull, "vanishing point lies on the contour");
    angles.emplace_back(std::atan2(d.y, d.x), i);
  }
  std::sort(angles.begin(), angles.end());
  // The outline occupies the complement of the widest angular gap.
  std::size_t gap_end = 0;
  double widest = angles.front().first + two_pi - angles.back().first;
  for (std::size_t i = 1; i < angles.size(); ++i) {
    const double gap = angles[i].first - angles[i - 1].first;
    if (gap > widest) {
      widest = gap;
      gap_end = i;
    }
  }
  const double width = two_pi - widest;
  if (!(width < std::numbers::pi - 1e-12)) {
    throw Error(Errc::vanishing_point_inside_hull, "vanishing point is not outside the contour hull");
  }
  const auto& lo = angles[gap_end];
  const auto& hi = angles[(gap_end + angles.size() - 1) % angles.size()];

  auto tilt = [](double a) {
    double t = std::fmod(a, std::numbers::pi);
    if (t < 0.0) t += std::numbers::pi;
    return t;
  };
  TangentPair tp;
  tp.anchor = anchor;
  tp.vp = vp;
  tp.l_min = {vp, {std::cos(lo.first), std::sin(lo.first)}};
  tp.l_max = {vp, {std::cos(hi.first), std::sin(hi.first)}};
  tp.touch_min = pts[lo.second];
  tp.touch_max = pts[hi.second];
  tp.tilt_min = tilt(lo.first);
  tp.tilt_max = tilt(hi.first);
  return tp;
}

namespace detail {

struct HalfPlane {
  Line2 line;
  double side;  // keep points with side * cross(direction, q - point) >= 0
};

struct LabeledPolygon {
  std::vector<ImagePoint> vertices;
  std::vector<int> edge_labels;  // label of edge i -> i+1; -1 for the initial box
};

inline LabeledPolygon clip(const LabeledPolygon& poly, const HalfPlane& hp, int label) {
  LabeledPolygon out;
  const std::size_t n = poly.vertices.size();
  auto value = [&](const ImagePoint& q) { return hp.side * cross(hp.line.direction, q - hp.line.point); };
  for (std::size_t i = 0; i < n; ++i) {
    const ImagePoint& a = poly.vertices[i];
    const ImagePoint& b = poly.vertices[(i + 1) % n];
    const int la = poly.edge_labels[i];
    const double va = value(a), vb = value(b);
    if (va >= 0.0) {
      out.vertices.push_back(a);
      out.edge_labels.push_back(la);
      if (vb < 0.0) {
        out.vertices.push_back(a + (b - a) * (va / (va - vb)));
        out.edge_labels.push_back(label);
      }
    } else if (vb >= 0.0) {
      out.vertices.push_back(a + (b - a) * (va / (va - vb)));
      out.edge_labels.push_back(la);
    }
  }
  return out;
}

inline ImagePoint meet(const Line2& a, const Line2& b) {
  const auto p = intersect(a, b);
  if (!p) throw Error(Errc::degenerate_intersection, "box edge lines are parallel");
  return *p;
}

inline Line2 through(const ImagePoint& p, const ImagePoint& q) {
  if (p == q) throw Error(Errc::degenerate_intersection, "box vertex coincides with a vanishing point");
  return {p, q - p};
}

// Cyclic order of the six tangent lines along the boundary of the region they
// jointly bound. Line ids: 2*vp + (0 for min, 1 for max), vp in {u, v, w}.
inline std::vector<int> silhouette_order(const std::array<const TangentPair*, 3>& pairs) {
  double extent = 0.0;
  ImagePoint centroid{};
  for (const auto* tp : pairs) {
    centroid += (tp->touch_min + tp->touch_max) * (1.0 / 6.0);
  }
  for (const auto* tp : pairs) {
    extent = std::max({extent, distance(tp->touch_min, centroid), distance(tp->touch_max, centroid)});
  }
  const double big = 1e4 * (extent + std::abs(centroid.x) + std::abs(centroid.y) + 1.0);
  LabeledPolygon poly;
  poly.vertices = {centroid + ImagePoint{-big, -big}, centroid + ImagePoint{big, -big},
                   centroid + ImagePoint{big, big}, centroid + ImagePoint{-big, big}};
  poly.edge_labels = {-1, -1, -1, -1};
  for (int k = 0; k < 3; ++k) {
    const TangentPair& tp = *pairs[k];
    poly = clip(poly, {tp.l_min, 1.0}, 2 * k);
    poly = clip(poly, {tp.l_max, -1.0}, 2 * k + 1);
  }
  const double eps = 1e-9 * (extent + 1.0);
  std::vector<int> labels;
  const std::size_t n = poly.vertices.size();
  for (std::size_t i = 0; i < n; ++i) {
    if (distance(poly.vertices[i], poly.vertices[(i + 1) % n]) <= eps) continue;
    if (!labels.empty() && labels.back() == poly.edge_labels[i]) continue;
    labels.push_back(poly.edge_labels[i]);
  }
  while (labels.size() > 1 && labels.front() == labels.back()) labels.pop_back();
  std::vector<int> sorted = labels;
  std::sort(sorted.begin(), sorted.end());
  if (sorted != std::vector<int>{0, 1, 2, 3, 4, 5}) {
    throw Error(Errc::degenerate_intersection, "tangent lines do not bound a hexagonal silhouette");
  }
  return labels;
}

}  // namespace detail

/// Builds the box from the tangent pairs of u, v and w.
inline Box3D build_box(const TangentPair& tu, const TangentPair& tv, const TangentPair& tw) {
  using detail::meet;
  using detail::through;
  const std::array<const TangentPair*, 3> pairs{&tu, &tv, &tw};
  auto line_of = [&](int id) -> const Line2& {
    const TangentPair& tp = *pairs[id / 2];
    return id % 2 == 0 ? tp.l_min : tp.l_max;
  };
  const ImagePoint u = tu.vp, v = tv.vp, w = tw.vp;
  const ImagePoint vps[3] = {u, v, w};

  std::vector<int> seq = detail::silhouette_order(pairs);
  // Start at l_{V,min} and walk toward a W line when possible.
  std::rotate(seq.begin(), std::find(seq.begin(), seq.end(), 2), seq.end());
  if (seq[1] / 2 != 2) std::reverse(seq.begin() + 1, seq.end());

  Box3D box;
  box.u = u;
  box.v = v;
  box.w = w;
  const bool alternating = seq[0] / 2 == 1 && seq[1] / 2 == 2 && seq[2] / 2 == 0 && seq[3] / 2 == 1 &&
                           seq[4] / 2 == 2 && seq[5] / 2 == 0;
  if (alternating) {
    box.labeling = seq == std::vector<int>{2, 5, 0, 3, 4, 1} ? BoxLabeling::tilt_order : BoxLabeling::relabeled;
    const Line2& v_min = line_of(seq[0]);
    const Line2& w_max = line_of(seq[1]);
    const Line2& u_min = line_of(seq[2]);
    const Line2& v_max = line_of(seq[3]);
    const Line2& w_min = line_of(seq[4]);
    const Line2& u_max = line_of(seq[5]);
    const ImagePoint A = meet(u_max, v_min);
    const ImagePoint B = meet(v_min, w_max);
    const ImagePoint D = meet(u_max, w_min);
    const ImagePoint F = meet(u_min, w_max);
    const ImagePoint G = meet(v_max, u_min);
    const ImagePoint H = meet(v_max, w_min);
    const Line2 aw = through(A, w);
    const ImagePoint e_f = meet(through(F, v), aw);
    const ImagePoint e_h = meet(through(H, u), aw);
    const ImagePoint E = distance(A, e_f) >= distance(A, e_h) ? e_f : e_h;
    const ImagePoint C = meet(through(B, u), through(D, v));
    box.vertices = {A, B, C, D, E, F, G, H};
    box.closure_residual = line_distance(C, through(G, w));
    return box;
  }

  // Two visible faces: exactly one pair of opposite silhouette sides shares a
  // vanishing point (X); the other two alternate as X Y Z X Z Y.
  int x0 = -1;
  for (int i = 0; i < 3; ++i) {
    if (seq[i] / 2 == seq[i + 3] / 2) {
      if (x0 >= 0) throw Error(Errc::degenerate_intersection, "ambiguous silhouette structure");
      x0 = i;
    }
  }
  if (x0 < 0) throw Error(Errc::degenerate_intersection, "silhouette sides do not pair up");
  std::rotate(seq.begin(), seq.begin() + x0, seq.end());
  if (seq[1] / 2 != seq[5] / 2) {
    // X0 must be the side flanked by the same vanishing point on both ends.
    std::rotate(seq.begin(), seq.begin() + 3, seq.end());
  }
  if (seq[1] / 2 != seq[5] / 2 || seq[2] / 2 != seq[4] / 2) {
    throw Error(Errc::degenerate_intersection, "silhouette sides do not pair up");
  }
  const int xd = seq[0] / 2, yd = seq[1] / 2, zd = seq[2] / 2;
  std::array<ImagePoint, 8> p{};
  p[0] = meet(line_of(seq[0]), line_of(seq[1]));  // h01
  p[1] = meet(line_of(seq[1]), line_of(seq[2]));  // h12
  p[2] = meet(line_of(seq[2]), line_of(seq[3]));  // h23
  p[3] = meet(line_of(seq[3]), line_of(seq[4]));  // h34
  p[4] = meet(line_of(seq[4]), line_of(seq[5]));  // h45
  p[5] = meet(line_of(seq[5]), line_of(seq[0]));  // h50
  p[6] = meet(through(p[2], vps[yd]), through(p[0], vps[zd]));  // interior, shares edges with h23, h01
  p[7] = meet(through(p[3], vps[yd]), through(p[5], vps[zd]));  // interior, shares edges with h34, h50
  // Neighbour of each vertex along X, Y and Z.
  std::array<std::array<int, 3>, 8> nb{};
  auto link = [&](int a, int b, int dir) {
    nb[a][dir] = b;
    nb[b][dir] = a;
  };
  link(5, 0, 0), link(4, 1, 0), link(3, 2, 0), link(7, 6, 0);
  link(0, 1, 1), link(5, 4, 1), link(6, 2, 1), link(7, 3, 1);
  link(1, 2, 2), link(4, 3, 2), link(0, 6, 2), link(5, 7, 2);
  int slot_of[3];
  slot_of[xd] = 0;
  slot_of[yd] = 1;
  slot_of[zd] = 2;
  auto step = [&](int from, int vp_id) { return nb[from][slot_of[vp_id]]; };
  const int a = 0;
  const int b = step(a, 1);
  const int d = step(a, 0);
  const int e = step(a, 2);
  const int c = step(b, 0);
  const int f = step(b, 2);
  const int h = step(d, 2);
  const int g = step(c, 2);
  box.labeling = BoxLabeling::two_face;
  box.vertices = {p[a], p[b], p[c], p[d], p[e], p[f], p[g], p[h]};
  box.closure_residual = line_distance(p[6], through(p[7], vps[xd]));
  return box;
}

/// Indices (into Box3D::vertices) of the face resting on the road, in cyclic order.
inline std::array<int, 4> bottom_face(const Box3D& box) {
  constexpr std::array<int, 4> abcd{0, 1, 2, 3};
  constexpr std::array<int, 4> hgfe{7, 6, 5, 4};
  if (box.labeling == BoxLabeling::tilt_order) {
    const ImagePoint da = box.A() - box.D();
    if (std::abs(da.x) < 1e-9 || da.y / da.x >= 0.0) return abcd;
    return hgfe;
  }
  // Along a vertical edge the lower end lies toward w whenever w and the box
  // are on the same side of the horizon u-v.
  ImagePoint centroid{};
  for (const auto& p : box.vertices) centroid += p * 0.125;
  const ImagePoint horizon = box.v - box.u;
  const bool same_side = cross(horizon, box.w - box.u) * cross(horizon, centroid - box.u) > 0.0;
  const bool a_nearer = distance(box.A(), box.w) < distance(box.E(), box.w);
  return a_nearer == same_side ? abcd : hgfe;
}

/// Road-plane footprint of the box.
inline Quadrangle bottom_quadrangle(const Box3D& box, const CameraCalibration& cal, const PlaneBasis& basis) {
  const auto face = bottom_face(box);
  Quadrangle q;
  for (int i = 0; i < 4; ++i) q.corners[i] = image_to_plane(box.vertices[face[i]], cal, basis);
  return q;
}

/// Full outline-to-box path with the vanishing points of `cal`.
inline Box3D box_from_contour(const Contour& contour, const CameraCalibration& cal) {
  const Contour simple = simplify_contour(contour);
  return build_box(tangent_lines(simple, cal.u, VanishingId::u), tangent_lines(simple, cal.v, VanishingId::v),
                   tangent_lines(simple, cal.w, VanishingId::w));
}

}  // namespace tdr
