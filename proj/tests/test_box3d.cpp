#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <numbers>
#include <random>
#include <set>
#include <utility>
#include <vector>

#include "support.hpp"
#include "tdr/assignment.hpp"
#include "tdr/box3d.hpp"
#include "tdr/contour.hpp"
#include "tdr/simulate.hpp"

using namespace tdr;
using tdr::testkit::uniform;

namespace {

BinaryMask mask_from(const std::vector<std::string>& rows) {
  BinaryMask m(static_cast<int>(rows[0].size()), static_cast<int>(rows.size()));
  for (int y = 0; y < m.height; ++y)
    for (int x = 0; x < m.width; ++x)
      if (rows[y][x] == '#') m.set(x, y);
  return m;
}

std::set<std::pair<int, int>> as_set(const Contour& c) {
  std::set<std::pair<int, int>> s;
  for (const auto& p : c.points) s.insert({static_cast<int>(p.x), static_cast<int>(p.y)});
  return s;
}

// Foreground pixels with a background (or off-image) 4-neighbour.
std::set<std::pair<int, int>> border_pixels(const BinaryMask& m) {
  std::set<std::pair<int, int>> s;
  for (int y = 0; y < m.height; ++y)
    for (int x = 0; x < m.width; ++x)
      if (m.at(x, y) && (!m.at(x + 1, y) || !m.at(x - 1, y) || !m.at(x, y + 1) || !m.at(x, y - 1))) s.insert({x, y});
  return s;
}

struct Vehicle {
  SimCamera cam;
  std::array<ImagePoint, 8> corners;  // true projections, bottom then top
  double length, width;
};

// Noiseless vehicles fully inside the image for a spread of camera poses.
std::vector<Vehicle> sample_vehicles(std::uint64_t seed, int cameras, int per_camera) {
  std::mt19937_64 rng(seed);
  std::vector<Vehicle> out;
  for (int c = 0; c < cameras; ++c) {
    const CameraPose pose = testkit::random_pose(rng);
    const SimCamera cam = make_camera(pose);
    int got = 0;
    for (int attempt = 0; attempt < 2000 && got < per_camera; ++attempt) {
      const double L = uniform(rng, 3.5, 12.0), W = uniform(rng, 1.6, 2.5), H = uniform(rng, 1.3, 3.8);
      const auto world = vehicle_corners(cam, uniform(rng, -8, 8), uniform(rng, -10, 40), L, W, H);
      Vehicle v{cam, {}, L, W};
      bool ok = true;
      for (int k = 0; k < 8 && ok; ++k) {
        try {
          v.corners[k] = forward_project(world[k], cam.calib);
        } catch (const Error&) {
          ok = false;
        }
        ok = ok && v.corners[k].x > 0 && v.corners[k].y > 0 && v.corners[k].x < pose.width &&
             v.corners[k].y < pose.height;
      }
      if (!ok) continue;
      out.push_back(v);
      ++got;
    }
  }
  return out;
}

Contour silhouette(const Vehicle& v) {
  return Contour{convex_hull(std::vector<ImagePoint>(v.corners.begin(), v.corners.end()))};
}

double angle_to(const ImagePoint& from, const ImagePoint& dir_point, const ImagePoint& vp) {
  const ImagePoint a = dir_point - from, b = vp - from;
  return std::abs(std::atan2(cross(a, b), dot(a, b)));
}

}  // namespace

TEST(ExtractContour, FilledSquareBorder) {
  const BinaryMask m = mask_from({".....", ".###.", ".###.", ".###.", "....."});
  const Contour c = extract_contour(m);
  EXPECT_EQ(c.points.size(), 8u);
  const std::set<std::pair<int, int>> expected{{1, 1}, {2, 1}, {3, 1}, {3, 2}, {3, 3}, {2, 3}, {1, 3}, {1, 2}};
  EXPECT_EQ(as_set(c), expected);
  EXPECT_GT(signed_area(c.view()), 0.0);
}

TEST(ExtractContour, EmptyMaskFails) {
  BinaryMask m(4, 4);
  try {
    extract_contour(m);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), Errc::empty_mask);
  }
}

TEST(ExtractContour, KeepsLargestComponent) {
  const BinaryMask m = mask_from({"###....", "###....", "###..##", ".....##"});
  const Contour c = extract_contour(m);
  for (const auto& p : c.points) EXPECT_LT(p.x, 3.0);
  EXPECT_EQ(as_set(c).size(), 8u);
}

TEST(ExtractContour, SinglePixel) {
  const BinaryMask m = mask_from({"...", ".#.", "..."});
  const Contour c = extract_contour(m);
  ASSERT_EQ(c.points.size(), 1u);
  EXPECT_EQ(c.points[0], (ImagePoint{1, 1}));
}

TEST(ExtractContour, VisitsEveryBorderPixelOfRandomBlobs) {
  std::mt19937_64 rng(21);
  for (int trial = 0; trial < 50; ++trial) {
    BinaryMask m(60, 50);
    // Convex polygon blob.
    std::vector<ImagePoint> pts;
    for (int k = 0; k < 7; ++k) pts.push_back({uniform(rng, 5, 55), uniform(rng, 5, 45)});
    const auto hull = convex_hull(pts);
    for (int y = 0; y < m.height; ++y)
      for (int x = 0; x < m.width; ++x)
        if (point_in_polygon(ImagePoint{double(x), double(y)}, std::span<const ImagePoint>(hull))) m.set(x, y);
    if (border_pixels(m).size() < 8) continue;
    const Contour c = extract_contour(m);
    EXPECT_EQ(as_set(c), border_pixels(m));
    EXPECT_GT(signed_area(c.view()), 0.0);
    for (std::size_t i = 0; i < c.points.size(); ++i) {
      const ImagePoint d = c.points[(i + 1) % c.points.size()] - c.points[i];
      EXPECT_LE(std::max(std::abs(d.x), std::abs(d.y)), 1.0);
    }
  }
}

TEST(SimplifyContour, RemovedPointsStayWithinTolerance) {
  std::mt19937_64 rng(22);
  for (int trial = 0; trial < 50; ++trial) {
    Contour c;
    const int n = 60;
    for (int k = 0; k < n; ++k) {
      const double a = 2 * std::numbers::pi * k / n;
      const double r = 20 + uniform(rng, -1.5, 1.5);
      c.points.push_back({50 + r * std::cos(a), 50 + r * std::sin(a)});
    }
    const Contour s = simplify_contour(c, 0.5);
    EXPECT_LE(s.points.size(), c.points.size());
    for (const auto& p : c.points) {
      double best = 1e9;
      for (std::size_t i = 0; i < s.points.size(); ++i)
        best = std::min(best, point_segment_distance(p, s.points[i], s.points[(i + 1) % s.points.size()]));
      EXPECT_LE(best, 0.5 + 1e-9);
    }
  }
}

TEST(SimplifyContour, MergesCollinearPoints) {
  Contour c{{{0, 0}, {1, 0}, {2, 0}, {3, 0}, {3, 1}, {3, 2}, {2, 2}, {1, 2}, {0, 2}, {0, 1}}};
  const Contour s = simplify_contour(c);
  EXPECT_EQ(s.points.size(), 4u);
}

TEST(TangentLines, UnitSquareFarAway) {
  const Contour sq{{{0, 0}, {1, 0}, {1, 1}, {0, 1}}};
  const ImagePoint vp{1e6, 0.5};
  const TangentPair tp = tangent_lines(sq, vp);
  // Brute force over the corners: extreme angles seen from the vanishing point,
  // measured in [0, 2pi) which does not wrap for this configuration.
  auto angle = [](const ImagePoint& d) {
    const double a = std::atan2(d.y, d.x);
    return a < 0 ? a + 2 * std::numbers::pi : a;
  };
  double lo = 1e9, hi = -1e9;
  for (const auto& p : sq.points) {
    lo = std::min(lo, angle(p - vp));
    hi = std::max(hi, angle(p - vp));
  }
  EXPECT_NEAR(angle(tp.l_min.direction), lo, 1e-12);
  EXPECT_NEAR(angle(tp.l_max.direction), hi, 1e-12);
  EXPECT_NEAR(line_distance({0, 1}, tp.l_min), 0.0, 1e-6);
  EXPECT_NEAR(line_distance({0, 0}, tp.l_max), 0.0, 1e-6);
  EXPECT_EQ(tp.touch_min.y, 1.0);
  EXPECT_EQ(tp.touch_max.y, 0.0);
}

TEST(TangentLines, VanishingPointInsideFails) {
  const Contour sq{{{0, 0}, {1, 0}, {1, 1}, {0, 1}}};
  for (const ImagePoint vp : {ImagePoint{0.5, 0.5}, ImagePoint{0.5, 0.0}, ImagePoint{1, 1}}) {
    try {
      tangent_lines(sq, vp);
      FAIL();
    } catch (const Error& e) {
      EXPECT_EQ(e.code(), Errc::vanishing_point_inside_hull);
    }
  }
}

TEST(TangentLines, WedgeContainsRandomContours) {
  std::mt19937_64 rng(23);
  for (int trial = 0; trial < 500; ++trial) {
    Contour c;
    for (int k = 0; k < 12; ++k) c.points.push_back({uniform(rng, 0, 100), uniform(rng, 0, 60)});
    const double a = uniform(rng, 0, 2 * std::numbers::pi), r = uniform(rng, 150, 1e5);
    const ImagePoint vp = ImagePoint{50, 30} + ImagePoint{std::cos(a), std::sin(a)} * r;
    const TangentPair tp = tangent_lines(c, vp);
    double on_min = 1e9, on_max = 1e9;
    for (const auto& p : c.points) {
      EXPECT_GE(cross(tp.l_min.direction, p - vp), -1e-9 * distance(p, vp));
      EXPECT_LE(cross(tp.l_max.direction, p - vp), 1e-9 * distance(p, vp));
      on_min = std::min(on_min, line_distance(p, tp.l_min));
      on_max = std::min(on_max, line_distance(p, tp.l_max));
    }
    EXPECT_LE(on_min, 1e-9 * r);
    EXPECT_LE(on_max, 1e-9 * r);
    EXPECT_GE(tp.tilt_min, 0.0);
    EXPECT_LT(tp.tilt_min, std::numbers::pi);
    EXPECT_GE(tp.tilt_max, 0.0);
    EXPECT_LT(tp.tilt_max, std::numbers::pi);
  }
}

TEST(BuildBox, RecoversProjectedCuboidCorners) {
  const auto vehicles = sample_vehicles(31, 12, 40);
  ASSERT_GE(vehicles.size(), 400u);
  for (const auto& v : vehicles) {
    const Box3D box = box_from_contour(silhouette(v), v.cam.calib);
    double diag = 0.0;
    for (const auto& a : v.corners)
      for (const auto& b : v.corners) diag = std::max(diag, distance(a, b));
    std::vector<std::vector<double>> cost(8, std::vector<double>(8));
    for (int i = 0; i < 8; ++i)
      for (int j = 0; j < 8; ++j) cost[i][j] = distance(box.vertices[i], v.corners[j]);
    const auto match = solve_assignment(cost);
    for (int i = 0; i < 8; ++i) EXPECT_LT(cost[i][match[i]], 0.02 * diag);
  }
}

TEST(BuildBox, EdgesConvergeToTheirVanishingPoints) {
  const auto vehicles = sample_vehicles(32, 8, 40);
  for (const auto& v : vehicles) {
    const Box3D box = box_from_contour(silhouette(v), v.cam.calib);
    const ImagePoint vps[3] = {v.cam.calib.u, v.cam.calib.v, v.cam.calib.w};
    for (int g = 0; g < 3; ++g) {
      for (const auto& [a, b] : kBoxEdges[g]) {
        const ImagePoint pa = box.vertices[a], pb = box.vertices[b];
        const double angle = std::min(angle_to(pa, pb, vps[g]), std::numbers::pi - angle_to(pa, pb, vps[g]));
        EXPECT_LT(angle, 1e-6);
      }
    }
  }
}

TEST(BuildBox, SilhouetteContainsContour) {
  const auto vehicles = sample_vehicles(33, 8, 40);
  for (const auto& v : vehicles) {
    const Contour c = silhouette(v);
    const Box3D box = box_from_contour(c, v.cam.calib);
    const auto hull = convex_hull(std::vector<ImagePoint>(box.vertices.begin(), box.vertices.end()));
    for (const auto& p : c.points) {
      if (point_in_polygon(p, std::span<const ImagePoint>(hull))) continue;
      double best = 1e9;
      for (std::size_t i = 0; i < hull.size(); ++i)
        best = std::min(best, point_segment_distance(p, hull[i], hull[(i + 1) % hull.size()]));
      EXPECT_LE(best, 1.0);
    }
  }
}

TEST(BuildBox, CollinearContourIsDegenerate) {
  const Contour c{{{100, 100}, {150, 120}, {200, 140}, {250, 160}}};
  const CameraCalibration cal = derive_camera({900, -300}, {4000, 400}, {960, 540});
  try {
    build_box(tangent_lines(c, cal.u), tangent_lines(c, cal.v), tangent_lines(c, cal.w));
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), Errc::degenerate_intersection);
  }
}

TEST(BuildBox, Deterministic) {
  const auto vehicles = sample_vehicles(34, 2, 10);
  for (const auto& v : vehicles) {
    const Box3D a = box_from_contour(silhouette(v), v.cam.calib);
    const Box3D b = box_from_contour(silhouette(v), v.cam.calib);
    EXPECT_EQ(a.vertices, b.vertices);
  }
}

TEST(BottomFace, SlopeOfDaSelectsFace) {
  Box3D box;
  box.labeling = BoxLabeling::tilt_order;
  box.vertices = {ImagePoint{10, 10}, {20, 10}, {20, 20}, {0, 0}, {10, 5}, {20, 5}, {20, 15}, {0, -5}};
  // D -> A = (10, 10): slope +1.
  EXPECT_EQ(bottom_face(box), (std::array<int, 4>{0, 1, 2, 3}));
  box.vertices[3] = {20, 0};  // D -> A = (-10, 10): slope -1.
  EXPECT_EQ(bottom_face(box), (std::array<int, 4>{7, 6, 5, 4}));
  box.vertices[3] = {10, 0};  // vertical counts as non-negative.
  EXPECT_EQ(bottom_face(box), (std::array<int, 4>{0, 1, 2, 3}));
  box.vertices[3] = {0, 10};  // horizontal: slope 0.
  EXPECT_EQ(bottom_face(box), (std::array<int, 4>{0, 1, 2, 3}));
}

TEST(BottomQuadrangle, FootprintAreaOnTypicalCameras) {
  // Cameras looking obliquely across the road.
  const std::vector<CameraPose> poses = [] {
    std::vector<CameraPose> p;
    for (double yaw : {-0.5, -0.35, 0.3, 0.45}) {
      for (double pitch : {0.25, 0.4}) {
        CameraPose c;
        c.yaw = yaw;
        c.pitch = pitch;
        c.roll = 0.03;
        p.push_back(c);
      }
    }
    return p;
  }();
  std::mt19937_64 rng(35);
  int checked = 0;
  for (const auto& pose : poses) {
    const SimCamera cam = make_camera(pose);
    for (int k = 0; k < 30; ++k) {
      const double L = uniform(rng, 3.5, 12.0), W = uniform(rng, 1.6, 2.5), H = uniform(rng, 1.3, 3.8);
      const auto world = vehicle_corners(cam, uniform(rng, -6, 6), uniform(rng, 0, 30), L, W, H);
      std::vector<ImagePoint> img;
      for (const auto& p : world) img.push_back(forward_project(p, cam.calib));
      const Box3D box = box_from_contour(Contour{convex_hull(img)}, cam.calib);
      const Quadrangle q = bottom_quadrangle(box, cam.calib, cam.basis);
      const double area = q.area() * pose.lambda * pose.lambda;
      EXPECT_NEAR(area, L * W, 0.1 * L * W) << "yaw " << pose.yaw << " pitch " << pose.pitch;
      ++checked;
    }
  }
  EXPECT_EQ(checked, 240);
}

TEST(BottomQuadrangle, VerticalRuleFindsRoadFaceForRelabeledBoxes) {
  const auto vehicles = sample_vehicles(36, 30, 40);
  int relabeled = 0;
  for (const auto& v : vehicles) {
    const Box3D box = box_from_contour(silhouette(v), v.cam.calib);
    if (box.labeling == BoxLabeling::tilt_order) continue;
    ++relabeled;
    const auto face = bottom_face(box);
    for (int k : face) {
      double best = 1e18;
      int which = -1;
      for (int j = 0; j < 8; ++j) {
        const double d = distance(box.vertices[k], v.corners[j]);
        if (d < best) {
          best = d;
          which = j;
        }
      }
      EXPECT_LT(which, 4) << "a selected vertex lies on the roof";
    }
  }
  EXPECT_GT(relabeled, 0);
}
