#pragma once

// Per-frame orchestration: detection filtering, track identity, box
// reconstruction, kinematics and danger recognition.

#include <algorithm>
#include <cmath>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include "tdr/assignment.hpp"
#include "tdr/box3d.hpp"
#include "tdr/calib.hpp"
#include "tdr/danger.hpp"
#include "tdr/error.hpp"
#include "tdr/kinematics.hpp"

namespace tdr {

enum class VehicleClass { car, bus, truck };

inline const char* to_string(VehicleClass c) noexcept {
  switch (c) {
    case VehicleClass::car: return "car";
    case VehicleClass::bus: return "bus";
    case VehicleClass::truck: return "truck";
  }
  return "car";
}

inline std::optional<VehicleClass> parse_vehicle_class(const std::string& s) {
  if (s == "car") return VehicleClass::car;
  if (s == "bus") return VehicleClass::bus;
  if (s == "truck") return VehicleClass::truck;
  return std::nullopt;
}

struct BBox {
  double x = 0.0;
  double y = 0.0;
  double w = 0.0;
  double h = 0.0;

  double area() const noexcept { return w * h; }
  ImagePoint center() const noexcept { return {x + 0.5 * w, y + 0.5 * h}; }
  friend bool operator==(const BBox&, const BBox&) = default;
};

inline double iou(const BBox& a, const BBox& b) {
  const double ix = std::max(0.0, std::min(a.x + a.w, b.x + b.w) - std::max(a.x, b.x));
  const double iy = std::max(0.0, std::min(a.y + a.h, b.y + b.h) - std::max(a.y, b.y));
  const double inter = ix * iy;
  const double uni = a.area() + b.area() - inter;
  return uni > 0.0 ? inter / uni : 0.0;
}

struct DetectionRecord {
  long frame_no = 0;
  VehicleClass cls = VehicleClass::car;
  double score = 1.0;
  BBox bbox;
  std::vector<ImagePoint> contour;
  std::optional<long> track_id;

  friend bool operator==(const DetectionRecord&, const DetectionRecord&) = default;
};

struct SceneConfig {
  std::vector<ImagePoint> road_polygon;  // empty: the whole image is road
  double min_area = 900.0;               // pixels^2
  double border_margin = 2.0;            // pixels
  double fps = 25.0;
  double alert_threshold = 2.0;  // meters
  std::vector<double> horizons{0.12, 0.24};  // seconds
  double delta = 0.86;
  double sigma0 = 0.1;       // meters
  double sigma_rate = 0.05;  // meters per slot
  double grid_cell = 0.1;    // meters
  std::size_t min_history = 5;
  long max_age = 12;
  double iou_gate = 0.1;
  double closure_tolerance = 2.0;  // pixels

  void validate() const {
    auto bad = [](const std::string& what) { throw Error(Errc::config_error, what); };
    if (!(fps > 0.0)) bad("fps must be positive");
    if (!(min_area > 0.0)) bad("min_area must be positive");
    if (!(border_margin >= 0.0)) bad("border_margin must be non-negative");
    if (!(alert_threshold > 0.0)) bad("alert_threshold must be positive");
    if (!(delta >= 0.0 && delta < 1.0)) bad("delta must lie in [0, 1)");
    if (!(sigma0 >= 0.0) || !(sigma_rate >= 0.0)) bad("sigma0 and sigma_rate must be non-negative");
    if (!(grid_cell > 0.0)) bad("grid_cell must be positive");
    if (max_age < 0) bad("max_age must be non-negative");
    if (!(iou_gate >= 0.0 && iou_gate <= 1.0)) bad("iou_gate must lie in [0, 1]");
    for (double h : horizons)
      if (!(h > 0.0)) bad("horizons must be positive");
    if (!road_polygon.empty() && road_polygon.size() < 3) bad("road_polygon needs at least 3 points");
  }
};

enum class FilterRule { kept, too_small, outside_road, not_fully_visible };

inline const char* to_string(FilterRule r) noexcept {
  switch (r) {
    case FilterRule::kept: return "kept";
    case FilterRule::too_small: return "TooSmall";
    case FilterRule::outside_road: return "OutsideRoad";
    case FilterRule::not_fully_visible: return "NotFullyVisible";
  }
  return "kept";
}

inline FilterRule classify_detection(const DetectionRecord& det, const SceneConfig& cfg, int width, int height) {
  if (det.bbox.area() < cfg.min_area) return FilterRule::too_small;
  if (!cfg.road_polygon.empty() &&
      !point_in_polygon(det.bbox.center(), std::span<const ImagePoint>(cfg.road_polygon))) {
    return FilterRule::outside_road;
  }
  const double m = cfg.border_margin;
  if (det.bbox.x < m || det.bbox.y < m || det.bbox.x + det.bbox.w > width - m ||
      det.bbox.y + det.bbox.h > height - m) {
    return FilterRule::not_fully_visible;
  }
  return FilterRule::kept;
}

inline std::vector<DetectionRecord> filter_detections(const std::vector<DetectionRecord>& dets,
                                                      const SceneConfig& cfg, int width, int height) {
  std::vector<DetectionRecord> out;
  for (const auto& d : dets)
    if (classify_detection(d, cfg, width, height) == FilterRule::kept) out.push_back(d);
  return out;
}

/// IoU tracker used when detections arrive without identities.
class FallbackTracker {
 public:
  explicit FallbackTracker(long max_age = 12, double iou_gate = 0.1) : max_age_(max_age), iou_gate_(iou_gate) {}

  /// Gives every record without an ID one, by optimal IoU assignment against
  /// live tracks; unmatched records open new tracks.
  void assign(std::vector<DetectionRecord>& dets, long frame_no) {
    std::erase_if(tracks_, [&](const Slot& s) { return frame_no - s.last_frame > max_age_; });
    std::vector<std::size_t> open;
    for (std::size_t i = 0; i < dets.size(); ++i)
      if (!dets[i].track_id) open.push_back(i);
    if (open.empty()) return;

    std::vector<std::vector<double>> cost(open.size(), std::vector<double>(tracks_.size()));
    for (std::size_t r = 0; r < open.size(); ++r) {
      for (std::size_t c = 0; c < tracks_.size(); ++c) {
        const double o = iou(dets[open[r]].bbox, tracks_[c].box);
        cost[r][c] = 1.0 - (o >= iou_gate_ ? o : 0.0);
      }
    }
    const auto match = solve_assignment(cost);
    for (std::size_t r = 0; r < open.size(); ++r) {
      DetectionRecord& det = dets[open[r]];
      const int c = match[r];
      if (c >= 0 && cost[r][c] < 1.0) {
        det.track_id = tracks_[c].id;
        tracks_[c].box = det.bbox;
        tracks_[c].last_frame = frame_no;
      } else {
        det.track_id = next_id_++;
        tracks_.push_back({*det.track_id, det.bbox, frame_no});
      }
    }
  }

  /// Keeps fresh IDs clear of identities supplied upstream.
  void reserve(long id) { next_id_ = std::max(next_id_, id + 1); }

  void seed(long id, const BBox& box, long frame_no) {
    tracks_.push_back({id, box, frame_no});
    reserve(id);
  }

 private:
  struct Slot {
    long id;
    BBox box;
    long last_frame;
  };
  std::vector<Slot> tracks_;
  long next_id_ = 1;
  long max_age_;
  double iou_gate_;
};

/// One-shot association of `cur` against the previous frame's boxes.
inline std::vector<DetectionRecord> associate_tracks(const std::vector<std::pair<long, BBox>>& prev,
                                                     std::vector<DetectionRecord> cur, double iou_gate = 0.1) {
  FallbackTracker tracker(1, iou_gate);
  for (const auto& [id, box] : prev) tracker.seed(id, box, 0);
  tracker.assign(cur, 1);
  return cur;
}

struct FrameTrack {
  long track_id = 0;
  VehicleClass cls = VehicleClass::car;
  Quadrangle footprint;
  PlanePoint center;
  PlaneVector velocity;              // smoothed, plane units per second
  std::optional<double> speed_kmh;   // once two samples exist
  std::size_t history = 0;
  double box_residual = 0.0;  // pixels
  BoxLabeling labeling = BoxLabeling::tilt_order;
  std::vector<PredictionSnapshot> predictions;
};

struct DroppedDetection {
  std::size_t index = 0;  // position in the frame's input list
  std::optional<long> track_id;
  std::string reason;
};

struct FrameOutput {
  long frame_no = 0;
  std::vector<FrameTrack> tracks;  // sorted by track_id
  std::vector<ProximityAlert> alerts;
  std::vector<DroppedDetection> dropped;
  std::vector<DangerMap> danger;  // one per horizon; empty grid when fewer than two predictions
};

class Pipeline {
 public:
  Pipeline(CameraCalibration calib, SceneConfig cfg, int width, int height)
      : calib_(std::move(calib)), basis_(plane_basis(calib_)), cfg_(std::move(cfg)), width_(width),
        height_(height), tracker_(cfg_.max_age, cfg_.iou_gate) {
    cfg_.validate();
  }

  const CameraCalibration& calibration() const noexcept { return calib_; }
  const PlaneBasis& basis() const noexcept { return basis_; }
  const SceneConfig& config() const noexcept { return cfg_; }
  const std::map<long, TrackState>& tracks() const noexcept { return tracks_; }

  FrameOutput process_frame(long frame_no, std::vector<DetectionRecord> dets) {
    if (last_frame_ && frame_no <= *last_frame_) {
      throw Error(Errc::stale_frame, "frame " + std::to_string(frame_no) + " after frame " +
                                         std::to_string(*last_frame_));
    }
    last_frame_ = frame_no;
    FrameOutput out;
    out.frame_no = frame_no;

    std::vector<std::size_t> kept_index;
    std::vector<DetectionRecord> kept;
    for (std::size_t i = 0; i < dets.size(); ++i) {
      const FilterRule rule = classify_detection(dets[i], cfg_, width_, height_);
      if (rule == FilterRule::kept) {
        kept_index.push_back(i);
        kept.push_back(std::move(dets[i]));
      } else {
        out.dropped.push_back({i, dets[i].track_id, to_string(rule)});
      }
    }
    for (const auto& d : kept)
      if (d.track_id) tracker_.reserve(*d.track_id);
    tracker_.assign(kept, frame_no);

    const double cell = cfg_.grid_cell / calib_.lambda;
    std::set<long> seen;
    std::vector<std::pair<long, Quadrangle>> footprints;
    for (std::size_t k = 0; k < kept.size(); ++k) {
      const DetectionRecord& det = kept[k];
      const long id = *det.track_id;
      if (!seen.insert(id).second) {
        out.dropped.push_back({kept_index[k], id, "DuplicateTrackId"});
        continue;
      }
      FrameTrack ft;
      try {
        const Box3D box = box_from_contour(Contour{det.contour}, calib_);
        ft.footprint = bottom_quadrangle(box, calib_, basis_);
        ft.box_residual = box.closure_residual;
        ft.labeling = box.labeling;
      } catch (const Error& e) {
        out.dropped.push_back({kept_index[k], id, to_string(e.code())});
        continue;
      }
      auto it = tracks_.find(id);
      if (it == tracks_.end()) it = tracks_.emplace(id, TrackState{id, {}, {}, {}, -1}).first;
      it->second = update_track(std::move(it->second), ft.footprint, frame_no, cfg_.fps, cfg_.delta);
      const TrackState& ts = it->second;
      ft.track_id = id;
      ft.cls = det.cls;
      ft.center = ts.latest().center;
      ft.history = ts.history.size();
      if (ts.has_velocity()) {
        ft.velocity = ts.v_s;
        ft.speed_kmh = speed_kmh(ts.v_s, calib_.lambda);
      }
      if (ts.history.size() >= std::max<std::size_t>(2, cfg_.min_history)) {
        ft.predictions = predict(ts, cfg_.horizons, cfg_.sigma0 / calib_.lambda, cfg_.sigma_rate / calib_.lambda,
                                 cfg_.fps);
      }
      footprints.emplace_back(id, ft.footprint);
      out.tracks.push_back(std::move(ft));
    }
    std::sort(out.tracks.begin(), out.tracks.end(),
              [](const FrameTrack& a, const FrameTrack& b) { return a.track_id < b.track_id; });
    std::sort(footprints.begin(), footprints.end(),
              [](const auto& a, const auto& b) { return a.first < b.first; });
    out.alerts = proximity_alerts(footprints, cfg_.alert_threshold, calib_.lambda, frame_no);

    for (std::size_t h = 0; h < cfg_.horizons.size(); ++h) {
      std::vector<HeatMap> maps;
      for (const auto& t : out.tracks) {
        if (t.predictions.empty()) continue;
        const PredictionSnapshot& snap = t.predictions[h];
        maps.push_back(vehicle_heatmap(snap, heatmap_window(snap, cell), t.track_id));
      }
      if (maps.size() >= 2) {
        out.danger.push_back(danger_map(maps));
      } else {
        out.danger.push_back({{{0.0, 0.0}, cell, 0, 0}, {}, cfg_.horizons[h]});
      }
    }

    // Retire tracks that have not been seen for longer than max_age frames.
    std::erase_if(tracks_, [&](const auto& kv) { return frame_no - kv.second.last_frame > cfg_.max_age; });
    return out;
  }

 private:
  CameraCalibration calib_;
  PlaneBasis basis_;
  SceneConfig cfg_;
  int width_;
  int height_;
  FallbackTracker tracker_;
  std::map<long, TrackState> tracks_;
  std::optional<long> last_frame_;
};

}  // namespace tdr
