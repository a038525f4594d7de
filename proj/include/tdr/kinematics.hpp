#pragma once

// Per-vehicle track state on the road plane: centers, raw and smoothed
// velocity, and constant-velocity prediction snapshots.

#include <cmath>
#include <span>
#include <string>
#include <vector>

#include "tdr/error.hpp"
#include "tdr/geometry.hpp"

namespace tdr {

struct TrackSample {
  long frame_no = 0;
  Quadrangle footprint;
  PlanePoint center;
};

struct TrackState {
  long track_id = 0;
  std::vector<TrackSample> history;
  PlaneVector v_r;  // plane units per second
  PlaneVector v_s;
  long last_frame = -1;

  bool has_velocity() const noexcept { return history.size() >= 2; }
  const TrackSample& latest() const { return history.back(); }
};

struct PredictionSnapshot {
  double t_offset = 0.0;  // seconds
  PlanePoint center;
  PlaneVector speed;
  PlaneVector acceleration;
  double variance = 0.0;  // isotropic, plane units squared
  Quadrangle footprint;
};

inline PlanePoint center(const Quadrangle& q) {
  PlanePoint c{};
  for (const auto& p : q.corners) c += p;
  return c / 4.0;
}

/// Appends a footprint and refreshes the velocities. When frames were skipped
/// the raw velocity divides by the actual frame gap.
inline TrackState update_track(TrackState track, const Quadrangle& footprint, long frame_no, double fps,
                               double delta) {
  if (!track.history.empty() && frame_no <= track.last_frame) {
    throw Error(Errc::non_monotonic_frame, "frame " + std::to_string(frame_no) + " does not follow frame " +
                                               std::to_string(track.last_frame) + " of track " +
                                               std::to_string(track.track_id));
  }
  if (!(fps > 0.0)) throw Error(Errc::invalid_argument, "fps must be positive");
  if (!(delta >= 0.0 && delta < 1.0)) throw Error(Errc::invalid_argument, "delta must lie in [0, 1)");

  const PlanePoint c = center(footprint);
  if (!track.history.empty()) {
    const TrackSample& prev = track.history.back();
    const double gap = static_cast<double>(frame_no - prev.frame_no);
    track.v_r = (c - prev.center) * (fps / gap);
    track.v_s = track.history.size() == 1 ? track.v_r : track.v_s * delta + track.v_r * (1.0 - delta);
  }
  track.history.push_back({frame_no, footprint, c});
  track.last_frame = frame_no;
  return track;
}

inline double speed_kmh(const PlaneVector& v, double lambda) { return norm(v) * lambda * 3.6; }

/// Zero-acceleration prediction at each horizon; slots are one frame long and
/// the positional sigma grows linearly with the slot index.
inline std::vector<PredictionSnapshot> predict(const TrackState& track, std::span<const double> horizons,
                                               double sigma0, double sigma_rate, double fps) {
  if (!track.has_velocity()) {
    throw Error(Errc::insufficient_history, "track " + std::to_string(track.track_id) + " has " +
                                                std::to_string(track.history.size()) + " sample(s), need 2");
  }
  const TrackSample& now = track.latest();
  std::vector<PredictionSnapshot> out;
  out.reserve(horizons.size());
  for (double tau : horizons) {
    if (!(tau > 0.0)) throw Error(Errc::invalid_argument, "prediction horizons must be positive");
    const PlaneVector shift = track.v_s * tau;
    const double slot = std::round(tau * fps);
    const double sigma = sigma0 + sigma_rate * slot;
    PredictionSnapshot snap;
    snap.t_offset = tau;
    snap.center = now.center + shift;
    snap.speed = track.v_s;
    snap.acceleration = {};
    snap.variance = sigma * sigma;
    snap.footprint = translated(now.footprint, shift);
    out.push_back(snap);
  }
  return out;
}

}  // namespace tdr
