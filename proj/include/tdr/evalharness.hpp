#pragma once

// Evaluation protocol: presence-period matching and error statistics for
// distances, speeds and predictions.

#include <algorithm>
#include <cmath>
#include <map>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "tdr/assignment.hpp"
#include "tdr/calib.hpp"
#include "tdr/error.hpp"
#include "tdr/simulate.hpp"

namespace tdr {

struct MetricStats {
  double mean = 0.0;
  double median = 0.0;  // lower middle for even counts
  std::size_t count = 0;
};

struct ErrorStats {
  MetricStats absolute;
  MetricStats relative;
};

/// Sample order statistic: the lower of the two middle values for even sizes.
inline double lower_median(std::vector<double> xs) {
  if (xs.empty()) return 0.0;
  const std::size_t k = (xs.size() - 1) / 2;
  std::nth_element(xs.begin(), xs.begin() + static_cast<std::ptrdiff_t>(k), xs.end());
  return xs[k];
}

inline MetricStats summarize(const std::vector<double>& xs) {
  MetricStats s;
  s.count = xs.size();
  if (xs.empty()) return s;
  std::vector<double> sorted = xs;
  std::sort(sorted.begin(), sorted.end());
  double total = 0.0;
  for (double x : sorted) total += x;
  s.mean = total / static_cast<double>(sorted.size());
  s.median = sorted[(sorted.size() - 1) / 2];
  return s;
}

inline double interval_iou(const PeriodRecord& a, const PeriodRecord& b) {
  const double inter = std::max(0.0, std::min(a.exit_time, b.exit_time) - std::max(a.enter_time, b.enter_time));
  const double uni = (a.exit_time - a.enter_time) + (b.exit_time - b.enter_time) - inter;
  return uni > 0.0 ? inter / uni : 0.0;
}

struct PeriodMatch {
  std::size_t est = 0;  // index into the estimate list
  std::size_t gt = 0;   // index into the ground-truth list
  double iou = 0.0;
};

struct MatchResult {
  std::vector<PeriodMatch> matches;  // ordered by gt index
  double recall = 0.0;
  std::size_t unmatched_estimates = 0;
};

/// Optimal one-to-one matching on 1 - IoU; pairs below `l_iou` count as unmatched.
inline MatchResult match_periods(std::span<const PeriodRecord> est, std::span<const PeriodRecord> gt,
                                 double l_iou = 0.5) {
  if (!(l_iou > 0.0 && l_iou <= 1.0)) throw Error(Errc::invalid_argument, "l_iou must lie in (0, 1]");
  MatchResult out;
  if (!gt.empty() && !est.empty()) {
    std::vector<std::vector<double>> cost(gt.size(), std::vector<double>(est.size()));
    for (std::size_t i = 0; i < gt.size(); ++i)
      for (std::size_t j = 0; j < est.size(); ++j) cost[i][j] = 1.0 - interval_iou(est[j], gt[i]);
    const auto assign = solve_assignment(cost);
    for (std::size_t i = 0; i < gt.size(); ++i) {
      if (assign[i] < 0) continue;
      const double o = 1.0 - cost[i][assign[i]];
      if (o >= l_iou) out.matches.push_back({static_cast<std::size_t>(assign[i]), i, o});
    }
  }
  out.recall = gt.empty() ? 1.0 : static_cast<double>(out.matches.size()) / static_cast<double>(gt.size());
  out.unmatched_estimates = est.size() - out.matches.size();
  return out;
}

/// Absolute and relative errors of (estimate, truth) pairs.
inline ErrorStats error_stats(std::span<const std::pair<double, double>> pairs) {
  std::vector<double> abs_err, rel_err;
  for (const auto& [est, gt] : pairs) {
    abs_err.push_back(std::abs(est - gt));
    if (gt != 0.0) rel_err.push_back(std::abs(est - gt) / std::abs(gt));
  }
  return {summarize(abs_err), summarize(rel_err)};
}

/// Speed errors in km/h between each match's last-appearance estimate and the
/// true average speed.
inline ErrorStats speed_metrics(std::span<const std::pair<double, double>> est_gt_kmh) {
  if (est_gt_kmh.empty()) throw Error(Errc::empty_matches, "no matched vehicles to compare speeds");
  return error_stats(est_gt_kmh);
}

/// Length errors of measurement lines, grouped as "toward_u" and "toward_v".
inline std::map<std::string, ErrorStats> distance_metrics(std::span<const MeasurementLine> lines,
                                                          const CameraCalibration& cal, const PlaneBasis& basis) {
  std::map<std::string, std::vector<std::pair<double, double>>> groups;
  for (const auto& l : lines) {
    groups["toward_" + l.group].emplace_back(measure_distance(l.a, l.b, cal, basis), l.length_m);
  }
  std::map<std::string, ErrorStats> out;
  for (const auto& [name, pairs] : groups) out[name] = error_stats(pairs);
  return out;
}

struct PredictionSample {
  double horizon = 0.0;  // seconds
  std::size_t history = 0;
  double location_error_m = 0.0;
  double est_speed_kmh = 0.0;
  double gt_speed_kmh = 0.0;
};

struct PredictionStats {
  MetricStats location;
  ErrorStats speed;
};

/// Per-horizon prediction errors; samples from tracks shorter than
/// `min_history` frames are excluded.
inline std::map<double, PredictionStats> prediction_metrics(std::span<const PredictionSample> samples,
                                                            std::size_t min_history = 5) {
  std::map<double, std::vector<const PredictionSample*>> by_horizon;
  for (const auto& s : samples)
    if (s.history >= min_history) by_horizon[s.horizon].push_back(&s);
  std::map<double, PredictionStats> out;
  for (const auto& [h, list] : by_horizon) {
    std::vector<double> loc;
    std::vector<std::pair<double, double>> speeds;
    for (const auto* s : list) {
      loc.push_back(s->location_error_m);
      speeds.emplace_back(s->est_speed_kmh, s->gt_speed_kmh);
    }
    out[h] = {summarize(loc), error_stats(speeds)};
  }
  return out;
}

}  // namespace tdr
