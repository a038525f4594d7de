#pragma once

#include <stdexcept>
#include <string>

namespace tdr {

enum class Errc {
  invalid_argument,
  all_parallel,
  non_physical,
  vertical_at_infinity,
  horizon_point,
  behind_camera,
  empty_mask,
  vanishing_point_inside_hull,
  degenerate_intersection,
  non_monotonic_frame,
  insufficient_history,
  grid_too_small,
  grid_mismatch,
  stale_frame,
  empty_matches,
  parse_error,
  config_error,
};

inline const char* to_string(Errc code) noexcept {
  switch (code) {
    case Errc::invalid_argument: return "InvalidArgument";
    case Errc::all_parallel: return "AllParallel";
    case Errc::non_physical: return "NonPhysical";
    case Errc::vertical_at_infinity: return "VerticalAtInfinity";
    case Errc::horizon_point: return "HorizonPoint";
    case Errc::behind_camera: return "BehindCamera";
    case Errc::empty_mask: return "EmptyMask";
    case Errc::vanishing_point_inside_hull: return "VanishingPointInsideHull";
    case Errc::degenerate_intersection: return "DegenerateIntersection";
    case Errc::non_monotonic_frame: return "NonMonotonicFrame";
    case Errc::insufficient_history: return "InsufficientHistory";
    case Errc::grid_too_small: return "GridTooSmall";
    case Errc::grid_mismatch: return "GridMismatch";
    case Errc::stale_frame: return "StaleFrame";
    case Errc::empty_matches: return "EmptyMatches";
    case Errc::parse_error: return "ParseError";
    case Errc::config_error: return "ConfigError";
  }
  return "Unknown";
}

/// Exception carrying a machine-readable error code. Every failure raised by
/// the library is one of these.
class Error : public std::runtime_error {
 public:
  Error(Errc code, const std::string& message)
      : std::runtime_error(std::string(to_string(code)) + ": " + message), code_(code) {}

  Errc code() const noexcept { return code_; }

 private:
  Errc code_;
};

}  // namespace tdr
