#pragma once

#include <span>
#include <vector>

#include "mrpush/core.hpp"
#include "mrpush/planner.hpp"

namespace mrpush::mpc {

struct MpcConfig {
  int horizon = 10;
  double dt = 0.1;
  double a_cte = 200.0;
  double a_time = 20.0;
  double a_col = 15.0;
  double d_thr = 0.6;
  int n_v = 5;
  int n_phi = 11;
  /// Apply |.| to the timing term instead of using it signed.
  bool abs_timing = false;
  /// Projection window, in reference waypoints, around the scheduled waypoint.
  int window = 2;

  /// Throws ValidationError for an empty candidate set or invalid weights.
  void validate() const;
};

/// Time-stamped reference polyline with cumulative arc length.
class ReferencePath {
 public:
  ReferencePath() = default;
  ReferencePath(std::vector<Vec2> points, double dt);
  static ReferencePath from_trajectory(const planner::Trajectory& tr, double dt);

  struct Projection {
    double distance = 0.0;
    /// Arc length of the closest point.
    double arc = 0.0;
  };

  std::size_t size() const { return points_.size(); }
  double dt() const { return dt_; }
  double length() const { return arc_.empty() ? 0.0 : arc_.back(); }
  const std::vector<Vec2>& points() const { return points_; }

  /// Closest point over segments [first, last) with endpoint clamping.
  Projection project(Vec2 p, std::size_t first, std::size_t last) const;
  Projection project(Vec2 p) const { return project(p, 0, points_.size()); }
  /// Projection restricted to the window around the waypoint scheduled at time t,
  /// never crossing a change of travel direction.
  Projection project_near(Vec2 p, double t, int window) const;
  /// Planned progress at time t, piecewise linear between waypoint timestamps.
  double progress_at(double t) const;
  std::size_t index_at(double t) const;
  /// t, or the time of the next change of travel direction after t0 when that comes first.
  double hold_time(double t0, double t) const;

 private:
  std::vector<Vec2> points_;
  std::vector<double> arc_;
  /// First waypoint of each run of one travel direction; runs share the cusp waypoint.
  std::vector<std::size_t> run_start_;
  double dt_ = 0.25;
};

/// Distance from p to the reference polyline (nearest segment, clamped at the ends).
double cross_track_error(const RobotPose& p, const ReferencePath& ref);

/// Planned progress at t minus actual progress; positive when lagging. Projection
/// is restricted to `window` waypoints around the schedule when window >= 0.
double timing_cost(const RobotPose& p, const ReferencePath& ref, double t, int window = -1);

/// Sum over others of max(d_thr - distance, 0).
double collision_cost(Vec2 own, std::span<const Vec2> others, double d_thr);

struct Neighbor {
  RobotPose pose;
  Vec2 velocity;
};

struct WorldSnapshot {
  RobotPose pose;
  const ReferencePath* ref = nullptr;
  std::vector<Neighbor> others;
  /// Elapsed execution time.
  double t = 0.0;
};

struct Solution {
  std::vector<Control> controls;
  double cost = 0.0;
};

/// Candidate speeds and steering angles for the active phase.
std::vector<Control> candidate_controls(const MpcConfig& cfg, const ControlLimits& limits, bool pushing);

/// Best constant-control candidate over the horizon.
Solution solve(const WorldSnapshot& snapshot, const MpcConfig& cfg, const ControlLimits& limits,
               const RobotGeometry& geom, bool pushing);

}  // namespace mrpush::mpc
