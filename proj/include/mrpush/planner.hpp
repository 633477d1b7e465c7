#pragma once

#include <map>
#include <optional>
#include <string>
#include <vector>

#include "mrpush/core.hpp"
#include "mrpush/errors.hpp"
#include "mrpush/geometry.hpp"

namespace mrpush::planner {

enum class PrimitiveKind { kWait, kFwd, kBack, kFwdLeft, kFwdRight, kBackLeft, kBackRight };
enum class Phase { kApproach, kPush };

const char* to_string(PrimitiveKind k);

struct MotionPrimitive {
  PrimitiveKind kind = PrimitiveKind::kWait;
  /// Signed distance travelled along the heading (negative when reversing).
  double arc_length = 0.0;
  double steering = 0.0;

  Control control(double dt) const { return {arc_length / dt, steering}; }
};

struct PlannerConfig {
  double dt_plan = 0.25;
  /// Duplicate-detection lattice.
  double xy_resolution = 0.05;
  double theta_resolution = 10.0 * kPi / 180.0;
  double turn_penalty = 0.1;
  double reverse_penalty = 0.5;
  double cusp_penalty = 10.0;
  /// Waits inserted for every robot wherever any robot reverses its travel direction.
  int cusp_dwell = 4;
  /// Required gap between robot footprints, and between robots and blocks they do not own.
  double clearance = 0.2;
  double block_clearance = 0.05;
  /// Approach goal window around the pre-push pose.
  double approach_lateral_tol = 0.03;
  double approach_gap_tol = 0.06;
  double approach_heading_tol = 0.06;
  /// Straight forward stretch that ends every approach, so contact starts square to the block.
  double approach_run_in = 0.3;
  /// Push goal: block centre within this distance of its goal.
  double push_goal_tol = 0.03;
  /// Final heading cone around the block start -> goal direction.
  double push_heading_cone = 30.0 * kPi / 180.0;
  /// Idle robots may end anywhere within this distance of their anchor.
  double idle_tol = 0.1;
  /// Inflation of the low-level heuristic; 1 keeps it close to admissible.
  double heuristic_weight = 1.0;
  bool analytic_expansion = true;
  double analytic_radius_approach = 3.0;
  double analytic_radius_push = 1.0;
  /// A conflict constrains up to this many further steps while the overlap persists.
  int conflict_window = 8;
  std::size_t max_high_level = 100000;
  std::size_t max_low_level = 300000;
  double time_limit_s = 60.0;
};

std::vector<std::pair<MotionPrimitive, RobotPose>> expand_primitives(const RobotPose& pose, Phase phase,
                                                                     const ControlLimits& limits,
                                                                     const RobotGeometry& geom, double dt_plan = 0.25);

/// Rear-axle pose with the bumper flush against the block's near face, heading from block to goal.
/// Returns nullopt when the block already sits on its goal.
std::optional<RobotPose> prepush_pose(Vec2 block, Vec2 goal, const RobotGeometry& geom, double block_side,
                                      double tol = 1e-9);

struct TimedWaypoint {
  int t = 0;
  RobotPose pose;
  bool pushing = false;
  /// Constant control applied from this waypoint to the next (zero at the end).
  Control control;
  PrimitiveKind kind = PrimitiveKind::kWait;
  /// Held block while pushing, otherwise -1.
  int block = -1;
  /// Offset of the held block along the bumper face (robot-frame y).
  double block_lateral = 0.0;
};

using Trajectory = std::vector<TimedWaypoint>;

struct RoundBoundary {
  int approach_end = 0;
  int push_end = 0;
};

struct TrajectorySet {
  double dt = 0.25;
  std::vector<Trajectory> robots;
  std::vector<RoundBoundary> rounds;
  /// Robot -> block for each round.
  std::vector<std::map<int, int>> assignment;

  int horizon() const { return robots.empty() ? 0 : static_cast<int>(robots.front().size()) - 1; }
  double makespan() const { return horizon() * dt; }
};

/// Goal for one robot in one phase.
struct AgentGoal {
  enum Kind { kPose, kPush, kStay } kind = kStay;
  /// kPose: pre-push pose. kStay: anchor pose.
  RobotPose pose;
  /// kPush: goal of the held block and the nominal push direction.
  Vec2 block_goal;
  double push_heading = 0.0;
};

struct AgentTask {
  RobotPose start;
  AgentGoal goal;
  /// Block the robot holds (push) or is heading for (approach); -1 for none.
  int block = -1;
  double block_lateral = 0.0;
  /// Block delivered in an earlier round; the robot starts touching it.
  int released = -1;
};

struct PhaseProblem {
  Phase phase = Phase::kApproach;
  Workspace workspace;
  double block_side = 0.1;
  /// Current block positions; a pushing robot's own block is carried, not an obstacle.
  std::vector<Vec2> blocks;
  std::vector<AgentTask> agents;
};

struct PhaseStats {
  std::size_t high_level_expanded = 0;
  std::size_t low_level_expanded = 0;
};

/// Conflict-based search over car-like hybrid A*. Returns one trajectory per agent,
/// all padded to a common length, with t counted from 0.
std::vector<Trajectory> clcbs_plan(const PhaseProblem& problem, const ControlLimits& limits,
                                   const RobotGeometry& geom, const PlannerConfig& cfg = {},
                                   PhaseStats* stats = nullptr);

/// Two-phase plan (approach then push) per assignment round, concatenated in time.
/// `rounds[k]` maps robot -> block for round k; unlisted robots stay near their pose.
TrajectorySet plan_two_phase(const Scenario& scenario, const std::vector<std::map<int, int>>& rounds,
                             const ControlLimits& limits, const RobotGeometry& geom, const PlannerConfig& cfg = {});

/// Block position implied by a pushing waypoint.
Vec2 held_block_position(const TimedWaypoint& w, const RobotGeometry& geom, double block_side);

/// Footprint of the robot at a waypoint, with its held block while pushing.
Footprint waypoint_footprint(const TimedWaypoint& w, const RobotGeometry& geom, double block_side);

/// Checks every TrajectorySet invariant; returns an empty string when valid, else a diagnostic.
std::string validate_trajectories(const TrajectorySet& set, const RobotGeometry& geom, const ControlLimits& limits,
                                  double block_side, double replay_tol = 1e-6);

}  // namespace mrpush::planner
