#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "mrpush/core.hpp"
#include "mrpush/mpc.hpp"
#include "mrpush/planner.hpp"
#include "mrpush/push.hpp"

namespace mrpush::sim {

enum class BlockModel { kSticky, kQuasistatic };

struct TrialConfig {
  std::uint64_t seed = 0;
  double perturbation_radius = 0.05;
  double dt_sim = 0.02;
  double mpc_tick = 0.1;
  BlockModel block_model = BlockModel::kSticky;
  /// Non-positive: derived from the plan as 1.5 * makespan + 20 s.
  double timeout = 0.0;
  double success_tol = 0.1;
  double contact_gap = 0.02;
  double contact_alignment = 15.0 * kPi / 180.0;
  int max_resample = 100;

  void validate() const;
};

/// Displaces every robot by a uniform point in a disc; headings and blocks unchanged.
/// Throws ValidationError when no in-workspace sample is found within the retry budget.
Scenario perturb(const Scenario& scenario, std::uint64_t seed, double radius, int max_retries = 100);

struct Contact {
  int block = -1;
  /// Block offset along the bumper face, robot-frame y.
  double lateral = 0.0;
};

struct WorldState {
  double t = 0.0;
  std::vector<RobotPose> robots;
  std::vector<Control> controls;
  std::vector<BlockState> blocks;
  std::map<int, Contact> contacts;
};

enum class EventKind { kContact, kRelease, kSlip, kMiss, kCollision, kBoundary, kTimeout, kSuccess };
const char* to_string(EventKind k);
bool is_failure(EventKind k);

struct Event {
  double t = 0.0;
  EventKind kind = EventKind::kContact;
  int robot = -1;
  /// Block or robot involved, when any.
  int other = -1;
  std::string detail;
};

/// Friction data the quasistatic model needs.
struct PushPhysics {
  push::StableSet stable;
  std::array<push::Wrench, 4> edges{};
  push::LimitSurface ls;

  static PushPhysics make(double mu, double support_mu, double block_side, const RobotGeometry& geom);
};

/// Blocks each robot may pick up in this step (robot -> block); others are ignored.
using ContactPermissions = std::map<int, int>;

/// Advances robots by one Euler step and updates blocks and contacts.
WorldState step_world(const WorldState& state, const std::vector<Control>& controls, double dt,
                      const RobotGeometry& geom, const PushPhysics& physics, BlockModel model,
                      const ContactPermissions& allowed, const TrialConfig& cfg, std::vector<Event>* events);

struct TraceSample {
  double t = 0.0;
  std::vector<RobotPose> robots;
  std::vector<Control> controls;
  std::vector<BlockState> blocks;
};

struct TrialRecord {
  bool success = false;
  /// Time at which every block first sat within tolerance of its goal.
  double makespan = 0.0;
  /// Minimum pairwise robot distance over the trace; NaN with one robot.
  double min_distance = 0.0;
  std::vector<TraceSample> trace;
  std::vector<Event> events;
  std::optional<EventKind> failure;
};

/// Closed-loop execution of a plan under per-robot MPC.
TrialRecord run_trial(const Scenario& scenario, const planner::TrajectorySet& plan, const TrialConfig& cfg,
                      const mpc::MpcConfig& mpc_cfg, const ControlLimits& limits, const RobotGeometry& geom,
                      const PushPhysics& physics);

}  // namespace mrpush::sim
