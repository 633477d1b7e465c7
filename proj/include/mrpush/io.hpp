#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <string>
#include <vector>

#include "mrpush/core.hpp"
#include "mrpush/mpc.hpp"
#include "mrpush/planner.hpp"
#include "mrpush/sim.hpp"
#include "mrpush/ta.hpp"

namespace mrpush::io {

/// Every tunable in one place; file sections mirror the members.
struct Config {
  ControlLimits limits;
  RobotGeometry geometry;
  double mu = 0.6;
  double support_mu = 0.5;
  double ta_cell = 0.5;
  ta::SolverOptions ta;
  planner::PlannerConfig planner;
  mpc::MpcConfig mpc;
  sim::TrialConfig trial;
  int trials = 100;
  std::uint64_t base_seed = 1;

  void validate() const;
};

/// Section/key/value lines: `[section]`, `key = value`, `#` comments.
struct KeyValueFile {
  struct Entry {
    std::string key;
    std::string value;
    int line = 0;
  };
  std::vector<std::pair<std::string, std::vector<Entry>>> sections;

  static KeyValueFile parse(const std::string& text, const std::string& origin);
};

Config parse_config(const std::string& text, const std::string& origin = "<config>");
Config load_config(const std::filesystem::path& path);
std::string format_config(const Config& cfg);

/// Scenario format:
///   id = s2a
///   block_side = 0.1
///   [workspace]  xmin/ymin/xmax/ymax
///   [robots]     r<i> = x y theta
///   [blocks]     b<j> = start_x start_y goal_x goal_y
Scenario parse_scenario(const std::string& text, const RobotGeometry& geom, const std::string& origin = "<scenario>");
Scenario load_scenario(const std::filesystem::path& path, const RobotGeometry& geom = {});
/// Canonical text; parse_scenario(format_scenario(s)) == s and formatting is idempotent.
std::string format_scenario(const Scenario& s);
void save_scenario(const Scenario& s, const std::filesystem::path& path);

/// Shortest decimal text that reads back to the same double.
std::string format_double(double v);

std::string read_file(const std::filesystem::path& path);
void write_file(const std::filesystem::path& path, const std::string& text);

/// One row per robot per waypoint: robot,t,x,y,theta,v,phi,pushing,block,lateral,kind.
/// A leading comment block carries dt and the round assignments.
std::string format_trajectories(const planner::TrajectorySet& set);
planner::TrajectorySet parse_trajectories(const std::string& text, const std::string& origin = "<trajectories>");

/// One row per trace sample per robot: t,robot,x,y,theta,v,phi; then blocks as block,<j>.
std::string format_trace(const sim::TrialRecord& rec);

/// 64-bit FNV-1a, printed as 16 hex digits.
std::string digest(const std::string& bytes);

}  // namespace mrpush::io
