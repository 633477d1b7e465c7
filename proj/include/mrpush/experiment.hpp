#pragma once

#include <filesystem>
#include <map>
#include <string>
#include <vector>

#include "mrpush/io.hpp"

namespace mrpush::experiment {

enum class TaMode { kOptimal, kManualMedian };

/// GP: median assignment, no collision term. GP-CA: median assignment with it.
/// PuSHR: optimal assignment with it.
struct AlgorithmVariant {
  std::string name;
  TaMode ta_mode = TaMode::kOptimal;
  double a_col = 15.0;

  /// Throws ValidationError for unknown names. `a_col` is the configured weight for CA variants.
  static AlgorithmVariant named(const std::string& name, double a_col = 15.0);
  void validate() const;
};

using Rounds = std::vector<std::map<int, int>>;

/// Robot -> block maps for each round. Manual mode takes the lower median of
/// rank_assignments for the first round; any later rounds use the optimal solver.
Rounds choose_rounds(const Scenario& scenario, const io::Config& cfg, TaMode mode);

struct PlannedRun {
  Rounds rounds;
  planner::TrajectorySet plan;
  double planning_seconds = 0.0;
};

/// Assignment followed by two-phase planning. Throws PlanningError on failure.
PlannedRun plan_scenario(const Scenario& scenario, const io::Config& cfg, TaMode mode);

struct RunRecord {
  std::string scenario;
  std::string variant;
  std::uint64_t seed = 0;
  Rounds rounds;
  std::string plan_digest;
  sim::TrialRecord trial;
  double planning_seconds = 0.0;
  /// Canonical scenario and config text, so the run can be repeated from the record alone.
  std::string scenario_text;
  std::string config_text;
};

/// Canonical JSON; wall-clock time is left out unless asked for so records stay reproducible.
std::string to_json(const RunRecord& rec, bool with_wall_clock = false);

struct BatchRow {
  std::string scenario;
  std::string variant;
  int trials = 0;
  int successes = 0;
  /// Over successful trials only; NaN when there are none.
  double makespan_mean = 0.0;
  double makespan_std = 0.0;
  double min_distance_mean = 0.0;
  double min_distance_std = 0.0;
  std::map<std::string, int> failures;

  double success_rate() const { return trials ? static_cast<double>(successes) / trials : 0.0; }
};

std::string format_row(const BatchRow& row);
std::string row_header();

struct BatchResult {
  BatchRow row;
  std::vector<RunRecord> runs;
  PlannedRun planned;
  bool planned_ok = false;
  std::string planning_error;
};

/// Plans once on the nominal scenario, then runs `trials` perturbed executions with
/// seeds base_seed, base_seed + 1, ... A planning failure fails every trial.
BatchResult run_batch(const Scenario& scenario, const AlgorithmVariant& variant, const io::Config& cfg, int trials,
                      std::uint64_t base_seed, int threads = 1);

struct ScatterPoint {
  std::vector<int> robot_to_block;
  Cost cost = 0;
  /// NaN when planning failed for this assignment.
  double makespan = 0.0;
};

/// Every first-round assignment with its ranking cost and two-phase plan makespan, sorted by cost.
std::vector<ScatterPoint> assignment_scatter(const Scenario& scenario, const io::Config& cfg);
std::string format_scatter(const std::vector<ScatterPoint>& pts);

/// Pearson correlation over points with a finite makespan.
double pearson(const std::vector<ScatterPoint>& pts);

/// Planned paths with block starts drawn as squares and goals as circles.
std::string overview_svg(const Scenario& scenario, const planner::TrajectorySet& plan, const RobotGeometry& geom);

/// Writes trace_<k>.csv, record_<k>.json and overview_<k>.svg per record. Returns written paths.
std::vector<std::filesystem::path> export_records(const std::vector<RunRecord>& records, const Scenario& scenario,
                                                  const planner::TrajectorySet& plan, const RobotGeometry& geom,
                                                  const std::filesystem::path& out_dir);

}  // namespace mrpush::experiment
