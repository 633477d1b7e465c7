#pragma once

#include <compare>
#include <cstdint>
#include <map>
#include <optional>
#include <span>
#include <vector>

#include "mrpush/assignment.hpp"
#include "mrpush/core.hpp"
#include "mrpush/errors.hpp"

namespace mrpush::ta {

struct Cell {
  int x = 0;
  int y = 0;
  auto operator<=>(const Cell&) const = default;
};

/// 4-connected grid over the workspace. Cells use the half-open convention
/// [i * s, (i + 1) * s); cells whose centre lies outside the workspace are blocked.
class GridGraph {
 public:
  GridGraph() = default;
  GridGraph(Vec2 origin, double cell_size, int width, int height);

  /// Grid covering the workspace; throws ValidationError for a non-positive or oversized cell.
  static GridGraph over(const Workspace& ws, double cell_size);

  int width() const { return width_; }
  int height() const { return height_; }
  double cell_size() const { return cell_size_; }
  std::size_t num_vertices() const;

  bool in_bounds(Cell c) const { return c.x >= 0 && c.y >= 0 && c.x < width_ && c.y < height_; }
  bool valid(Cell c) const { return in_bounds(c) && !blocked_[index(c)]; }
  std::size_t index(Cell c) const { return static_cast<std::size_t>(c.y) * width_ + c.x; }
  Cell cell_at(std::size_t idx) const { return {static_cast<int>(idx % width_), static_cast<int>(idx / width_)}; }
  void block(Cell c) { blocked_[index(c)] = true; }

  Cell cell_of(Vec2 p) const;
  Vec2 center(Cell c) const;
  /// Orthogonal neighbours that are valid vertices (no wait self-loop).
  std::vector<Cell> neighbors(Cell c) const;
  /// Unit-cost shortest path length; -1 when unreachable.
  int distance(Cell a, Cell b) const;
  /// All-pairs-from-source breadth-first distances.
  std::vector<int> distances_from(Cell a) const;

 private:
  Vec2 origin_;
  double cell_size_ = 0.5;
  int width_ = 0;
  int height_ = 0;
  std::vector<bool> blocked_;
};

struct DiscreteTask {
  Cell pickup;
  Cell delivery;
  int block_id = 0;
};

struct Discretization {
  GridGraph graph;
  std::vector<Cell> robots;
  std::vector<DiscreteTask> tasks;
};

/// Maps robots and blocks to the cells containing their centres.
/// Throws ValidationError when two blocks (or two robots) share a cell.
Discretization discretize(const Scenario& scenario, double cell_size);

using Path = std::vector<Cell>;

struct Assignment {
  /// robot index -> block id; robots without an entry are idle.
  std::map<int, int> pairs;
  Cost cost = 0;
  /// One path per robot; idle robots hold their start cell.
  std::vector<Path> paths;
};

struct SolverOptions {
  double w = 1.3;
  std::size_t max_high_level = 200000;
  std::size_t max_low_level = 1000000;
};

/// Planning failure carrying the best conflict-ridden incumbent, when any.
class PlanningFailure : public PlanningError {
 public:
  PlanningFailure(const std::string& what, std::optional<Assignment> incumbent)
      : PlanningError(what), incumbent_(std::move(incumbent)) {}
  const std::optional<Assignment>& incumbent() const { return incumbent_; }

 private:
  std::optional<Assignment> incumbent_;
};

struct SolveStats {
  std::size_t high_level_expanded = 0;
  std::size_t low_level_expanded = 0;
  std::size_t assignments_tried = 0;
};

/// Bounded-suboptimal conflict-based search with task assignment. Each path
/// visits its task's pickup then delivery; total cost <= w * optimum.
/// With more robots than tasks the unassigned robots stay put as obstacles; with
/// fewer robots than tasks every robot takes one task and the rest stay open.
Assignment ecbsta_solve(const GridGraph& graph, std::span<const Cell> robots, std::span<const DiscreteTask> tasks,
                        const SolverOptions& options = {}, SolveStats* stats = nullptr);

/// Repeated rounds until every task is assigned. Later rounds start robots at
/// the final cell of their previous path.
std::vector<Assignment> assign_asymmetric(const GridGraph& graph, std::span<const Cell> robots,
                                          std::span<const DiscreteTask> tasks, const SolverOptions& options = {});

struct RankedAssignment {
  /// robot index -> block id, -1 for idle robots.
  std::vector<int> robot_to_block;
  Cost cost = 0;
};

/// Every injective robot/task pairing of size min(n, m), ordered by the sum of
/// individual shortest-path costs (inter-robot conflicts ignored), ties by
/// lexicographic robot_to_block. Requires n <= 6 and m <= 6.
std::vector<RankedAssignment> rank_assignments(const GridGraph& graph, std::span<const Cell> robots,
                                               std::span<const DiscreteTask> tasks);

/// Shortest start -> pickup -> delivery cost, or -1 when unreachable.
int task_cost(const GridGraph& graph, Cell start, const DiscreteTask& task);

/// First time index where two paths share a vertex or swap along an edge;
/// paths are extended by their final cell.
std::optional<int> first_conflict_time(const Path& a, const Path& b);

}  // namespace mrpush::ta
