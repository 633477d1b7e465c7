#include "mrpush/ta.hpp"

#include <algorithm>
#include <cmath>
#include <deque>
#include <queue>
#include <set>
#include <tuple>
#include <unordered_map>
#include <unordered_set>

namespace mrpush::ta {

GridGraph::GridGraph(Vec2 origin, double cell_size, int width, int height)
    : origin_(origin),
      cell_size_(cell_size),
      width_(width),
      height_(height),
      blocked_(static_cast<std::size_t>(width) * height, false) {}

GridGraph GridGraph::over(const Workspace& ws, double cell_size) {
  if (!(cell_size > 0.0)) throw ValidationError("discretize: cell_size must be positive");
  if (ws.width() < cell_size || ws.height() < cell_size)
    throw ValidationError("discretize: workspace smaller than one cell");
  const int w = static_cast<int>(std::ceil(ws.width() / cell_size - 1e-9));
  const int h = static_cast<int>(std::ceil(ws.height() / cell_size - 1e-9));
  GridGraph g({ws.xmin, ws.ymin}, cell_size, w, h);
  for (int y = 0; y < h; ++y)
    for (int x = 0; x < w; ++x)
      if (!ws.contains(g.center({x, y}))) g.block({x, y});
  return g;
}

std::size_t GridGraph::num_vertices() const {
  return static_cast<std::size_t>(std::count(blocked_.begin(), blocked_.end(), false));
}

Cell GridGraph::cell_of(Vec2 p) const {
  int x = static_cast<int>(std::floor((p.x - origin_.x) / cell_size_));
  int y = static_cast<int>(std::floor((p.y - origin_.y) / cell_size_));
  // A point on the far workspace edge belongs to the last cell.
  if (x == width_) x = width_ - 1;
  if (y == height_) y = height_ - 1;
  return {x, y};
}

Vec2 GridGraph::center(Cell c) const {
  return {origin_.x + (c.x + 0.5) * cell_size_, origin_.y + (c.y + 0.5) * cell_size_};
}

std::vector<Cell> GridGraph::neighbors(Cell c) const {
  std::vector<Cell> out;
  for (const Cell d : {Cell{1, 0}, Cell{-1, 0}, Cell{0, 1}, Cell{0, -1}}) {
    const Cell n{c.x + d.x, c.y + d.y};
    if (valid(n)) out.push_back(n);
  }
  return out;
}

std::vector<int> GridGraph::distances_from(Cell a) const {
  std::vector<int> dist(blocked_.size(), -1);
  if (!valid(a)) return dist;
  std::queue<Cell> q;
  dist[index(a)] = 0;
  q.push(a);
  while (!q.empty()) {
    const Cell c = q.front();
    q.pop();
    for (const Cell n : neighbors(c)) {
      if (dist[index(n)] >= 0) continue;
      dist[index(n)] = dist[index(c)] + 1;
      q.push(n);
    }
  }
  return dist;
}

int GridGraph::distance(Cell a, Cell b) const {
  if (!valid(b)) return -1;
  return distances_from(a)[index(b)];
}

Discretization discretize(const Scenario& scenario, double cell_size) {
  Discretization d;
  d.graph = GridGraph::over(scenario.workspace, cell_size);
  std::map<Cell, int> robot_cells, start_cells, goal_cells;
  for (std::size_t i = 0; i < scenario.robots.size(); ++i) {
    const Cell c = d.graph.cell_of(scenario.robots[i].position());
    if (!d.graph.valid(c)) throw ValidationError("discretize: robot " + std::to_string(i) + " maps outside the grid");
    if (auto [it, fresh] = robot_cells.emplace(c, static_cast<int>(i)); !fresh)
      throw ValidationError("discretize: robots " + std::to_string(it->second) + " and " + std::to_string(i) +
                            " share a cell (discretization too coarse)");
    d.robots.push_back(c);
  }
  for (std::size_t j = 0; j < scenario.blocks_start.size(); ++j) {
    DiscreteTask t{d.graph.cell_of(scenario.blocks_start[j]), d.graph.cell_of(scenario.blocks_goal[j]),
                   static_cast<int>(j)};
    if (!d.graph.valid(t.pickup) || !d.graph.valid(t.delivery))
      throw ValidationError("discretize: block " + std::to_string(j) + " maps outside the grid");
    if (auto [it, fresh] = start_cells.emplace(t.pickup, static_cast<int>(j)); !fresh)
      throw ValidationError("discretize: blocks " + std::to_string(it->second) + " and " + std::to_string(j) +
                            " start in the same cell (discretization too coarse)");
    if (auto [it, fresh] = goal_cells.emplace(t.delivery, static_cast<int>(j)); !fresh)
      throw ValidationError("discretize: blocks " + std::to_string(it->second) + " and " + std::to_string(j) +
                            " have goals in the same cell (discretization too coarse)");
    d.tasks.push_back(t);
  }
  return d;
}

int task_cost(const GridGraph& graph, Cell start, const DiscreteTask& task) {
  const int a = graph.distance(start, task.pickup);
  const int b = graph.distance(task.pickup, task.delivery);
  return (a < 0 || b < 0) ? -1 : a + b;
}

namespace {

Cell at_time(const Path& p, int t) { return p[std::min<std::size_t>(static_cast<std::size_t>(t), p.size() - 1)]; }

struct VertexConstraint {
  int t;
  Cell c;
  auto operator<=>(const VertexConstraint&) const = default;
};

struct EdgeConstraint {
  int t;
  Cell from, to;
  auto operator<=>(const EdgeConstraint&) const = default;
};

struct Constraints {
  std::set<VertexConstraint> vertex;
  std::set<EdgeConstraint> edge;

  int last_time() const {
    int t = -1;
    if (!vertex.empty()) t = std::max(t, vertex.rbegin()->t);
    if (!edge.empty()) t = std::max(t, edge.rbegin()->t);
    return t;
  }
};

struct Conflict {
  enum Kind { kVertex, kEdge } kind;
  int t;
  int a, b;
  Cell c1, c2;
};

double euclid(Cell a, Cell b) { return std::hypot(double(a.x - b.x), double(a.y - b.y)); }

/// Focal search for one agent: visits pickup then delivery.
class LowLevelSearch {
 public:
  LowLevelSearch(const GridGraph& g, const std::vector<bool>& blocked, double w, std::size_t& budget_left,
                 std::size_t& expanded)
      : g_(g), blocked_(blocked), w_(w), budget_left_(budget_left), expanded_(expanded) {}

  struct Result {
    Path path;
    double lower_bound;
  };

  std::optional<Result> run(Cell start, const DiscreteTask& task, const Constraints& cons,
                            const std::vector<const Path*>& others) {
    struct Node {
      Cell c;
      int t;
      int stage;
      double f;
      int conflicts;
      int parent;
      std::size_t id;
    };
    std::deque<Node> nodes;
    auto open_cmp = [&](std::size_t a, std::size_t b) {
      const Node& x = nodes[a];
      const Node& y = nodes[b];
      if (x.f != y.f) return x.f < y.f;
      if (x.t != y.t) return x.t > y.t;
      return x.id < y.id;
    };
    auto focal_cmp = [&](std::size_t a, std::size_t b) {
      const Node& x = nodes[a];
      const Node& y = nodes[b];
      if (x.conflicts != y.conflicts) return x.conflicts < y.conflicts;
      if (x.f != y.f) return x.f < y.f;
      if (x.t != y.t) return x.t > y.t;
      return x.id < y.id;
    };
    std::set<std::size_t, decltype(open_cmp)> open(open_cmp);
    std::set<std::size_t, decltype(focal_cmp)> focal(focal_cmp);

    int last_goal_constraint = -1;
    for (const auto& vc : cons.vertex)
      if (vc.c == task.delivery) last_goal_constraint = std::max(last_goal_constraint, vc.t);
    int others_len = 0;
    for (const Path* p : others) others_len = std::max<int>(others_len, static_cast<int>(p->size()));
    const int tcap = std::max(cons.last_time(), others_len) + 1;

    auto heuristic = [&](Cell c, int stage) {
      return stage == 0 ? euclid(c, task.pickup) + euclid(task.pickup, task.delivery) : euclid(c, task.delivery);
    };
    auto key = [&](Cell c, int t, int stage) {
      return (static_cast<std::uint64_t>(g_.index(c)) << 33) | (static_cast<std::uint64_t>(std::min(t, tcap)) << 1) |
             static_cast<std::uint64_t>(stage);
    };
    auto transition_conflicts = [&](Cell from, Cell to, int t) {
      int n = 0;
      for (const Path* p : others) {
        const Cell o1 = at_time(*p, t + 1);
        if (o1 == to) ++n;
        if (o1 == from && at_time(*p, t) == to) ++n;
      }
      return n;
    };

    std::unordered_set<std::uint64_t> seen;
    const int start_stage = start == task.pickup ? 1 : 0;
    nodes.push_back({start, 0, start_stage, heuristic(start, start_stage), 0, -1, 0});
    open.insert(0);
    focal.insert(0);
    seen.insert(key(start, 0, start_stage));

    while (!open.empty()) {
      const double fmin = nodes[*open.begin()].f;
      const std::size_t cur_id = *focal.begin();
      focal.erase(focal.begin());
      open.erase(cur_id);
      const Node cur = nodes[cur_id];

      if (cur.stage == 1 && cur.c == task.delivery && cur.t > last_goal_constraint) {
        Result r;
        r.lower_bound = std::min(fmin, cur.f);
        for (int i = static_cast<int>(cur_id); i >= 0; i = nodes[i].parent) r.path.push_back(nodes[i].c);
        std::reverse(r.path.begin(), r.path.end());
        return r;
      }
      if (budget_left_ == 0) throw PlanningFailure("ecbsta: low-level expansion budget exhausted", std::nullopt);
      --budget_left_;
      ++expanded_;

      std::vector<Cell> succ = g_.neighbors(cur.c);
      succ.push_back(cur.c);
      for (const Cell n : succ) {
        if (blocked_[g_.index(n)]) continue;
        const int t1 = cur.t + 1;
        if (cons.vertex.count({t1, n})) continue;
        if (cons.edge.count({cur.t, cur.c, n})) continue;
        const int stage = (cur.stage == 0 && n == task.pickup) ? 1 : cur.stage;
        const std::uint64_t k = key(n, t1, stage);
        if (!seen.insert(k).second) continue;
        Node nn{n, t1, stage, t1 + heuristic(n, stage), cur.conflicts + transition_conflicts(cur.c, n, cur.t),
                static_cast<int>(cur_id), nodes.size()};
        nodes.push_back(nn);
        open.insert(nn.id);
        if (nn.f <= w_ * fmin + 1e-9) focal.insert(nn.id);
      }
      if (open.empty()) break;
      const double fmin_new = nodes[*open.begin()].f;
      if (fmin_new > fmin) {
        for (std::size_t id : open) {
          const double f = nodes[id].f;
          if (f > w_ * fmin_new + 1e-9) break;
          if (f > w_ * fmin + 1e-9) focal.insert(id);
        }
      }
      if (focal.empty()) {
        // Numerical guard: the f-minimal node always qualifies.
        focal.insert(*open.begin());
      }
    }
    return std::nullopt;
  }

 private:
  const GridGraph& g_;
  const std::vector<bool>& blocked_;
  double w_;
  std::size_t& budget_left_;
  std::size_t& expanded_;
};

std::optional<Conflict> first_conflict(const std::vector<Path>& paths, const std::vector<int>& active) {
  int horizon = 0;
  for (int i : active) horizon = std::max<int>(horizon, static_cast<int>(paths[i].size()));
  for (int t = 0; t < horizon; ++t) {
    for (std::size_t x = 0; x < active.size(); ++x) {
      for (std::size_t y = x + 1; y < active.size(); ++y) {
        const int a = active[x], b = active[y];
        if (at_time(paths[a], t) == at_time(paths[b], t))
          return Conflict{Conflict::kVertex, t, a, b, at_time(paths[a], t), {}};
      }
    }
    for (std::size_t x = 0; x < active.size(); ++x) {
      for (std::size_t y = x + 1; y < active.size(); ++y) {
        const int a = active[x], b = active[y];
        const Cell a0 = at_time(paths[a], t), a1 = at_time(paths[a], t + 1);
        const Cell b0 = at_time(paths[b], t), b1 = at_time(paths[b], t + 1);
        if (a0 == b1 && a1 == b0 && a0 != a1) return Conflict{Conflict::kEdge, t, a, b, a0, a1};
      }
    }
  }
  return std::nullopt;
}

int count_conflicts(const std::vector<Path>& paths, const std::vector<int>& active) {
  int horizon = 0;
  for (int i : active) horizon = std::max<int>(horizon, static_cast<int>(paths[i].size()));
  int n = 0;
  for (int t = 0; t < horizon; ++t) {
    for (std::size_t x = 0; x < active.size(); ++x) {
      for (std::size_t y = x + 1; y < active.size(); ++y) {
        const int a = active[x], b = active[y];
        const Cell a0 = at_time(paths[a], t), a1 = at_time(paths[a], t + 1);
        const Cell b0 = at_time(paths[b], t), b1 = at_time(paths[b], t + 1);
        if (a0 == b0) ++n;
        if (a0 == b1 && a1 == b0 && a0 != a1) ++n;
      }
    }
  }
  return n;
}

}  // namespace

std::optional<int> first_conflict_time(const Path& a, const Path& b) {
  std::vector<Path> paths{a, b};
  const auto c = first_conflict(paths, {0, 1});
  if (!c) return std::nullopt;
  return c->t;
}

Assignment ecbsta_solve(const GridGraph& graph, std::span<const Cell> robots, std::span<const DiscreteTask> tasks,
                        const SolverOptions& options, SolveStats* stats) {
  if (options.w < 1.0) throw std::invalid_argument("ecbsta_solve: w must be >= 1");
  const int n = static_cast<int>(robots.size());
  const int m = static_cast<int>(tasks.size());
  if (n == 0) throw std::invalid_argument("ecbsta_solve: no robots");
  SolveStats local_stats;
  SolveStats& st = stats ? *stats : local_stats;

  // Rows are the smaller side so every row is matched.
  const bool rows_are_robots = n <= m;
  const int rows = rows_are_robots ? n : m;
  const int cols = rows_are_robots ? m : n;
  CostMatrix costs(rows, cols);
  for (int r = 0; r < rows; ++r) {
    for (int c = 0; c < cols; ++c) {
      const int robot = rows_are_robots ? r : c;
      const int task = rows_are_robots ? c : r;
      const int tc = task_cost(graph, robots[robot], tasks[task]);
      costs.at(r, c) = tc < 0 ? kForbidden : tc;
    }
  }
  NextBestAssignment enumerator(std::move(costs));

  struct HLNode {
    std::vector<Constraints> constraints;
    std::vector<int> task_of;
    std::vector<Path> paths;
    std::vector<double> lbs;
    std::vector<int> active;
    Cost cost = 0;
    double lb = 0.0;
    int conflicts = 0;
    bool is_root = false;
  };
  std::deque<HLNode> nodes;
  std::set<std::pair<double, std::size_t>> open;
  std::set<std::pair<Cost, std::size_t>> open_by_cost;
  std::set<std::tuple<int, Cost, std::size_t>> focal;
  std::vector<bool> in_focal;
  double threshold = -1.0;

  std::size_t ll_budget = options.max_low_level;
  std::optional<std::size_t> incumbent;

  auto blocked_for = [&](const HLNode& node) {
    std::vector<bool> blocked(graph.width() * graph.height(), false);
    for (int i = 0; i < n; ++i)
      if (node.task_of[i] < 0) blocked[graph.index(robots[i])] = true;
    return blocked;
  };
  auto others_of = [&](const HLNode& node, int agent) {
    std::vector<const Path*> out;
    for (int i : node.active)
      if (i != agent) out.push_back(&node.paths[i]);
    return out;
  };
  auto replan = [&](HLNode& node, int agent, const std::vector<bool>& blocked) {
    LowLevelSearch ll(graph, blocked, options.w, ll_budget, st.low_level_expanded);
    auto res = ll.run(robots[agent], tasks[node.task_of[agent]], node.constraints[agent], others_of(node, agent));
    if (!res) return false;
    node.paths[agent] = std::move(res->path);
    node.lbs[agent] = res->lower_bound;
    return true;
  };
  auto finalize = [&](HLNode& node) {
    node.cost = 0;
    node.lb = 0.0;
    for (int i : node.active) {
      node.cost += static_cast<Cost>(node.paths[i].size()) - 1;
      node.lb += node.lbs[i];
    }
    node.conflicts = count_conflicts(node.paths, node.active);
  };
  auto push = [&](HLNode&& node) {
    const std::size_t id = nodes.size();
    nodes.push_back(std::move(node));
    in_focal.push_back(false);
    const HLNode& nd = nodes.back();
    open.insert({nd.lb, id});
    open_by_cost.insert({nd.cost, id});
    if (!incumbent || nd.conflicts < nodes[*incumbent].conflicts) incumbent = id;
  };
  auto refresh_focal = [&]() {
    if (open.empty()) return;
    const double t_new = options.w * open.begin()->first + 1e-9;
    if (t_new < threshold) {
      focal.clear();
      std::fill(in_focal.begin(), in_focal.end(), false);
      threshold = -1.0;
    }
    for (auto it = open_by_cost.begin(); it != open_by_cost.end() && static_cast<double>(it->first) <= t_new; ++it) {
      if (in_focal[it->second]) continue;
      in_focal[it->second] = true;
      focal.insert({nodes[it->second].conflicts, it->first, it->second});
    }
    threshold = t_new;
  };
  auto next_root = [&]() {
    AssignmentSolution sol;
    while (enumerator.next(sol)) {
      ++st.assignments_tried;
      HLNode root;
      root.is_root = true;
      root.constraints.resize(n);
      root.task_of.assign(n, -1);
      root.paths.resize(n);
      root.lbs.assign(n, 0.0);
      for (int r = 0; r < rows; ++r) {
        const int robot = rows_are_robots ? r : sol.row_to_col[r];
        const int task = rows_are_robots ? sol.row_to_col[r] : r;
        root.task_of[robot] = task;
      }
      for (int i = 0; i < n; ++i) {
        root.paths[i] = {robots[i]};
        if (root.task_of[i] >= 0) root.active.push_back(i);
      }
      const auto blocked = blocked_for(root);
      bool ok = true;
      for (int i : root.active) {
        ok = replan(root, i, blocked);
        if (!ok) break;
      }
      if (!ok) continue;
      finalize(root);
      push(std::move(root));
      return;
    }
  };
  auto to_assignment = [&](const HLNode& node) {
    Assignment a;
    for (int i = 0; i < n; ++i)
      if (node.task_of[i] >= 0) a.pairs[i] = tasks[node.task_of[i]].block_id;
    a.cost = node.cost;
    a.paths = node.paths;
    return a;
  };

  next_root();
  refresh_focal();
  while (!open.empty()) {
    if (st.high_level_expanded >= options.max_high_level) {
      throw PlanningFailure("ecbsta: high-level expansion budget exhausted",
                            incumbent ? std::optional<Assignment>(to_assignment(nodes[*incumbent])) : std::nullopt);
    }
    if (focal.empty()) refresh_focal();
    const auto [conf, cost, id] = *focal.begin();
    focal.erase(focal.begin());
    in_focal[id] = false;
    open.erase({nodes[id].lb, id});
    open_by_cost.erase({cost, id});
    ++st.high_level_expanded;

    if (nodes[id].is_root) next_root();

    const auto conflict = first_conflict(nodes[id].paths, nodes[id].active);
    if (!conflict) return to_assignment(nodes[id]);

    const auto blocked = blocked_for(nodes[id]);
    for (int side = 0; side < 2; ++side) {
      HLNode child = nodes[id];
      child.is_root = false;
      const int agent = side == 0 ? conflict->a : conflict->b;
      if (conflict->kind == Conflict::kVertex) {
        child.constraints[agent].vertex.insert({conflict->t, conflict->c1});
      } else if (side == 0) {
        child.constraints[agent].edge.insert({conflict->t, conflict->c1, conflict->c2});
      } else {
        child.constraints[agent].edge.insert({conflict->t, conflict->c2, conflict->c1});
      }
      try {
        if (!replan(child, agent, blocked)) continue;
      } catch (const PlanningFailure&) {
        throw PlanningFailure("ecbsta: low-level expansion budget exhausted",
                              incumbent ? std::optional<Assignment>(to_assignment(nodes[*incumbent])) : std::nullopt);
      }
      finalize(child);
      push(std::move(child));
    }
    refresh_focal();
  }
  throw PlanningFailure("ecbsta: no conflict-free assignment exists",
                        incumbent ? std::optional<Assignment>(to_assignment(nodes[*incumbent])) : std::nullopt);
}

std::vector<Assignment> assign_asymmetric(const GridGraph& graph, std::span<const Cell> robots,
                                          std::span<const DiscreteTask> tasks, const SolverOptions& options) {
  std::vector<Assignment> rounds;
  std::vector<Cell> starts(robots.begin(), robots.end());
  std::vector<DiscreteTask> remaining(tasks.begin(), tasks.end());
  while (!remaining.empty()) {
    Assignment a = ecbsta_solve(graph, starts, remaining, options);
    std::erase_if(remaining, [&](const DiscreteTask& t) {
      return std::any_of(a.pairs.begin(), a.pairs.end(), [&](const auto& p) { return p.second == t.block_id; });
    });
    for (std::size_t i = 0; i < starts.size(); ++i) starts[i] = a.paths[i].back();
    rounds.push_back(std::move(a));
  }
  return rounds;
}

std::vector<RankedAssignment> rank_assignments(const GridGraph& graph, std::span<const Cell> robots,
                                               std::span<const DiscreteTask> tasks) {
  const int n = static_cast<int>(robots.size());
  const int m = static_cast<int>(tasks.size());
  if (n > 6 || m > 6) throw ValidationError("rank_assignments: enumeration limited to 6 robots and 6 blocks");
  std::vector<std::vector<int>> cost(n, std::vector<int>(m));
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < m; ++j) cost[i][j] = task_cost(graph, robots[i], tasks[j]);

  std::vector<RankedAssignment> out;
  const int k = std::min(n, m);
  // Enumerate ordered selections: slot s (robot s when n <= m, task s otherwise) picks a distinct partner.
  std::vector<int> pick(k, -1);
  std::vector<bool> used(std::max(n, m), false);
  auto emit = [&]() {
    RankedAssignment ra;
    ra.robot_to_block.assign(n, -1);
    Cost total = 0;
    for (int s = 0; s < k; ++s) {
      const int robot = n <= m ? s : pick[s];
      const int task = n <= m ? pick[s] : s;
      const int c = cost[robot][task];
      if (c < 0) return;
      total += c;
      ra.robot_to_block[robot] = tasks[task].block_id;
    }
    ra.cost = total;
    out.push_back(std::move(ra));
  };
  auto rec = [&](auto&& self, int s) -> void {
    if (s == k) {
      emit();
      return;
    }
    for (int p = 0; p < std::max(n, m); ++p) {
      if (used[p]) continue;
      used[p] = true;
      pick[s] = p;
      self(self, s + 1);
      used[p] = false;
    }
  };
  rec(rec, 0);
  std::sort(out.begin(), out.end(), [](const RankedAssignment& a, const RankedAssignment& b) {
    if (a.cost != b.cost) return a.cost < b.cost;
    return a.robot_to_block < b.robot_to_block;
  });
  return out;
}

}  // namespace mrpush::ta
