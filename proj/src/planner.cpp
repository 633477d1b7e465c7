#include "mrpush/planner.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <deque>
#include <limits>
#include <queue>
#include <set>
#include <unordered_map>
#include <unordered_set>

#include "mrpush/dubins.hpp"

namespace mrpush::planner {

const char* to_string(PrimitiveKind k) {
  switch (k) {
    case PrimitiveKind::kWait: return "wait";
    case PrimitiveKind::kFwd: return "fwd";
    case PrimitiveKind::kBack: return "back";
    case PrimitiveKind::kFwdLeft: return "fwd_left";
    case PrimitiveKind::kFwdRight: return "fwd_right";
    case PrimitiveKind::kBackLeft: return "back_left";
    case PrimitiveKind::kBackRight: return "back_right";
  }
  return "?";
}

std::vector<std::pair<MotionPrimitive, RobotPose>> expand_primitives(const RobotPose& pose, Phase phase,
                                                                     const ControlLimits& limits,
                                                                     const RobotGeometry& geom, double dt_plan) {
  const double unit = limits.v_max * dt_plan;
  const bool push = phase == Phase::kPush;
  const double phi = limits.phi_max(push);
  std::vector<MotionPrimitive> prims = {
      {PrimitiveKind::kWait, 0.0, 0.0},
      {PrimitiveKind::kFwd, unit, 0.0},
      {PrimitiveKind::kFwdLeft, unit, phi},
      {PrimitiveKind::kFwdRight, unit, -phi},
  };
  // Reversing would pull the bumper off the block.
  if (!push) {
    prims.push_back({PrimitiveKind::kBack, -unit, 0.0});
    prims.push_back({PrimitiveKind::kBackLeft, -unit, phi});
    prims.push_back({PrimitiveKind::kBackRight, -unit, -phi});
  }
  std::vector<std::pair<MotionPrimitive, RobotPose>> out;
  out.reserve(prims.size());
  for (const auto& m : prims) out.push_back({m, step_kinematics(pose, m.control(dt_plan), dt_plan, geom)});
  return out;
}

std::optional<RobotPose> prepush_pose(Vec2 block, Vec2 goal, const RobotGeometry& geom, double block_side,
                                      double tol) {
  const Vec2 d = goal - block;
  if (d.norm() <= tol) return std::nullopt;
  const double th = std::atan2(d.y, d.x);
  const double lever = geom.block_lever(block_side);
  return RobotPose{block.x - lever * std::cos(th), block.y - lever * std::sin(th), th};
}

Vec2 held_block_position(const TimedWaypoint& w, const RobotGeometry& geom, double block_side) {
  return w.pose.transform({geom.block_lever(block_side), w.block_lateral});
}

Footprint waypoint_footprint(const TimedWaypoint& w, const RobotGeometry& geom, double block_side) {
  if (w.pushing && w.block >= 0) return robot_footprint(w.pose, geom, held_block(w.pose, geom, block_side, w.block_lateral));
  return robot_footprint(w.pose, geom);
}

namespace {

using Clock = std::chrono::steady_clock;

struct Constraint {
  int t;
  Footprint other;
};

struct Step {
  MotionPrimitive prim;
  RobotPose pose;
};

double step_cost(const MotionPrimitive& m, const PlannerConfig& cfg) {
  double c = 1.0;
  if (m.steering != 0.0) c += cfg.turn_penalty;
  if (m.arc_length < 0.0) c += cfg.reverse_penalty;
  return c;
}

PrimitiveKind kind_of(double arc, double steer) {
  if (arc == 0.0) return PrimitiveKind::kWait;
  if (arc > 0) return steer > 0 ? PrimitiveKind::kFwdLeft : steer < 0 ? PrimitiveKind::kFwdRight : PrimitiveKind::kFwd;
  return steer > 0 ? PrimitiveKind::kBackLeft : steer < 0 ? PrimitiveKind::kBackRight : PrimitiveKind::kBack;
}

/// Splits a constant-steering segment into substeps no longer than one unit.
void append_segment(std::vector<Step>& steps, RobotPose& pose, double length, double steer, bool reverse,
                    double unit, double dt, const RobotGeometry& geom) {
  if (length <= 1e-9) return;
  const int n = static_cast<int>(std::ceil(length / unit - 1e-9));
  const double each = length / n;
  for (int i = 0; i < n; ++i) {
    const double arc = reverse ? -each : each;
    MotionPrimitive m{kind_of(arc, steer), arc, steer};
    pose = step_kinematics(pose, m.control(dt), dt, geom);
    steps.push_back({m, pose});
  }
}

class HybridAStar {
 public:
  HybridAStar(const PhaseProblem& pb, int agent, const ControlLimits& limits, const RobotGeometry& geom,
              const PlannerConfig& cfg, Clock::time_point deadline, std::size_t& expanded)
      : pb_(pb),
        task_(pb.agents[agent]),
        limits_(limits),
        geom_(geom),
        cfg_(cfg),
        deadline_(deadline),
        expanded_(expanded) {
    carrying_ = pb.phase == Phase::kPush && task_.goal.kind == AgentGoal::kPush && task_.block >= 0;
    lever_ = geom.block_lever(pb.block_side);
    unit_ = limits.v_max * cfg.dt_plan;
    std::vector<bool> carried(pb.blocks.size(), false);
    if (pb.phase == Phase::kPush)
      for (const auto& a : pb.agents)
        if (a.goal.kind == AgentGoal::kPush && a.block >= 0) carried[a.block] = true;
    for (std::size_t j = 0; j < pb.blocks.size(); ++j) {
      const int id = static_cast<int>(j);
      // Blocks being pushed move with their robots; robot-robot conflicts cover them.
      if (carried[j]) continue;
      const Rect rect = block_rect({pb.blocks[j].x, pb.blocks[j].y, 0.0, pb.block_side});
      if (id == task_.released) {
        obstacles_.push_back({rect, 0.0});
      } else if (id == task_.block && task_.goal.kind == AgentGoal::kPose) {
        own_ = rect;
      } else {
        obstacles_.push_back({rect, id == task_.block ? 0.0 : cfg.block_clearance});
      }
    }
    target_ = task_.goal.pose;
    if (task_.goal.kind == AgentGoal::kPose && cfg.approach_run_in > 0) {
      // Whole primitives only; a robot already square behind the block needs no run-in.
      const int k = static_cast<int>(std::round(cfg.approach_run_in / unit_));
      const RobotPose& g = task_.goal.pose;
      const Vec2 e = rotate(task_.start.position() - g.position(), -g.theta);
      const bool lined_up = e.x <= 0 && e.x >= -k * unit_ - cfg.approach_gap_tol &&
                            std::abs(e.y) <= cfg.approach_lateral_tol &&
                            std::abs(normalize_angle(task_.start.theta - g.theta)) <= cfg.approach_heading_tol;
      if (!lined_up && k > 0) {
        run_in_ = k * unit_;
        target_ = {g.x - run_in_ * std::cos(g.theta), g.y - run_in_ * std::sin(g.theta), g.theta};
      }
    }
    if (carrying_) {
      const double r = std::hypot(lever_, task_.block_lateral);
      const double rp = turning_radius(limits.phi_max_push, geom);
      push_step_reach_ = unit_ * std::sqrt(1.0 + (r / rp) * (r / rp));
    }
  }

  struct Result {
    Trajectory traj;
    double cost = 0.0;
  };

  std::optional<Result> run(const std::vector<Constraint>& cons) {
    by_time_.clear();
    last_constraint_ = -1;
    for (const auto& c : cons) {
      by_time_[c.t].push_back(&c.other);
      last_constraint_ = std::max(last_constraint_, c.t);
    }
    const int tcap = last_constraint_ + 1;

    struct Node {
      RobotPose pose;
      int t;
      double g;
      double f;
      int parent;
      MotionPrimitive prim;
      /// Sign of the last non-wait move, 0 before the first.
      int dir = 0;
    };
    std::vector<Node> nodes;
    auto cmp = [&](int a, int b) {
      const Node& x = nodes[a];
      const Node& y = nodes[b];
      if (x.f != y.f) return x.f > y.f;
      if (x.g != y.g) return x.g < y.g;
      return a > b;
    };
    std::priority_queue<int, std::vector<int>, decltype(cmp)> open(cmp);
    std::unordered_map<std::uint64_t, double> best_g;
    std::unordered_set<std::uint64_t> closed;

    const RobotPose& s = task_.start;
    if (!state_valid(s, 0)) return std::nullopt;
    nodes.push_back({s, 0, 0.0, heuristic(s), -1, {}});
    open.push(0);
    best_g[key(s, 0, tcap)] = 0.0;

    std::size_t local = 0;
    while (!open.empty()) {
      const int cur = open.top();
      open.pop();
      const Node n = nodes[cur];
      const std::uint64_t k = key(n.pose, n.t, tcap);
      if (!closed.insert(k).second) continue;

      if (is_goal(n.pose)) {
        if (auto tail = run_in(n.pose, n.t)) return build(nodes, cur, *tail);
      }
      if (++local > cfg_.max_low_level) return std::nullopt;
      ++expanded_;
      if ((expanded_ & 1023) == 0 && Clock::now() > deadline_)
        throw PlanningError("planner: time limit exceeded");

      // Analytic shots get cheaper to try as they get likelier to succeed.
      const bool shoot = cfg_.analytic_expansion && (local % 5 == 0 || near_goal(n.pose));
      if (shoot) {
        if (auto tail = analytic(n.pose, n.t)) {
          Result r = build(nodes, cur, *tail);
          return r;
        }
      }

      const Phase prim_phase = carrying_ ? Phase::kPush : Phase::kApproach;
      for (const auto& [prim, next] : expand_primitives(n.pose, prim_phase, limits_, geom_, cfg_.dt_plan)) {
        if (prim.kind == PrimitiveKind::kWait && n.t >= last_constraint_) continue;
        const int t1 = n.t + 1;
        if (!state_valid(next, t1)) continue;
        const int dir = prim.arc_length > 0 ? 1 : prim.arc_length < 0 ? -1 : n.dir;
        // Cusps are hard to track; charge for each change of travel direction.
        const double g = n.g + step_cost(prim, cfg_) + (n.dir != 0 && dir != n.dir ? cfg_.cusp_penalty : 0.0);
        const std::uint64_t nk = key(next, t1, tcap);
        if (closed.count(nk)) continue;
        auto it = best_g.find(nk);
        if (it != best_g.end() && it->second <= g) continue;
        best_g[nk] = g;
        nodes.push_back({next, t1, g, g + heuristic(next), cur, prim, dir});
        open.push(static_cast<int>(nodes.size()) - 1);
      }
    }
    return std::nullopt;
  }

  Footprint footprint(const RobotPose& p) const {
    if (carrying_) return robot_footprint(p, geom_, held_block(p, geom_, pb_.block_side, task_.block_lateral));
    return robot_footprint(p, geom_);
  }

 private:
  std::uint64_t key(const RobotPose& p, int t, int tcap) const {
    const auto ix = static_cast<std::int64_t>(std::floor(p.x / cfg_.xy_resolution));
    const auto iy = static_cast<std::int64_t>(std::floor(p.y / cfg_.xy_resolution));
    const int nth = static_cast<int>(std::round(2 * kPi / cfg_.theta_resolution));
    int ith = static_cast<int>(std::floor((normalize_angle(p.theta) + kPi) / cfg_.theta_resolution));
    ith = ((ith % nth) + nth) % nth;
    const std::uint64_t tk = static_cast<std::uint64_t>(std::min(t, tcap));
    return (static_cast<std::uint64_t>(ix & 0xFFFF) << 48) | (static_cast<std::uint64_t>(iy & 0xFFFF) << 32) |
           (static_cast<std::uint64_t>(ith & 0xFF) << 24) | (tk & 0xFFFFFF);
  }

  double heuristic(const RobotPose& p) const {
    switch (task_.goal.kind) {
      case AgentGoal::kPose: {
        // Shorter of the forward and the all-reverse Dubins curves, reverse steps at their penalised cost.
        const RobotPose& g = target_;
        const double radius = turning_radius(limits_.phi_max_free, geom_);
        double best = std::numeric_limits<double>::infinity();
        if (auto d = dubins_shortest(p, g, radius)) best = d->length();
        const RobotPose pr{p.x, p.y, normalize_angle(p.theta + kPi)}, gr{g.x, g.y, normalize_angle(g.theta + kPi)};
        if (auto d = dubins_shortest(pr, gr, radius)) best = std::min(best, d->length() * (1.0 + cfg_.reverse_penalty));
        return cfg_.heuristic_weight * std::max(distance(p.position(), g.position()), std::min(best, 1e9)) / unit_;
      }
      case AgentGoal::kPush: {
        if (!carrying_) return 0.0;
        const Vec2 b = p.transform({lever_, task_.block_lateral});
        return std::max(0.0, distance(b, task_.goal.block_goal) - cfg_.push_goal_tol) / push_step_reach_;
      }
      case AgentGoal::kStay:
        return std::max(0.0, distance(p.position(), task_.goal.pose.position()) - cfg_.idle_tol) / unit_;
    }
    return 0.0;
  }

  bool is_goal(const RobotPose& p) const {
    const AgentGoal& g = task_.goal;
    switch (g.kind) {
      case AgentGoal::kPose: {
        const Vec2 e = rotate(p.position() - target_.position(), -target_.theta);
        const double gap = -e.x;
        return gap >= -1e-9 && gap <= cfg_.approach_gap_tol && std::abs(e.y) <= cfg_.approach_lateral_tol &&
               std::abs(normalize_angle(p.theta - target_.theta)) <= cfg_.approach_heading_tol;
      }
      case AgentGoal::kPush: {
        if (!carrying_) return true;
        const Vec2 b = p.transform({lever_, task_.block_lateral});
        return distance(b, g.block_goal) <= cfg_.push_goal_tol &&
               std::abs(normalize_angle(p.theta - g.push_heading)) <= cfg_.push_heading_cone;
      }
      case AgentGoal::kStay:
        return distance(p.position(), g.pose.position()) <= cfg_.idle_tol &&
               std::abs(normalize_angle(p.theta - g.pose.theta)) <= cfg_.push_heading_cone;
    }
    return false;
  }

  bool static_ok(const Footprint& fp) const {
    if (!fp.inside(pb_.workspace)) return false;
    for (const auto& [rect, margin] : obstacles_)
      if (fp.overlaps(rect, margin)) return false;
    return true;
  }

  /// The block being approached may only be touched from square behind it.
  bool own_ok(const RobotPose& p, const Footprint& fp) const {
    if (!own_ || !fp.overlaps(*own_, cfg_.block_clearance)) return true;
    const RobotPose& g = task_.goal.pose;
    const Vec2 e = rotate(p.position() - g.position(), -g.theta);
    const bool square = std::abs(e.y) <= cfg_.approach_lateral_tol &&
                        std::abs(normalize_angle(p.theta - g.theta)) <= cfg_.approach_heading_tol;
    return square && !fp.overlaps(*own_, 0.0);
  }

  bool constraint_ok(const Footprint& fp, int t) const {
    auto it = by_time_.find(t);
    if (it == by_time_.end()) return true;
    for (const Footprint* o : it->second)
      if (fp.overlaps(*o, cfg_.clearance)) return false;
    return true;
  }

  bool state_valid(const RobotPose& p, int t) const {
    const Footprint fp = footprint(p);
    return static_ok(fp) && own_ok(p, fp) && constraint_ok(fp, t);
  }

  /// The robot must be able to stay put from time t on.
  bool parked_ok(const RobotPose& p, int t) const {
    if (t >= last_constraint_ + 1) return true;
    const Footprint fp = footprint(p);
    for (auto it = by_time_.lower_bound(t); it != by_time_.end(); ++it)
      for (const Footprint* o : it->second)
        if (fp.overlaps(*o, cfg_.clearance)) return false;
    return true;
  }

  bool near_goal(const RobotPose& p) const {
    if (task_.goal.kind == AgentGoal::kPose) return distance(p.position(), target_.position()) < 1.0;
    return true;
  }

  bool tail_ok(const std::vector<Step>& tail, int t0) const {
    for (std::size_t i = 0; i < tail.size(); ++i)
      if (!state_valid(tail[i].pose, t0 + static_cast<int>(i) + 1)) return false;
    return tail.empty() || parked_ok(tail.back().pose, t0 + static_cast<int>(tail.size()));
  }

  std::optional<std::vector<Step>> analytic(const RobotPose& p, int t) const {
    if (task_.goal.kind == AgentGoal::kPose) return analytic_pose(p, t);
    if (task_.goal.kind == AgentGoal::kPush && carrying_) return analytic_push(p, t);
    return std::nullopt;
  }

  /// Straight run-in from the staging pose to the goal, or nothing when it collides.
  std::optional<std::vector<Step>> run_in(const RobotPose& p, int t) const {
    std::vector<Step> steps;
    if (run_in_ > 0) {
      RobotPose cur = p;
      append_segment(steps, cur, run_in_, 0.0, false, unit_, cfg_.dt_plan, geom_);
    }
    if (!tail_ok(steps, t)) return std::nullopt;
    if (steps.empty() && !parked_ok(p, t)) return std::nullopt;
    return steps;
  }

  std::optional<std::vector<Step>> analytic_pose(const RobotPose& p, int t) const {
    const RobotPose& goal = target_;
    if (distance(p.position(), goal.position()) > cfg_.analytic_radius_approach) return std::nullopt;
    const double phi = limits_.phi_max_free;
    const double radius = turning_radius(phi, geom_);
    std::optional<std::vector<Step>> best;
    double best_cost = std::numeric_limits<double>::infinity();
    for (bool reverse : {false, true}) {
      RobotPose a = p, b = goal;
      if (reverse) {
        a.theta = normalize_angle(a.theta + kPi);
        b.theta = normalize_angle(b.theta + kPi);
      }
      const auto path = dubins_shortest(a, b, radius);
      if (!path) continue;
      std::vector<Step> steps;
      RobotPose cur = p;
      for (int i = 0; i < 3; ++i) {
        double steer = 0.0;
        if (path->types[i] == DubinsPath::kLeft) steer = phi;
        if (path->types[i] == DubinsPath::kRight) steer = -phi;
        // Driving a mirrored-heading path backwards flips the steering sign.
        if (reverse) steer = -steer;
        append_segment(steps, cur, path->lengths[i], steer, reverse, unit_, cfg_.dt_plan, geom_);
      }
      if (steps.empty()) continue;
      if (distance(cur.position(), goal.position()) > 1e-6 ||
          std::abs(normalize_angle(cur.theta - goal.theta)) > 1e-6)
        continue;
      if (run_in_ > 0) append_segment(steps, cur, run_in_, 0.0, false, unit_, cfg_.dt_plan, geom_);
      double c = 0;
      for (const auto& s : steps) c += step_cost(s.prim, cfg_);
      if (c >= best_cost || !tail_ok(steps, t)) continue;
      best_cost = c;
      best = std::move(steps);
    }
    return best;
  }

  std::optional<std::vector<Step>> analytic_push(const RobotPose& p, int t) const {
    const Vec2 goal = task_.goal.block_goal;
    if (distance(p.transform({lever_, task_.block_lateral}), goal) > cfg_.analytic_radius_push) return std::nullopt;
    const double phi = limits_.phi_max_push;
    const double rp = turning_radius(phi, geom_);
    const int kmax = static_cast<int>(std::ceil(0.5 * kPi * rp / unit_));
    std::optional<std::vector<Step>> best;
    double best_cost = std::numeric_limits<double>::infinity();
    for (double steer : {0.0, phi, -phi}) {
      std::vector<Step> arcs;
      RobotPose cur = p;
      for (int k = 0; k <= (steer == 0.0 ? 0 : kmax); ++k) {
        if (k > 0) {
          MotionPrimitive m{kind_of(unit_, steer), unit_, steer};
          cur = step_kinematics(cur, m.control(cfg_.dt_plan), cfg_.dt_plan, geom_);
          arcs.push_back({m, cur});
        }
        const Vec2 b = cur.transform({lever_, task_.block_lateral});
        const Vec2 dir{std::cos(cur.theta), std::sin(cur.theta)};
        const double along = (goal - b).dot(dir);
        const double cross = dir.cross(goal - b);
        if (along < -1e-9 || std::abs(cross) > 0.5 * cfg_.push_goal_tol) continue;
        if (std::abs(normalize_angle(cur.theta - task_.goal.push_heading)) > cfg_.push_heading_cone) continue;
        std::vector<Step> steps = arcs;
        RobotPose end = cur;
        append_segment(steps, end, std::max(0.0, along), 0.0, false, unit_, cfg_.dt_plan, geom_);
        if (steps.empty()) continue;
        double c = 0;
        for (const auto& s : steps) c += step_cost(s.prim, cfg_);
        if (c >= best_cost || !tail_ok(steps, t)) continue;
        best_cost = c;
        best = std::move(steps);
      }
    }
    return best;
  }

  template <typename Nodes>
  Result build(const Nodes& nodes, int last, const std::vector<Step>& tail) const {
    std::vector<int> chain;
    for (int i = last; i >= 0; i = nodes[i].parent) chain.push_back(i);
    std::reverse(chain.begin(), chain.end());
    Result r;
    const bool pushing = carrying_;
    auto make = [&](int t, const RobotPose& pose) {
      TimedWaypoint w;
      w.t = t;
      w.pose = pose;
      w.pushing = pushing;
      w.block = pushing ? task_.block : -1;
      w.block_lateral = pushing ? task_.block_lateral : 0.0;
      return w;
    };
    for (std::size_t i = 0; i < chain.size(); ++i) {
      r.traj.push_back(make(static_cast<int>(i), nodes[chain[i]].pose));
      if (i > 0) {
        const MotionPrimitive& m = nodes[chain[i]].prim;
        r.traj[i - 1].control = m.control(cfg_.dt_plan);
        r.traj[i - 1].kind = m.kind;
      }
    }
    r.cost = nodes[last].g;
    for (const auto& s : tail) {
      TimedWaypoint& prev = r.traj.back();
      prev.control = s.prim.control(cfg_.dt_plan);
      prev.kind = s.prim.kind;
      r.traj.push_back(make(prev.t + 1, s.pose));
      r.cost += step_cost(s.prim, cfg_);
    }
    return r;
  }

  const PhaseProblem& pb_;
  const AgentTask& task_;
  const ControlLimits& limits_;
  const RobotGeometry& geom_;
  const PlannerConfig& cfg_;
  Clock::time_point deadline_;
  std::size_t& expanded_;
  bool carrying_ = false;
  double lever_ = 0.0;
  double unit_ = 0.1;
  double push_step_reach_ = 0.1;
  RobotPose target_;
  double run_in_ = 0.0;
  std::vector<std::pair<Rect, double>> obstacles_;
  std::optional<Rect> own_;
  std::map<int, std::vector<const Footprint*>> by_time_;
  int last_constraint_ = -1;
};

const TimedWaypoint& at(const Trajectory& tr, int t) { return tr[std::min<std::size_t>(t, tr.size() - 1)]; }

struct PairConflict {
  int t, a, b;
};

std::optional<PairConflict> find_conflict(const std::vector<Trajectory>& paths, const RobotGeometry& geom,
                                          double block_side, double clearance) {
  std::size_t horizon = 0;
  for (const auto& p : paths) horizon = std::max(horizon, p.size());
  const double reach = 2.0 * (std::hypot(geom.body_length, geom.body_width) + block_side) + clearance;
  for (int t = 0; t < static_cast<int>(horizon); ++t) {
    for (std::size_t i = 0; i < paths.size(); ++i) {
      for (std::size_t j = i + 1; j < paths.size(); ++j) {
        const TimedWaypoint& a = at(paths[i], t);
        const TimedWaypoint& b = at(paths[j], t);
        if (distance(a.pose.position(), b.pose.position()) > reach) continue;
        if (waypoint_footprint(a, geom, block_side).overlaps(waypoint_footprint(b, geom, block_side), clearance))
          return PairConflict{t, static_cast<int>(i), static_cast<int>(j)};
      }
    }
  }
  return std::nullopt;
}

void pad(Trajectory& tr, std::size_t len) {
  while (tr.size() < len) {
    TimedWaypoint w = tr.back();
    tr.back().control = {};
    tr.back().kind = PrimitiveKind::kWait;
    w.t += 1;
    w.control = {};
    w.kind = PrimitiveKind::kWait;
    tr.push_back(w);
  }
}

}  // namespace

std::vector<Trajectory> clcbs_plan(const PhaseProblem& problem, const ControlLimits& limits,
                                   const RobotGeometry& geom, const PlannerConfig& cfg, PhaseStats* stats) {
  const std::size_t n = problem.agents.size();
  if (n == 0) return {};
  PhaseStats local_stats;
  PhaseStats& st = stats ? *stats : local_stats;
  const auto deadline = Clock::now() + std::chrono::duration_cast<Clock::duration>(
                                           std::chrono::duration<double>(cfg.time_limit_s));

  struct CbsNode {
    std::vector<std::vector<Constraint>> constraints;
    std::vector<Trajectory> paths;
    std::vector<double> costs;
    double cost = 0.0;
  };
  std::deque<CbsNode> nodes;
  std::set<std::pair<double, std::size_t>> open;

  auto search = [&](const CbsNode& node, std::size_t i) {
    HybridAStar astar(problem, static_cast<int>(i), limits, geom, cfg, deadline, st.low_level_expanded);
    return astar.run(node.constraints[i]);
  };

  CbsNode root;
  root.constraints.resize(n);
  root.paths.resize(n);
  root.costs.resize(n);
  for (std::size_t i = 0; i < n; ++i) {
    auto r = search(root, i);
    if (!r) throw PlanningError("planner: no trajectory for robot " + std::to_string(i) + " even without conflicts");
    root.paths[i] = std::move(r->traj);
    root.costs[i] = r->cost;
    root.cost += r->cost;
  }
  nodes.push_back(std::move(root));
  open.insert({nodes.back().cost, 0});

  std::optional<PairConflict> last_conflict;
  while (!open.empty()) {
    if (st.high_level_expanded >= cfg.max_high_level) break;
    const std::size_t id = open.begin()->second;
    open.erase(open.begin());
    ++st.high_level_expanded;

    const auto conflict = find_conflict(nodes[id].paths, geom, problem.block_side, cfg.clearance);
    if (!conflict) {
      std::vector<Trajectory> out = nodes[id].paths;
      std::size_t len = 0;
      for (const auto& p : out) len = std::max(len, p.size());
      for (auto& p : out) pad(p, len);
      return out;
    }
    last_conflict = conflict;
    for (int side = 0; side < 2; ++side) {
      const int agent = side == 0 ? conflict->a : conflict->b;
      const int other = side == 0 ? conflict->b : conflict->a;
      CbsNode child = nodes[id];
      // Constrain the whole run of overlapping steps at once; one step at a time
      // branches once per timestep of a single encounter.
      for (int t = conflict->t; t <= conflict->t + cfg.conflict_window; ++t) {
        const auto fa = waypoint_footprint(at(child.paths[agent], t), geom, problem.block_side);
        const auto fb = waypoint_footprint(at(child.paths[other], t), geom, problem.block_side);
        if (t > conflict->t && !fa.overlaps(fb, cfg.clearance)) break;
        child.constraints[agent].push_back({t, fb});
      }
      auto r = search(child, agent);
      if (!r) continue;
      child.cost += r->cost - child.costs[agent];
      child.costs[agent] = r->cost;
      child.paths[agent] = std::move(r->traj);
      nodes.push_back(std::move(child));
      open.insert({nodes.back().cost, nodes.size() - 1});
    }
    if (Clock::now() > deadline) break;
  }
  std::string what = "planner: unresolved conflict";
  if (last_conflict)
    what += " between robots " + std::to_string(last_conflict->a) + " and " + std::to_string(last_conflict->b) +
            " at step " + std::to_string(last_conflict->t);
  throw PlanningError(what);
}

namespace {

/// Every robot holds still for `dwell` steps at each waypoint where some robot reverses
/// its travel direction. Holding all robots together keeps the set conflict-free.
void insert_cusp_dwell(TrajectorySet& set, int dwell) {
  if (dwell <= 0 || set.robots.empty()) return;
  const std::size_t n = set.robots.size();
  std::vector<double> last(n, 0.0);
  for (std::size_t k = 0; k < set.robots.front().size(); ++k) {
    bool cusp = false;
    for (std::size_t i = 0; i < n; ++i) {
      const double v = set.robots[i][k].control.v;
      if (v != 0.0 && last[i] != 0.0 && (v > 0) != (last[i] > 0)) cusp = true;
      if (v != 0.0) last[i] = v;
    }
    if (!cusp) continue;
    for (auto& tr : set.robots) {
      TimedWaypoint hold = tr[k];
      hold.control = {};
      hold.kind = PrimitiveKind::kWait;
      tr.insert(tr.begin() + static_cast<std::ptrdiff_t>(k), static_cast<std::size_t>(dwell), hold);
      for (std::size_t j = k; j < tr.size(); ++j) tr[j].t = static_cast<int>(j);
    }
    for (auto& r : set.rounds) {
      if (r.approach_end > static_cast<int>(k)) r.approach_end += dwell;
      if (r.push_end > static_cast<int>(k)) r.push_end += dwell;
    }
    k += static_cast<std::size_t>(dwell);
  }
}

}  // namespace

TrajectorySet plan_two_phase(const Scenario& scenario, const std::vector<std::map<int, int>>& rounds,
                             const ControlLimits& limits, const RobotGeometry& geom, const PlannerConfig& cfg) {
  const std::size_t n = scenario.robots.size();
  const double side = scenario.block_side;
  const double success_tol = 0.1;
  TrajectorySet out;
  out.dt = cfg.dt_plan;
  out.assignment = rounds;
  out.robots.resize(n);

  std::vector<RobotPose> poses = scenario.robots;
  std::vector<Vec2> blocks = scenario.blocks_start;
  std::vector<int> released(n, -1);
  for (std::size_t i = 0; i < n; ++i) {
    TimedWaypoint w;
    w.pose = poses[i];
    out.robots[i].push_back(w);
  }

  auto append = [&](std::vector<Trajectory>& phase) {
    const int offset = out.horizon();
    for (std::size_t i = 0; i < n; ++i) {
      Trajectory& dst = out.robots[i];
      const Trajectory& src = phase[i];
      // The phase start duplicates the current last waypoint.
      dst.back().control = src.front().control;
      dst.back().kind = src.front().kind;
      // The flag describes the move that leaves this waypoint.
      dst.back().pushing = src.front().pushing;
      dst.back().block = src.front().block;
      dst.back().block_lateral = src.front().block_lateral;
      for (std::size_t k = 1; k < src.size(); ++k) {
        TimedWaypoint w = src[k];
        w.t += offset;
        dst.push_back(w);
      }
    }
  };

  for (std::size_t r = 0; r < rounds.size(); ++r) {
    std::map<int, int> active;
    for (auto [robot, block] : rounds[r]) {
      if (robot < 0 || robot >= static_cast<int>(n) || block < 0 || block >= static_cast<int>(blocks.size()))
        throw ValidationError("plan: assignment refers to a missing robot or block");
      if (distance(blocks[block], scenario.blocks_goal[block]) > success_tol) active[robot] = block;
    }

    PhaseProblem approach;
    approach.phase = Phase::kApproach;
    approach.workspace = scenario.workspace;
    approach.block_side = side;
    approach.blocks = blocks;
    for (std::size_t i = 0; i < n; ++i) {
      AgentTask a;
      a.start = poses[i];
      auto it = active.find(static_cast<int>(i));
      if (it != active.end()) {
        a.goal.kind = AgentGoal::kPose;
        a.goal.pose = *prepush_pose(blocks[it->second], scenario.blocks_goal[it->second], geom, side);
        a.block = it->second;
        a.released = released[i];
      } else {
        a.goal.kind = AgentGoal::kStay;
        a.goal.pose = poses[i];
        a.block = released[i];
      }
      approach.agents.push_back(a);
    }
    std::vector<Trajectory> p1;
    try {
      p1 = clcbs_plan(approach, limits, geom, cfg);
    } catch (const PlanningError& e) {
      throw PlanningError("round " + std::to_string(r) + " approach phase: " + e.what());
    }
    append(p1);
    const int approach_end = out.horizon();
    for (std::size_t i = 0; i < n; ++i) poses[i] = p1[i].back().pose;

    PhaseProblem push = approach;
    push.phase = Phase::kPush;
    push.agents.clear();
    for (std::size_t i = 0; i < n; ++i) {
      AgentTask a;
      a.start = poses[i];
      auto it = active.find(static_cast<int>(i));
      if (it != active.end()) {
        const int b = it->second;
        const Vec2 d = scenario.blocks_goal[b] - blocks[b];
        a.goal.kind = AgentGoal::kPush;
        a.goal.block_goal = scenario.blocks_goal[b];
        a.goal.push_heading = std::atan2(d.y, d.x);
        a.block = b;
        a.block_lateral = poses[i].to_local(blocks[b]).y;
      } else {
        a.goal.kind = AgentGoal::kStay;
        a.goal.pose = poses[i];
        a.block = released[i];
      }
      push.agents.push_back(a);
    }
    std::vector<Trajectory> p2;
    try {
      p2 = clcbs_plan(push, limits, geom, cfg);
    } catch (const PlanningError& e) {
      throw PlanningError("round " + std::to_string(r) + " push phase: " + e.what());
    }
    append(p2);
    out.rounds.push_back({approach_end, out.horizon()});
    for (std::size_t i = 0; i < n; ++i) poses[i] = p2[i].back().pose;
    for (auto [robot, block] : active) {
      blocks[block] = held_block_position(p2[robot].back(), geom, side);
      released[robot] = block;
    }
  }
  // The final waypoint holds position.
  for (auto& tr : out.robots) {
    tr.back().control = {};
    tr.back().kind = PrimitiveKind::kWait;
  }
  insert_cusp_dwell(out, cfg.cusp_dwell);
  return out;
}

std::string validate_trajectories(const TrajectorySet& set, const RobotGeometry& geom, const ControlLimits& limits,
                                  double block_side, double replay_tol) {
  if (set.robots.empty()) return "no trajectories";
  const std::size_t len = set.robots.front().size();
  for (std::size_t i = 0; i < set.robots.size(); ++i) {
    const Trajectory& tr = set.robots[i];
    const std::string who = "robot " + std::to_string(i);
    if (tr.size() != len) return who + ": horizon differs";
    for (std::size_t k = 0; k < tr.size(); ++k) {
      if (tr[k].t != static_cast<int>(k)) return who + ": non-consecutive timestep at " + std::to_string(k);
      if (!tr[k].control.within(limits, false)) return who + ": control outside limits at " + std::to_string(k);
      if (tr[k].pushing && std::abs(tr[k].control.phi) > limits.phi_max_push + 1e-12)
        return who + ": pushing steering above limit at " + std::to_string(k);
      if (tr[k].pushing && tr[k].control.v < 0) return who + ": reversing while pushing at " + std::to_string(k);
      if (k + 1 < tr.size()) {
        const RobotPose p = step_kinematics(tr[k].pose, tr[k].control, set.dt, geom);
        if (distance(p.position(), tr[k + 1].pose.position()) > replay_tol ||
            std::abs(normalize_angle(p.theta - tr[k + 1].pose.theta)) > replay_tol)
          return who + ": replay mismatch at " + std::to_string(k);
      }
    }
  }
  if (auto c = find_conflict(set.robots, geom, block_side, 0.0))
    return "robots " + std::to_string(c->a) + " and " + std::to_string(c->b) + " collide at step " +
           std::to_string(c->t);
  return {};
}

}  // namespace mrpush::planner
