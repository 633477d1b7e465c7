#include "mrpush/sim.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <optional>
#include <random>
#include <string>

#include "mrpush/errors.hpp"
#include "mrpush/geometry.hpp"

namespace mrpush::sim {

void TrialConfig::validate() const {
  if (perturbation_radius < 0) throw ValidationError("trial: perturbation_radius must be non-negative");
  if (!(dt_sim > 0) || !(mpc_tick > 0)) throw ValidationError("trial: timesteps must be positive");
  const double ratio = mpc_tick / dt_sim;
  if (std::abs(ratio - std::round(ratio)) > 1e-9 || std::round(ratio) < 1)
    throw ValidationError("trial: dt_sim must divide the MPC tick");
  if (!(success_tol > 0)) throw ValidationError("trial: success_tol must be positive");
  if (contact_gap < 0 || contact_alignment < 0) throw ValidationError("trial: contact tolerances must be non-negative");
}

const char* to_string(EventKind k) {
  switch (k) {
    case EventKind::kContact: return "contact";
    case EventKind::kRelease: return "release";
    case EventKind::kSlip: return "slip";
    case EventKind::kMiss: return "miss";
    case EventKind::kCollision: return "collision";
    case EventKind::kBoundary: return "boundary";
    case EventKind::kTimeout: return "timeout";
    case EventKind::kSuccess: return "success";
  }
  return "?";
}

bool is_failure(EventKind k) {
  return k == EventKind::kSlip || k == EventKind::kMiss || k == EventKind::kCollision ||
         k == EventKind::kBoundary || k == EventKind::kTimeout;
}

Scenario perturb(const Scenario& scenario, std::uint64_t seed, double radius, int max_retries) {
  if (radius < 0) throw ValidationError("perturb: radius must be non-negative");
  Scenario out = scenario;
  if (radius == 0) return out;
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  const RobotGeometry geom;
  for (std::size_t i = 0; i < out.robots.size(); ++i) {
    bool placed = false;
    for (int attempt = 0; attempt <= max_retries && !placed; ++attempt) {
      const double r = radius * std::sqrt(unit(rng));
      const double a = 2.0 * kPi * unit(rng);
      RobotPose p = scenario.robots[i];
      p.x += r * std::cos(a);
      p.y += r * std::sin(a);
      if (scenario.workspace.strictly_contains(p.position())) {
        out.robots[i] = p;
        placed = true;
      }
    }
    if (!placed) throw ValidationError("perturb: robot " + std::to_string(i) + " could not be placed in the workspace");
  }
  return out;
}

PushPhysics PushPhysics::make(double mu, double support_mu, double block_side, const RobotGeometry& geom) {
  PushPhysics p;
  const auto contact = push::ContactModel::line_contact(mu, block_side, support_mu);
  p.ls = push::block_limit_surface(block_side, support_mu);
  p.edges = push::friction_cone_edges(contact);
  p.stable = push::stable_set(contact, p.ls, geom);
  return p;
}

namespace {

double face_alignment(double robot_heading, double block_yaw) {
  // Any face of a square block will do.
  return std::abs(std::remainder(robot_heading - block_yaw, 0.5 * kPi));
}

}  // namespace

WorldState step_world(const WorldState& state, const std::vector<Control>& controls, double dt,
                      const RobotGeometry& geom, const PushPhysics& physics, BlockModel model,
                      const ContactPermissions& allowed, const TrialConfig& cfg, std::vector<Event>* events) {
  WorldState next = state;
  next.t = state.t + dt;
  next.controls = controls;
  auto log = [&](EventKind k, int robot, int other, std::string detail = {}) {
    if (events) events->push_back({next.t, k, robot, other, std::move(detail)});
  };

  for (std::size_t i = 0; i < state.robots.size(); ++i) {
    const int ri = static_cast<int>(i);
    const Control u = controls[i];
    const RobotPose pose = step_euler(state.robots[i], u, dt, geom);
    next.robots[i] = pose;
    auto it = next.contacts.find(ri);
    if (it == next.contacts.end()) continue;
    Contact& c = it->second;
    BlockState& block = next.blocks[c.block];
    if (u.v < 0) {
      log(EventKind::kRelease, ri, c.block, "reversed");
      next.contacts.erase(it);
      continue;
    }
    if (u.v > 0) {
      if (model == BlockModel::kSticky) {
        if (std::abs(u.phi) > physics.stable.phi_max_push + 1e-12) {
          log(EventKind::kSlip, ri, c.block, "steering outside stable set");
          next.contacts.erase(it);
          continue;
        }
      } else {
        const double lever = geom.block_lever(block.side);
        const double k = std::tan(u.phi) / geom.wheelbase;
        const auto resp = push::contact_response(physics.edges, physics.ls, push::pusher_twist(k, {-lever, -c.lateral}));
        if (resp.broken) {
          log(EventKind::kSlip, ri, c.block, "line contact broken");
          next.contacts.erase(it);
          continue;
        }
        const double lateral = c.lateral + resp.slide * u.v * dt;
        if (std::abs(lateral) > 0.5 * (geom.bumper_width - block.side) + 1e-12) {
          log(EventKind::kSlip, ri, c.block, "slid off the bumper");
          next.contacts.erase(it);
          continue;
        }
        c.lateral = lateral;
      }
    }
    block = held_block(pose, geom, block.side, c.lateral);
  }

  // Contact acquisition on the assigned block only.
  for (std::size_t i = 0; i < next.robots.size(); ++i) {
    const int ri = static_cast<int>(i);
    if (next.contacts.count(ri) || !(controls[i].v > 0)) continue;
    auto al = allowed.find(ri);
    if (al == allowed.end() || al->second < 0) continue;
    const int b = al->second;
    const bool taken = std::any_of(next.contacts.begin(), next.contacts.end(),
                                   [&](const auto& kv) { return kv.second.block == b; });
    if (taken) continue;
    BlockState& block = next.blocks[b];
    const RobotPose& pose = next.robots[i];
    const Vec2 local = pose.to_local(block.position());
    const double gap = local.x - geom.block_lever(block.side);
    if (gap > cfg.contact_gap || gap < -0.5 * block.side) continue;
    if (std::abs(local.y) > 0.5 * (geom.bumper_width - block.side) + 1e-12) continue;
    if (face_alignment(pose.theta, block.yaw) > cfg.contact_alignment) continue;
    block = held_block(pose, geom, block.side, local.y);
    next.contacts[ri] = {b, local.y};
    log(EventKind::kContact, ri, b);
  }
  return next;
}

namespace {

Footprint world_footprint(const WorldState& w, std::size_t i, const RobotGeometry& geom) {
  auto it = w.contacts.find(static_cast<int>(i));
  if (it == w.contacts.end()) return robot_footprint(w.robots[i], geom);
  return robot_footprint(w.robots[i], geom, w.blocks[it->second.block]);
}

std::optional<Event> detect_failure(const WorldState& w, const Workspace& ws, const RobotGeometry& geom,
                                    const ContactPermissions& allowed) {
  const std::size_t n = w.robots.size();
  std::vector<Footprint> fps;
  for (std::size_t i = 0; i < n; ++i) fps.push_back(world_footprint(w, i, geom));
  std::vector<int> holder(w.blocks.size(), -1);
  for (const auto& [r, c] : w.contacts) holder[c.block] = r;

  for (std::size_t i = 0; i < n; ++i)
    if (!fps[i].inside(ws)) return Event{w.t, EventKind::kBoundary, static_cast<int>(i), -1, "left the workspace"};
  for (std::size_t j = 0; j < w.blocks.size(); ++j)
    if (!ws.contains(w.blocks[j].position()))
      return Event{w.t, EventKind::kBoundary, holder[j], static_cast<int>(j), "block left the workspace"};

  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t k = i + 1; k < n; ++k)
      if (fps[i].overlaps(fps[k]))
        return Event{w.t, EventKind::kCollision, static_cast<int>(i), static_cast<int>(k), "robot-robot"};

  for (std::size_t j = 0; j < w.blocks.size(); ++j) {
    if (holder[j] >= 0) continue;
    const Rect br = block_rect(w.blocks[j]);
    for (std::size_t i = 0; i < n; ++i) {
      if (!fps[i].overlaps(br)) continue;
      auto al = allowed.find(static_cast<int>(i));
      const bool target = al != allowed.end() && al->second == static_cast<int>(j);
      return Event{w.t, target ? EventKind::kMiss : EventKind::kCollision, static_cast<int>(i), static_cast<int>(j),
                   target ? "struck the assigned block off the bumper" : "hit a free block"};
    }
  }
  return std::nullopt;
}

bool all_delivered(const WorldState& w, const Scenario& s, double tol) {
  for (std::size_t j = 0; j < w.blocks.size(); ++j)
    if (distance(w.blocks[j].position(), s.blocks_goal[j]) > tol) return false;
  return true;
}

}  // namespace

TrialRecord run_trial(const Scenario& scenario, const planner::TrajectorySet& plan, const TrialConfig& cfg,
                      const mpc::MpcConfig& mpc_cfg, const ControlLimits& limits, const RobotGeometry& geom,
                      const PushPhysics& physics) {
  cfg.validate();
  mpc_cfg.validate();
  const std::size_t n = scenario.robots.size();
  if (plan.robots.size() != n) throw ValidationError("trial: plan and scenario robot counts differ");

  const Scenario start = perturb(scenario, cfg.seed, cfg.perturbation_radius, cfg.max_resample);
  WorldState w;
  w.robots = start.robots;
  w.controls.assign(n, Control{});
  for (std::size_t j = 0; j < scenario.blocks_start.size(); ++j) {
    const Vec2 d = scenario.blocks_goal[j] - scenario.blocks_start[j];
    // Orientation is not tracked by the task; start blocks square to their push direction.
    const double yaw = d.norm() > 0 ? std::atan2(d.y, d.x) : 0.0;
    w.blocks.push_back({scenario.blocks_start[j].x, scenario.blocks_start[j].y, yaw, scenario.block_side});
  }

  std::vector<mpc::ReferencePath> refs;
  for (const auto& tr : plan.robots) refs.push_back(mpc::ReferencePath::from_trajectory(tr, plan.dt));

  // Blocks each robot pushes, in round order.
  std::vector<std::vector<int>> queue(n);
  for (const auto& round : plan.assignment)
    for (auto [robot, block] : round)
      if (robot >= 0 && robot < static_cast<int>(n)) queue[robot].push_back(block);

  const double timeout = cfg.timeout > 0 ? cfg.timeout : 1.5 * plan.makespan() + 20.0;
  const int substeps = static_cast<int>(std::round(cfg.mpc_tick / cfg.dt_sim));

  TrialRecord rec;
  auto sample = [&]() { rec.trace.push_back({w.t, w.robots, w.controls, w.blocks}); };
  auto permissions = [&]() {
    ContactPermissions p;
    for (std::size_t i = 0; i < n; ++i) {
      for (int b : queue[i]) {
        if (distance(w.blocks[b].position(), scenario.blocks_goal[b]) > cfg.success_tol) {
          p[static_cast<int>(i)] = b;
          break;
        }
      }
    }
    return p;
  };
  auto finish = [&]() {
    sample();
    rec.min_distance = std::numeric_limits<double>::quiet_NaN();
    if (n >= 2) {
      double m = std::numeric_limits<double>::infinity();
      for (const auto& s : rec.trace) m = std::min(m, min_pairwise_distance(s.robots));
      rec.min_distance = m;
    }
    return rec;
  };

  if (all_delivered(w, scenario, cfg.success_tol)) {
    rec.success = true;
    rec.makespan = 0.0;
    rec.events.push_back({0.0, EventKind::kSuccess, -1, -1, {}});
    return finish();
  }

  while (true) {
    if (w.t >= timeout - 1e-9) {
      rec.failure = EventKind::kTimeout;
      rec.events.push_back({w.t, EventKind::kTimeout, -1, -1, {}});
      return finish();
    }
    sample();
    auto allowed = permissions();
    std::vector<Control> u(n);
    for (std::size_t i = 0; i < n; ++i) {
      mpc::WorldSnapshot snap;
      snap.pose = w.robots[i];
      snap.ref = &refs[i];
      snap.t = w.t;
      for (std::size_t k = 0; k < n; ++k) {
        if (k == i) continue;
        const RobotPose& o = w.robots[k];
        snap.others.push_back({o, Vec2{std::cos(o.theta), std::sin(o.theta)} * w.controls[k].v});
      }
      const auto& tr = plan.robots[i];
      // Holding a block, or about to touch one within this tick, restricts steering
      // whatever the schedule says, unless the schedule backs away from it.
      const auto& due = tr[std::min(refs[i].index_at(w.t), tr.size() - 1)];
      bool pushing = due.pushing || (w.contacts.count(static_cast<int>(i)) > 0 && !(due.control.v < 0));
      if (auto al = allowed.find(static_cast<int>(i)); !pushing && !(due.control.v < 0) && al != allowed.end()) {
        const BlockState& b = w.blocks[al->second];
        const Vec2 local = w.robots[i].to_local(b.position());
        const double gap = local.x - geom.block_lever(b.side);
        pushing = gap <= cfg.contact_gap + limits.v_max * cfg.mpc_tick && gap >= -0.5 * b.side &&
                  std::abs(local.y) <= 0.5 * geom.bumper_width;
      }
      u[i] = mpc::solve(snap, mpc_cfg, limits, geom, pushing).controls.front();
    }
    for (int s = 0; s < substeps; ++s) {
      if (s > 0) allowed = permissions();
      w = step_world(w, u, cfg.dt_sim, geom, physics, cfg.block_model, allowed, cfg, &rec.events);
      for (const auto& e : rec.events) {
        if (is_failure(e.kind)) {
          rec.failure = e.kind;
          return finish();
        }
      }
      if (auto f = detect_failure(w, scenario.workspace, geom, allowed)) {
        rec.events.push_back(*f);
        rec.failure = f->kind;
        return finish();
      }
      if (all_delivered(w, scenario, cfg.success_tol)) {
        rec.success = true;
        rec.makespan = w.t;
        rec.events.push_back({w.t, EventKind::kSuccess, -1, -1, {}});
        return finish();
      }
    }
  }
}

}  // namespace mrpush::sim
