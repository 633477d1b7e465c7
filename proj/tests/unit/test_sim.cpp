#include <gtest/gtest.h>

#include <cmath>

#include "mrpush/planner.hpp"
#include "mrpush/sim.hpp"

using namespace mrpush;
using namespace mrpush::sim;

namespace {

const RobotGeometry kGeom;
const PushPhysics& physics() {
  static const PushPhysics p = PushPhysics::make(0.6, 0.5, 0.1, kGeom);
  return p;
}

Scenario single_push(Vec2 block, Vec2 goal, RobotPose robot) {
  Scenario s;
  s.id = "unit";
  s.workspace = {0, 0, 4, 8};
  s.robots = {robot};
  s.blocks_start = {block};
  s.blocks_goal = {goal};
  return s;
}

// Robot holding block 0 centred on its bumper.
WorldState held(RobotPose p, double lateral = 0.0) {
  WorldState w;
  w.robots = {p};
  w.controls = {Control{}};
  w.blocks = {held_block(p, kGeom, 0.1, lateral)};
  w.contacts[0] = {0, lateral};
  return w;
}

std::vector<BlockState> drive(WorldState w, Control u, int steps, BlockModel model, std::vector<Event>* ev = nullptr) {
  std::vector<BlockState> out;
  TrialConfig cfg;
  for (int k = 0; k < steps; ++k) {
    w = step_world(w, {u}, cfg.dt_sim, kGeom, physics(), model, {{0, 0}}, cfg, ev);
    out.push_back(w.blocks[0]);
  }
  return out;
}

}  // namespace

TEST(Perturb, ZeroRadiusIsIdentity) {
  const Scenario s = single_push({2, 3}, {2, 5}, {2, 1, 0.3});
  const Scenario p = perturb(s, 7, 0.0);
  EXPECT_EQ(p.robots, s.robots);
}

TEST(Perturb, DeterministicPerSeed) {
  const Scenario s = single_push({2, 3}, {2, 5}, {2, 1, 0.3});
  EXPECT_EQ(perturb(s, 11, 0.05).robots, perturb(s, 11, 0.05).robots);
  EXPECT_NE(perturb(s, 11, 0.05).robots, perturb(s, 12, 0.05).robots);
}

TEST(Perturb, UniformDiscStatistics) {
  // Uniform disc: radial density 2r/R^2, mean 2R/3, variance R^2/18.
  const double R = 0.05;
  const Scenario s = single_push({2, 3}, {2, 5}, {2, 1, 0.3});
  const int n = 1000;
  double sum = 0, max_d = 0;
  for (int k = 0; k < n; ++k) {
    const auto p = perturb(s, 1000 + k, R);
    EXPECT_EQ(p.robots[0].theta, 0.3);
    EXPECT_EQ(p.blocks_start, s.blocks_start);
    const double d = distance(p.robots[0].position(), s.robots[0].position());
    sum += d;
    max_d = std::max(max_d, d);
  }
  const double sigma = R / std::sqrt(18.0) / std::sqrt(double(n));
  EXPECT_LE(max_d, R);
  EXPECT_NEAR(sum / n, 2.0 * R / 3.0, 3 * sigma);
}

TEST(Perturb, RejectsNegativeRadius) {
  const Scenario s = single_push({2, 3}, {2, 5}, {2, 1, 0.3});
  EXPECT_THROW(perturb(s, 0, -0.01), ValidationError);
}

TEST(StepWorld, StickyStraightPushMovesBlockRigidly) {
  const RobotPose p0{1, 1, 0.4};
  WorldState w = held(p0);
  const Vec2 b0 = w.blocks[0].position();
  const auto blocks = drive(w, {0.4, 0.0}, 50, BlockModel::kSticky);
  const RobotPose p1 = step_euler(p0, {0.4, 0.0}, 1.0, kGeom);  // straight: Euler is exact
  const Vec2 robot_disp = p1.position() - p0.position();
  const Vec2 block_disp = blocks.back().position() - b0;
  EXPECT_NEAR(block_disp.x, robot_disp.x, 1e-12);
  EXPECT_NEAR(block_disp.y, robot_disp.y, 1e-12);
}

TEST(StepWorld, StickySlipsOutsideStableSet) {
  std::vector<Event> ev;
  WorldState w = held({1, 1, 0});
  TrialConfig cfg;
  const WorldState next = step_world(w, {{0.4, 0.3}}, cfg.dt_sim, kGeom, physics(), BlockModel::kSticky, {}, cfg, &ev);
  EXPECT_TRUE(next.contacts.empty());
  ASSERT_EQ(ev.size(), 1u);
  EXPECT_EQ(ev[0].kind, EventKind::kSlip);
  EXPECT_EQ(next.blocks[0].x, w.blocks[0].x);
  EXPECT_EQ(next.blocks[0].y, w.blocks[0].y);
}

TEST(StepWorld, ReverseReleases) {
  std::vector<Event> ev;
  TrialConfig cfg;
  const WorldState next =
      step_world(held({1, 1, 0}), {{-0.2, 0.0}}, cfg.dt_sim, kGeom, physics(), BlockModel::kSticky, {}, cfg, &ev);
  EXPECT_TRUE(next.contacts.empty());
  ASSERT_EQ(ev.size(), 1u);
  EXPECT_EQ(ev[0].kind, EventKind::kRelease);
}

TEST(StepWorld, QuasistaticSlideMatchesContactResponse) {
  const double limit = physics().stable.phi_max_push;
  TrialConfig cfg;
  const double lever = kGeom.block_lever(0.1);
  double prev = 0.0;
  for (double excess : {0.01, 0.03, 0.06}) {
    const double phi = limit + excess;
    WorldState w = held({1, 1, 0});
    const WorldState next =
        step_world(w, {{0.4, phi}}, cfg.dt_sim, kGeom, physics(), BlockModel::kQuasistatic, {}, cfg, nullptr);
    ASSERT_EQ(next.contacts.count(0), 1u);
    const double slide = std::abs(next.contacts.at(0).lateral);
    // Oracle: the push-module mapping evaluated directly.
    const auto resp = push::contact_response(physics().edges, physics().ls,
                                             push::pusher_twist(std::tan(phi) / kGeom.wheelbase, {-lever, 0.0}));
    EXPECT_NEAR(slide, std::abs(resp.slide) * 0.4 * cfg.dt_sim, 1e-15);
    EXPECT_GT(slide, prev);
    prev = slide;
  }
  for (double phi : {0.0, 0.1, -0.15, limit * (1 - 1e-9), -limit * (1 - 1e-9)}) {
    const WorldState next = step_world(held({1, 1, 0}), {{0.4, phi}}, cfg.dt_sim, kGeom, physics(),
                                       BlockModel::kQuasistatic, {}, cfg, nullptr);
    EXPECT_EQ(next.contacts.at(0).lateral, 0.0) << phi;
  }
}

TEST(StepWorld, QuasistaticEventuallySlidesOff) {
  std::vector<Event> ev;
  const auto blocks = drive(held({1, 1, 0}), {0.4, 0.314}, 2000, BlockModel::kQuasistatic, &ev);
  ASSERT_FALSE(ev.empty());
  EXPECT_EQ(ev.back().kind, EventKind::kSlip);
}

TEST(StepWorld, ModelsAgreeInsideStableSet) {
  const double phi = 0.17;
  ASSERT_LE(phi, physics().stable.phi_max_push);
  for (Control u : {Control{0.4, 0.0}, Control{0.4, phi}, Control{0.4, -phi}}) {
    const int steps = static_cast<int>(std::round(5.0 / (u.v * 0.02)));  // 5 m of travel
    const auto a = drive(held({1, 1, 0}), u, steps, BlockModel::kSticky);
    const auto b = drive(held({1, 1, 0}), u, steps, BlockModel::kQuasistatic);
    double worst = 0;
    for (int k = 0; k < steps; ++k) worst = std::max(worst, distance(a[k].position(), b[k].position()));
    EXPECT_LE(worst, 1e-3) << u.phi;
  }
}

TEST(StepWorld, AcquiresOnlyAllowedBlockFromBehind) {
  const RobotPose p{1, 1, 0};
  const double lever = kGeom.block_lever(0.1);
  WorldState w;
  w.robots = {p};
  w.controls = {Control{}};
  w.blocks = {{1 + lever + 0.01, 1.02, 0.05, 0.1}};
  TrialConfig cfg;
  std::vector<Event> ev;
  auto next = step_world(w, {{0.0, 0.0}}, cfg.dt_sim, kGeom, physics(), BlockModel::kSticky, {{0, 0}}, cfg, &ev);
  EXPECT_TRUE(next.contacts.empty()) << "needs forward speed";
  next = step_world(w, {{0.2, 0.0}}, cfg.dt_sim, kGeom, physics(), BlockModel::kSticky, {}, cfg, &ev);
  EXPECT_TRUE(next.contacts.empty()) << "not permitted";
  next = step_world(w, {{0.2, 0.0}}, cfg.dt_sim, kGeom, physics(), BlockModel::kSticky, {{0, 0}}, cfg, &ev);
  ASSERT_EQ(next.contacts.count(0), 1u);
  EXPECT_NEAR(next.contacts.at(0).lateral, 0.02, 1e-12);
  EXPECT_NEAR(next.blocks[0].x, next.robots[0].x + lever, 1e-12);
  EXPECT_EQ(ev.back().kind, EventKind::kContact);
}

TEST(Trial, BlockAlreadyAtGoal) {
  const Scenario s = single_push({2, 4}, {2.05, 4}, {2, 1, kPi / 2});
  planner::TrajectorySet plan;
  plan.robots = {{planner::TimedWaypoint{0, s.robots[0]}}};
  TrialConfig cfg;
  const auto rec = run_trial(s, plan, cfg, {}, {}, kGeom, physics());
  EXPECT_TRUE(rec.success);
  EXPECT_NEAR(rec.makespan, 0.0, 1e-12);
  EXPECT_TRUE(std::isnan(rec.min_distance));
}

TEST(Trial, StraightPushRespectsSpeedBound) {
  const Scenario s = single_push({2, 2}, {2, 4}, {2, 0.8, kPi / 2});
  const ControlLimits limits;
  const auto plan = planner::plan_two_phase(s, {{{0, 0}}}, limits, kGeom);
  TrialConfig cfg;
  cfg.perturbation_radius = 0.0;
  const auto rec = run_trial(s, plan, cfg, {}, limits, kGeom, physics());
  ASSERT_TRUE(rec.success) << (rec.failure ? to_string(*rec.failure) : "");
  const auto pre = planner::prepush_pose(s.blocks_start[0], s.blocks_goal[0], kGeom, s.block_side);
  const double approach = distance(pre->position(), s.robots[0].position());
  EXPECT_GE(rec.makespan, (approach + 2.0 - cfg.success_tol) / limits.v_max);
  EXPECT_GE(rec.makespan, 5.0);
  EXPECT_LE(distance(rec.trace.back().blocks[0].position(), s.blocks_goal[0]), cfg.success_tol);
}

TEST(Trial, DeterministicAndMinDistanceFromTrace) {
  Scenario s;
  s.id = "pair";
  s.workspace = {0, 0, 4, 6};
  s.robots = {{1, 0.8, kPi / 2}, {3, 0.8, kPi / 2}};
  s.blocks_start = {{1, 2.2}, {3, 2.2}};
  s.blocks_goal = {{1, 4}, {3, 4}};
  const ControlLimits limits;
  const auto plan = planner::plan_two_phase(s, {{{0, 0}, {1, 1}}}, limits, kGeom);
  TrialConfig cfg;
  cfg.seed = 3;
  const auto a = run_trial(s, plan, cfg, {}, limits, kGeom, physics());
  const auto b = run_trial(s, plan, cfg, {}, limits, kGeom, physics());
  ASSERT_TRUE(a.success);
  EXPECT_EQ(a.makespan, b.makespan);
  ASSERT_EQ(a.trace.size(), b.trace.size());
  for (std::size_t k = 0; k < a.trace.size(); ++k) EXPECT_EQ(a.trace[k].robots, b.trace[k].robots);
  double m = INFINITY;
  for (const auto& smp : a.trace) m = std::min(m, min_pairwise_distance(smp.robots));
  EXPECT_EQ(a.min_distance, m);
}

TEST(Trial, RejectsBadConfig) {
  const Scenario s = single_push({2, 4}, {2.05, 4}, {2, 1, kPi / 2});
  planner::TrajectorySet plan;
  plan.robots = {{planner::TimedWaypoint{0, s.robots[0]}}};
  TrialConfig cfg;
  cfg.dt_sim = 0.03;
  EXPECT_THROW(run_trial(s, plan, cfg, {}, {}, kGeom, physics()), ValidationError);
}
