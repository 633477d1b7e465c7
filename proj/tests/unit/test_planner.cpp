#include <gtest/gtest.h>

#include <chrono>
#include <cmath>
#include <random>

#include "mrpush/dubins.hpp"
#include "mrpush/planner.hpp"

using namespace mrpush;
using namespace mrpush::planner;

namespace {

double path_length(const Trajectory& tr) {
  double s = 0;
  for (std::size_t k = 1; k < tr.size(); ++k) s += distance(tr[k].pose.position(), tr[k - 1].pose.position());
  return s;
}

TrajectorySet wrap(std::vector<Trajectory> robots) {
  TrajectorySet s;
  s.robots = std::move(robots);
  return s;
}

}  // namespace

TEST(Primitives, Counts) {
  const RobotGeometry g;
  const ControlLimits lim;
  EXPECT_EQ(expand_primitives({0, 0, 0}, Phase::kApproach, lim, g).size(), 7u);
  const auto push = expand_primitives({0, 0, 0}, Phase::kPush, lim, g);
  ASSERT_EQ(push.size(), 4u);
  for (const auto& [m, p] : push) {
    EXPECT_GE(m.arc_length, 0.0);
    EXPECT_LE(std::abs(m.steering), lim.phi_max_push);
  }
}

TEST(Primitives, ForwardUnit) {
  const auto succ = expand_primitives({0, 0, 0}, Phase::kApproach, ControlLimits{}, RobotGeometry{}, 0.25);
  const auto fwd = std::find_if(succ.begin(), succ.end(), [](const auto& s) { return s.first.kind == PrimitiveKind::kFwd; });
  ASSERT_NE(fwd, succ.end());
  EXPECT_NEAR(fwd->second.x, 0.1, 1e-12);
  EXPECT_NEAR(fwd->second.y, 0.0, 1e-12);
  EXPECT_NEAR(fwd->second.theta, 0.0, 1e-12);
  const auto left = std::find_if(succ.begin(), succ.end(), [](const auto& s) { return s.first.kind == PrimitiveKind::kFwdLeft; });
  EXPECT_NEAR(left->first.steering, 0.314, 1e-12);
  EXPECT_GT(left->second.theta, 0.0);
}

TEST(PrePush, Examples) {
  RobotGeometry g;
  g.wheelbase = 0.2;
  g.bumper_offset = 0.125;  // lever 0.2 + 0.125 + 0.05 = 0.375
  auto p = prepush_pose({2, 2}, {4, 2}, g, 0.1);
  ASSERT_TRUE(p);
  EXPECT_NEAR(p->x, 1.625, 1e-12);
  EXPECT_NEAR(p->y, 2.0, 1e-12);
  EXPECT_NEAR(p->theta, 0.0, 1e-12);
  p = prepush_pose({0, 0}, {0, 3}, g, 0.1);
  EXPECT_NEAR(p->x, 0.0, 1e-12);
  EXPECT_NEAR(p->y, -0.375, 1e-12);
  EXPECT_NEAR(p->theta, kPi / 2, 1e-12);
  p = prepush_pose({0, 0}, {1, 1}, g, 0.1);
  EXPECT_NEAR(p->theta, kPi / 4, 1e-12);
  EXPECT_NEAR(p->x, -0.375 * std::sqrt(0.5), 1e-12);
  EXPECT_NEAR(p->y, -0.375 * std::sqrt(0.5), 1e-12);
  EXPECT_FALSE(prepush_pose({1, 1}, {1, 1}, g, 0.1).has_value());
}

TEST(Dubins, EndpointsAndMinimality) {
  std::mt19937_64 rng(5);
  std::uniform_real_distribution<double> u(-3, 3), a(-kPi, kPi);
  for (int i = 0; i < 300; ++i) {
    const RobotPose from{u(rng), u(rng), a(rng)}, to{u(rng), u(rng), a(rng)};
    const auto path = dubins_shortest(from, to, 0.85);
    ASSERT_TRUE(path);
    const RobotPose end = dubins_sample(from, *path, path->length());
    EXPECT_NEAR(end.x, to.x, 1e-9);
    EXPECT_NEAR(end.y, to.y, 1e-9);
    EXPECT_NEAR(normalize_angle(end.theta - to.theta), 0.0, 1e-9);
    EXPECT_GE(path->length(), distance(from.position(), to.position()) - 1e-9);
  }
  const auto straight = dubins_shortest({0, 0, 0}, {2, 0, 0}, 0.85);
  EXPECT_NEAR(straight->length(), 2.0, 1e-9);
}

TEST(ClCbs, SingleRobotStraightCorridor) {
  PhaseProblem pb;
  pb.workspace = {0, 0, 4, 1.0};
  AgentTask a;
  a.start = {0.5, 0.5, 0};
  a.goal.kind = AgentGoal::kPose;
  a.goal.pose = {2.5, 0.5, 0};
  pb.agents = {a};
  const auto out = clcbs_plan(pb, ControlLimits{}, RobotGeometry{});
  ASSERT_EQ(out.size(), 1u);
  EXPECT_NEAR(path_length(out[0]), 2.0, 1e-9);
  for (std::size_t k = 0; k + 1 < out[0].size(); ++k) {
    EXPECT_EQ(out[0][k].kind, PrimitiveKind::kFwd);
    EXPECT_EQ(out[0][k].control.phi, 0.0);
  }
  EXPECT_EQ(out[0].size(), 21u);
}

TEST(ClCbs, StraightPushNeverSteers) {
  PhaseProblem pb;
  pb.phase = Phase::kPush;
  pb.workspace = {0, 0, 4, 6};
  const RobotGeometry g;
  const Vec2 block{2, 1.5};
  pb.blocks = {block};
  AgentTask a;
  a.start = *prepush_pose(block, {2, 4}, g, 0.1);
  a.goal.kind = AgentGoal::kPush;
  a.goal.block_goal = {2, 4};
  a.goal.push_heading = kPi / 2;
  a.block = 0;
  pb.agents = {a};
  const auto out = clcbs_plan(pb, ControlLimits{}, g);
  for (const auto& w : out[0]) {
    EXPECT_EQ(w.control.phi, 0.0);
    EXPECT_TRUE(w.pushing);
  }
  EXPECT_NEAR(distance(held_block_position(out[0].back(), g, 0.1), {2, 4}), 0.0, 1e-9);
}

TEST(ClCbs, HeadOnSwapIsConflictFreeAndNoCheaperThanAlone) {
  PhaseProblem pb;
  pb.workspace = {0, 0, 6, 3};
  AgentTask a, b;
  a.start = {0.6, 1.5, 0};
  a.goal.kind = AgentGoal::kPose;
  a.goal.pose = {4.6, 1.5, 0};
  b.start = {5.4, 1.4, kPi};
  b.goal.kind = AgentGoal::kPose;
  b.goal.pose = {1.4, 1.4, kPi};
  pb.agents = {a, b};
  const RobotGeometry g;
  const ControlLimits lim;
  const auto joint = clcbs_plan(pb, lim, g);
  EXPECT_EQ(validate_trajectories(wrap(joint), g, lim, 0.1), "");
  for (int i = 0; i < 2; ++i) {
    PhaseProblem alone = pb;
    alone.agents = {pb.agents[i]};
    const auto solo = clcbs_plan(alone, lim, g);
    // Compare time to reach the goal window (trailing waits excluded).
    auto arrival = [](const Trajectory& tr) {
      std::size_t k = tr.size() - 1;
      while (k > 0 && tr[k - 1].kind == PrimitiveKind::kWait && tr[k - 1].pose == tr[k].pose) --k;
      return k;
    };
    EXPECT_GE(arrival(joint[i]), arrival(solo[0]));
  }
}

TEST(TwoPhase, AlreadyAtPrePushPose) {
  const RobotGeometry g;
  Scenario s;
  s.blocks_start = {{2, 2}};
  s.blocks_goal = {{2, 4}};
  s.robots = {*prepush_pose({2, 2}, {2, 4}, g, 0.1)};
  const TrajectorySet ts = plan_two_phase(s, {{{0, 0}}}, ControlLimits{}, g);
  ASSERT_EQ(ts.rounds.size(), 1u);
  EXPECT_EQ(ts.rounds[0].approach_end, 0);
  EXPECT_GT(ts.rounds[0].push_end, 0);
  EXPECT_TRUE(ts.robots[0][0].pushing);
  EXPECT_EQ(validate_trajectories(ts, g, ControlLimits{}, 0.1), "");
  EXPECT_LT(distance(held_block_position(ts.robots[0].back(), g, 0.1), {2, 4}), 0.03 + 1e-9);
}

TEST(TwoPhase, BlockAlreadyAtGoal) {
  const RobotGeometry g;
  Scenario s;
  s.blocks_start = {{2, 4}};
  s.blocks_goal = {{2.05, 4}};
  s.robots = {{1, 1, 0}};
  const TrajectorySet ts = plan_two_phase(s, {{{0, 0}}}, ControlLimits{}, g);
  EXPECT_EQ(ts.horizon(), 0);
  EXPECT_FALSE(ts.robots[0][0].pushing);
}

TEST(TwoPhase, SwapScenarioMakespanScale) {
  const RobotGeometry g;
  const ControlLimits lim;
  Scenario s;
  s.robots = {{0.7, 1.0, 0.0}, {3.3, 5.0, kPi}};
  s.blocks_start = {{1.2, 2.2}, {2.8, 3.8}};
  s.blocks_goal = {{1.2, 4.6}, {2.8, 1.4}};
  const auto t0 = std::chrono::steady_clock::now();
  const TrajectorySet ts = plan_two_phase(s, {{{0, 0}, {1, 1}}}, lim, g);
  const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  EXPECT_EQ(validate_trajectories(ts, g, lim, 0.1), "");
  EXPECT_GT(ts.makespan(), 5.0);
  EXPECT_LT(ts.makespan(), 60.0);
  EXPECT_LT(secs, 60.0);
  for (int j = 0; j < 2; ++j)
    EXPECT_LT(distance(held_block_position(ts.robots[j].back(), g, 0.1), s.blocks_goal[j]), 0.03 + 1e-9);
}

TEST(TwoPhase, Deterministic) {
  const RobotGeometry g;
  Scenario s;
  s.robots = {{0.7, 1.0, 0.0}, {3.3, 1.0, kPi}};
  s.blocks_start = {{1.5, 2.5}, {2.5, 2.5}};
  s.blocks_goal = {{1.5, 4.5}, {2.5, 4.5}};
  const auto a = plan_two_phase(s, {{{0, 0}, {1, 1}}}, ControlLimits{}, g);
  const auto b = plan_two_phase(s, {{{0, 0}, {1, 1}}}, ControlLimits{}, g);
  ASSERT_EQ(a.robots.size(), b.robots.size());
  for (std::size_t i = 0; i < a.robots.size(); ++i) {
    ASSERT_EQ(a.robots[i].size(), b.robots[i].size());
    for (std::size_t k = 0; k < a.robots[i].size(); ++k) EXPECT_EQ(a.robots[i][k].pose, b.robots[i][k].pose);
  }
}

TEST(TwoPhase, ApproachEndsWithStraightRunIn) {
  const RobotGeometry g;
  const PlannerConfig cfg;
  Scenario s;
  s.robots = {{1.0, 0.4, kPi / 2}};
  s.blocks_start = {{1.75, 3.0}};
  s.blocks_goal = {{1.75, 5.0}};
  const TrajectorySet ts = plan_two_phase(s, {{{0, 0}}}, ControlLimits{}, g, cfg);
  EXPECT_EQ(validate_trajectories(ts, g, ControlLimits{}, 0.1), "");
  const int end = ts.rounds[0].approach_end;
  const int k = static_cast<int>(std::round(cfg.approach_run_in / (ControlLimits{}.v_max * cfg.dt_plan)));
  ASSERT_GE(end, k);
  for (int t = end - k; t < end; ++t) {
    EXPECT_EQ(ts.robots[0][t].kind, PrimitiveKind::kFwd) << t;
    EXPECT_DOUBLE_EQ(ts.robots[0][t].control.phi, 0.0);
  }
}

TEST(TwoPhase, SecondRoundBacksAwayAndEveryoneHoldsAtCusps) {
  const RobotGeometry g;
  const PlannerConfig cfg;
  Scenario s;
  s.robots = {{1.0, 0.4, kPi / 2}, {3.4, 0.4, kPi / 2}};
  s.blocks_start = {{1.0, 2.25}, {2.2, 2.25}, {3.4, 2.25}};
  s.blocks_goal = {{1.0, 4.0}, {2.2, 4.0}, {3.4, 4.0}};
  const TrajectorySet ts = plan_two_phase(s, {{{0, 0}, {1, 2}}, {{0, 1}}}, ControlLimits{}, g, cfg);
  EXPECT_EQ(validate_trajectories(ts, g, ControlLimits{}, 0.1), "");
  ASSERT_EQ(ts.rounds.size(), 2u);
  // Robot 0 leaves its first block in reverse; the move off the block is not a push.
  const int k0 = ts.rounds[0].push_end;
  EXPECT_FALSE(ts.robots[0][k0].pushing);
  std::size_t cusps = 0;
  for (std::size_t i = 0; i < ts.robots.size(); ++i) {
    double last = 0;
    for (std::size_t k = 0; k < ts.robots[i].size(); ++k) {
      const double v = ts.robots[i][k].control.v;
      if (v != 0 && last != 0 && (v > 0) != (last > 0)) {
        ++cusps;
        ASSERT_GE(k, static_cast<std::size_t>(cfg.cusp_dwell));
        for (std::size_t j = 0; j < ts.robots.size(); ++j)
          for (std::size_t h = k - cfg.cusp_dwell; h < k; ++h) EXPECT_EQ(ts.robots[j][h].control.v, 0.0);
      }
      if (v != 0) last = v;
    }
  }
  EXPECT_GE(cusps, 1u);
  EXPECT_LT(distance(held_block_position(ts.robots[0].back(), g, 0.1), s.blocks_goal[1]), 0.03 + 1e-9);
}
