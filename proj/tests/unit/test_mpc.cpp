#include <gtest/gtest.h>

#include <cmath>
#include <random>

#include "mrpush/errors.hpp"
#include "mrpush/mpc.hpp"

using namespace mrpush;
using namespace mrpush::mpc;

namespace {

ReferencePath straight(double length, double dt = 0.25, double step = 0.1) {
  std::vector<Vec2> pts;
  const int n = static_cast<int>(std::round(length / step));
  for (int i = 0; i <= n; ++i) pts.push_back({i * step, 0.0});
  return ReferencePath(pts, dt);
}

double min_separation(RobotPose a, Control ua, RobotPose b, Vec2 vb, const MpcConfig& cfg, const RobotGeometry& g) {
  double m = distance(a.position(), b.position());
  for (int k = 1; k <= cfg.horizon; ++k) {
    a = step_kinematics(a, ua, cfg.dt, g);
    m = std::min(m, distance(a.position(), b.position() + vb * (k * cfg.dt)));
  }
  return m;
}

}  // namespace

TEST(CrossTrack, Examples) {
  const ReferencePath ref = ReferencePath({{0, 0}, {1, 0}, {2, 0}}, 0.25);
  EXPECT_DOUBLE_EQ(cross_track_error({0.5, 0, 0}, ref), 0.0);
  EXPECT_NEAR(cross_track_error({1, 0.2, 0}, ref), 0.2, 1e-12);
  EXPECT_NEAR(cross_track_error({3, 1, 0}, ref), std::sqrt(2.0), 1e-12);
}

TEST(TimingCost, Examples) {
  const ReferencePath ref = straight(4.0);
  // Progress 0.4 m/s: 1.0 m planned at t = 2.5 s.
  EXPECT_NEAR(timing_cost({1.0, 0, 0}, ref, 2.5), 0.0, 1e-12);
  EXPECT_NEAR(timing_cost({0.8, 0, 0}, ref, 2.5), 0.2, 1e-12);
  EXPECT_NEAR(timing_cost({1.3, 0, 0}, ref, 2.5), -0.3, 1e-12);
  EXPECT_NEAR(ref.progress_at(100.0), 4.0, 1e-12);
}

TEST(CollisionCost, Examples) {
  const Vec2 a[] = {{0.7, 0}};
  EXPECT_EQ(collision_cost({0, 0}, a, 0.6), 0.0);
  const Vec2 b[] = {{0.4, 0}};
  EXPECT_NEAR(collision_cost({0, 0}, b, 0.6), 0.2, 1e-12);
  const Vec2 c[] = {{0.5, 0}, {0, 0.3}};
  EXPECT_NEAR(collision_cost({0, 0}, c, 0.6), 0.4, 1e-12);
  const Vec2 d[] = {{0.6, 0}};
  EXPECT_EQ(collision_cost({0, 0}, d, 0.6), 0.0);
}

TEST(Candidates, GridAndPushClipping) {
  const MpcConfig cfg;
  const ControlLimits lim;
  const auto free = candidate_controls(cfg, lim, false);
  EXPECT_EQ(free.size(), 55u);
  const auto push = candidate_controls(cfg, lim, true);
  EXPECT_EQ(push.size(), 55u);
  for (const auto& u : push) {
    EXPECT_LE(std::abs(u.phi), lim.phi_max_push + 1e-15);
    EXPECT_GE(u.v, 0.0);
  }
  MpcConfig bad;
  bad.n_phi = 0;
  EXPECT_THROW(candidate_controls(bad, lim, false), ValidationError);
}

TEST(Solve, TracksUnperturbedReference) {
  const ReferencePath ref = straight(5.0);
  WorldSnapshot s;
  s.pose = {1.0, 0, 0};
  s.ref = &ref;
  s.t = 2.5;
  const auto sol = solve(s, MpcConfig{}, ControlLimits{}, RobotGeometry{}, false);
  ASSERT_EQ(sol.controls.size(), 10u);
  EXPECT_DOUBLE_EQ(sol.controls[0].v, 0.4);
  EXPECT_DOUBLE_EQ(sol.controls[0].phi, 0.0);
  // Horizon-truncation floor: on schedule every term vanishes.
  EXPECT_NEAR(sol.cost, 0.0, 1e-9);
}

TEST(Solve, PushingRespectsLimit) {
  std::mt19937_64 rng(4);
  std::uniform_real_distribution<double> off(-0.3, 0.3), ang(-0.6, 0.6);
  const ReferencePath ref = ReferencePath({{0, 0}, {0.5, 0.3}, {1.0, 0.8}, {1.3, 1.5}}, 0.25);
  for (int i = 0; i < 50; ++i) {
    WorldSnapshot s;
    s.pose = {off(rng), off(rng), ang(rng)};
    s.ref = &ref;
    s.t = 0.1 * i;
    const auto sol = solve(s, MpcConfig{}, ControlLimits{}, RobotGeometry{}, true);
    for (const auto& u : sol.controls) EXPECT_LE(std::abs(u.phi), 0.17 + 1e-15);
  }
}

TEST(Solve, EmptyNeighbourSetMatchesZeroCollisionWeight) {
  std::mt19937_64 rng(8);
  std::uniform_real_distribution<double> pos(0.0, 3.0), ang(-kPi, kPi), vel(-0.4, 0.4);
  const ReferencePath ref = ReferencePath({{0.5, 0.5}, {1.0, 0.9}, {1.6, 1.2}, {2.2, 1.3}, {2.8, 1.3}}, 0.25);
  MpcConfig gp;
  gp.a_col = 0.0;
  for (int i = 0; i < 200; ++i) {
    WorldSnapshot s;
    s.pose = {pos(rng), pos(rng), ang(rng)};
    s.ref = &ref;
    s.t = 0.05 * i;
    for (int k = 0; k < 3; ++k) s.others.push_back({{pos(rng), pos(rng), ang(rng)}, {vel(rng), vel(rng)}});
    WorldSnapshot alone = s;
    alone.others.clear();
    const bool pushing = i % 2;
    EXPECT_EQ(solve(s, gp, ControlLimits{}, RobotGeometry{}, pushing).controls,
              solve(alone, gp, ControlLimits{}, RobotGeometry{}, pushing).controls);
  }
}

TEST(Solve, CollisionTermWidensSeparation) {
  // Two robots approach head-on, side by side, inside d_thr. With a single
  // neighbour the linear timing weight (20) outweighs the collision slope (15)
  // for an on-schedule robot, so the pair is what makes the term bite.
  const RobotGeometry g;
  const ReferencePath ref = straight(4.0);
  WorldSnapshot s;
  s.pose = {1.0, 0.0, 0.0};
  s.ref = &ref;
  s.t = 2.5;
  s.others.push_back({{1.55, 0.1, kPi}, {-0.2, 0.0}});
  s.others.push_back({{1.55, -0.1, kPi}, {-0.2, 0.0}});
  MpcConfig ca, gp;
  gp.a_col = 0.0;
  const Control u_ca = solve(s, ca, ControlLimits{}, g, false).controls[0];
  const Control u_gp = solve(s, gp, ControlLimits{}, g, false).controls[0];
  auto sep = [&](Control u) {
    double m = 1e9;
    for (const auto& o : s.others) m = std::min(m, min_separation(s.pose, u, o.pose, o.velocity, ca, g));
    return m;
  };
  EXPECT_NE(u_ca, u_gp);
  EXPECT_GT(sep(u_ca), sep(u_gp));
}

TEST(Solve, WeightScalingKeepsArgmin) {
  std::mt19937_64 rng(13);
  std::uniform_real_distribution<double> pos(0.0, 3.0), ang(-kPi, kPi), vel(-0.4, 0.4);
  const ReferencePath ref = ReferencePath({{0.5, 0.5}, {1.0, 0.9}, {1.6, 1.2}, {2.2, 1.3}, {2.8, 1.3}}, 0.25);
  for (int i = 0; i < 100; ++i) {
    WorldSnapshot s;
    s.pose = {pos(rng), pos(rng), ang(rng)};
    s.ref = &ref;
    s.t = 0.07 * i;
    s.others.push_back({{pos(rng), pos(rng), ang(rng)}, {vel(rng), vel(rng)}});
    const MpcConfig base;
    const auto u = solve(s, base, ControlLimits{}, RobotGeometry{}, false).controls[0];
    for (double lambda : {0.25, 2.0, 8.0}) {
      MpcConfig scaled = base;
      scaled.a_cte *= lambda;
      scaled.a_time *= lambda;
      scaled.a_col *= lambda;
      EXPECT_EQ(solve(s, scaled, ControlLimits{}, RobotGeometry{}, false).controls[0], u);
    }
  }
}

TEST(Solve, Deterministic) {
  const ReferencePath ref = straight(3.0);
  WorldSnapshot s;
  s.pose = {0.3, 0.1, 0.2};
  s.ref = &ref;
  s.t = 1.0;
  const auto a = solve(s, MpcConfig{}, ControlLimits{}, RobotGeometry{}, false);
  const auto b = solve(s, MpcConfig{}, ControlLimits{}, RobotGeometry{}, false);
  EXPECT_EQ(a.controls, b.controls);
  EXPECT_EQ(a.cost, b.cost);
}

TEST(ReferencePath, ProjectionStaysOnTheScheduledRun) {
  // Forward to x = 1, then straight back along the same line.
  std::vector<Vec2> pts;
  for (int i = 0; i <= 10; ++i) pts.push_back({0.1 * i, 0.0});
  for (int i = 9; i >= 0; --i) pts.push_back({0.1 * i, 0.0});
  const ReferencePath ref(pts, 0.25);
  // Scheduled at waypoint 8 of the forward run: x = 0.9 is progress 0.9, not the return leg.
  EXPECT_NEAR(ref.project_near({0.9, 0.0}, 8 * 0.25, 4).arc, 0.9, 1e-12);
  // Scheduled on the return leg at waypoint 12 (x = 0.8): the same point lies on it at arc 1.1.
  EXPECT_NEAR(ref.project_near({0.9, 0.0}, 12 * 0.25, 4).arc, 1.1, 1e-12);
  // The horizon holds at the cusp (waypoint 10) while the schedule is before it.
  EXPECT_NEAR(ref.hold_time(1.0, 5.0), 10 * 0.25, 1e-6);
  EXPECT_LT(ref.hold_time(1.0, 5.0), 10 * 0.25);
  EXPECT_DOUBLE_EQ(ref.hold_time(1.0, 2.0), 2.0);
  EXPECT_DOUBLE_EQ(ref.hold_time(3.0, 4.0), 4.0);
  EXPECT_DOUBLE_EQ(straight(2.0).hold_time(0.0, 9.0), 9.0);
}
