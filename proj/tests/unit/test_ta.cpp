#include <gtest/gtest.h>

#include <algorithm>
#include <random>
#include <set>

#include "../support/joint_oracle.hpp"
#include "mrpush/errors.hpp"
#include "mrpush/ta.hpp"

using namespace mrpush;
using namespace mrpush::ta;

namespace {

void expect_valid_paths(const Assignment& a, std::span<const Cell> robots, std::span<const DiscreteTask> tasks,
                        const GridGraph& g) {
  ASSERT_EQ(a.paths.size(), robots.size());
  for (std::size_t i = 0; i < a.paths.size(); ++i) {
    const Path& p = a.paths[i];
    ASSERT_FALSE(p.empty());
    EXPECT_EQ(p.front(), robots[i]);
    for (std::size_t k = 1; k < p.size(); ++k) {
      const int dx = std::abs(p[k].x - p[k - 1].x), dy = std::abs(p[k].y - p[k - 1].y);
      EXPECT_LE(dx + dy, 1);
      EXPECT_TRUE(g.valid(p[k]));
    }
    auto it = a.pairs.find(static_cast<int>(i));
    if (it == a.pairs.end()) {
      EXPECT_EQ(p.size(), 1u);
      continue;
    }
    const auto& task = *std::find_if(tasks.begin(), tasks.end(), [&](const DiscreteTask& t) { return t.block_id == it->second; });
    auto pick = std::find(p.begin(), p.end(), task.pickup);
    ASSERT_NE(pick, p.end());
    EXPECT_EQ(p.back(), task.delivery);
  }
  for (std::size_t i = 0; i < a.paths.size(); ++i)
    for (std::size_t j = i + 1; j < a.paths.size(); ++j)
      EXPECT_FALSE(first_conflict_time(a.paths[i], a.paths[j]).has_value()) << i << "," << j;
}

}  // namespace

TEST(Discretize, GridArithmetic) {
  const GridGraph g = GridGraph::over(Workspace{}, 0.5);
  EXPECT_EQ(g.width(), 8);
  EXPECT_EQ(g.height(), 12);
  EXPECT_EQ(g.num_vertices(), 96u);
  EXPECT_EQ(g.cell_of({0.25, 0.25}), (Cell{0, 0}));
  EXPECT_EQ(g.cell_of({0.5, 0.5}), (Cell{1, 1}));
  EXPECT_EQ(g.cell_of({4.0, 6.0}), (Cell{7, 11}));
}

TEST(Discretize, RejectsBadCells) {
  EXPECT_THROW(GridGraph::over(Workspace{}, 0.0), ValidationError);
  EXPECT_THROW(GridGraph::over(Workspace{0, 0, 1, 1}, 2.0), ValidationError);
  Scenario s;
  s.robots = {{0.5, 0.5, 0}};
  s.blocks_start = {{2.1, 3.1}, {2.3, 3.3}};
  s.blocks_goal = {{1, 5}, {3, 5}};
  try {
    discretize(s, 0.5);
    FAIL();
  } catch (const ValidationError& e) {
    EXPECT_NE(std::string(e.what()).find("blocks 0 and 1"), std::string::npos);
  }
  s.blocks_start[1] = {3.3, 3.3};
  const Discretization d = discretize(s, 0.5);
  EXPECT_EQ(d.tasks[1].pickup, (Cell{6, 6}));
  EXPECT_EQ(d.tasks[1].block_id, 1);
}

TEST(Ecbsta, SingleAgentCorridor) {
  const GridGraph g({0, 0}, 1.0, 1, 5);
  const Cell robots[] = {{0, 0}};
  const DiscreteTask tasks[] = {{{0, 2}, {0, 4}, 0}};
  const Assignment a = ecbsta_solve(g, robots, tasks);
  EXPECT_EQ(a.pairs.at(0), 0);
  EXPECT_EQ(a.cost, 4);
  expect_valid_paths(a, robots, tasks, g);
}

TEST(Ecbsta, CrossingMatchesOracle) {
  const GridGraph g({0, 0}, 1.0, 4, 4);
  const Cell robots[] = {{0, 1}, {1, 0}};
  const DiscreteTask tasks[] = {{{3, 1}, {3, 2}, 0}, {{1, 3}, {2, 3}, 1}};
  SolverOptions opt;
  opt.w = 1.0;
  const Assignment a = ecbsta_solve(g, robots, tasks, opt);
  const long long best = oracle::joint_optimum(g, {robots[0], robots[1]}, {tasks[0], tasks[1]});
  EXPECT_EQ(a.cost, best);
  expect_valid_paths(a, robots, tasks, g);
  opt.w = 1.3;
  const Assignment b = ecbsta_solve(g, robots, tasks, opt);
  EXPECT_LE(b.cost, 1.3 * best);
  expect_valid_paths(b, robots, tasks, g);
}

TEST(Ecbsta, HeadOnCorridorNeedsWaitOrDetour) {
  // Two robots must swap ends of a 1-wide corridor with a single side pocket.
  GridGraph g({0, 0}, 1.0, 5, 2);
  for (int x : {0, 1, 3, 4}) g.block({x, 1});
  const Cell robots[] = {{0, 0}, {4, 0}};
  const DiscreteTask tasks[] = {{{4, 0}, {4, 0}, 0}, {{0, 0}, {0, 0}, 1}};
  const Assignment a = ecbsta_solve(g, robots, tasks, {1.0});
  expect_valid_paths(a, robots, tasks, g);
  EXPECT_EQ(a.cost, oracle::joint_optimum(g, {robots[0], robots[1]}, {tasks[0], tasks[1]}));
}

TEST(Ecbsta, RandomInstancesWithinBound) {
  std::mt19937_64 rng(2024);
  int checked = 0;
  for (int trial = 0; trial < 80; ++trial) {
    const int w = 3 + static_cast<int>(rng() % 3), h = 3 + static_cast<int>(rng() % 3);
    GridGraph g({0, 0}, 1.0, w, h);
    std::vector<Cell> free;
    for (int y = 0; y < h; ++y)
      for (int x = 0; x < w; ++x) free.push_back({x, y});
    std::shuffle(free.begin(), free.end(), rng);
    const int obstacles = static_cast<int>(rng() % 3);
    for (int k = 0; k < obstacles; ++k) g.block(free[k]);
    std::vector<Cell> cells(free.begin() + obstacles, free.end());
    std::shuffle(cells.begin(), cells.end(), rng);
    const Cell robots[] = {cells[0], cells[1]};
    const DiscreteTask tasks[] = {{cells[2], cells[3], 0}, {cells[4], cells[5], 1}};
    const long long best = oracle::joint_optimum(g, {robots[0], robots[1]}, {tasks[0], tasks[1]});
    if (best < 0) continue;
    const Assignment a = ecbsta_solve(g, robots, tasks);
    EXPECT_LE(a.cost, 1.3 * best + 1e-9) << "trial " << trial;
    EXPECT_GE(a.cost, best) << "trial " << trial;
    expect_valid_paths(a, robots, tasks, g);
    ++checked;
  }
  EXPECT_GE(checked, 50);
}

TEST(Ecbsta, MoreRobotsThanTasksLeavesIdle) {
  const GridGraph g({0, 0}, 1.0, 6, 6);
  const Cell robots[] = {{0, 0}, {5, 5}, {0, 5}, {5, 0}};
  const DiscreteTask tasks[] = {{{1, 1}, {1, 3}, 0}, {{4, 4}, {4, 2}, 1}, {{1, 4}, {3, 4}, 2}};
  const auto rounds = assign_asymmetric(g, robots, tasks);
  ASSERT_EQ(rounds.size(), 1u);
  EXPECT_EQ(rounds[0].pairs.size(), 3u);
  EXPECT_EQ(rounds[0].pairs.count(3), 0u);
  expect_valid_paths(rounds[0], robots, tasks, g);
}

TEST(Ecbsta, FewerRobotsThanTasksRunsRounds) {
  const GridGraph g({0, 0}, 1.0, 6, 6);
  const Cell robots[] = {{0, 0}, {5, 5}, {0, 5}};
  const DiscreteTask tasks[] = {{{1, 1}, {1, 3}, 0}, {{4, 4}, {4, 2}, 1}, {{1, 4}, {3, 4}, 2}, {{3, 1}, {5, 1}, 3}};
  const auto rounds = assign_asymmetric(g, robots, tasks);
  ASSERT_EQ(rounds.size(), 2u);
  EXPECT_EQ(rounds[0].pairs.size(), 3u);
  EXPECT_EQ(rounds[1].pairs.size(), 1u);
  std::set<int> blocks;
  for (const auto& r : rounds)
    for (auto [robot, block] : r.pairs) blocks.insert(block);
  EXPECT_EQ(blocks.size(), 4u);
  // Round two starts where round one ended.
  for (std::size_t i = 0; i < 3; ++i) EXPECT_EQ(rounds[1].paths[i].front(), rounds[0].paths[i].back());
}

TEST(Ecbsta, SymmetricCaseIsOneRound) {
  const GridGraph g({0, 0}, 1.0, 5, 5);
  const Cell robots[] = {{0, 0}, {4, 0}};
  const DiscreteTask tasks[] = {{{0, 2}, {0, 4}, 0}, {{4, 2}, {4, 4}, 1}};
  const auto rounds = assign_asymmetric(g, robots, tasks);
  ASSERT_EQ(rounds.size(), 1u);
  EXPECT_EQ(rounds[0].pairs.size(), 2u);
  EXPECT_EQ(rounds[0].cost, ecbsta_solve(g, robots, tasks).cost);
}

TEST(RankAssignments, FourByFour) {
  const GridGraph g({0, 0}, 1.0, 8, 8);
  const Cell robots[] = {{0, 0}, {2, 0}, {4, 0}, {6, 0}};
  const DiscreteTask tasks[] = {
      {{1, 3}, {1, 6}, 0}, {{3, 3}, {3, 6}, 1}, {{5, 3}, {5, 6}, 2}, {{7, 3}, {7, 6}, 3}};
  const auto ranked = rank_assignments(g, robots, tasks);
  ASSERT_EQ(ranked.size(), 24u);
  for (std::size_t i = 1; i < ranked.size(); ++i) EXPECT_LE(ranked[i - 1].cost, ranked[i].cost);
  EXPECT_EQ(ranked.front().robot_to_block, (std::vector<int>{0, 1, 2, 3}));
}

TEST(RankAssignments, SingleEntryAndGuard) {
  const GridGraph g({0, 0}, 1.0, 8, 8);
  const Cell one[] = {{0, 0}};
  const DiscreteTask t1[] = {{{1, 1}, {2, 2}, 0}};
  EXPECT_EQ(rank_assignments(g, one, t1).size(), 1u);
  const Cell seven[] = {{0, 0}, {1, 0}, {2, 0}, {3, 0}, {4, 0}, {5, 0}, {6, 0}};
  EXPECT_THROW(rank_assignments(g, seven, t1), ValidationError);
}

TEST(RankAssignments, MirrorTiesAreLexicographic) {
  const GridGraph g({0, 0}, 1.0, 7, 5);
  const Cell robots[] = {{0, 0}, {6, 0}};
  const DiscreteTask tasks[] = {{{2, 2}, {2, 4}, 0}, {{4, 2}, {4, 4}, 1}};
  auto ranked = rank_assignments(g, robots, tasks);
  ASSERT_EQ(ranked.size(), 2u);
  EXPECT_LT(ranked[0].cost, ranked[1].cost);
  // Robots on the axis of symmetry: both pairings cost the same.
  const Cell centred[] = {{3, 0}, {3, 1}};
  ranked = rank_assignments(g, centred, tasks);
  const Cell mirrored[] = {{3, 1}, {3, 0}};
  auto swapped = rank_assignments(g, mirrored, tasks);
  ASSERT_EQ(ranked.size(), 2u);
  EXPECT_EQ(ranked[0].cost, ranked[1].cost);
  EXPECT_EQ(ranked[0].robot_to_block, (std::vector<int>{0, 1}));
  EXPECT_EQ(swapped[0].cost, ranked[0].cost);
}

TEST(RankAssignments, RelabelingPermutesList) {
  const GridGraph g({0, 0}, 1.0, 8, 8);
  const Cell robots[] = {{0, 0}, {7, 1}, {3, 7}};
  const Cell relabeled[] = {{3, 7}, {0, 0}, {7, 1}};
  const DiscreteTask tasks[] = {{{1, 3}, {1, 6}, 0}, {{3, 3}, {6, 6}, 1}, {{5, 2}, {5, 5}, 2}};
  std::multiset<Cost> a, b;
  for (const auto& r : rank_assignments(g, robots, tasks)) a.insert(r.cost);
  for (const auto& r : rank_assignments(g, relabeled, tasks)) b.insert(r.cost);
  EXPECT_EQ(a, b);
}

TEST(RankAssignments, AsymmetricCounts) {
  const GridGraph g({0, 0}, 1.0, 8, 8);
  const Cell robots[] = {{0, 0}, {7, 1}, {3, 7}, {5, 5}};
  const DiscreteTask tasks[] = {{{1, 3}, {1, 6}, 0}, {{3, 3}, {6, 6}, 1}, {{5, 2}, {5, 4}, 2}};
  const auto r = rank_assignments(g, robots, tasks);
  EXPECT_EQ(r.size(), 24u);
  for (const auto& e : r) EXPECT_EQ(std::count(e.robot_to_block.begin(), e.robot_to_block.end(), -1), 1);
  const auto q = rank_assignments(g, std::span(robots, 2), tasks);
  EXPECT_EQ(q.size(), 6u);
}

TEST(FirstConflict, VertexAndSwap) {
  EXPECT_EQ(first_conflict_time({{0, 0}, {1, 0}}, {{2, 0}, {1, 0}}), 1);
  EXPECT_EQ(first_conflict_time({{0, 0}, {1, 0}}, {{1, 0}, {0, 0}}), 0);
  EXPECT_FALSE(first_conflict_time({{0, 0}, {0, 1}}, {{1, 0}, {1, 1}}).has_value());
  // Parked agents keep occupying their last cell.
  EXPECT_EQ(first_conflict_time({{0, 0}}, {{2, 0}, {1, 0}, {0, 0}}), 2);
}
