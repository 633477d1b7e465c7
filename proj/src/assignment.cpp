#include "mrpush/assignment.hpp"

#include <stdexcept>

namespace mrpush {

bool solve_assignment(const CostMatrix& m, AssignmentSolution& out) {
  const std::size_t n = m.rows();
  const std::size_t k = m.cols();
  if (n > k) throw std::invalid_argument("solve_assignment: more rows than columns");
  out.row_to_col.assign(n, -1);
  out.cost = 0;
  if (n == 0) return true;

  // 1-based potentials formulation; column 0 is a virtual source.
  const Cost inf = std::numeric_limits<Cost>::max() / 2;
  std::vector<Cost> u(n + 1, 0), v(k + 1, 0);
  std::vector<std::size_t> p(k + 1, 0), way(k + 1, 0);
  for (std::size_t i = 1; i <= n; ++i) {
    p[0] = i;
    std::size_t j0 = 0;
    std::vector<Cost> minv(k + 1, inf);
    std::vector<bool> used(k + 1, false);
    do {
      used[j0] = true;
      const std::size_t i0 = p[j0];
      Cost delta = inf;
      std::size_t j1 = 0;
      for (std::size_t j = 1; j <= k; ++j) {
        if (used[j]) continue;
        const Cost c = m.at(i0 - 1, j - 1);
        const Cost cur = c >= kForbidden ? inf : c - u[i0] - v[j];
        if (cur < minv[j]) {
          minv[j] = cur;
          way[j] = j0;
        }
        if (minv[j] < delta) {
          delta = minv[j];
          j1 = j;
        }
      }
      if (delta >= inf / 2) return false;
      for (std::size_t j = 0; j <= k; ++j) {
        if (used[j]) {
          u[p[j]] += delta;
          v[j] -= delta;
        } else if (minv[j] < inf) {
          minv[j] -= delta;
        }
      }
      j0 = j1;
    } while (p[j0] != 0);
    do {
      const std::size_t j1 = way[j0];
      p[j0] = p[j1];
      j0 = j1;
    } while (j0 != 0);
  }
  for (std::size_t j = 1; j <= k; ++j)
    if (p[j] != 0) out.row_to_col[p[j] - 1] = static_cast<int>(j - 1);
  for (std::size_t i = 0; i < n; ++i) {
    const Cost c = m.at(i, out.row_to_col[i]);
    if (c >= kForbidden) return false;
    out.cost += c;
  }
  return true;
}

NextBestAssignment::NextBestAssignment(CostMatrix costs) : costs_(std::move(costs)) {
  Subproblem root;
  if (solve(root)) queue_.push(std::move(root));
}

bool NextBestAssignment::solve(Subproblem& p) const {
  CostMatrix m = costs_;
  for (auto [r, c] : p.forbidden) m.at(r, c) = kForbidden;
  for (auto [r, c] : p.forced) {
    for (std::size_t j = 0; j < m.cols(); ++j)
      if (static_cast<int>(j) != c) m.at(r, j) = kForbidden;
    for (std::size_t i = 0; i < m.rows(); ++i)
      if (static_cast<int>(i) != r) m.at(i, c) = kForbidden;
  }
  return solve_assignment(m, p.solution);
}

bool NextBestAssignment::next(AssignmentSolution& out) {
  if (queue_.empty()) return false;
  Subproblem top = queue_.top();
  queue_.pop();
  out = top.solution;

  std::vector<std::pair<int, int>> forced = top.forced;
  for (std::size_t r = 0; r < top.solution.row_to_col.size(); ++r) {
    const std::pair<int, int> pair{static_cast<int>(r), top.solution.row_to_col[r]};
    bool already = false;
    for (const auto& f : top.forced) already = already || f.first == pair.first;
    if (already) continue;
    Subproblem child;
    child.forced = forced;
    child.forbidden = top.forbidden;
    child.forbidden.push_back(pair);
    if (solve(child)) queue_.push(std::move(child));
    forced.push_back(pair);
  }
  return true;
}

}  // namespace mrpush
