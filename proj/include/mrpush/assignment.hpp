#pragma once

#include <cstdint>
#include <limits>
#include <queue>
#include <vector>

namespace mrpush {

using Cost = std::int64_t;
inline constexpr Cost kForbidden = std::numeric_limits<Cost>::max() / 4;

/// Rectangular cost matrix with rows <= cols; every row gets a distinct column.
class CostMatrix {
 public:
  CostMatrix(std::size_t rows, std::size_t cols, Cost fill = 0) : rows_(rows), cols_(cols), data_(rows * cols, fill) {}

  std::size_t rows() const { return rows_; }
  std::size_t cols() const { return cols_; }
  Cost& at(std::size_t r, std::size_t c) { return data_[r * cols_ + c]; }
  Cost at(std::size_t r, std::size_t c) const { return data_[r * cols_ + c]; }

 private:
  std::size_t rows_, cols_;
  std::vector<Cost> data_;
};

struct AssignmentSolution {
  std::vector<int> row_to_col;
  Cost cost = 0;
};

/// Minimum-cost assignment by successive shortest augmenting paths with
/// potentials. Entries equal to kForbidden may not be used. Returns false
/// when no feasible assignment exists.
bool solve_assignment(const CostMatrix& m, AssignmentSolution& out);

/// Enumerates assignments in nondecreasing cost order (Murty's partitioning).
/// Equal-cost assignments come out in a deterministic order.
class NextBestAssignment {
 public:
  explicit NextBestAssignment(CostMatrix costs);

  /// Next assignment, or false once the enumeration is exhausted.
  bool next(AssignmentSolution& out);

 private:
  struct Subproblem {
    std::vector<std::pair<int, int>> forced;
    std::vector<std::pair<int, int>> forbidden;
    AssignmentSolution solution;
  };
  struct Later {
    bool operator()(const Subproblem& a, const Subproblem& b) const {
      if (a.solution.cost != b.solution.cost) return a.solution.cost > b.solution.cost;
      return a.solution.row_to_col > b.solution.row_to_col;
    }
  };

  bool solve(Subproblem& p) const;

  CostMatrix costs_;
  std::priority_queue<Subproblem, std::vector<Subproblem>, Later> queue_;
};

}  // namespace mrpush
