#pragma once

#include <limits>
#include <utility>
#include <vector>

namespace psps::lp {

constexpr double kInf = std::numeric_limits<double>::infinity();

enum class Sense : char { kLe = 'L', kEq = 'E' };

struct Row {
  std::vector<std::pair<int, double>> terms;  // (variable, coefficient), variables unique
  Sense sense = Sense::kLe;
  double rhs = 0.0;
  /// Lazy rows stay out of the working set until a candidate optimum violates
  /// them. Only meaningful for kLe rows. The solution still satisfies every
  /// lazy row, so the result is the optimum of the full problem.
  bool lazy = false;
};

/// min cost . x + cost_constant  s.t.  rows, lo <= x <= hi  (bounds may be infinite)
struct Problem {
  int n_vars = 0;
  std::vector<double> cost;
  double cost_constant = 0.0;
  std::vector<double> lo, hi;
  std::vector<Row> rows;
};

enum class Status { kOptimal, kInfeasible, kUnbounded, kIterLimit };

struct Solution {
  Status status = Status::kInfeasible;
  std::vector<double> x;
  double objective = 0.0;
  int iterations = 0;
  int lazy_rounds = 0;
};

/// Deterministic dense bounded-variable two-phase simplex.
///
/// Pipeline: presolve (fold single-variable rows into bounds, substitute fixed
/// variables, drop rows that interval arithmetic proves redundant), then a
/// primal simplex over the remaining rows with Dantzig pricing and a Bland
/// fallback after a degeneracy streak, re-solving with activated lazy rows
/// until none are violated.
Solution solve(const Problem& problem);

}  // namespace psps::lp
