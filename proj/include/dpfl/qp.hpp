#pragma once

#include <limits>
#include <string>

#include "dpfl/common.hpp"

namespace dpfl::qp {

inline constexpr double kInf = std::numeric_limits<double>::infinity();

// Convex quadratic program
//   min 1/2 x'Px + c'x   s.t.  A x = b,   l <= x <= u
// with P given either dense (p_dense) or in diagonal-plus-low-rank form
// (diag(p_diag) + p_factor p_factor'). Bounds may be +-inf per coordinate.
// The factored form lets the Newton systems use a Woodbury solve when the
// factor is narrower than the variable count.
struct Problem {
  Vec c;
  Mat p_dense;   // 0x0 when unused
  Vec p_diag;    // empty = zero diagonal
  Mat p_factor;  // n x r, empty when unused
  Mat a_eq;      // m x n, 0x0 when unconstrained
  Vec b_eq;
  Vec lower, upper;

  int n_vars() const { return int(c.size()); }
};

struct Options {
  int max_iter = 80;
  double tol = 1e-9;
  const BudgetClock* budget = nullptr;  // polled once per iteration
};

struct Solution {
  Vec x;
  Vec eq_multipliers;
  bool optimal = false;
  int iterations = 0;
  double gap = 0.0;
  std::string status;
};

// Primal-dual interior point (Mehrotra predictor-corrector). Throws
// SolverFailure only on structurally broken inputs; a non-converged run
// returns optimal=false with the best iterate.
Solution solve(const Problem& prob, const Options& opt = {});

}  // namespace dpfl::qp
