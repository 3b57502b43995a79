#pragma once

#include <optional>
#include <string>
#include <vector>

#include <Eigen/SparseCore>

#include "dpfl/common.hpp"
#include "dpfl/grid.hpp"

namespace dpfl::pf {

using SparseCMat = Eigen::SparseMatrix<Cplx>;

// One converged AC operating point. Angles are absolute with the slack pinned
// at exactly zero. pf/pt/qf/qt are from-side / to-side branch flows.
struct Solution {
  Vec v, theta;        // per bus, p.u. / rad
  Vec p_inj, q_inj;    // per bus, p.u.
  Vec pf, pt, qf, qt;  // per branch, p.u.
  bool converged = false;
  double mismatch_inf_norm = 0.0;
  int iterations = 0;
};

// Per-bus overrides of the case base values. A present vector must have one
// entry per bus; p_gen is the total in-service generation at the bus.
struct Overrides {
  std::optional<Vec> p_load, q_load, p_gen;
};

struct SolveOptions {
  double tol = 1e-8;  // p.u., infinity norm of the mismatch
  int max_iter = 20;
};

// Includes tap ratios, phase shifts, line charging and bus shunts;
// out-of-service branches contribute nothing.
SparseCMat build_ybus(const grid::GridCase& c);

// Full Newton-Raphson in polar coordinates with the usual bus-type partition
// (PQ: solve V and theta; PV: solve theta; slack: fixed). Hitting the
// iteration cap returns converged=false rather than throwing.
Solution solve_nr(const grid::GridCase& c, const Overrides& ov = {}, SolveOptions opt = {});

// Analytic polar-coordinate power flow Jacobian at an operating point:
// 2n x 2n with rows [dP_0.. dP_{n-1}, dQ_0.. dQ_{n-1}] and columns
// [dtheta_0.., dV_0..].
struct Jacobian {
  Mat m;  // 2n x 2n
  int n_buses = 0;
};

Jacobian jacobian_at(const grid::GridCase& c, const Solution& at);

// d[theta(non-slack); V(PQ)] / d[P(non-slack); Q(PQ)] at the operating point,
// i.e. the inverse of the Newton-reduced Jacobian. Row/column order follows
// ascending bus index within each block.
Mat sensitivity_at(const grid::GridCase& c, const Solution& at);

// Per-bus scheduled injections implied by case + overrides (gen minus load).
void scheduled_injections(const grid::GridCase& c, const Overrides& ov, Vec& p_spec, Vec& q_spec);

std::string solution_to_json(const Solution& s);

}  // namespace dpfl::pf
