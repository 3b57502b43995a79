#pragma once

#include <vector>

#include <Eigen/Dense>

#include "dpfl/acpf.hpp"
#include "dpfl/grid.hpp"

namespace dpfl::methods::physics {

// DC susceptance structure: Laplacian over in-service branches with
// b_l = 1/(x_l * tap_l), the from-side flow map and phase-shift injections.
struct DcSystem {
  std::vector<int> nonslack;        // ascending bus indices
  Mat b_red;                        // (n-1) x (n-1)
  Mat bf_red;                       // n_branches x (n-1), flows from reduced angles
  Vec shift_inj_red;                // injection correction from phase shifts
  Vec shift_flow;                   // per-branch constant flow term
};

inline DcSystem build_dc(const grid::GridCase& c) {
  const int n = c.n_buses();
  const int slack = c.slack();
  DcSystem out;
  std::vector<int> red_index(n, -1);
  for (int i = 0; i < n; ++i)
    if (i != slack) {
      red_index[i] = int(out.nonslack.size());
      out.nonslack.push_back(i);
    }
  const int m = n - 1;
  Mat b_full = Mat::Zero(n, n);
  out.bf_red = Mat::Zero(c.n_branches(), m);
  Vec shift_full = Vec::Zero(n);
  out.shift_flow = Vec::Zero(c.n_branches());
  for (int l = 0; l < c.n_branches(); ++l) {
    const auto& br = c.branches[l];
    if (!br.in_service || br.x == 0.0) continue;
    const double b = 1.0 / (br.x * br.tap_ratio);
    b_full(br.from, br.from) += b;
    b_full(br.to, br.to) += b;
    b_full(br.from, br.to) -= b;
    b_full(br.to, br.from) -= b;
    if (red_index[br.from] >= 0) out.bf_red(l, red_index[br.from]) = b;
    if (red_index[br.to] >= 0) out.bf_red(l, red_index[br.to]) = -b;
    out.shift_flow[l] = -b * br.phase_shift;
    shift_full[br.from] -= b * br.phase_shift;
    shift_full[br.to] += b * br.phase_shift;
  }
  out.b_red.resize(m, m);
  out.shift_inj_red.resize(m);
  for (int i = 0; i < m; ++i) {
    out.shift_inj_red[i] = shift_full[out.nonslack[i]];
    for (int j = 0; j < m; ++j) out.b_red(i, j) = b_full(out.nonslack[i], out.nonslack[j]);
  }
  return out;
}

// Dense conductance/susceptance splits of a Y-bus.
inline void gb_split(const pf::SparseCMat& y, Mat& g, Mat& b) {
  const Eigen::MatrixXcd yd = Eigen::MatrixXcd(y);
  g.resize(yd.rows(), yd.cols());
  b.resize(yd.rows(), yd.cols());
  for (int i = 0; i < yd.rows(); ++i)
    for (int j = 0; j < yd.cols(); ++j) {
      g(i, j) = yd(i, j).real();
      b(i, j) = yd(i, j).imag();
    }
}

// Y-bus with charging and bus shunts stripped (series elements only).
inline pf::SparseCMat series_only_ybus(const grid::GridCase& c) {
  grid::GridCase stripped = c;
  for (auto& br : stripped.branches) br.b_charging = 0.0;
  for (auto& b : stripped.buses) {
    b.g_shunt = 0.0;
    b.b_shunt = 0.0;
  }
  return pf::build_ybus(stripped);
}

// First-order branch-flow coefficients around the flat point: the row vector
// over [theta_full; V_full] and the constant term such that
//   pf ~= w . [theta; V] + const  (and the reactive analogue).
struct FlowLin {
  Vec w_pf, w_qf;  // size 2n
  double c_pf = 0.0, c_qf = 0.0;
};

inline FlowLin linearize_branch_flow(const grid::GridCase& c, int branch) {
  const int n = c.n_buses();
  FlowLin out;
  out.w_pf = Vec::Zero(2 * n);
  out.w_qf = Vec::Zero(2 * n);
  const auto& br = c.branches[branch];
  if (!br.in_service) return out;
  const Cplx ys = 1.0 / Cplx(br.r, br.x);
  const Cplx ysh(0.0, br.b_charging / 2.0);
  const Cplx tap = std::polar(br.tap_ratio, br.phase_shift);
  const Cplx yff = (ys + ysh) / (tap * std::conj(tap));
  const Cplx yft = -ys / std::conj(tap);
  const double gff = yff.real(), bff = yff.imag();
  const double gft = yft.real(), bft = yft.imag();
  const int f = br.from, t = br.to;
  // pf = gff (2Vf - 1) + gft (Vf + Vt - 1) + bft (th_f - th_t)
  out.w_pf[f] = bft;
  out.w_pf[t] = -bft;
  out.w_pf[n + f] = 2.0 * gff + gft;
  out.w_pf[n + t] = gft;
  out.c_pf = -(gff + gft);
  // qf = -bff (2Vf - 1) - bft (Vf + Vt - 1) + gft (th_f - th_t)
  out.w_qf[f] = gft;
  out.w_qf[t] = -gft;
  out.w_qf[n + f] = -2.0 * bff - bft;
  out.w_qf[n + t] = -bft;
  out.c_qf = bff + bft;
  return out;
}

}  // namespace dpfl::methods::physics
