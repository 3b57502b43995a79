#include "dpfl/acpf.hpp"

#include <cmath>
#include <vector>

#include <Eigen/Dense>
#include <Eigen/SparseCore>
#include <json.hpp>

namespace dpfl::pf {

using grid::BusKind;
using grid::GridCase;

namespace {

struct BranchAdm {
  Cplx yff, yft, ytf, ytt;
};

BranchAdm branch_admittances(const grid::Branch& br) {
  const Cplx ys = 1.0 / Cplx(br.r, br.x);
  const Cplx ysh(0.0, br.b_charging / 2.0);
  const Cplx tap = std::polar(br.tap_ratio, br.phase_shift);
  BranchAdm a;
  a.yff = (ys + ysh) / (tap * std::conj(tap));
  a.yft = -ys / std::conj(tap);
  a.ytf = -ys / tap;
  a.ytt = ys + ysh;
  return a;
}

}  // namespace

SparseCMat build_ybus(const GridCase& c) {
  const int n = c.n_buses();
  std::vector<Eigen::Triplet<Cplx>> trip;
  trip.reserve(4 * c.branches.size() + n);
  for (const auto& br : c.branches) {
    if (!br.in_service) continue;
    const BranchAdm a = branch_admittances(br);
    trip.emplace_back(br.from, br.from, a.yff);
    trip.emplace_back(br.from, br.to, a.yft);
    trip.emplace_back(br.to, br.from, a.ytf);
    trip.emplace_back(br.to, br.to, a.ytt);
  }
  for (int i = 0; i < n; ++i)
    trip.emplace_back(i, i, Cplx(c.buses[i].g_shunt, c.buses[i].b_shunt));
  SparseCMat y(n, n);
  y.setFromTriplets(trip.begin(), trip.end());
  return y;
}

void scheduled_injections(const GridCase& c, const Overrides& ov, Vec& p_spec, Vec& q_spec) {
  const int n = c.n_buses();
  auto check = [n](const std::optional<Vec>& v, const char* what) {
    if (v && v->size() != n)
      throw DimensionMismatch(std::string(what) + " override has wrong length");
  };
  check(ov.p_load, "p_load");
  check(ov.q_load, "q_load");
  check(ov.p_gen, "p_gen");

  Vec p_gen = Vec::Zero(n), q_gen = Vec::Zero(n);
  for (const auto& g : c.generators) {
    if (!g.in_service) continue;
    p_gen[g.bus] += g.p_gen;
    q_gen[g.bus] += g.q_gen;
  }
  if (ov.p_gen) p_gen = *ov.p_gen;

  p_spec.resize(n);
  q_spec.resize(n);
  for (int i = 0; i < n; ++i) {
    const double pl = ov.p_load ? (*ov.p_load)[i] : c.buses[i].p_load;
    const double ql = ov.q_load ? (*ov.q_load)[i] : c.buses[i].q_load;
    p_spec[i] = p_gen[i] - pl;
    q_spec[i] = q_gen[i] - ql;
  }
}

namespace {

// P_i = V_i sum_j V_j (G_ij cos t_ij + B_ij sin t_ij), Q_i analogous.
void calc_injections(const SparseCMat& y, const Vec& v, const Vec& th, Vec& p, Vec& q) {
  const int n = static_cast<int>(v.size());
  p.setZero(n);
  q.setZero(n);
  for (int j = 0; j < y.outerSize(); ++j) {
    for (SparseCMat::InnerIterator it(y, j); it; ++it) {
      const int i = static_cast<int>(it.row());
      const double g = it.value().real(), b = it.value().imag();
      const double tij = th[i] - th[j];
      const double c = std::cos(tij), s = std::sin(tij);
      p[i] += v[i] * v[j] * (g * c + b * s);
      q[i] += v[i] * v[j] * (g * s - b * c);
    }
  }
}

void branch_flows(const GridCase& c, const Vec& v, const Vec& th, Solution& sol) {
  const int nl = c.n_branches();
  sol.pf.setZero(nl);
  sol.pt.setZero(nl);
  sol.qf.setZero(nl);
  sol.qt.setZero(nl);
  for (int l = 0; l < nl; ++l) {
    const auto& br = c.branches[l];
    if (!br.in_service) continue;
    const BranchAdm a = branch_admittances(br);
    const Cplx vf = std::polar(v[br.from], th[br.from]);
    const Cplx vt = std::polar(v[br.to], th[br.to]);
    const Cplx sf = vf * std::conj(a.yff * vf + a.yft * vt);
    const Cplx st = vt * std::conj(a.ytf * vf + a.ytt * vt);
    sol.pf[l] = sf.real();
    sol.qf[l] = sf.imag();
    sol.pt[l] = st.real();
    sol.qt[l] = st.imag();
  }
}

}  // namespace

Solution solve_nr(const GridCase& c, const Overrides& ov, SolveOptions opt) {
  if (opt.tol <= 0) throw std::invalid_argument("tol must be positive");
  if (opt.max_iter < 1) throw std::invalid_argument("max_iter must be >= 1");

  const int n = c.n_buses();
  const int slack = c.slack();
  const SparseCMat y = build_ybus(c);

  Vec p_spec, q_spec;
  scheduled_injections(c, ov, p_spec, q_spec);

  // PV/slack voltage setpoints come from the first in-service generator.
  Vec v(n), th(n);
  for (int i = 0; i < n; ++i) {
    v[i] = c.buses[i].v_set > 0 ? c.buses[i].v_set : 1.0;
    th[i] = c.buses[i].theta_init - c.buses[slack].theta_init;
  }
  th[slack] = 0.0;
  for (const auto& g : c.generators) {
    if (!g.in_service) continue;
    if (c.buses[g.bus].kind != BusKind::PQ) v[g.bus] = g.v_set;
  }

  std::vector<int> th_idx, v_idx;  // unknown angle / magnitude buses
  for (int i = 0; i < n; ++i) {
    if (i != slack) th_idx.push_back(i);
    if (c.buses[i].kind == BusKind::PQ) v_idx.push_back(i);
  }
  const int na = static_cast<int>(th_idx.size());
  const int nv = static_cast<int>(v_idx.size());
  const int m = na + nv;

  Vec p_calc, q_calc;
  auto mismatch = [&](Vec& f) {
    calc_injections(y, v, th, p_calc, q_calc);
    f.resize(m);
    for (int k = 0; k < na; ++k) f[k] = p_calc[th_idx[k]] - p_spec[th_idx[k]];
    for (int k = 0; k < nv; ++k) f[na + k] = q_calc[v_idx[k]] - q_spec[v_idx[k]];
  };

  const Eigen::MatrixXcd yd = Eigen::MatrixXcd(y);  // dense copy for Jacobian assembly
  Mat g(n, n), b(n, n);
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j) {
      g(i, j) = yd(i, j).real();
      b(i, j) = yd(i, j).imag();
    }

  auto reduced_jacobian = [&](Mat& jac) {
    jac.setZero(m, m);
    for (int r = 0; r < m; ++r) {
      const bool row_p = r < na;
      const int i = row_p ? th_idx[r] : v_idx[r - na];
      for (int s = 0; s < m; ++s) {
        const bool col_th = s < na;
        const int j = col_th ? th_idx[s] : v_idx[s - na];
        const double tij = th[i] - th[j];
        const double ct = std::cos(tij), st = std::sin(tij);
        double e;
        if (row_p && col_th)
          e = (i == j) ? -q_calc[i] - b(i, i) * v[i] * v[i]
                       : v[i] * v[j] * (g(i, j) * st - b(i, j) * ct);
        else if (row_p)
          e = (i == j) ? p_calc[i] / v[i] + g(i, i) * v[i]
                       : v[i] * (g(i, j) * ct + b(i, j) * st);
        else if (col_th)
          e = (i == j) ? p_calc[i] - g(i, i) * v[i] * v[i]
                       : -v[i] * v[j] * (g(i, j) * ct + b(i, j) * st);
        else
          e = (i == j) ? q_calc[i] / v[i] - b(i, i) * v[i]
                       : v[i] * (g(i, j) * st - b(i, j) * ct);
        jac(r, s) = e;
      }
    }
  };

  Solution sol;
  Vec f;
  mismatch(f);
  sol.mismatch_inf_norm = m > 0 ? f.lpNorm<Eigen::Infinity>() : 0.0;
  sol.iterations = 0;
  sol.converged = sol.mismatch_inf_norm <= opt.tol;

  Mat jac;
  while (!sol.converged && sol.iterations < opt.max_iter) {
    reduced_jacobian(jac);
    Eigen::PartialPivLU<Mat> lu(jac);
    const Vec dx = lu.solve(-f);
    if (!dx.allFinite()) throw SingularJacobian("power flow Jacobian factorization failed");
    for (int k = 0; k < na; ++k) th[th_idx[k]] += dx[k];
    for (int k = 0; k < nv; ++k) v[v_idx[k]] += dx[na + k];
    ++sol.iterations;
    mismatch(f);
    sol.mismatch_inf_norm = f.lpNorm<Eigen::Infinity>();
    sol.converged = sol.mismatch_inf_norm <= opt.tol;
  }

  calc_injections(y, v, th, p_calc, q_calc);
  sol.v = v;
  sol.theta = th;
  sol.p_inj = p_calc;
  sol.q_inj = q_calc;
  branch_flows(c, v, th, sol);
  return sol;
}

Jacobian jacobian_at(const GridCase& c, const Solution& at) {
  if (!at.converged) throw NotConverged("jacobian_at requires a converged operating point");
  const int n = c.n_buses();
  const SparseCMat ys = build_ybus(c);
  const Eigen::MatrixXcd yd = Eigen::MatrixXcd(ys);

  const Vec& v = at.v;
  const Vec& th = at.theta;
  Vec p_calc, q_calc;
  calc_injections(ys, v, th, p_calc, q_calc);

  Jacobian out;
  out.n_buses = n;
  out.m.setZero(2 * n, 2 * n);
  for (int i = 0; i < n; ++i) {
    for (int j = 0; j < n; ++j) {
      const double g = yd(i, j).real(), b = yd(i, j).imag();
      const double tij = th[i] - th[j];
      const double ct = std::cos(tij), st = std::sin(tij);
      if (i == j) {
        out.m(i, j) = -q_calc[i] - b * v[i] * v[i];                  // dP/dtheta
        out.m(i, n + j) = p_calc[i] / v[i] + g * v[i];               // dP/dV
        out.m(n + i, j) = p_calc[i] - g * v[i] * v[i];               // dQ/dtheta
        out.m(n + i, n + j) = q_calc[i] / v[i] - b * v[i];           // dQ/dV
      } else {
        out.m(i, j) = v[i] * v[j] * (g * st - b * ct);
        out.m(i, n + j) = v[i] * (g * ct + b * st);
        out.m(n + i, j) = -v[i] * v[j] * (g * ct + b * st);
        out.m(n + i, n + j) = v[i] * (g * st - b * ct);
      }
    }
  }
  if (!out.m.allFinite()) throw NonFinite("power flow Jacobian has non-finite entries");
  return out;
}

Mat sensitivity_at(const GridCase& c, const Solution& at) {
  const Jacobian jac = jacobian_at(c, at);
  const int n = c.n_buses();
  const int slack = c.slack();
  std::vector<int> th_idx, v_idx;
  for (int i = 0; i < n; ++i) {
    if (i != slack) th_idx.push_back(i);
    if (c.buses[i].kind == BusKind::PQ) v_idx.push_back(i);
  }
  const int na = static_cast<int>(th_idx.size());
  const int nv = static_cast<int>(v_idx.size());
  Mat red(na + nv, na + nv);
  for (int r = 0; r < na + nv; ++r) {
    const int row = r < na ? th_idx[r] : n + v_idx[r - na];
    for (int s = 0; s < na + nv; ++s) {
      const int col = s < na ? th_idx[s] : n + v_idx[s - na];
      red(r, s) = jac.m(row, col);
    }
  }
  Eigen::PartialPivLU<Mat> lu(red);
  Mat sens = lu.inverse();
  if (!sens.allFinite()) throw SingularJacobian("reduced Jacobian is singular");
  return sens;
}

std::string solution_to_json(const Solution& s) {
  nlohmann::json j;
  auto vecj = [](const Vec& v) {
    std::vector<double> out(v.data(), v.data() + v.size());
    return out;
  };
  j["v"] = vecj(s.v);
  j["theta"] = vecj(s.theta);
  j["p_inj"] = vecj(s.p_inj);
  j["q_inj"] = vecj(s.q_inj);
  j["pf"] = vecj(s.pf);
  j["pt"] = vecj(s.pt);
  j["qf"] = vecj(s.qf);
  j["qt"] = vecj(s.qt);
  j["converged"] = s.converged;
  j["mismatch_inf_norm"] = s.mismatch_inf_norm;
  j["iterations"] = s.iterations;
  return j.dump();
}

}  // namespace dpfl::pf
