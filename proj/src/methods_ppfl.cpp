#include <Eigen/Dense>

#include "methods_common.hpp"
#include "physics_common.hpp"

// Physics-driven baselines: classic DC, power transfer distribution factors,
// warm-start first-order Taylor expansion and the decoupled linearized model.
// Each produces an affine map over the method's predictor tag layout.

namespace dpfl::methods {

using detail::finish;
using detail::make_plain;
using detail::poll_budget;
using grid::BusKind;

namespace {

std::vector<int> positions_of(const std::vector<int>& members, int n) {
  std::vector<int> pos(n, -1);
  for (std::size_t i = 0; i < members.size(); ++i) pos[members[i]] = int(i);
  return pos;
}

}  // namespace

FitResult ppfl_model(const std::string& variant, const data::Dataset& train,
                     const MethodConfig& cfg, const MethodContext& ctx) {
  poll_budget(ctx);
  if (FitResult r = detail::require_raw(train, variant); r.failure) return r;
  if (!ctx.grid) throw SemanticError("physics models need the case");
  const grid::GridCase& c = *ctx.grid;
  const int n = c.n_buses();
  const int slack = c.slack();

  if (variant == "DC" || variant == "PTDF") {
    const physics::DcSystem dc = physics::build_dc(c);
    Eigen::PartialPivLU<Mat> lu(dc.b_red);
    const Mat binv = lu.inverse();
    if (!binv.allFinite())
      return FitResult::fail(FailureRecord::Code::NaN, "singular DC susceptance matrix");

    if (variant == "DC") {
      // theta_red = B^-1 (P_red + shift)
      Mat beta = binv.transpose();
      Vec intercept = binv * dc.shift_inj_red;
      return finish("DC", make_plain(train, std::move(beta), std::move(intercept)));
    }
    const Mat ptdf = dc.bf_red * binv;  // n_branches x (n-1)
    Mat beta = ptdf.transpose();
    Vec intercept = ptdf * dc.shift_inj_red + dc.shift_flow;
    return finish("PTDF", make_plain(train, std::move(beta), std::move(intercept)));
  }

  const auto pq = c.buses_of_kind(BusKind::PQ);
  std::vector<int> nonslack, gens;
  for (int i = 0; i < n; ++i) {
    if (i != slack) nonslack.push_back(i);
    if (c.buses[i].kind != BusKind::PQ) gens.push_back(i);
  }
  const auto pos_ns = positions_of(nonslack, n);
  const auto pos_pq = positions_of(pq, n);
  const int na = int(nonslack.size()), nv = int(pq.size());

  if (variant == "TAY") {
    if (!ctx.train_samples) throw SemanticError("TAY needs the training samples for a warm point");
    // warm point: AC solution at the mean training operating condition
    pf::Overrides ov;
    ov.p_load = ctx.train_samples->p_load.colwise().mean().transpose();
    ov.q_load = ctx.train_samples->q_load.colwise().mean().transpose();
    ov.p_gen = ctx.train_samples->p_gen.colwise().mean().transpose();
    pf::Solution warm;
    try {
      warm = pf::solve_nr(c, ov);
    } catch (const SingularJacobian& e) {
      return FitResult::fail(FailureRecord::Code::NaN, e.what());
    }
    if (!warm.converged)
      return FitResult::fail(FailureRecord::Code::NaN, "warm point did not converge");

    Mat sens;
    try {
      sens = pf::sensitivity_at(c, warm);  // d[theta_ns; V_pq] / d[P_ns; Q_pq]
    } catch (const SingularJacobian& e) {
      return FitResult::fail(FailureRecord::Code::NaN, e.what());
    }
    Vec m0(na + nv), u0(na + nv);
    for (int i = 0; i < na; ++i) {
      m0[i] = warm.p_inj[nonslack[i]];
      u0[i] = warm.theta[nonslack[i]];
    }
    for (int i = 0; i < nv; ++i) {
      m0[na + i] = warm.q_inj[pq[i]];
      u0[na + i] = warm.v[pq[i]];
    }

    // dataset layout: x = [P@nonslack, Q@pq], y = [V@pq, Theta@nonslack]
    Mat beta(na + nv, na + nv);
    Vec intercept(na + nv);
    const Vec base = u0 - sens * m0;
    auto y_row_of = [&](const data::Tag& t) {
      return t.kind == data::Kind::V ? na + pos_pq[t.element] : pos_ns[t.element];
    };
    auto x_col_of = [&](const data::Tag& t) {
      return t.kind == data::Kind::P ? pos_ns[t.element] : na + pos_pq[t.element];
    };
    for (std::size_t yc = 0; yc < train.y_tags.size(); ++yc) {
      const int r = y_row_of(train.y_tags[yc]);
      intercept[yc] = base[r];
      for (std::size_t xc = 0; xc < train.x_tags.size(); ++xc)
        beta(xc, yc) = sens(r, x_col_of(train.x_tags[xc]));
    }
    return finish("TAY", make_plain(train, std::move(beta), std::move(intercept)));
  }

  if (variant == "DLPF") {
    Mat g, b, gs, bs;
    physics::gb_split(pf::build_ybus(c), g, b);
    physics::gb_split(physics::series_only_ybus(c), gs, bs);

    // unknowns u = [theta@nonslack; V@pq]; knowns z = [P@nonslack; Q@pq; V@gen; theta@slack]
    const int nu = na + nv;
    const int ng = int(gens.size());
    const int nz = na + nv + ng + 1;
    Mat m_u(nu, nu);
    Mat m_w(nu, ng + 1);  // boundary columns: [theta_slack, V@gen...]
    for (int r = 0; r < na; ++r) {
      const int i = nonslack[r];
      for (int cidx = 0; cidx < na; ++cidx) m_u(r, cidx) = -bs(i, nonslack[cidx]);
      for (int cidx = 0; cidx < nv; ++cidx) m_u(r, na + cidx) = g(i, pq[cidx]);
      m_w(r, 0) = -bs(i, slack);
      for (int cidx = 0; cidx < ng; ++cidx) m_w(r, 1 + cidx) = g(i, gens[cidx]);
    }
    for (int r = 0; r < nv; ++r) {
      const int i = pq[r];
      for (int cidx = 0; cidx < na; ++cidx) m_u(na + r, cidx) = -gs(i, nonslack[cidx]);
      for (int cidx = 0; cidx < nv; ++cidx) m_u(na + r, na + cidx) = -b(i, pq[cidx]);
      m_w(na + r, 0) = -gs(i, slack);
      for (int cidx = 0; cidx < ng; ++cidx) m_w(na + r, 1 + cidx) = -b(i, gens[cidx]);
    }
    Eigen::PartialPivLU<Mat> lu(m_u);
    const Mat m_u_inv = lu.inverse();
    if (!m_u_inv.allFinite())
      return FitResult::fail(FailureRecord::Code::NaN, "singular decoupled model matrix");

    // u = A z  with z = [P@ns, Q@pq, V@gen, theta@slack]
    Mat a_u = Mat::Zero(nu, nz);
    a_u.leftCols(na + nv) = m_u_inv;
    const Mat bound = -m_u_inv * m_w;
    a_u.col(nz - 1) = bound.col(0);                    // theta_slack
    a_u.middleCols(na + nv, ng) = bound.rightCols(ng); // V@gen

    // full state map T: z -> [theta_full; V_full]
    Mat t_map = Mat::Zero(2 * n, nz);
    for (int r = 0; r < na; ++r) t_map.row(nonslack[r]) = a_u.row(r);
    t_map(slack, nz - 1) = 1.0;
    for (int r = 0; r < nv; ++r) t_map.row(n + pq[r]) = a_u.row(na + r);
    for (int cidx = 0; cidx < ng; ++cidx) t_map(n + gens[cidx], na + nv + cidx) = 1.0;

    // predictor tag layout: [P@ns, Q@pq, V@gen, theta@slack] matches z order
    Mat beta(nz, int(train.y_tags.size()));
    Vec intercept = Vec::Zero(int(train.y_tags.size()));
    for (std::size_t yc = 0; yc < train.y_tags.size(); ++yc) {
      const data::Tag& t = train.y_tags[yc];
      if (t.kind == data::Kind::V) {
        beta.col(yc) = t_map.row(n + t.element).transpose();
      } else if (t.kind == data::Kind::Theta) {
        beta.col(yc) = t_map.row(t.element).transpose();
      } else {
        const physics::FlowLin fl = physics::linearize_branch_flow(c, t.element);
        const Vec& w = t.kind == data::Kind::PF ? fl.w_pf : fl.w_qf;
        beta.col(yc) = t_map.transpose() * w;
        intercept[yc] = t.kind == data::Kind::PF ? fl.c_pf : fl.c_qf;
      }
    }
    return finish("DLPF", make_plain(train, std::move(beta), std::move(intercept)));
  }
  throw UnknownKind("unknown physics model " + variant);
}

}  // namespace dpfl::methods
