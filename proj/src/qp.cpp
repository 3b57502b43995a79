#include "dpfl/qp.hpp"

#include <algorithm>
#include <cmath>

#include <Eigen/Dense>

namespace dpfl::qp {

namespace {

struct KktSolver {
  // Solves (P + Sigma + reg I) dx = r, optionally through Woodbury when P is
  // diagonal-plus-low-rank. Rebuilt each interior-point iteration.
  const Problem& prob;
  Vec sigma;  // barrier diagonal
  double reg;
  bool use_woodbury;
  // dense path
  Eigen::LDLT<Mat> ldlt;
  // woodbury path: H = D + U U', D = p_diag + sigma + reg
  Vec dinv;
  Mat u;
  Eigen::LLT<Mat> core;  // I + U' D^-1 U

  KktSolver(const Problem& p, const Vec& sig, double reg_) : prob(p), sigma(sig), reg(reg_) {
    const int n = p.n_vars();
    use_woodbury = p.p_dense.size() == 0 && p.p_factor.cols() < n;
    if (use_woodbury) {
      Vec d = sigma.array() + reg;
      if (p.p_diag.size() > 0) d += p.p_diag;
      dinv = d.cwiseInverse();
      if (p.p_factor.size() > 0) {
        u = p.p_factor;
        Mat m = Mat::Identity(int(u.cols()), int(u.cols()));
        m.noalias() += u.transpose() * dinv.asDiagonal() * u;
        core.compute(m);
        if (core.info() != Eigen::Success)
          throw SolverFailure("interior point: core factorization failed");
      }
    } else {
      Mat h = p.p_dense.size() > 0 ? p.p_dense : Mat::Zero(n, n);
      if (p.p_diag.size() > 0) h += Mat(p.p_diag.asDiagonal());
      if (p.p_factor.size() > 0) h.noalias() += p.p_factor * p.p_factor.transpose();
      h += sigma.asDiagonal();
      h.diagonal().array() += reg;
      ldlt.compute(h);
      if (ldlt.info() != Eigen::Success) throw SolverFailure("interior point: KKT factorization failed");
    }
  }

  Vec solve(const Vec& r) const {
    if (!use_woodbury) return ldlt.solve(r);
    Vec y = dinv.cwiseProduct(r);
    if (u.size() == 0) return y;
    const Vec t = core.solve(u.transpose() * y);
    return y - dinv.cwiseProduct(u * t);
  }
};

}  // namespace

Solution solve(const Problem& prob, const Options& opt) {
  const int n = prob.n_vars();
  const int me = int(prob.a_eq.rows());
  if (prob.lower.size() != n || prob.upper.size() != n)
    throw SolverFailure("qp: bound vectors must match variable count");
  for (int i = 0; i < n; ++i)
    if (prob.lower[i] > prob.upper[i]) throw InfeasibleConstraints("qp: lower bound above upper bound");

  auto mult_p = [&](const Vec& v) -> Vec {
    Vec out = Vec::Zero(n);
    if (prob.p_dense.size() > 0) out.noalias() += prob.p_dense * v;
    if (prob.p_diag.size() > 0) out += prob.p_diag.cwiseProduct(v);
    if (prob.p_factor.size() > 0) out.noalias() += prob.p_factor * (prob.p_factor.transpose() * v);
    return out;
  };

  std::vector<int> lo, hi;  // coordinates with finite bounds
  for (int i = 0; i < n; ++i) {
    if (std::isfinite(prob.lower[i])) lo.push_back(i);
    if (std::isfinite(prob.upper[i])) hi.push_back(i);
  }
  const int mb = int(lo.size() + hi.size());

  Solution sol;
  sol.x = Vec::Zero(n);

  // Pure equality / unconstrained problem: one KKT solve.
  if (mb == 0) {
    Vec sigma = Vec::Zero(n);
    const double reg = 1e-12;
    KktSolver kkt(prob, sigma, reg);
    if (me == 0) {
      sol.x = kkt.solve(-prob.c);
    } else {
      Mat hinv_at(n, me);
      for (int j = 0; j < me; ++j) hinv_at.col(j) = kkt.solve(prob.a_eq.row(j).transpose());
      Mat schur = prob.a_eq * hinv_at;
      schur.diagonal().array() += 1e-12;
      const Vec hc = kkt.solve(-prob.c);
      sol.eq_multipliers = schur.ldlt().solve(prob.a_eq * hc - prob.b_eq);
      sol.x = hc - hinv_at * sol.eq_multipliers;
    }
    sol.optimal = sol.x.allFinite();
    sol.status = sol.optimal ? "optimal" : "singular";
    return sol;
  }

  // strictly interior start
  for (int i = 0; i < n; ++i) {
    const double l = prob.lower[i], u = prob.upper[i];
    if (std::isfinite(l) && std::isfinite(u))
      sol.x[i] = 0.5 * (l + u);
    else if (std::isfinite(l))
      sol.x[i] = l + 1.0;
    else if (std::isfinite(u))
      sol.x[i] = u - 1.0;
  }
  Vec zl = Vec::Ones(int(lo.size())), zu = Vec::Ones(int(hi.size()));
  Vec nu = Vec::Zero(me);

  const double cscale = 1.0 + prob.c.lpNorm<Eigen::Infinity>();
  double pscale = 0.0;
  if (prob.p_dense.size() > 0) pscale = prob.p_dense.diagonal().cwiseAbs().mean();
  if (prob.p_diag.size() > 0) pscale += prob.p_diag.cwiseAbs().mean();
  if (prob.p_factor.size() > 0) pscale += prob.p_factor.squaredNorm() / n;
  const double reg = 1e-10 * (1.0 + pscale);

  auto slack_l = [&](const Vec& x) {
    Vec s(lo.size());
    for (std::size_t k = 0; k < lo.size(); ++k) s[k] = x[lo[k]] - prob.lower[lo[k]];
    return s;
  };
  auto slack_u = [&](const Vec& x) {
    Vec s(hi.size());
    for (std::size_t k = 0; k < hi.size(); ++k) s[k] = prob.upper[hi[k]] - x[hi[k]];
    return s;
  };

  // nudge the start strictly inside
  {
    for (std::size_t k = 0; k < lo.size(); ++k)
      sol.x[lo[k]] = std::max(sol.x[lo[k]], prob.lower[lo[k]] + 1e-4);
    for (std::size_t k = 0; k < hi.size(); ++k)
      sol.x[hi[k]] = std::min(sol.x[hi[k]], prob.upper[hi[k]] - 1e-4);
  }

  for (sol.iterations = 0; sol.iterations < opt.max_iter; ++sol.iterations) {
    if (opt.budget) opt.budget->check();

    const Vec sl = slack_l(sol.x), su = slack_u(sol.x);
    Vec rd = mult_p(sol.x) + prob.c;
    if (me > 0) rd.noalias() += prob.a_eq.transpose() * nu;
    for (std::size_t k = 0; k < lo.size(); ++k) rd[lo[k]] -= zl[k];
    for (std::size_t k = 0; k < hi.size(); ++k) rd[hi[k]] += zu[k];
    const Vec rp = me > 0 ? Vec(prob.a_eq * sol.x - prob.b_eq) : Vec();

    const double mu = (sl.dot(zl) + su.dot(zu)) / mb;
    sol.gap = mu;
    const double rd_norm = rd.lpNorm<Eigen::Infinity>();
    const double rp_norm = me > 0 ? rp.lpNorm<Eigen::Infinity>() : 0.0;
    if (mu < opt.tol * cscale && rd_norm < 1e3 * opt.tol * cscale && rp_norm < 1e3 * opt.tol * cscale) {
      sol.optimal = true;
      break;
    }

    Vec sigma_diag = Vec::Zero(n);
    for (std::size_t k = 0; k < lo.size(); ++k) sigma_diag[lo[k]] += zl[k] / sl[k];
    for (std::size_t k = 0; k < hi.size(); ++k) sigma_diag[hi[k]] += zu[k] / su[k];
    KktSolver kkt(prob, sigma_diag, reg);

    Mat hinv_at;
    Mat schur;
    Eigen::LDLT<Mat> schur_ldlt;
    if (me > 0) {
      hinv_at.resize(n, me);
      for (int j = 0; j < me; ++j) hinv_at.col(j) = kkt.solve(prob.a_eq.row(j).transpose());
      schur = prob.a_eq * hinv_at;
      schur.diagonal().array() += reg;
      schur_ldlt.compute(schur);
    }

    auto newton = [&](const Vec& rcl, const Vec& rcu, Vec& dx, Vec& dnu, Vec& dzl, Vec& dzu) {
      Vec rhs = -rd;
      for (std::size_t k = 0; k < lo.size(); ++k) rhs[lo[k]] -= rcl[k] / sl[k];
      for (std::size_t k = 0; k < hi.size(); ++k) rhs[hi[k]] += rcu[k] / su[k];
      if (me > 0) {
        const Vec hr = kkt.solve(rhs);
        dnu = schur_ldlt.solve(prob.a_eq * hr + rp);
        dx = hr - hinv_at * dnu;
      } else {
        dnu.resize(0);
        dx = kkt.solve(rhs);
      }
      dzl.resize(lo.size());
      dzu.resize(hi.size());
      for (std::size_t k = 0; k < lo.size(); ++k) dzl[k] = -(rcl[k] + zl[k] * dx[lo[k]]) / sl[k];
      for (std::size_t k = 0; k < hi.size(); ++k) dzu[k] = -(rcu[k] - zu[k] * dx[hi[k]]) / su[k];
    };

    auto step_len = [&](const Vec& dx, const Vec& dzl, const Vec& dzu, double& ap, double& ad) {
      ap = ad = 1.0;
      for (std::size_t k = 0; k < lo.size(); ++k) {
        if (dx[lo[k]] < 0) ap = std::min(ap, -sl[k] / dx[lo[k]]);
        if (dzl[k] < 0) ad = std::min(ad, -zl[k] / dzl[k]);
      }
      for (std::size_t k = 0; k < hi.size(); ++k) {
        if (dx[hi[k]] > 0) ap = std::min(ap, su[k] / dx[hi[k]]);
        if (dzu[k] < 0) ad = std::min(ad, -zu[k] / dzu[k]);
      }
    };

    // affine (predictor) direction
    Vec rcl_aff(lo.size()), rcu_aff(hi.size());
    for (std::size_t k = 0; k < lo.size(); ++k) rcl_aff[k] = sl[k] * zl[k];
    for (std::size_t k = 0; k < hi.size(); ++k) rcu_aff[k] = su[k] * zu[k];
    Vec dx_a, dnu_a, dzl_a, dzu_a;
    newton(rcl_aff, rcu_aff, dx_a, dnu_a, dzl_a, dzu_a);
    double ap_a, ad_a;
    step_len(dx_a, dzl_a, dzu_a, ap_a, ad_a);
    double mu_aff = 0.0;
    for (std::size_t k = 0; k < lo.size(); ++k)
      mu_aff += (sl[k] + ap_a * dx_a[lo[k]]) * (zl[k] + ad_a * dzl_a[k]);
    for (std::size_t k = 0; k < hi.size(); ++k)
      mu_aff += (su[k] - ap_a * dx_a[hi[k]]) * (zu[k] + ad_a * dzu_a[k]);
    mu_aff /= mb;
    const double sigma = std::pow(std::clamp(mu_aff / mu, 0.0, 1.0), 3);

    // corrector
    Vec rcl(lo.size()), rcu(hi.size());
    for (std::size_t k = 0; k < lo.size(); ++k)
      rcl[k] = sl[k] * zl[k] + dx_a[lo[k]] * dzl_a[k] - sigma * mu;
    for (std::size_t k = 0; k < hi.size(); ++k)
      rcu[k] = su[k] * zu[k] - dx_a[hi[k]] * dzu_a[k] - sigma * mu;
    Vec dx, dnu, dzl, dzu;
    newton(rcl, rcu, dx, dnu, dzl, dzu);
    double ap, ad;
    step_len(dx, dzl, dzu, ap, ad);
    ap = std::min(1.0, 0.995 * ap);
    ad = std::min(1.0, 0.995 * ad);

    sol.x += ap * dx;
    if (me > 0) nu += ad * dnu;
    zl += ad * dzl;
    zu += ad * dzu;
    // keep multipliers strictly positive against roundoff
    zl = zl.cwiseMax(1e-300);
    zu = zu.cwiseMax(1e-300);
  }

  sol.eq_multipliers = nu;
  if (!sol.x.allFinite()) throw SolverFailure("interior point diverged to non-finite iterate");
  if (!sol.optimal) sol.status = "max_iter";
  else sol.status = "optimal";
  return sol;
}

}  // namespace dpfl::qp
