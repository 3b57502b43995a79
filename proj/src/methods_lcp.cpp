#include <Eigen/Dense>

#include "dpfl/qp.hpp"
#include "methods_common.hpp"
#include "physics_common.hpp"

// Linearly constrained programs (box / coupling variants with and without
// their key constraints) and the physics-hybrid fits: DC susceptance
// re-estimation and DLPF error correction. All work on raw data; each
// regression carries a free intercept column so the affine offset of the
// physical quantities is not forced through the slope coefficients.

namespace dpfl::methods {

using detail::finish;
using detail::make_plain;
using detail::poll_budget;
using grid::BusKind;

namespace {

Mat with_ones(const Mat& x) {
  Mat out(x.rows(), x.cols() + 1);
  out.leftCols(x.cols()) = x;
  out.col(x.cols()).setOnes();
  return out;
}

// affine least squares; returns beta rows = predictors, last row = intercept
Mat affine_ls(const Mat& x, const Mat& y) { return numlin::cod_solve(with_ones(x), y); }

LinearModel affine_model(const data::Dataset& train, const Mat& beta_aug) {
  LinearModel m = make_plain(train, beta_aug.topRows(beta_aug.rows() - 1),
                             beta_aug.row(beta_aug.rows() - 1).transpose());
  return m;
}

// QP: min 1/2 || [X 1] b - y ||^2 with per-coefficient bounds (infinite for
// the intercept and any unconstrained slots).
Vec constrained_affine_column(const Mat& x_aug, const Vec& y, const Vec& lower, const Vec& upper,
                              const MethodContext& ctx) {
  qp::Problem prob;
  prob.p_dense = x_aug.transpose() * x_aug;
  prob.c = -x_aug.transpose() * y;
  prob.lower = lower;
  prob.upper = upper;
  qp::Options opt;
  opt.budget = ctx.budget;
  const qp::Solution sol = qp::solve(prob, opt);
  if (!sol.optimal && sol.gap > 1e-6) throw SolverFailure("constrained LS did not converge");
  return sol.x;
}

}  // namespace

FitResult fit_lcp(const std::string& variant, const data::Dataset& train, const MethodConfig& cfg,
                  const MethodContext& ctx) {
  poll_budget(ctx);
  if (FitResult r = detail::require_raw(train, variant); r.failure) return r;
  nlohmann::json diag;

  if (variant == "BOXN" || variant == "COUN") {
    // unconstrained least squares on the same predictor/response sets
    return finish(variant == "BOXN" ? "LCP_BOXN" : "LCP_COUN",
                  affine_model(train, affine_ls(train.x, train.y)));
  }

  const Mat x_aug = with_ones(train.x);
  const int p_aug = int(x_aug.cols());

  if (variant == "BOX") {
    if (!ctx.grid || !ctx.train_samples)
      throw SemanticError("LCP_BOX needs the case and training samples");
    const grid::GridCase& c = *ctx.grid;
    const int n = c.n_buses();
    const int slack = c.slack();
    std::vector<int> pos_ns(n, -1), pos_pq(n, -1);
    {
      int a = 0, v = 0;
      for (int i = 0; i < n; ++i) {
        if (i != slack) pos_ns[i] = a++;
        if (c.buses[i].kind == BusKind::PQ) pos_pq[i] = v++;
      }
    }
    const int na = int(train.x_tags.size());

    // every training point serves as a tangent point; the coefficient bounds
    // are the elementwise min/max of the Taylor sensitivities
    Mat lo = Mat::Constant(na, int(train.y_tags.size()), qp::kInf);
    Mat hi = Mat::Constant(na, int(train.y_tags.size()), -qp::kInf);
    for (const auto& solp : ctx.train_samples->solutions) {
      poll_budget(ctx);
      Mat sens;
      try {
        sens = pf::sensitivity_at(c, solp);
      } catch (const SingularJacobian&) {
        return FitResult::fail(FailureRecord::Code::NaN, "singular tangent-point Jacobian");
      }
      const int blk = int(std::count_if(pos_ns.begin(), pos_ns.end(), [](int v) { return v >= 0; }));
      for (std::size_t yc = 0; yc < train.y_tags.size(); ++yc) {
        const auto& yt = train.y_tags[yc];
        const int r = yt.kind == data::Kind::V ? blk + pos_pq[yt.element] : pos_ns[yt.element];
        for (std::size_t xc = 0; xc < train.x_tags.size(); ++xc) {
          const auto& xt = train.x_tags[xc];
          const int cc = xt.kind == data::Kind::P ? pos_ns[xt.element] : blk + pos_pq[xt.element];
          const double s = sens(r, cc);
          lo(xc, yc) = std::min(lo(xc, yc), s);
          hi(xc, yc) = std::max(hi(xc, yc), s);
        }
      }
    }
    if (!lo.allFinite() || !hi.allFinite())
      return FitResult::fail(FailureRecord::Code::NaN, "non-finite Taylor bounds");
    for (int i = 0; i < lo.size(); ++i)
      if (lo.data()[i] > hi.data()[i])
        throw InfeasibleConstraints("inconsistent Taylor coefficient bounds");

    Mat beta_aug(p_aug, train.y.cols());
    try {
      for (int j = 0; j < train.y.cols(); ++j) {
        poll_budget(ctx);
        Vec lower = Vec::Constant(p_aug, -qp::kInf), upper = Vec::Constant(p_aug, qp::kInf);
        lower.head(p_aug - 1) = lo.col(j);
        upper.head(p_aug - 1) = hi.col(j);
        beta_aug.col(j) = constrained_affine_column(x_aug, train.y.col(j), lower, upper, ctx);
      }
    } catch (const SolverFailure& e) {
      return FitResult::fail(FailureRecord::Code::NaN, e.what());
    }
    return finish("LCP_BOX", affine_model(train, beta_aug), diag);
  }

  if (variant == "COU") {
    if (!ctx.grid) throw SemanticError("LCP_COU needs the case topology");
    const grid::GridCase& c = *ctx.grid;
    const double margin = cfg.hyper_num("delta_lin", 1e-2);
    diag["delta_lin"] = margin;

    Mat beta_aug(p_aug, train.y.cols());
    try {
      for (std::size_t yc = 0; yc < train.y_tags.size(); ++yc) {
        poll_budget(ctx);
        const auto& br = c.branches[train.y_tags[yc].element];
        Vec lower = Vec::Constant(p_aug, -qp::kInf), upper = Vec::Constant(p_aug, qp::kInf);
        // a line's flow grows with its from-side angle and falls with the
        // to-side angle (DC orientation); enforce the sign split
        const int col_from = train.find_x({data::Kind::Theta, br.from});
        const int col_to = train.find_x({data::Kind::Theta, br.to});
        if (col_from >= 0) lower[col_from] = margin;
        if (col_to >= 0) upper[col_to] = -margin;
        beta_aug.col(int(yc)) =
            constrained_affine_column(x_aug, train.y.col(int(yc)), lower, upper, ctx);
      }
    } catch (const SolverFailure& e) {
      return FitResult::fail(FailureRecord::Code::NaN, e.what());
    }
    return finish("LCP_COU", affine_model(train, beta_aug), diag);
  }
  throw UnknownKind("unknown lcp variant " + variant);
}

// ---------------------------------------------------------------------------
// Physics hybrids
// ---------------------------------------------------------------------------

FitResult fit_hybrid(const std::string& variant, const data::Dataset& train,
                     const MethodConfig& cfg, const MethodContext& ctx) {
  poll_budget(ctx);
  if (FitResult r = detail::require_raw(train, variant); r.failure) return r;
  if (!ctx.grid) throw SemanticError("hybrid methods need the case");
  const grid::GridCase& c = *ctx.grid;

  if (variant == "DC_LS") {
    // P_red =~ Ar' diag(s) Ar theta_red; fit per-line susceptances s by
    // stacked linear least squares, then predict theta = B(s)^-1 P.
    const int slack = c.slack();
    const int n = c.n_buses();
    std::vector<int> red(n, -1);
    int m = 0;
    for (int i = 0; i < n; ++i)
      if (i != slack) red[i] = m++;
    std::vector<int> lines;
    for (int l = 0; l < c.n_branches(); ++l)
      if (c.branches[l].in_service) lines.push_back(l);
    const int nl = int(lines.size());

    Mat ata = Mat::Zero(nl, nl);
    Vec atb = Vec::Zero(nl);
    const int nsamp = train.n_samples();
    for (int t = 0; t < nsamp; ++t) {
      poll_budget(ctx);
      Mat mt = Mat::Zero(m, nl);
      for (int k = 0; k < nl; ++k) {
        const auto& br = c.branches[lines[k]];
        const double th_f = red[br.from] >= 0 ? train.y(t, red[br.from]) : 0.0;
        const double th_t = red[br.to] >= 0 ? train.y(t, red[br.to]) : 0.0;
        const double d = th_f - th_t;
        if (red[br.from] >= 0) mt(red[br.from], k) += d;
        if (red[br.to] >= 0) mt(red[br.to], k) -= d;
      }
      ata.noalias() += mt.transpose() * mt;
      atb.noalias() += mt.transpose() * train.x.row(t).transpose();
    }
    const Vec s = ata.ldlt().solve(atb);

    Mat b_red = Mat::Zero(m, m);
    for (int k = 0; k < nl; ++k) {
      const auto& br = c.branches[lines[k]];
      const int f = red[br.from], t = red[br.to];
      if (f >= 0) b_red(f, f) += s[k];
      if (t >= 0) b_red(t, t) += s[k];
      if (f >= 0 && t >= 0) {
        b_red(f, t) -= s[k];
        b_red(t, f) -= s[k];
      }
    }
    const Mat binv = Eigen::PartialPivLU<Mat>(b_red).inverse();
    nlohmann::json diag;
    diag["n_lines"] = nl;
    return finish("DC_LS", make_plain(train, binv.transpose()), diag);
  }

  if (variant == "DLPF_C") {
    // evaluate the decoupled physics model, then least-squares-fit (via QR)
    // a correction from the predictors to the residual
    FitResult base = ppfl_model("DLPF", train, cfg, ctx);
    if (base.failure) return base;
    const LinearModel& phys = *base.model;
    Mat y_phys = train.x * phys.plain.beta;
    y_phys.rowwise() += phys.plain.intercept.transpose();
    const Mat resid = train.y - y_phys;
    const Mat corr = Eigen::ColPivHouseholderQR<Mat>(train.x).solve(resid);
    LinearModel m = make_plain(train, phys.plain.beta + corr, phys.plain.intercept);
    return finish("DLPF_C", std::move(m));
  }
  throw UnknownKind("unknown hybrid variant " + variant);
}

}  // namespace dpfl::methods
