#include <Eigen/Dense>

#include "dpfl/acpf.hpp"
#include "methods_common.hpp"

// Ridge regression family: plain ridge, voltage-coupling-squared recovery,
// and the locally weighted (lazy) variant. The clustered variant RR_KPC is
// dispatched through fit_clustered.

namespace dpfl::methods {

using detail::finish;
using detail::grid_over;
using detail::make_plain;
using detail::poll_budget;

FitResult fit_ridge(const std::string& variant, const data::Dataset& train,
                    const MethodConfig& cfg, const MethodContext& ctx) {
  poll_budget(ctx);
  const double lambda = cfg.hyper_num("lambda", 1e-10);
  nlohmann::json diag;
  diag["lambda"] = lambda;

  if (variant == "RR")
    return finish("RR", make_plain(train, numlin::ridge_solve(train.x, train.y, lambda)), diag);

  if (variant == "RR_VCS") {
    if (FitResult r = detail::require_raw(train, "RR_VCS"); r.failure) return r;
    if (!ctx.grid) throw SemanticError("RR_VCS needs the case topology");
    const grid::GridCase& c = *ctx.grid;

    LinearModel m = make_plain(train, numlin::ridge_solve(train.x, train.y, lambda));
    m.shape = LinearModel::Shape::Lifted;
    VcsRecovery rec;
    rec.n_buses = c.n_buses();
    const int nl = c.n_branches();
    rec.from.resize(nl);
    rec.to.resize(nl);
    rec.gff.resize(nl); rec.bff.resize(nl); rec.gft.resize(nl); rec.bft.resize(nl);
    rec.gtf.resize(nl); rec.btf.resize(nl); rec.gtt.resize(nl); rec.btt.resize(nl);
    for (int l = 0; l < nl; ++l) {
      const auto& br = c.branches[l];
      rec.from[l] = br.from;
      rec.to[l] = br.to;
      Cplx yff = 0, yft = 0, ytf = 0, ytt = 0;
      if (br.in_service) {
        const Cplx ys = 1.0 / Cplx(br.r, br.x);
        const Cplx ysh(0.0, br.b_charging / 2.0);
        const Cplx tap = std::polar(br.tap_ratio, br.phase_shift);
        yff = (ys + ysh) / (tap * std::conj(tap));
        yft = -ys / std::conj(tap);
        ytf = -ys / tap;
        ytt = ys + ysh;
      }
      rec.gff[l] = yff.real(); rec.bff[l] = yff.imag();
      rec.gft[l] = yft.real(); rec.bft[l] = yft.imag();
      rec.gtf[l] = ytf.real(); rec.btf[l] = ytf.imag();
      rec.gtt[l] = ytt.real(); rec.btt[l] = ytt.imag();
    }
    m.vcs = std::move(rec);
    // recovered outputs: V per bus, then PF/PT/QF/QT per branch
    m.y_tags.clear();
    for (int b = 0; b < c.n_buses(); ++b) m.y_tags.push_back({data::Kind::V, b});
    for (int l = 0; l < nl; ++l) m.y_tags.push_back({data::Kind::PF, l});
    for (int l = 0; l < nl; ++l) m.y_tags.push_back({data::Kind::PT, l});
    for (int l = 0; l < nl; ++l) m.y_tags.push_back({data::Kind::QF, l});
    for (int l = 0; l < nl; ++l) m.y_tags.push_back({data::Kind::QT, l});
    return finish("RR_VCS", std::move(m), diag);
  }

  if (variant == "RR_WEI") {
    std::vector<double> tau_grid = cfg.hyper_grid("tau_grid");
    if (tau_grid.empty())
      for (double t = 0.10; t <= 0.351; t += 0.01) tau_grid.push_back(t);

    const FitFn inner = [&](const data::Dataset& d, const MethodConfig& c,
                            const MethodContext& cx) {
      poll_budget(cx);
      LinearModel m;
      m.shape = LinearModel::Shape::Local;
      m.x_tags = d.x_tags;
      m.y_tags = d.y_tags;
      m.norm = d.norm;
      m.local = LocalRidge{d.x, d.y, c.hyper_num("tau", 0.1), lambda};
      return finish("RR_WEI", std::move(m));
    };
    const auto cfg_grid = grid_over(cfg, "tau", tau_grid);
    const bench::CvResult cv = bench::cross_validate(inner, train, cfg_grid, cfg.cv_folds, ctx);
    FitResult r = inner(train, cfg_grid[cv.best_index], ctx);
    r.diagnostics["tau"] = tau_grid[cv.best_index];
    r.diagnostics["lambda"] = lambda;
    return r;
  }
  throw UnknownKind("unknown ridge variant " + variant);
}

}  // namespace dpfl::methods
