#include <Eigen/Dense>

#include "dpfl/qp.hpp"
#include "dpfl/rng.hpp"
#include "methods_common.hpp"

// Least-squares family: plain normal equations and its decomposition-,
// pseudoinverse-, PCA-, FGLS-, forgetting- and TLS-backed variants, the two
// Huber estimators, recursive least squares and the dimension-lifted fits.

namespace dpfl::methods {

using detail::finish;
using detail::grid_over;
using detail::make_plain;
using detail::poll_budget;

namespace {

// Plain normal equations via an unpivoted-solve inverse. A zero predictor
// column makes the Gram matrix exactly singular and the coefficients
// non-finite; that behavior is part of the method's contract.
Mat ols_normal_equations(const Mat& x, const Mat& y) {
  const Mat gram = x.transpose() * x;
  const Mat inv = Eigen::PartialPivLU<Mat>(gram).inverse();
  return inv * (x.transpose() * y);
}

// Explicit SVD inversion without a rank threshold: only exactly-zero
// singular values are skipped, so near-singular spectra degrade the model.
Mat ls_svd_solve(const Mat& x, const Mat& y) {
  Eigen::BDCSVD<Mat> svd(x, Eigen::ComputeThinU | Eigen::ComputeThinV);
  Vec inv = svd.singularValues();
  for (int i = 0; i < inv.size(); ++i) inv[i] = inv[i] > 0.0 ? 1.0 / inv[i] : 0.0;
  return svd.matrixV() * inv.asDiagonal() * (svd.matrixU().transpose() * y);
}

Mat tls_solve(const Mat& x, const Mat& y) {
  const int p = int(x.cols()), q = int(y.cols());
  Mat z(x.rows(), p + q);
  z << x, y;
  Eigen::BDCSVD<Mat> svd(z, Eigen::ComputeThinV);
  const Mat v = svd.matrixV();
  const Mat vxy = v.block(0, p, p, q);
  const Mat vyy = v.block(p, p, q, q);
  // vyy can carry an exactly-null column when a predictor column is zero;
  // the pseudoinverse keeps the estimator defined there while leaving the
  // near-singular (multicollinear) case to degrade as it does in practice.
  return -vxy * numlin::pinv(vyy);
}

Mat fgls_ar1(const Mat& x, const Mat& y) {
  const Mat beta0 = numlin::pinv_solve(x, y);
  const Mat resid = y - x * beta0;
  const int n = int(x.rows());
  Mat beta(x.cols(), y.cols());
  for (int j = 0; j < y.cols(); ++j) {
    double num = 0, den = 0;
    for (int t = 1; t < n; ++t) {
      num += resid(t, j) * resid(t - 1, j);
      den += resid(t - 1, j) * resid(t - 1, j);
    }
    double rho = den > 0 ? num / den : 0.0;
    rho = std::clamp(rho, -0.99, 0.99);
    // Prais-Winsten whitening, one pass
    Mat xt(n, x.cols());
    Vec yt(n);
    const double w0 = std::sqrt(1.0 - rho * rho);
    xt.row(0) = w0 * x.row(0);
    yt[0] = w0 * y(0, j);
    for (int t = 1; t < n; ++t) {
      xt.row(t) = x.row(t) - rho * x.row(t - 1);
      yt[t] = y(t, j) - rho * y(t - 1, j);
    }
    beta.col(j) = numlin::pinv_solve(xt, yt);
  }
  return beta;
}

Mat forgetting_wls(const Mat& x, const Mat& y, double omega) {
  const int n = int(x.rows());
  Mat xw = x;
  Mat yw = y;
  for (int t = 0; t < n; ++t) {
    const double w = std::sqrt(std::pow(omega, double(n - 1 - t)));
    xw.row(t) *= w;
    yw.row(t) *= w;
  }
  return numlin::pinv_solve(xw, yw);
}

Mat pca_ls(const Mat& x, const Mat& y, int n_keep) {
  const numlin::PcaBasis basis = numlin::pca(x);
  const Mat d = basis.d.leftCols(n_keep);
  const Mat z = x * d;
  return d * numlin::pinv_solve(z, y);
}

}  // namespace

FitResult fit_ls_family(const std::string& variant, const data::Dataset& train,
                        const MethodConfig& cfg, const MethodContext& ctx) {
  poll_budget(ctx);
  const Mat& x = train.x;
  const Mat& y = train.y;
  nlohmann::json diag;

  if (variant == "OLS") return finish("LS", make_plain(train, ols_normal_equations(x, y)));
  if (variant == "SVD") return finish("LS_SVD", make_plain(train, ls_svd_solve(x, y)));
  if (variant == "COD") return finish("LS_COD", make_plain(train, numlin::cod_solve(x, y)));
  if (variant == "PIN") return finish("LS_PIN", make_plain(train, numlin::pinv_solve(x, y)));
  if (variant == "TOL") return finish("LS_TOL", make_plain(train, tls_solve(x, y)));
  if (variant == "GEN") return finish("LS_GEN", make_plain(train, fgls_ar1(x, y)));
  if (variant == "WEI") {
    const double omega = cfg.hyper_num("forgetting", 0.6);
    diag["forgetting"] = omega;
    return finish("LS_WEI", make_plain(train, forgetting_wls(x, y, omega)), diag);
  }
  if (variant == "PCA") {
    const int rank = numlin::numerical_rank(x);
    std::vector<double> grid = cfg.hyper_grid("n_components_grid");
    if (grid.empty()) grid = {40, 50, 60, 70, 80};
    std::vector<double> clipped;
    for (double g : grid) {
      const double v = std::min<double>(g, rank);
      if (v >= 1 && (clipped.empty() || clipped.back() != v)) clipped.push_back(v);
    }
    const auto cfg_grid = grid_over(cfg, "n_components", clipped);
    const FitFn inner = [](const data::Dataset& d, const MethodConfig& c, const MethodContext& cx) {
      poll_budget(cx);
      const int keep = std::min<int>(int(c.hyper_num("n_components", 1)), int(d.x.cols()));
      return finish("LS_PCA", make_plain(d, pca_ls(d.x, d.y, keep)));
    };
    const bench::CvResult cv = bench::cross_validate(inner, train, cfg_grid, cfg.cv_folds, ctx);
    diag["n_components"] = clipped[cv.best_index];
    FitResult r = inner(train, cfg_grid[cv.best_index], ctx);
    r.diagnostics = diag;
    return r;
  }
  throw UnknownKind("unknown ls-family variant " + variant);
}

// ---------------------------------------------------------------------------
// Huber regression, direct (smooth minimization) and convex-QP routes
// ---------------------------------------------------------------------------

namespace {

double huber_value_grad(const Mat& x, const Vec& y, const Vec& beta, double delta, Vec& grad) {
  const Vec r = y - x * beta;
  double f = 0.0;
  Vec psi(r.size());
  for (int t = 0; t < r.size(); ++t) {
    const double a = std::abs(r[t]);
    if (a <= delta) {
      f += 0.5 * r[t] * r[t];
      psi[t] = r[t];
    } else {
      f += delta * a - 0.5 * delta * delta;
      psi[t] = delta * (r[t] > 0 ? 1.0 : -1.0);
    }
  }
  grad = -x.transpose() * psi;
  return f;
}

// L-BFGS with backtracking line search; single start from the pinv solution.
Vec huber_direct_column(const Mat& x, const Vec& y, double delta, const MethodContext& ctx) {
  const int p = int(x.cols());
  Vec beta = numlin::pinv_solve(x, y);
  Vec grad;
  double f = huber_value_grad(x, y, beta, delta, grad);

  const int mem = 10;
  std::vector<Vec> s_hist, y_hist;
  std::vector<double> rho_hist;
  const double gtol = 1e-12 * (1.0 + std::abs(f));

  for (int iter = 0; iter < 300; ++iter) {
    poll_budget(ctx);
    if (grad.lpNorm<Eigen::Infinity>() < gtol) break;

    // two-loop recursion
    Vec q = grad;
    std::vector<double> alpha(s_hist.size());
    for (int i = int(s_hist.size()) - 1; i >= 0; --i) {
      alpha[i] = rho_hist[i] * s_hist[i].dot(q);
      q -= alpha[i] * y_hist[i];
    }
    double h0 = 1.0;
    if (!s_hist.empty()) {
      const double yy = y_hist.back().squaredNorm();
      if (yy > 0) h0 = s_hist.back().dot(y_hist.back()) / yy;
    }
    Vec dir = -h0 * q;
    for (std::size_t i = 0; i < s_hist.size(); ++i) {
      const double b = rho_hist[i] * y_hist[i].dot(dir);
      dir += (alpha[i] - b) * s_hist[i];
    }
    if (grad.dot(dir) >= 0) dir = -grad;

    double step = 1.0;
    const double slope = grad.dot(dir);
    Vec beta_new(p);
    double f_new = f;
    for (int ls = 0; ls < 40; ++ls) {
      beta_new = beta + step * dir;
      Vec g_new;
      f_new = huber_value_grad(x, y, beta_new, delta, g_new);
      if (f_new <= f + 1e-4 * step * slope) {
        const Vec sv = beta_new - beta;
        const Vec yv = g_new - grad;
        const double sy = sv.dot(yv);
        if (sy > 1e-14) {
          s_hist.push_back(sv);
          y_hist.push_back(yv);
          rho_hist.push_back(1.0 / sy);
          if (int(s_hist.size()) > mem) {
            s_hist.erase(s_hist.begin());
            y_hist.erase(y_hist.begin());
            rho_hist.erase(rho_hist.begin());
          }
        }
        beta = beta_new;
        grad = g_new;
        f = f_new;
        break;
      }
      step *= 0.5;
      if (ls == 39) return beta;  // line search stalled; current point is usable
    }
  }
  return beta;
}

// Dual of the Huber problem: min 1/2 a'a - y'a  s.t.  X'a = 0, |a| <= delta.
// The equality multipliers are the primal coefficients.
Vec huber_convex_column(const Mat& x, const Vec& y, double delta, const MethodContext& ctx) {
  const int n = int(x.rows());
  qp::Problem prob;
  prob.c = -y;
  prob.p_diag = Vec::Ones(n);
  prob.a_eq = x.transpose();
  prob.b_eq = Vec::Zero(x.cols());
  prob.lower = Vec::Constant(n, -delta);
  prob.upper = Vec::Constant(n, delta);
  qp::Options opt;
  opt.budget = ctx.budget;
  const qp::Solution sol = qp::solve(prob, opt);
  if (!sol.optimal && sol.gap > 1e-6) throw SolverFailure("huber dual QP did not converge");
  return sol.eq_multipliers;
}

FitResult fit_huber_fixed(const std::string& id, const data::Dataset& train, double delta,
                          const MethodContext& ctx, bool direct) {
  Mat beta(train.x.cols(), train.y.cols());
  for (int j = 0; j < train.y.cols(); ++j) {
    poll_budget(ctx);
    beta.col(j) = direct ? huber_direct_column(train.x, train.y.col(j), delta, ctx)
                         : huber_convex_column(train.x, train.y.col(j), delta, ctx);
  }
  nlohmann::json diag;
  diag["delta"] = delta;
  return finish(id, make_plain(train, std::move(beta)), diag);
}

}  // namespace

FitResult fit_huber(const std::string& variant, const data::Dataset& train,
                    const MethodConfig& cfg, const MethodContext& ctx) {
  const bool direct = variant == "direct";
  const std::string id = direct ? "LS_HBLD" : "LS_HBLE";
  std::vector<double> grid = cfg.hyper_grid("delta_grid");
  if (grid.empty()) grid = {0.01, 0.02, 0.03, 0.04, 0.05};

  const FitFn inner = [&](const data::Dataset& d, const MethodConfig& c, const MethodContext& cx) {
    return fit_huber_fixed(id, d, c.hyper_num("delta", 0.01), cx, direct);
  };
  if (grid.size() == 1)
    return inner(train, grid_over(cfg, "delta", grid)[0], ctx);
  const auto cfg_grid = grid_over(cfg, "delta", grid);
  const bench::CvResult cv = bench::cross_validate(inner, train, cfg_grid, cfg.cv_folds, ctx);
  FitResult r = inner(train, cfg_grid[cv.best_index], ctx);
  r.diagnostics["delta"] = grid[cv.best_index];
  return r;
}

// ---------------------------------------------------------------------------
// Recursive least squares with forgetting
// ---------------------------------------------------------------------------

FitResult fit_recursive_ls(const data::Dataset& train, const MethodConfig& cfg,
                           const MethodContext& ctx, std::vector<double>* update_seconds) {
  const double share = cfg.hyper_num("new_data_share", 0.4);
  const double kappa = cfg.hyper_num("forgetting", 0.99);
  const int n = train.n_samples();
  const int n_new = std::max(1, int(std::lround(share * n)));
  const int n_old = n - n_new;
  if (n_old < 1) return FitResult::fail(FailureRecord::Code::NaN, "old split is empty");

  const Mat x_old = train.x.topRows(n_old);
  const Mat y_old = train.y.topRows(n_old);
  const Mat gram = x_old.transpose() * x_old;
  Mat p_cov = Eigen::PartialPivLU<Mat>(gram).inverse();
  Mat beta = p_cov * (x_old.transpose() * y_old);
  if (!p_cov.allFinite() || !beta.allFinite())
    return FitResult::fail(FailureRecord::Code::NaN,
                           "singular initialization on the old split");

  for (int t = n_old; t < n; ++t) {
    poll_budget(ctx);
    const auto tick = std::chrono::steady_clock::now();
    const Vec xt = train.x.row(t).transpose();
    const Vec g = p_cov * xt;
    const double denom = kappa + xt.dot(g);
    const Vec gain = g / denom;
    const Vec err = train.y.row(t).transpose() - beta.transpose() * xt;
    beta.noalias() += gain * err.transpose();
    p_cov = (p_cov - gain * g.transpose()) / kappa;
    if (update_seconds)
      update_seconds->push_back(
          std::chrono::duration<double>(std::chrono::steady_clock::now() - tick).count());
  }
  nlohmann::json diag;
  diag["forgetting"] = kappa;
  diag["n_old"] = n_old;
  return finish("LS_REC", make_plain(train, std::move(beta)), diag);
}

FitResult fit_recursive(const std::string& variant, const data::Dataset& train,
                        const MethodConfig& cfg, const MethodContext& ctx) {
  if (variant == "LS_REC") return fit_recursive_ls(train, cfg, ctx, nullptr);
  return fit_pls(variant, train, cfg, ctx);  // PLS_REC / PLS_RECW live with the PLS core
}

// ---------------------------------------------------------------------------
// Dimension lifting
// ---------------------------------------------------------------------------

namespace {

double median_of(std::vector<double> v) {
  if (v.empty()) return 0.0;
  std::nth_element(v.begin(), v.begin() + v.size() / 2, v.end());
  return v[v.size() / 2];
}

double median_pairwise_distance(const Mat& x, std::uint64_t seed) {
  const int n = int(x.rows());
  std::vector<int> idx(n);
  for (int i = 0; i < n; ++i) idx[i] = i;
  if (n > 256) {
    Rng rng(split_seed(seed, 0xD15));
    for (int i = 0; i < 256; ++i) std::swap(idx[i], idx[i + int(rng.below(n - i))]);
    idx.resize(256);
  }
  std::vector<double> d;
  d.reserve(idx.size() * (idx.size() - 1) / 2);
  for (std::size_t i = 0; i < idx.size(); ++i)
    for (std::size_t j = i + 1; j < idx.size(); ++j)
      d.push_back((x.row(idx[i]) - x.row(idx[j])).norm());
  return median_of(std::move(d));
}

}  // namespace

FitResult fit_lifted(const std::string& variant, const data::Dataset& train,
                     const MethodConfig& cfg, const MethodContext& ctx) {
  poll_budget(ctx);
  const int n = train.n_samples();
  const int p = int(train.x.cols());
  const int n_centers = int(cfg.hyper_num("n_centers", std::min(2.0 * p, n / 2.0)));
  nlohmann::json diag;
  diag["n_centers"] = n_centers;

  if (variant == "LS_LIFX") {
    const long width = p + n_centers;
    if (width > cfg.max_width)
      return FitResult::fail(FailureRecord::Code::OOT,
                             "lifted width " + std::to_string(width) + " exceeds the cap");
    double sigma = cfg.hyper_num("sigma", 0.0);
    if (sigma <= 0) sigma = median_pairwise_distance(train.x, cfg.seed);
    if (sigma <= 0) sigma = 1.0;
    diag["sigma"] = sigma;

    JointGaussLift lift;
    lift.sigma = sigma;
    lift.centers = numlin::kmeans(train.x, std::min(n_centers, n), cfg.seed, 1).centroids;

    LinearModel m = make_plain(train, Mat());
    m.shape = LinearModel::Shape::Lifted;
    m.joint_lift = lift;
    // featurize through the model's own path so train and predict agree
    Mat phi(n, p + lift.centers.rows());
    {
      LinearModel probe = m;
      probe.norm.normalized = false;  // x already in training space here
      phi.leftCols(p) = train.x;
      const double denom = 2.0 * sigma * sigma;
      for (int i = 0; i < n; ++i)
        for (int c = 0; c < lift.centers.rows(); ++c)
          phi(i, p + c) = std::exp(-(train.x.row(i) - lift.centers.row(c)).squaredNorm() / denom);
    }
    m.plain.beta = numlin::pinv_solve(phi, train.y);
    return finish("LS_LIFX", std::move(m), diag);
  }

  if (variant == "LS_LIFXi") {
    PerDimGaussLift lift;
    lift.centers.resize(p);
    lift.sigma = Vec::Ones(p);
    long width = p;
    for (int d = 0; d < p; ++d) {
      std::vector<double> col(train.x.col(d).data(), train.x.col(d).data() + n);
      std::sort(col.begin(), col.end());
      if (col.back() - col.front() <= 0) continue;  // constant/zero dims are not lifted
      std::vector<double> gaps;
      for (std::size_t i = 0; i + 1 < col.size(); ++i)
        for (std::size_t j = i + 1; j < std::min(col.size(), i + 32); ++j)
          gaps.push_back(std::abs(col[j] - col[i]));
      double sig = median_of(std::move(gaps));
      if (sig <= 0) sig = (col.back() - col.front()) / n_centers;
      lift.sigma[d] = sig;
      Vec cs(n_centers);
      for (int k = 0; k < n_centers; ++k) {
        const double q = (k + 0.5) / n_centers;
        cs[k] = col[std::min<std::size_t>(col.size() - 1, std::size_t(q * col.size()))];
      }
      lift.centers[d] = cs;
      width += n_centers;
    }
    if (width > cfg.max_width)
      return FitResult::fail(FailureRecord::Code::OOT,
                             "lifted width " + std::to_string(width) + " exceeds the cap");
    diag["width"] = width;

    LinearModel m = make_plain(train, Mat());
    m.shape = LinearModel::Shape::Lifted;
    m.perdim_lift = lift;

    Mat phi(n, width);
    phi.leftCols(p) = train.x;
    int col_at = p;
    for (int d = 0; d < p; ++d) {
      const Vec& cs = lift.centers[d];
      if (cs.size() == 0) continue;
      const double denom = 2.0 * lift.sigma[d] * lift.sigma[d];
      for (int k = 0; k < cs.size(); ++k, ++col_at)
        for (int i = 0; i < n; ++i) {
          const double diff = train.x(i, d) - cs[k];
          phi(i, col_at) = std::exp(-diff * diff / denom);
        }
    }
    poll_budget(ctx);
    m.plain.beta = numlin::pinv_solve(phi, train.y);
    return finish("LS_LIFXi", std::move(m), diag);
  }
  throw UnknownKind("unknown lifted variant " + variant);
}

}  // namespace dpfl::methods
