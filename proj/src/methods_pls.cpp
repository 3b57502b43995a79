#include <Eigen/Dense>

#include "methods_common.hpp"

// Partial least squares: uncentered NIPALS and SIMPLS cores, the recursive
// loading-stacking updates, and the clustering-based piecewise fits.

namespace dpfl::methods {

using detail::finish;
using detail::grid_over;
using detail::make_plain;
using detail::poll_budget;

namespace {

struct PlsFactors {
  Mat w, p, q;  // x-weights, x-loadings, y-loadings (one column per component)
  int extracted = 0;
  bool degenerate = false;  // requested components exceeded the data's rank
};

// PLS2 NIPALS on uncentered data. Extraction stops early (degenerate) when a
// deflated score carries no energy relative to the original scale.
PlsFactors nipals(Mat x, Mat y, int n_comp) {
  const int p = int(x.cols()), q = int(y.cols());
  PlsFactors f;
  f.w.resize(p, n_comp);
  f.p.resize(p, n_comp);
  f.q.resize(q, n_comp);
  const double floor2 = std::pow(x.norm() * 1e-14, 2) + 1e-300;

  for (int a = 0; a < n_comp; ++a) {
    // start from the strongest remaining response column
    int start = 0;
    double best = -1;
    for (int j = 0; j < q; ++j) {
      const double nrm = y.col(j).squaredNorm();
      if (nrm > best) {
        best = nrm;
        start = j;
      }
    }
    Vec u = y.col(start);
    Vec t_prev = Vec::Zero(x.rows());
    Vec w(p), t(x.rows()), qv(q);
    for (int inner = 0; inner < 100; ++inner) {
      w = x.transpose() * u;
      const double wn = w.norm();
      if (wn <= 0) break;
      w /= wn;
      t = x * w;
      const double tt = t.squaredNorm();
      if (tt <= 0) break;
      qv = y.transpose() * t / tt;
      const double qn = qv.squaredNorm();
      if (qn <= 0) break;
      u = y * qv / qn;
      if ((t - t_prev).norm() <= 1e-12 * t.norm()) break;
      t_prev = t;
    }
    const double tt = t.squaredNorm();
    if (!(tt > floor2)) {
      f.degenerate = true;
      break;
    }
    const Vec pv = x.transpose() * t / tt;
    f.w.col(a) = w;
    f.p.col(a) = pv;
    f.q.col(a) = y.transpose() * t / tt;
    x.noalias() -= t * pv.transpose();
    y.noalias() -= t * f.q.col(a).transpose();
    f.extracted = a + 1;
  }
  f.w.conservativeResize(p, f.extracted);
  f.p.conservativeResize(p, f.extracted);
  f.q.conservativeResize(q, f.extracted);
  return f;
}

// beta = W (P'W)^-1 Q'. The (P'W) inverse is deliberately an unthresholded
// solve; linearly dependent loading/weight columns surface as non-finite
// coefficients.
Mat nipals_beta(const PlsFactors& f) {
  if (f.extracted == 0) return Mat();
  const Mat pw = f.p.transpose() * f.w;
  const Mat inv = Eigen::PartialPivLU<Mat>(pw).inverse();
  return f.w * inv * f.q.transpose();
}

Mat simpls_beta(const Mat& x, const Mat& y, int n_comp) {
  const int p = int(x.cols());
  Mat s = x.transpose() * y;
  Mat r_all(p, n_comp), q_all(y.cols(), n_comp), v_basis(p, n_comp);
  int extracted = 0;
  for (int a = 0; a < n_comp; ++a) {
    Eigen::BDCSVD<Mat> svd(s, Eigen::ComputeThinU | Eigen::ComputeThinV);
    if (svd.singularValues().size() == 0 || svd.singularValues()[0] <= 1e-14 * (1.0 + s.norm()))
      break;
    Vec r = svd.matrixU().col(0) * svd.singularValues()[0];
    Vec t = x * r;
    const double tn = t.norm();
    if (tn <= 1e-14) break;
    t /= tn;
    r /= tn;
    const Vec pv = x.transpose() * t;
    const Vec qv = y.transpose() * t;
    Vec v = pv;
    for (int b = 0; b < extracted; ++b) v -= v_basis.col(b).dot(pv) * v_basis.col(b);
    const double vn = v.norm();
    if (vn <= 1e-14) break;
    v /= vn;
    s -= v * (v.transpose() * s);
    r_all.col(extracted) = r;
    q_all.col(extracted) = qv;
    v_basis.col(extracted) = v;
    ++extracted;
  }
  if (extracted == 0) return Mat::Zero(p, y.cols());
  return r_all.leftCols(extracted) * q_all.leftCols(extracted).transpose();
}

}  // namespace

FitResult fit_pls(const std::string& variant, const data::Dataset& train, const MethodConfig& cfg,
                  const MethodContext& ctx) {
  poll_budget(ctx);
  nlohmann::json diag;

  if (variant == "NIPALS" || variant == "SIMPLS") {
    int n_comp = int(cfg.hyper_num("n_components", 0));
    if (n_comp <= 0) n_comp = numlin::numerical_rank(train.x);
    n_comp = std::min<int>(n_comp, std::min<int>(train.n_samples(), int(train.x.cols())));
    diag["n_components"] = n_comp;
    const Mat beta = variant == "SIMPLS" ? simpls_beta(train.x, train.y, n_comp)
                                         : nipals_beta(nipals(train.x, train.y, n_comp));
    if (beta.size() == 0)
      return FitResult::fail(FailureRecord::Code::NaN, "degenerate deflation: no components");
    return finish(variant == "SIMPLS" ? "PLS_SIMRX" : "PLS_NIP", make_plain(train, beta), diag);
  }

  if (variant == "PLS_REC" || variant == "PLS_RECW") {
    const double share = cfg.hyper_num("new_data_share", 0.4);
    const double omega = variant == "PLS_RECW" ? cfg.hyper_num("forgetting", 0.6) : 1.0;
    const int n = train.n_samples();
    const int n_new = std::max(1, int(std::lround(share * n)));
    const int n_old = n - n_new;
    if (n_old < 1) return FitResult::fail(FailureRecord::Code::NaN, "old split is empty");

    const Mat x_old = train.x.topRows(n_old);
    const Mat y_old = train.y.topRows(n_old);
    const int a0 = std::max(1, numlin::numerical_rank(x_old));
    PlsFactors f = nipals(x_old, y_old, a0);
    if (f.extracted < a0)
      return FitResult::fail(FailureRecord::Code::NaN, "degenerate initial factorization");

    for (int t = n_old; t < n; ++t) {
      poll_budget(ctx);
      Mat xs(f.extracted + 1, train.x.cols());
      Mat ys(f.extracted + 1, train.y.cols());
      xs.topRows(f.extracted) = omega * f.p.transpose();
      ys.topRows(f.extracted) = omega * f.q.transpose();
      xs.row(f.extracted) = train.x.row(t);
      ys.row(f.extracted) = train.y.row(t);
      // forgetting decays stale directions; once the stack can no longer
      // support a0 independent components the factorization is degenerate
      // and the coefficient matrix would come out non-finite
      if (numlin::numerical_rank(xs) < a0)
        return FitResult::fail(
            FailureRecord::Code::NaN,
            "degenerate stacked factorization: loading/weight columns linearly dependent "
            "(forgetting=" + std::to_string(omega) + ", update " + std::to_string(t - n_old) + ")");
      f = nipals(std::move(xs), std::move(ys), a0);
      if (f.extracted < a0)
        return FitResult::fail(FailureRecord::Code::NaN, "degenerate deflation during update");
    }
    diag["n_components"] = a0;
    diag["forgetting"] = omega;
    diag["updates"] = n - n_old;
    return finish(variant, make_plain(train, nipals_beta(f)), diag);
  }
  throw UnknownKind("unknown pls variant " + variant);
}

// ---------------------------------------------------------------------------
// Clustering-based fits: k-means on predictors, one base model per cluster,
// nearest-centroid routing at predict time. k (and eta for the k-plane
// variant) selected by cross-validation.
// ---------------------------------------------------------------------------

namespace {

FitResult fit_clustered_fixed(const std::string& base, const data::Dataset& train, int k,
                              double eta, double lambda, const MethodConfig& cfg,
                              const MethodContext& ctx) {
  poll_budget(ctx);
  if (k > train.n_samples())
    return FitResult::fail(FailureRecord::Code::NaN, "more clusters than samples");

  LinearModel m;
  m.shape = LinearModel::Shape::Piecewise;
  m.x_tags = train.x_tags;
  m.y_tags = train.y_tags;
  m.norm = train.norm;

  try {
    if (base == "RR_KPC") {
      const numlin::KPlaneResult kp =
          numlin::kplane(train.x, train.y, k, eta, lambda, cfg.seed);
      m.centroids = kp.clustering.centroids;
      for (const auto& beta : kp.coefficients) m.members.push_back({beta, Vec()});
    } else {
      const numlin::Clustering cl = numlin::kmeans(train.x, k, cfg.seed);
      m.centroids = cl.centroids;
      for (int c = 0; c < cl.k; ++c) {
        std::vector<int> rows;
        for (int i = 0; i < train.n_samples(); ++i)
          if (cl.assignment[i] == c) rows.push_back(i);
        if (rows.empty()) continue;
        data::Dataset sub = bench::dataset_rows(train, rows);
        FitResult r = base == "LS_CLS" ? fit_ls_family("OLS", sub, cfg, ctx)
                                       : fit_pls("NIPALS", sub, cfg, ctx);
        if (r.failure) {
          r.failure->diagnostic = "cluster " + std::to_string(c) + ": " + r.failure->diagnostic;
          return r;
        }
        m.members.push_back(r.model->plain);
      }
    }
  } catch (const DegenerateCluster& e) {
    return FitResult::fail(FailureRecord::Code::NaN, e.what());
  }
  if (m.members.empty())
    return FitResult::fail(FailureRecord::Code::NaN, "no usable clusters");
  nlohmann::json diag;
  diag["k"] = int(m.members.size());
  if (base == "RR_KPC") diag["eta"] = eta;
  return finish(base == "RR_KPC" ? "RR_KPC" : (base == "LS_CLS" ? "LS_CLS" : "PLS_CLS"),
                std::move(m), diag);
}

}  // namespace

FitResult fit_clustered(const std::string& base, const data::Dataset& train,
                        const MethodConfig& cfg, const MethodContext& ctx) {
  std::vector<double> k_grid = cfg.hyper_grid("k_grid");
  if (k_grid.empty()) k_grid = {2, 3, 4, 5, 6, 7, 8, 9, 10};
  std::vector<double> eta_grid = cfg.hyper_grid("eta_grid");
  if (eta_grid.empty()) eta_grid = {1e2, 1e3, 1e4, 1e5};
  const double lambda = cfg.hyper_num("lambda", 1e-10);

  std::vector<MethodConfig> grid;
  for (double k : k_grid) {
    if (base == "RR_KPC") {
      for (double eta : eta_grid) {
        MethodConfig c = cfg;
        c.hyper["k"] = k;
        c.hyper["eta"] = eta;
        grid.push_back(std::move(c));
      }
    } else {
      MethodConfig c = cfg;
      c.hyper["k"] = k;
      grid.push_back(std::move(c));
    }
  }

  const FitFn inner = [&](const data::Dataset& d, const MethodConfig& c, const MethodContext& cx) {
    return fit_clustered_fixed(base, d, int(c.hyper_num("k", 2)), c.hyper_num("eta", 1e3),
                               lambda, c, cx);
  };

  try {
    const bench::CvResult cv = grid.size() > 1
                                   ? bench::cross_validate(inner, train, grid, cfg.cv_folds, ctx)
                                   : bench::CvResult{0, {0.0}};
    return inner(train, grid[cv.best_index], ctx);
  } catch (const AllFoldsFailed& e) {
    return FitResult::fail(FailureRecord::Code::NaN, e.what());
  }
}

}  // namespace dpfl::methods
