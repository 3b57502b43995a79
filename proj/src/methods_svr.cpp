#include <Eigen/Dense>

#include "dpfl/qp.hpp"
#include "methods_common.hpp"

// Epsilon-insensitive support vector regression, one response column at a
// time, through the internal interior-point solver:
//   SVR     linear, slack penalty only (an LP in disguise); the equality
//           multipliers of the dual are the primal coefficients
//   SVR_RR  adds lambda ||beta||^2; beta recovered from the dual variables
//   SVR_POL dual kernel machine with a 3rd-order polynomial kernel

namespace dpfl::methods {

using detail::finish;
using detail::make_plain;
using detail::poll_budget;

namespace {

struct SvrConfig {
  double epsilon, omega, lambda;
};

Vec svr_linear_column(const Mat& x, const Vec& y, const SvrConfig& sc, const MethodContext& ctx) {
  const int n = int(x.rows());
  qp::Problem prob;
  prob.c.resize(2 * n);
  prob.c.head(n) = Vec::Constant(n, sc.epsilon) - y;
  prob.c.tail(n) = Vec::Constant(n, sc.epsilon) + y;
  prob.lower = Vec::Zero(2 * n);
  prob.upper = Vec::Constant(2 * n, sc.omega);
  prob.a_eq.resize(x.cols(), 2 * n);
  prob.a_eq << x.transpose(), -x.transpose();
  prob.b_eq = Vec::Zero(x.cols());
  qp::Options opt;
  opt.budget = ctx.budget;
  const qp::Solution sol = qp::solve(prob, opt);
  if (!sol.optimal && sol.gap > 1e-5) throw SolverFailure("svr dual did not converge");
  return sol.eq_multipliers;
}

Vec svr_ridge_column(const Mat& x, const Vec& y, const SvrConfig& sc, const MethodContext& ctx) {
  const int n = int(x.rows());
  qp::Problem prob;
  prob.c.resize(2 * n);
  prob.c.head(n) = Vec::Constant(n, sc.epsilon) - y;
  prob.c.tail(n) = Vec::Constant(n, sc.epsilon) + y;
  prob.lower = Vec::Zero(2 * n);
  prob.upper = Vec::Constant(2 * n, sc.omega);
  const Mat xs = x / std::sqrt(2.0 * sc.lambda);
  prob.p_factor.resize(2 * n, x.cols());
  prob.p_factor << xs, -xs;
  qp::Options opt;
  opt.budget = ctx.budget;
  const qp::Solution sol = qp::solve(prob, opt);
  if (!sol.optimal && sol.gap > 1e-5) throw SolverFailure("svr-rr dual did not converge");
  const Vec d = sol.x.head(n) - sol.x.tail(n);
  return x.transpose() * d / (2.0 * sc.lambda);
}

Vec svr_kernel_column(const Mat& k_chol, const Vec& y, const SvrConfig& sc,
                      const MethodContext& ctx) {
  const int n = int(y.size());
  qp::Problem prob;
  prob.c.resize(2 * n);
  prob.c.head(n) = Vec::Constant(n, sc.epsilon) - y;
  prob.c.tail(n) = Vec::Constant(n, sc.epsilon) + y;
  prob.lower = Vec::Zero(2 * n);
  prob.upper = Vec::Constant(2 * n, sc.omega);
  prob.p_factor.resize(2 * n, k_chol.cols());
  prob.p_factor << k_chol, -k_chol;
  qp::Options opt;
  opt.budget = ctx.budget;
  const qp::Solution sol = qp::solve(prob, opt);
  if (!sol.optimal && sol.gap > 1e-5) throw SolverFailure("kernel svr dual did not converge");
  return sol.x.head(n) - sol.x.tail(n);
}

}  // namespace

FitResult fit_svr(const std::string& variant, const data::Dataset& train, const MethodConfig& cfg,
                  const MethodContext& ctx) {
  poll_budget(ctx);
  SvrConfig sc;
  sc.epsilon = cfg.hyper_num("epsilon", 1e-4);
  sc.omega = cfg.hyper_num("omega", 10.0);
  sc.lambda = cfg.hyper_num("lambda", 1e-4);
  nlohmann::json diag;
  diag["epsilon"] = sc.epsilon;
  diag["omega"] = sc.omega;

  const long n_dec = 2L * train.n_samples() * train.y.cols();
  if (n_dec > cfg.max_width * 64L)
    return FitResult::fail(FailureRecord::Code::OOT,
                           "decision variable count exceeds the configured cap");

  try {
    if (variant == "SVR" || variant == "SVR_RR") {
      if (variant == "SVR_RR") diag["lambda"] = sc.lambda;
      Mat beta(train.x.cols(), train.y.cols());
      for (int j = 0; j < train.y.cols(); ++j) {
        poll_budget(ctx);
        beta.col(j) = variant == "SVR" ? svr_linear_column(train.x, train.y.col(j), sc, ctx)
                                       : svr_ridge_column(train.x, train.y.col(j), sc, ctx);
      }
      return finish(variant, make_plain(train, std::move(beta)), diag);
    }

    if (variant == "SVR_POL") {
      const int degree = int(cfg.hyper_num("degree", 3));
      diag["degree"] = degree;
      Mat k = (train.x * train.x.transpose()).array() + 1.0;
      k = k.array().pow(degree);
      // PSD factor of the kernel for the quadratic term
      Mat k_j = k;
      k_j.diagonal().array() += 1e-10 * (1.0 + k.trace() / k.rows());
      Eigen::LLT<Mat> llt(k_j);
      if (llt.info() != Eigen::Success)
        return FitResult::fail(FailureRecord::Code::NaN, "kernel matrix not positive definite");
      const Mat k_chol = Mat(llt.matrixL());

      Mat alpha(train.n_samples(), train.y.cols());
      for (int j = 0; j < train.y.cols(); ++j) {
        poll_budget(ctx);
        alpha.col(j) = svr_kernel_column(k_chol, train.y.col(j), sc, ctx);
      }
      LinearModel m;
      m.shape = LinearModel::Shape::Lifted;
      m.x_tags = train.x_tags;
      m.y_tags = train.y_tags;
      m.norm = train.norm;
      m.poly_kernel = PolyKernelExpansion{train.x, std::move(alpha), degree};
      return finish("SVR_POL", std::move(m), diag);
    }
  } catch (const SolverFailure& e) {
    return FitResult::fail(FailureRecord::Code::NaN, e.what());
  }
  throw UnknownKind("unknown svr variant " + variant);
}

}  // namespace dpfl::methods
