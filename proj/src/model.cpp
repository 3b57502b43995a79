#include "dpfl/model.hpp"

#include <cmath>

#include "dpfl/numlin.hpp"

namespace dpfl::methods {

namespace {

Mat apply_plain(const PlainMap& map, const Mat& x) {
  Mat y = x * map.beta;
  if (map.intercept.size() > 0) y.rowwise() += map.intercept.transpose();
  return y;
}

bool plain_finite(const PlainMap& m) {
  return m.beta.allFinite() && (m.intercept.size() == 0 || m.intercept.allFinite());
}

}  // namespace

bool LinearModel::finite() const {
  switch (shape) {
    case Shape::Plain: return plain_finite(plain);
    case Shape::Piecewise: {
      if (!centroids.allFinite()) return false;
      for (const auto& m : members)
        if (!plain_finite(m)) return false;
      return true;
    }
    case Shape::Lifted:
      if (joint_lift || perdim_lift) return plain_finite(plain);
      if (poly_kernel) return poly_kernel->alpha.allFinite();
      if (vcs) return plain_finite(plain);
      return false;
    case Shape::Local: return local && local->x_train.allFinite() && local->y_train.allFinite();
  }
  return false;
}

int LinearModel::model_type() const {
  switch (shape) {
    case Shape::Plain:
    case Shape::Local: return 1;
    case Shape::Piecewise: return 2;
    case Shape::Lifted: return 3;
  }
  return 1;
}

namespace {

Mat lift_joint(const JointGaussLift& l, const Mat& x) {
  const int n = int(x.rows());
  const int nc = int(l.centers.rows());
  Mat out(n, x.cols() + nc);
  out.leftCols(x.cols()) = x;
  const double denom = 2.0 * l.sigma * l.sigma;
  for (int i = 0; i < n; ++i)
    for (int c = 0; c < nc; ++c)
      out(i, x.cols() + c) = std::exp(-(x.row(i) - l.centers.row(c)).squaredNorm() / denom);
  return out;
}

Mat lift_perdim(const PerDimGaussLift& l, const Mat& x) {
  int width = int(x.cols());
  for (const auto& c : l.centers) width += int(c.size());
  Mat out(x.rows(), width);
  out.leftCols(x.cols()) = x;
  int col = int(x.cols());
  for (int d = 0; d < int(l.centers.size()); ++d) {
    const Vec& cs = l.centers[d];
    if (cs.size() == 0) continue;
    const double denom = 2.0 * l.sigma[d] * l.sigma[d];
    for (int c = 0; c < cs.size(); ++c, ++col)
      for (int i = 0; i < x.rows(); ++i) {
        const double diff = x(i, d) - cs[c];
        out(i, col) = std::exp(-diff * diff / denom);
      }
  }
  return out;
}

}  // namespace

Mat LinearModel::predict_counting(const Mat& x_raw, long* clamp_count) const {
  if (x_raw.cols() != int(x_tags.size()))
    throw TagMismatch("query width does not match the model's predictor tags");
  if (!finite())
    throw NonFinite("predict called on a non-finite (failed) model");

  Mat x = x_raw;
  if (norm.normalized)
    for (int c = 0; c < x.cols(); ++c) x.col(c) /= norm.x_scale[c];

  Mat y;
  switch (shape) {
    case Shape::Plain: y = apply_plain(plain, x); break;
    case Shape::Piecewise: {
      y.resize(x.rows(), members.front().beta.cols());
      for (int i = 0; i < x.rows(); ++i) {
        const int c = numlin::nearest_centroid(centroids, x.row(i).transpose());
        y.row(i) = apply_plain(members[c], x.row(i));
      }
      break;
    }
    case Shape::Lifted: {
      if (joint_lift) {
        y = apply_plain(plain, lift_joint(*joint_lift, x));
      } else if (perdim_lift) {
        y = apply_plain(plain, lift_perdim(*perdim_lift, x));
      } else if (poly_kernel) {
        Mat k = (x * poly_kernel->sv_x.transpose()).array() + 1.0;
        k = k.array().pow(poly_kernel->degree);
        y = k * poly_kernel->alpha;
      } else if (vcs) {
        // raw regression outputs: [V^2 per bus, R per branch, C per branch]
        const Mat z = apply_plain(plain, x);
        const int nb = vcs->n_buses;
        const int nl = int(vcs->from.size());
        y.resize(x.rows(), nb + 4 * nl);
        for (int i = 0; i < x.rows(); ++i) {
          for (int b = 0; b < nb; ++b) {
            double v2 = z(i, b);
            if (v2 < vcs->clamp_floor) {
              v2 = vcs->clamp_floor;
              if (clamp_count) ++*clamp_count;
            }
            y(i, b) = std::sqrt(v2);
          }
          for (int l = 0; l < nl; ++l) {
            const double v2f = std::max(z(i, vcs->from[l]), vcs->clamp_floor);
            const double v2t = std::max(z(i, vcs->to[l]), vcs->clamp_floor);
            const double r = z(i, nb + l);
            const double cc = z(i, nb + nl + l);
            y(i, nb + l) = vcs->gff[l] * v2f + vcs->gft[l] * r + vcs->bft[l] * cc;           // PF
            y(i, nb + nl + l) = vcs->gtt[l] * v2t + vcs->gtf[l] * r - vcs->btf[l] * cc;      // PT
            y(i, nb + 2 * nl + l) = -vcs->bff[l] * v2f - vcs->bft[l] * r + vcs->gft[l] * cc; // QF
            y(i, nb + 3 * nl + l) = -vcs->btt[l] * v2t - vcs->btf[l] * r - vcs->gtf[l] * cc; // QT
          }
        }
        break;  // vcs outputs are already physical; no y de-normalization
      } else {
        throw NonFinite("lifted model without a lift descriptor");
      }
      break;
    }
    case Shape::Local: {
      y.resize(x.rows(), local->y_train.cols());
      const double denom = 2.0 * local->tau * local->tau;
      for (int i = 0; i < x.rows(); ++i) {
        Vec w(local->x_train.rows());
        for (int t = 0; t < local->x_train.rows(); ++t)
          w[t] = std::exp(-(x.row(i) - local->x_train.row(t)).squaredNorm() / denom);
        const Mat beta = numlin::weighted_ridge_solve(local->x_train, local->y_train, w,
                                                      local->lambda);
        y.row(i) = x.row(i) * beta;
      }
      break;
    }
  }

  if (norm.normalized && !(shape == Shape::Lifted && vcs))
    for (int c = 0; c < y.cols(); ++c) y.col(c) *= norm.y_scale[c];
  return y;
}

Mat LinearModel::predict(const Mat& x_raw) const { return predict_counting(x_raw, nullptr); }

}  // namespace dpfl::methods
