#include "dpfl/numlin.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

#include <Eigen/Dense>

#include "dpfl/rng.hpp"

namespace dpfl::numlin {

double default_rank_tol(int rows, int cols) {
  return std::max(rows, cols) * std::numeric_limits<double>::epsilon();
}

Mat pinv(const Mat& a, double rank_tol) {
  if (!a.allFinite()) throw NonFinite("pinv input has non-finite entries");
  if (rank_tol <= 0) rank_tol = default_rank_tol(int(a.rows()), int(a.cols()));
  Eigen::BDCSVD<Mat> svd(a, Eigen::ComputeThinU | Eigen::ComputeThinV);
  const Vec& s = svd.singularValues();
  const double cutoff = s.size() > 0 ? rank_tol * s[0] : 0.0;
  Vec inv = Vec::Zero(s.size());
  for (int i = 0; i < s.size(); ++i)
    if (s[i] > cutoff) inv[i] = 1.0 / s[i];
  return svd.matrixV() * inv.asDiagonal() * svd.matrixU().transpose();
}

Mat cod_solve(const Mat& x, const Mat& y) {
  if (x.rows() != y.rows()) throw DimensionMismatch("cod_solve: row counts differ");
  if (!x.allFinite() || !y.allFinite()) throw NonFinite("cod_solve input has non-finite entries");
  Eigen::CompleteOrthogonalDecomposition<Mat> cod(x);
  return cod.solve(y);
}

Mat pinv_solve(const Mat& x, const Mat& y, double rank_tol) {
  if (x.rows() != y.rows()) throw DimensionMismatch("pinv_solve: row counts differ");
  return pinv(x, rank_tol) * y;
}

int numerical_rank(const Mat& a, double rank_tol) {
  if (a.size() == 0) return 0;
  if (rank_tol <= 0) rank_tol = default_rank_tol(int(a.rows()), int(a.cols()));
  Eigen::BDCSVD<Mat> svd(a);
  const Vec& s = svd.singularValues();
  if (s.size() == 0) return 0;
  const double cutoff = rank_tol * s[0];
  int r = 0;
  for (int i = 0; i < s.size(); ++i)
    if (s[i] > cutoff) ++r;
  return r;
}

PcaBasis pca(const Mat& x) {
  if (x.rows() < 2) throw DimensionMismatch("pca needs at least two samples");
  if (!x.allFinite()) throw NonFinite("pca input has non-finite entries");
  const Mat centered = x.rowwise() - x.colwise().mean();
  const Mat cov = centered.transpose() * centered / double(x.rows() - 1);
  Eigen::SelfAdjointEigenSolver<Mat> eig(cov);
  const int p = int(cov.rows());
  PcaBasis out;
  out.d.resize(p, p);
  out.lambda.resize(p);
  // SelfAdjointEigenSolver sorts ascending; flip to descending.
  for (int i = 0; i < p; ++i) {
    out.d.col(i) = eig.eigenvectors().col(p - 1 - i);
    out.lambda[i] = std::max(0.0, eig.eigenvalues()[p - 1 - i]);
  }
  out.n_kept = p;
  return out;
}

namespace {

double sq_dist(const Eigen::Ref<const Vec>& a, const Eigen::Ref<const Vec>& b) {
  return (a - b).squaredNorm();
}

Mat kmeanspp_seed(const Mat& x, int k, Rng& rng) {
  const int n = int(x.rows());
  Mat centroids(k, x.cols());
  centroids.row(0) = x.row(int(rng.below(n)));
  Vec d2(n);
  for (int i = 0; i < n; ++i) d2[i] = sq_dist(x.row(i), centroids.row(0));
  for (int c = 1; c < k; ++c) {
    const double total = d2.sum();
    int pick;
    if (total <= 0.0) {
      pick = int(rng.below(n));
    } else {
      double r = rng.uniform01() * total;
      pick = n - 1;
      for (int i = 0; i < n; ++i) {
        r -= d2[i];
        if (r <= 0) {
          pick = i;
          break;
        }
      }
    }
    centroids.row(c) = x.row(pick);
    for (int i = 0; i < n; ++i) d2[i] = std::min(d2[i], sq_dist(x.row(i), centroids.row(c)));
  }
  return centroids;
}

}  // namespace

int nearest_centroid(const Mat& centroids, const Eigen::Ref<const Vec>& point) {
  int best = 0;
  double bd = std::numeric_limits<double>::max();
  for (int c = 0; c < centroids.rows(); ++c) {
    const double d = (centroids.row(c).transpose() - point).squaredNorm();
    if (d < bd) {
      bd = d;
      best = c;
    }
  }
  return best;
}

Clustering kmeans(const Mat& x, int k, std::uint64_t seed, int restarts, int max_iter) {
  const int n = int(x.rows());
  if (k < 1 || k > n) throw DegenerateCluster("kmeans: k must be in [1, n_samples]");

  Clustering best;
  best.objective = std::numeric_limits<double>::max();

  for (int attempt = 0; attempt < restarts; ++attempt) {
    Rng rng(split_seed(seed, attempt));
    Clustering cur;
    cur.k = k;
    cur.centroids = kmeanspp_seed(x, k, rng);
    cur.assignment.assign(n, -1);

    bool degenerate = false;
    for (int iter = 0; iter < max_iter; ++iter) {
      bool changed = false;
      for (int i = 0; i < n; ++i) {
        const int c = nearest_centroid(cur.centroids, x.row(i).transpose());
        if (c != cur.assignment[i]) {
          cur.assignment[i] = c;
          changed = true;
        }
      }
      // refit centroids; re-seed empty clusters to the farthest sample
      std::vector<int> count(k, 0);
      Mat sum = Mat::Zero(k, x.cols());
      for (int i = 0; i < n; ++i) {
        ++count[cur.assignment[i]];
        sum.row(cur.assignment[i]) += x.row(i);
      }
      for (int c = 0; c < k; ++c) {
        if (count[c] == 0) {
          int far_i = 0;
          double far_d = -1;
          for (int i = 0; i < n; ++i) {
            const double d = sq_dist(x.row(i), cur.centroids.row(cur.assignment[i]));
            if (d > far_d) {
              far_d = d;
              far_i = i;
            }
          }
          cur.centroids.row(c) = x.row(far_i);
          changed = true;
        } else {
          cur.centroids.row(c) = sum.row(c) / count[c];
        }
      }
      if (!changed) break;
      if (iter == max_iter - 1) degenerate = std::count(count.begin(), count.end(), 0) > 0;
    }
    if (degenerate) continue;

    cur.objective = 0.0;
    for (int i = 0; i < n; ++i)
      cur.objective += sq_dist(x.row(i), cur.centroids.row(cur.assignment[i]));
    if (cur.objective < best.objective) best = cur;
  }
  if (best.assignment.empty())
    throw DegenerateCluster("kmeans: no restart produced a complete clustering");
  return best;
}

Mat ridge_solve(const Mat& x, const Mat& y, double lambda) {
  const Mat gram = x.transpose() * x + lambda * Mat::Identity(x.cols(), x.cols());
  return gram.ldlt().solve(x.transpose() * y);
}

Mat weighted_ridge_solve(const Mat& x, const Mat& y, const Vec& w, double lambda) {
  if (w.size() != x.rows()) throw DimensionMismatch("weight vector length mismatch");
  const Mat xw = w.asDiagonal() * x;
  const Mat gram = x.transpose() * xw + lambda * Mat::Identity(x.cols(), x.cols());
  return gram.ldlt().solve(xw.transpose() * y);
}

KPlaneResult kplane(const Mat& x, const Mat& y, int k, double eta, double lambda,
                    std::uint64_t seed, int max_iter) {
  const int n = int(x.rows());
  if (k < 1 || k > n) throw DegenerateCluster("kplane: k must be in [1, n_samples]");
  if (eta <= 0 || lambda <= 0) throw std::invalid_argument("kplane: eta and lambda must be > 0");

  // start from plain k-means structure
  Clustering cl = kmeans(x, k, seed);
  std::vector<Mat> beta(k);

  auto refit = [&]() {
    for (int c = 0; c < k; ++c) {
      std::vector<int> rows;
      for (int i = 0; i < n; ++i)
        if (cl.assignment[i] == c) rows.push_back(i);
      if (rows.empty()) continue;
      Mat xc(rows.size(), x.cols()), yc(rows.size(), y.cols());
      Vec mean = Vec::Zero(x.cols());
      for (std::size_t r = 0; r < rows.size(); ++r) {
        xc.row(r) = x.row(rows[r]);
        yc.row(r) = y.row(rows[r]);
        mean += x.row(rows[r]).transpose();
      }
      beta[c] = ridge_solve(xc, yc, lambda);
      cl.centroids.row(c) = (mean / double(rows.size())).transpose();
    }
  };

  refit();
  double prev_obj = std::numeric_limits<double>::max();
  for (int iter = 0; iter < max_iter; ++iter) {
    bool changed = false;
    double obj = 0.0;
    for (int i = 0; i < n; ++i) {
      int best_c = cl.assignment[i];
      double best_cost = std::numeric_limits<double>::max();
      for (int c = 0; c < k; ++c) {
        if (beta[c].size() == 0) continue;
        const double resid = (y.row(i) - x.row(i) * beta[c]).squaredNorm();
        const double dist = (x.row(i) - cl.centroids.row(c)).squaredNorm();
        const double cost = resid + eta * dist;
        if (cost < best_cost) {
          best_cost = cost;
          best_c = c;
        }
      }
      obj += best_cost;
      if (best_c != cl.assignment[i]) {
        cl.assignment[i] = best_c;
        changed = true;
      }
    }
    if (!changed || obj >= prev_obj) break;
    prev_obj = obj;
    refit();
  }

  // drop empty clusters
  std::vector<int> remap(k, -1);
  int kept = 0;
  for (int c = 0; c < k; ++c) {
    const bool used = std::any_of(cl.assignment.begin(), cl.assignment.end(),
                                  [c](int a) { return a == c; });
    if (used && beta[c].size() != 0) remap[c] = kept++;
  }
  if (kept == 0) throw DegenerateCluster("kplane: all clusters degenerate");
  KPlaneResult out;
  out.clustering.k = kept;
  out.clustering.centroids.resize(kept, x.cols());
  out.clustering.assignment.resize(n);
  out.coefficients.resize(kept);
  for (int c = 0; c < k; ++c) {
    if (remap[c] < 0) continue;
    out.clustering.centroids.row(remap[c]) = cl.centroids.row(c);
    out.coefficients[remap[c]] = beta[c];
  }
  for (int i = 0; i < n; ++i) out.clustering.assignment[i] = remap[cl.assignment[i]];
  out.clustering.objective = prev_obj;
  return out;
}

}  // namespace dpfl::numlin
