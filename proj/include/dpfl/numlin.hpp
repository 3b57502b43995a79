#pragma once

#include <cstdint>
#include <vector>

#include "dpfl/common.hpp"

namespace dpfl::numlin {

// Default relative singular-value threshold: max(rows, cols) * machine eps.
double default_rank_tol(int rows, int cols);

// Moore-Penrose inverse via SVD; singular values below rank_tol * sigma_max
// are treated as zero. rank_tol <= 0 selects the default.
Mat pinv(const Mat& a, double rank_tol = -1.0);

// Minimum-norm least-squares solve via rank-revealing QR with column pivoting
// completed to an orthogonal factorization. Finite on rank-deficient inputs.
Mat cod_solve(const Mat& x, const Mat& y);

// Minimum-norm least-squares via pinv.
Mat pinv_solve(const Mat& x, const Mat& y, double rank_tol = -1.0);

// Numerical rank of a matrix at the default (or given) tolerance.
int numerical_rank(const Mat& a, double rank_tol = -1.0);

struct PcaBasis {
  Mat d;        // eigenvectors of cov(X), one per column, descending eigenvalue
  Vec lambda;   // eigenvalues, descending, clamped at zero
  int n_kept = 0;
};

// Eigendecomposition of the sample covariance of x (rows are samples).
PcaBasis pca(const Mat& x);

struct Clustering {
  int k = 0;
  Mat centroids;                // k x n_features
  std::vector<int> assignment;  // per sample
  double objective = 0.0;       // within-cluster SSE
};

// Lloyd's iteration from k-means++ seeding, best of `restarts` runs
// (lowest objective, ties broken by restart index). Deterministic given seed.
Clustering kmeans(const Mat& x, int k, std::uint64_t seed, int restarts = 5,
                  int max_iter = 100);

int nearest_centroid(const Mat& centroids, const Eigen::Ref<const Vec>& point);

struct KPlaneResult {
  Clustering clustering;
  std::vector<Mat> coefficients;  // per cluster, n_features x n_responses
};

// Alternating minimization: assign each sample to the plane minimizing
// squared regression residual plus eta * squared distance to the cluster
// centroid in x-space; refit a ridge regression per cluster. The objective is
// non-increasing across iterations. Predict-time assignment is by nearest
// centroid.
KPlaneResult kplane(const Mat& x, const Mat& y, int k, double eta, double lambda,
                    std::uint64_t seed, int max_iter = 50);

// (X'X + lambda I)^-1 X'Y with optional per-sample weights.
Mat ridge_solve(const Mat& x, const Mat& y, double lambda);
Mat weighted_ridge_solve(const Mat& x, const Mat& y, const Vec& w, double lambda);

}  // namespace dpfl::numlin
