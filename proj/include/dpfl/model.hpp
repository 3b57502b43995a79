#pragma once

#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "dpfl/common.hpp"
#include "dpfl/dataset.hpp"

namespace dpfl::methods {

// One affine map in the (possibly normalized) training space.
struct PlainMap {
  Mat beta;       // n_x x n_y
  Vec intercept;  // size n_y, or empty for zero
};

struct JointGaussLift {
  Mat centers;  // n_centers x n_x
  double sigma = 1.0;
};

struct PerDimGaussLift {
  std::vector<Vec> centers;  // per predictor dimension (empty = dim not lifted)
  Vec sigma;                 // per dimension
};

struct PolyKernelExpansion {
  Mat sv_x;    // support inputs, n_sv x n_x (training-space)
  Mat alpha;   // n_sv x n_y dual coefficients
  int degree = 3;
};

// Branch-flow recovery from predicted (V^2, R_ij, C_ij): converts the raw
// regression outputs into V and PF/PT/QF/QT via the exact branch-flow
// identities, clamping non-positive predicted V^2 at clamp_floor.
struct VcsRecovery {
  std::vector<int> from, to;
  Vec gff, bff, gft, bft, gtf, btf, gtt, btt;
  int n_buses = 0;
  double clamp_floor = 1e-6;
};

// Deferred local fitting: a ridge model refit at every query point with
// Gaussian sample weights.
struct LocalRidge {
  Mat x_train, y_train;  // training-space snapshot
  double tau = 0.1;
  double lambda = 1e-10;
};

struct Provenance {
  std::string method_id;
  nlohmann::json hyperparameters;
  double train_time_s = 0.0;
};

// Trained model. Exactly one representation is active per shape. Queries are
// raw-space rows matching x_tags; predictions come back in raw space tagged
// like y_tags (normalization round-trips through the stored scale factors).
struct LinearModel {
  enum class Shape { Plain, Piecewise, Lifted, Local };

  Shape shape = Shape::Plain;
  std::vector<data::Tag> x_tags, y_tags;
  data::NormState norm;  // scales captured at train time; !normalized => raw

  PlainMap plain;

  Mat centroids;                  // piecewise routing, k x n_x
  std::vector<PlainMap> members;  // piecewise members

  std::optional<JointGaussLift> joint_lift;
  std::optional<PerDimGaussLift> perdim_lift;
  std::optional<PolyKernelExpansion> poly_kernel;
  std::optional<VcsRecovery> vcs;
  std::optional<LocalRidge> local;

  Provenance prov;

  Mat predict(const Mat& x_raw) const;
  Mat predict_counting(const Mat& x_raw, long* clamp_count) const;

  bool finite() const;
  int model_type() const;  // 1 plain, 2 piecewise, 3 lifted-space
};

}  // namespace dpfl::methods
