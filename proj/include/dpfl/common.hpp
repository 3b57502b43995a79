#pragma once

#include <chrono>
#include <complex>
#include <cstdint>
#include <stdexcept>
#include <string>

#include <Eigen/Dense>

namespace dpfl {

using Mat = Eigen::MatrixXd;
using Vec = Eigen::VectorXd;
using Cplx = std::complex<double>;

inline constexpr const char* kToolVersion = "0.1.0";

// ---------------------------------------------------------------------------
// Error types. Exceptions are reserved for contract violations and broken
// inputs; per-method numerical failures travel as FailureRecord values, not
// exceptions (see methods.hpp).
// ---------------------------------------------------------------------------

struct SyntaxError : std::runtime_error {
  int line = 0, col = 0;
  SyntaxError(const std::string& msg, int line_ = 0, int col_ = 0)
      : std::runtime_error(msg), line(line_), col(col_) {}
};

struct SemanticError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct UnsupportedFeature : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct DimensionMismatch : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct SingularJacobian : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct NotConverged : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct NonFinite : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct UnknownKind : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct TagMismatch : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct DegenerateCluster : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct SolverFailure : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct InfeasibleConstraints : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct BudgetExceeded : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct GenerationFailed : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct AllExcluded : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct AllFoldsFailed : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct NothingToRank : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct ConfigError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct IOError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// ---------------------------------------------------------------------------
// Wall-clock budget shared by a job. limit_s <= 0 means unlimited. Methods
// poll it at loop boundaries; the harness also checks after the fact, so a
// method cannot opt out of OOT accounting.
// ---------------------------------------------------------------------------
class BudgetClock {
 public:
  explicit BudgetClock(double limit_s = 0.0)
      : start_(std::chrono::steady_clock::now()), limit_s_(limit_s) {}

  double elapsed_s() const {
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - start_).count();
  }
  double limit_s() const { return limit_s_; }
  bool exceeded() const { return limit_s_ > 0.0 && elapsed_s() > limit_s_; }
  void check() const {
    if (exceeded()) throw BudgetExceeded("wall-clock budget exceeded");
  }

 private:
  std::chrono::steady_clock::time_point start_;
  double limit_s_;
};

}  // namespace dpfl
