#pragma once

#include <cstdint>
#include <functional>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "dpfl/common.hpp"
#include "dpfl/methods.hpp"

namespace dpfl::bench {

// ---------------------------------------------------------------------------
// Metrics
// ---------------------------------------------------------------------------

struct ErrorStats {
  double mean = 0.0;
  double max = 0.0;
  long included = 0;
  long excluded = 0;  // |y_true| under the floor
};

// eps_it = |y_true - y_pred| / |y_true| averaged / maximized over all
// included elements; elements with |y_true| below the floor are excluded and
// counted. Throws AllExcluded when nothing remains.
ErrorStats relative_errors(const Mat& y_true, const Mat& y_pred, double floor = 1e-6);

// ---------------------------------------------------------------------------
// Cross-validation: contiguous-block folds over time-ordered rows; the score
// of a grid point is the mean validation MSE (normalized space) across folds,
// +inf for folds whose fit fails. Ties break toward the earlier grid entry.
// ---------------------------------------------------------------------------

data::Dataset dataset_rows(const data::Dataset& d, const std::vector<int>& rows);

struct CvResult {
  int best_index = -1;
  std::vector<double> scores;
};

CvResult cross_validate(const methods::FitFn& fit, const data::Dataset& train,
                        const std::vector<methods::MethodConfig>& grid, int folds,
                        const methods::MethodContext& ctx);

// ---------------------------------------------------------------------------
// Job runner
// ---------------------------------------------------------------------------

struct ReportRow {
  std::string case_id;        // scenario name
  std::string method_id;
  std::string response_group; // "V" or "PF"
  std::optional<ErrorStats> errors;
  std::optional<methods::FailureRecord> failure;
  double train_s = 0.0;
  double predict_s = 0.0;
  int rank = 0;
  nlohmann::json diagnostics;
};

struct JobInput {
  std::string scenario_name;
  const grid::GridCase* grid = nullptr;
  const scenario::Generated* generated = nullptr;
  // unified measurement table (train polluted, test clean)
  const data::Dataset* train_table = nullptr;
  const data::Dataset* test_table = nullptr;
  double budget_wall_s = 3600.0;
  std::uint64_t seed = 1;
  bool wall_timing = true;  // false zeroes reported timings for byte-stable reports
};

// Full per-method pipeline: select columns, normalize when the method allows
// it, cross-validate, fit, predict on the clean test split, and score per
// response group. All failures come back as rows; nothing throws for
// method-level problems.
std::vector<ReportRow> run_job(const methods::MethodInfo& method, const JobInput& in);

// Builds the unified measurement table (every kind at every element) from a
// sample set. Pollution and per-method selection operate on this table.
data::Dataset measurement_table(const grid::GridCase& c, const scenario::SampleSet& s);

data::Dataset select_columns(const data::Dataset& table, const std::vector<data::Tag>& x_tags,
                             const std::vector<data::Tag>& y_tags);

// Ranking: ascending mean relative error, ties broken by method id; failed
// rows come after all successes, ordered INA/NaN/OOT then id.
void rank_rows(std::vector<ReportRow>& rows);

std::string report_csv(const std::vector<ReportRow>& rows);
nlohmann::json report_json(const std::vector<ReportRow>& rows);

std::string checksum_dataset(const data::Dataset& d);

}  // namespace dpfl::bench
