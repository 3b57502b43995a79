#pragma once

#include <cstdint>
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "dpfl/common.hpp"
#include "dpfl/dataset.hpp"
#include "dpfl/grid.hpp"
#include "dpfl/model.hpp"
#include "dpfl/scenario.hpp"

namespace dpfl::methods {

// Failure taxonomy: INA = requested response outside the method's
// generalizability (or an unimplemented roster entry), NaN = non-finite
// coefficients, OOT = time or width budget exceeded.
struct FailureRecord {
  enum class Code { INA, NaN, OOT };
  Code code;
  std::string method_id;
  std::string case_id;
  std::string diagnostic;
  double elapsed_s = 0.0;
};

const char* failure_code_name(FailureRecord::Code c);

struct MethodConfig {
  nlohmann::json hyper;       // method-specific knobs, incl. CV grids
  int cv_folds = 5;
  double budget_s = 3600.0;
  long max_width = 50000;     // predictive cap on lifted width / decision variables
  std::uint64_t seed = 1;

  double hyper_num(const std::string& key, double fallback) const;
  std::vector<double> hyper_grid(const std::string& key) const;  // empty if absent
};

struct MethodContext {
  const grid::GridCase* grid = nullptr;                 // physics-coupled methods only
  const scenario::SampleSet* train_samples = nullptr;   // aligned with the train rows
  const BudgetClock* budget = nullptr;
  std::string case_id;
};

// Exactly one of model / failure is set. Fits never throw for numerical
// failures; diagnostics carry resolved hyperparameters and counters.
struct FitResult {
  std::optional<LinearModel> model;
  std::optional<FailureRecord> failure;
  nlohmann::json diagnostics;

  static FitResult ok(LinearModel m) {
    FitResult r;
    r.model = std::move(m);
    return r;
  }
  static FitResult fail(FailureRecord::Code code, std::string diag);
};

using FitFn = std::function<FitResult(const data::Dataset&, const MethodConfig&,
                                      const MethodContext&)>;

struct MethodInfo {
  std::string id;
  bool implemented = true;
  // Applicability flags (declared row)
  bool multicollinearity_ok = true;
  bool zero_predictor_ok = true;
  bool constant_predictor_ok = true;
  bool normalization_ok = true;
  int model_type = 1;
  bool is_ppfl = false;
  bool needs_case = false;
  // empty spec = global default {P,Q,V2,theta_ref} -> {V,PF}
  std::vector<data::ColumnSpec> x_spec, y_spec;
  MethodConfig defaults;
  FitFn fit;

  std::vector<data::ColumnSpec> resolved_x_spec() const;
  std::vector<data::ColumnSpec> resolved_y_spec() const;
  bool can_predict(data::Kind kind) const;  // response generalizability
};

const std::vector<MethodInfo>& registry();
const MethodInfo* find_method(const std::string& id);
std::vector<std::string> method_ids(bool implemented_only = false);

// family entry points (used by the registry and directly by tests)
FitResult fit_ls_family(const std::string& variant, const data::Dataset& train,
                        const MethodConfig& cfg, const MethodContext& ctx);
FitResult fit_huber(const std::string& variant, const data::Dataset& train,
                    const MethodConfig& cfg, const MethodContext& ctx);
FitResult fit_pls(const std::string& variant, const data::Dataset& train, const MethodConfig& cfg,
                  const MethodContext& ctx);
FitResult fit_recursive(const std::string& variant, const data::Dataset& train,
                        const MethodConfig& cfg, const MethodContext& ctx);
FitResult fit_clustered(const std::string& base, const data::Dataset& train,
                        const MethodConfig& cfg, const MethodContext& ctx);
FitResult fit_ridge(const std::string& variant, const data::Dataset& train,
                    const MethodConfig& cfg, const MethodContext& ctx);
FitResult fit_svr(const std::string& variant, const data::Dataset& train, const MethodConfig& cfg,
                  const MethodContext& ctx);
FitResult fit_lcp(const std::string& variant, const data::Dataset& train, const MethodConfig& cfg,
                  const MethodContext& ctx);
FitResult fit_hybrid(const std::string& variant, const data::Dataset& train,
                     const MethodConfig& cfg, const MethodContext& ctx);
FitResult fit_lifted(const std::string& variant, const data::Dataset& train,
                     const MethodConfig& cfg, const MethodContext& ctx);
FitResult ppfl_model(const std::string& variant, const data::Dataset& train,
                     const MethodConfig& cfg, const MethodContext& ctx);

}  // namespace dpfl::methods
