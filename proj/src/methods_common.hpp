#pragma once

#include <algorithm>
#include <cmath>
#include <string>

#include "dpfl/evalbench.hpp"
#include "dpfl/methods.hpp"
#include "dpfl/numlin.hpp"

namespace dpfl::methods::detail {

inline void poll_budget(const MethodContext& ctx) {
  if (ctx.budget) ctx.budget->check();
}

inline LinearModel make_plain(const data::Dataset& train, Mat beta, Vec intercept = {}) {
  LinearModel m;
  m.shape = LinearModel::Shape::Plain;
  m.x_tags = train.x_tags;
  m.y_tags = train.y_tags;
  m.norm = train.norm;
  m.plain.beta = std::move(beta);
  m.plain.intercept = std::move(intercept);
  return m;
}

// Non-finite coefficients become a typed failure record, never a model.
inline FitResult finish(const std::string& id, LinearModel m, nlohmann::json diag = {}) {
  m.prov.method_id = id;
  if (!m.finite()) {
    FitResult r = FitResult::fail(FailureRecord::Code::NaN,
                                  "non-finite coefficients (singular training problem)");
    r.diagnostics = std::move(diag);
    return r;
  }
  FitResult r = FitResult::ok(std::move(m));
  r.diagnostics = std::move(diag);
  return r;
}

inline FitResult require_raw(const data::Dataset& train, const std::string& id) {
  (void)id;
  if (train.norm.normalized)
    return FitResult::fail(FailureRecord::Code::INA,
                           "method requires raw (unnormalized) data");
  return FitResult{};
}

// contiguous-block fold boundaries for time-ordered data
inline std::vector<std::pair<int, int>> fold_ranges(int n, int folds) {
  std::vector<std::pair<int, int>> out;
  const int base = n / folds, extra = n % folds;
  int at = 0;
  for (int f = 0; f < folds; ++f) {
    const int len = base + (f < extra ? 1 : 0);
    out.emplace_back(at, len);
    at += len;
  }
  return out;
}

inline std::vector<methods::MethodConfig> grid_over(const MethodConfig& base,
                                                    const std::string& key,
                                                    const std::vector<double>& values) {
  std::vector<MethodConfig> grid;
  for (double v : values) {
    MethodConfig c = base;
    c.hyper[key] = v;
    grid.push_back(std::move(c));
  }
  return grid;
}

}  // namespace dpfl::methods::detail
