#include "dpfl/evalbench.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <limits>

#include "dpfl/sha256.hpp"
#include "methods_common.hpp"

namespace dpfl::bench {

using data::Dataset;
using data::Kind;
using data::Tag;
using methods::FailureRecord;
using methods::FitResult;
using methods::MethodConfig;
using methods::MethodContext;
using methods::MethodInfo;

ErrorStats relative_errors(const Mat& y_true, const Mat& y_pred, double floor) {
  if (y_true.rows() != y_pred.rows() || y_true.cols() != y_pred.cols())
    throw DimensionMismatch("relative_errors: shape mismatch");
  ErrorStats st;
  double sum = 0.0;
  for (int i = 0; i < y_true.rows(); ++i)
    for (int j = 0; j < y_true.cols(); ++j) {
      const double t = y_true(i, j);
      if (std::abs(t) < floor) {
        ++st.excluded;
        continue;
      }
      const double e = std::abs(t - y_pred(i, j)) / std::abs(t);
      sum += e;
      st.max = std::max(st.max, e);
      ++st.included;
    }
  if (st.included == 0) throw AllExcluded("every true value lies under the relative-error floor");
  st.mean = sum / st.included;
  return st;
}

Dataset dataset_rows(const Dataset& d, const std::vector<int>& rows) {
  Dataset out;
  out.x_tags = d.x_tags;
  out.y_tags = d.y_tags;
  out.norm = d.norm;
  out.x.resize(rows.size(), d.x.cols());
  out.y.resize(rows.size(), d.y.cols());
  for (std::size_t i = 0; i < rows.size(); ++i) {
    out.x.row(i) = d.x.row(rows[i]);
    out.y.row(i) = d.y.row(rows[i]);
  }
  return out;
}

CvResult cross_validate(const methods::FitFn& fit, const Dataset& train,
                        const std::vector<MethodConfig>& grid, int folds,
                        const MethodContext& ctx) {
  if (grid.empty()) throw ConfigError("cross_validate: empty hyperparameter grid");
  const int n = train.n_samples();
  folds = std::max(2, std::min(folds, n));
  const auto ranges = methods::detail::fold_ranges(n, folds);
  const double inf = std::numeric_limits<double>::infinity();

  CvResult res;
  res.scores.assign(grid.size(), 0.0);
  for (std::size_t g = 0; g < grid.size(); ++g) {
    double total = 0.0;
    int scored = 0;
    for (const auto& [at, len] : ranges) {
      if (len == 0) continue;
      std::vector<int> fit_rows, val_rows;
      for (int i = 0; i < n; ++i)
        (i >= at && i < at + len ? val_rows : fit_rows).push_back(i);
      const Dataset sub = dataset_rows(train, fit_rows);
      const Dataset val = dataset_rows(train, val_rows);
      double fold_score = inf;
      try {
        const FitResult r = fit(sub, grid[g], ctx);
        if (r.model) {
          Mat x_raw = val.x;
          if (val.norm.normalized)
            for (int c = 0; c < x_raw.cols(); ++c) x_raw.col(c) *= val.norm.x_scale[c];
          const Mat pred = r.model->predict(x_raw);
          if (pred.allFinite() && pred.cols() == val.y.cols()) {
            double mse = 0.0;
            for (int i = 0; i < val.y.rows(); ++i)
              for (int j = 0; j < val.y.cols(); ++j) {
                // fold scores live in the training (normalized) space
                const double scale = val.norm.normalized ? val.norm.y_scale[j] : 1.0;
                const double truth = val.y(i, j) * scale;
                const double diff = (pred(i, j) - truth) / scale;
                mse += diff * diff;
              }
            fold_score = mse / double(val.y.size());
          }
        }
      } catch (const BudgetExceeded&) {
        throw;
      } catch (const std::exception&) {
        fold_score = inf;
      }
      total += fold_score;
      ++scored;
    }
    res.scores[g] = scored > 0 ? total / scored : inf;
  }
  res.best_index = 0;
  for (std::size_t g = 1; g < grid.size(); ++g)
    if (res.scores[g] < res.scores[res.best_index]) res.best_index = int(g);
  if (!std::isfinite(res.scores[res.best_index]))
    throw AllFoldsFailed("every grid point failed in every fold");
  return res;
}

// ---------------------------------------------------------------------------
// Unified measurement table
// ---------------------------------------------------------------------------

Dataset measurement_table(const grid::GridCase& c, const scenario::SampleSet& s) {
  std::vector<data::ColumnSpec> kinds = {
      {Kind::P, data::Domain::All},  {Kind::Q, data::Domain::All},
      {Kind::V, data::Domain::All},  {Kind::V2, data::Domain::All},
      {Kind::Theta, data::Domain::All}, {Kind::PF, data::Domain::All},
      {Kind::PT, data::Domain::All}, {Kind::QF, data::Domain::All},
      {Kind::QT, data::Domain::All}, {Kind::Rij, data::Domain::All},
      {Kind::Cij, data::Domain::All}};
  return scenario::assemble_one(c, s, kinds, {});
}

Dataset select_columns(const Dataset& table, const std::vector<Tag>& x_tags,
                       const std::vector<Tag>& y_tags) {
  Dataset out;
  out.x_tags = x_tags;
  out.y_tags = y_tags;
  out.x.resize(table.x.rows(), x_tags.size());
  out.y.resize(table.x.rows(), y_tags.size());
  for (std::size_t i = 0; i < x_tags.size(); ++i) {
    const int at = table.find_x(x_tags[i]);
    if (at < 0) throw TagMismatch("column not present in the measurement table");
    out.x.col(i) = table.x.col(at);
  }
  for (std::size_t i = 0; i < y_tags.size(); ++i) {
    const int at = table.find_x(y_tags[i]);
    if (at < 0) throw TagMismatch("column not present in the measurement table");
    out.y.col(i) = table.x.col(at);
  }
  return out;
}

std::string checksum_dataset(const Dataset& d) {
  std::string bytes;
  auto append = [&bytes](const Mat& m) {
    const long r = m.rows(), c = m.cols();
    bytes.append(reinterpret_cast<const char*>(&r), sizeof r);
    bytes.append(reinterpret_cast<const char*>(&c), sizeof c);
    bytes.append(reinterpret_cast<const char*>(m.data()), sizeof(double) * m.size());
  };
  append(d.x);
  append(d.y);
  return sha256_hex(bytes);
}

// ---------------------------------------------------------------------------
// Job runner
// ---------------------------------------------------------------------------

namespace {

std::vector<Tag> expand_specs(const grid::GridCase& c, const std::vector<data::ColumnSpec>& specs,
                              bool predictor_side) {
  std::vector<Tag> tags;
  for (const auto& spec : specs)
    for (int e : scenario::resolve_domain(c, spec.kind, spec.domain, predictor_side))
      tags.push_back({spec.kind, e});
  return tags;
}

// ground-truth columns for a response group, from the clean test table
std::vector<Tag> group_tags(const grid::GridCase& c, Kind kind) {
  std::vector<Tag> tags;
  for (int e : scenario::resolve_domain(c, kind, data::Domain::Auto, false))
    tags.push_back({kind, e});
  return tags;
}

}  // namespace

std::vector<ReportRow> run_job(const MethodInfo& method, const JobInput& in) {
  const grid::GridCase& c = *in.grid;
  std::vector<ReportRow> rows(2);
  rows[0].response_group = "V";
  rows[1].response_group = "PF";
  for (auto& r : rows) {
    r.case_id = in.scenario_name;
    r.method_id = method.id;
  }

  const bool group_ok[2] = {method.implemented && method.can_predict(Kind::V),
                            method.implemented && method.can_predict(Kind::PF)};

  BudgetClock clock(in.budget_wall_s);
  MethodConfig cfg = method.defaults;
  cfg.budget_s = in.budget_wall_s;
  cfg.seed = in.seed;

  MethodContext ctx;
  ctx.grid = in.grid;
  ctx.train_samples = in.generated ? &in.generated->train : nullptr;
  ctx.budget = &clock;
  ctx.case_id = in.scenario_name;

  auto fail_all = [&](FailureRecord::Code code, const std::string& diag) {
    for (int g = 0; g < 2; ++g) {
      if (!group_ok[g] || !method.implemented) {
        rows[g].failure = FailureRecord{FailureRecord::Code::INA, method.id, in.scenario_name,
                                        method.implemented ? "response group outside generalizability"
                                                           : "not implemented in this toolbox",
                                        0.0};
      } else {
        rows[g].failure = FailureRecord{code, method.id, in.scenario_name, diag, clock.elapsed_s()};
      }
      rows[g].train_s = in.wall_timing ? clock.elapsed_s() : 0.0;
    }
    return rows;
  };

  if (!method.implemented)
    return fail_all(FailureRecord::Code::INA, "not implemented in this toolbox");

  // --- select columns, pollute-sensitive split is already in the tables ----
  Dataset train, test;
  try {
    const auto x_tags = expand_specs(c, method.resolved_x_spec(), true);
    const auto y_tags = expand_specs(c, method.resolved_y_spec(), false);
    train = select_columns(*in.train_table, x_tags, y_tags);
    test = select_columns(*in.test_table, x_tags, y_tags);
  } catch (const std::exception& e) {
    return fail_all(FailureRecord::Code::INA, e.what());
  }

  if (method.normalization_ok) train = data::normalize(train);

  // --- fit ------------------------------------------------------------------
  const auto t0 = std::chrono::steady_clock::now();
  FitResult fit;
  try {
    fit = method.fit(train, cfg, ctx);
  } catch (const BudgetExceeded& e) {
    return fail_all(FailureRecord::Code::OOT, e.what());
  } catch (const std::exception& e) {
    return fail_all(FailureRecord::Code::NaN, e.what());
  }
  const double train_s =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  if (clock.exceeded())
    return fail_all(FailureRecord::Code::OOT, "wall-clock budget exceeded during training");
  if (fit.failure) {
    fit.failure->method_id = method.id;
    fit.failure->case_id = in.scenario_name;
    fit.failure->elapsed_s = clock.elapsed_s();
    return fail_all(fit.failure->code, fit.failure->diagnostic);
  }

  // --- predict on the clean test split --------------------------------------
  const auto t1 = std::chrono::steady_clock::now();
  Mat pred;
  long clamped = 0;
  try {
    pred = fit.model->predict_counting(test.x, &clamped);
  } catch (const std::exception& e) {
    return fail_all(FailureRecord::Code::NaN, e.what());
  }
  const double predict_s =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - t1).count();

  const Kind group_kind[2] = {Kind::V, Kind::PF};
  for (int g = 0; g < 2; ++g) {
    ReportRow& row = rows[g];
    row.train_s = in.wall_timing ? train_s : 0.0;
    row.predict_s = in.wall_timing ? predict_s : 0.0;
    row.diagnostics = fit.diagnostics;
    if (clamped > 0) row.diagnostics["clamped_v2"] = clamped;
    if (!group_ok[g]) {
      row.failure = FailureRecord{FailureRecord::Code::INA, method.id, in.scenario_name,
                                  "response group outside generalizability", 0.0};
      continue;
    }
    const auto truth_tags = group_tags(c, group_kind[g]);
    Mat y_true(test.x.rows(), truth_tags.size());
    Mat y_pred(test.x.rows(), truth_tags.size());
    bool missing = false;
    for (std::size_t j = 0; j < truth_tags.size(); ++j) {
      const int tcol = in.test_table->find_x(truth_tags[j]);
      int pcol = -1;
      for (std::size_t k = 0; k < fit.model->y_tags.size(); ++k)
        if (fit.model->y_tags[k] == truth_tags[j]) pcol = int(k);
      if (tcol < 0 || pcol < 0) {
        missing = true;
        break;
      }
      y_true.col(j) = in.test_table->x.col(tcol);
      y_pred.col(j) = pred.col(pcol);
    }
    if (missing) {
      row.failure = FailureRecord{FailureRecord::Code::INA, method.id, in.scenario_name,
                                  "response group outside generalizability", 0.0};
      continue;
    }
    if (!y_pred.allFinite()) {
      row.failure = FailureRecord{FailureRecord::Code::NaN, method.id, in.scenario_name,
                                  "non-finite predictions", clock.elapsed_s()};
      continue;
    }
    try {
      row.errors = relative_errors(y_true, y_pred);
    } catch (const AllExcluded& e) {
      row.failure =
          FailureRecord{FailureRecord::Code::NaN, method.id, in.scenario_name, e.what(), 0.0};
    }
  }
  return rows;
}

// ---------------------------------------------------------------------------
// Ranking and serialization
// ---------------------------------------------------------------------------

void rank_rows(std::vector<ReportRow>& rows) {
  std::map<std::pair<std::string, std::string>, std::vector<ReportRow*>> groups;
  for (auto& r : rows) groups[{r.case_id, r.response_group}].push_back(&r);
  bool any_ranked = false;
  for (auto& [key, members] : groups) {
    std::vector<ReportRow*> good, bad;
    for (auto* r : members) (r->errors ? good : bad).push_back(r);
    std::sort(good.begin(), good.end(), [](const ReportRow* a, const ReportRow* b) {
      if (a->errors->mean != b->errors->mean) return a->errors->mean < b->errors->mean;
      return a->method_id < b->method_id;
    });
    std::sort(bad.begin(), bad.end(), [](const ReportRow* a, const ReportRow* b) {
      const int ca = int(a->failure->code), cb = int(b->failure->code);
      if (ca != cb) return ca < cb;
      return a->method_id < b->method_id;
    });
    int rank = 1;
    for (auto* r : good) r->rank = rank++;
    for (auto* r : bad) r->rank = rank++;
    any_ranked = any_ranked || !good.empty();
  }
  if (!any_ranked && !rows.empty()) throw NothingToRank("no successful rows to rank");
}

namespace {

std::string fmt_double(double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.12g", v);
  return buf;
}

}  // namespace

std::string report_csv(const std::vector<ReportRow>& rows) {
  std::vector<const ReportRow*> sorted;
  for (const auto& r : rows) sorted.push_back(&r);
  std::sort(sorted.begin(), sorted.end(), [](const ReportRow* a, const ReportRow* b) {
    if (a->case_id != b->case_id) return a->case_id < b->case_id;
    if (a->response_group != b->response_group) return a->response_group > b->response_group;  // V first
    return a->rank < b->rank;
  });
  std::string out =
      "case,method,response_group,mean_rel_err,max_rel_err,train_s,predict_s,failure_code,rank\n";
  for (const auto* r : sorted) {
    out += r->case_id + "," + r->method_id + "," + r->response_group + ",";
    out += r->errors ? fmt_double(r->errors->mean) : "";
    out += ",";
    out += r->errors ? fmt_double(r->errors->max) : "";
    out += ",";
    out += fmt_double(r->train_s);
    out += ",";
    out += fmt_double(r->predict_s);
    out += ",";
    out += r->failure ? methods::failure_code_name(r->failure->code) : "";
    out += "," + std::to_string(r->rank) + "\n";
  }
  return out;
}

nlohmann::json report_json(const std::vector<ReportRow>& rows) {
  nlohmann::json j = nlohmann::json::array();
  for (const auto& r : rows) {
    nlohmann::json e;
    e["case"] = r.case_id;
    e["method"] = r.method_id;
    e["response_group"] = r.response_group;
    if (r.errors) {
      e["mean_rel_err"] = r.errors->mean;
      e["max_rel_err"] = r.errors->max;
      e["included"] = r.errors->included;
      e["excluded"] = r.errors->excluded;
    }
    if (r.failure) {
      e["failure_code"] = methods::failure_code_name(r.failure->code);
      e["diagnostic"] = r.failure->diagnostic;
    }
    e["train_s"] = r.train_s;
    e["predict_s"] = r.predict_s;
    e["rank"] = r.rank;
    e["diagnostics"] = r.diagnostics;
    j.push_back(std::move(e));
  }
  return j;
}

}  // namespace dpfl::bench
