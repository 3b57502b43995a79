#include <map>

#include "dpfl/methods.hpp"

namespace dpfl::methods {

using data::ColumnSpec;
using data::Domain;
using data::Kind;

const char* failure_code_name(FailureRecord::Code c) {
  switch (c) {
    case FailureRecord::Code::INA: return "INA";
    case FailureRecord::Code::NaN: return "NaN";
    case FailureRecord::Code::OOT: return "OOT";
  }
  return "?";
}

FitResult FitResult::fail(FailureRecord::Code code, std::string diag) {
  FitResult r;
  r.failure = FailureRecord{code, "", "", std::move(diag), 0.0};
  return r;
}

double MethodConfig::hyper_num(const std::string& key, double fallback) const {
  if (hyper.contains(key) && hyper[key].is_number()) return hyper[key].get<double>();
  return fallback;
}

std::vector<double> MethodConfig::hyper_grid(const std::string& key) const {
  std::vector<double> out;
  if (hyper.contains(key) && hyper[key].is_array())
    for (const auto& v : hyper[key]) out.push_back(v.get<double>());
  return out;
}

std::vector<ColumnSpec> MethodInfo::resolved_x_spec() const {
  return x_spec.empty() ? scenario::default_x_spec() : x_spec;
}

std::vector<ColumnSpec> MethodInfo::resolved_y_spec() const {
  return y_spec.empty() ? scenario::default_y_spec() : y_spec;
}

bool MethodInfo::can_predict(data::Kind kind) const {
  if (id == "RR_VCS")  // recovered outputs, not the raw regression responses
    return kind == Kind::V || kind == Kind::PF || kind == Kind::PT || kind == Kind::QF ||
           kind == Kind::QT;
  for (const auto& spec : resolved_y_spec())
    if (spec.kind == kind) return true;
  return false;
}

namespace {

MethodInfo stub(const std::string& id) {
  MethodInfo m;
  m.id = id;
  m.implemented = false;
  m.fit = [id](const data::Dataset&, const MethodConfig&, const MethodContext&) {
    return FitResult::fail(FailureRecord::Code::INA, "not implemented in this toolbox");
  };
  return m;
}

std::vector<MethodInfo> build_registry() {
  std::vector<MethodInfo> reg;

  auto add = [&](MethodInfo m) { reg.push_back(std::move(m)); };
  auto flags = [](MethodInfo& m, bool mult, bool zero, bool cnst, bool norm) {
    m.multicollinearity_ok = mult;
    m.zero_predictor_ok = zero;
    m.constant_predictor_ok = cnst;
    m.normalization_ok = norm;
  };

  // --- least squares family -------------------------------------------------
  {
    MethodInfo m;
    m.id = "LS";
    flags(m, false, false, true, true);
    m.fit = [](const data::Dataset& d, const MethodConfig& c, const MethodContext& x) {
      return fit_ls_family("OLS", d, c, x);
    };
    add(m);
  }
  {
    MethodInfo m;
    m.id = "LS_SVD";
    flags(m, false, true, true, true);
    m.fit = [](const data::Dataset& d, const MethodConfig& c, const MethodContext& x) {
      return fit_ls_family("SVD", d, c, x);
    };
    add(m);
  }
  {
    MethodInfo m;
    m.id = "LS_COD";
    flags(m, true, true, true, true);
    m.fit = [](const data::Dataset& d, const MethodConfig& c, const MethodContext& x) {
      return fit_ls_family("COD", d, c, x);
    };
    add(m);
  }
  {
    MethodInfo m;
    m.id = "LS_HBLD";
    flags(m, true, true, true, true);
    m.defaults.hyper["delta_grid"] = {0.01, 0.02, 0.03, 0.04, 0.05};
    m.fit = [](const data::Dataset& d, const MethodConfig& c, const MethodContext& x) {
      return fit_huber("direct", d, c, x);
    };
    add(m);
  }
  {
    MethodInfo m;
    m.id = "LS_HBLE";
    flags(m, true, true, true, true);
    m.defaults.hyper["delta_grid"] = {0.01, 0.02, 0.03, 0.04, 0.05};
    m.fit = [](const data::Dataset& d, const MethodConfig& c, const MethodContext& x) {
      return fit_huber("convex", d, c, x);
    };
    add(m);
  }
  {
    MethodInfo m;
    m.id = "LS_TOL";
    flags(m, false, true, true, true);
    m.fit = [](const data::Dataset& d, const MethodConfig& c, const MethodContext& x) {
      return fit_ls_family("TOL", d, c, x);
    };
    add(m);
  }
  {
    MethodInfo m;
    m.id = "LS_CLS";
    flags(m, false, false, true, true);
    m.defaults.hyper["k_grid"] = {2, 3, 4, 5, 6, 7, 8, 9, 10};
    m.fit = [](const data::Dataset& d, const MethodConfig& c, const MethodContext& x) {
      return fit_clustered("LS_CLS", d, c, x);
    };
    add(m);
  }
  {
    MethodInfo m;
    m.id = "LS_LIFX";
    flags(m, true, true, true, true);
    m.model_type = 3;
    m.fit = [](const data::Dataset& d, const MethodConfig& c, const MethodContext& x) {
      return fit_lifted("LS_LIFX", d, c, x);
    };
    add(m);
  }
  {
    MethodInfo m;
    m.id = "LS_LIFXi";
    flags(m, true, true, true, true);
    m.model_type = 3;
    m.fit = [](const data::Dataset& d, const MethodConfig& c, const MethodContext& x) {
      return fit_lifted("LS_LIFXi", d, c, x);
    };
    add(m);
  }
  {
    MethodInfo m;
    m.id = "LS_WEI";
    flags(m, true, true, true, true);
    m.defaults.hyper["forgetting"] = 0.6;
    m.fit = [](const data::Dataset& d, const MethodConfig& c, const MethodContext& x) {
      return fit_ls_family("WEI", d, c, x);
    };
    add(m);
  }
  {
    MethodInfo m;
    m.id = "LS_REC";
    flags(m, false, false, true, true);
    m.defaults.hyper["new_data_share"] = 0.4;
    m.defaults.hyper["forgetting"] = 0.99;
    m.fit = [](const data::Dataset& d, const MethodConfig& c, const MethodContext& x) {
      return fit_recursive("LS_REC", d, c, x);
    };
    add(m);
  }

  // --- partial least squares -------------------------------------------------
  {
    MethodInfo m;
    m.id = "PLS_SIMRX";
    flags(m, true, true, true, true);
    m.fit = [](const data::Dataset& d, const MethodConfig& c, const MethodContext& x) {
      return fit_pls("SIMPLS", d, c, x);
    };
    add(m);
  }
  add(stub("PLS_BDL"));
  add(stub("PLS_BDLY2"));
  {
    MethodInfo m;
    m.id = "PLS_REC";
    flags(m, true, true, true, true);
    m.defaults.hyper["new_data_share"] = 0.4;
    m.fit = [](const data::Dataset& d, const MethodConfig& c, const MethodContext& x) {
      return fit_recursive("PLS_REC", d, c, x);
    };
    add(m);
  }
  {
    MethodInfo m;
    m.id = "PLS_RECW";
    flags(m, true, true, true, true);
    m.defaults.hyper["new_data_share"] = 0.4;
    m.defaults.hyper["forgetting"] = 0.6;
    m.fit = [](const data::Dataset& d, const MethodConfig& c, const MethodContext& x) {
      return fit_recursive("PLS_RECW", d, c, x);
    };
    add(m);
  }

  // --- ridge -------------------------------------------------------------
  {
    MethodInfo m;
    m.id = "RR";
    flags(m, true, true, true, true);
    m.defaults.hyper["lambda"] = 1e-10;
    m.fit = [](const data::Dataset& d, const MethodConfig& c, const MethodContext& x) {
      return fit_ridge("RR", d, c, x);
    };
    add(m);
  }
  {
    MethodInfo m;
    m.id = "RR_VCS";
    flags(m, true, true, true, false);
    m.model_type = 3;
    m.needs_case = true;
    m.defaults.hyper["lambda"] = 1e-10;
    m.x_spec = {{Kind::V2, Domain::Gen}, {Kind::P, Domain::PQ}, {Kind::Q, Domain::PQ}};
    m.y_spec = {{Kind::V2, Domain::All}, {Kind::Rij, Domain::All}, {Kind::Cij, Domain::All}};
    m.fit = [](const data::Dataset& d, const MethodConfig& c, const MethodContext& x) {
      return fit_ridge("RR_VCS", d, c, x);
    };
    add(m);
  }
  {
    MethodInfo m;
    m.id = "RR_KPC";
    flags(m, true, true, true, true);
    m.model_type = 2;
    m.defaults.hyper["lambda"] = 1e-10;
    m.defaults.hyper["k_grid"] = {2, 3, 4, 5, 6, 7, 8, 9, 10};
    m.defaults.hyper["eta_grid"] = {1e2, 1e3, 1e4, 1e5};
    m.fit = [](const data::Dataset& d, const MethodConfig& c, const MethodContext& x) {
      return fit_clustered("RR_KPC", d, c, x);
    };
    add(m);
  }
  {
    MethodInfo m;
    m.id = "RR_WEI";
    flags(m, true, true, true, true);
    m.defaults.hyper["lambda"] = 1e-10;
    {
      std::vector<double> taus;
      for (double t = 0.10; t <= 0.351; t += 0.01) taus.push_back(t);
      m.defaults.hyper["tau_grid"] = taus;
    }
    m.fit = [](const data::Dataset& d, const MethodConfig& c, const MethodContext& x) {
      return fit_ridge("RR_WEI", d, c, x);
    };
    add(m);
  }

  // --- support vector regression -----------------------------------------
  {
    MethodInfo m;
    m.id = "SVR";
    flags(m, true, true, true, true);
    m.defaults.hyper["epsilon"] = 1e-4;
    m.defaults.hyper["omega"] = 10.0;
    m.fit = [](const data::Dataset& d, const MethodConfig& c, const MethodContext& x) {
      return fit_svr("SVR", d, c, x);
    };
    add(m);
  }
  add(stub("SVR_CCP"));
  {
    MethodInfo m;
    m.id = "SVR_POL";
    flags(m, true, true, true, true);
    m.model_type = 3;
    m.defaults.hyper["epsilon"] = 1e-4;
    m.defaults.hyper["omega"] = 10.0;
    m.defaults.hyper["degree"] = 3;
    m.fit = [](const data::Dataset& d, const MethodConfig& c, const MethodContext& x) {
      return fit_svr("SVR_POL", d, c, x);
    };
    add(m);
  }
  {
    MethodInfo m;
    m.id = "SVR_RR";
    flags(m, true, true, true, true);
    m.defaults.hyper["epsilon"] = 1e-4;
    m.defaults.hyper["omega"] = 10.0;
    m.defaults.hyper["lambda"] = 1e-4;
    m.fit = [](const data::Dataset& d, const MethodConfig& c, const MethodContext& x) {
      return fit_svr("SVR_RR", d, c, x);
    };
    add(m);
  }

  // --- linearly constrained programs --------------------------------------
  {
    MethodInfo m;
    m.id = "LCP_BOX";
    flags(m, true, true, true, false);
    m.needs_case = true;
    m.x_spec = {{Kind::P, Domain::NonSlack}, {Kind::Q, Domain::PQ}};
    m.y_spec = {{Kind::V, Domain::PQ}, {Kind::Theta, Domain::NonSlack}};
    m.fit = [](const data::Dataset& d, const MethodConfig& c, const MethodContext& x) {
      return fit_lcp("BOX", d, c, x);
    };
    add(m);
  }
  {
    MethodInfo m;
    m.id = "LCP_BOXN";
    flags(m, true, true, true, false);
    m.x_spec = {{Kind::P, Domain::NonSlack}, {Kind::Q, Domain::PQ}};
    m.y_spec = {{Kind::V, Domain::PQ}, {Kind::Theta, Domain::NonSlack}};
    m.fit = [](const data::Dataset& d, const MethodConfig& c, const MethodContext& x) {
      return fit_lcp("BOXN", d, c, x);
    };
    add(m);
  }
  {
    MethodInfo m;
    m.id = "LCP_COU";
    flags(m, true, true, true, false);
    m.needs_case = true;
    m.defaults.hyper["delta_lin"] = 1e-2;
    m.x_spec = {{Kind::V, Domain::All}, {Kind::Theta, Domain::All}};
    m.y_spec = {{Kind::PF, Domain::All}};
    m.fit = [](const data::Dataset& d, const MethodConfig& c, const MethodContext& x) {
      return fit_lcp("COU", d, c, x);
    };
    add(m);
  }
  {
    MethodInfo m;
    m.id = "LCP_COUN";
    flags(m, true, true, true, false);
    m.x_spec = {{Kind::V, Domain::All}, {Kind::Theta, Domain::All}};
    m.y_spec = {{Kind::PF, Domain::All}};
    m.fit = [](const data::Dataset& d, const MethodConfig& c, const MethodContext& x) {
      return fit_lcp("COUN", d, c, x);
    };
    add(m);
  }
  add(stub("LCP_JGD"));
  add(stub("LCP_JGDN"));
  add(stub("DRC_XM"));
  add(stub("DRC_XYM"));
  add(stub("DRC_XYD"));

  // --- physics hybrids -----------------------------------------------------
  {
    MethodInfo m;
    m.id = "DC_LS";
    flags(m, true, true, true, false);
    m.needs_case = true;
    m.x_spec = {{Kind::P, Domain::NonSlack}};
    m.y_spec = {{Kind::Theta, Domain::NonSlack}};
    m.fit = [](const data::Dataset& d, const MethodConfig& c, const MethodContext& x) {
      return fit_hybrid("DC_LS", d, c, x);
    };
    add(m);
  }
  {
    MethodInfo m;
    m.id = "DLPF_C";
    flags(m, true, true, true, false);
    m.needs_case = true;
    m.x_spec = {{Kind::P, Domain::NonSlack},
                {Kind::Q, Domain::PQ},
                {Kind::V, Domain::Gen},
                {Kind::Theta, Domain::Slack}};
    m.y_spec = {{Kind::V, Domain::PQ},
                {Kind::Theta, Domain::NonSlack},
                {Kind::PF, Domain::All},
                {Kind::QF, Domain::All}};
    m.fit = [](const data::Dataset& d, const MethodConfig& c, const MethodContext& x) {
      return fit_hybrid("DLPF_C", d, c, x);
    };
    add(m);
  }

  // --- newly assembled modular methods -------------------------------------
  {
    MethodInfo m;
    m.id = "LS_PIN";
    flags(m, true, true, true, true);
    m.fit = [](const data::Dataset& d, const MethodConfig& c, const MethodContext& x) {
      return fit_ls_family("PIN", d, c, x);
    };
    add(m);
  }
  {
    MethodInfo m;
    m.id = "LS_PCA";
    flags(m, true, true, true, true);
    m.defaults.hyper["n_components_grid"] = {40, 50, 60, 70, 80};
    m.fit = [](const data::Dataset& d, const MethodConfig& c, const MethodContext& x) {
      return fit_ls_family("PCA", d, c, x);
    };
    add(m);
  }
  {
    MethodInfo m;
    m.id = "LS_GEN";
    flags(m, true, true, true, true);
    m.fit = [](const data::Dataset& d, const MethodConfig& c, const MethodContext& x) {
      return fit_ls_family("GEN", d, c, x);
    };
    add(m);
  }
  {
    MethodInfo m;
    m.id = "PLS_CLS";
    flags(m, true, true, true, true);
    m.model_type = 2;
    m.defaults.hyper["k_grid"] = {2, 3, 4, 5, 6, 7, 8, 9, 10};
    m.fit = [](const data::Dataset& d, const MethodConfig& c, const MethodContext& x) {
      return fit_clustered("PLS_CLS", d, c, x);
    };
    add(m);
  }
  {
    MethodInfo m;
    m.id = "PLS_NIP";
    flags(m, true, true, true, true);
    m.fit = [](const data::Dataset& d, const MethodConfig& c, const MethodContext& x) {
      return fit_pls("NIPALS", d, c, x);
    };
    add(m);
  }

  // --- physics-driven baselines --------------------------------------------
  {
    MethodInfo m;
    m.id = "DC";
    flags(m, true, true, true, false);
    m.is_ppfl = true;
    m.needs_case = true;
    m.x_spec = {{Kind::P, Domain::NonSlack}};
    m.y_spec = {{Kind::Theta, Domain::NonSlack}};
    m.fit = [](const data::Dataset& d, const MethodConfig& c, const MethodContext& x) {
      return ppfl_model("DC", d, c, x);
    };
    add(m);
  }
  {
    MethodInfo m;
    m.id = "PTDF";
    flags(m, true, true, true, false);
    m.is_ppfl = true;
    m.needs_case = true;
    m.x_spec = {{Kind::P, Domain::NonSlack}};
    m.y_spec = {{Kind::PF, Domain::All}};
    m.fit = [](const data::Dataset& d, const MethodConfig& c, const MethodContext& x) {
      return ppfl_model("PTDF", d, c, x);
    };
    add(m);
  }
  {
    MethodInfo m;
    m.id = "TAY";
    flags(m, true, true, true, false);
    m.is_ppfl = true;
    m.needs_case = true;
    m.x_spec = {{Kind::P, Domain::NonSlack}, {Kind::Q, Domain::PQ}};
    m.y_spec = {{Kind::V, Domain::PQ}, {Kind::Theta, Domain::NonSlack}};
    m.fit = [](const data::Dataset& d, const MethodConfig& c, const MethodContext& x) {
      return ppfl_model("TAY", d, c, x);
    };
    add(m);
  }
  {
    MethodInfo m;
    m.id = "DLPF";
    flags(m, true, true, true, false);
    m.is_ppfl = true;
    m.needs_case = true;
    m.x_spec = {{Kind::P, Domain::NonSlack},
                {Kind::Q, Domain::PQ},
                {Kind::V, Domain::Gen},
                {Kind::Theta, Domain::Slack}};
    m.y_spec = {{Kind::V, Domain::PQ},
                {Kind::Theta, Domain::NonSlack},
                {Kind::PF, Domain::All},
                {Kind::QF, Domain::All}};
    m.fit = [](const data::Dataset& d, const MethodConfig& c, const MethodContext& x) {
      return ppfl_model("DLPF", d, c, x);
    };
    add(m);
  }

  return reg;
}

}  // namespace

const std::vector<MethodInfo>& registry() {
  static const std::vector<MethodInfo> reg = build_registry();
  return reg;
}

const MethodInfo* find_method(const std::string& id) {
  for (const auto& m : registry())
    if (m.id == id) return &m;
  return nullptr;
}

std::vector<std::string> method_ids(bool implemented_only) {
  std::vector<std::string> out;
  for (const auto& m : registry())
    if (!implemented_only || m.implemented) out.push_back(m.id);
  return out;
}

}  // namespace dpfl::methods
