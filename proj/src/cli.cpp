#include "dpfl/cli.hpp"

#include <atomic>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>
#include <thread>

#include "dpfl/rng.hpp"
#include "dpfl/sha256.hpp"
#include "dpfl/svg.hpp"

namespace dpfl::cli {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

std::uint64_t fnv1a64(const std::string& s) {
  std::uint64_t h = 1469598103934665603ULL;
  for (unsigned char c : s) {
    h ^= c;
    h *= 1099511628211ULL;
  }
  return h;
}

std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IOError("cannot open " + path);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void write_file(const std::string& path, const std::string& content) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IOError("cannot write " + path);
  out << content;
}

scenario::NoiseSpec noise_from(const json& j) {
  scenario::NoiseSpec out;
  if (!j.is_object()) return out;
  const std::string mode = j.value("mode", "none");
  if (mode == "joint") out.mode = scenario::NoiseSpec::Mode::Joint;
  else if (mode == "individual") out.mode = scenario::NoiseSpec::Mode::Individual;
  else if (mode != "none") throw ConfigError("unknown noise mode '" + mode + "'");
  out.snr_db = j.value("snr_db", 45.0);
  return out;
}

scenario::OutlierSpec outliers_from(const json& j) {
  scenario::OutlierSpec out;
  if (!j.is_object()) return out;
  const std::string mode = j.value("mode", "none");
  if (mode == "joint") out.mode = scenario::OutlierSpec::Mode::Joint;
  else if (mode == "individual") out.mode = scenario::OutlierSpec::Mode::Individual;
  else if (mode != "none") throw ConfigError("unknown outlier mode '" + mode + "'");
  out.fraction = j.value("fraction", 0.02);
  out.multiplier = j.value("multiplier", 2.0);
  return out;
}

json scenario_block(const std::string& name, const std::string& case_ref, int n_train, int n_test,
                    double lo, double hi, const std::string& noise_mode = "none",
                    const std::string& outlier_mode = "none") {
  json s;
  s["name"] = name;
  s["case"] = case_ref;
  s["n_train"] = n_train;
  s["n_test"] = n_test;
  s["fluct_lo"] = lo;
  s["fluct_hi"] = hi;
  if (noise_mode != "none") s["noise"] = {{"mode", noise_mode}, {"snr_db", 45.0}};
  if (outlier_mode != "none")
    s["outliers"] = {{"mode", outlier_mode}, {"fraction", 0.02}, {"multiplier", 2.0}};
  return s;
}

std::string scenario_digest(const scenario::ScenarioConfig& s) {
  std::ostringstream os;
  os.precision(17);
  os << s.name << "|" << s.case_ref << "|" << s.n_train << "|" << s.n_test << "|" << s.fluct_lo
     << "|" << s.fluct_hi << "|" << int(s.noise.mode) << "|" << s.noise.snr_db << "|"
     << int(s.outliers.mode) << "|" << s.outliers.fraction << "|" << s.outliers.multiplier << "|"
     << s.curve.digest() << "|" << s.window_start << "|" << s.window_end;
  return sha256_hex(os.str());
}

}  // namespace

json built_in_config() {
  json c;
  c["schema_version"] = 1;
  c["seed"] = 20240601;
  c["budget_s"] = 3600.0;
  c["workers"] = 1;
  c["cases"] = {{"case9", "cases/case9.m"},
                {"case14", "cases/case14.m"},
                {"case33", "cases/case33.m"},
                {"case39", "cases/case39.m"},
                {"case118", "cases/case118.m"}};
  c["methods"] = methods::method_ids();
  c["scenarios"] = json::array({
      scenario_block("9-bus-S", "case9", 150, 100, 0.95, 1.05),
      scenario_block("9-bus-L", "case9", 150, 100, 0.80, 1.20),
      scenario_block("14-bus-S", "case14", 200, 150, 0.95, 1.05),
      scenario_block("14-bus-L", "case14", 200, 150, 0.80, 1.20),
      scenario_block("33-bus-L", "case33", 300, 200, 0.80, 1.20),
      scenario_block("33-bus-L-NJ", "case33", 300, 200, 0.80, 1.20, "joint"),
      scenario_block("33-bus-L-OJ", "case33", 300, 200, 0.80, 1.20, "none", "joint"),
      scenario_block("33-bus-S", "case33", 300, 200, 0.80, 1.20),
      scenario_block("33-bus-S-NI", "case33", 300, 200, 0.80, 1.20, "individual"),
      scenario_block("33-bus-S-OI", "case33", 300, 200, 0.80, 1.20, "none", "individual"),
      scenario_block("39-bus-S", "case39", 300, 200, 0.95, 1.05),
      scenario_block("39-bus-L", "case39", 300, 200, 0.80, 1.20),
      scenario_block("118-bus-S", "case118", 400, 300, 0.95, 1.05),
      scenario_block("118-bus-L", "case118", 400, 300, 0.80, 1.20),
      scenario_block("118-bus-L-NI", "case118", 400, 300, 0.80, 1.20, "individual"),
      scenario_block("118-bus-L-OI", "case118", 400, 300, 0.80, 1.20, "none", "individual"),
  });
  return c;
}

ExperimentConfig load_config(const RunOptions& opt) {
  ExperimentConfig cfg;
  json j;
  std::string path = opt.config_path;
  if (path.empty()) {
    if (const char* env = std::getenv("DPFL_CONFIG")) path = env;
  }
  if (path.empty()) {
    j = built_in_config();
    cfg.base_dir = ".";
  } else {
    try {
      j = json::parse(read_file(path));
    } catch (const json::parse_error& e) {
      throw ConfigError(std::string("config parse error: ") + e.what());
    }
    cfg.base_dir = fs::path(path).parent_path().string();
    if (cfg.base_dir.empty()) cfg.base_dir = ".";
  }

  if (j.value("schema_version", 0) != 1) throw ConfigError("config schema_version must be 1");
  cfg.seed = opt.seed.value_or(j.value("seed", std::uint64_t(20240601)));
  cfg.budget_s = opt.budget_s.value_or(j.value("budget_s", 3600.0));
  cfg.workers = opt.workers > 0 ? opt.workers : j.value("workers", 1);

  for (const auto& [name, p] : j.at("cases").items())
    cfg.case_paths[name] = p.get<std::string>();

  scenario::Curve curve = scenario::Curve::default_curve();
  if (j.contains("curve_file") && j["curve_file"].is_string())
    curve = scenario::Curve::from_csv(
        read_file((fs::path(cfg.base_dir) / j["curve_file"].get<std::string>()).string()));

  std::vector<std::string> roster =
      j.contains("methods") ? j["methods"].get<std::vector<std::string>>() : methods::method_ids();
  if (!opt.methods_filter.empty()) {
    std::vector<std::string> filtered;
    for (const auto& m : roster)
      if (std::find(opt.methods_filter.begin(), opt.methods_filter.end(), m) !=
          opt.methods_filter.end())
        filtered.push_back(m);
    roster = filtered;
  }
  for (const auto& m : roster)
    if (!methods::find_method(m)) throw ConfigError("unknown method id '" + m + "'");
  cfg.methods = roster;

  for (const auto& sj : j.at("scenarios")) {
    scenario::ScenarioConfig s;
    s.name = sj.at("name").get<std::string>();
    if (!opt.cases_filter.empty() &&
        std::find(opt.cases_filter.begin(), opt.cases_filter.end(), s.name) ==
            opt.cases_filter.end())
      continue;
    s.case_ref = sj.at("case").get<std::string>();
    if (!cfg.case_paths.count(s.case_ref))
      throw ConfigError("scenario '" + s.name + "' references unknown case '" + s.case_ref + "'");
    s.n_train = sj.at("n_train").get<int>();
    s.n_test = sj.at("n_test").get<int>();
    s.fluct_lo = sj.at("fluct_lo").get<double>();
    s.fluct_hi = sj.at("fluct_hi").get<double>();
    s.noise = noise_from(sj.value("noise", json()));
    s.outliers = outliers_from(sj.value("outliers", json()));
    s.curve = curve;
    s.seed = sj.contains("seed") ? sj["seed"].get<std::uint64_t>()
                                 : split_seed(cfg.seed, fnv1a64(s.name));
    s.validate();
    cfg.scenarios.push_back(std::move(s));
  }

  // resolved form for the manifest hash
  json resolved = j;
  resolved["seed"] = cfg.seed;
  resolved["budget_s"] = cfg.budget_s;
  resolved["methods"] = cfg.methods;
  resolved["curve"] = curve.digest();
  json active = json::array();
  for (const auto& s : cfg.scenarios) active.push_back(s.name);
  resolved["active_scenarios"] = active;
  cfg.raw = resolved;
  return cfg;
}

// ---------------------------------------------------------------------------
// Dataset cache
// ---------------------------------------------------------------------------

namespace {

constexpr const char* kCacheMagic = "DPFLDS1\n";

void append_vec(std::string& out, const Vec& v) {
  out.append(reinterpret_cast<const char*>(v.data()), sizeof(double) * v.size());
}

std::string serialize_samples(const scenario::SampleSet& s) {
  std::string out;
  for (int i = 0; i < s.size(); ++i) {
    const pf::Solution& sol = s.solutions[i];
    append_vec(out, sol.v);
    append_vec(out, sol.theta);
    append_vec(out, sol.p_inj);
    append_vec(out, sol.q_inj);
    append_vec(out, sol.pf);
    append_vec(out, sol.pt);
    append_vec(out, sol.qf);
    append_vec(out, sol.qt);
    append_vec(out, Vec(s.p_load.row(i).transpose()));
    append_vec(out, Vec(s.q_load.row(i).transpose()));
    append_vec(out, Vec(s.p_gen.row(i).transpose()));
    const double trailer[3] = {sol.converged ? 1.0 : 0.0, sol.mismatch_inf_norm,
                               double(sol.iterations)};
    out.append(reinterpret_cast<const char*>(trailer), sizeof trailer);
  }
  return out;
}

bool deserialize_samples(const char*& p, const char* end, int count, int nb, int nl,
                         scenario::SampleSet& out) {
  const std::size_t need =
      std::size_t(count) * (sizeof(double) * (7 * nb + 4 * nl + 3));
  if (std::size_t(end - p) < need) return false;
  out.solutions.resize(count);
  out.p_load.resize(count, nb);
  out.q_load.resize(count, nb);
  out.p_gen.resize(count, nb);
  auto take = [&p](Vec& v, int n) {
    v.resize(n);
    std::memcpy(v.data(), p, sizeof(double) * n);
    p += sizeof(double) * n;
  };
  for (int i = 0; i < count; ++i) {
    pf::Solution& sol = out.solutions[i];
    take(sol.v, nb);
    take(sol.theta, nb);
    take(sol.p_inj, nb);
    take(sol.q_inj, nb);
    take(sol.pf, nl);
    take(sol.pt, nl);
    take(sol.qf, nl);
    take(sol.qt, nl);
    Vec tmp;
    take(tmp, nb);
    out.p_load.row(i) = tmp.transpose();
    take(tmp, nb);
    out.q_load.row(i) = tmp.transpose();
    take(tmp, nb);
    out.p_gen.row(i) = tmp.transpose();
    double trailer[3];
    std::memcpy(trailer, p, sizeof trailer);
    p += sizeof trailer;
    sol.converged = trailer[0] > 0.5;
    sol.mismatch_inf_norm = trailer[1];
    sol.iterations = int(trailer[2]);
  }
  return true;
}

}  // namespace

CachedScenario generate_cached(const grid::GridCase& c, const scenario::ScenarioConfig& cfg,
                               const std::string& cache_dir, const std::string& case_checksum,
                               std::vector<std::string>* log) {
  const std::string key = sha256_hex(case_checksum + "|" + scenario_digest(cfg) + "|" +
                                     std::to_string(cfg.seed));
  const fs::path file = fs::path(cache_dir) / (cfg.name + "-" + key.substr(0, 16) + ".bin");

  CachedScenario out;
  if (fs::exists(file)) {
    const std::string blob = read_file(file.string());
    bool ok = blob.size() > std::strlen(kCacheMagic) &&
              blob.compare(0, std::strlen(kCacheMagic), kCacheMagic) == 0;
    if (ok) {
      const char* p = blob.data() + std::strlen(kCacheMagic);
      const char* end = blob.data() + blob.size();
      ok = deserialize_samples(p, end, cfg.n_train, c.n_buses(), c.n_branches(),
                               out.generated.train) &&
           deserialize_samples(p, end, cfg.n_test, c.n_buses(), c.n_branches(),
                               out.generated.test) &&
           p == end;
    }
    if (ok) {
      out.cache_hit = true;
      return out;
    }
    if (log) log->push_back("warning: corrupted cache entry regenerated: " + file.string());
  }

  out.generated = scenario::generate(c, cfg);
  fs::create_directories(cache_dir);
  std::string blob = kCacheMagic;
  blob += serialize_samples(out.generated.train);
  blob += serialize_samples(out.generated.test);
  write_file(file.string(), blob);
  return out;
}

// ---------------------------------------------------------------------------
// run / gen-data
// ---------------------------------------------------------------------------

namespace {

struct PreparedScenario {
  scenario::ScenarioConfig cfg;
  grid::GridCase grid;
  std::string case_checksum;
  scenario::Generated generated;
  data::Dataset train_table;  // polluted
  data::Dataset test_table;   // clean
};

PreparedScenario prepare_scenario(const ExperimentConfig& cfg, const scenario::ScenarioConfig& s,
                                  const std::string& cache_dir, std::vector<std::string>* log) {
  PreparedScenario out;
  out.cfg = s;
  const std::string case_path =
      (fs::path(cfg.base_dir) / cfg.case_paths.at(s.case_ref)).string();
  const std::string bytes = read_file(case_path);
  out.case_checksum = sha256_hex(bytes);
  out.grid = grid::parse_case(bytes, case_path.size() > 5 && case_path.ends_with(".json")
                                         ? grid::CaseFormat::NativeJson
                                         : grid::CaseFormat::MatpowerM)
                 .grid;
  out.generated = generate_cached(out.grid, s, cache_dir, out.case_checksum, log).generated;

  out.train_table = bench::measurement_table(out.grid, out.generated.train);
  out.test_table = bench::measurement_table(out.grid, out.generated.test);
  // pollution touches the training split only
  out.train_table = scenario::inject_noise(out.train_table, s.noise, s.seed);
  out.train_table = scenario::inject_outliers(out.train_table, s.outliers, s.seed);
  return out;
}

json build_manifest(const ExperimentConfig& cfg,
                    const std::vector<PreparedScenario>& prepared, bool wall_timing) {
  json m;
  m["tool_version"] = kToolVersion;
  m["config_hash"] = sha256_hex(cfg.raw.dump());
  m["seed"] = cfg.seed;
  m["curve_hash"] = (prepared.empty() ? scenario::Curve::default_curve() : prepared[0].cfg.curve)
                        .digest();
  json checks = json::object();
  for (const auto& p : prepared) checks[p.cfg.case_ref] = p.case_checksum;
  m["case_checksums"] = checks;
  json roster = json::array();
  for (const auto& id : cfg.methods) {
    const methods::MethodInfo* info = methods::find_method(id);
    roster.push_back({{"id", id},
                      {"implemented", info->implemented},
                      {"hyperparameters", info->defaults.hyper},
                      {"normalized_input", info->normalization_ok}});
  }
  m["methods"] = roster;
  m["timing"] = wall_timing ? "wall" : "off";
  json host;
#if defined(__linux__)
  host["os"] = "linux";
#else
  host["os"] = "other";
#endif
#if defined(__GNUC__)
  host["compiler"] = "gcc " + std::to_string(__GNUC__) + "." + std::to_string(__GNUC_MINOR__);
#endif
  m["host"] = host;
  return m;
}

}  // namespace

int cmd_gen_data(const RunOptions& opt) {
  try {
    const ExperimentConfig cfg = load_config(opt);
    fs::create_directories(opt.out_dir);
    const std::string cache_dir = (fs::path(opt.out_dir) / "cache").string();
    std::vector<std::string> log;
    for (const auto& s : cfg.scenarios) {
      const std::string case_path =
          (fs::path(cfg.base_dir) / cfg.case_paths.at(s.case_ref)).string();
      const std::string bytes = read_file(case_path);
      const grid::GridCase c =
          grid::parse_case(bytes, case_path.size() > 5 && case_path.ends_with(".json")
                                      ? grid::CaseFormat::NativeJson
                                      : grid::CaseFormat::MatpowerM)
              .grid;
      const CachedScenario cached =
          generate_cached(c, s, cache_dir, sha256_hex(bytes), &log);
      std::printf("%-14s %s (%d train / %d test samples)\n", s.name.c_str(),
                  cached.cache_hit ? "cache hit" : "generated", s.n_train, s.n_test);
    }
    for (const auto& w : log) std::fprintf(stderr, "%s\n", w.c_str());
    return kExitOk;
  } catch (const ConfigError& e) {
    std::fprintf(stderr, "config error: %s\n", e.what());
    return kExitConfigError;
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return kExitIoError;
  }
}

int cmd_run(const RunOptions& opt) {
  try {
    const ExperimentConfig cfg = load_config(opt);
    fs::create_directories(opt.out_dir);
    const std::string cache_dir = (fs::path(opt.out_dir) / "cache").string();

    std::vector<std::string> log;
    std::vector<PreparedScenario> prepared;
    prepared.reserve(cfg.scenarios.size());
    for (const auto& s : cfg.scenarios) prepared.push_back(prepare_scenario(cfg, s, cache_dir, &log));

    struct Job {
      const PreparedScenario* scenario;
      const methods::MethodInfo* method;
    };
    std::vector<Job> jobs;
    for (const auto& p : prepared)
      for (const auto& id : cfg.methods) jobs.push_back({&p, methods::find_method(id)});

    std::vector<std::vector<bench::ReportRow>> results(jobs.size());
    std::atomic<std::size_t> next{0};
    auto worker = [&]() {
      while (true) {
        const std::size_t i = next.fetch_add(1);
        if (i >= jobs.size()) break;
        const Job& job = jobs[i];
        bench::JobInput in;
        in.scenario_name = job.scenario->cfg.name;
        in.grid = &job.scenario->grid;
        in.generated = &job.scenario->generated;
        in.train_table = &job.scenario->train_table;
        in.test_table = &job.scenario->test_table;
        in.budget_wall_s = cfg.budget_s;
        in.seed = job.scenario->cfg.seed;
        in.wall_timing = opt.wall_timing;
        results[i] = bench::run_job(*job.method, in);
      }
    };
    const int n_workers = std::max(1, std::min<int>(cfg.workers, int(jobs.size())));
    {
      std::vector<std::thread> pool;
      for (int w = 0; w < n_workers; ++w) pool.emplace_back(worker);
      for (auto& t : pool) t.join();
    }

    std::vector<bench::ReportRow> rows;
    for (const auto& rs : results) rows.insert(rows.end(), rs.begin(), rs.end());
    bench::rank_rows(rows);

    write_file((fs::path(opt.out_dir) / "report.csv").string(), bench::report_csv(rows));
    write_file((fs::path(opt.out_dir) / "report.json").string(),
               bench::report_json(rows).dump(2) + "\n");
    const json manifest = build_manifest(cfg, prepared, opt.wall_timing);
    write_file((fs::path(opt.out_dir) / "manifest.json").string(), manifest.dump(2) + "\n");

    // charts: per-scenario error bars plus the two ranking heatmaps
    std::vector<std::string> scenario_names;
    for (const auto& p : prepared) scenario_names.push_back(p.cfg.name);
    for (const std::string group : {"V", "PF"}) {
      for (const auto& name : scenario_names) {
        std::vector<bench::ReportRow> slice;
        for (const auto& r : rows)
          if (r.case_id == name && r.response_group == group) slice.push_back(r);
        write_file((fs::path(opt.out_dir) / ("errors_" + name + "_" + group + ".svg")).string(),
                   svg::error_bar_chart(name + " / " + group + " relative errors", slice));
      }
      std::vector<bench::ReportRow> slice;
      for (const auto& r : rows)
        if (r.response_group == group) slice.push_back(r);
      write_file((fs::path(opt.out_dir) / ("ranking_" + group + ".svg")).string(),
                 svg::ranking_heatmap("accuracy ranking / " + group, cfg.methods, scenario_names,
                                      slice));
    }
    for (const auto& w : log) std::fprintf(stderr, "%s\n", w.c_str());
    std::printf("wrote %s\n", (fs::path(opt.out_dir) / "report.csv").string().c_str());
    return kExitOk;
  } catch (const ConfigError& e) {
    std::fprintf(stderr, "config error: %s\n", e.what());
    return kExitConfigError;
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return kExitIoError;
  }
}

int cmd_list_methods() {
  for (const auto& m : methods::registry()) {
    std::printf("%-10s type %d  %-12s  mult:%c zero:%c const:%c norm:%c\n", m.id.c_str(),
                m.model_type, m.implemented ? (m.is_ppfl ? "physics" : "data-driven") : "stub",
                m.multicollinearity_ok ? 'y' : 'n', m.zero_predictor_ok ? 'y' : 'n',
                m.constant_predictor_ok ? 'y' : 'n', m.normalization_ok ? 'y' : 'n');
  }
  return kExitOk;
}

// ---------------------------------------------------------------------------
// Applicability probes
// ---------------------------------------------------------------------------

namespace {

// Small deterministic ring system used only by the probes.
grid::GridCase make_probe_case(bool zero_load_bus, bool const_twin_loads) {
  using grid::BusKind;
  grid::GridCase c;
  c.base_mva = 100.0;
  const int n = 10;
  const double p_loads[n] = {0.0, 0.20, 0.30, 0.0, 0.25, 0.16, 0.28, 0.0, 0.22, 0.18};
  const double q_loads[n] = {0.0, 0.08, 0.10, 0.0, 0.09, 0.05, 0.11, 0.0, 0.07, 0.06};
  for (int i = 0; i < n; ++i) {
    grid::Bus b;
    b.kind = i == 0 ? BusKind::Slack : (i == 3 || i == 7 ? BusKind::PV : BusKind::PQ);
    b.p_load = p_loads[i];
    b.q_load = q_loads[i];
    c.buses.push_back(b);
    c.original_ids.push_back(i + 1);
  }
  if (zero_load_bus) {
    c.buses[5].p_load = 0.0;
    c.buses[5].q_load = 0.0;
  }
  if (const_twin_loads) {
    // twins: identical base loads at buses 4 and 8
    c.buses[8].p_load = c.buses[4].p_load;
    c.buses[8].q_load = c.buses[4].q_load;
  }
  c.generators.push_back({0, 0.0, 0.0, 1.02, true});
  c.generators.push_back({3, 0.45, 0.0, 1.04, true});
  c.generators.push_back({7, 0.40, 0.0, 1.00, true});
  const double xs[n] = {0.06, 0.08, 0.07, 0.09, 0.11, 0.08, 0.07, 0.10, 0.09, 0.08};
  for (int i = 0; i < n; ++i) {
    grid::Branch br;
    br.from = i;
    br.to = (i + 1) % n;
    br.r = 0.01 + 0.001 * i;
    br.x = xs[i];
    br.b_charging = 0.02;
    c.branches.push_back(br);
  }
  grid::Branch chord1{2, 7, 0.015, 0.12, 0.02, 1.0, 0.0, true};
  grid::Branch chord2{1, 5, 0.012, 0.10, 0.02, 1.0, 0.0, true};
  c.branches.push_back(chord1);
  c.branches.push_back(chord2);
  c.validate();
  return c;
}

struct ProbeData {
  grid::GridCase grid;
  scenario::Generated generated;
  data::Dataset table_train, table_test;
};

ProbeData make_probe_data(bool zero_load, bool twins, std::uint64_t seed) {
  ProbeData out;
  out.grid = make_probe_case(zero_load, twins);
  scenario::ScenarioConfig s;
  s.name = "probe";
  s.n_train = 60;
  s.n_test = 40;
  s.fluct_lo = 0.9;
  s.fluct_hi = 1.1;
  s.seed = seed;
  if (zero_load) s.zero_load_buses = {5};
  if (twins) s.twin_load_buses = {{4, 8}};
  out.generated = scenario::generate(out.grid, s);
  out.table_train = bench::measurement_table(out.grid, out.generated.train);
  out.table_test = bench::measurement_table(out.grid, out.generated.test);
  return out;
}

// force exact column duplication of the twins' predictor measurements
void copy_twin_columns(data::Dataset& table, data::Kind kind, int src_bus, int dst_bus) {
  const int src = table.find_x({kind, src_bus});
  const int dst = table.find_x({kind, dst_bus});
  if (src >= 0 && dst >= 0) table.x.col(dst) = table.x.col(src);
}

struct ProbeOutcome {
  bool ok = false;
  double error = std::numeric_limits<double>::infinity();
};

double model_max_coef(const methods::LinearModel& m) {
  double mx = 0.0;
  auto upd = [&mx](const methods::PlainMap& p) {
    if (p.beta.size() > 0) mx = std::max(mx, p.beta.cwiseAbs().maxCoeff());
    if (p.intercept.size() > 0) mx = std::max(mx, p.intercept.cwiseAbs().maxCoeff());
  };
  upd(m.plain);
  for (const auto& member : m.members) upd(member);
  return mx;
}

ProbeOutcome probe_fit(const methods::MethodInfo& info, const data::Dataset& train,
                       const data::Dataset& test_table, const grid::GridCase& g,
                       const scenario::SampleSet& samples) {
  ProbeOutcome out;
  methods::MethodConfig cfg = info.defaults;
  cfg.seed = 7;
  methods::MethodContext ctx;
  ctx.grid = &g;
  ctx.train_samples = &samples;
  BudgetClock clock(120.0);
  ctx.budget = &clock;

  methods::FitResult fit;
  try {
    fit = info.fit(train, cfg, ctx);
  } catch (const std::exception&) {
    return out;
  }
  if (fit.failure || !fit.model) return out;
  if (model_max_coef(*fit.model) > 1e5) return out;

  // score the model's own responses against the clean test table
  Mat x_raw(test_table.x.rows(), train.x_tags.size());
  for (std::size_t i = 0; i < train.x_tags.size(); ++i) {
    const int at = test_table.find_x(train.x_tags[i]);
    if (at < 0) return out;
    x_raw.col(i) = test_table.x.col(at);
  }
  Mat pred;
  try {
    pred = fit.model->predict(x_raw);
  } catch (const std::exception&) {
    return out;
  }
  if (!pred.allFinite()) return out;

  double sum = 0.0;
  long cnt = 0;
  for (std::size_t j = 0; j < fit.model->y_tags.size(); ++j) {
    const int at = test_table.find_x(fit.model->y_tags[j]);
    if (at < 0) continue;
    for (int i = 0; i < pred.rows(); ++i) {
      const double t = test_table.x(i, at);
      if (std::abs(t) < 1e-6) continue;
      sum += std::abs(t - pred(i, j)) / std::abs(t);
      ++cnt;
    }
  }
  if (cnt == 0) return out;
  out.ok = true;
  out.error = sum / cnt;
  return out;
}

}  // namespace

ApplicabilityReport run_applicability_probes(std::uint64_t seed) {
  using data::ColumnSpec;
  using data::Domain;
  using data::Kind;

  const ProbeData base = make_probe_data(false, false, seed);
  const ProbeData zero = make_probe_data(true, false, split_seed(seed, 1));
  ProbeData twin = make_probe_data(false, true, split_seed(seed, 2));
  copy_twin_columns(twin.table_train, Kind::P, 4, 8);
  copy_twin_columns(twin.table_train, Kind::Q, 4, 8);
  copy_twin_columns(twin.table_test, Kind::P, 4, 8);
  copy_twin_columns(twin.table_test, Kind::Q, 4, 8);

  const std::vector<ColumnSpec> y_default = {{Kind::V, Domain::Auto}, {Kind::PF, Domain::Auto}};
  const std::vector<ColumnSpec> x_base = {{Kind::P, Domain::PQ},
                                          {Kind::Q, Domain::PQ},
                                          {Kind::V2, Domain::Slack}};
  std::vector<ColumnSpec> x_zero = x_base;
  x_zero.push_back({Kind::Theta, Domain::Slack});

  ApplicabilityReport report;
  for (const auto& info : methods::registry()) {
    ApplicabilityRow row;
    row.method_id = info.id;
    row.implemented = info.implemented;
    row.d_mult = info.multicollinearity_ok;
    row.d_zero = info.zero_predictor_ok;
    row.d_const = info.constant_predictor_ok;
    row.d_norm = info.normalization_ok;
    if (!info.implemented) {
      report.rows.push_back(row);
      continue;
    }

    const bool flexible = info.x_spec.empty();
    const auto xs = [&](const ProbeData& pd, const std::vector<ColumnSpec>& spec) {
      std::vector<data::Tag> x_tags, y_tags;
      for (const auto& sp : flexible ? spec : info.resolved_x_spec())
        for (int e : scenario::resolve_domain(pd.grid, sp.kind, sp.domain, true))
          x_tags.push_back({sp.kind, e});
      for (const auto& sp : flexible ? y_default : info.resolved_y_spec())
        for (int e : scenario::resolve_domain(pd.grid, sp.kind, sp.domain, false))
          y_tags.push_back({sp.kind, e});
      return bench::select_columns(pd.table_train, x_tags, y_tags);
    };

    auto run_probe = [&](const ProbeData& pd, const std::vector<ColumnSpec>& spec,
                         bool normalized) {
      data::Dataset train = xs(pd, spec);
      if (normalized || info.normalization_ok) train = data::normalize(train);
      return probe_fit(info, train, pd.table_test, pd.grid, pd.generated.train);
    };

    const ProbeOutcome ref = run_probe(base, x_base, false);
    const double gate = std::max(ref.error * 50.0, 5e-3);
    auto verdict = [&](const ProbeOutcome& o) { return o.ok && o.error <= gate; };

    row.o_const = verdict(ref);  // the base spec carries the constant column
    row.o_zero = verdict(run_probe(zero, x_zero, false));
    row.o_mult = verdict(run_probe(twin, x_base, false));
    if (info.normalization_ok) {
      row.o_norm = verdict(run_probe(base, x_base, true));
    } else {
      // raw-only methods must refuse normalized input
      data::Dataset train = data::normalize(xs(base, x_base));
      methods::MethodConfig cfg = info.defaults;
      methods::MethodContext ctx;
      ctx.grid = &base.grid;
      ctx.train_samples = &base.generated.train;
      methods::FitResult fit = info.fit(train, cfg, ctx);
      row.o_norm = !(fit.failure &&
                     fit.failure->code == methods::FailureRecord::Code::INA);
    }
    report.rows.push_back(row);
  }
  return report;
}

std::string ApplicabilityReport::to_text() const {
  std::string out =
      "method      declared(m z c n)  observed(m z c n)  mismatches\n"
      "----------------------------------------------------------------\n";
  auto mark = [](bool b) { return b ? "Y" : "x"; };
  for (const auto& r : rows) {
    char line[160];
    if (!r.implemented) {
      std::snprintf(line, sizeof line, "%-10s  not implemented (roster stub)\n",
                    r.method_id.c_str());
    } else {
      std::snprintf(line, sizeof line, "%-10s  %s %s %s %s            %s %s %s %s            %d%s\n",
                    r.method_id.c_str(), mark(r.d_mult), mark(r.d_zero), mark(r.d_const),
                    mark(r.d_norm), mark(r.o_mult), mark(r.o_zero), mark(r.o_const),
                    mark(r.o_norm), r.mismatches(), r.mismatches() ? "  <-- MISMATCH" : "");
    }
    out += line;
  }
  out += "total mismatches: " + std::to_string(total_mismatches()) + "\n";
  return out;
}

int cmd_table3(const std::string& out_path, std::uint64_t seed) {
  try {
    const ApplicabilityReport report = run_applicability_probes(seed);
    const std::string text = report.to_text();
    if (out_path.empty() || out_path == "-") {
      std::fputs(text.c_str(), stdout);
    } else {
      write_file(out_path, text);
      std::printf("wrote %s (%d mismatches)\n", out_path.c_str(), report.total_mismatches());
    }
    return kExitOk;
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return kExitIoError;
  }
}

}  // namespace dpfl::cli
