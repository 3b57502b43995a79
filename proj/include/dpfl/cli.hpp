#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "dpfl/evalbench.hpp"
#include "dpfl/grid.hpp"
#include "dpfl/scenario.hpp"

namespace dpfl::cli {

// Exit codes shared by every subcommand.
inline constexpr int kExitOk = 0;
inline constexpr int kExitConfigError = 1;
inline constexpr int kExitIoError = 2;

struct RunOptions {
  std::string config_path;  // empty: DPFL_CONFIG env var, then built-in default
  std::string out_dir = "out";
  int workers = 1;
  std::optional<std::uint64_t> seed;
  std::optional<double> budget_s;
  std::vector<std::string> methods_filter;
  std::vector<std::string> cases_filter;
  bool wall_timing = true;
};

// Resolved experiment configuration: cases by path, Table-IV-style scenario
// blocks, method roster, budgets and seeds.
struct ExperimentConfig {
  nlohmann::json raw;  // normalized form, hashed into the manifest
  std::string base_dir;
  std::map<std::string, std::string> case_paths;
  std::vector<scenario::ScenarioConfig> scenarios;
  std::vector<std::string> methods;
  double budget_s = 3600.0;
  std::uint64_t seed = 20240601;
  int workers = 1;
};

nlohmann::json built_in_config();
ExperimentConfig load_config(const RunOptions& opt);

int cmd_run(const RunOptions& opt);
int cmd_gen_data(const RunOptions& opt);
int cmd_list_methods();
int cmd_table3(const std::string& out_path, std::uint64_t seed = 20240601);

// ---------------------------------------------------------------------------
// Applicability matrix probes (Table-III-style conformance)
// ---------------------------------------------------------------------------

struct ApplicabilityRow {
  std::string method_id;
  bool implemented = true;
  // declared / observed per probe dimension
  bool d_mult, d_zero, d_const, d_norm;
  bool o_mult, o_zero, o_const, o_norm;
  int mismatches() const {
    if (!implemented) return 0;
    return int(d_mult != o_mult) + int(d_zero != o_zero) + int(d_const != o_const) +
           int(d_norm != o_norm);
  }
};

struct ApplicabilityReport {
  std::vector<ApplicabilityRow> rows;
  int total_mismatches() const {
    int n = 0;
    for (const auto& r : rows) n += r.mismatches();
    return n;
  }
  std::string to_text() const;
};

ApplicabilityReport run_applicability_probes(std::uint64_t seed = 20240601);

// dataset cache used by gen-data / run
struct CachedScenario {
  scenario::Generated generated;
  bool cache_hit = false;
};

CachedScenario generate_cached(const grid::GridCase& c, const scenario::ScenarioConfig& cfg,
                               const std::string& cache_dir, const std::string& case_checksum,
                               std::vector<std::string>* log = nullptr);

}  // namespace dpfl::cli
