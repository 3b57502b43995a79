#include <CLI11.hpp>

#include "dpfl/cli.hpp"

// dpflc: batch front-end for the power-flow-linearization benchmark.
//   run           execute all (case x method) jobs and emit reports + charts
//   gen-data      generate (or refresh) the cached measurement datasets
//   table3        probe and report the applicability matrix
//   list-methods  print the registered method roster

int main(int argc, char** argv) {
  CLI::App app{"data-driven power flow linearization benchmark"};
  app.require_subcommand(1);

  dpfl::cli::RunOptions opt;
  std::string methods_csv, cases_csv;
  std::uint64_t seed = 0;
  double budget = 0;
  bool no_wall_timing = false;

  auto add_common = [&](CLI::App* cmd) {
    cmd->add_option("--config", opt.config_path, "experiment config path (JSON)");
    cmd->add_option("--out", opt.out_dir, "output directory");
    cmd->add_option("--workers", opt.workers, "worker thread count");
    cmd->add_option("--seed", seed, "master seed override");
    cmd->add_option("--methods", methods_csv, "comma-separated method filter");
    cmd->add_option("--cases", cases_csv, "comma-separated scenario filter");
    cmd->add_option("--budget-s", budget, "per-job wall budget in seconds");
    cmd->add_flag("--no-wall-timing", no_wall_timing,
                  "zero the timing columns for byte-stable reports");
  };

  CLI::App* run = app.add_subcommand("run", "run the benchmark");
  add_common(run);
  CLI::App* gen = app.add_subcommand("gen-data", "generate cached datasets");
  add_common(gen);
  CLI::App* t3 = app.add_subcommand("table3", "emit the applicability matrix");
  std::string t3_out = "-";
  t3->add_option("--out", t3_out, "output path ('-' for stdout)");
  std::uint64_t t3_seed = 20240601;
  t3->add_option("--seed", t3_seed, "probe seed");
  CLI::App* lm = app.add_subcommand("list-methods", "print the method roster");

  CLI11_PARSE(app, argc, argv);

  auto split_csv = [](const std::string& s) {
    std::vector<std::string> out;
    std::size_t at = 0;
    while (at <= s.size() && !s.empty()) {
      const std::size_t comma = s.find(',', at);
      out.push_back(s.substr(at, comma == std::string::npos ? comma : comma - at));
      if (comma == std::string::npos) break;
      at = comma + 1;
    }
    return out;
  };
  if (seed != 0) opt.seed = seed;
  if (budget > 0) opt.budget_s = budget;
  opt.methods_filter = split_csv(methods_csv);
  opt.cases_filter = split_csv(cases_csv);
  opt.wall_timing = !no_wall_timing;

  if (run->parsed()) return dpfl::cli::cmd_run(opt);
  if (gen->parsed()) return dpfl::cli::cmd_gen_data(opt);
  if (t3->parsed()) return dpfl::cli::cmd_table3(t3_out, t3_seed);
  if (lm->parsed()) return dpfl::cli::cmd_list_methods();
  return dpfl::cli::kExitConfigError;
}
