#pragma once

#include <cstdint>
#include <string>
#include <utility>
#include <vector>

#include "dpfl/acpf.hpp"
#include "dpfl/dataset.hpp"

namespace dpfl::scenario {

struct NoiseSpec {
  enum class Mode { None, Joint, Individual };
  Mode mode = Mode::None;
  double snr_db = 45.0;
};

struct OutlierSpec {
  enum class Mode { None, Joint, Individual };
  Mode mode = Mode::None;
  double fraction = 0.02;
  double multiplier = 2.0;
};

// Scaling-factor time series over the 19:00-22:00 window, piecewise linear
// between knots. The shipped default rises to an evening peak and falls off.
class Curve {
 public:
  Curve() = default;
  explicit Curve(std::vector<std::pair<double, double>> knots);
  double at(double hour) const;
  static Curve default_curve();
  static Curve from_csv(const std::string& text);  // two columns: hour, factor
  std::string digest() const;                      // hashed into run manifests
  const std::vector<std::pair<double, double>>& knots() const { return knots_; }

 private:
  std::vector<std::pair<double, double>> knots_;
};

struct ScenarioConfig {
  std::string name;
  std::string case_ref;
  int n_train = 0, n_test = 0;
  double fluct_lo = 1.0, fluct_hi = 1.0;
  Curve curve = Curve::default_curve();
  NoiseSpec noise;
  OutlierSpec outliers;
  std::uint64_t seed = 1;
  int retry_budget = 5;
  double window_start = 19.0, window_end = 22.0;

  // probe hooks used by the applicability matrix (see cli): buses whose load
  // is pinned to zero / held constant, and pairs forced to identical draws
  std::vector<int> zero_load_buses, constant_load_buses;
  std::vector<std::pair<int, int>> twin_load_buses;

  void validate() const;
};

// Raw generated samples: solved operating points plus the applied inputs.
struct SampleSet {
  std::vector<pf::Solution> solutions;
  Mat p_load, q_load, p_gen;  // n_samples x n_buses, applied p.u. values

  int size() const { return int(solutions.size()); }
};

struct Generated {
  SampleSet train, test;
};

// Fig-1-style generation: the window is split into n_train + n_test evenly
// spaced steps; at step t every load and generation base value is multiplied
// by curve(t) times an independent uniform draw from [lo, hi]; each scaled
// point is solved; non-convergent samples are redrawn within the retry
// budget. Fully deterministic given the seed.
Generated generate(const grid::GridCase& c, const ScenarioConfig& cfg,
                   pf::SolveOptions solve_opt = {});

std::pair<data::Dataset, data::Dataset> assemble(const grid::GridCase& c, const Generated& g,
                                                 const std::vector<data::ColumnSpec>& x_spec,
                                                 const std::vector<data::ColumnSpec>& y_spec);

data::Dataset assemble_one(const grid::GridCase& c, const SampleSet& s,
                           const std::vector<data::ColumnSpec>& x_spec,
                           const std::vector<data::ColumnSpec>& y_spec);

// Additive Gaussian noise at the configured SNR, training split only. Joint
// mode reuses one standard-normal draw per row scaled by each column's sigma;
// individual mode draws independently per element. sigma_c = rms(c) *
// 10^(-snr/20); exactly-zero columns stay zero.
data::Dataset inject_noise(const data::Dataset& d, const NoiseSpec& spec, std::uint64_t seed);

// Joint mode doubles round(fraction*n) whole rows across x and y; individual
// mode doubles round(fraction*n) elements per column, independently drawn.
data::Dataset inject_outliers(const data::Dataset& d, const OutlierSpec& spec, std::uint64_t seed);

// Resolves a column spec against the case topology: list of element indices.
std::vector<int> resolve_domain(const grid::GridCase& c, data::Kind kind, data::Domain dom,
                                bool predictor_side);

std::vector<data::ColumnSpec> default_x_spec();
std::vector<data::ColumnSpec> default_y_spec();

}  // namespace dpfl::scenario
