#include "dpfl/scenario.hpp"

#include <algorithm>
#include <cmath>
#include <set>
#include <sstream>

#include "dpfl/rng.hpp"
#include "dpfl/sha256.hpp"

namespace dpfl::scenario {

using data::ColumnSpec;
using data::Dataset;
using data::Domain;
using data::Kind;
using data::Tag;
using grid::BusKind;
using grid::GridCase;

Curve::Curve(std::vector<std::pair<double, double>> knots) : knots_(std::move(knots)) {
  if (knots_.size() < 2) throw ConfigError("curve needs at least two knots");
  for (std::size_t i = 1; i < knots_.size(); ++i)
    if (knots_[i].first <= knots_[i - 1].first)
      throw ConfigError("curve knots must have strictly increasing time");
}

double Curve::at(double hour) const {
  if (hour <= knots_.front().first) return knots_.front().second;
  if (hour >= knots_.back().first) return knots_.back().second;
  for (std::size_t i = 1; i < knots_.size(); ++i) {
    if (hour <= knots_[i].first) {
      const auto& [t0, v0] = knots_[i - 1];
      const auto& [t1, v1] = knots_[i];
      const double w = (hour - t0) / (t1 - t0);
      return v0 + w * (v1 - v0);
    }
  }
  return knots_.back().second;
}

Curve Curve::default_curve() {
  // evening window: ramp into the peak, then decline
  return Curve({{19.0, 0.85}, {20.5, 1.05}, {22.0, 0.90}});
}

Curve Curve::from_csv(const std::string& text) {
  std::vector<std::pair<double, double>> knots;
  std::istringstream in(text);
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty() || line[0] == '#') continue;
    std::replace(line.begin(), line.end(), ',', ' ');
    std::istringstream ls(line);
    double t, v;
    if (!(ls >> t >> v))
      throw SyntaxError("curve file: expected 'time,factor'", lineno, 1);
    knots.emplace_back(t, v);
  }
  return Curve(std::move(knots));
}

std::string Curve::digest() const {
  std::ostringstream os;
  os.precision(17);
  for (const auto& [t, v] : knots_) os << t << "," << v << ";";
  return sha256_hex(os.str());
}

void ScenarioConfig::validate() const {
  if (n_train < 1 || n_test < 1) throw ConfigError("n_train and n_test must be >= 1");
  if (!(fluct_lo > 0.0) || fluct_lo > fluct_hi)
    throw ConfigError("fluctuation bounds must satisfy 0 < lo <= hi");
  if (noise.mode != NoiseSpec::Mode::None && noise.snr_db <= 0)
    throw ConfigError("snr_db must be positive when noise is active");
  if (outliers.mode != OutlierSpec::Mode::None) {
    if (!(outliers.fraction > 0.0 && outliers.fraction < 1.0))
      throw ConfigError("outlier fraction must be in (0, 1)");
    if (outliers.multiplier <= 0) throw ConfigError("outlier multiplier must be positive");
  }
  if (window_end <= window_start) throw ConfigError("scenario window is empty");
}

Generated generate(const GridCase& c, const ScenarioConfig& cfg, pf::SolveOptions solve_opt) {
  cfg.validate();
  const int n = c.n_buses();
  const int total = cfg.n_train + cfg.n_test;
  const int slack = c.slack();

  Vec base_gen = Vec::Zero(n);
  for (const auto& g : c.generators)
    if (g.in_service) base_gen[g.bus] += g.p_gen;

  std::set<int> zero_set(cfg.zero_load_buses.begin(), cfg.zero_load_buses.end());
  std::set<int> const_set(cfg.constant_load_buses.begin(), cfg.constant_load_buses.end());

  SampleSet all;
  all.solutions.reserve(total);
  all.p_load.resize(total, n);
  all.q_load.resize(total, n);
  all.p_gen.resize(total, n);

  for (int t = 0; t < total; ++t) {
    const double hour = total > 1
                            ? cfg.window_start + (cfg.window_end - cfg.window_start) * t / (total - 1)
                            : cfg.window_start;
    const double scale = cfg.curve.at(hour);
    Rng rng(split_seed(cfg.seed, std::uint64_t(t)));

    bool solved = false;
    for (int attempt = 0; attempt <= cfg.retry_budget && !solved; ++attempt) {
      Vec pl(n), ql(n), pg(n);
      for (int i = 0; i < n; ++i) {
        const double fp = scale * rng.uniform(cfg.fluct_lo, cfg.fluct_hi);
        const double fq = scale * rng.uniform(cfg.fluct_lo, cfg.fluct_hi);
        pl[i] = c.buses[i].p_load * fp;
        ql[i] = c.buses[i].q_load * fq;
        if (zero_set.count(i)) pl[i] = ql[i] = 0.0;
        if (const_set.count(i)) {
          pl[i] = c.buses[i].p_load;
          ql[i] = c.buses[i].q_load;
        }
        if (i == slack || base_gen[i] == 0.0) {
          pg[i] = base_gen[i];
        } else {
          pg[i] = base_gen[i] * scale * rng.uniform(cfg.fluct_lo, cfg.fluct_hi);
        }
      }
      // twin buses replicate another bus's applied load exactly
      for (const auto& [a, b] : cfg.twin_load_buses) {
        pl[b] = pl[a];
        ql[b] = ql[a];
      }

      pf::Overrides ov;
      ov.p_load = pl;
      ov.q_load = ql;
      ov.p_gen = pg;
      try {
        pf::Solution sol = pf::solve_nr(c, ov, solve_opt);
        if (sol.converged) {
          all.solutions.push_back(std::move(sol));
          all.p_load.row(t) = pl.transpose();
          all.q_load.row(t) = ql.transpose();
          all.p_gen.row(t) = pg.transpose();
          solved = true;
        }
      } catch (const SingularJacobian&) {
        // redraw
      }
    }
    if (!solved)
      throw GenerationFailed("sample " + std::to_string(t) + " did not converge within " +
                             std::to_string(cfg.retry_budget) + " retries");
  }

  Generated out;
  auto slice = [&](int from, int count, SampleSet& dst) {
    dst.solutions.assign(all.solutions.begin() + from, all.solutions.begin() + from + count);
    dst.p_load = all.p_load.middleRows(from, count);
    dst.q_load = all.q_load.middleRows(from, count);
    dst.p_gen = all.p_gen.middleRows(from, count);
  };
  slice(0, cfg.n_train, out.train);
  slice(cfg.n_train, cfg.n_test, out.test);
  return out;
}

std::vector<int> resolve_domain(const GridCase& c, Kind kind, Domain dom, bool predictor_side) {
  const bool branch_kind = kind == Kind::PF || kind == Kind::PT || kind == Kind::QF ||
                           kind == Kind::QT || kind == Kind::Rij || kind == Kind::Cij;
  if (branch_kind) {
    std::vector<int> out(c.n_branches());
    for (int i = 0; i < c.n_branches(); ++i) out[i] = i;
    return out;
  }

  Domain d = dom;
  if (d == Domain::Auto) {
    if (predictor_side) {
      switch (kind) {
        case Kind::P:
        case Kind::Q: d = Domain::PQ; break;
        case Kind::V:
        case Kind::V2: d = Domain::Gen; break;
        case Kind::Theta: d = Domain::Slack; break;
        default: throw UnknownKind("kind not valid as predictor");
      }
    } else {
      switch (kind) {
        case Kind::V: d = Domain::PQ; break;
        case Kind::Theta: d = Domain::NonSlack; break;
        case Kind::V2: d = Domain::All; break;
        case Kind::P: d = Domain::Slack; break;
        case Kind::Q: d = Domain::Gen; break;
        default: throw UnknownKind("kind not valid as response");
      }
    }
  }

  const int slack = c.slack();
  std::vector<int> out;
  for (int i = 0; i < c.n_buses(); ++i) {
    const BusKind bk = c.buses[i].kind;
    const bool take = (d == Domain::All) || (d == Domain::PQ && bk == BusKind::PQ) ||
                      (d == Domain::Gen && bk != BusKind::PQ) ||
                      (d == Domain::NonSlack && i != slack) || (d == Domain::Slack && i == slack);
    if (take) out.push_back(i);
  }
  return out;
}

namespace {

double column_value(const GridCase& c, const pf::Solution& s, const Tag& t) {
  switch (t.kind) {
    case Kind::P: return s.p_inj[t.element];
    case Kind::Q: return s.q_inj[t.element];
    case Kind::V: return s.v[t.element];
    case Kind::V2: return s.v[t.element] * s.v[t.element];
    case Kind::Theta: return s.theta[t.element];
    case Kind::PF: return s.pf[t.element];
    case Kind::PT: return s.pt[t.element];
    case Kind::QF: return s.qf[t.element];
    case Kind::QT: return s.qt[t.element];
    case Kind::Rij: {
      const auto& br = c.branches[t.element];
      return s.v[br.from] * s.v[br.to] * std::cos(s.theta[br.from] - s.theta[br.to]);
    }
    case Kind::Cij: {
      const auto& br = c.branches[t.element];
      return s.v[br.from] * s.v[br.to] * std::sin(s.theta[br.from] - s.theta[br.to]);
    }
  }
  throw UnknownKind("bad tag kind");
}

std::vector<Tag> expand_tags(const GridCase& c, const std::vector<ColumnSpec>& specs,
                             bool predictor_side) {
  std::vector<Tag> tags;
  for (const auto& spec : specs)
    for (int e : resolve_domain(c, spec.kind, spec.domain, predictor_side))
      tags.push_back({spec.kind, e});
  std::set<Tag> uniq(tags.begin(), tags.end());
  if (uniq.size() != tags.size()) throw SemanticError("duplicate column tags in spec");
  return tags;
}

Mat fill_block(const GridCase& c, const SampleSet& s, const std::vector<Tag>& tags) {
  Mat m(s.size(), tags.size());
  for (int r = 0; r < s.size(); ++r)
    for (std::size_t col = 0; col < tags.size(); ++col)
      m(r, col) = column_value(c, s.solutions[r], tags[col]);
  if (!m.allFinite()) throw NonFinite("assembled dataset contains non-finite values");
  return m;
}

}  // namespace

Dataset assemble_one(const GridCase& c, const SampleSet& s, const std::vector<ColumnSpec>& x_spec,
                     const std::vector<ColumnSpec>& y_spec) {
  Dataset d;
  d.x_tags = expand_tags(c, x_spec, true);
  d.y_tags = expand_tags(c, y_spec, false);
  d.x = fill_block(c, s, d.x_tags);
  d.y = fill_block(c, s, d.y_tags);
  return d;
}

std::pair<Dataset, Dataset> assemble(const GridCase& c, const Generated& g,
                                     const std::vector<ColumnSpec>& x_spec,
                                     const std::vector<ColumnSpec>& y_spec) {
  return {assemble_one(c, g.train, x_spec, y_spec), assemble_one(c, g.test, x_spec, y_spec)};
}

namespace {

Vec column_rms(const Mat& m) {
  Vec rms(m.cols());
  for (int c = 0; c < m.cols(); ++c) rms[c] = std::sqrt(m.col(c).squaredNorm() / m.rows());
  return rms;
}

}  // namespace

Dataset inject_noise(const Dataset& d, const NoiseSpec& spec, std::uint64_t seed) {
  if (spec.mode == NoiseSpec::Mode::None) return d;
  if (d.norm.normalized) throw SemanticError("noise must be injected before normalization");
  Dataset out = d;
  const double gain = std::pow(10.0, -spec.snr_db / 20.0);
  const Vec sx = column_rms(d.x) * gain;
  const Vec sy = column_rms(d.y) * gain;
  Rng rng(split_seed(seed, 0xA01));

  if (spec.mode == NoiseSpec::Mode::Joint) {
    for (int r = 0; r < d.x.rows(); ++r) {
      const double z = rng.normal();
      for (int c = 0; c < d.x.cols(); ++c) out.x(r, c) += z * sx[c];
      for (int c = 0; c < d.y.cols(); ++c) out.y(r, c) += z * sy[c];
    }
  } else {
    for (int r = 0; r < d.x.rows(); ++r) {
      for (int c = 0; c < d.x.cols(); ++c)
        if (sx[c] > 0) out.x(r, c) += rng.normal() * sx[c];
      for (int c = 0; c < d.y.cols(); ++c)
        if (sy[c] > 0) out.y(r, c) += rng.normal() * sy[c];
    }
  }
  return out;
}

Dataset inject_outliers(const Dataset& d, const OutlierSpec& spec, std::uint64_t seed) {
  if (spec.mode == OutlierSpec::Mode::None) return d;
  if (d.norm.normalized) throw SemanticError("outliers must be injected before normalization");
  Dataset out = d;
  const int n = d.n_samples();
  const int count = int(std::lround(spec.fraction * n));
  Rng rng(split_seed(seed, 0xB02));

  auto pick = [&](int how_many) {
    // uniform without replacement
    std::vector<int> idx(n);
    for (int i = 0; i < n; ++i) idx[i] = i;
    for (int i = 0; i < how_many; ++i) {
      const int j = i + int(rng.below(n - i));
      std::swap(idx[i], idx[j]);
    }
    idx.resize(how_many);
    return idx;
  };

  if (spec.mode == OutlierSpec::Mode::Joint) {
    for (int r : pick(count)) {
      out.x.row(r) *= spec.multiplier;
      out.y.row(r) *= spec.multiplier;
    }
  } else {
    for (int c = 0; c < d.x.cols(); ++c)
      for (int r : pick(count)) out.x(r, c) *= spec.multiplier;
    for (int c = 0; c < d.y.cols(); ++c)
      for (int r : pick(count)) out.y(r, c) *= spec.multiplier;
  }
  return out;
}

std::vector<ColumnSpec> default_x_spec() {
  return {{Kind::P, Domain::Auto},
          {Kind::Q, Domain::Auto},
          {Kind::V2, Domain::Auto},
          {Kind::Theta, Domain::Auto}};
}

std::vector<ColumnSpec> default_y_spec() {
  return {{Kind::V, Domain::Auto}, {Kind::PF, Domain::Auto}};
}

}  // namespace dpfl::scenario
