#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "dpfl/common.hpp"
#include "dpfl/grid.hpp"

namespace dpfl::data {

// Column kinds of a measurement dataset. Rij/Cij are the voltage-product
// coordinates V_i V_j cos(theta_ij) / V_i V_j sin(theta_ij) per branch.
enum class Kind { P, Q, V, V2, Theta, PF, PT, QF, QT, Rij, Cij };

const char* kind_name(Kind k);
Kind kind_from_name(const std::string& s);

struct Tag {
  Kind kind;
  int element;  // dense bus index, or branch index for flow kinds

  bool operator==(const Tag& o) const { return kind == o.kind && element == o.element; }
  bool operator<(const Tag& o) const {
    return kind != o.kind ? kind < o.kind : element < o.element;
  }
};

// Which elements a column kind spans. Auto resolves to the known/unknown
// variable split by bus type: predictors default to P,Q at PQ buses, V/V2 at
// generator buses and theta at the slack; responses default to V at PQ buses,
// theta at non-slack buses, V2 everywhere and flows on every branch.
enum class Domain { Auto, PQ, Gen, NonSlack, Slack, All };

struct ColumnSpec {
  Kind kind;
  Domain domain = Domain::Auto;
};

struct NormState {
  bool normalized = false;
  Vec x_scale, y_scale;                  // per-column Euclidean norms (1 for zero columns)
  std::vector<std::uint8_t> x_zero, y_zero;
};

struct Dataset {
  Mat x, y;
  std::vector<Tag> x_tags, y_tags;
  NormState norm;

  int n_samples() const { return int(x.rows()); }
  int find_x(const Tag& t) const;
  int find_y(const Tag& t) const;  // -1 when absent
};

// Per-column unit-energy scaling: each nonzero column divided by its
// Euclidean norm; zero columns are left untouched and flagged. Idempotent in
// effect (a second application stores factors of one).
Dataset normalize(const Dataset& d);

// Exact inverse of normalize given the stored factors.
Dataset denormalize(const Dataset& d);

}  // namespace dpfl::data
