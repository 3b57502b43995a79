#pragma once

#include <string>
#include <vector>

#include "dpfl/common.hpp"

namespace dpfl::grid {

enum class BusKind { PQ, PV, Slack };

struct Bus {
  BusKind kind = BusKind::PQ;
  double p_load = 0.0;     // p.u. on base_mva
  double q_load = 0.0;     // p.u.
  double g_shunt = 0.0;    // p.u.
  double b_shunt = 0.0;    // p.u.
  double v_set = 1.0;      // p.u. (initial magnitude guess for PQ)
  double theta_init = 0.0; // rad
};

struct Generator {
  int bus = 0;             // dense bus index
  double p_gen = 0.0;      // p.u.
  double q_gen = 0.0;      // p.u.
  double v_set = 1.0;      // p.u.
  bool in_service = true;
};

struct Branch {
  int from = 0, to = 0;    // dense bus indices
  double r = 0.0, x = 0.0; // series impedance, p.u.
  double b_charging = 0.0; // total line charging susceptance, p.u.
  double tap_ratio = 1.0;  // 1 if absent
  double phase_shift = 0.0;// rad
  bool in_service = true;
};

// Static network description. Buses are densely indexed after parsing; the
// original file ids are kept in original_ids. Immutable after construction,
// safe to share read-only across workers.
struct GridCase {
  double base_mva = 100.0;
  std::vector<Bus> buses;
  std::vector<Generator> generators;
  std::vector<Branch> branches;
  std::vector<long long> original_ids;

  int n_buses() const { return static_cast<int>(buses.size()); }
  int n_branches() const { return static_cast<int>(branches.size()); }
  int slack() const;                       // dense index of the slack bus
  std::vector<int> buses_of_kind(BusKind k) const;

  // Throws SemanticError on any invariant violation:
  //  - exactly one slack bus
  //  - valid branch endpoints; in-service branches connect all buses
  //  - r^2 + x^2 > 0 for in-service branches
  //  - PV and slack buses carry at least one in-service generator
  void validate() const;
};

enum class CaseFormat { MatpowerM, NativeJson };

struct ParseResult {
  GridCase grid;
  std::vector<std::string> warnings;  // ignored-but-recognized fields, etc.
};

ParseResult parse_case(const std::string& text, CaseFormat format);

// Only the native JSON schema is emitted. parse(emit(c)) == c field-wise.
std::string emit_case(const GridCase& c);

// Convenience: dispatch on extension (.m / .json), read file, parse.
ParseResult load_case_file(const std::string& path);

bool cases_equal(const GridCase& a, const GridCase& b, double tol = 0.0);

}  // namespace dpfl::grid
