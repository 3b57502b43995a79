#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <fstream>
#include <sstream>

#include "dpfl/grid.hpp"

using namespace dpfl;
using grid::BusKind;
using grid::CaseFormat;
using grid::GridCase;

namespace {

std::string slurp(const std::string& path) {
  std::ifstream in(path);
  REQUIRE(in.good());
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

std::string case_path(const std::string& name) {
  return std::string(DPFL_CASE_DIR) + "/" + name;
}

}  // namespace

TEST_CASE("case9 parses and matches the published field values") {
  const auto res = grid::parse_case(slurp(case_path("case9.m")), CaseFormat::MatpowerM);
  const GridCase& c = res.grid;
  CHECK(c.base_mva == 100.0);
  CHECK(c.n_buses() == 9);
  CHECK(c.n_branches() == 9);
  CHECK(c.generators.size() == 3);

  // cross-check against the published archive, field by field (p.u.)
  CHECK(c.buses[0].kind == BusKind::Slack);
  CHECK(c.buses[1].kind == BusKind::PV);
  CHECK(c.buses[2].kind == BusKind::PV);
  CHECK(c.buses[4].p_load == doctest::Approx(0.90));
  CHECK(c.buses[4].q_load == doctest::Approx(0.30));
  CHECK(c.buses[6].p_load == doctest::Approx(1.00));
  CHECK(c.buses[8].p_load == doctest::Approx(1.25));
  CHECK(c.buses[8].q_load == doctest::Approx(0.50));
  CHECK(c.generators[0].v_set == doctest::Approx(1.04));
  CHECK(c.generators[1].v_set == doctest::Approx(1.025));
  CHECK(c.generators[1].p_gen == doctest::Approx(1.63));
  CHECK(c.generators[2].p_gen == doctest::Approx(0.85));

  // branch 0: 1-4 transformer, x=0.0576
  CHECK(c.branches[0].from == 0);
  CHECK(c.branches[0].to == 3);
  CHECK(c.branches[0].x == doctest::Approx(0.0576));
  CHECK(c.branches[0].r == 0.0);
  // branch 4-5 line with charging
  CHECK(c.branches[1].r == doctest::Approx(0.017));
  CHECK(c.branches[1].x == doctest::Approx(0.092));
  CHECK(c.branches[1].b_charging == doctest::Approx(0.158));
  CHECK(c.branches[1].tap_ratio == 1.0);
}

TEST_CASE("two slack buses are rejected") {
  std::string text = slurp(case_path("case9.m"));
  // bus 2: type 2 -> type 3
  const auto at = text.find("\t2\t2\t0");
  REQUIRE(at != std::string::npos);
  text[at + 3] = '3';
  CHECK_THROWS_AS(grid::parse_case(text, CaseFormat::MatpowerM), SemanticError);
}

TEST_CASE("zero-impedance branch is rejected") {
  std::string text = slurp(case_path("case9.m"));
  const std::string needle = "\t1\t4\t0\t0.0576";
  const auto at = text.find(needle);
  REQUIRE(at != std::string::npos);
  text.replace(at, needle.size(), "\t1\t4\t0\t0.0000");
  CHECK_THROWS_AS(grid::parse_case(text, CaseFormat::MatpowerM), SemanticError);
}

TEST_CASE("syntax error carries a message") {
  CHECK_THROWS_AS(grid::parse_case("function mpc = x\nmpc.baseMVA = banana;",
                                   CaseFormat::MatpowerM),
                  SyntaxError);
}

TEST_CASE("gencost is ignored with a warning, dcline rejected") {
  std::string text = slurp(case_path("case9.m"));
  text += "\nmpc.gencost = [\n\t2\t0\t0\t3\t0.11\t5\t150;\n];\n";
  const auto res = grid::parse_case(text, CaseFormat::MatpowerM);
  REQUIRE(res.warnings.size() == 1);
  CHECK(res.warnings[0].find("gencost") != std::string::npos);

  text += "\nmpc.dcline = [\n\t1\t2\t1\t10\t10\t0\t0;\n];\n";
  CHECK_THROWS_AS(grid::parse_case(text, CaseFormat::MatpowerM), UnsupportedFeature);
}

TEST_CASE("json round trip is the identity for every shipped case") {
  for (const std::string name : {"case9.m", "case14.m", "case33.m", "case39.m", "case118.m"}) {
    const GridCase c = grid::parse_case(slurp(case_path(name)), CaseFormat::MatpowerM).grid;
    const std::string emitted = grid::emit_case(c);
    const GridCase back = grid::parse_case(emitted, CaseFormat::NativeJson).grid;
    CHECK(grid::cases_equal(c, back));
  }
}

TEST_CASE("emit refuses an empty case") {
  GridCase empty;
  CHECK_THROWS_AS(grid::emit_case(empty), SemanticError);
}

TEST_CASE("parser determinism") {
  const std::string text = slurp(case_path("case14.m"));
  const GridCase a = grid::parse_case(text, CaseFormat::MatpowerM).grid;
  const GridCase b = grid::parse_case(text, CaseFormat::MatpowerM).grid;
  CHECK(grid::cases_equal(a, b));
}

TEST_CASE("re-indexing preserves branch incidence under scrambled ids") {
  // same topology with ids multiplied by 10 must reproduce the dense topology
  std::string text = slurp(case_path("case9.m"));
  const GridCase base = grid::parse_case(text, CaseFormat::MatpowerM).grid;
  GridCase scrambled = base;
  for (auto& id : scrambled.original_ids) id *= 10;
  const std::string emitted = grid::emit_case(scrambled);
  const GridCase back = grid::parse_case(emitted, CaseFormat::NativeJson).grid;
  for (int l = 0; l < base.n_branches(); ++l) {
    CHECK(back.branches[l].from == base.branches[l].from);
    CHECK(back.branches[l].to == base.branches[l].to);
  }
  CHECK(back.original_ids[0] == 10);
}

TEST_CASE("out-of-service branch may disconnect only if redundant") {
  GridCase c = grid::parse_case(slurp(case_path("case9.m")), CaseFormat::MatpowerM).grid;
  c.branches[1].in_service = false;  // 4-5 is on the ring; 9-bus stays connected
  CHECK_NOTHROW(c.validate());
  c.branches[8].in_service = false;  // removing 9-4 too isolates bus 5's side
  CHECK_THROWS_AS(c.validate(), SemanticError);
}
