#include "dpfl/grid.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <fstream>
#include <map>
#include <sstream>

#include <json.hpp>

namespace dpfl::grid {

using nlohmann::json;

int GridCase::slack() const {
  for (int i = 0; i < n_buses(); ++i)
    if (buses[i].kind == BusKind::Slack) return i;
  throw SemanticError("case has no slack bus");
}

std::vector<int> GridCase::buses_of_kind(BusKind k) const {
  std::vector<int> out;
  for (int i = 0; i < n_buses(); ++i)
    if (buses[i].kind == k) out.push_back(i);
  return out;
}

void GridCase::validate() const {
  if (buses.empty()) throw SemanticError("case has no buses");
  int n_slack = 0;
  for (const auto& b : buses)
    if (b.kind == BusKind::Slack) ++n_slack;
  if (n_slack != 1)
    throw SemanticError("expected exactly one slack bus, found " + std::to_string(n_slack));

  const int n = n_buses();
  for (const auto& br : branches) {
    if (br.from < 0 || br.from >= n || br.to < 0 || br.to >= n)
      throw SemanticError("branch references a nonexistent bus");
    if (br.from == br.to) throw SemanticError("branch connects a bus to itself");
    if (br.in_service && br.r * br.r + br.x * br.x <= 0.0)
      throw SemanticError("in-service branch has zero impedance");
    if (br.tap_ratio <= 0.0) throw SemanticError("branch tap ratio must be positive");
  }
  for (const auto& g : generators)
    if (g.bus < 0 || g.bus >= n) throw SemanticError("generator references a nonexistent bus");

  // connectivity over in-service branches
  std::vector<int> seen(n, 0);
  std::vector<int> stack{slack()};
  seen[stack[0]] = 1;
  while (!stack.empty()) {
    const int u = stack.back();
    stack.pop_back();
    for (const auto& br : branches) {
      if (!br.in_service) continue;
      const int v = br.from == u ? br.to : (br.to == u ? br.from : -1);
      if (v >= 0 && !seen[v]) {
        seen[v] = 1;
        stack.push_back(v);
      }
    }
  }
  if (std::count(seen.begin(), seen.end(), 1) != n)
    throw SemanticError("in-service branches do not connect all buses");

  for (int i = 0; i < n; ++i) {
    if (buses[i].kind == BusKind::PQ) continue;
    const bool has_gen = std::any_of(generators.begin(), generators.end(), [&](const Generator& g) {
      return g.bus == i && g.in_service;
    });
    if (!has_gen)
      throw SemanticError("PV/slack bus " + std::to_string(original_ids.empty() ? i : original_ids[i]) +
                          " has no in-service generator");
  }
}

// ---------------------------------------------------------------------------
// MATPOWER-style .m parsing. The function header line is ignored; baseMVA,
// bus, gen and branch matrices are read positionally per the published column
// order. gencost and name-like extensions are ignored with a warning.
// ---------------------------------------------------------------------------
namespace {

struct MTokenizer {
  const std::string& text;
  std::size_t pos = 0;
  int line = 1, col = 1;

  explicit MTokenizer(const std::string& t) : text(t) {}

  void advance(char c) {
    if (c == '\n') {
      ++line;
      col = 1;
    } else {
      ++col;
    }
    ++pos;
  }

  void skip_ws_and_comments() {
    while (pos < text.size()) {
      const char c = text[pos];
      if (c == '%') {
        while (pos < text.size() && text[pos] != '\n') advance(text[pos]);
      } else if (c == '.' && text.compare(pos, 3, "...") == 0) {
        while (pos < text.size() && text[pos] != '\n') advance(text[pos]);
      } else if (std::isspace(static_cast<unsigned char>(c)) || c == ',' || c == ';') {
        advance(c);
      } else {
        break;
      }
    }
  }

  bool next_number(double& out) {
    skip_ws_and_comments();
    if (pos >= text.size()) return false;
    const char c = text[pos];
    if (!(std::isdigit(static_cast<unsigned char>(c)) || c == '-' || c == '+' || c == '.'))
      return false;
    const char* start = text.c_str() + pos;
    char* end = nullptr;
    const double v = std::strtod(start, &end);
    if (end == start) return false;
    for (const char* p = start; p != end; ++p) advance(*p);
    out = v;
    return true;
  }
};

// reads rows of numbers between '[' and ']'
std::vector<std::vector<double>> read_matrix(const std::string& text, std::size_t open_bracket,
                                             int line_hint) {
  std::vector<std::vector<double>> rows;
  std::vector<double> row;
  std::size_t pos = open_bracket + 1;
  int line = line_hint, col = 1;
  auto flush_row = [&]() {
    if (!row.empty()) {
      rows.push_back(row);
      row.clear();
    }
  };
  while (pos < text.size()) {
    const char c = text[pos];
    if (c == ']') {
      flush_row();
      return rows;
    }
    if (c == '%') {
      while (pos < text.size() && text[pos] != '\n') ++pos;
      continue;
    }
    if (text.compare(pos, 3, "...") == 0) {
      while (pos < text.size() && text[pos] != '\n') ++pos;
      continue;
    }
    if (c == ';' || c == '\n') {
      flush_row();
      if (c == '\n') ++line;
      ++pos;
      continue;
    }
    if (std::isspace(static_cast<unsigned char>(c)) || c == ',') {
      ++pos;
      ++col;
      continue;
    }
    const char* start = text.c_str() + pos;
    char* end = nullptr;
    const double v = std::strtod(start, &end);
    if (end == start)
      throw SyntaxError(std::string("unparseable token '") + c + "' in matrix", line, col);
    row.push_back(v);
    pos += static_cast<std::size_t>(end - start);
  }
  throw SyntaxError("matrix not closed with ']'", line, col);
}

// locates "<name> = [" and returns the bracket position, or npos
std::size_t find_assignment(const std::string& text, const std::string& name) {
  std::size_t from = 0;
  while (true) {
    const std::size_t at = text.find(name, from);
    if (at == std::string::npos) return std::string::npos;
    // require word boundary on both sides
    const bool left_ok = at == 0 || !(std::isalnum(static_cast<unsigned char>(text[at - 1])) ||
                                      text[at - 1] == '_');
    std::size_t p = at + name.size();
    const bool right_ok = p >= text.size() || !(std::isalnum(static_cast<unsigned char>(text[p])) ||
                                                text[p] == '_');
    if (left_ok && right_ok) {
      while (p < text.size() && std::isspace(static_cast<unsigned char>(text[p]))) ++p;
      if (p < text.size() && text[p] == '=') return p;
    }
    from = at + 1;
  }
}

ParseResult parse_matpower(const std::string& text) {
  ParseResult res;
  GridCase& c = res.grid;

  // baseMVA
  {
    const std::size_t eq = find_assignment(text, "baseMVA");
    if (eq == std::string::npos) throw SyntaxError("missing baseMVA assignment");
    MTokenizer tk(text);
    tk.pos = eq + 1;
    double v = 0;
    if (!tk.next_number(v)) throw SyntaxError("baseMVA value is not a number");
    if (v <= 0) throw SemanticError("baseMVA must be positive");
    c.base_mva = v;
  }

  auto matrix_after = [&](const std::string& name) -> std::vector<std::vector<double>> {
    const std::size_t eq = find_assignment(text, name);
    if (eq == std::string::npos) throw SyntaxError("missing matrix '" + name + "'");
    const std::size_t br = text.find('[', eq);
    if (br == std::string::npos) throw SyntaxError("matrix '" + name + "' has no '['");
    const int line_hint = 1 + static_cast<int>(std::count(text.begin(), text.begin() + br, '\n'));
    return read_matrix(text, br, line_hint);
  };

  if (text.find("dcline") != std::string::npos)
    throw UnsupportedFeature("DC line data is not supported");

  const auto bus_rows = matrix_after("bus");
  const auto gen_rows = matrix_after("gen");
  const auto branch_rows = matrix_after("branch");
  if (find_assignment(text, "gencost") != std::string::npos)
    res.warnings.push_back("gencost matrix ignored (not used by power flow)");

  const double sb = c.base_mva;
  std::map<long long, int> dense;
  for (const auto& row : bus_rows) {
    if (row.size() < 13) throw SyntaxError("bus row has fewer than 13 columns");
    Bus b;
    const long long id = static_cast<long long>(row[0]);
    const int type = static_cast<int>(row[1]);
    switch (type) {
      case 1: b.kind = BusKind::PQ; break;
      case 2: b.kind = BusKind::PV; break;
      case 3: b.kind = BusKind::Slack; break;
      case 4: throw UnsupportedFeature("isolated (type 4) buses are not supported");
      default: throw SemanticError("unknown bus type " + std::to_string(type));
    }
    b.p_load = row[2] / sb;
    b.q_load = row[3] / sb;
    b.g_shunt = row[4] / sb;
    b.b_shunt = row[5] / sb;
    b.v_set = row[7];
    b.theta_init = row[8] * M_PI / 180.0;
    if (dense.count(id)) throw SemanticError("duplicate bus id " + std::to_string(id));
    dense[id] = c.n_buses();
    c.buses.push_back(b);
    c.original_ids.push_back(id);
  }

  for (const auto& row : gen_rows) {
    if (row.size() < 10) throw SyntaxError("gen row has fewer than 10 columns");
    Generator g;
    const long long id = static_cast<long long>(row[0]);
    const auto it = dense.find(id);
    if (it == dense.end()) throw SemanticError("generator at nonexistent bus " + std::to_string(id));
    g.bus = it->second;
    g.p_gen = row[1] / sb;
    g.q_gen = row[2] / sb;
    g.v_set = row[5];
    g.in_service = row[7] > 0;
    c.generators.push_back(g);
  }

  for (const auto& row : branch_rows) {
    if (row.size() < 13) throw SyntaxError("branch row has fewer than 13 columns");
    Branch br;
    const long long f = static_cast<long long>(row[0]);
    const long long t = static_cast<long long>(row[1]);
    const auto fi = dense.find(f), ti = dense.find(t);
    if (fi == dense.end() || ti == dense.end())
      throw SemanticError("branch references nonexistent bus");
    br.from = fi->second;
    br.to = ti->second;
    br.r = row[2];
    br.x = row[3];
    br.b_charging = row[4];
    br.tap_ratio = row[8] == 0.0 ? 1.0 : row[8];
    br.phase_shift = row[9] * M_PI / 180.0;
    br.in_service = row[10] > 0;
    c.branches.push_back(br);
  }

  c.validate();
  return res;
}

// ---------------------------------------------------------------------------
// Native JSON schema (schema_version 1)
// ---------------------------------------------------------------------------

const char* kind_name(BusKind k) {
  switch (k) {
    case BusKind::PQ: return "PQ";
    case BusKind::PV: return "PV";
    case BusKind::Slack: return "SLACK";
  }
  return "?";
}

BusKind kind_from(const std::string& s) {
  if (s == "PQ") return BusKind::PQ;
  if (s == "PV") return BusKind::PV;
  if (s == "SLACK") return BusKind::Slack;
  throw SemanticError("unknown bus kind '" + s + "'");
}

ParseResult parse_native(const std::string& text) {
  json j;
  try {
    j = json::parse(text);
  } catch (const json::parse_error& e) {
    throw SyntaxError(std::string("invalid JSON: ") + e.what());
  }
  if (!j.contains("schema_version") || j["schema_version"].get<int>() != 1)
    throw UnsupportedFeature("unsupported native schema version");

  ParseResult res;
  GridCase& c = res.grid;
  c.base_mva = j.at("base_mva").get<double>();
  std::map<long long, int> dense;
  for (const auto& bj : j.at("buses")) {
    Bus b;
    const long long id = bj.at("id").get<long long>();
    b.kind = kind_from(bj.at("kind").get<std::string>());
    b.p_load = bj.at("p_load").get<double>();
    b.q_load = bj.at("q_load").get<double>();
    b.g_shunt = bj.at("g_shunt").get<double>();
    b.b_shunt = bj.at("b_shunt").get<double>();
    b.v_set = bj.at("v_set").get<double>();
    b.theta_init = bj.at("theta_init").get<double>();
    if (dense.count(id)) throw SemanticError("duplicate bus id " + std::to_string(id));
    dense[id] = c.n_buses();
    c.buses.push_back(b);
    c.original_ids.push_back(id);
  }
  for (const auto& gj : j.at("generators")) {
    Generator g;
    const long long id = gj.at("bus_id").get<long long>();
    const auto it = dense.find(id);
    if (it == dense.end()) throw SemanticError("generator at nonexistent bus");
    g.bus = it->second;
    g.p_gen = gj.at("p_gen").get<double>();
    g.q_gen = gj.at("q_gen").get<double>();
    g.v_set = gj.at("v_set").get<double>();
    g.in_service = gj.at("in_service").get<bool>();
    c.generators.push_back(g);
  }
  for (const auto& rj : j.at("branches")) {
    Branch br;
    const auto fi = dense.find(rj.at("from_bus").get<long long>());
    const auto ti = dense.find(rj.at("to_bus").get<long long>());
    if (fi == dense.end() || ti == dense.end())
      throw SemanticError("branch references nonexistent bus");
    br.from = fi->second;
    br.to = ti->second;
    br.r = rj.at("r").get<double>();
    br.x = rj.at("x").get<double>();
    br.b_charging = rj.at("b_charging").get<double>();
    br.tap_ratio = rj.value("tap_ratio", 1.0);
    br.phase_shift = rj.value("phase_shift", 0.0);
    br.in_service = rj.at("in_service").get<bool>();
    c.branches.push_back(br);
  }
  c.validate();
  return res;
}

}  // namespace

ParseResult parse_case(const std::string& text, CaseFormat format) {
  switch (format) {
    case CaseFormat::MatpowerM: return parse_matpower(text);
    case CaseFormat::NativeJson: return parse_native(text);
  }
  throw UnsupportedFeature("unknown case format");
}

std::string emit_case(const GridCase& c) {
  c.validate();
  json j;
  j["schema_version"] = 1;
  j["base_mva"] = c.base_mva;
  j["buses"] = json::array();
  for (int i = 0; i < c.n_buses(); ++i) {
    const Bus& b = c.buses[i];
    j["buses"].push_back({{"id", c.original_ids.empty() ? i : c.original_ids[i]},
                          {"kind", kind_name(b.kind)},
                          {"p_load", b.p_load},
                          {"q_load", b.q_load},
                          {"g_shunt", b.g_shunt},
                          {"b_shunt", b.b_shunt},
                          {"v_set", b.v_set},
                          {"theta_init", b.theta_init}});
  }
  j["generators"] = json::array();
  for (const auto& g : c.generators) {
    j["generators"].push_back({{"bus_id", c.original_ids.empty() ? g.bus : c.original_ids[g.bus]},
                               {"p_gen", g.p_gen},
                               {"q_gen", g.q_gen},
                               {"v_set", g.v_set},
                               {"in_service", g.in_service}});
  }
  j["branches"] = json::array();
  for (const auto& br : c.branches) {
    j["branches"].push_back({{"from_bus", c.original_ids.empty() ? br.from : c.original_ids[br.from]},
                             {"to_bus", c.original_ids.empty() ? br.to : c.original_ids[br.to]},
                             {"r", br.r},
                             {"x", br.x},
                             {"b_charging", br.b_charging},
                             {"tap_ratio", br.tap_ratio},
                             {"phase_shift", br.phase_shift},
                             {"in_service", br.in_service}});
  }
  return j.dump(2);
}

ParseResult load_case_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IOError("cannot open case file: " + path);
  std::stringstream ss;
  ss << in.rdbuf();
  const bool is_json = path.size() > 5 && path.compare(path.size() - 5, 5, ".json") == 0;
  return parse_case(ss.str(), is_json ? CaseFormat::NativeJson : CaseFormat::MatpowerM);
}

bool cases_equal(const GridCase& a, const GridCase& b, double tol) {
  auto eq = [tol](double x, double y) { return std::abs(x - y) <= tol; };
  if (!eq(a.base_mva, b.base_mva)) return false;
  if (a.buses.size() != b.buses.size() || a.generators.size() != b.generators.size() ||
      a.branches.size() != b.branches.size())
    return false;
  if (a.original_ids != b.original_ids) return false;
  for (std::size_t i = 0; i < a.buses.size(); ++i) {
    const Bus &x = a.buses[i], &y = b.buses[i];
    if (x.kind != y.kind || !eq(x.p_load, y.p_load) || !eq(x.q_load, y.q_load) ||
        !eq(x.g_shunt, y.g_shunt) || !eq(x.b_shunt, y.b_shunt) || !eq(x.v_set, y.v_set) ||
        !eq(x.theta_init, y.theta_init))
      return false;
  }
  for (std::size_t i = 0; i < a.generators.size(); ++i) {
    const Generator &x = a.generators[i], &y = b.generators[i];
    if (x.bus != y.bus || !eq(x.p_gen, y.p_gen) || !eq(x.q_gen, y.q_gen) ||
        !eq(x.v_set, y.v_set) || x.in_service != y.in_service)
      return false;
  }
  for (std::size_t i = 0; i < a.branches.size(); ++i) {
    const Branch &x = a.branches[i], &y = b.branches[i];
    if (x.from != y.from || x.to != y.to || !eq(x.r, y.r) || !eq(x.x, y.x) ||
        !eq(x.b_charging, y.b_charging) || !eq(x.tap_ratio, y.tap_ratio) ||
        !eq(x.phase_shift, y.phase_shift) || x.in_service != y.in_service)
      return false;
  }
  return true;
}

}  // namespace dpfl::grid
