#include "scene.hpp"

#include <fstream>
#include <set>
#include <sstream>

namespace spencerctl {

using namespace spencer;

namespace {

std::string child(const std::string& at, const std::string& key) { return at + "/" + key; }
std::string child(const std::string& at, std::size_t i) { return at + "/" + std::to_string(i); }

void only_keys(const json& j, const std::string& at, std::initializer_list<const char*> allowed) {
  if (!j.is_object()) throw SceneError(at, "expected an object");
  std::set<std::string> ok(allowed.begin(), allowed.end());
  for (const auto& [k, v] : j.items())
    if (!ok.count(k)) throw SceneError(child(at, k), "unknown key '" + k + "'");
}

const json& need(const json& j, const std::string& at, const char* key) {
  if (!j.contains(key)) throw SceneError(child(at, key), "missing required key");
  return j.at(key);
}

double number(const json& j, const std::string& at) {
  if (!j.is_number()) throw SceneError(at, "expected a number");
  return j.get<double>();
}

int integer(const json& j, const std::string& at) {
  if (!j.is_number_integer()) throw SceneError(at, "expected an integer");
  return j.get<int>();
}

/// Expression text, checked against the scene dimension.
std::string expr_text(const json& j, const std::string& at, int dim) {
  if (j.is_number()) {
    std::ostringstream os;
    os.precision(17);
    os << j.get<double>();
    return os.str();
  }
  if (!j.is_string()) throw SceneError(at, "expected an expression string");
  std::string t = j.get<std::string>();
  try {
    (void)parse_expr(t, dim);
  } catch (const ParseError& e) {
    throw SceneError(at, std::string(e.what()));
  }
  return t;
}

ComplexText complex_text(const json& j, const std::string& at, int dim) {
  if (j.is_array()) {
    if (j.size() != 2) throw SceneError(at, "complex function needs [re, im]");
    return {expr_text(j[0], child(at, 0), dim), expr_text(j[1], child(at, 1), dim)};
  }
  return {expr_text(j, at, dim), "0"};
}

std::vector<std::vector<std::string>> matrix_text(const json& j, const std::string& at, int rows, int dim) {
  if (!j.is_array() || static_cast<int>(j.size()) != rows)
    throw SceneError(at, "expected " + std::to_string(rows) + " rows");
  std::vector<std::vector<std::string>> out;
  for (std::size_t r = 0; r < j.size(); ++r) {
    const std::string ar = child(at, r);
    if (!j[r].is_array() || static_cast<int>(j[r].size()) != rows)
      throw SceneError(ar, "expected " + std::to_string(rows) + " entries");
    std::vector<std::string> row;
    for (std::size_t c = 0; c < j[r].size(); ++c) row.push_back(expr_text(j[r][c], child(ar, c), dim));
    out.push_back(std::move(row));
  }
  return out;
}

Eigen::MatrixXd number_matrix(const json& j, const std::string& at, int n) {
  if (!j.is_array() || static_cast<int>(j.size()) != n) throw SceneError(at, "expected " + std::to_string(n) + " rows");
  Eigen::MatrixXd m(n, n);
  for (int r = 0; r < n; ++r) {
    const std::string ar = child(at, static_cast<std::size_t>(r));
    if (!j[static_cast<std::size_t>(r)].is_array() || static_cast<int>(j[static_cast<std::size_t>(r)].size()) != n)
      throw SceneError(ar, "expected " + std::to_string(n) + " entries");
    for (int c = 0; c < n; ++c)
      m(r, c) = number(j[static_cast<std::size_t>(r)][static_cast<std::size_t>(c)], child(ar, static_cast<std::size_t>(c)));
  }
  return m;
}

void check_structure(const json& j, int dim_half) {
  const std::string at = "/structure";
  if (!j.is_object()) throw SceneError(at, "expected an object");
  const json& kind = need(j, at, "kind");
  if (!kind.is_string()) throw SceneError(child(at, "kind"), "expected a string");
  const std::string k = kind.get<std::string>();
  const int d = 2 * dim_half;
  if (k == "standard" || k == "normal_form") {
    only_keys(j, at, {"kind"});
  } else if (k == "matrix") {
    only_keys(j, at, {"kind", "j_cot", "j_tan"});
    if (j.contains("j_cot") == j.contains("j_tan")) throw SceneError(at, "give exactly one of j_cot, j_tan");
    const char* key = j.contains("j_cot") ? "j_cot" : "j_tan";
    (void)matrix_text(j.at(key), child(at, key), d, d);
  } else if (k == "pq") {
    only_keys(j, at, {"kind", "P", "Q"});
    (void)matrix_text(need(j, at, "P"), child(at, "P"), dim_half, d);
    (void)matrix_text(need(j, at, "Q"), child(at, "Q"), dim_half, d);
  } else if (k == "pullback") {
    only_keys(j, at, {"kind", "phi"});
    const json& phi = need(j, at, "phi");
    if (!phi.is_array() || static_cast<int>(phi.size()) != d)
      throw SceneError(child(at, "phi"), "expected " + std::to_string(d) + " expressions");
    for (std::size_t i = 0; i < phi.size(); ++i) (void)expr_text(phi[i], child(child(at, "phi"), i), d);
  } else if (k == "type1") {
    only_keys(j, at, {"kind", "f"});
    if (dim_half != 2) throw SceneError(child(at, "kind"), "type1 needs dim_half 2");
    (void)complex_text(need(j, at, "f"), child(at, "f"), d);
  } else if (k == "hypercomplex") {
    only_keys(j, at, {"kind", "variant", "G"});
    if (dim_half % 2 != 0) throw SceneError(child(at, "kind"), "hypercomplex needs dim_half even (R^{4n})");
    const std::string variant = j.contains("variant") ? j.at("variant").get<std::string>() : "flat";
    if (variant == "conjugated")
      (void)number_matrix(need(j, at, "G"), child(at, "G"), 4);
    else if (variant != "flat")
      throw SceneError(child(at, "variant"), "expected 'flat' or 'conjugated'");
    else if (j.contains("G"))
      throw SceneError(child(at, "G"), "G only applies to the conjugated variant");
  } else {
    throw SceneError(child(at, "kind"), "unknown structure kind '" + k + "'");
  }
}

std::vector<Expr> exprs(const json& arr, int dim) {
  std::vector<Expr> out;
  for (const auto& e : arr) out.push_back(parse_expr(e.is_string() ? e.get<std::string>() : std::to_string(e.get<double>()), dim));
  return out;
}

MatrixField matrix_field(const PatchPtr& p, const json& j, int rows) {
  return MatrixField::parse(p, matrix_text(j, "", rows, p->dim()));
}

}  // namespace

bool Scene::is_hypercomplex() const { return structure.at("kind") == "hypercomplex"; }

PatchPtr Scene::patch(int grid) const {
  std::vector<int> res = resolution;
  if (grid > 0) res.assign(res.size(), grid);
  return std::make_shared<const Patch>(dim_half, bounds, res);
}

Scene parse_scene(const json& j) {
  only_keys(j, "", {"schema", "description", "dim_half", "patch", "structure", "functions", "complex_functions",
                    "vector_fields", "quaternion_functions", "charts", "tolerance", "mode", "elliptic"});
  Scene s;
  s.raw = j;
  if (integer(need(j, "", "schema"), "/schema") != 1) throw SceneError("/schema", "unsupported schema version");
  if (j.contains("description") && !j.at("description").is_string())
    throw SceneError("/description", "expected a string");
  s.dim_half = integer(need(j, "", "dim_half"), "/dim_half");
  if (s.dim_half < 1) throw SceneError("/dim_half", "must be positive");
  const int d = s.dim();

  const json& pj = need(j, "", "patch");
  only_keys(pj, "/patch", {"lo", "hi", "bounds", "res"});
  if (pj.contains("bounds")) {
    if (pj.contains("lo") || pj.contains("hi")) throw SceneError("/patch", "give either bounds or lo/hi");
    const json& b = pj.at("bounds");
    if (!b.is_array() || static_cast<int>(b.size()) != d)
      throw SceneError("/patch/bounds", "expected " + std::to_string(d) + " [lo, hi] pairs");
    for (std::size_t i = 0; i < b.size(); ++i) {
      const std::string at = child("/patch/bounds", i);
      if (!b[i].is_array() || b[i].size() != 2) throw SceneError(at, "expected [lo, hi]");
      s.bounds.emplace_back(number(b[i][0], at + "/0"), number(b[i][1], at + "/1"));
    }
  } else {
    const double lo = number(need(pj, "/patch", "lo"), "/patch/lo"), hi = number(need(pj, "/patch", "hi"), "/patch/hi");
    s.bounds.assign(static_cast<std::size_t>(d), {lo, hi});
  }
  const json& rj = need(pj, "/patch", "res");
  if (rj.is_array()) {
    if (static_cast<int>(rj.size()) != d) throw SceneError("/patch/res", "expected " + std::to_string(d) + " entries");
    for (std::size_t i = 0; i < rj.size(); ++i) s.resolution.push_back(integer(rj[i], child("/patch/res", i)));
  } else {
    s.resolution.assign(static_cast<std::size_t>(d), integer(rj, "/patch/res"));
  }
  try {
    (void)s.patch();
  } catch (const PatchError& e) {
    throw SceneError("/patch", e.what());
  }

  s.structure = need(j, "", "structure");
  check_structure(s.structure, s.dim_half);

  if (j.contains("functions")) {
    const json& f = j.at("functions");
    if (!f.is_object()) throw SceneError("/functions", "expected an object");
    for (const auto& [k, v] : f.items()) s.functions[k] = expr_text(v, child("/functions", k), d);
  }
  if (j.contains("complex_functions")) {
    const json& f = j.at("complex_functions");
    if (!f.is_object()) throw SceneError("/complex_functions", "expected an object");
    for (const auto& [k, v] : f.items()) {
      if (s.functions.count(k)) throw SceneError(child("/complex_functions", k), "name already used by a real function");
      s.complex_functions[k] = complex_text(v, child("/complex_functions", k), d);
    }
  }
  if (j.contains("vector_fields")) {
    const json& f = j.at("vector_fields");
    if (!f.is_object()) throw SceneError("/vector_fields", "expected an object");
    for (const auto& [k, v] : f.items()) {
      const std::string at = child("/vector_fields", k);
      if (!v.is_array() || static_cast<int>(v.size()) != d)
        throw SceneError(at, "expected " + std::to_string(d) + " components");
      std::vector<ComplexText> comps;
      for (std::size_t i = 0; i < v.size(); ++i) comps.push_back(complex_text(v[i], child(at, i), d));
      s.vector_fields[k] = std::move(comps);
    }
  }
  if (j.contains("quaternion_functions")) {
    const json& f = j.at("quaternion_functions");
    if (!f.is_object()) throw SceneError("/quaternion_functions", "expected an object");
    for (const auto& [k, v] : f.items()) {
      const std::string at = child("/quaternion_functions", k);
      if (!v.is_array() || v.size() != 4) throw SceneError(at, "expected [u, v, zeta, eta]");
      std::array<std::string, 4> q;
      for (std::size_t i = 0; i < 4; ++i) q[i] = expr_text(v[i], child(at, i), d);
      s.quaternion_functions[k] = q;
    }
  }
  if (j.contains("charts")) {
    const json& f = j.at("charts");
    if (!f.is_object()) throw SceneError("/charts", "expected an object");
    for (const auto& [k, v] : f.items()) {
      const std::string at = child("/charts", k);
      only_keys(v, at, {"holo", "complement"});
      ChartText c;
      for (const char* part : {"holo", "complement"}) {
        if (!v.contains(part)) continue;
        const json& arr = v.at(part);
        if (!arr.is_array()) throw SceneError(child(at, part), "expected a list of [re, im]");
        auto& dst = std::string(part) == "holo" ? c.holo : c.complement;
        for (std::size_t i = 0; i < arr.size(); ++i) dst.push_back(complex_text(arr[i], child(child(at, part), i), d));
      }
      if (static_cast<int>(c.holo.size() + c.complement.size()) != s.dim_half)
        throw SceneError(at, "chart needs " + std::to_string(s.dim_half) + " complex coordinates in total");
      s.charts[k] = std::move(c);
    }
  }
  if (j.contains("tolerance")) {
    s.tolerance = number(j.at("tolerance"), "/tolerance");
    if (*s.tolerance <= 0.0) throw SceneError("/tolerance", "must be positive");
  }
  if (j.contains("mode")) {
    const json& m = j.at("mode");
    if (!m.is_string() || (m != "exact" && m != "fd" && m != "auto"))
      throw SceneError("/mode", "expected 'exact', 'fd' or 'auto'");
    s.mode = m.get<std::string>();
  }
  if (j.contains("elliptic")) {
    const json& e = j.at("elliptic");
    only_keys(e, "/elliptic", {"boundary", "oracle"});
    if (e.contains("boundary")) s.boundary = expr_text(e.at("boundary"), "/elliptic/boundary", d);
    if (e.contains("oracle")) s.oracle = expr_text(e.at("oracle"), "/elliptic/oracle", d);
  }
  return s;
}

Scene load_scene(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw SceneError("", "cannot open '" + path + "'");
  json j;
  try {
    j = json::parse(in);
  } catch (const json::parse_error& e) {
    throw SceneError("", "invalid JSON in '" + path + "' at byte " + std::to_string(e.byte) + ": " + e.what());
  }
  return parse_scene(j);
}

AlmostComplexStructure build_structure(const Scene& s, const PatchPtr& p) {
  const json& j = s.structure;
  const std::string k = j.at("kind").get<std::string>();
  if (k == "standard") return standard_structure(p);
  if (k == "normal_form") return normal_form_structure(p);
  if (k == "matrix") {
    const bool cot = j.contains("j_cot");
    return assess_acs(matrix_field(p, j.at(cot ? "j_cot" : "j_tan"), s.dim()),
                      cot ? Representation::Cotangent : Representation::Tangent);
  }
  if (k == "pq") return reconstruct_from_pq(make_pq(matrix_field(p, j.at("P"), s.dim_half), matrix_field(p, j.at("Q"), s.dim_half)));
  if (k == "pullback") return pullback_structure(p, exprs(j.at("phi"), s.dim()));
  if (k == "type1") {
    ComplexText f = complex_text(j.at("f"), "/structure/f", s.dim());
    return type1_structure(p, parse_expr(f.first, 4), parse_expr(f.second, 4));
  }
  return build_hypercomplex(s, p).J;
}

HypercomplexStructure build_hypercomplex(const Scene& s, const PatchPtr& p) {
  if (!s.is_hypercomplex()) throw SceneError("/structure/kind", "command needs a hypercomplex structure");
  const json& j = s.structure;
  if (j.value("variant", std::string("flat")) == "conjugated")
    return conjugated_hypercomplex(p, number_matrix(j.at("G"), "/structure/G", 4));
  return flat_hypercomplex(p);
}

ScalarField real_function(const Scene& s, const PatchPtr& p, const std::string& name) {
  auto it = s.functions.find(name);
  if (it == s.functions.end()) throw SceneError("/functions", "no real function named '" + name + "'");
  return ScalarField::parse(p, it->second);
}

ComplexField complex_function(const Scene& s, const PatchPtr& p, const std::string& name) {
  if (auto it = s.complex_functions.find(name); it != s.complex_functions.end())
    return ComplexField::parse(p, it->second.first, it->second.second);
  if (s.functions.count(name)) return ComplexField(real_function(s, p, name));
  throw SceneError("/complex_functions", "no function named '" + name + "'");
}

VectorFieldC vector_field(const Scene& s, const PatchPtr& p, const std::string& name) {
  auto it = s.vector_fields.find(name);
  if (it == s.vector_fields.end()) throw SceneError("/vector_fields", "no vector field named '" + name + "'");
  return VectorFieldC::parse(p, it->second);
}

QuaternionFunction quaternion_function(const Scene& s, const PatchPtr& p, const std::string& name) {
  auto it = s.quaternion_functions.find(name);
  if (it == s.quaternion_functions.end())
    throw SceneError("/quaternion_functions", "no quaternion function named '" + name + "'");
  const auto& q = it->second;
  return QuaternionFunction::parse(p, q[0], q[1], q[2], q[3]);
}

SpencerChart chart(const Scene& s, const PatchPtr& p, const std::string& name) {
  auto it = s.charts.find(name);
  if (it == s.charts.end()) throw SceneError("/charts", "no chart named '" + name + "'");
  auto build = [&](const std::vector<ComplexText>& t) {
    std::vector<ComplexField> out;
    for (const auto& [re, im] : t) out.push_back(ComplexField::parse(p, re, im));
    return out;
  };
  return SpencerChart(build(it->second.holo), build(it->second.complement));
}

}  // namespace spencerctl
