#include "cli.hpp"

#include <chrono>
#include <cmath>
#include <ctime>
#include <fstream>
#include <functional>
#include <iomanip>
#include <optional>
#include <sstream>

#include <CLI11.hpp>

#include "scene.hpp"
#include "spencer/elliptic.hpp"

namespace spencerctl {

using namespace spencer;

namespace {

constexpr const char* kVersion = "1.0.0";

struct Common {
  std::string scene;
  int grid = 0;
  std::optional<double> tol;
  std::string mode;
  std::uint64_t seed = 1;
  std::string out;
  bool no_meta = false;
};

struct Ctx {
  Common c;
  Scene scene;
  ModeRequest mode = ModeRequest::Auto;

  PatchPtr patch() const { return scene.patch(c.grid); }
  DiffMode diff_mode() const { return mode == ModeRequest::FiniteDifference ? DiffMode::FiniteDifference : DiffMode::Exact; }
  /// --tol, then the scene tolerance, then exact_default (exact) or 30 h^2 (FD).
  double tol(const Patch& p, double exact_default) const {
    if (c.tol) return *c.tol;
    if (scene.tolerance) return *scene.tolerance;
    if (diff_mode() == DiffMode::Exact) return exact_default;
    const double h = p.max_spacing();
    return 30.0 * h * h;
  }
};

const char* mode_name(DiffMode m) { return m == DiffMode::Exact ? "exact" : "fd"; }

json point(const Patch& p, std::size_t node) {
  json a = json::array();
  for (double x : p.coords(node)) a.push_back(x);
  return a;
}

json residual_json(const ResidualReport& r, const Patch& p) {
  json j;
  j["check"] = r.check;
  j["sup"] = r.sup;
  j["l2"] = r.l2;
  j["worst_node"] = r.worst_node;
  j["worst_point"] = point(p, r.worst_node);
  j["mode"] = mode_name(r.mode);
  if (!r.breakdown.empty()) {
    json b;
    for (const auto& [k, v] : r.breakdown) b[k] = v;
    j["breakdown"] = b;
  }
  return j;
}

json matrix_json(const Eigen::MatrixXd& m) {
  json a = json::array();
  for (int r = 0; r < m.rows(); ++r) {
    json row = json::array();
    for (int c = 0; c < m.cols(); ++c) row.push_back(m(r, c));
    a.push_back(row);
  }
  return a;
}

json complex_matrix_json(const Eigen::MatrixXcd& m) {
  json a = json::array();
  for (int r = 0; r < m.rows(); ++r) {
    json row = json::array();
    for (int c = 0; c < m.cols(); ++c) row.push_back(json::array({m(r, c).real(), m(r, c).imag()}));
    a.push_back(row);
  }
  return a;
}

json patch_json(const Patch& p) {
  json j;
  j["dim_half"] = p.dim_half();
  j["resolution"] = p.resolutions();
  j["max_spacing"] = p.max_spacing();
  return j;
}

/// Report skeleton shared by all commands.
json header(const Ctx& ctx, const std::string& command, const std::string& anchor, const Patch& p) {
  json j;
  j["command"] = command;
  j["anchor"] = anchor;
  j["scene"] = ctx.c.scene;
  j["patch"] = patch_json(p);
  j["mode"] = mode_name(ctx.diff_mode());
  return j;
}

ModeRequest parse_mode(const std::string& m) {
  if (m == "exact") return ModeRequest::Exact;
  if (m == "fd") return ModeRequest::FiniteDifference;
  return ModeRequest::Auto;
}

// ---- commands ---------------------------------------------------------------

json acs_check(const Ctx& ctx, bool nijenhuis, std::size_t samples) {
  PatchPtr p = ctx.patch();
  json r = header(ctx, "acs check", "structure/validity-and-ellipticity", *p);
  AlmostComplexStructure acs = build_structure(ctx.scene, p);
  const double tol = ctx.c.tol ? *ctx.c.tol : acs.tolerance;
  r["tolerance"] = tol;
  r["acs_residual"] = acs.acs_residual;
  r["worst_node"] = acs.worst_node;
  const bool valid = acs.acs_residual <= tol;
  r["valid"] = valid;
  bool passed = valid;
  if (valid) {
    EllipticOperator op = assemble_operator(acs, ctx.mode);
    EllipticityReport e = ellipticity_certificate(op, samples, ctx.c.seed);
    r["ellipticity"] = {{"samples", e.samples},
                        {"seed", ctx.c.seed},
                        {"min_quadratic", e.min_quadratic},
                        {"min_eigenvalue", e.min_eigenvalue},
                        {"identity_defect", e.identity_defect},
                        {"symmetry_defect", e.symmetry_defect},
                        {"worst_node", e.worst_node},
                        {"passed", e.passed}};
    passed = passed && e.passed;
  }
  if (ctx.scene.is_hypercomplex()) {
    HypercomplexStructure h = build_hypercomplex(ctx.scene, p);
    r["hypercomplex"] = {{"K_residual", h.K.acs_residual}, {"anti_residual", h.anti_residual}, {"valid", h.valid}};
    passed = passed && h.valid;
  }
  if (nijenhuis && valid) {
    NijenhuisReport n = nijenhuis_residual(acs, ctx.mode);
    r["nijenhuis"] = {{"sup", n.sup}, {"worst_node", n.worst_node}, {"mode", mode_name(n.mode)}};
  }
  r["passed"] = passed;
  return r;
}

json acs_from_pq(const Ctx& ctx) {
  if (ctx.scene.structure.at("kind") != "pq") throw SceneError("/structure/kind", "from-pq needs a pq structure");
  if (ctx.c.out.empty()) throw CLI::ValidationError("--out", "from-pq needs --out for the generated scene");
  PatchPtr p = ctx.patch();
  json r = header(ctx, "acs from-pq", "moduli/pq-reconstruction", *p);
  AlmostComplexStructure acs = build_structure(ctx.scene, p);
  json rows = json::array();
  for (int i = 0; i < acs.dim(); ++i) {
    json row = json::array();
    for (int k = 0; k < acs.dim(); ++k) {
      const ScalarField& e = acs.j_cot(i, k);
      if (!e.is_expr()) throw FieldError("reconstructed entry is not symbolic");
      row.push_back(e.expr().str());
    }
    rows.push_back(row);
  }
  json scene = ctx.scene.raw;
  scene["structure"] = {{"kind", "matrix"}, {"j_cot", rows}};
  std::ofstream f(ctx.c.out);
  if (!f) throw SceneError("", "cannot write '" + ctx.c.out + "'");
  f << scene.dump(2) << "\n";
  r["output"] = ctx.c.out;
  const double tol = ctx.c.tol ? *ctx.c.tol : acs.tolerance;
  r["tolerance"] = tol;
  r["acs_residual"] = acs.acs_residual;
  r["passed"] = acs.acs_residual <= tol;
  return r;
}

json acs_extract_pq(const Ctx& ctx, long base) {
  PatchPtr p = ctx.patch();
  json r = header(ctx, "acs extract-pq", "moduli/block-normalization", *p);
  AlmostComplexStructure acs = build_structure(ctx.scene, p);
  const std::size_t node = base < 0 ? p->center_node() : static_cast<std::size_t>(base);
  if (node >= p->size()) throw CLI::ValidationError("--base-node", "node index out of range");
  const double tol = ctx.tol(*p, 1e-10);
  BlockDecomposition bd = normalize_at_origin(acs, node);
  BlockIdentityResiduals ids = block_identities_residual(bd, acs);
  PQPair pq = extract_pq(bd);
  AlmostComplexStructure again = reconstruct_from_pq(pq);
  MatrixSamples a = again.j_cot.sample(), b = bd.normalized.sample();
  double rt = 0.0;
  for (std::size_t n = 0; n < p->size(); ++n) rt = std::max(rt, (a.at(n) - b.at(n)).cwiseAbs().maxCoeff());
  r["tolerance"] = tol;
  r["base_node"] = node;
  r["base_point"] = point(*p, node);
  r["G"] = matrix_json(bd.G);
  r["block_identities"] = {{"reassembly", ids.reassembly},
                           {"A^2+(B+E)(C-E)+E", ids.identities[0]},
                           {"A(B+E)+(B+E)D", ids.identities[1]},
                           {"(C-E)A+D(C-E)", ids.identities[2]},
                           {"(C-E)(B+E)+D^2+E", ids.identities[3]}};
  r["round_trip"] = rt;
  const std::vector<double> x = p->coords(node);
  r["P_at_base"] = matrix_json(pq.P.value_at(x));
  r["Q_at_base"] = matrix_json(pq.Q.value_at(x));
  r["passed"] = ids.max() <= tol && rt <= tol;
  return r;
}

json holo_residual_cmd(const Ctx& ctx, const std::string& fname, bool anti) {
  PatchPtr p = ctx.patch();
  json r = header(ctx, "holo residual", "holomorphy/cauchy-riemann", *p);
  AlmostComplexStructure acs = build_structure(ctx.scene, p);
  ComplexField f = complex_function(ctx.scene, p, fname);
  ResidualReport rep = anti ? antiholo_residual(acs, f, ctx.mode) : holo_residual(acs, f, ctx.mode);
  const double tol = ctx.tol(*p, 1e-10);
  r["function"] = fname;
  r["tolerance"] = tol;
  r["residual"] = residual_json(rep, *p);
  r["passed"] = rep.sup <= tol;
  return r;
}

json holo_reduced_cmd(const Ctx& ctx, const std::string& fname) {
  PatchPtr p = ctx.patch();
  json r = header(ctx, "holo reduced", "holomorphy/reduced-system", *p);
  AlmostComplexStructure acs = build_structure(ctx.scene, p);
  ComplexField f = complex_function(ctx.scene, p, fname);
  BlockDecomposition bd = normalize_at_origin(acs, p->center_node());
  PQPair pq = extract_pq(bd);
  const double tol = ctx.tol(*p, 1e-10);
  ReductionReport rep = reduction_equivalence_check(acs, bd, pq, f, ctx.mode, tol);
  r["function"] = fname;
  r["tolerance"] = tol;
  r["block_identity"] = rep.block_identity;
  r["full"] = residual_json(rep.full, *p);
  r["reduced"] = residual_json(rep.reduced, *p);
  r["kappa_max"] = rep.kappa_max;
  r["bound_excess"] = rep.bound_excess;
  r["identity_holds"] = rep.identity_holds;
  r["bound_holds"] = rep.bound_holds;
  r["passed"] = rep.passed();
  return r;
}

json pluri_check(const Ctx& ctx, const std::string& uname) {
  PatchPtr p = ctx.patch();
  json r = header(ctx, "pluri check", "potential/closedness-and-delta_J", *p);
  AlmostComplexStructure acs = build_structure(ctx.scene, p);
  ScalarField u = real_function(ctx.scene, p, uname);
  const double tol = ctx.tol(*p, 1e-10);
  ResidualReport closed = potential_closedness_residual(acs, u, ctx.mode);
  TheoremReport th = theorem_check(acs, u, ctx.mode);
  r["function"] = uname;
  r["tolerance"] = tol;
  r["closedness"] = residual_json(closed, *p);
  r["delta_j"] = residual_json(th.delta, *p);
  r["contraction_identity"] = residual_json(th.contraction, *p);
  r["j_sup"] = th.j_sup;
  r["bound"] = th.bound;
  r["bound_holds"] = th.bound_holds;
  r["pluriharmonic"] = closed.sup <= tol;
  r["passed"] = closed.sup <= tol && th.delta.sup <= tol && th.bound_holds;
  return r;
}

struct EllipticArgs {
  std::string bc, oracle, csv, solver = "auto";
  double solver_tol = 1e-10;
};

json elliptic_solve(const Ctx& ctx, const EllipticArgs& a) {
  PatchPtr p = ctx.patch();
  json r = header(ctx, "elliptic solve", "elliptic/dirichlet", *p);
  std::string bc = a.bc.empty() ? ctx.scene.boundary.value_or("") : a.bc;
  if (bc.empty()) throw CLI::ValidationError("--bc", "no boundary data (flag or scene elliptic.boundary)");
  std::string oracle = a.oracle.empty() ? ctx.scene.oracle.value_or("") : a.oracle;
  AlmostComplexStructure acs = build_structure(ctx.scene, p);
  EllipticOperator op = assemble_operator(acs, ctx.mode);
  DirichletProblem prob{&op, ScalarField::parse(p, bc)};
  prob.tolerance = a.solver_tol;
  prob.method = a.solver == "direct" ? SolverMethod::Direct : a.solver == "iterative" ? SolverMethod::Iterative : SolverMethod::Auto;
  DirichletResult res = solve_dirichlet(prob);
  r["boundary"] = bc;
  r["solver"] = {{"method", res.method},
                 {"iterations", res.iterations},
                 {"residual", res.residual},
                 {"converged", res.converged},
                 {"tolerance", a.solver_tol}};
  r["monotone"] = res.monotone;
  r["peclet"] = res.peclet;
  r["peclet_warning"] = res.peclet_warning;
  r["boundary_range"] = {res.boundary_min, res.boundary_max};
  r["interior_range"] = {res.interior_min, res.interior_max};
  r["maximum_principle"] = res.interior_max <= res.boundary_max + 10.0 * a.solver_tol &&
                           res.interior_min >= res.boundary_min - 10.0 * a.solver_tol;
  bool passed = res.converged;
  SamplePtr u = res.solution.samples();
  SamplePtr o;
  if (!oracle.empty()) {
    o = ScalarField::parse(p, oracle).samples();
    double err = 0.0;
    std::size_t worst = 0;
    for (std::size_t n = 0; n < p->size(); ++n)
      if (p->is_interior(n) && std::abs((*u)[n] - (*o)[n]) > err) {
        err = std::abs((*u)[n] - (*o)[n]);
        worst = n;
      }
    r["oracle"] = oracle;
    r["max_error"] = err;
    r["max_error_point"] = point(*p, worst);
    const std::optional<double> tol = ctx.c.tol ? ctx.c.tol : ctx.scene.tolerance;
    if (tol) {
      r["tolerance"] = *tol;
      passed = passed && err <= *tol;
    }
  }
  if (!a.csv.empty()) {
    std::ofstream f(a.csv);
    if (!f) throw SceneError("", "cannot write '" + a.csv + "'");
    f << std::setprecision(17);
    for (int k = 0; k < p->dim(); ++k) f << "x" << k + 1 << ",";
    f << "u" << (o ? ",oracle" : "") << "\n";
    for (std::size_t n = 0; n < p->size(); ++n) {
      for (double x : p->coords(n)) f << x << ",";
      f << (*u)[n];
      if (o) f << "," << (*o)[n];
      f << "\n";
    }
    r["csv"] = a.csv;
  }
  r["passed"] = passed;
  return r;
}

BracketCase parse_case(const std::string& s) {
  if (s == "10-10") return BracketCase::Both10;
  if (s == "01-01") return BracketCase::Both01;
  if (s == "10-01") return BracketCase::Mixed10_01;
  return BracketCase::Mixed01_10;
}

json bracket_check(const Ctx& ctx, const std::string& xn, const std::string& yn, const std::string& un,
                   const std::string& which, bool project) {
  PatchPtr p = ctx.patch();
  json r = header(ctx, "bracket check", "brackets/twisted-bracket-law", *p);
  AlmostComplexStructure acs = build_structure(ctx.scene, p);
  VectorFieldC X = vector_field(ctx.scene, p, xn), Y = vector_field(ctx.scene, p, yn);
  const BracketCase bc = parse_case(which);
  if (project) {
    const bool x10 = bc == BracketCase::Both10 || bc == BracketCase::Mixed10_01;
    const bool y10 = bc == BracketCase::Both10 || bc == BracketCase::Mixed01_10;
    auto px = splitting_projections(acs, X), py = splitting_projections(acs, Y);
    X = x10 ? px.first : px.second;
    Y = y10 ? py.first : py.second;
  }
  ComplexField u = complex_function(ctx.scene, p, un);
  const double tol = ctx.tol(*p, 1e-10);
  BracketLawReport rep = bracket_law_check(acs, X, Y, u, bc, ctx.mode);
  r["case"] = to_string(bc);
  r["projected"] = project;
  r["tolerance"] = tol;
  r["eigen_x"] = rep.eigen_x;
  r["eigen_y"] = rep.eigen_y;
  r["law"] = residual_json(rep.law, *p);
  r["swapped_sign_law"] = residual_json(rep.swapped_sign_law, *p);
  r["passed"] = rep.passed(tol);
  return r;
}

json hyper_check(const Ctx& ctx, const std::string& fname) {
  PatchPtr p = ctx.patch();
  json r = header(ctx, "hyper check", "hypercomplex/hyperholomorphy", *p);
  HypercomplexStructure h = build_hypercomplex(ctx.scene, p);
  QuaternionFunction F = quaternion_function(ctx.scene, p, fname);
  const double tol = ctx.tol(*p, 1e-10);
  ResidualReport j = j_hyperholo_residual(h, F, ctx.mode), k = k_hyperholo_residual(h, F, ctx.mode);
  r["function"] = fname;
  r["tolerance"] = tol;
  r["j_residual"] = residual_json(j, *p);
  r["k_residual"] = residual_json(k, *p);
  r["j_matrix_form"] = residual_json(matrix_form_residual(h.J, h.value_J, F, ctx.mode), *p);
  r["k_matrix_form"] = residual_json(matrix_form_residual(h.K, h.value_K, F, ctx.mode), *p);
  AffineFitReport fit = affine_fit(F);
  r["affine_fit"] = {{"affine_residual", fit.affine_residual},
                     {"quadratic_residual", fit.quadratic_residual},
                     {"affine", fit.affine}};
  if (k.sup <= tol && h.value_K == quaternionic_standard().T.transpose()) {
    KTranslationReport t = k_translation_consistency(h, F, tol, ctx.mode);
    r["k_translation"] = {{"u+i*zeta", residual_json(t.k_holo_u_zeta, *p)},
                          {"v+i*eta", residual_json(t.k_holo_v_eta, *p)},
                          {"holds", t.holds},
                          {"literal_holds", t.literal_holds}};
  }
  r["passed"] = j.sup <= tol && k.sup <= tol;
  return r;
}

json pattern_json(const PatternReport& pr, const Patch& p) {
  json b;
  for (const auto& [k, v] : pr.block_residuals) b[k] = v;
  json holo = json::array();
  for (const auto& h : pr.holo) holo.push_back(residual_json(h, p));
  return {{"sign", pr.sign},
          {"tolerance", pr.tolerance},
          {"block_residuals", b},
          {"coordinate_residuals", holo},
          {"min_normalized_det", pr.min_normalized_det},
          {"worst", pr.worst},
          {"worst_block", pr.worst_block},
          {"worst_node", pr.worst_node},
          {"center_matrix", complex_matrix_json(pr.center_matrix)},
          {"passes", pr.passes}};
}

json spencer_verify(const Ctx& ctx, const std::string& cname, int sign, const std::string& hname, int fit_degree) {
  PatchPtr p = ctx.patch();
  json r = header(ctx, "spencer verify", "spencer/block-pattern", *p);
  AlmostComplexStructure acs = build_structure(ctx.scene, p);
  SpencerChart ch = chart(ctx.scene, p, cname);
  const double tol = ctx.tol(*p, 1e-8);
  PatternReport pr = verify_chart(acs, ch, sign, ctx.mode, tol);
  RankReport rk = independence_rank(ch, ctx.mode);
  r["chart"] = cname;
  r["m"] = ch.m;
  r["pattern"] = pattern_json(pr, *p);
  r["rank"] = {{"min_rank", rk.min_rank}, {"worst_node", rk.worst_node}, {"min_singular", rk.min_singular}};
  bool passed = pr.passes && rk.min_rank == ch.m;
  if (!hname.empty()) {
    ComplexField h = complex_function(ctx.scene, p, hname);
    ResidualReport s = superposition_check(acs, ch, h, ctx.mode, tol);
    r["superposition"] = residual_json(s, *p);
    passed = passed && s.sup <= tol;
    if (fit_degree >= 0) {
      SuperpositionFit fit = superposition_fit(ch, h, fit_degree);
      json terms = json::array();
      for (std::size_t t = 0; t < fit.exponents.size(); ++t)
        terms.push_back({{"exponents", fit.exponents[t]}, {"coefficient", {fit.coefficients[t].real(), fit.coefficients[t].imag()}}});
      r["superposition_fit"] = {{"degree", fit_degree}, {"residual", fit.residual}, {"terms", terms}};
    }
  }
  r["passed"] = passed;
  return r;
}

json spencer_transition(const Ctx& ctx, const std::string& from, const std::string& to, const std::vector<std::string>& map) {
  PatchPtr p = ctx.patch();
  json r = header(ctx, "spencer transition", "spencer/transition", *p);
  AlmostComplexStructure acs = build_structure(ctx.scene, p);
  SpencerChart a = chart(ctx.scene, p, from), b = chart(ctx.scene, p, to);
  if (map.size() != 2 * static_cast<std::size_t>(a.m))
    throw CLI::ValidationError("--map", "expected " + std::to_string(2 * a.m) + " expressions (re, im per component)");
  std::vector<ComplexExpr> H;
  for (std::size_t k = 0; k < map.size(); k += 2)
    H.push_back({parse_expr(map[k], 2 * a.m), parse_expr(map[k + 1], 2 * a.m)});
  const double tol = ctx.tol(*p, 1e-10);
  ResidualReport rep = transition_holomorphy_check(acs, a, b, H, ctx.mode);
  r["from"] = from;
  r["to"] = to;
  r["map"] = map;
  r["tolerance"] = tol;
  r["residual"] = residual_json(rep, *p);
  r["passed"] = rep.sup <= tol;
  return r;
}

struct ConvergenceArgs {
  std::string check, f, u, chart, F, bc, oracle;
  int levels = 3;
  std::optional<double> min_order;
};

json convergence(const Ctx& ctx, const ConvergenceArgs& a) {
  PatchPtr base = ctx.patch();
  json r = header(ctx, "convergence", "convergence/" + a.check, *base);
  r["mode"] = "fd";
  if (a.levels < 2) throw CLI::ValidationError("--levels", "need at least two levels");
  auto need = [](const std::string& v, const char* flag) {
    if (v.empty()) throw CLI::ValidationError(flag, std::string("required for this check"));
  };
  std::function<double(const PatchPtr&)> metric;
  const ModeRequest fd = ModeRequest::FiniteDifference;
  const Scene& s = ctx.scene;
  if (a.check == "holo") {
    need(a.f, "--f");
    metric = [&](const PatchPtr& p) { return holo_residual(build_structure(s, p), complex_function(s, p, a.f), fd).sup; };
  } else if (a.check == "pluri") {
    need(a.u, "--u");
    metric = [&](const PatchPtr& p) {
      return potential_closedness_residual(build_structure(s, p), real_function(s, p, a.u), fd).sup;
    };
  } else if (a.check == "theorem") {
    need(a.u, "--u");
    metric = [&](const PatchPtr& p) { return theorem_check(build_structure(s, p), real_function(s, p, a.u), fd).delta.sup; };
  } else if (a.check == "spencer") {
    need(a.chart, "--chart");
    metric = [&](const PatchPtr& p) { return verify_chart(build_structure(s, p), chart(s, p, a.chart), 1, fd, 1.0).worst; };
  } else if (a.check == "hyper") {
    need(a.F, "--F");
    metric = [&](const PatchPtr& p) {
      HypercomplexStructure h = build_hypercomplex(s, p);
      QuaternionFunction F = quaternion_function(s, p, a.F);
      return std::max(j_hyperholo_residual(h, F, fd).sup, k_hyperholo_residual(h, F, fd).sup);
    };
  } else {
    std::string bc = a.bc.empty() ? s.boundary.value_or("") : a.bc;
    std::string oracle = a.oracle.empty() ? s.oracle.value_or(bc) : a.oracle;
    need(bc, "--bc");
    metric = [=, &s](const PatchPtr& p) {
      AlmostComplexStructure acs = build_structure(s, p);
      EllipticOperator op = assemble_operator(acs, fd);
      DirichletResult res = solve_dirichlet({&op, ScalarField::parse(p, bc)});
      SamplePtr u = res.solution.samples(), o = ScalarField::parse(p, oracle).samples();
      double err = 0.0;
      for (std::size_t n = 0; n < p->size(); ++n)
        if (p->is_interior(n)) err = std::max(err, std::abs((*u)[n] - (*o)[n]));
      return err;
    };
    r["oracle"] = oracle;
  }
  json levels = json::array();
  std::vector<double> errs, hs;
  Patch cur = *base;
  for (int k = 0; k < a.levels; ++k) {
    if (k > 0) cur = cur.refined(2);
    PatchPtr p = std::make_shared<const Patch>(cur);
    errs.push_back(metric(p));
    hs.push_back(p->max_spacing());
    levels.push_back({{"resolution", p->resolutions()}, {"h", hs.back()}, {"error", errs.back()}});
  }
  json orders = json::array();
  bool ok = true;
  for (std::size_t k = 0; k + 1 < errs.size(); ++k) {
    if (errs[k] > 0.0 && errs[k + 1] > 0.0) {
      const double o = std::log(errs[k] / errs[k + 1]) / std::log(hs[k] / hs[k + 1]);
      orders.push_back(o);
      if (a.min_order && o < *a.min_order) ok = false;
    } else {
      orders.push_back(nullptr);
    }
  }
  r["levels"] = levels;
  r["orders"] = orders;
  if (a.min_order) r["min_order"] = *a.min_order;
  r["passed"] = ok;
  return r;
}

std::string timestamp() {
  const std::time_t t = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
  std::tm tm{};
  gmtime_r(&t, &tm);
  std::ostringstream os;
  os << std::put_time(&tm, "%Y-%m-%dT%H:%M:%SZ");
  return os.str();
}

void add_common(CLI::App* sub, Common& c) {
  sub->add_option("scene", c.scene, "Scene file (JSON, schema 1)")->required();
  sub->add_option("--grid", c.grid, "Points per axis (overrides the scene)")->check(CLI::Range(3, 100000));
  sub->add_option("--tol", c.tol, "Tolerance for pass/fail");
  sub->add_option("--mode", c.mode, "Differentiation mode")->check(CLI::IsMember({"exact", "fd", "auto"}));
  sub->add_option("--seed", c.seed, "Seed for randomized checks");
  sub->add_option("-o,--out", c.out, "Write the report (from-pq: the generated scene) to this file");
  sub->add_flag("--no-meta", c.no_meta, "Omit the timestamped meta block");
}

}  // namespace

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Numerical checks for almost-complex and hypercomplex structures"};
  app.name("spencerctl");
  app.set_version_flag("--version", kVersion);
  app.require_subcommand(1);
  Common c;
  std::function<json(const Ctx&)> action;
  bool report_to_stdout_only = false;

  // acs
  CLI::App* acs = app.add_subcommand("acs", "Structure validation and (P,Q) moduli")->require_subcommand(1);
  bool nij = false;
  std::size_t samples = 10000;
  CLI::App* acs_check_cmd = acs->add_subcommand("check", "Validity, ellipticity certificate, optional Nijenhuis tensor");
  add_common(acs_check_cmd, c);
  acs_check_cmd->add_flag("--nijenhuis", nij, "Also report the Nijenhuis tensor");
  acs_check_cmd->add_option("--samples", samples, "Ellipticity samples");
  acs_check_cmd->callback([&] { action = [&](const Ctx& x) { return acs_check(x, nij, samples); }; });
  CLI::App* from_pq = acs->add_subcommand("from-pq", "Write a matrix scene from a (P,Q) scene");
  add_common(from_pq, c);
  from_pq->callback([&] {
    report_to_stdout_only = true;
    action = [&](const Ctx& x) { return acs_from_pq(x); };
  });
  long base_node = -1;
  CLI::App* extract = acs->add_subcommand("extract-pq", "Normalize at a base node, extract (P,Q), round trip");
  add_common(extract, c);
  extract->add_option("--base-node", base_node, "Base node index (default: patch centre)");
  extract->callback([&] { action = [&](const Ctx& x) { return acs_extract_pq(x, base_node); }; });

  // holo
  CLI::App* holo = app.add_subcommand("holo", "Almost-holomorphy residuals")->require_subcommand(1);
  std::string fname;
  bool anti = false;
  CLI::App* holo_res = holo->add_subcommand("residual", "J*df = i df residual");
  add_common(holo_res, c);
  holo_res->add_option("--f", fname, "Function name")->required();
  holo_res->add_flag("--anti", anti, "Check J*df = -i df instead");
  holo_res->callback([&] { action = [&](const Ctx& x) { return holo_residual_cmd(x, fname, anti); }; });
  CLI::App* holo_red = holo->add_subcommand("reduced", "Reduced system and its equivalence bound");
  add_common(holo_red, c);
  holo_red->add_option("--f", fname, "Function name")->required();
  holo_red->callback([&] { action = [&](const Ctx& x) { return holo_reduced_cmd(x, fname); }; });

  // pluri
  CLI::App* pluri = app.add_subcommand("pluri", "Almost-pluriharmonic functions")->require_subcommand(1);
  std::string uname;
  CLI::App* pluri_chk = pluri->add_subcommand("check", "Closedness of J*du and Delta_J u");
  add_common(pluri_chk, c);
  pluri_chk->add_option("--u", uname, "Real function name")->required();
  pluri_chk->callback([&] { action = [&](const Ctx& x) { return pluri_check(x, uname); }; });

  // elliptic
  CLI::App* ell = app.add_subcommand("elliptic", "The operator Delta_J")->require_subcommand(1);
  EllipticArgs ea;
  CLI::App* solve = ell->add_subcommand("solve", "Dirichlet problem Delta_J u = 0");
  add_common(solve, c);
  solve->add_option("--bc", ea.bc, "Boundary data expression");
  solve->add_option("--oracle", ea.oracle, "Exact solution for the error report");
  solve->add_option("--csv", ea.csv, "Write the solution grid as CSV");
  solve->add_option("--solver", ea.solver, "Linear solver")->check(CLI::IsMember({"auto", "direct", "iterative"}));
  solve->add_option("--solver-tol", ea.solver_tol, "Relative residual target for the linear solver");
  solve->callback([&] { action = [&](const Ctx& x) { return elliptic_solve(x, ea); }; });

  // bracket
  CLI::App* br = app.add_subcommand("bracket", "Twisted bracket [X,Y]_J")->require_subcommand(1);
  std::string xn, yn, which = "10-10";
  bool project = false;
  CLI::App* br_chk = br->add_subcommand("check", "Bracket law on eigenfields");
  add_common(br_chk, c);
  br_chk->add_option("--X", xn, "Vector field name")->required();
  br_chk->add_option("--Y", yn, "Vector field name")->required();
  br_chk->add_option("--u", uname, "Test function name")->required();
  br_chk->add_option("--case", which, "Eigenspaces of X and Y")->check(CLI::IsMember({"10-10", "01-01", "10-01", "01-10"}));
  br_chk->add_flag("--project", project, "Project X and Y onto the declared eigenspaces first");
  br_chk->callback([&] { action = [&](const Ctx& x) { return bracket_check(x, xn, yn, uname, which, project); }; });

  // hyper
  CLI::App* hy = app.add_subcommand("hyper", "Hyperholomorphy for a hypercomplex pair")->require_subcommand(1);
  std::string Fname;
  CLI::App* hy_chk = hy->add_subcommand("check", "J- and K-hyperholomorphy residuals");
  add_common(hy_chk, c);
  hy_chk->add_option("--F", Fname, "Quaternion function name")->required();
  hy_chk->callback([&] { action = [&](const Ctx& x) { return hyper_check(x, Fname); }; });

  // spencer
  CLI::App* sp = app.add_subcommand("spencer", "Spencer chart verification")->require_subcommand(1);
  std::string cname, hname, from, to;
  int sign = 1, fit_degree = -1;
  std::vector<std::string> map;
  CLI::App* verify = sp->add_subcommand("verify", "Block pattern, rank and superposition");
  add_common(verify, c);
  verify->add_option("--chart", cname, "Chart name")->required();
  verify->add_option("--sign", sign, "+1 holomorphic coordinates, -1 antiholomorphic")->check(CLI::IsMember({-1, 1}));
  verify->add_option("--superpose", hname, "Function h for the superposition check");
  verify->add_option("--fit-degree", fit_degree, "Also fit h = H(w) with a polynomial of this degree");
  verify->callback([&] { action = [&](const Ctx& x) { return spencer_verify(x, cname, sign, hname, fit_degree); }; });
  CLI::App* trans = sp->add_subcommand("transition", "Holomorphy of a transition map between charts");
  add_common(trans, c);
  trans->add_option("--from", from, "Chart name")->required();
  trans->add_option("--to", to, "Chart name")->required();
  trans->add_option("--map", map, "Re and Im of each component of H, in variables x1..x2m")->required();
  trans->callback([&] { action = [&](const Ctx& x) { return spencer_transition(x, from, to, map); }; });

  // convergence
  ConvergenceArgs ca;
  CLI::App* conv = app.add_subcommand("convergence", "Rerun a check at h, h/2, h/4 in FD mode and report orders");
  add_common(conv, c);
  conv->add_option("--check", ca.check, "Check to rerun")
      ->required()
      ->check(CLI::IsMember({"holo", "pluri", "theorem", "spencer", "hyper", "elliptic"}));
  conv->add_option("--f", ca.f, "Complex function (holo)");
  conv->add_option("--u", ca.u, "Real function (pluri, theorem)");
  conv->add_option("--chart", ca.chart, "Chart (spencer)");
  conv->add_option("--F", ca.F, "Quaternion function (hyper)");
  conv->add_option("--bc", ca.bc, "Boundary data (elliptic)");
  conv->add_option("--oracle", ca.oracle, "Exact solution (elliptic; defaults to the boundary expression)");
  conv->add_option("--levels", ca.levels, "Number of grids");
  conv->add_option("--min-order", ca.min_order, "Fail when an observed order is below this");
  conv->callback([&] { action = [&](const Ctx& x) { return convergence(x, ca); }; });

  try {
    std::vector<std::string> rev(args.rbegin(), args.rend());
    app.parse(rev);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e, out, err);
    return code == 0 ? 0 : 2;
  }

  try {
    Ctx ctx;
    ctx.c = c;
    ctx.scene = load_scene(c.scene);
    const std::string mode = !c.mode.empty() ? c.mode : ctx.scene.mode.value_or("auto");
    ctx.mode = parse_mode(mode);
    json report = action(ctx);
    if (!c.no_meta) report["meta"] = {{"tool", "spencerctl"}, {"version", kVersion}, {"generated", timestamp()}};
    const std::string text = report.dump(2) + "\n";
    if (!c.out.empty() && !report_to_stdout_only) {
      std::ofstream f(c.out);
      if (!f) throw SceneError("", "cannot write '" + c.out + "'");
      f << text;
    } else {
      out << text;
    }
    return report.value("passed", false) ? 0 : 1;
  } catch (const CLI::ValidationError& e) {
    err << "spencerctl: " << e.what() << "\n";
    return 2;
  } catch (const std::exception& e) {
    err << "spencerctl: " << e.what() << "\n";
    return 2;
  }
}

}  // namespace spencerctl
