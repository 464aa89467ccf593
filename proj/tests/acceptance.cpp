// Acceptance run: one PASS/FAIL line per criterion. `acceptance N` runs only
// criterion N. Exit status is 0 when every selected criterion passes.
#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <iostream>
#include <random>
#include <sstream>
#include <string>

#include "fixtures.hpp"
#include "spencer/brackets.hpp"
#include "spencer/elliptic.hpp"
#include "spencer/holomorphy.hpp"
#include "spencer/hypercomplex.hpp"
#include "spencer/spencer.hpp"

using namespace spencer;
using fixtures::cube;

namespace {

struct Outcome {
  bool pass = true;
  std::string detail;
};

class Clock {
 public:
  double seconds() const {
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - start_).count();
  }

 private:
  std::chrono::steady_clock::time_point start_ = std::chrono::steady_clock::now();
};

std::string g(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.3g", v);
  return buf;
}

double max_diff(const MatrixField& a, const MatrixField& b) {
  MatrixSamples sa = a.sample(), sb = b.sample();
  double m = 0;
  for (std::size_t n = 0; n < sa.nodes(); ++n)
    m = std::max(m, (Eigen::MatrixXd(sa.at(n)) - Eigen::MatrixXd(sb.at(n))).cwiseAbs().maxCoeff());
  return m;
}

double interior_sup(const ScalarField& a, const ScalarField& b) {
  const auto& x = *a.samples();
  const auto& y = *b.samples();
  double m = 0;
  for (std::size_t n = 0; n < x.size(); ++n)
    if (a.patch().is_interior(n)) m = std::max(m, std::abs(x[n] - y[n]));
  return m;
}

double interior_sup(const ComplexField& a, const ComplexField& b) {
  auto x = complex_samples(a), y = complex_samples(b);
  double m = 0;
  for (std::size_t n = 0; n < x.size(); ++n)
    if (a.patch().is_interior(n)) m = std::max(m, std::abs(x[n] - y[n]));
  return m;
}

ComplexField cf(const PatchPtr& p, const char* re, const char* im) { return ComplexField::parse(p, re, im); }

/// Patch sizes that keep the 2n-dimensional grids small.
int res_for(int n) { return n == 1 ? 9 : n == 2 ? 5 : 3; }

/// Random (P,Q) with P(0) = 0 and Q(0) = -E, so j_cot(0) is the normal form.
PQPair normalized_pq(std::mt19937& rng, const PatchPtr& p, int n) {
  PQPair r = fixtures::random_pq(rng, p, n);
  const std::vector<double> o(static_cast<std::size_t>(p->dim()), 0.0);
  MatrixField P = r.P + (-1.0) * MatrixField::constant(p, r.P.value_at(o));
  MatrixField Q = r.Q + (-1.0) * MatrixField::constant(p, r.Q.value_at(o)) + (-1.0) * MatrixField::identity(p, n);
  return make_pq(P, Q);
}

/// j_cot = [[x2, x2^2+1], [-1, -x2]].
AlmostComplexStructure poly_fixture(const PatchPtr& p, bool transposed = false) {
  MatrixField j = MatrixField::parse(p, {{"x2", "x2^2 + 1"}, {"-1", "-x2"}});
  return validate_acs(transposed ? j.transpose() : j);
}

AlmostComplexStructure diagonal_fixture(const PatchPtr& p) {
  return validate_acs(
      MatrixField::parse(p, {{"0", "1.2 + 0.3*sin(x1 + 2*x2)"}, {"-1/(1.2 + 0.3*sin(x1 + 2*x2))", "0"}}));
}

/// Every named fixture structure, on small patches.
std::vector<std::pair<std::string, AlmostComplexStructure>> fixture_structures() {
  auto p2 = cube(1, -0.5, 0.5, 5);
  auto p4 = cube(2, -0.4, 0.4, 5);
  auto h = conjugated_hypercomplex(
      p4, (Eigen::Matrix4d() << 2, 0.1, 0, 0.3, 0, 1, 0.2, 0, 0.5, 0, 1, 0, 0, 0.4, 0, 1.5).finished());
  return {{"standard R^2", standard_structure(p2)},
          {"polynomial", poly_fixture(p2)},
          {"polynomial transposed", poly_fixture(p2, true)},
          {"diagonal", diagonal_fixture(p2)},
          {"pullback R^2", pullback_structure(p2, fixtures::phi2())},
          {"standard R^4", standard_structure(p4)},
          {"normal form R^4", normal_form_structure(p4)},
          {"type-1 f=w", validate_acs(fixtures::type1_w(p4))},
          {"type-1 f=conj(w)", validate_acs(fixtures::type1_wbar(p4))},
          {"pullback R^4", pullback_structure(p4, fixtures::phi4())},
          {"conjugated hypercomplex J", h.J},
          {"conjugated hypercomplex K", h.K},
          {"twistor (0.6,0,0.8)", twistor_structure(h, 0.6, 0.0, 0.8)}};
}

// ---------------------------------------------------------------------------

Outcome criterion1() {
  Clock clock;
  std::mt19937 rng(101);
  double worst = 0.0;
  int count = 0;
  for (int t = 0; t < 200; ++t) {
    const int n = 1 + t % 3;
    auto p = cube(n, -0.5, 0.5, res_for(n));
    auto acs = reconstruct_from_pq(fixtures::random_pq(rng, p, n));
    worst = std::max(worst, acs.acs_residual);
    ++count;
  }
  const double secs = clock.seconds();
  return {worst <= 1e-10 && secs < 30.0,
          std::to_string(count) + " pairs, n in {1,2,3}, max acs_residual " + g(worst) + ", " + g(secs) + " s"};
}

Outcome criterion2() {
  std::mt19937 rng(202);
  double ids = 0.0, rt = 0.0, pq_rt = 0.0;
  int count = 0;
  for (int t = 0; t < 30; ++t) {
    const int n = 1 + t % 3;
    auto p = cube(n, -0.3, 0.3, res_for(n));
    // Arbitrary pair: identities and the rule inversion on the normalized field.
    auto acs = reconstruct_from_pq(fixtures::random_pq(rng, p, n));
    auto bd = normalize_at_origin(acs, p->center_node());
    ids = std::max(ids, block_identities_residual(bd, acs).max());
    rt = std::max(rt, max_diff(reconstruct_from_pq(extract_pq(bd)).j_cot, bd.normalized));
    // Normalized pair: extract o normalize o reconstruct returns (P,Q) itself.
    auto pq = normalized_pq(rng, p, n);
    auto acs2 = reconstruct_from_pq(pq);
    auto bd2 = normalize_at_origin(acs2, p->center_node());
    ids = std::max(ids, block_identities_residual(bd2, acs2).max());
    auto back = extract_pq(bd2);
    pq_rt = std::max({pq_rt, max_diff(back.P, pq.P), max_diff(back.Q, pq.Q)});
    count += 2;
  }
  auto p1 = cube(1, -0.4, 0.4, 9);
  auto acs = validate_acs(MatrixField::parse(p1, {{"x2", "x2^2 + 1"}, {"-1", "-x2"}}));
  auto bd = normalize_at_origin(acs, p1->center_node());
  ids = std::max(ids, block_identities_residual(bd, acs).max());
  rt = std::max(rt, max_diff(reconstruct_from_pq(extract_pq(bd)).j_cot, bd.normalized));
  ++count;
  return {ids <= 1e-10 && rt <= 1e-10 && pq_rt <= 1e-10,
          std::to_string(count) + " decompositions, identities " + g(ids) + ", j round trip " + g(rt) +
              ", (P,Q) round trip " + g(pq_rt)};
}

Outcome criterion3() {
  std::mt19937 rng(303);
  double block = 0.0;
  bool bound = true;
  for (int t = 0; t < 100; ++t) {
    const int n = 1 + t % 3;
    auto p = cube(n, -0.3, 0.3, res_for(n));
    auto acs = reconstruct_from_pq(normalized_pq(rng, p, n));
    auto bd = normalize_at_origin(acs, p->center_node());
    auto pq = extract_pq(bd);
    ComplexField f(ScalarField(p, fixtures::random_poly(rng, 2 * n, 2, 1.0)),
                   ScalarField(p, fixtures::random_poly(rng, 2 * n, 2, 1.0)));
    auto rep = reduction_equivalence_check(acs, bd, pq, f);
    block = std::max(block, rep.block_identity);
    bound = bound && rep.bound_holds;
  }
  // Functions with vanishing reduced residual: holomorphic functions of
  // pullback structures, and a linear holomorphic function of a constant one.
  double reduced = 0.0, full = 0.0;
  int fns = 0;
  auto check = [&](const AlmostComplexStructure& acs, const ComplexField& f) {
    auto bd = normalize_at_origin(acs, acs.patch().center_node());
    auto rep = reduction_equivalence_check(acs, bd, extract_pq(bd), f);
    reduced = std::max(reduced, rep.reduced.sup);
    full = std::max(full, rep.full.sup);
    ++fns;
  };
  auto p2 = cube(1, -0.4, 0.4, 9);
  auto phi2 = fixtures::phi2();
  ComplexField z2(ScalarField(p2, phi2[0]), ScalarField(p2, phi2[1]));
  auto pb2 = pullback_structure(p2, phi2);
  for (const auto& f : {z2, z2 * z2, z2 * z2 * z2}) check(pb2, f);
  auto p4 = cube(2, -0.3, 0.3, 5);
  auto phi4 = fixtures::phi4();
  ComplexField z(ScalarField(p4, phi4[0]), ScalarField(p4, phi4[1])), w(ScalarField(p4, phi4[2]), ScalarField(p4, phi4[3]));
  auto pb4 = pullback_structure(p4, phi4);
  for (const auto& f : {z, w, z * w, w * w}) check(pb4, f);
  auto pqc = make_pq(MatrixField::constant(p4, (Eigen::MatrixXd(2, 2) << 0.3, -0.2, 0.1, 0.4).finished()),
                     MatrixField::constant(p4, (Eigen::MatrixXd(2, 2) << -1.1, 0.2, 0.3, -0.9).finished()));
  auto ac = reconstruct_from_pq(pqc);
  Eigen::MatrixXd j = ac.j_cot.value_at(std::vector<double>(4, 0.0));
  Eigen::ComplexEigenSolver<Eigen::MatrixXcd> es(j.cast<cplx>());
  int k = 0;
  while (std::abs(es.eigenvalues()[k] - cplx(0, 1)) > 1e-9) ++k;
  Eigen::VectorXcd c = es.eigenvectors().col(k);
  Expr re = Expr::constant(0.0), im = Expr::constant(0.0);
  for (int a = 0; a < 4; ++a) {
    re = re + Expr::constant(c[a].real()) * Expr::var(a);
    im = im + Expr::constant(c[a].imag()) * Expr::var(a);
  }
  check(ac, ComplexField(ScalarField(p4, re), ScalarField(p4, im)));
  return {block <= 1e-10 && bound && reduced <= 1e-10 && full <= 1e-8,
          "100 fixtures, block identity " + g(block) + (bound ? ", bound holds" : ", bound VIOLATED") + "; " +
              std::to_string(fns) + " functions with reduced " + g(reduced) + " have full " + g(full)};
}

Outcome criterion4() {
  bool a_ok = true, b_ok = true, stencil_ok = true;
  for (int n = 1; n <= 3; ++n) {
    auto p = cube(n, -0.7, 1.3, n == 1 ? 9 : n == 2 ? 5 : 4);
    auto op = assemble_operator(standard_structure(p));
    const int d = 2 * n;
    for (int s = 0; s < d; ++s) {
      b_ok = b_ok && op.B[static_cast<std::size_t>(s)].is_zero();
      for (int q = 0; q < d; ++q) a_ok = a_ok && op.A(s, q).is_expr() && op.A(s, q).expr().is_const(s == q ? 2.0 : 0.0);
    }
    // Independent (2d+1)-point Laplacian.
    Eigen::SparseMatrix<double, Eigen::RowMajor> lap(static_cast<Eigen::Index>(p->size()),
                                                     static_cast<Eigen::Index>(p->size()));
    std::vector<Eigen::Triplet<double>> t;
    for (std::size_t node = 0; node < p->size(); ++node) {
      if (!p->is_interior(node)) continue;
      double center = 0;
      for (int a = 0; a < d; ++a) {
        const double c = 1.0 / (p->spacing(a) * p->spacing(a));
        t.emplace_back(node, node + p->stride(a), c);
        t.emplace_back(node, node - p->stride(a), c);
        center += -2.0 * c;
      }
      t.emplace_back(node, node, center);
    }
    lap.setFromTriplets(t.begin(), t.end());
    Eigen::MatrixXd a = Eigen::MatrixXd(op.stencil), b = Eigen::MatrixXd(lap);
    stencil_ok = stencil_ok && lap.nonZeros() == op.stencil.nonZeros() && (a.array() == 2.0 * b.array()).all();
  }
  // B = 0 for constant structures.
  std::mt19937 rng(404);
  for (int n = 1; n <= 2; ++n) {
    auto p = cube(n, -1, 1, 5);
    for (int t = 0; t < 5; ++t) {
      Eigen::MatrixXd j = reconstruct_from_pq(fixtures::random_pq(rng, p, n)).j_cot.value_at(
          std::vector<double>(static_cast<std::size_t>(2 * n), 0.0));
      auto op = assemble_operator(validate_acs(MatrixField::constant(p, j)));
      for (const auto& b : op.B) b_ok = b_ok && b.is_zero();
    }
  }
  return {a_ok && b_ok && stencil_ok, std::string("A = 2E ") + (a_ok ? "exact" : "FAILED") + ", B = 0 " +
                                          (b_ok ? "exact" : "FAILED") + ", stencil = 2 x Laplacian " +
                                          (stencil_ok ? "bit for bit" : "DIFFERS")};
}

Outcome criterion5() {
  double worst = 1e300;
  std::string where;
  int count = 0;
  auto run = [&](const std::string& name, const AlmostComplexStructure& acs) {
    auto r = ellipticity_certificate(assemble_operator(acs), 10000, 505);
    if (r.min_quadratic < worst) {
      worst = r.min_quadratic;
      where = name;
    }
    ++count;
  };
  for (const auto& [name, acs] : fixture_structures()) run(name, acs);
  std::mt19937 rng(505);
  for (int t = 0; t < 6; ++t) {
    const int n = 1 + t % 3;
    auto p = cube(n, -0.5, 0.5, res_for(n));
    run("random (P,Q)", reconstruct_from_pq(fixtures::random_pq(rng, p, n)));
  }
  return {worst >= 1.0 - 1e-10,
          std::to_string(count) + " structures x 10^4 samples, min xi^T A xi " + g(worst) + " (" + where + ")"};
}

Outcome criterion6() {
  std::mt19937 rng(606);
  double contraction = 0.0;
  for (int t = 0; t < 100; ++t) {
    const int n = 1 + t % 2;
    auto p = cube(n, -0.3, 0.3, 5);
    auto acs = reconstruct_from_pq(fixtures::random_pq(rng, p, n));
    ScalarField u(p, fixtures::random_poly(rng, 2 * n, 2, 1.0) * fixtures::random_poly(rng, 2 * n, 1, 1.0));
    contraction = std::max(contraction, contraction_identity_residual(acs, u).sup);
  }
  // Pullback oracle: u = h o phi with h harmonic.
  auto pluri = [](const PatchPtr& p, const std::vector<Expr>& phi) {
    return theorem_check(pullback_structure(p, phi), ScalarField(p, fixtures::harmonic_of(phi)));
  };
  const double exact = std::max(pluri(cube(1, -0.5, 0.5, 9), fixtures::phi2()).delta.sup,
                                pluri(cube(2, -0.3, 0.3, 5), fixtures::phi4()).delta.sup);
  std::vector<double> err;
  for (int res : {9, 17, 33}) {
    auto p = cube(1, -0.5, 0.5, res);
    err.push_back(theorem_check(pullback_structure(p, fixtures::phi2()), ScalarField(p, fixtures::harmonic_of(fixtures::phi2())),
                                ModeRequest::FiniteDifference)
                      .delta.sup);
  }
  std::vector<double> err4;
  for (int res : {5, 9, 17}) {
    auto p = cube(2, -0.3, 0.3, res);
    err4.push_back(theorem_check(pullback_structure(p, fixtures::phi4()), ScalarField(p, fixtures::harmonic_of(fixtures::phi4())),
                                 ModeRequest::FiniteDifference)
                       .delta.sup);
  }
  bool orders = true;
  std::string ord;
  for (const auto* e : {&err, &err4})
    for (std::size_t k = 0; k + 1 < e->size(); ++k) {
      const double o = std::log2((*e)[k] / (*e)[k + 1]);
      orders = orders && o >= 1.5 && o <= 2.5;
      ord += (ord.empty() ? "" : ", ") + g(o);
    }
  return {contraction <= 1e-10 && exact <= 1e-10 && orders,
          "contraction identity " + g(contraction) + " on 100 fixtures; pullback |Delta_J u| exact " + g(exact) +
              "; FD orders " + ord};
}

/// Max interior error of the Dirichlet solve on the standard structure.
std::vector<double> dirichlet_errors(const char* harmonic, double& secs) {
  Clock clock;
  std::vector<double> err;
  for (int res : {17, 33, 65}) {
    auto p = cube(1, 0, 1, res);
    auto exact = ScalarField::parse(p, harmonic);
    auto op = assemble_operator(standard_structure(p));
    auto r = solve_dirichlet(DirichletProblem{&op, exact, 1e-12});
    err.push_back(r.converged ? interior_sup(r.solution, exact) : 1e300);
  }
  secs = clock.seconds();
  return err;
}

std::pair<bool, std::string> ratios_in_band(const std::vector<double>& err) {
  bool ok = true;
  std::string s = "errors";
  for (double e : err) s += " " + g(e);
  s += ", ratios";
  for (std::size_t k = 0; k + 1 < err.size(); ++k) {
    const double r = err[k + 1] > 0 ? err[k] / err[k + 1] : NAN;
    ok = ok && r >= 3.0 && r <= 5.0;
    s += " " + g(r);
  }
  return {ok, s};
}

/// Maximum principle on the monotone fixtures.
std::pair<bool, std::string> maximum_principle() {
  const double tol = 1e-8;
  double excess = -1e300;
  int solves = 0;
  for (int res : {17, 33}) {
    auto p = cube(1, -1, 1, res);
    for (const auto& acs : {standard_structure(p), diagonal_fixture(p)}) {
      auto op = assemble_operator(acs);
      for (const char* bc : {"x1^2 - x2 + sin(3*x2)", "exp(x1*x2) - cos(2*x1)", "x1^3 - 3*x1*x2^2"}) {
        auto r = solve_dirichlet(DirichletProblem{&op, ScalarField::parse(p, bc), tol});
        if (!r.monotone) return {false, "non-monotone stencil on a monotone fixture"};
        excess = std::max({excess, r.interior_max - r.boundary_max, r.boundary_min - r.interior_min});
        ++solves;
      }
    }
  }
  return {excess <= 10 * tol, "max principle on " + std::to_string(solves) + " solves, excess " + g(excess)};
}

Outcome criterion7() {
  double secs = 0.0;
  auto [ok, text] = ratios_in_band(dirichlet_errors("x1^3 - 3*x1*x2^2", secs));
  auto [mp, mp_text] = maximum_principle();
  return {ok && mp && secs < 60.0, "Re(z^3): " + text + "; " + mp_text + ", " + g(secs) + " s"};
}

Outcome criterion7_supplement() {
  double secs = 0.0;
  auto [ok, text] = ratios_in_band(dirichlet_errors("exp(x1)*cos(x2)", secs));
  return {ok, "exp(x1)cos(x2): " + text + ", " + g(secs) + " s"};
}

Outcome criterion8() {
  // The printed matrices.
  Eigen::Matrix4d S, T;
  S << 0, 1, 0, 0, -1, 0, 0, 0, 0, 0, 0, -1, 0, 0, 1, 0;
  T << 0, 0, 1, 0, 0, 0, 0, 1, -1, 0, 0, 0, 0, -1, 0, 0;
  auto st = quaternionic_standard();
  const Eigen::Matrix4d E = Eigen::Matrix4d::Identity();
  const bool printed = st.S == S && st.T == T;
  const bool algebra = (st.S * st.S + E).isZero(0) && (st.T * st.T + E).isZero(0) &&
                       ((st.S * st.T) * (st.S * st.T) + E).isZero(0) && (st.S * st.T + st.T * st.S).isZero(0);
  auto h = flat_hypercomplex(cube(2, -1, 1, 3));
  std::mt19937 rng(808);
  std::normal_distribution<double> gauss;
  double worst = 0.0;
  for (int t = 0; t < 100; ++t) {
    double b = gauss(rng), c = gauss(rng), d = gauss(rng);
    const double r = std::sqrt(b * b + c * c + d * d);
    worst = std::max(worst, twistor_structure(h, b / r, c / r, d / r).acs_residual);
  }
  return {printed && algebra && worst <= 1e-12, std::string("S, T ") + (printed ? "match" : "DIFFER") +
                                                    ", quaternion relations " + (algebra ? "exact" : "FAIL") +
                                                    ", 100 twistor points max residual " + g(worst)};
}

Outcome criterion9() {
  auto p = cube(2, -1, 1, 5);
  auto h = flat_hypercomplex(p);
  auto q = QuaternionFunction::coordinate(p);
  std::mt19937 rng(909);
  std::uniform_real_distribution<double> u(-1.5, 1.5);
  double good = std::max(j_hyperholo_residual(h, q).sup, k_hyperholo_residual(h, q).sup);
  for (int t = 0; t < 20; ++t) {
    Eigen::Quaterniond a(u(rng), u(rng), u(rng), u(rng)), b(u(rng), u(rng), u(rng), u(rng));
    auto F = QuaternionFunction::constant(p, a) * q + QuaternionFunction::constant(p, b);
    good = std::max({good, j_hyperholo_residual(h, F).sup, k_hyperholo_residual(h, F).sup});
  }
  double bad = 1e300;
  for (const auto& F : {q.conj(), q * q})
    bad = std::min({bad, j_hyperholo_residual(h, F).sup, k_hyperholo_residual(h, F).sup});
  return {good <= 1e-10 && bad > 0.1,
          "identity + 20 affine maps max residual " + g(good) + "; conj(q), q^2 min residual " + g(bad)};
}

Outcome criterion10() {
  auto p = cube(2, 0.5, 1.5, 5);
  auto acs = validate_acs(fixtures::type1_w(p));
  auto z = cf(p, "x1", "x2"), w = cf(p, "x3", "x4");
  SpencerChart one({z}, {w}), two({z, w}, {});
  auto r1 = verify_chart(acs, one);
  auto r2 = verify_chart(acs, two);
  const bool pattern = r1.passes && r1.worst <= 1e-8 && !r2.passes && r2.worst > 0.1;

  auto h = cf(p, "x1^2 - x2^2", "2*x1*x2");
  auto sup = superposition_check(acs, one, h);
  auto fit = superposition_fit(one, h, 2);
  double coeff = 0.0;
  for (std::size_t t = 0; t < fit.coefficients.size(); ++t)
    coeff = std::max(coeff, std::abs(fit.coefficients[t] - (fit.exponents[t][0] == 2 ? cplx(1.0) : cplx(0.0))));
  const bool superposed = sup.sup <= 1e-10 && coeff <= 1e-10;

  // 50 random eigenfield pairs across the fixtures, each in all four cases.
  std::mt19937 rng(1010);
  auto fixtures_list = fixture_structures();
  double law = 0.0;
  int pairs = 0;
  while (pairs < 50) {
    for (const auto& [name, s] : fixtures_list) {
      if (pairs == 50) break;
      const auto& pp = s.patch_ptr();
      auto vf = [&] {
        std::vector<ComplexField> c;
        for (int k = 0; k < pp->dim(); ++k)
          c.emplace_back(ScalarField(pp, fixtures::random_poly(rng, pp->dim(), 1, 1.0)),
                         ScalarField(pp, fixtures::random_poly(rng, pp->dim(), 1, 1.0)));
        return VectorFieldC(std::move(c));
      };
      auto [x10, x01] = splitting_projections(s, vf());
      auto [y10, y01] = splitting_projections(s, vf());
      ComplexField u(ScalarField(pp, fixtures::random_poly(rng, pp->dim(), 2, 1.0)),
                     ScalarField(pp, fixtures::random_poly(rng, pp->dim(), 2, 1.0)));
      for (auto [X, Y, c] : {std::tuple{&x10, &y10, BracketCase::Both10}, std::tuple{&x01, &y01, BracketCase::Both01},
                             std::tuple{&x10, &y01, BracketCase::Mixed10_01}, std::tuple{&x01, &y10, BracketCase::Mixed01_10}})
        law = std::max(law, bracket_law_check(s, *X, *Y, u, c, ModeRequest::Auto, 1e-12).law.sup);
      ++pairs;
    }
  }
  return {pattern && superposed && law <= 1e-10,
          "m=1 pattern " + g(r1.worst) + ", m=2 claim " + g(r2.worst) + "; superposition " + g(sup.sup) +
              ", H(w)=w^2 coefficient error " + g(coeff) + "; bracket laws on " + std::to_string(pairs) +
              " pairs x 4 cases " + g(law)};
}

Outcome criterion11() {
  std::mt19937 rng(1111);
  double worst = 0.0;
  int structures = 0;
  auto check = [&](const AlmostComplexStructure& acs) {
    const auto& p = acs.patch_ptr();
    const int d = acs.dim();
    ScalarField u(p, fixtures::random_poly(rng, d, 2, 1.0) * fixtures::random_poly(rng, d, 1, 1.0));
    TwoForm R = d_oneform(potential_form(acs, u, DiffMode::Exact), DiffMode::Exact);
    for (int s = 0; s < d; ++s)
      for (int q = 0; q < d; ++q) {
        if (s == q) continue;
        auto r = potential_vf_residual(acs, VectorFieldC::coordinate(p, s), VectorFieldC::coordinate(p, q), u,
                                       DiffMode::Exact);
        worst = std::max(worst, interior_sup(r, ComplexField(R(s, q))));
      }
    ++structures;
  };
  for (const auto& [name, acs] : fixture_structures()) check(acs);
  for (int t = 0; t < 6; ++t) {
    const int n = 1 + t % 3;
    check(reconstruct_from_pq(fixtures::random_pq(rng, cube(n, -0.3, 0.3, res_for(n)), n)));
  }
  return {worst <= 1e-10, std::to_string(structures) + " structures, max |residual - d(J*du)| " + g(worst)};
}

}  // namespace

int main(int argc, char** argv) {
  const std::vector<std::function<Outcome()>> criteria = {criterion1, criterion2, criterion3, criterion4,
                                                          criterion5, criterion6, criterion7, criterion8,
                                                          criterion9, criterion10, criterion11};
  int only = argc > 1 ? std::atoi(argv[1]) : 0;
  if (only < 0 || only > static_cast<int>(criteria.size())) {
    std::cerr << "usage: acceptance [1-11]\n";
    return 2;
  }
  int failed = 0;
  for (int k = 1; k <= static_cast<int>(criteria.size()); ++k) {
    if (only && k != only) continue;
    Outcome o;
    try {
      o = criteria[static_cast<std::size_t>(k - 1)]();
    } catch (const std::exception& e) {
      o = {false, std::string("exception: ") + e.what()};
    }
    failed += o.pass ? 0 : 1;
    std::cout << "criterion " << k << ": " << (o.pass ? "PASS" : "FAIL") << "  " << o.detail << std::endl;
    if (k == 7) {
      // Not counted: the same convergence check on a harmonic the stencil does not reproduce exactly.
      Outcome s = criterion7_supplement();
      std::cout << "criterion 7 (supplementary): " << (s.pass ? "PASS" : "FAIL") << "  " << s.detail << std::endl;
    }
  }
  return failed == 0 ? 0 : 1;
}
