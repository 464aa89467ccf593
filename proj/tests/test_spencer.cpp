#include <doctest.h>

#include <cmath>
#include <random>

#include "fixtures.hpp"
#include "spencer/spencer.hpp"

using namespace spencer;
using fixtures::cube;

namespace {

const cplx I(0.0, 1.0);

ComplexField cf(const PatchPtr& p, const char* re, const char* im) { return ComplexField::parse(p, re, im); }

PatchPtr box(int n, double lo, double hi, int res) { return std::make_shared<const Patch>(Patch::cube(n, lo, hi, res)); }

double block(const PatternReport& r, std::size_t k) { return r.block_residuals[k].second; }

}  // namespace

TEST_CASE("type-1 structure") {
  auto p = cube(2, -1, 1, 5);
  auto acs = type1_structure(p, Expr::var(2), Expr::var(3));
  CHECK(acs.valid);
  CHECK(acs.acs_residual <= 1e-14);
  // Same matrix as the independently assembled test fixture.
  MatrixField ref = fixtures::type1_w(p);
  for (std::size_t node = 0; node < p->size(); node += 37) {
    auto x = p->coords(node);
    CHECK((acs.j_cot.value_at(x) - ref.value_at(x)).cwiseAbs().maxCoeff() <= 1e-15);
  }
  // J*dz = i dz and J*dw - i dw = f dz-bar, read off the gradients directly.
  Eigen::Vector4cd dz(1.0, I, 0.0, 0.0), dw(0.0, 0.0, 1.0, I), dzbar(1.0, -I, 0.0, 0.0);
  std::vector<double> x = {0.3, -0.7, 0.4, 0.9};
  Eigen::Matrix4cd J = acs.j_cot.value_at(x).cast<cplx>();
  const cplx f(x[2], x[3]);
  CHECK((J * dz - I * dz).norm() <= 1e-15);
  CHECK((J * dw - I * dw - f * dzbar).norm() <= 1e-15);
  CHECK_THROWS_AS(type1_structure(cube(1, -1, 1, 5), Expr::var(0), Expr::var(1)), FieldError);
}

TEST_CASE("verify_chart") {
  SUBCASE("integrable R^4, m = n: every block structured") {
    auto p = cube(2, -1, 1, 5);
    auto acs = standard_structure(p);
    SpencerChart chart({cf(p, "x1", "x2"), cf(p, "x3", "x4")}, {});
    auto r = verify_chart(acs, chart);
    CHECK(r.passes);
    CHECK(r.worst == 0.0);
    Eigen::Matrix4cd D = Eigen::Vector4cd(I, I, -I, -I).asDiagonal();
    CHECK((r.center_matrix - D).norm() <= 1e-15);
    CHECK(r.min_normalized_det == doctest::Approx(1.0));
  }

  SUBCASE("type-1, m = 1: pattern with genuine starred entries") {
    auto p = box(2, 0.5, 1.5, 5);
    auto acs = type1_structure(p, Expr::var(2), Expr::var(3));
    SpencerChart chart({cf(p, "x1", "x2")}, {cf(p, "x3", "x4")});
    auto r = verify_chart(acs, chart);
    CHECK(r.passes);
    CHECK(r.worst <= 1e-12);
    CHECK(r.tolerance == 1e-8);
    // Centre (1,1,1,1): f = 1 + i sits in the dz-bar row of J* dw, and its
    // conjugate in the dz row of J* dw-bar.
    CHECK(std::abs(r.center_matrix(2, 1) - cplx(1, 1)) <= 1e-14);
    CHECK(std::abs(r.center_matrix(0, 3) - cplx(1, -1)) <= 1e-14);
    CHECK(std::abs(r.center_matrix(1, 1) - I) <= 1e-14);
  }

  SUBCASE("type-1, a claim of m = 2 fails") {
    auto p = cube(2, -1, 1, 5);
    auto acs = type1_structure(p, Expr::var(2), Expr::var(3));
    SpencerChart chart({cf(p, "x1", "x2"), cf(p, "x3", "x4")}, {});
    auto r = verify_chart(acs, chart);
    CHECK_FALSE(r.passes);
    // Interior nodes reach |x3|, |x4| = 0.5: sup |f| = sqrt(0.5). The CR
    // residual of w is |f dz-bar| = sqrt(2) |f|.
    CHECK(r.holo[0].sup == 0.0);
    CHECK(r.holo[1].sup == doctest::Approx(1.0).epsilon(1e-14));
    CHECK(block(r, 1) == doctest::Approx(std::sqrt(0.5)).epsilon(1e-14));
    CHECK(block(r, 0) <= 1e-14);
    CHECK(r.worst > 0.1);
  }

  SUBCASE("finite differences: the m = 2 failure does not shrink with h") {
    // 30 h^2 exceeds the defect itself when h = 1/4, so start at h = 1/8.
    for (int res : {17, 25}) {
      auto p = cube(2, -1, 1, res);
      auto acs = type1_structure(p, Expr::var(2), Expr::var(3));
      SpencerChart good({cf(p, "x1", "x2")}, {cf(p, "x3", "x4")});
      SpencerChart bad({cf(p, "x1", "x2"), cf(p, "x3", "x4")}, {});
      auto rg = verify_chart(acs, good, 1, ModeRequest::FiniteDifference);
      auto rb = verify_chart(acs, bad, 1, ModeRequest::FiniteDifference);
      CHECK(rg.mode == DiffMode::FiniteDifference);
      CHECK(rg.passes);
      CHECK_FALSE(rb.passes);
      CHECK(rb.worst > 0.5);
    }
  }

  SUBCASE("pullback structure with its transported chart") {
    auto phi = fixtures::phi2();
    for (int res : {9, 17}) {
      auto p = box(1, -0.5, 0.5, res);
      auto acs = pullback_structure(p, phi);
      SpencerChart chart({ComplexField(ScalarField(p, phi[0]), ScalarField(p, phi[1]))}, {});
      CHECK(verify_chart(acs, chart).worst <= 1e-12);
      auto fd = verify_chart(acs, chart, 1, ModeRequest::FiniteDifference);
      CHECK(fd.passes);
    }
  }

  SUBCASE("antiholomorphic pattern") {
    auto p = cube(1, -1, 1, 5);
    auto acs = standard_structure(p);
    SpencerChart anti({cf(p, "x1", "-x2")}, {});
    CHECK(verify_chart(acs, anti, -1).passes);
    CHECK_FALSE(verify_chart(acs, anti, 1).passes);
    CHECK_THROWS_AS(verify_chart(acs, anti, 2), FieldError);
  }

  SUBCASE("errors") {
    auto p = cube(2, -1, 1, 5);
    auto acs = standard_structure(p);
    CHECK_THROWS_AS(SpencerChart({cf(p, "x1", "x2")}, {}), FieldError);
    CHECK_THROWS_AS(verify_chart(acs, SpencerChart({cf(p, "x1", "x2"), cf(p, "x1", "x2")}, {})), DegenerateChart);
    auto q = cube(2, -1, 1, 7);
    CHECK_THROWS_AS(SpencerChart({cf(p, "x1", "x2")}, {cf(q, "x3", "x4")}), PatchMismatch);
    CHECK_THROWS_AS(verify_chart(standard_structure(q), SpencerChart({cf(p, "x1", "x2")}, {cf(p, "x3", "x4")})),
                    PatchMismatch);
  }
}

TEST_CASE("independence_rank") {
  auto p = cube(2, -1, 1, 5);
  SpencerChart a({cf(p, "x1", "x2"), cf(p, "x3", "x4")}, {});
  SpencerChart b({cf(p, "x1", "x2"), cf(p, "x1^2 - x2^2", "2*x1*x2")}, {});
  SpencerChart c({cf(p, "x1", "x2"), cf(p, "x1 + x3", "x2 + x4")}, {});
  CHECK(independence_rank(a).min_rank == 2);
  auto rb = independence_rank(b);
  CHECK(rb.min_rank == 1);
  // d(z^2) = 2z dz: dependent at every node, not only at z = 0.
  auto off = box(2, 0.5, 1.5, 5);
  CHECK(independence_rank(SpencerChart({cf(off, "x1", "x2"), cf(off, "x1^2 - x2^2", "2*x1*x2")}, {})).min_rank == 1);
  CHECK(rb.min_singular <= 1e-12);
  CHECK(independence_rank(c).min_rank == 2);
  CHECK(independence_rank(b, ModeRequest::FiniteDifference).min_rank == 1);

  // Invariance under an invertible constant recombination of the w's.
  std::mt19937 rng(3);
  std::uniform_real_distribution<double> u(-1, 1);
  for (int t = 0; t < 5; ++t) {
    Eigen::Matrix2cd C;
    for (int i = 0; i < 2; ++i)
      for (int j = 0; j < 2; ++j) C(i, j) = cplx(u(rng), u(rng));
    C += 2.0 * Eigen::Matrix2cd::Identity();
    for (const SpencerChart* ch : {&a, &b, &c}) {
      const auto& w = ch->holo_coords;
      SpencerChart mixed({C(0, 0) * w[0] + C(0, 1) * w[1], C(1, 0) * w[0] + C(1, 1) * w[1]}, {});
      CHECK(independence_rank(mixed).min_rank == independence_rank(*ch).min_rank);
    }
  }
}

TEST_CASE("superposition_check") {
  SUBCASE("type-1, h = z^2") {
    auto p = cube(2, -1, 1, 5);
    auto acs = type1_structure(p, Expr::var(2), Expr::var(3));
    SpencerChart chart({cf(p, "x1", "x2")}, {cf(p, "x3", "x4")});
    auto h = cf(p, "x1^2 - x2^2", "2*x1*x2");
    CHECK(superposition_check(acs, chart, h).sup <= 1e-12);
    auto fit = superposition_fit(chart, h, 2);
    REQUIRE(fit.coefficients.size() == 3);
    CHECK(fit.residual <= 1e-12);
    for (std::size_t t = 0; t < 3; ++t) {
      const cplx expect = fit.exponents[t][0] == 2 ? 1.0 : 0.0;
      CHECK(std::abs(fit.coefficients[t] - expect) <= 1e-12);
    }
    CHECK_THROWS_AS(superposition_check(acs, chart, cf(p, "x1 + x3", "x2 + x4")), PreconditionFailed);
    SpencerChart bad({cf(p, "x1", "x2"), cf(p, "x3", "x4")}, {});
    CHECK_THROWS_AS(superposition_check(acs, bad, h), ChartError);
  }

  SUBCASE("standard R^2, h = exp(z)") {
    auto p = cube(1, -1, 1, 9);
    auto acs = standard_structure(p);
    SpencerChart chart({cf(p, "x1", "x2")}, {});
    CHECK(superposition_check(acs, chart, cf(p, "exp(x1)*cos(x2)", "exp(x1)*sin(x2)")).sup <= 1e-10);
  }

  SUBCASE("a holomorphic h outside span(dw) is detected") {
    auto p = cube(2, -1, 1, 5);
    auto acs = standard_structure(p);
    SpencerChart chart({cf(p, "x1", "x2")}, {cf(p, "x3", "x4")});
    auto r = superposition_check(acs, chart, cf(p, "x3", "x4"));
    CHECK(r.sup == doctest::Approx(1.0));
    CHECK(r.breakdown[0].second == doctest::Approx(1.0));
  }

  SUBCASE("covariance under recombination of the w's") {
    auto p = cube(2, -1, 1, 5);
    auto acs = standard_structure(p);
    auto z1 = cf(p, "x1", "x2"), z2 = cf(p, "x3", "x4");
    auto h = z1 * z2 + cf(p, "x1^2 - x2^2", "2*x1*x2");
    SpencerChart base({z1, z2}, {});
    SpencerChart mixed({cplx(1, 1) * z1 + cplx(0.5, 0) * z2, cplx(0, -2) * z1 + cplx(1, 0.3) * z2}, {});
    CHECK(superposition_check(acs, base, h).sup <= 1e-12);
    CHECK(superposition_check(acs, mixed, h).sup <= 1e-12);
  }
}

TEST_CASE("transition_holomorphy_check") {
  auto p = cube(1, -1, 1, 9);
  auto acs = standard_structure(p);
  SpencerChart a({cf(p, "x1", "x2")}, {});
  SpencerChart b({cf(p, "2*x1 + 1", "2*x2")}, {});
  CHECK(transition_holomorphy_check(acs, a, b, {{parse_expr("2*x1 + 1", 2), parse_expr("2*x2", 2)}}).sup == 0.0);
  // A wrong map fails on both counts.
  auto wrong = transition_holomorphy_check(acs, a, b, {{parse_expr("2*x1 + 1", 2), parse_expr("-2*x2", 2)}});
  CHECK(wrong.breakdown[0].second == doctest::Approx(2.0));
  CHECK(wrong.breakdown[1].second > 1.0);

  auto q = box(1, 0.5, 1.5, 9);
  auto sq = standard_structure(q);
  SpencerChart za({cf(q, "x1", "x2")}, {});
  SpencerChart zb({cf(q, "x1^2 - x2^2", "2*x1*x2")}, {});
  CHECK(transition_holomorphy_check(sq, za, zb, {{parse_expr("x1^2 - x2^2", 2), parse_expr("2*x1*x2", 2)}}).sup <= 1e-14);

  SpencerChart zbar({cf(p, "x1", "-x2")}, {});
  CHECK_THROWS_AS(transition_holomorphy_check(acs, a, zbar, {{parse_expr("x1", 2), parse_expr("-x2", 2)}}), ChartError);
  CHECK_THROWS_AS(transition_holomorphy_check(acs, a, za, {{parse_expr("x1", 2), parse_expr("x2", 2)}}), PatchMismatch);
  CHECK_THROWS_AS(transition_holomorphy_check(acs, a, b, {}), FieldError);
}

TEST_CASE("hyper-Spencer pattern and affine transitions") {
  auto p = box(2, 0.5, 1.5, 5);
  auto h = flat_hypercomplex(p);
  auto q = QuaternionFunction::coordinate(p);

  auto charts = [](const QuaternionFunction& F) {
    return std::pair{SpencerChart({F.f()}, {F.phi().conj()}), SpencerChart({F.phi()}, {F.f().conj()})};
  };
  {
    auto [c, anti] = charts(q);
    auto r = hyper_spencer_pattern_check(h, c, anti);
    CHECK(r.passes);
    CHECK(r.holo.worst == 0.0);
    CHECK(r.anti.worst == 0.0);
  }
  std::mt19937 rng(11);
  std::uniform_real_distribution<double> u(-1, 1);
  for (int t = 0; t < 5; ++t) {
    Eigen::Quaterniond a(1.5 + u(rng), u(rng), u(rng), u(rng)), b(u(rng), u(rng), u(rng), u(rng));
    auto G = QuaternionFunction::constant(p, a) * q + QuaternionFunction::constant(p, b);
    auto [c, anti] = charts(G);
    CHECK(hyper_spencer_pattern_check(h, c, anti).passes);
    auto tr = hyper_transition_check(h, G);
    CHECK(tr.passes);
    CHECK(tr.fit.affine_residual <= 1e-12);
  }
  auto G2 = q * q;
  auto [c2, anti2] = charts(G2);
  CHECK_FALSE(hyper_spencer_pattern_check(h, c2, anti2).passes);
  auto tr2 = hyper_transition_check(h, G2);
  CHECK_FALSE(tr2.passes);
  CHECK(tr2.k_residual.sup > 0.1);
  CHECK_FALSE(tr2.fit.affine);

  SpencerChart two({q.f(), q.phi().conj()}, {});
  CHECK_THROWS_AS(hyper_spencer_pattern_check(h, two, charts(q).second), ChartError);
}
