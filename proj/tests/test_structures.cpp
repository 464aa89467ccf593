#include <doctest.h>

#include <cmath>
#include <random>

#include "fixtures.hpp"
#include "spencer/structures.hpp"

using namespace spencer;
using fixtures::cube;

namespace {

double max_diff(const MatrixField& a, const MatrixField& b) {
  MatrixSamples sa = a.sample(), sb = b.sample();
  double m = 0;
  for (std::size_t n = 0; n < sa.nodes(); ++n)
    m = std::max(m, (Eigen::MatrixXd(sa.at(n)) - Eigen::MatrixXd(sb.at(n))).cwiseAbs().maxCoeff());
  return m;
}

Eigen::MatrixXd normal(int n) {
  Eigen::MatrixXd m = Eigen::MatrixXd::Zero(2 * n, 2 * n);
  m.topRightCorner(n, n).setIdentity();
  m.bottomLeftCorner(n, n) = -Eigen::MatrixXd::Identity(n, n);
  return m;
}

}  // namespace

TEST_CASE("validate_acs") {
  auto p = cube(2, -1, 1, 5);
  Eigen::MatrixXd s0 = Eigen::MatrixXd::Zero(4, 4);
  s0(0, 1) = 1;
  s0(1, 0) = -1;
  s0(2, 3) = 1;
  s0(3, 2) = -1;
  auto acs = validate_acs(MatrixField::constant(p, s0));
  CHECK(acs.acs_residual == 0.0);
  CHECK(max_diff(acs.j_tan, acs.j_cot.transpose()) == 0.0);

  auto id = assess_acs(MatrixField::identity(p, 4));
  CHECK_FALSE(id.valid);
  CHECK(id.acs_residual == 2.0);
  CHECK_THROWS_AS(validate_acs(MatrixField::identity(p, 4)), InvalidStructure);

  auto p1 = cube(1, -3, 3, 7);
  auto fx = validate_acs(MatrixField::parse(p1, {{"x2", "x2^2 + 1"}, {"-1", "-x2"}}));
  CHECK(fx.acs_residual <= 1e-12);

  CHECK_THROWS_AS(validate_acs(MatrixField::identity(p1, 3)), FieldError);
  CHECK_THROWS_AS(validate_acs(MatrixField::identity(p1, 4)), FieldError);
}

TEST_CASE("standard structure makes z holomorphic") {
  auto p = cube(1, 0, 1, 5);
  auto s = standard_structure(p);
  Eigen::MatrixXd j = s.j_cot.value_at(std::vector<double>{0.5, 0.5});
  // grad u = (1,0), grad v = (0,1) for z = x1 + i x2: J* du = -dv.
  Eigen::Vector2d gu(1, 0), gv(0, 1);
  CHECK((j * gu + gv).norm() == 0.0);
  CHECK((j * gv - gu).norm() == 0.0);
  Eigen::MatrixXd jt = s.j_tan.value_at(std::vector<double>{0.5, 0.5});
  CHECK(jt(1, 0) == 1.0);  // d/dx1 -> d/dx2
}

TEST_CASE("reconstruct_from_pq: hand examples") {
  auto p = cube(2, -0.5, 0.5, 5);
  auto z = MatrixField::zero(p, 2, 2);
  auto e = MatrixField::identity(p, 2);
  auto a = reconstruct_from_pq(make_pq(z, -1.0 * e));
  CHECK(a.j_cot.value_at(std::vector<double>(4, 0.1)).isApprox(normal(2)));
  auto b = reconstruct_from_pq(make_pq(z, e));
  CHECK(b.j_cot.value_at(std::vector<double>(4, 0.1)).isApprox(-normal(2)));

  // n = 1 hand algebra: [[-p/q, -p^2/q - q], [1/q, p/q]].
  auto p1 = cube(1, -0.5, 0.5, 7);
  auto pq = make_pq(MatrixField::parse(p1, {{"x1 + x2^2"}}), MatrixField::parse(p1, {{"2 + x1*x2"}}));
  auto r = reconstruct_from_pq(pq);
  CHECK(r.acs_residual <= 1e-12);
  for (std::size_t n = 0; n < p1->size(); n += 5) {
    auto x = p1->coords(n);
    double pv = x[0] + x[1] * x[1], qv = 2 + x[0] * x[1];
    Eigen::Matrix2d ref;
    ref << -pv / qv, -pv * pv / qv - qv, 1 / qv, pv / qv;
    Eigen::MatrixXd got = r.j_cot.value_at(x);
    CHECK((got - ref).cwiseAbs().maxCoeff() < 1e-14);
    CHECK(std::abs(got.trace()) < 1e-14);
    CHECK(got.determinant() == doctest::Approx(1.0).epsilon(1e-13));
  }

  auto sing = MatrixField::parse(p1, {{"x1"}});
  CHECK_THROWS_AS(make_pq(MatrixField::parse(p1, {{"1"}}), sing), SingularMatrix);
}

TEST_CASE("(P,Q) reconstruction squares to -E for random polynomial pairs") {
  std::mt19937 rng(7);
  for (int n = 1; n <= 3; ++n) {
    auto p = cube(n, -0.5, 0.5, n == 3 ? 3 : 5);
    for (int t = 0; t < 5; ++t) {
      auto acs = reconstruct_from_pq(fixtures::random_pq(rng, p, n));
      CHECK(acs.acs_residual <= 1e-10);
    }
  }
}

TEST_CASE("normalize_at_origin") {
  SUBCASE("already normalized") {
    auto p = cube(2, -0.5, 0.5, 5);
    auto acs = normal_form_structure(p);
    auto bd = normalize_at_origin(acs, p->center_node());
    CHECK(bd.G.isApprox(Eigen::MatrixXd::Identity(4, 4)));
    for (const auto* m : {&bd.A, &bd.B, &bd.C, &bd.D}) CHECK(max_diff(*m, MatrixField::zero(p, 2, 2)) == 0.0);
    auto pq = extract_pq(bd);
    CHECK(max_diff(pq.P, MatrixField::zero(p, 2, 2)) == 0.0);
    CHECK(max_diff(pq.Q, -1.0 * MatrixField::identity(p, 2)) == 0.0);
  }
  SUBCASE("standard interleaved structure") {
    auto p = cube(2, -0.5, 0.5, 5);
    auto acs = standard_structure(p);
    auto bd = normalize_at_origin(acs, p->center_node());
    // Oracle: G^-1 M G must be the normal form, checked directly.
    Eigen::MatrixXd M = acs.j_cot.value_at(p->coords(p->center_node()));
    CHECK((bd.G_inv * M * bd.G - normal(2)).cwiseAbs().maxCoeff() <= 1e-12);
    auto x = p->coords(p->center_node());
    for (const auto* m : {&bd.A, &bd.B, &bd.C, &bd.D}) CHECK(m->value_at(x).cwiseAbs().maxCoeff() <= 1e-10);
    CHECK(block_identities_residual(bd, acs).max() <= 1e-10);
  }
  SUBCASE("from (P,Q) = (x2 E, -E + 0.1 x1 E)") {
    auto p = cube(2, -0.2, 0.2, 5);
    auto E = MatrixField::identity(p, 2);
    auto x1 = ScalarField::coordinate(p, 0), x2 = ScalarField::coordinate(p, 1);
    MatrixField P(2, 2, {x2, ScalarField::constant(p, 0), ScalarField::constant(p, 0), x2});
    MatrixField Q(2, 2, {-1.0 + 0.1 * x1, ScalarField::constant(p, 0), ScalarField::constant(p, 0), -1.0 + 0.1 * x1});
    auto acs = reconstruct_from_pq(make_pq(P, Q));
    auto bd = normalize_at_origin(acs, p->center_node());
    auto r = block_identities_residual(bd, acs);
    CHECK(r.reassembly <= 1e-10);
    for (double v : r.identities) CHECK(v <= 1e-10);
  }
  SUBCASE("C - E degenerates away from the base point") {
    // j = cos(t) N + sin(t) N' with N' anticommuting with N; the lower-left
    // block is -cos(t) E, so C - E is singular at t = pi/2 (x1 = 1).
    auto p = std::make_shared<const Patch>(2, std::vector<std::pair<double, double>>{{-0.5, 1.5}, {-0.5, 0.5}, {-0.5, 0.5}, {-0.5, 0.5}},
                                           std::vector<int>{5, 5, 5, 5});
    std::string c = "cos(pi*x1/2)", s = "sin(pi*x1/2)", ms = "-sin(pi*x1/2)", mc = "-cos(pi*x1/2)";
    auto m = MatrixField::parse(p, {{"0", s, c, "0"}, {ms, "0", "0", c}, {mc, "0", "0", ms}, {"0", mc, s, "0"}});
    auto acs = validate_acs(m);
    std::vector<double> origin(4, 0.0);
    CHECK_THROWS_AS(normalize_at_origin(acs, p->nearest_node(origin)), SingularMatrix);
    auto q = std::make_shared<const Patch>(2, std::vector<std::pair<double, double>>{{-0.5, 0.5}, {-0.5, 0.5}, {-0.5, 0.5}, {-0.5, 0.5}},
                                           std::vector<int>{5, 5, 5, 5});
    auto small = validate_acs(MatrixField::parse(q, {{"0", s, c, "0"}, {ms, "0", "0", c}, {mc, "0", "0", ms}, {"0", mc, s, "0"}}));
    CHECK(block_identities_residual(normalize_at_origin(small, q->center_node()), small).max() <= 1e-10);
  }
}

TEST_CASE("extract_pq round trip on normalized fixtures") {
  std::mt19937 rng(11);
  for (int n = 1; n <= 2; ++n) {
    auto p = cube(n, -0.3, 0.3, 5);
    for (int t = 0; t < 5; ++t) {
      auto acs = reconstruct_from_pq(fixtures::random_pq(rng, p, n));
      auto bd = normalize_at_origin(acs, p->center_node());
      CHECK(block_identities_residual(bd, acs).max() <= 1e-10);
      auto again = reconstruct_from_pq(extract_pq(bd));
      CHECK(max_diff(again.j_cot, bd.normalized) <= 1e-10);
    }
  }
  // The n = 1 fixture [[x2, x2^2+1], [-1, -x2]] on a small patch about 0.
  auto p1 = cube(1, -0.4, 0.4, 9);
  auto acs = validate_acs(MatrixField::parse(p1, {{"x2", "x2^2 + 1"}, {"-1", "-x2"}}));
  auto bd = normalize_at_origin(acs, p1->center_node());
  CHECK(block_identities_residual(bd, acs).max() <= 1e-10);
  CHECK(max_diff(reconstruct_from_pq(extract_pq(bd)).j_cot, bd.normalized) <= 1e-10);
}

TEST_CASE("normalize o extract o reconstruct is the identity on normalized structures") {
  std::mt19937 rng(5);
  auto p = cube(1, -0.3, 0.3, 5);
  // Normalized: (P,Q) with P(0) = 0 and Q(0) = -E gives j_cot(0) = N, so G = E.
  Expr pe = parse_expr("0.3*x1 - 0.2*x2^2", 2);
  Expr qe = parse_expr("-1 + 0.2*x1*x2 + 0.1*x2", 2);
  auto pq = make_pq(MatrixField(1, 1, {ScalarField(p, pe)}), MatrixField(1, 1, {ScalarField(p, qe)}));
  auto acs = reconstruct_from_pq(pq);
  auto bd = normalize_at_origin(acs, p->center_node());
  CHECK(bd.G.isApprox(Eigen::MatrixXd::Identity(2, 2)));
  auto back = extract_pq(bd);
  CHECK(max_diff(back.P, pq.P) <= 1e-10);
  CHECK(max_diff(back.Q, pq.Q) <= 1e-10);
  (void)rng;
}

TEST_CASE("reconstruction is continuous in (P,Q)") {
  auto p = cube(1, -0.5, 0.5, 7);
  auto base = make_pq(MatrixField::parse(p, {{"x1*x2"}}), MatrixField::parse(p, {{"1.5 + x1"}}));
  auto limit = reconstruct_from_pq(base);
  double prev = 1e300;
  for (int k = 1; k <= 6; ++k) {
    double eps = std::pow(0.1, k);
    auto pk = make_pq(base.P + eps * MatrixField::parse(p, {{"x2^2"}}), base.Q + eps * MatrixField::parse(p, {{"x1"}}));
    double d = max_diff(reconstruct_from_pq(pk).j_cot, limit.j_cot);
    CHECK(d < prev);
    prev = d;
  }
  CHECK(prev < 1e-5);
}

TEST_CASE("quaternionic standard matrices") {
  auto st = quaternionic_standard();
  CHECK(st.S.row(0) == Eigen::RowVector4d(0, 1, 0, 0));
  CHECK(st.T.row(0) == Eigen::RowVector4d(0, 0, 1, 0));
  Eigen::Matrix4d E = Eigen::Matrix4d::Identity();
  CHECK((st.S * st.S + E).isZero(0));
  CHECK((st.T * st.T + E).isZero(0));
  CHECK(((st.S * st.T) * (st.S * st.T) + E).isZero(0));
  CHECK((st.S * st.T + st.T * st.S).isZero(0));

  // S and T transpose right multiplication by i and j on q = x0 + i x1 + j x2 + k x3:
  // q i = -x1 + i x0 + j x3 - k x2, q j = -x2 - i x3 + j x0 + k x1.
  Eigen::Vector4d q(0.3, -1.2, 0.7, 2.1);
  CHECK(st.S.transpose() * q == Eigen::Vector4d(-q[1], q[0], q[3], -q[2]));
  CHECK(st.T.transpose() * q == Eigen::Vector4d(-q[2], -q[3], q[0], q[1]));

  auto h = flat_hypercomplex(cube(4, -1, 1, 2));
  CHECK(h.anti_residual == 0.0);
  CHECK(h.valid);
}

TEST_CASE("twistor sphere") {
  auto p = cube(2, -1, 1, 3);
  auto h = flat_hypercomplex(p);
  auto j = twistor_structure(h, 1, 0, 0);
  CHECK(max_diff(j.j_tan, h.J.j_tan) == 0.0);
  auto jk = twistor_structure(h, 0, 0, 1);
  CHECK(jk.valid);
  CHECK(max_diff(jk.j_tan, h.J.j_tan * h.K.j_tan) == 0.0);
  CHECK_THROWS_AS(twistor_structure(h, 1, 1, 0), FieldError);

  std::mt19937 rng(3);
  std::normal_distribution<double> g;
  for (int t = 0; t < 100; ++t) {
    double b = g(rng), c = g(rng), d = g(rng);
    double r = std::sqrt(b * b + c * c + d * d);
    auto s = twistor_structure(h, b / r, c / r, d / r);
    CHECK(s.acs_residual <= 1e-12);
  }

  Eigen::Matrix4d G;
  G << 2, 0.1, 0, 0.3, 0, 1, 0.2, 0, 0.5, 0, 1, 0, 0, 0.4, 0, 1.5;
  auto hc = conjugated_hypercomplex(p, G);
  CHECK(hc.valid);
  CHECK(hc.anti_residual <= 1e-12);
}

TEST_CASE("Nijenhuis tensor") {
  auto p = cube(1, -0.5, 0.5, 9);
  CHECK(nijenhuis_residual(standard_structure(p)).sup == 0.0);
  auto p4 = cube(2, -0.5, 0.5, 7);
  CHECK(nijenhuis_residual(normal_form_structure(p4), ModeRequest::FiniteDifference).sup == 0.0);

  // Pullback structures are integrable: exact mode vanishes to roundoff,
  // FD mode at second order.
  auto pb = pullback_structure(p4, fixtures::phi4());
  CHECK(nijenhuis_residual(pb).sup <= 1e-12);
  double err[2];
  for (int k = 0; k < 2; ++k) {
    auto pk = cube(2, -0.5, 0.5, k == 0 ? 9 : 17);
    auto s = pullback_structure(pk, fixtures::phi4());
    std::vector<ScalarField> sampled;
    for (const auto& e : s.j_cot.entries()) sampled.push_back(eval_field(e));
    auto fd = assess_acs(MatrixField(4, 4, sampled));
    err[k] = nijenhuis_residual(fd).sup;
  }
  CHECK(err[0] / err[1] >= 3.0);
  CHECK(err[0] / err[1] <= 5.0);

  // J* dw = i dw + f dz-bar: f = w is integrable (w exp(-i zbar / 2) is a
  // second holomorphic coordinate), f = conj(w) is not.
  auto t1 = validate_acs(fixtures::type1_w(p4));
  CHECK(nijenhuis_residual(t1).sup <= 1e-12);
  auto t2 = validate_acs(fixtures::type1_wbar(p4));
  double coarse = nijenhuis_residual(t2).sup;
  CHECK(coarse >= 1.0);
  auto fine = validate_acs(fixtures::type1_wbar(cube(2, -0.5, 0.5, 9)));
  CHECK(nijenhuis_residual(fine).sup == doctest::Approx(coarse).epsilon(1e-12));
}

TEST_CASE("type-1 fixture: real form matches the hand-derived rows") {
  auto p = cube(2, -0.5, 0.5, 5);
  auto m = fixtures::type1_w(p);
  std::vector<double> x = {0.1, -0.2, 0.3, 0.4};
  double a = x[2], b = x[3];
  Eigen::Matrix4d ref;
  ref << 0, 1, a, b, -1, 0, b, -a, 0, 0, 0, 1, 0, 0, -1, 0;
  CHECK((m.value_at(x) - ref).cwiseAbs().maxCoeff() < 1e-15);
  CHECK(validate_acs(m).acs_residual <= 1e-14);
}
