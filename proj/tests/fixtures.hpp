#pragma once

// Shared fixtures for the test binaries. Expected values never come from the
// library under test: structures are built from their defining algebra here.

#include <complex>
#include <random>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "spencer/field.hpp"
#include "spencer/structures.hpp"

namespace fixtures {

using namespace spencer;

inline PatchPtr cube(int n, double lo, double hi, int res) {
  return std::make_shared<const Patch>(Patch::cube(n, lo, hi, res));
}

/// Random polynomial of degree <= deg in d variables with coefficients in [-scale, scale].
inline Expr random_poly(std::mt19937& rng, int d, int deg, double scale) {
  std::uniform_real_distribution<double> u(-scale, scale);
  Expr e = Expr::constant(u(rng));
  for (int i = 0; i < d && deg >= 1; ++i) e = e + Expr::constant(u(rng)) * Expr::var(i);
  if (deg >= 2)
    for (int i = 0; i < d; ++i)
      for (int j = i; j < d; ++j) e = e + Expr::constant(u(rng)) * Expr::var(i) * Expr::var(j);
  return e;
}

inline MatrixField random_poly_matrix(std::mt19937& rng, const PatchPtr& p, int n, int deg, double scale,
                                      const Eigen::MatrixXd& offset) {
  std::vector<ScalarField> e;
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j)
      e.emplace_back(p, Expr::constant(offset(i, j)) + random_poly(rng, p->dim(), deg, scale));
  return MatrixField(n, n, std::move(e));
}

/// A random (P,Q) with Q near a well-conditioned constant matrix.
inline PQPair random_pq(std::mt19937& rng, const PatchPtr& p, int n) {
  std::uniform_real_distribution<double> u(-0.3, 0.3);
  Eigen::MatrixXd q0 = Eigen::MatrixXd::Identity(n, n);
  if (rng() % 2) q0 = -q0;
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j) q0(i, j) += u(rng);
  MatrixField P = random_poly_matrix(rng, p, n, 2, 0.5, Eigen::MatrixXd::Zero(n, n));
  MatrixField Q = random_poly_matrix(rng, p, n, 2, 0.15, q0);
  return make_pq(P, Q);
}

/// Real cotangent matrix of the structure on R^4 (z = x1+ix2, w = x3+ix4)
///   J*dz = i dz, J*dw = i dw + f dz-bar, conjugates likewise,
/// with f = a + ib. Built as j_cot = (Phi^-1 M Phi)^T where the rows of Phi
/// hold the dx-coefficients of (dz, dw, dz-bar, dw-bar) and M is the complex
/// action in that basis, i.e. J* beta_k = sum_l M_kl beta_l.
inline MatrixField type1_structure(const PatchPtr& p, const Expr& a, const Expr& b) {
  using C = std::complex<double>;
  const C I(0, 1);
  Eigen::Matrix4cd Phi;
  Phi << 1, I, 0, 0,  //
      0, 0, 1, I,     //
      1, -I, 0, 0,    //
      0, 0, 1, -I;
  Eigen::Matrix4cd Pinv = Phi.inverse();
  // j_cot * Phi_k^T = sum_l M_kl Phi_l^T  =>  j_cot = Phi^T M^T Phi^{-T}.
  // M depends on f; split M = M0 + a Ma + b Mb and assemble each part.
  auto part = [&](const Eigen::Matrix4cd& M) -> Eigen::Matrix4d {
    Eigen::Matrix4cd r = Phi.transpose() * M.transpose() * Pinv.transpose();
    return r.real();
  };
  Eigen::Matrix4cd M0 = Eigen::Matrix4cd::Zero(), Ma = Eigen::Matrix4cd::Zero(), Mb = Eigen::Matrix4cd::Zero();
  M0(0, 0) = I;
  M0(1, 1) = I;
  M0(2, 2) = -I;
  M0(3, 3) = -I;
  Ma(1, 2) = 1.0;  // f dz-bar in J* dw
  Ma(3, 0) = 1.0;  // conj(f) dz in J* dw-bar
  Mb(1, 2) = I;
  Mb(3, 0) = -I;
  Eigen::Matrix4d j0 = part(M0), ja = part(Ma), jb = part(Mb);
  std::vector<ScalarField> e;
  for (int i = 0; i < 4; ++i)
    for (int j = 0; j < 4; ++j) e.emplace_back(p, Expr::constant(j0(i, j)) + Expr::constant(ja(i, j)) * a +
                                                      Expr::constant(jb(i, j)) * b);
  return MatrixField(4, 4, std::move(e));
}

/// f = w.
inline MatrixField type1_w(const PatchPtr& p) { return type1_structure(p, Expr::var(2), Expr::var(3)); }
/// f = conj(w).
inline MatrixField type1_wbar(const PatchPtr& p) { return type1_structure(p, Expr::var(2), -Expr::var(3)); }

/// Polynomial diffeomorphism of a neighbourhood of the origin in R^2.
inline std::vector<Expr> phi2() {
  return {parse_expr("x1 + 0.2*x2^2", 2), parse_expr("x2 + 0.1*x1^2 + 0.1*x1*x2", 2)};
}
/// phi2 applied to both coordinate pairs of R^4, mixed slightly.
inline std::vector<Expr> phi4() {
  return {parse_expr("x1 + 0.2*x2^2 + 0.1*x3", 4), parse_expr("x2 + 0.1*x1^2", 4),
          parse_expr("x3 + 0.1*x4*x1", 4), parse_expr("x4 + 0.15*x3^2", 4)};
}

/// h o phi for the harmonic h(y1, y2) = y1^2 - y2^2 + y1*y2 (standard structure).
inline Expr harmonic_of(const std::vector<Expr>& phi) {
  const Expr& y1 = phi[0];
  const Expr& y2 = phi[1];
  return pow(y1, 2) - pow(y2, 2) + y1 * y2;
}

inline double sup_abs(const std::vector<double>& v) {
  double m = 0;
  for (double x : v) m = std::max(m, std::abs(x));
  return m;
}

}  // namespace fixtures
