#include "spencer/hypercomplex.hpp"

#include <array>
#include <cmath>

namespace spencer {

namespace {

std::array<Eigen::Quaterniond, 4> basis() {
  return {Eigen::Quaterniond(1, 0, 0, 0), Eigen::Quaterniond(0, 1, 0, 0), Eigen::Quaterniond(0, 0, 1, 0),
          Eigen::Quaterniond(0, 0, 0, 1)};
}

Eigen::Vector4d coords(const Eigen::Quaterniond& q) { return {q.w(), q.x(), q.y(), q.z()}; }

void check_dims(const AlmostComplexStructure& acs, const QuaternionFunction& F) {
  if (acs.dim() != F.patch().dim()) throw FieldError("structure and quaternion function dimensions differ");
  if (!(acs.patch() == F.patch())) throw PatchMismatch();
}

// sup of the pointwise max is the max of the sups; l2 is combined in quadrature.
ResidualReport max_report(const std::string& check, const ResidualReport& a, const ResidualReport& b) {
  ResidualReport r = a.sup >= b.sup ? a : b;
  r.check = check;
  r.l2 = std::hypot(a.l2, b.l2);
  r.breakdown = {{a.check, a.sup}, {b.check, b.sup}};
  return r;
}

ResidualReport interior_abs(const std::string& check, const ScalarField& f, DiffMode mode) {
  SamplePtr s = f.samples();
  const Patch& patch = f.patch();
  ResidualAccumulator acc(check, patch, mode);
  for (std::size_t n = 0; n < patch.size(); ++n)
    if (patch.is_interior(n)) acc.add(n, std::abs((*s)[n]));
  return acc.finish();
}

}  // namespace

QuaternionFunction QuaternionFunction::parse(const PatchPtr& p, const std::string& u, const std::string& v,
                                             const std::string& zeta, const std::string& eta) {
  return {ScalarField::parse(p, u), ScalarField::parse(p, v), ScalarField::parse(p, zeta),
          ScalarField::parse(p, eta)};
}

QuaternionFunction QuaternionFunction::constant(const PatchPtr& p, const Eigen::Quaterniond& q) {
  return {ScalarField::constant(p, q.w()), ScalarField::constant(p, q.x()), ScalarField::constant(p, q.y()),
          ScalarField::constant(p, q.z())};
}

QuaternionFunction QuaternionFunction::coordinate(const PatchPtr& p, int block) {
  if (p->dim() % 4 != 0 || block < 0 || 4 * block + 3 >= p->dim())
    throw FieldError("quaternion coordinate block out of range");
  return {ScalarField::coordinate(p, 4 * block), ScalarField::coordinate(p, 4 * block + 1),
          ScalarField::coordinate(p, 4 * block + 2), ScalarField::coordinate(p, 4 * block + 3)};
}

QuaternionFunction operator*(const QuaternionFunction& a, const QuaternionFunction& b) {
  return {a.u * b.u - a.v * b.v - a.zeta * b.zeta - a.eta * b.eta,
          a.u * b.v + a.v * b.u + a.zeta * b.eta - a.eta * b.zeta,
          a.u * b.zeta - a.v * b.eta + a.zeta * b.u + a.eta * b.v,
          a.u * b.eta + a.v * b.zeta - a.zeta * b.v + a.eta * b.u};
}

QuaternionFunction operator+(const QuaternionFunction& a, const QuaternionFunction& b) {
  return {a.u + b.u, a.v + b.v, a.zeta + b.zeta, a.eta + b.eta};
}

Eigen::Matrix4d left_mult_matrix(const Eigen::Quaterniond& a) {
  Eigen::Matrix4d m;
  auto e = basis();
  for (int c = 0; c < 4; ++c) m.col(c) = coords(a * e[static_cast<std::size_t>(c)]);
  return m;
}

Eigen::Matrix4d right_mult_matrix(const Eigen::Quaterniond& a) {
  Eigen::Matrix4d m;
  auto e = basis();
  for (int c = 0; c < 4; ++c) m.col(c) = coords(e[static_cast<std::size_t>(c)] * a);
  return m;
}

ResidualReport matrix_form_residual(const AlmostComplexStructure& acs, const Eigen::Matrix4d& value,
                                    const QuaternionFunction& F, ModeRequest req) {
  check_dims(acs, F);
  const DiffMode mode = resolve_mode(req, F.is_expr());
  const int d = acs.dim();
  std::vector<ScalarField> parts;
  for (const auto& c : F.components())
    for (int a = 0; a < d; ++a) parts.push_back(diff(c, a, mode));
  std::vector<SamplePtr> s = sample_all(parts);
  MatrixSamples J = acs.j_cot.sample();
  const Patch& patch = F.patch();
  ResidualAccumulator acc("matrix form: j_cot D^T = D^T V^T", patch, mode);
  Eigen::MatrixXd Dt(d, 4);
  for (std::size_t n = 0; n < patch.size(); ++n) {
    if (!patch.is_interior(n)) continue;
    for (int c = 0; c < 4; ++c)
      for (int a = 0; a < d; ++a) Dt(a, c) = (*s[static_cast<std::size_t>(c * d + a)])[n];
    Eigen::MatrixXd r = Eigen::MatrixXd(J.at(n)) * Dt - Dt * value.transpose();
    static const char* names[4] = {"row u", "row v", "row zeta", "row eta"};
    for (int c = 0; c < 4; ++c) acc.add_part(static_cast<std::size_t>(c), names[c], r.col(c).norm());
    acc.add(n, r.cwiseAbs().maxCoeff());
  }
  return acc.finish();
}

ResidualReport j_hyperholo_residual(const HypercomplexStructure& h, const QuaternionFunction& F, ModeRequest mode) {
  check_dims(h.J, F);
  return max_report("J-hyperholomorphic: u+iv holomorphic, zeta+i eta antiholomorphic",
                    holo_residual(h.J, F.f(), mode), antiholo_residual(h.J, F.phi(), mode));
}

ResidualReport k_hyperholo_residual(const HypercomplexStructure& h, const QuaternionFunction& G, ModeRequest req) {
  check_dims(h.K, G);
  const DiffMode mode = resolve_mode(req, G.is_expr());
  const int d = h.K.dim();
  std::vector<ScalarField> parts;
  for (const auto& c : G.components())
    for (int a = 0; a < d; ++a) parts.push_back(diff(c, a, mode));
  std::vector<SamplePtr> s = sample_all(parts);
  MatrixSamples K = h.K.j_cot.sample();
  const Patch& patch = G.patch();
  ResidualAccumulator acc("K-hyperholomorphic: K*dG_a = sum_b (V_K)_ab dG_b", patch, mode);
  static const char* names[4] = {"K*du", "K*dv", "K*dzeta", "K*deta"};
  Eigen::MatrixXd grads(d, 4);
  for (std::size_t n = 0; n < patch.size(); ++n) {
    if (!patch.is_interior(n)) continue;
    for (int c = 0; c < 4; ++c)
      for (int a = 0; a < d; ++a) grads(a, c) = (*s[static_cast<std::size_t>(c * d + a)])[n];
    Eigen::MatrixXd kg = Eigen::MatrixXd(K.at(n)) * grads;
    double m = 0.0;
    for (int c = 0; c < 4; ++c) {
      Eigen::VectorXd r = kg.col(c);
      for (int b = 0; b < 4; ++b) r -= h.value_K(c, b) * grads.col(b);
      acc.add_part(static_cast<std::size_t>(c), names[c], r.norm());
      m = std::max(m, r.norm());
    }
    acc.add(n, m);
  }
  return acc.finish();
}

KTranslationReport k_translation_consistency(const HypercomplexStructure& h, const QuaternionFunction& G, double tol,
                                             ModeRequest mode) {
  if (h.value_K != quaternionic_standard().T.transpose())
    throw PreconditionFailed("K translation is stated for the value matrix T^T of the flat pair");
  KTranslationReport rep;
  rep.precondition = k_hyperholo_residual(h, G, mode).sup;
  if (rep.precondition > tol)
    throw PreconditionFailed("G is not K-hyperholomorphic (residual " + std::to_string(rep.precondition) + ")");
  // Each complex residual combines two of the four translated rows.
  rep.kappa = std::sqrt(2.0);
  rep.k_holo_u_zeta = holo_residual(h.K, ComplexField(G.u, G.zeta), mode);
  rep.k_holo_v_eta = holo_residual(h.K, ComplexField(G.v, G.eta), mode);
  rep.literal_antiholo_uv = antiholo_residual(h.J, ComplexField(G.u, G.v), mode);
  rep.literal_holo_zeta_eta = holo_residual(h.J, ComplexField(G.zeta, G.eta), mode);
  const double bound = rep.kappa * tol;
  rep.holds = rep.k_holo_u_zeta.sup <= bound && rep.k_holo_v_eta.sup <= bound;
  rep.literal_holds = rep.literal_antiholo_uv.sup <= bound && rep.literal_holo_zeta_eta.sup <= bound;
  return rep;
}

HyperPotentialReport hyper_potential_residual(const HypercomplexStructure& h, const ScalarField& u,
                                              const ScalarField& zeta, ModeRequest req) {
  if (h.J.dim() != u.patch().dim() || h.J.dim() != zeta.patch().dim())
    throw FieldError("hyper potential: dimension mismatch");
  if (!(h.J.patch() == u.patch()) || !(u.patch() == zeta.patch())) throw PatchMismatch();
  const DiffMode mode = resolve_mode(req, h.J.is_expr() && h.K.is_expr() && u.is_expr() && zeta.is_expr());
  TwoForm rj = potential_curvature(h.J, u, mode), rk = potential_curvature(h.K, zeta, mode);
  std::vector<ScalarField> all = rj.upper_entries();
  all.insert(all.end(), rk.upper_entries().begin(), rk.upper_entries().end());
  std::vector<SamplePtr> s = sample_all(all);
  const std::size_t pairs = rj.upper_entries().size();
  const Patch& patch = u.patch();
  ResidualAccumulator c("coupled: d(J*du) + d(K*dzeta) = 0", patch, mode), a("d(J*du) = 0", patch, mode),
      b("d(K*dzeta) = 0", patch, mode);
  bool triangle = true;
  for (std::size_t n = 0; n < patch.size(); ++n) {
    if (!patch.is_interior(n)) continue;
    double mc = 0, ma = 0, mb = 0;
    for (std::size_t k = 0; k < pairs; ++k) {
      const double x = (*s[k])[n], y = (*s[pairs + k])[n];
      mc = std::max(mc, std::abs(x + y));
      ma = std::max(ma, std::abs(x));
      mb = std::max(mb, std::abs(y));
    }
    if (mc > ma + mb) triangle = false;
    c.add(n, mc);
    a.add(n, ma);
    b.add(n, mb);
  }
  HyperPotentialReport rep;
  rep.coupled = c.finish();
  rep.j_part = a.finish();
  rep.k_part = b.finish();
  rep.triangle_holds = triangle && rep.coupled.sup <= rep.j_part.sup + rep.k_part.sup;
  const ModeRequest fixed = mode == DiffMode::Exact ? ModeRequest::Exact : ModeRequest::FiniteDifference;
  EllipticOperator oj = assemble_operator(h.J, fixed), ok = assemble_operator(h.K, fixed);
  rep.delta_j_u = interior_abs("Delta_J u", delta_j(oj, u, mode), mode);
  rep.delta_k_zeta = interior_abs("Delta_K zeta", delta_j(ok, zeta, mode), mode);
  return rep;
}

AffineFitReport affine_fit(const QuaternionFunction& F, double tol) {
  const Patch& patch = F.patch();
  const int d = patch.dim();
  std::vector<SamplePtr> s = sample_all(F.components());
  AffineFitReport rep;
  for (const auto& c : s)
    for (double v : *c) rep.scale = std::max(rep.scale, std::abs(v));

  auto fit = [&](int degree) {
    const int cols = 1 + d + (degree >= 2 ? d * (d + 1) / 2 : 0);
    Eigen::MatrixXd X(static_cast<Eigen::Index>(patch.size()), cols);
    std::vector<double> x(static_cast<std::size_t>(d));
    for (std::size_t n = 0; n < patch.size(); ++n) {
      patch.coords(n, x);
      const auto r = static_cast<Eigen::Index>(n);
      int k = 0;
      X(r, k++) = 1.0;
      for (int a = 0; a < d; ++a) X(r, k++) = x[static_cast<std::size_t>(a)];
      if (degree >= 2)
        for (int a = 0; a < d; ++a)
          for (int b = a; b < d; ++b) X(r, k++) = x[static_cast<std::size_t>(a)] * x[static_cast<std::size_t>(b)];
    }
    Eigen::ColPivHouseholderQR<Eigen::MatrixXd> qr(X);
    double worst = 0.0;
    for (const auto& c : s) {
      Eigen::Map<const Eigen::VectorXd> y(c->data(), static_cast<Eigen::Index>(c->size()));
      Eigen::VectorXd coef = qr.solve(y);
      worst = std::max(worst, (X * coef - y).cwiseAbs().maxCoeff());
    }
    return worst;
  };
  rep.affine_residual = fit(1);
  rep.quadratic_residual = fit(2);
  rep.affine = rep.affine_residual <= tol * std::max(1.0, rep.scale);
  return rep;
}

}  // namespace spencer
