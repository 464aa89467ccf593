#include "spencer/holomorphy.hpp"

#include <cmath>
#include <limits>

namespace spencer {

namespace {

const cplx I(0.0, 1.0);

DiffMode mode_for(ModeRequest req, const ComplexField& f) { return resolve_mode(req, f.is_expr()); }

ResidualReport cr_residual(const AlmostComplexStructure& acs, const ComplexField& f, ModeRequest req, double sign,
                           const char* check) {
  if (acs.dim() != f.patch().dim()) throw FieldError("structure and function dimensions differ");
  if (!(acs.patch() == f.patch())) throw PatchMismatch();
  const DiffMode mode = mode_for(req, f);
  const Patch& patch = f.patch();
  MatrixSamples j = acs.j_cot.sample();
  std::vector<Eigen::VectorXcd> g = complex_gradient(f, mode);
  ResidualAccumulator acc(check, patch, mode);
  for (std::size_t node = 0; node < patch.size(); ++node) {
    if (!patch.is_interior(node)) continue;
    const Eigen::VectorXcd& gn = g[node];
    Eigen::VectorXd gu = gn.real(), gv = gn.imag();
    // Real and imaginary parts of J*df - sign*i df.
    Eigen::VectorXd re = j.at(node) * gu + sign * gv;
    Eigen::VectorXd im = j.at(node) * gv - sign * gu;
    acc.add_part(0, sign > 0 ? "J*du + dv" : "J*du - dv", re.norm());
    acc.add_part(1, sign > 0 ? "J*dv - du" : "J*dv + du", im.norm());
    acc.add(node, std::sqrt(re.squaredNorm() + im.squaredNorm()));
  }
  return acc.finish();
}

Eigen::MatrixXcd to_complex(const Eigen::MatrixXd& m) { return m.cast<cplx>(); }

}  // namespace

std::vector<Eigen::VectorXcd> complex_gradient(const ComplexField& f, DiffMode mode) {
  const Patch& patch = f.patch();
  const int d = patch.dim();
  std::vector<ScalarField> parts;
  for (int a = 0; a < d; ++a) parts.push_back(diff(f.re, a, mode));
  for (int a = 0; a < d; ++a) parts.push_back(diff(f.im, a, mode));
  std::vector<SamplePtr> s = sample_all(parts);
  std::vector<Eigen::VectorXcd> out(patch.size(), Eigen::VectorXcd(d));
  for (std::size_t node = 0; node < patch.size(); ++node)
    for (int a = 0; a < d; ++a)
      out[node][a] = cplx((*s[static_cast<std::size_t>(a)])[node], (*s[static_cast<std::size_t>(d + a)])[node]);
  return out;
}

ResidualReport holo_residual(const AlmostComplexStructure& acs, const ComplexField& f, ModeRequest mode) {
  return cr_residual(acs, f, mode, 1.0, "almost-holomorphic: J*df = i df");
}

ResidualReport antiholo_residual(const AlmostComplexStructure& acs, const ComplexField& f, ModeRequest mode) {
  return cr_residual(acs, f, mode, -1.0, "almost-antiholomorphic: J*df = -i df");
}

ResidualReport reduced_system_residual(const BlockDecomposition& bd, const PQPair& pq, const ComplexField& f,
                                       ModeRequest req) {
  const int n = bd.n();
  if (pq.P.rows() != n || 2 * n != f.patch().dim()) throw FieldError("reduced system: dimension mismatch");
  const DiffMode mode = mode_for(req, f);
  const Patch& patch = f.patch();
  MatrixSamples P = pq.P.sample(), Q = pq.Q.sample();
  std::vector<Eigen::VectorXcd> g = complex_gradient(f, mode);
  const Eigen::MatrixXcd Ginv = to_complex(bd.G_inv);
  ResidualAccumulator acc("reduced system: g1 + (P - iQ) g2 = 0", patch, mode);
  for (std::size_t node = 0; node < patch.size(); ++node) {
    if (!patch.is_interior(node)) continue;
    Eigen::VectorXcd gn = Ginv * g[node];
    Eigen::MatrixXcd op = to_complex(P.at(node)) - I * to_complex(Q.at(node));
    Eigen::VectorXcd r = gn.head(n) + op * gn.tail(n);
    for (int k = 0; k < n; ++k) acc.add_part(static_cast<std::size_t>(k), "equation " + std::to_string(k + 1), std::abs(r[k]));
    acc.add(node, r.norm());
  }
  return acc.finish();
}

ReductionReport reduction_equivalence_check(const AlmostComplexStructure& acs, const BlockDecomposition& bd,
                                            const PQPair& pq, const ComplexField& f, ModeRequest req, double tol) {
  const int n = bd.n();
  const int d = 2 * n;
  if (acs.dim() != d) throw FieldError("reduction check: dimension mismatch");
  ReductionReport rep;
  rep.reduced = reduced_system_residual(bd, pq, f, req);
  const DiffMode mode = rep.reduced.mode;
  const Patch& patch = f.patch();
  MatrixSamples J = acs.j_cot.sample();
  std::vector<Eigen::VectorXcd> g = complex_gradient(f, mode);
  MatrixSamples P = pq.P.sample(), Q = pq.Q.sample();
  const Eigen::MatrixXcd E = Eigen::MatrixXcd::Identity(n, n);
  const Eigen::MatrixXcd Ginv = to_complex(bd.G_inv);
  ResidualAccumulator full("normalized full system: (J' - iE) g = 0", patch, mode);
  rep.bound_excess = -std::numeric_limits<double>::infinity();

  for (std::size_t node = 0; node < patch.size(); ++node) {
    Eigen::MatrixXd jp = bd.G_inv * Eigen::MatrixXd(J.at(node)) * bd.G;
    Eigen::MatrixXcd A = to_complex(jp.topLeftCorner(n, n)), BE = to_complex(jp.topRightCorner(n, n)),
                     CE = to_complex(jp.bottomLeftCorner(n, n)), D = to_complex(jp.bottomRightCorner(n, n));
    Eigen::PartialPivLU<Eigen::MatrixXcd> lu(CE);
    Eigen::MatrixXcd mult = (A - I * E) * lu.inverse();
    Eigen::MatrixXcd left(n, d), right(n, d);
    left << A - I * E, BE;
    right << CE, D - I * E;
    rep.block_identity = std::max(rep.block_identity, (left - mult * right).cwiseAbs().maxCoeff());

    if (!patch.is_interior(node)) continue;
    Eigen::VectorXcd gn = Ginv * g[node];
    Eigen::VectorXcd fullv = (to_complex(jp) - I * Eigen::MatrixXcd::Identity(d, d)) * gn;
    Eigen::VectorXcd r = gn.head(n) + (to_complex(P.at(node)) - I * to_complex(Q.at(node))) * gn.tail(n);
    Eigen::JacobiSVD<Eigen::MatrixXcd> s1(mult), s2(CE);
    double kappa = (s1.singularValues()(0) + 1.0) * s2.singularValues()(0);
    rep.kappa_max = std::max(rep.kappa_max, kappa);
    rep.bound_excess = std::max(rep.bound_excess, fullv.norm() - kappa * r.norm());
    full.add(node, fullv.norm());
  }
  rep.full = full.finish();
  rep.identity_holds = rep.block_identity <= tol;
  // Roundoff allowance relative to the size of the gradient terms involved.
  rep.bound_holds = rep.bound_excess <= tol * std::max(1.0, rep.kappa_max);
  return rep;
}

}  // namespace spencer
