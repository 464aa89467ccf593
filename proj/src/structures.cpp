#include "spencer/structures.hpp"

#include <cmath>
#include <limits>

namespace spencer {

namespace {

Eigen::MatrixXd pair_block() {
  Eigen::MatrixXd b(2, 2);
  b << 0, 1, -1, 0;
  return b;
}

Eigen::MatrixXd normal_form(int n) {
  Eigen::MatrixXd m = Eigen::MatrixXd::Zero(2 * n, 2 * n);
  m.topRightCorner(n, n) = Eigen::MatrixXd::Identity(n, n);
  m.bottomLeftCorner(n, n) = -Eigen::MatrixXd::Identity(n, n);
  return m;
}

struct SquareResidual {
  double value = 0.0;
  std::size_t node = 0;
};

// ||M^2 + E|| in the induced infinity norm and the 1-norm (the transpose).
SquareResidual square_residual(const MatrixSamples& s) {
  SquareResidual r;
  const int d = s.rows();
  for (std::size_t node = 0; node < s.nodes(); ++node) {
    Eigen::MatrixXd m = s.at(node);
    Eigen::MatrixXd e = m * m + Eigen::MatrixXd::Identity(d, d);
    double v = std::max(e.cwiseAbs().rowwise().sum().maxCoeff(), e.cwiseAbs().colwise().sum().maxCoeff());
    if (!(v <= r.value)) {
      r.value = v;
      r.node = node;
    }
  }
  return r;
}

double max_abs_node(const Eigen::MatrixXd& m) { return m.size() == 0 ? 0.0 : m.cwiseAbs().maxCoeff(); }

}  // namespace

Eigen::MatrixXd block_diagonal(const Eigen::MatrixXd& block, int copies) {
  const auto b = block.rows();
  Eigen::MatrixXd m = Eigen::MatrixXd::Zero(b * copies, b * copies);
  for (int k = 0; k < copies; ++k) m.block(k * b, k * b, b, b) = block;
  return m;
}

MatrixField diff(const MatrixField& m, int axis, DiffMode mode) {
  std::vector<ScalarField> e;
  for (const auto& x : m.entries()) e.push_back(diff(x, axis, mode));
  return MatrixField(m.rows(), m.cols(), std::move(e));
}

AlmostComplexStructure assess_acs(const MatrixField& m, Representation rep, double tol) {
  if (m.rows() != m.cols() || m.rows() % 2 != 0)
    throw FieldError("structure matrix must be square with even dimension, got " + std::to_string(m.rows()) + "x" +
                     std::to_string(m.cols()));
  if (m.rows() != m.patch().dim())
    throw FieldError("structure matrix dimension " + std::to_string(m.rows()) + " does not match patch dimension " +
                     std::to_string(m.patch().dim()));
  AlmostComplexStructure acs{rep == Representation::Cotangent ? m.transpose() : m,
                             rep == Representation::Cotangent ? m : m.transpose()};
  SquareResidual r = square_residual(acs.j_cot.sample());
  acs.acs_residual = r.value;
  acs.worst_node = r.node;
  acs.tolerance = tol;
  acs.valid = r.value <= tol;
  return acs;
}

AlmostComplexStructure validate_acs(const MatrixField& m, Representation rep, double tol) {
  AlmostComplexStructure acs = assess_acs(m, rep, tol);
  if (!acs.valid)
    throw InvalidStructure("not an almost-complex structure: ||J^2 + E|| = " + std::to_string(acs.acs_residual) +
                               " at node " + std::to_string(acs.worst_node),
                           acs.worst_node, acs.acs_residual);
  return acs;
}

AlmostComplexStructure standard_structure(PatchPtr patch) {
  const int n = patch->dim_half();
  return validate_acs(MatrixField::constant(patch, block_diagonal(pair_block(), n)));
}

AlmostComplexStructure normal_form_structure(PatchPtr patch) {
  return validate_acs(MatrixField::constant(patch, normal_form(patch->dim_half())));
}

AlmostComplexStructure pullback_structure(PatchPtr patch, const std::vector<Expr>& phi) {
  const int d = patch->dim();
  if (static_cast<int>(phi.size()) != d) throw FieldError("pullback map needs one expression per coordinate");
  std::vector<ScalarField> jac;
  for (int i = 0; i < d; ++i)
    for (int j = 0; j < d; ++j) jac.emplace_back(patch, symbolic_diff(phi[static_cast<std::size_t>(i)], j));
  MatrixField dphi(d, d, std::move(jac));
  MatrixField dphi_t = dphi.transpose();
  MatrixField inv_t = inverse(dphi_t, "Jacobian of the pullback map");
  MatrixField j0 = MatrixField::constant(patch, block_diagonal(pair_block(), d / 2));
  return validate_acs(dphi_t * j0 * inv_t);
}

// ---- (P,Q) ----------------------------------------------------------------

PQPair make_pq(MatrixField P, MatrixField Q) {
  if (P.rows() != P.cols() || Q.rows() != Q.cols() || P.rows() != Q.rows())
    throw FieldError("P and Q must be square of the same size");
  if (2 * P.rows() != P.patch().dim()) throw FieldError("P and Q must be n x n on a 2n-dimensional patch");
  if (P.patch_ptr() != Q.patch_ptr() && !(P.patch() == Q.patch())) throw PatchMismatch();
  InvertibilityReport rep = check_invertible(Q.sample());
  if (!rep.invertible) throw SingularMatrix(rep.worst_node, "Q");
  return PQPair{std::move(P), std::move(Q), rep.max_condition};
}

MatrixField pq_matrix(const PQPair& pq) {
  MatrixField qi = inverse(pq.Q, "Q");
  MatrixField pqi = pq.P * qi;
  return MatrixField::from_blocks(-1.0 * pqi, -1.0 * (pqi * pq.P) - pq.Q, qi, qi * pq.P);
}

AlmostComplexStructure reconstruct_from_pq(const PQPair& pq, double tol) { return validate_acs(pq_matrix(pq), Representation::Cotangent, tol); }

BlockDecomposition normalize_at_origin(const AlmostComplexStructure& acs, std::size_t base_node) {
  const Patch& patch = acs.patch();
  if (base_node >= patch.size()) throw FieldError("base node outside the patch");
  const int d = acs.dim();
  const int n = d / 2;
  Eigen::MatrixXd M = acs.j_cot.value_at(patch.coords(base_node));

  // Re/Im of the +i eigenvectors (E - iM) e_k: columns e_k and -M e_k.
  Eigen::MatrixXd g1(d, 0), g2(d, 0);
  for (int k = 0; k < d && g1.cols() < n; ++k) {
    Eigen::MatrixXd t1(d, g1.cols() + 1), t2(d, g2.cols() + 1);
    t1 << g1, Eigen::VectorXd::Unit(d, k);
    t2 << g2, -M.col(k);
    Eigen::MatrixXd both(d, 2 * t1.cols());
    both << t1, t2;
    Eigen::FullPivLU<Eigen::MatrixXd> lu(both);
    lu.setThreshold(1e-10);
    if (lu.rank() == both.cols()) {
      g1 = t1;
      g2 = t2;
    }
  }
  if (g1.cols() != n) throw InvalidStructure("no normalizing frame at the base node", base_node, 0.0);

  Eigen::MatrixXd G(d, d);
  G << g1, g2;
  Eigen::MatrixXd G_inv = G.inverse();
  MatrixField normalized = G_inv * acs.j_cot * G;
  auto id = MatrixField::identity(acs.patch_ptr(), n);
  BlockDecomposition bd{G,
                        G_inv,
                        base_node,
                        normalized,
                        normalized.block(0, 0, n, n),
                        normalized.block(0, n, n, n) - id,
                        normalized.block(n, 0, n, n) + id,
                        normalized.block(n, n, n, n)};

  // C - E is a perturbation of -E, so its scale is at least 1.
  InvertibilityReport rep = check_invertible((bd.C - id).sample(), 1e-12, 1e12, 1.0);
  if (!rep.invertible)
    throw SingularMatrix(rep.worst_node, "C - E (structure leaves the normalized neighbourhood, try a smaller patch)");
  return bd;
}

double BlockIdentityResiduals::max() const {
  double m = reassembly;
  for (double v : identities) m = std::max(m, v);
  return m;
}

BlockIdentityResiduals block_identities_residual(const BlockDecomposition& bd, const AlmostComplexStructure& acs) {
  const int n = bd.n();
  const Eigen::MatrixXd E = Eigen::MatrixXd::Identity(n, n);
  MatrixSamples a = bd.A.sample(), b = bd.B.sample(), c = bd.C.sample(), dd = bd.D.sample();
  MatrixSamples j = acs.j_cot.sample();
  BlockIdentityResiduals r;
  for (std::size_t node = 0; node < a.nodes(); ++node) {
    Eigen::MatrixXd A = a.at(node), BE = Eigen::MatrixXd(b.at(node)) + E, CE = Eigen::MatrixXd(c.at(node)) - E,
                    D = dd.at(node);
    Eigen::MatrixXd full(2 * n, 2 * n);
    full << A, BE, CE, D;
    Eigen::MatrixXd direct = bd.G_inv * Eigen::MatrixXd(j.at(node)) * bd.G;
    r.reassembly = std::max(r.reassembly, max_abs_node(full - direct));
    r.identities[0] = std::max(r.identities[0], max_abs_node(A * A + BE * CE + E));
    r.identities[1] = std::max(r.identities[1], max_abs_node(A * BE + BE * D));
    r.identities[2] = std::max(r.identities[2], max_abs_node(CE * A + D * CE));
    r.identities[3] = std::max(r.identities[3], max_abs_node(CE * BE + D * D + E));
  }
  return r;
}

PQPair extract_pq(const BlockDecomposition& bd) {
  MatrixField q = inverse(bd.C - MatrixField::identity(bd.C.patch_ptr(), bd.n()), "C - E");
  return make_pq(q * bd.D, q);
}

// ---- quaternionic ----------------------------------------------------------

QuaternionicPair quaternionic_standard() {
  QuaternionicPair p;
  p.S << 0, 1, 0, 0,  //
      -1, 0, 0, 0,    //
      0, 0, 0, -1,    //
      0, 0, 1, 0;
  p.T << 0, 0, 1, 0,  //
      0, 0, 0, 1,     //
      -1, 0, 0, 0,    //
      0, -1, 0, 0;
  return p;
}

HypercomplexStructure make_hypercomplex(AlmostComplexStructure J, AlmostComplexStructure K,
                                        const Eigen::Matrix4d& value_J, const Eigen::Matrix4d& value_K, double tol) {
  if (J.dim() != K.dim() || J.dim() % 4 != 0) throw FieldError("hypercomplex structures need dimension 4n");
  if (!(J.patch() == K.patch())) throw PatchMismatch();
  HypercomplexStructure h{std::move(J), std::move(K), 0.0, false, value_J, value_K};
  MatrixSamples jt = h.J.j_tan.sample(), kt = h.K.j_tan.sample();
  for (std::size_t node = 0; node < jt.nodes(); ++node) {
    Eigen::MatrixXd a = jt.at(node), b = kt.at(node);
    Eigen::MatrixXd s = a * b + b * a;
    h.anti_residual = std::max(h.anti_residual, s.cwiseAbs().rowwise().sum().maxCoeff());
  }
  h.valid = h.J.valid && h.K.valid && h.anti_residual <= tol;
  return h;
}

HypercomplexStructure flat_hypercomplex(PatchPtr patch) { return conjugated_hypercomplex(std::move(patch), Eigen::Matrix4d::Identity()); }

HypercomplexStructure conjugated_hypercomplex(PatchPtr patch, const Eigen::Matrix4d& G) {
  if (patch->dim() % 4 != 0) throw FieldError("hypercomplex structures need dimension 4n");
  const int blocks = patch->dim() / 4;
  QuaternionicPair st = quaternionic_standard();
  Eigen::Matrix4d gi = G.inverse();
  Eigen::MatrixXd js = gi * st.S * G, ks = gi * st.T * G;
  auto J = validate_acs(MatrixField::constant(patch, block_diagonal(js, blocks)));
  auto K = validate_acs(MatrixField::constant(patch, block_diagonal(ks, blocks)));
  return make_hypercomplex(std::move(J), std::move(K), st.S.transpose(), st.T.transpose());
}

AlmostComplexStructure twistor_structure(const HypercomplexStructure& h, double b, double c, double d) {
  if (std::abs(b * b + c * c + d * d - 1.0) > 1e-12) throw FieldError("twistor coefficients must lie on the unit sphere");
  MatrixField t = b * h.J.j_tan + c * h.K.j_tan + d * (h.J.j_tan * h.K.j_tan);
  return assess_acs(t, Representation::Tangent, h.J.tolerance);
}

Eigen::Matrix4d twistor_value_matrix(const HypercomplexStructure& h, double b, double c, double d) {
  return b * h.value_J + c * h.value_K + d * h.value_J * h.value_K;
}

NijenhuisReport nijenhuis_residual(const AlmostComplexStructure& acs, ModeRequest req) {
  NijenhuisReport rep;
  const Patch& patch = acs.patch();
  const int d = acs.dim();
  rep.mode = resolve_mode(req, acs.j_tan.is_expr());
  MatrixSamples J = acs.j_tan.sample();
  std::vector<MatrixSamples> dJ;
  for (int h = 0; h < d; ++h) dJ.push_back(diff(acs.j_tan, h, rep.mode).sample());

  for (std::size_t node = 0; node < patch.size(); ++node) {
    if (!patch.is_interior(node)) continue;
    auto Jn = J.at(node);
    for (int i = 0; i < d; ++i)
      for (int j = i + 1; j < d; ++j)
        for (int k = 0; k < d; ++k) {
          double v = 0.0;
          for (int h = 0; h < d; ++h) {
            v += Jn(h, i) * dJ[static_cast<std::size_t>(h)].at(node)(k, j);
            v -= Jn(h, j) * dJ[static_cast<std::size_t>(h)].at(node)(k, i);
            v += Jn(k, h) * dJ[static_cast<std::size_t>(j)].at(node)(h, i);
            v -= Jn(k, h) * dJ[static_cast<std::size_t>(i)].at(node)(h, j);
          }
          if (std::abs(v) > rep.sup) {
            rep.sup = std::abs(v);
            rep.worst_node = node;
          }
        }
  }
  return rep;
}

}  // namespace spencer
