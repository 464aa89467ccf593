#pragma once

// Quaternion-valued functions F = u + iv + j zeta + k eta on R^{4n} and their
// hyperholomorphy with respect to a hypercomplex pair (J, K).
//
// Matrix form: with value matrix V (4x4), F is hyperholomorphic for a
// structure when j_cot grad F_a = sum_b V_ab grad F_b for each component
// a in (u, v, zeta, eta). For the flat pair V_J = S^T (right multiplication
// by i) and V_K = T^T (right multiplication by j). Splittings:
//   F = f + phi j,   f = u + iv,   phi = zeta + i eta,
// and for K the pairs u + i zeta, v + i eta (j identified with i).

#include <Eigen/Geometry>

#include "spencer/elliptic.hpp"
#include "spencer/holomorphy.hpp"

namespace spencer {

struct QuaternionFunction {
  ScalarField u, v, zeta, eta;

  static QuaternionFunction parse(const PatchPtr& p, const std::string& u, const std::string& v,
                                  const std::string& zeta, const std::string& eta);
  static QuaternionFunction constant(const PatchPtr& p, const Eigen::Quaterniond& q);
  /// q = x_{4k+1} + i x_{4k+2} + j x_{4k+3} + k x_{4k+4}.
  static QuaternionFunction coordinate(const PatchPtr& p, int block = 0);

  const Patch& patch() const { return u.patch(); }
  const PatchPtr& patch_ptr() const { return u.patch_ptr(); }
  bool is_expr() const { return u.is_expr() && v.is_expr() && zeta.is_expr() && eta.is_expr(); }
  std::vector<ScalarField> components() const { return {u, v, zeta, eta}; }

  ComplexField f() const { return {u, v}; }
  ComplexField phi() const { return {zeta, eta}; }
  QuaternionFunction conj() const { return {u, -v, -zeta, -eta}; }
};

/// Hamilton product, ij = k.
QuaternionFunction operator*(const QuaternionFunction& a, const QuaternionFunction& b);
QuaternionFunction operator+(const QuaternionFunction& a, const QuaternionFunction& b);

/// 4x4 real matrices of x -> a x and x -> x a on (1, i, j, k) coordinates.
Eigen::Matrix4d left_mult_matrix(const Eigen::Quaterniond& a);
Eigen::Matrix4d right_mult_matrix(const Eigen::Quaterniond& a);

/// max over interior nodes of |j_cot D^T - D^T V^T|, D the 4 x 4n Jacobian of F.
ResidualReport matrix_form_residual(const AlmostComplexStructure& acs, const Eigen::Matrix4d& value, const QuaternionFunction& F,
                                    ModeRequest mode = ModeRequest::Auto);

/// max(holo_residual(J, u+iv), antiholo_residual(J, zeta+i eta)).
ResidualReport j_hyperholo_residual(const HypercomplexStructure& h, const QuaternionFunction& F,
                                    ModeRequest mode = ModeRequest::Auto);

/// Max over nodes of the four K-translated 1-form residuals
///   K*dG_a - sum_b (V_K)_ab dG_b,
/// which for the flat pair read K*du = -dzeta, K*dv = -deta, K*dzeta = du, K*deta = dv.
ResidualReport k_hyperholo_residual(const HypercomplexStructure& h, const QuaternionFunction& G,
                                    ModeRequest mode = ModeRequest::Auto);

class PreconditionFailed : public FieldError {
 public:
  using FieldError::FieldError;
};

struct KTranslationReport {
  double precondition = 0.0;  // k_hyperholo_residual sup
  double kappa = 0.0;         // residual conversion factor between the two forms
  ResidualReport k_holo_u_zeta;  // holo_residual(K, u + i zeta)
  ResidualReport k_holo_v_eta;   // holo_residual(K, v + i eta)
  // Literal reading: u + iv J-antiholomorphic and zeta + i eta J-holomorphic.
  // Reported only; it fails already for G = q.
  ResidualReport literal_antiholo_uv;
  ResidualReport literal_holo_zeta_eta;
  bool holds = false;          // corrected statements within kappa * tol
  bool literal_holds = false;  // literal statements within kappa * tol
};

/// Requires the flat value matrix V_K = T^T; throws PreconditionFailed when G
/// is not K-hyperholomorphic within tol.
KTranslationReport k_translation_consistency(const HypercomplexStructure& h, const QuaternionFunction& G,
                                             double tol = 1e-10, ModeRequest mode = ModeRequest::Auto);

struct HyperPotentialReport {
  ResidualReport coupled;  // |d(J*du) + d(K*dzeta)|
  ResidualReport j_part;   // |d(J*du)|
  ResidualReport k_part;   // |d(K*dzeta)|
  ResidualReport delta_j_u;
  ResidualReport delta_k_zeta;
  bool triangle_holds = false;  // coupled <= j_part + k_part pointwise (sup)
};

HyperPotentialReport hyper_potential_residual(const HypercomplexStructure& h, const ScalarField& u,
                                              const ScalarField& zeta, ModeRequest mode = ModeRequest::Auto);

struct AffineFitReport {
  double affine_residual = 0.0;     // max error of the least-squares degree-1 fit
  double quadratic_residual = 0.0;  // same with degree 2
  double scale = 0.0;               // max |F|
  bool affine = false;              // affine_residual <= tol * max(1, scale)
};

/// Least-squares polynomial fits of the four components over all nodes.
AffineFitReport affine_fit(const QuaternionFunction& F, double tol = 1e-10);

}  // namespace spencer
