#pragma once

// Almost-complex and quaternionic structures on a patch.
//
// Conventions used everywhere in the library:
//   j_tan(k, j) = J^k_j       (JX)^k = sum_j J^k_j X^j on tangent vectors;
//   j_cot = transpose(j_tan)  row q is J_q, so (J*du)_q = sum_p J_q^p d_p u.
// The standard structure has j_cot = [[0,1],[-1,0]] on every coordinate pair
// (x1,x2), (x3,x4), ..., which makes z = x1 + i x2 holomorphic.

#include <array>
#include <cstddef>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "spencer/field.hpp"
#include "spencer/linalg.hpp"

namespace spencer {

enum class Representation { Tangent, Cotangent };

class InvalidStructure : public FieldError {
 public:
  InvalidStructure(const std::string& what, std::size_t node, double residual)
      : FieldError(what), node_(node), residual_(residual) {}
  std::size_t node() const { return node_; }
  double residual() const { return residual_; }

 private:
  std::size_t node_;
  double residual_;
};

struct AlmostComplexStructure {
  MatrixField j_tan;
  MatrixField j_cot;
  double acs_residual = 0.0;  // max over nodes of ||J^2 + E||_inf, both representations
  std::size_t worst_node = 0;
  double tolerance = 1e-8;
  bool valid = false;

  int dim() const { return j_cot.rows(); }
  int dim_half() const { return j_cot.rows() / 2; }
  const Patch& patch() const { return j_cot.patch(); }
  const PatchPtr& patch_ptr() const { return j_cot.patch_ptr(); }
  bool is_expr() const { return j_cot.is_expr(); }
};

/// Computes the residual and validity flag; only shape errors throw.
AlmostComplexStructure assess_acs(const MatrixField& m, Representation rep = Representation::Cotangent,
                                  double tol = 1e-8);
/// As assess_acs, but throws InvalidStructure (with the worst node) when invalid.
AlmostComplexStructure validate_acs(const MatrixField& m, Representation rep = Representation::Cotangent,
                                    double tol = 1e-8);

/// j_cot = [[0,1],[-1,0]] on each interleaved coordinate pair.
AlmostComplexStructure standard_structure(PatchPtr patch);
/// j_cot = [[0,E],[-E,0]], the normalized form.
AlmostComplexStructure normal_form_structure(PatchPtr patch);
/// Structure induced from the standard one by the map phi (2n coordinate
/// expressions): j_cot = D(phi)^T J0_cot D(phi)^{-T}. Integrable; a function
/// f is holomorphic for it iff f = g o phi with g classically holomorphic.
AlmostComplexStructure pullback_structure(PatchPtr patch, const std::vector<Expr>& phi);

// ---- (P,Q) moduli -------------------------------------------------------

struct PQPair {
  MatrixField P;
  MatrixField Q;
  double q_condition = 0.0;
};

/// Checks shapes and invertibility of Q at every node (throws SingularMatrix).
PQPair make_pq(MatrixField P, MatrixField Q);

/// j_cot = [[-P Q^-1, -P Q^-1 P - Q], [Q^-1, Q^-1 P]].
MatrixField pq_matrix(const PQPair& pq);
AlmostComplexStructure reconstruct_from_pq(const PQPair& pq, double tol = 1e-8);

struct BlockDecomposition {
  Eigen::MatrixXd G;
  Eigen::MatrixXd G_inv;
  std::size_t base_node = 0;
  MatrixField normalized;  // G^-1 j_cot G = [[A, B+E], [C-E, D]]
  MatrixField A, B, C, D;
  int n() const { return A.rows(); }
};

/// Constant G with G^-1 j_cot(base) G = [[0,E],[-E,0]], then the block fields.
/// Columns of G are Re and Im of the +i eigenvectors (E - i M) e_k of
/// M = j_cot(base), chosen greedily among the coordinate directions.
/// Throws SingularMatrix when C - E degenerates somewhere on the patch.
BlockDecomposition normalize_at_origin(const AlmostComplexStructure& acs, std::size_t base_node);

struct BlockIdentityResiduals {
  double reassembly = 0.0;  // [[A,B+E],[C-E,D]] against G^-1 j_cot G
  std::array<double, 4> identities{};
  double max() const;
};

/// A^2+(B+E)(C-E) = -E, A(B+E)+(B+E)D = 0, (C-E)A+D(C-E) = 0, (C-E)(B+E)+D^2 = -E.
BlockIdentityResiduals block_identities_residual(const BlockDecomposition& bd, const AlmostComplexStructure& acs);

/// P = (C-E)^-1 D, Q = (C-E)^-1.
PQPair extract_pq(const BlockDecomposition& bd);

// ---- quaternionic structures ---------------------------------------------

struct QuaternionicPair {
  Eigen::Matrix4d S;
  Eigen::Matrix4d T;
};
QuaternionicPair quaternionic_standard();

struct HypercomplexStructure {
  AlmostComplexStructure J;
  AlmostComplexStructure K;
  double anti_residual = 0.0;  // max ||JK + KJ||_inf
  bool valid = false;
  // Value-side matrices V with j_cot grad F_a = sum_b V_ab grad F_b for the
  // hyperholomorphic maps of each structure (4x4, applied per quaternion slot).
  Eigen::Matrix4d value_J;
  Eigen::Matrix4d value_K;
  const Patch& patch() const { return J.patch(); }
  const PatchPtr& patch_ptr() const { return J.patch_ptr(); }
};

HypercomplexStructure make_hypercomplex(AlmostComplexStructure J, AlmostComplexStructure K,
                                        const Eigen::Matrix4d& value_J, const Eigen::Matrix4d& value_K,
                                        double tol = 1e-8);
/// j_cot(J) = S and j_cot(K) = T on each 4-block of R^{4n}.
HypercomplexStructure flat_hypercomplex(PatchPtr patch);
/// Constant conjugate G^-1 (S,T) G of the flat pair (cotangent side), 4x4 G applied per block.
HypercomplexStructure conjugated_hypercomplex(PatchPtr patch, const Eigen::Matrix4d& G);

/// b J + c K + d JK (tangent side). Throws if |b^2+c^2+d^2-1| > 1e-12.
AlmostComplexStructure twistor_structure(const HypercomplexStructure& h, double b, double c, double d);
/// Value matrix paired with twistor_structure(h, b, c, d).
Eigen::Matrix4d twistor_value_matrix(const HypercomplexStructure& h, double b, double c, double d);

struct NijenhuisReport {
  double sup = 0.0;
  std::size_t worst_node = 0;
  DiffMode mode = DiffMode::Exact;
};

/// max over interior nodes, coordinate pairs i<j and components k of
/// N^k_ij = J^h_i d_h J^k_j - J^h_j d_h J^k_i + J^k_h d_j J^h_i - J^k_h d_i J^h_j.
NijenhuisReport nijenhuis_residual(const AlmostComplexStructure& acs, ModeRequest mode = ModeRequest::Auto);

// ---- helpers shared by other modules --------------------------------------

/// d_axis of every entry.
MatrixField diff(const MatrixField& m, int axis, DiffMode mode);
/// Block diagonal repetition of a constant block over the patch dimension.
Eigen::MatrixXd block_diagonal(const Eigen::MatrixXd& block, int copies);

}  // namespace spencer
