#pragma once

// Potential forms w = J*du, the operator
//   Delta_J u = sum_{s,p} A_sp d_s d_p u + sum_p B_p d_p u,
//   A_sp = sum_q J_q^s J_q^p + delta_sp          (A = j_cot^T j_cot + E),
//   B_p  = sum_{s,q} J_q^s (d_s J_q^p - d_q J_s^p),
// its discretization, and a Dirichlet solver. With these orientations
// Delta_J u = sum_{s,q} J_q^s (dw)_sq holds identically for every u.

#include <cstdint>
#include <string>
#include <vector>

#include <Eigen/Sparse>

#include "spencer/report.hpp"
#include "spencer/structures.hpp"

namespace spencer {

/// w_q = sum_p J_q^p d_p u.
OneForm potential_form(const AlmostComplexStructure& acs, const ScalarField& u, DiffMode mode);

/// R = d(J*du). FD mode expands the product rule with direct second
/// differences of u (nested first differences lose an order at the boundary).
TwoForm potential_curvature(const AlmostComplexStructure& acs, const ScalarField& u, DiffMode mode);

/// sup over interior nodes of |(dw)_sq|, s < q, w = J*du. In FD mode dw is
/// expanded by the product rule with direct second differences of u.
ResidualReport potential_closedness_residual(const AlmostComplexStructure& acs, const ScalarField& u,
                                             ModeRequest mode = ModeRequest::Auto);

struct EllipticOperator {
  MatrixField j_cot;
  MatrixField A;
  std::vector<ScalarField> B;
  DiffMode mode = DiffMode::Exact;  // how B was differentiated
  /// Rows for interior nodes: central second-order stencil over all nodes.
  /// Boundary rows are empty.
  Eigen::SparseMatrix<double, Eigen::RowMajor> stencil;

  const Patch& patch() const { return j_cot.patch(); }
  const PatchPtr& patch_ptr() const { return j_cot.patch_ptr(); }
};

/// Throws InvalidStructure for an invalid acs, PatchTooCoarse below 3 points
/// per axis (5 when B needs finite differences).
EllipticOperator assemble_operator(const AlmostComplexStructure& acs, ModeRequest mode = ModeRequest::Auto);

struct EllipticityReport {
  double min_quadratic = 0.0;       // min xi^T A xi over sampled unit xi
  double min_eigenvalue = 0.0;      // min over nodes of lambda_min(A)
  double identity_defect = 0.0;     // max |xi^T A xi - |J xi|^2 - |xi|^2|
  double symmetry_defect = 0.0;     // max |A - A^T|
  std::size_t worst_node = 0;
  Eigen::VectorXd worst_xi;
  std::size_t samples = 0;
  bool passed = false;
};

EllipticityReport ellipticity_certificate(const EllipticOperator& op, std::size_t samples = 10000,
                                          std::uint64_t seed = 1, double tol = 1e-10);

/// Stencil application; boundary nodes are set to 0.
ScalarField apply_operator(const EllipticOperator& op, const ScalarField& u);

/// Delta_J u: symbolic in exact mode, the stencil applied in FD mode
/// (boundary nodes 0).
ScalarField delta_j(const EllipticOperator& op, const ScalarField& u, DiffMode mode);

/// sup |Delta_J u - sum_{s,q} J_q^s R_sq| with R = d(J*du), interior nodes.
ResidualReport contraction_identity_residual(const AlmostComplexStructure& acs, const ScalarField& u,
                                             ModeRequest mode = ModeRequest::Auto);

struct TheoremReport {
  ResidualReport closedness;
  ResidualReport delta;        // |Delta_J u|
  ResidualReport contraction;  // identity defect, used as the mode tolerance
  double j_sup = 0.0;          // max |J_q^p|
  double bound = 0.0;          // 2n(2n-1) j_sup closedness + contraction + 1e-10
  bool bound_holds = false;
};

/// |Delta_J u| <= sum_{s != q} |J_q^s| |R_sq| <= 2n(2n-1) max|J| max|R|.
TheoremReport theorem_check(const AlmostComplexStructure& acs, const ScalarField& u,
                            ModeRequest mode = ModeRequest::Auto);

enum class SolverMethod { Auto, Direct, Iterative };

struct DirichletProblem {
  const EllipticOperator* op = nullptr;
  ScalarField boundary;  // only boundary-node values are used
  double tolerance = 1e-8;
  int max_iterations = 2000;
  int restart = 60;
  SolverMethod method = SolverMethod::Auto;
  std::size_t direct_limit = 20000;
};

struct DirichletResult {
  ScalarField solution;
  std::string method;
  int iterations = 0;
  double residual = 0.0;  // ||L x - b|| / ||b|| on the interior system
  bool converged = false;
  bool monotone = false;  // all interior off-diagonal stencil weights >= 0
  double peclet = 0.0;    // max |B| h / lambda_min(A)
  bool peclet_warning = false;
  double boundary_min = 0.0, boundary_max = 0.0;
  double interior_min = 0.0, interior_max = 0.0;
};

DirichletResult solve_dirichlet(const DirichletProblem& p);

}  // namespace spencer
