#pragma once

// Cauchy-Riemann residuals. For f = u + iv the defect of J*df = i df at a
// node is the complex vector
//   (j_cot grad u + grad v) + i (j_cot grad v - grad u),
// and the residual is its Euclidean norm (both real equations together).

#include <complex>
#include <vector>

#include "spencer/report.hpp"
#include "spencer/structures.hpp"

namespace spencer {

using ComplexFunction = ComplexField;

/// Gradient of a complex function as node-major complex vectors.
std::vector<Eigen::VectorXcd> complex_gradient(const ComplexField& f, DiffMode mode);

ResidualReport holo_residual(const AlmostComplexStructure& acs, const ComplexField& f,
                             ModeRequest mode = ModeRequest::Auto);
/// Same with J*df = -i df.
ResidualReport antiholo_residual(const AlmostComplexStructure& acs, const ComplexField& f,
                                 ModeRequest mode = ModeRequest::Auto);

/// Residual of the n reduced equations  g1 + (P - iQ) g2 = 0, where
/// g = G^-1 grad f is the gradient in the normalized frame of `bd` and
/// g1, g2 are its first and last n components. (P - iQ equals
/// (C-E)^-1 (D - iE) for the pair extracted from bd.)
ResidualReport reduced_system_residual(const BlockDecomposition& bd, const PQPair& pq, const ComplexField& f,
                                       ModeRequest mode = ModeRequest::Auto);

struct ReductionReport {
  double block_identity = 0.0;  // max |[A-iE, B+E] - (A-iE)(C-E)^-1 [C-E, D-iE]|
  ResidualReport full;          // |(J' - iE) g| in the normalized frame
  ResidualReport reduced;
  double kappa_max = 0.0;
  double bound_excess = 0.0;  // max over nodes of full - kappa * reduced (<= 0 when the bound holds)
  bool identity_holds = false;
  bool bound_holds = false;
  bool passed() const { return identity_holds && bound_holds; }
};

/// Checks that the first n equations are (A-iE)(C-E)^-1 times the last n,
/// and full <= kappa * reduced with kappa = (||(A-iE)(C-E)^-1|| + 1) ||C-E||
/// (spectral norms; the ||C-E|| factor converts the normalized reduced rows
/// back to the raw last n rows).
ReductionReport reduction_equivalence_check(const AlmostComplexStructure& acs, const BlockDecomposition& bd,
                                            const PQPair& pq, const ComplexField& f,
                                            ModeRequest mode = ModeRequest::Auto, double tol = 1e-10);

}  // namespace spencer
