#pragma once

// Complex vector fields acting on functions, the twisted bracket
//   [X,Y]_J u = X((JY)u) - Y((JX)u),
// and its laws on the eigenspaces of J. Tangent convention:
// (JX)^k = sum_j j_tan(k, j) X^j.

#include <utility>
#include <vector>

#include "spencer/report.hpp"
#include "spencer/structures.hpp"

namespace spencer {

struct VectorFieldC {
  std::vector<ComplexField> comps;  // X^k, X(u) = sum_k X^k d_k u

  explicit VectorFieldC(std::vector<ComplexField> c);
  /// d/dx^{axis+1}.
  static VectorFieldC coordinate(const PatchPtr& p, int axis);
  static VectorFieldC parse(const PatchPtr& p, const std::vector<std::pair<std::string, std::string>>& comps);

  int dim() const { return static_cast<int>(comps.size()); }
  const Patch& patch() const { return comps.front().patch(); }
  const PatchPtr& patch_ptr() const { return comps.front().patch_ptr(); }
  bool is_expr() const;
};

VectorFieldC operator+(const VectorFieldC& a, const VectorFieldC& b);
VectorFieldC operator-(const VectorFieldC& a, const VectorFieldC& b);
VectorFieldC operator*(cplx s, const VectorFieldC& a);
VectorFieldC operator*(const ComplexField& f, const VectorFieldC& a);

class EigenspaceViolation : public FieldError {
 public:
  EigenspaceViolation(const std::string& which, double residual);
  double residual() const { return residual_; }

 private:
  double residual_;
};

ComplexField apply_vf(const VectorFieldC& X, const ComplexField& u, DiffMode mode);
ComplexField apply_vf(const VectorFieldC& X, const ScalarField& u, DiffMode mode);

/// Throws FieldError on a dimension mismatch.
VectorFieldC j_action(const AlmostComplexStructure& acs, const VectorFieldC& X);

/// The vector field [X,Y], components X(Y^k) - Y(X^k).
VectorFieldC commutator(const VectorFieldC& X, const VectorFieldC& Y, DiffMode mode);

/// X(Y(u)) - Y(X(u)).
ComplexField bracket(const VectorFieldC& X, const VectorFieldC& Y, const ComplexField& u, DiffMode mode);
ComplexField bracket_j(const AlmostComplexStructure& acs, const VectorFieldC& X, const VectorFieldC& Y,
                       const ComplexField& u, DiffMode mode);

/// [X,Y]_J(u) - (J[X,Y])(u); equals d(J*du)(X,Y).
ComplexField potential_vf_residual(const AlmostComplexStructure& acs, const VectorFieldC& X, const VectorFieldC& Y,
                                   const ScalarField& u, DiffMode mode);

/// (X^{1,0}, X^{0,1}) = ((X - iJX)/2, (X + iJX)/2).
std::pair<VectorFieldC, VectorFieldC> splitting_projections(const AlmostComplexStructure& acs, const VectorFieldC& X);

/// max over all nodes and components of |JX - lambda X|.
double eigen_residual(const AlmostComplexStructure& acs, const VectorFieldC& X, cplx lambda);

/// Which eigenspaces X and Y lie in: (1,0) means JX = iX, (0,1) means JX = -iX.
enum class BracketCase { Both10, Both01, Mixed10_01, Mixed01_10 };
const char* to_string(BracketCase c);

struct BracketLawReport {
  BracketCase which = BracketCase::Both10;
  double eigen_x = 0.0, eigen_y = 0.0;
  /// Derived law: i[X,Y], -i[X,Y], -i{X,Y} for X in (1,0), Y in (0,1),
  /// +i{X,Y} for X in (0,1), Y in (1,0).
  ResidualReport law;
  /// The mixed laws with the opposite signs (+i{X,Y} for (1,0),(0,1) and
  /// -i{X,Y} for (0,1),(1,0)); equal to `law` for the unmixed cases.
  ResidualReport swapped_sign_law;
  bool passed(double tol) const { return law.sup <= tol; }
};

/// Throws EigenspaceViolation when X or Y is not in the declared eigenspace
/// within eigen_tol.
BracketLawReport bracket_law_check(const AlmostComplexStructure& acs, const VectorFieldC& X, const VectorFieldC& Y,
                                   const ComplexField& u, BracketCase which, ModeRequest mode = ModeRequest::Auto,
                                   double eigen_tol = 1e-10);

/// Product rule for the twisted bracket:
///   [X,Y]_J(fh) = [X,Y]_J(f) h + f [X,Y]_J(h) + X(f)(JY)(h) - (JX)(f) Y(h)
///                 + X(h)(JY)(f) - (JX)(h) Y(f).
ResidualReport leibniz_defect_check(const AlmostComplexStructure& acs, const VectorFieldC& X, const VectorFieldC& Y,
                                    const ComplexField& f, const ComplexField& h,
                                    ModeRequest mode = ModeRequest::Auto);

/// sup over interior nodes of |f| for a complex field.
ResidualReport complex_sup(const std::string& check, const ComplexField& f, DiffMode mode);

}  // namespace spencer
