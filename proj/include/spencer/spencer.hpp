#pragma once

// Verification of supplied Spencer charts (w^1..w^m almost-holomorphic,
// z^{m+1}..z^n completing them to a coordinate system).
//
// The 1-form basis is beta = (dw, dz, dw-bar, dz-bar). Its dx-coefficients
// form the rows of Phi (complex gradients, conjugated for the last n), and
// the matrix of J* in that basis is R = Phi^-T j_cot Phi^T, so column k of R
// holds the beta-coefficients of J* beta_k. For a valid chart the columns of
// dw and dw-bar are (iE_m; 0; 0; 0) and (0; 0; -iE_m; 0); all other entries
// are unconstrained.

#include <optional>
#include <string>
#include <vector>

#include "spencer/holomorphy.hpp"
#include "spencer/hypercomplex.hpp"

namespace spencer {

struct SpencerChart {
  int m = 0;
  std::vector<ComplexField> holo_coords;        // w^1..w^m
  std::vector<ComplexField> complement_coords;  // z^{m+1}..z^n

  SpencerChart(std::vector<ComplexField> holo, std::vector<ComplexField> complement);

  int n() const { return m + static_cast<int>(complement_coords.size()); }
  std::vector<ComplexField> coords() const;
  const PatchPtr& patch_ptr() const { return holo_coords.empty() ? complement_coords.front().patch_ptr() : holo_coords.front().patch_ptr(); }
  const Patch& patch() const { return *patch_ptr(); }
  bool is_expr() const;
};

class DegenerateChart : public FieldError {
 public:
  DegenerateChart(std::size_t node, double det);
  std::size_t node() const { return node_; }
  double normalized_det() const { return det_; }

 private:
  std::size_t node_;
  double det_;
};

class ChartError : public FieldError {
 public:
  using FieldError::FieldError;
};

struct PatternReport {
  int sign = 1;  // +1: w holomorphic, pattern iE_m; -1: w antiholomorphic, pattern -iE_m
  std::vector<std::pair<std::string, double>> block_residuals;  // four constrained blocks
  std::vector<ResidualReport> holo;                             // one per w^j
  double tolerance = 0.0;
  double min_normalized_det = 0.0;
  std::size_t worst_node = 0;
  std::string worst_block;
  double worst = 0.0;
  DiffMode mode = DiffMode::Exact;
  Eigen::MatrixXcd center_matrix;  // R at the node closest to the patch centre
  bool passes = false;
};

/// 1e-8 in exact mode, 30 h^2 (h the largest spacing) in FD mode.
double default_pattern_tolerance(const Patch& patch, DiffMode mode);

/// Throws DegenerateChart when the real Jacobian of all coordinates has
/// |det| / prod(row norms) <= 1e-8 at some node. tol < 0 picks the default.
PatternReport verify_chart(const AlmostComplexStructure& acs, const SpencerChart& chart, int sign = 1,
                           ModeRequest mode = ModeRequest::Auto, double tol = -1.0);

struct RankReport {
  int min_rank = 0;
  std::size_t worst_node = 0;
  double min_singular = 0.0;  // smallest m-th singular value over nodes
};

/// Rank of the m x 2n complex Jacobian of (w^1..w^m), minimised over all nodes.
RankReport independence_rank(const SpencerChart& chart, ModeRequest mode = ModeRequest::Auto, double rel_tol = 1e-8);

/// Coefficients of dh on dz, dw-bar, dz-bar in the chart basis. Throws
/// ChartError if the chart fails verify_chart or h is not almost-holomorphic.
ResidualReport superposition_check(const AlmostComplexStructure& acs, const SpencerChart& chart, const ComplexField& h,
                                   ModeRequest mode = ModeRequest::Auto, double tol = -1.0);

struct SuperpositionFit {
  std::vector<std::vector<int>> exponents;  // multi-indices over w^1..w^m
  std::vector<cplx> coefficients;
  double residual = 0.0;  // max |h - H(w)| over nodes
};

/// Least-squares complex polynomial H of total degree <= degree with h = H(w).
SuperpositionFit superposition_fit(const SpencerChart& chart, const ComplexField& h, int degree);

/// Component k of a transition map v = H(w): real and imaginary parts as
/// expressions in (Re w^1, Im w^1, ..., Re w^m, Im w^m).
struct ComplexExpr {
  Expr re, im;
};

/// Cauchy-Riemann residual |dH/dw-bar| on the image points w(x), plus the
/// consistency |v - H(w)|. Both charts are verified first (ChartError).
ResidualReport transition_holomorphy_check(const AlmostComplexStructure& acs, const SpencerChart& a,
                                           const SpencerChart& b, const std::vector<ComplexExpr>& H,
                                           ModeRequest mode = ModeRequest::Auto, double tol = -1.0);

struct HyperPatternReport {
  PatternReport holo;  // chart of J-holomorphic f_alpha, pattern iE_m
  PatternReport anti;  // chart of J-antiholomorphic phi_alpha, pattern -iE_m
  bool passes = false;
};

HyperPatternReport hyper_spencer_pattern_check(const HypercomplexStructure& h, const SpencerChart& chart,
                                               const SpencerChart& antichart, ModeRequest mode = ModeRequest::Auto,
                                               double tol = -1.0);

struct HyperTransitionReport {
  ResidualReport j_residual;
  ResidualReport k_residual;
  AffineFitReport fit;
  bool hyperholomorphic = false;
  bool passes = false;  // both residuals small and the map is affine
};

/// A transition q -> G(q) that is both J- and K-hyperholomorphic must be affine.
HyperTransitionReport hyper_transition_check(const HypercomplexStructure& h, const QuaternionFunction& G,
                                             double tol = 1e-10, ModeRequest mode = ModeRequest::Auto);

/// R^4 structure with J*dz = i dz, J*dw = i dw + f dz-bar (z = x1+ix2,
/// w = x3+ix4), f = a + ib. Spencer type 1 when f is not identically zero.
AlmostComplexStructure type1_structure(const PatchPtr& patch, const Expr& a, const Expr& b);

}  // namespace spencer
