#pragma once

// Pointwise dense linear algebra on matrix fields.

#include <cstddef>
#include <string>

#include <Eigen/Dense>

#include "spencer/field.hpp"

namespace spencer {

class SingularMatrix : public FieldError {
 public:
  SingularMatrix(std::size_t node, const std::string& what)
      : FieldError(what + " singular at node " + std::to_string(node)), node_(node) {}
  std::size_t node() const { return node_; }

 private:
  std::size_t node_;
};

struct InvertibilityReport {
  bool invertible = true;
  std::size_t worst_node = 0;  // largest condition estimate, or first singular node
  double min_abs_det = 0.0;
  double max_condition = 0.0;
};

/// Invertibility at every node: LU with partial pivoting, singular when
/// |det| <= det_rel * scale^n or the condition estimate >= cond_max, where
/// scale = max(max |entry|, scale_floor).
InvertibilityReport check_invertible(const MatrixSamples& m, double det_rel = 1e-12, double cond_max = 1e12,
                                     double scale_floor = 0.0);

/// Pointwise inverse. Expression-backed fields up to 4x4 are inverted
/// symbolically (adjugate over determinant) so derivatives stay exact;
/// everything else is inverted node by node. Throws SingularMatrix.
MatrixField inverse(const MatrixField& m, const std::string& what = "matrix");

/// Symbolic determinant by cofactor expansion.
Expr determinant(const MatrixField& m);

/// max over nodes of the induced infinity norm of a sampled matrix field.
double sup_inf_norm(const MatrixSamples& m, std::size_t* worst = nullptr);

/// max |entry| over all nodes.
double sup_abs(const MatrixSamples& m);

}  // namespace spencer
