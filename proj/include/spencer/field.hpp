#pragma once

// Scalar, complex, and matrix fields on a Patch, plus the two
// differentiation modes every residual in the library is built on:
//
//   Exact             symbolic derivative of an expression-backed field,
//                     evaluated at the nodes (no truncation error);
//   FiniteDifference  second-order differences on sampled values: central
//                     in the interior, one-sided second order at the ends.
//
// Arithmetic between two expression-backed fields stays symbolic; as soon as
// one operand is sampled the result is sampled.

#include <complex>
#include <cstddef>
#include <iosfwd>
#include <memory>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include <Eigen/Dense>

#include "spencer/expr.hpp"
#include "spencer/grid.hpp"

namespace spencer {

using cplx = std::complex<double>;

enum class DiffMode { Exact, FiniteDifference };
enum class ModeRequest { Auto, Exact, FiniteDifference };

const char* to_string(DiffMode m);
ModeRequest parse_mode_request(std::string_view s);

class FieldError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class NonFiniteValue : public FieldError {
 public:
  NonFiniteValue(std::size_t node, const std::string& what)
      : FieldError(what + " (node " + std::to_string(node) + ")"), node_(node) {}
  std::size_t node() const { return node_; }

 private:
  std::size_t node_;
};

class PatchMismatch : public FieldError {
 public:
  PatchMismatch() : FieldError("fields live on different patches") {}
};

class PatchTooCoarse : public FieldError {
 public:
  PatchTooCoarse(int axis, int res)
      : FieldError("patch too coarse: axis " + std::to_string(axis + 1) + " has " + std::to_string(res) +
                   " points, finite differences need at least 5") {}
};

class ModeUnavailable : public FieldError {
 public:
  using FieldError::FieldError;
};

using SamplePtr = std::shared_ptr<const std::vector<double>>;

class ScalarField {
 public:
  ScalarField(PatchPtr patch, Expr e);
  ScalarField(PatchPtr patch, std::vector<double> samples);
  ScalarField(PatchPtr patch, SamplePtr samples);

  static ScalarField constant(PatchPtr patch, double v) { return ScalarField(std::move(patch), Expr::constant(v)); }
  static ScalarField parse(PatchPtr patch, std::string_view text);
  /// The coordinate function x_{axis+1}.
  static ScalarField coordinate(PatchPtr patch, int axis) { return ScalarField(std::move(patch), Expr::var(axis)); }

  const Patch& patch() const { return *patch_; }
  const PatchPtr& patch_ptr() const { return patch_; }
  bool is_expr() const { return expr_.has_value(); }
  const Expr& expr() const;
  /// True only for the literal constant zero expression.
  bool is_zero() const { return expr_ && expr_->is_const(0.0); }

  /// Values at every node; throws NonFiniteValue at the first bad node.
  SamplePtr samples() const;
  /// Pointwise value: exact for expressions, multilinear interpolation otherwise.
  double value_at(std::span<const double> x) const;

 private:
  PatchPtr patch_;
  std::optional<Expr> expr_;
  SamplePtr samples_;
};

bool same_patch(const ScalarField& a, const ScalarField& b);

/// Samples several fields with one shared tape for the expression-backed ones.
std::vector<SamplePtr> sample_all(std::span<const ScalarField> fields);

/// Explicit sampling; non-finite values are reported by node.
ScalarField eval_field(const ScalarField& f);

ScalarField operator+(const ScalarField& a, const ScalarField& b);
ScalarField operator-(const ScalarField& a, const ScalarField& b);
ScalarField operator*(const ScalarField& a, const ScalarField& b);
ScalarField operator/(const ScalarField& a, const ScalarField& b);
ScalarField operator-(const ScalarField& a);
ScalarField operator*(double s, const ScalarField& a);
inline ScalarField operator+(double s, const ScalarField& a) { return ScalarField::constant(a.patch_ptr(), s) + a; }
inline ScalarField operator+(const ScalarField& a, double s) { return a + ScalarField::constant(a.patch_ptr(), s); }

/// Exact when every field is expression-backed (unless FD is requested);
/// throws ModeUnavailable when Exact is requested for sampled data.
DiffMode resolve_mode(ModeRequest req, std::span<const ScalarField> fields);
DiffMode resolve_mode(ModeRequest req, bool all_expr);

std::vector<double> fd_derivative(const Patch& patch, std::span<const double> values, int axis);
ScalarField diff(const ScalarField& f, int axis, DiffMode mode);
std::vector<ScalarField> gradient(const ScalarField& u, DiffMode mode);

// ---- complex fields ------------------------------------------------------

struct ComplexField {
  ScalarField re;
  ScalarField im;

  ComplexField(ScalarField r, ScalarField i) : re(std::move(r)), im(std::move(i)) {
    if (!same_patch(re, im)) throw PatchMismatch();
  }
  explicit ComplexField(const ScalarField& r) : re(r), im(ScalarField::constant(r.patch_ptr(), 0.0)) {}
  static ComplexField parse(PatchPtr patch, std::string_view re, std::string_view im);
  static ComplexField constant(PatchPtr patch, cplx c);

  const Patch& patch() const { return re.patch(); }
  const PatchPtr& patch_ptr() const { return re.patch_ptr(); }
  bool is_expr() const { return re.is_expr() && im.is_expr(); }
  bool is_zero() const { return re.is_zero() && im.is_zero(); }
  ComplexField conj() const { return {re, -im}; }
};

ComplexField operator+(const ComplexField& a, const ComplexField& b);
ComplexField operator-(const ComplexField& a, const ComplexField& b);
ComplexField operator*(const ComplexField& a, const ComplexField& b);
ComplexField operator*(const ScalarField& a, const ComplexField& b);
ComplexField operator*(cplx s, const ComplexField& a);
ComplexField operator-(const ComplexField& a);
ComplexField diff(const ComplexField& f, int axis, DiffMode mode);

/// Samples of a complex field as std::complex values.
std::vector<cplx> complex_samples(const ComplexField& f);

// ---- matrix fields -------------------------------------------------------

/// Node-major samples of a rows x cols matrix field.
class MatrixSamples {
 public:
  using RowMajor = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
  MatrixSamples(int rows, int cols, std::size_t nodes) : rows_(rows), cols_(cols), nodes_(nodes),
      data_(static_cast<std::size_t>(rows * cols) * nodes) {}

  int rows() const { return rows_; }
  int cols() const { return cols_; }
  std::size_t nodes() const { return nodes_; }
  Eigen::Map<const RowMajor> at(std::size_t node) const {
    return {data_.data() + node * static_cast<std::size_t>(rows_ * cols_), rows_, cols_};
  }
  Eigen::Map<RowMajor> at(std::size_t node) {
    return {data_.data() + node * static_cast<std::size_t>(rows_ * cols_), rows_, cols_};
  }

 private:
  int rows_, cols_;
  std::size_t nodes_;
  std::vector<double> data_;
};

class MatrixField {
 public:
  MatrixField(int rows, int cols, std::vector<ScalarField> entries);

  static MatrixField constant(PatchPtr patch, const Eigen::MatrixXd& m);
  static MatrixField identity(PatchPtr patch, int n);
  static MatrixField zero(PatchPtr patch, int rows, int cols);
  static MatrixField parse(PatchPtr patch, const std::vector<std::vector<std::string>>& text);
  /// [[a, b], [c, d]] from four blocks.
  static MatrixField from_blocks(const MatrixField& a, const MatrixField& b, const MatrixField& c,
                                 const MatrixField& d);

  int rows() const { return rows_; }
  int cols() const { return cols_; }
  const Patch& patch() const { return entries_.front().patch(); }
  const PatchPtr& patch_ptr() const { return entries_.front().patch_ptr(); }
  const ScalarField& operator()(int i, int j) const {
    return entries_[static_cast<std::size_t>(i * cols_ + j)];
  }
  const std::vector<ScalarField>& entries() const { return entries_; }
  bool is_expr() const;

  MatrixField transpose() const;
  MatrixField block(int r0, int c0, int nr, int nc) const;
  MatrixSamples sample() const;
  Eigen::MatrixXd value_at(std::span<const double> x) const;

 private:
  int rows_, cols_;
  std::vector<ScalarField> entries_;
};

MatrixField operator+(const MatrixField& a, const MatrixField& b);
MatrixField operator-(const MatrixField& a, const MatrixField& b);
MatrixField operator*(const MatrixField& a, const MatrixField& b);
MatrixField operator*(double s, const MatrixField& a);
/// Constant matrix applied from the left / right.
MatrixField operator*(const Eigen::MatrixXd& c, const MatrixField& a);
MatrixField operator*(const MatrixField& a, const Eigen::MatrixXd& c);

// ---- forms ---------------------------------------------------------------

struct OneForm {
  std::vector<ScalarField> comps;  // coefficients on dx^1 ... dx^{2n}
  explicit OneForm(std::vector<ScalarField> c);
  const Patch& patch() const { return comps.front().patch(); }
  int dim() const { return static_cast<int>(comps.size()); }
};

/// Antisymmetric coefficients R_{sq}; only s < q is stored.
class TwoForm {
 public:
  TwoForm(int dim, std::vector<ScalarField> upper);
  int dim() const { return dim_; }
  /// R_{sq}; R_{qs} = -R_{sq}, R_{ss} = 0.
  ScalarField operator()(int s, int q) const;
  const ScalarField& upper(int s, int q) const;  // requires s < q
  const std::vector<ScalarField>& upper_entries() const { return upper_; }

 private:
  std::size_t slot(int s, int q) const;
  int dim_;
  std::vector<ScalarField> upper_;
};

/// R_{sq} = d_s w_q - d_q w_s.
TwoForm d_oneform(const OneForm& w, DiffMode mode);

/// Composite trapezoid rule along each polyline segment.
double line_integral(const OneForm& w, const std::vector<std::vector<double>>& polyline,
                     int subdivisions = 64);

// ---- CSV -----------------------------------------------------------------

/// Header "# axes=x1,...,xd resolution=r1,...,rd" then "x1,...,xd,value" rows.
void write_csv(std::ostream& os, const ScalarField& f, const std::string& name = "value");
std::vector<double> read_csv_values(std::istream& is, const Patch& patch);

}  // namespace spencer
