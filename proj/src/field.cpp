#include "spencer/field.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <istream>
#include <ostream>
#include <sstream>

namespace spencer {

const char* to_string(DiffMode m) { return m == DiffMode::Exact ? "exact" : "fd"; }

ModeRequest parse_mode_request(std::string_view s) {
  if (s == "auto") return ModeRequest::Auto;
  if (s == "exact") return ModeRequest::Exact;
  if (s == "fd") return ModeRequest::FiniteDifference;
  throw std::invalid_argument("unknown mode '" + std::string(s) + "' (expected exact, fd or auto)");
}

// ---- ScalarField ---------------------------------------------------------

ScalarField::ScalarField(PatchPtr patch, Expr e) : patch_(std::move(patch)), expr_(std::move(e)) {
  if (expr_->max_var() >= patch_->dim())
    throw FieldError("expression uses x" + std::to_string(expr_->max_var() + 1) + " on a patch of dimension " +
                     std::to_string(patch_->dim()));
}

ScalarField::ScalarField(PatchPtr patch, std::vector<double> samples)
    : ScalarField(std::move(patch), std::make_shared<const std::vector<double>>(std::move(samples))) {}

ScalarField::ScalarField(PatchPtr patch, SamplePtr samples) : patch_(std::move(patch)), samples_(std::move(samples)) {
  if (samples_->size() != patch_->size()) throw FieldError("sample count does not match patch resolution");
}

ScalarField ScalarField::parse(PatchPtr patch, std::string_view text) {
  Expr e = parse_expr(text, patch->dim());
  return ScalarField(std::move(patch), std::move(e));
}

const Expr& ScalarField::expr() const {
  if (!expr_) throw ModeUnavailable("field is sampled, not expression-backed");
  return *expr_;
}

SamplePtr ScalarField::samples() const {
  if (samples_) return samples_;
  return sample_all(std::span<const ScalarField>(this, 1)).front();
}

double ScalarField::value_at(std::span<const double> x) const {
  if (expr_) return expr_->eval(x);
  const Patch& p = *patch_;
  const int d = p.dim();
  std::vector<int> base(static_cast<std::size_t>(d));
  std::vector<double> frac(static_cast<std::size_t>(d));
  for (int a = 0; a < d; ++a) {
    double t = (x[static_cast<std::size_t>(a)] - p.lo(a)) / p.spacing(a);
    int i = std::clamp(static_cast<int>(std::floor(t)), 0, p.resolution(a) - 2);
    base[static_cast<std::size_t>(a)] = i;
    frac[static_cast<std::size_t>(a)] = std::clamp(t - i, 0.0, 1.0);
  }
  const auto& s = *samples_;
  double acc = 0.0;
  for (unsigned corner = 0; corner < (1u << d); ++corner) {
    double w = 1.0;
    std::size_t node = 0;
    for (int a = 0; a < d; ++a) {
      bool up = (corner >> a) & 1u;
      w *= up ? frac[static_cast<std::size_t>(a)] : 1.0 - frac[static_cast<std::size_t>(a)];
      node += static_cast<std::size_t>(base[static_cast<std::size_t>(a)] + (up ? 1 : 0)) * p.stride(a);
    }
    if (w != 0.0) acc += w * s[node];
  }
  return acc;
}

bool same_patch(const ScalarField& a, const ScalarField& b) {
  return a.patch_ptr() == b.patch_ptr() || a.patch() == b.patch();
}

std::vector<SamplePtr> sample_all(std::span<const ScalarField> fields) {
  std::vector<SamplePtr> out(fields.size());
  std::vector<Expr> exprs;
  std::vector<std::size_t> which;
  for (std::size_t k = 0; k < fields.size(); ++k) {
    if (fields[k].is_expr()) {
      exprs.push_back(fields[k].expr());
      which.push_back(k);
    } else {
      out[k] = fields[k].samples();
    }
  }
  if (exprs.empty()) return out;
  const Patch& p = fields[which.front()].patch();
  Tape tape(exprs);
  std::vector<std::vector<double>> values(exprs.size(), std::vector<double>(p.size()));
  std::vector<double> x(static_cast<std::size_t>(p.dim()));
  std::vector<double> scratch(tape.slot_count());
  std::vector<double> res(exprs.size());
  for (std::size_t node = 0; node < p.size(); ++node) {
    p.coords(node, x);
    tape.eval(x, scratch, res);
    for (std::size_t k = 0; k < res.size(); ++k) {
      if (!std::isfinite(res[k]))
        throw NonFiniteValue(node, "non-finite value of '" + exprs[k].str() + "'");
      values[k][node] = res[k];
    }
  }
  for (std::size_t k = 0; k < which.size(); ++k)
    out[which[k]] = std::make_shared<const std::vector<double>>(std::move(values[k]));
  return out;
}

ScalarField eval_field(const ScalarField& f) { return ScalarField(f.patch_ptr(), f.samples()); }

namespace {

template <class Fn>
ScalarField combine(const ScalarField& a, const ScalarField& b, Fn fn) {
  if (!same_patch(a, b)) throw PatchMismatch();
  if (a.is_expr() && b.is_expr()) return ScalarField(a.patch_ptr(), fn(a.expr(), b.expr()));
  auto sa = a.samples();
  auto sb = b.samples();
  std::vector<double> out(sa->size());
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = fn((*sa)[i], (*sb)[i]);
  return ScalarField(a.patch_ptr(), std::move(out));
}

}  // namespace

ScalarField operator+(const ScalarField& a, const ScalarField& b) {
  return combine(a, b, [](const auto& x, const auto& y) { return x + y; });
}
ScalarField operator-(const ScalarField& a, const ScalarField& b) {
  return combine(a, b, [](const auto& x, const auto& y) { return x - y; });
}
ScalarField operator*(const ScalarField& a, const ScalarField& b) {
  return combine(a, b, [](const auto& x, const auto& y) { return x * y; });
}
ScalarField operator/(const ScalarField& a, const ScalarField& b) {
  return combine(a, b, [](const auto& x, const auto& y) { return x / y; });
}
ScalarField operator-(const ScalarField& a) {
  if (a.is_expr()) return ScalarField(a.patch_ptr(), -a.expr());
  auto s = a.samples();
  std::vector<double> out(s->size());
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = -(*s)[i];
  return ScalarField(a.patch_ptr(), std::move(out));
}
ScalarField operator*(double s, const ScalarField& a) { return ScalarField::constant(a.patch_ptr(), s) * a; }

DiffMode resolve_mode(ModeRequest req, bool all_expr) {
  switch (req) {
    case ModeRequest::FiniteDifference: return DiffMode::FiniteDifference;
    case ModeRequest::Exact:
      if (!all_expr) throw ModeUnavailable("exact mode needs expression-backed fields");
      return DiffMode::Exact;
    default: return all_expr ? DiffMode::Exact : DiffMode::FiniteDifference;
  }
}

DiffMode resolve_mode(ModeRequest req, std::span<const ScalarField> fields) {
  bool all = std::all_of(fields.begin(), fields.end(), [](const ScalarField& f) { return f.is_expr(); });
  return resolve_mode(req, all);
}

std::vector<double> fd_derivative(const Patch& p, std::span<const double> v, int axis) {
  for (int a = 0; a < p.dim(); ++a)
    if (p.resolution(a) < 5) throw PatchTooCoarse(a, p.resolution(a));
  const std::size_t st = p.stride(axis);
  const int r = p.resolution(axis);
  const double inv2h = 1.0 / (2.0 * p.spacing(axis));
  std::vector<double> out(v.size());
  for (std::size_t node = 0; node < v.size(); ++node) {
    int i = p.index_along(node, axis);
    if (i == 0) {
      out[node] = (-3.0 * v[node] + 4.0 * v[node + st] - v[node + 2 * st]) * inv2h;
    } else if (i == r - 1) {
      out[node] = (3.0 * v[node] - 4.0 * v[node - st] + v[node - 2 * st]) * inv2h;
    } else {
      out[node] = (v[node + st] - v[node - st]) * inv2h;
    }
  }
  return out;
}

ScalarField diff(const ScalarField& f, int axis, DiffMode mode) {
  if (axis < 0 || axis >= f.patch().dim()) throw std::out_of_range("diff: axis out of range");
  if (mode == DiffMode::Exact) return ScalarField(f.patch_ptr(), symbolic_diff(f.expr(), axis));
  auto s = f.samples();
  return ScalarField(f.patch_ptr(), fd_derivative(f.patch(), *s, axis));
}

std::vector<ScalarField> gradient(const ScalarField& u, DiffMode mode) {
  std::vector<ScalarField> g;
  g.reserve(static_cast<std::size_t>(u.patch().dim()));
  if (mode == DiffMode::FiniteDifference) {
    ScalarField sampled = eval_field(u);
    for (int a = 0; a < u.patch().dim(); ++a) g.push_back(diff(sampled, a, mode));
  } else {
    for (int a = 0; a < u.patch().dim(); ++a) g.push_back(diff(u, a, mode));
  }
  return g;
}

// ---- ComplexField --------------------------------------------------------

ComplexField ComplexField::parse(PatchPtr patch, std::string_view re, std::string_view im) {
  return {ScalarField::parse(patch, re), ScalarField::parse(patch, im)};
}

ComplexField ComplexField::constant(PatchPtr patch, cplx c) {
  return {ScalarField::constant(patch, c.real()), ScalarField::constant(patch, c.imag())};
}

ComplexField operator+(const ComplexField& a, const ComplexField& b) { return {a.re + b.re, a.im + b.im}; }
ComplexField operator-(const ComplexField& a, const ComplexField& b) { return {a.re - b.re, a.im - b.im}; }
ComplexField operator*(const ComplexField& a, const ComplexField& b) {
  return {a.re * b.re - a.im * b.im, a.re * b.im + a.im * b.re};
}
ComplexField operator*(const ScalarField& a, const ComplexField& b) { return {a * b.re, a * b.im}; }
ComplexField operator*(cplx s, const ComplexField& a) {
  return ComplexField::constant(a.patch_ptr(), s) * a;
}
ComplexField operator-(const ComplexField& a) { return {-a.re, -a.im}; }
ComplexField diff(const ComplexField& f, int axis, DiffMode mode) {
  return {diff(f.re, axis, mode), diff(f.im, axis, mode)};
}

std::vector<cplx> complex_samples(const ComplexField& f) {
  const ScalarField parts[2] = {f.re, f.im};
  auto s = sample_all(parts);
  std::vector<cplx> out(s[0]->size());
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = {(*s[0])[i], (*s[1])[i]};
  return out;
}

// ---- MatrixField ---------------------------------------------------------

MatrixField::MatrixField(int rows, int cols, std::vector<ScalarField> entries)
    : rows_(rows), cols_(cols), entries_(std::move(entries)) {
  if (rows < 1 || cols < 1 || entries_.size() != static_cast<std::size_t>(rows * cols))
    throw FieldError("matrix field: entry count does not match shape");
  for (const auto& e : entries_)
    if (!same_patch(e, entries_.front())) throw PatchMismatch();
}

MatrixField MatrixField::constant(PatchPtr patch, const Eigen::MatrixXd& m) {
  std::vector<ScalarField> e;
  for (int i = 0; i < m.rows(); ++i)
    for (int j = 0; j < m.cols(); ++j) e.push_back(ScalarField::constant(patch, m(i, j)));
  return MatrixField(static_cast<int>(m.rows()), static_cast<int>(m.cols()), std::move(e));
}

MatrixField MatrixField::identity(PatchPtr patch, int n) {
  return constant(std::move(patch), Eigen::MatrixXd::Identity(n, n));
}

MatrixField MatrixField::zero(PatchPtr patch, int rows, int cols) {
  return constant(std::move(patch), Eigen::MatrixXd::Zero(rows, cols));
}

MatrixField MatrixField::parse(PatchPtr patch, const std::vector<std::vector<std::string>>& text) {
  if (text.empty()) throw FieldError("matrix field: no rows");
  const int rows = static_cast<int>(text.size());
  const int cols = static_cast<int>(text.front().size());
  std::vector<ScalarField> e;
  for (const auto& row : text) {
    if (static_cast<int>(row.size()) != cols) throw FieldError("matrix field: ragged rows");
    for (const auto& s : row) e.push_back(ScalarField::parse(patch, s));
  }
  return MatrixField(rows, cols, std::move(e));
}

MatrixField MatrixField::from_blocks(const MatrixField& a, const MatrixField& b, const MatrixField& c,
                                     const MatrixField& d) {
  if (a.rows() != b.rows() || c.rows() != d.rows() || a.cols() != c.cols() || b.cols() != d.cols())
    throw FieldError("matrix field: incompatible block shapes");
  const int rows = a.rows() + c.rows();
  const int cols = a.cols() + b.cols();
  std::vector<ScalarField> e;
  e.reserve(static_cast<std::size_t>(rows * cols));
  for (int i = 0; i < rows; ++i)
    for (int j = 0; j < cols; ++j) {
      bool top = i < a.rows();
      bool left = j < a.cols();
      int ii = top ? i : i - a.rows();
      int jj = left ? j : j - a.cols();
      const MatrixField& blk = top ? (left ? a : b) : (left ? c : d);
      e.push_back(blk(ii, jj));
    }
  return MatrixField(rows, cols, std::move(e));
}

bool MatrixField::is_expr() const {
  return std::all_of(entries_.begin(), entries_.end(), [](const ScalarField& f) { return f.is_expr(); });
}

MatrixField MatrixField::transpose() const {
  std::vector<ScalarField> e;
  e.reserve(entries_.size());
  for (int j = 0; j < cols_; ++j)
    for (int i = 0; i < rows_; ++i) e.push_back((*this)(i, j));
  return MatrixField(cols_, rows_, std::move(e));
}

MatrixField MatrixField::block(int r0, int c0, int nr, int nc) const {
  std::vector<ScalarField> e;
  for (int i = 0; i < nr; ++i)
    for (int j = 0; j < nc; ++j) e.push_back((*this)(r0 + i, c0 + j));
  return MatrixField(nr, nc, std::move(e));
}

MatrixSamples MatrixField::sample() const {
  auto s = sample_all(entries_);
  const std::size_t nodes = patch().size();
  MatrixSamples out(rows_, cols_, nodes);
  for (std::size_t node = 0; node < nodes; ++node) {
    auto m = out.at(node);
    for (int i = 0; i < rows_; ++i)
      for (int j = 0; j < cols_; ++j) m(i, j) = (*s[static_cast<std::size_t>(i * cols_ + j)])[node];
  }
  return out;
}

Eigen::MatrixXd MatrixField::value_at(std::span<const double> x) const {
  Eigen::MatrixXd m(rows_, cols_);
  for (int i = 0; i < rows_; ++i)
    for (int j = 0; j < cols_; ++j) m(i, j) = (*this)(i, j).value_at(x);
  return m;
}

namespace {

ScalarField dot(const MatrixField& a, int row, const MatrixField& b, int col) {
  std::optional<ScalarField> acc;
  for (int k = 0; k < a.cols(); ++k) {
    const ScalarField& x = a(row, k);
    const ScalarField& y = b(k, col);
    if (x.is_zero() || y.is_zero()) continue;
    ScalarField term = x * y;
    acc = acc ? *acc + term : term;
  }
  return acc ? *acc : ScalarField::constant(a.patch_ptr(), 0.0);
}

}  // namespace

MatrixField operator+(const MatrixField& a, const MatrixField& b) {
  if (a.rows() != b.rows() || a.cols() != b.cols()) throw FieldError("matrix field: shape mismatch in +");
  std::vector<ScalarField> e;
  for (std::size_t k = 0; k < a.entries().size(); ++k) e.push_back(a.entries()[k] + b.entries()[k]);
  return MatrixField(a.rows(), a.cols(), std::move(e));
}

MatrixField operator-(const MatrixField& a, const MatrixField& b) {
  if (a.rows() != b.rows() || a.cols() != b.cols()) throw FieldError("matrix field: shape mismatch in -");
  std::vector<ScalarField> e;
  for (std::size_t k = 0; k < a.entries().size(); ++k) e.push_back(a.entries()[k] - b.entries()[k]);
  return MatrixField(a.rows(), a.cols(), std::move(e));
}

MatrixField operator*(const MatrixField& a, const MatrixField& b) {
  if (a.cols() != b.rows()) throw FieldError("matrix field: shape mismatch in *");
  std::vector<ScalarField> e;
  for (int i = 0; i < a.rows(); ++i)
    for (int j = 0; j < b.cols(); ++j) e.push_back(dot(a, i, b, j));
  return MatrixField(a.rows(), b.cols(), std::move(e));
}

MatrixField operator*(double s, const MatrixField& a) {
  std::vector<ScalarField> e;
  for (const auto& x : a.entries()) e.push_back(s * x);
  return MatrixField(a.rows(), a.cols(), std::move(e));
}

MatrixField operator*(const Eigen::MatrixXd& c, const MatrixField& a) {
  return MatrixField::constant(a.patch_ptr(), c) * a;
}

MatrixField operator*(const MatrixField& a, const Eigen::MatrixXd& c) {
  return a * MatrixField::constant(a.patch_ptr(), c);
}

// ---- forms ---------------------------------------------------------------

OneForm::OneForm(std::vector<ScalarField> c) : comps(std::move(c)) {
  if (comps.empty() || static_cast<int>(comps.size()) != comps.front().patch().dim())
    throw FieldError("one-form: component count must equal the patch dimension");
}

TwoForm::TwoForm(int dim, std::vector<ScalarField> upper) : dim_(dim), upper_(std::move(upper)) {
  if (upper_.size() != static_cast<std::size_t>(dim * (dim - 1) / 2))
    throw FieldError("two-form: wrong number of upper-triangular entries");
}

std::size_t TwoForm::slot(int s, int q) const {
  // Row-major upper triangle without the diagonal.
  return static_cast<std::size_t>(s * dim_ - s * (s + 1) / 2 + (q - s - 1));
}

const ScalarField& TwoForm::upper(int s, int q) const { return upper_[slot(s, q)]; }

ScalarField TwoForm::operator()(int s, int q) const {
  if (s == q) return ScalarField::constant(upper_.front().patch_ptr(), 0.0);
  if (s < q) return upper(s, q);
  return -upper(q, s);
}

TwoForm d_oneform(const OneForm& w, DiffMode mode) {
  const int d = w.dim();
  std::vector<ScalarField> comps = w.comps;
  if (mode == DiffMode::FiniteDifference)
    for (auto& c : comps) c = eval_field(c);
  std::vector<ScalarField> upper;
  for (int s = 0; s < d; ++s)
    for (int q = s + 1; q < d; ++q)
      upper.push_back(diff(comps[static_cast<std::size_t>(q)], s, mode) -
                      diff(comps[static_cast<std::size_t>(s)], q, mode));
  return TwoForm(d, std::move(upper));
}

double line_integral(const OneForm& w, const std::vector<std::vector<double>>& polyline, int subdivisions) {
  const Patch& p = w.patch();
  const std::size_t d = static_cast<std::size_t>(p.dim());
  for (const auto& pt : polyline) {
    if (pt.size() != d) throw FieldError("line_integral: point has wrong dimension");
    if (!p.contains(pt)) throw FieldError("line_integral: point outside patch");
  }
  if (subdivisions < 1) throw std::invalid_argument("line_integral: subdivisions must be positive");
  auto integrand = [&](std::span<const double> x, std::span<const double> dir) {
    double acc = 0.0;
    for (std::size_t a = 0; a < d; ++a)
      if (dir[a] != 0.0) acc += w.comps[a].value_at(x) * dir[a];
    return acc;
  };
  double total = 0.0;
  std::vector<double> x(d), dir(d);
  for (std::size_t k = 0; k + 1 < polyline.size(); ++k) {
    const auto& a = polyline[k];
    const auto& b = polyline[k + 1];
    for (std::size_t i = 0; i < d; ++i) dir[i] = (b[i] - a[i]) / subdivisions;
    double seg = 0.0;
    for (int j = 0; j <= subdivisions; ++j) {
      for (std::size_t i = 0; i < d; ++i) x[i] = a[i] + (b[i] - a[i]) * (static_cast<double>(j) / subdivisions);
      double f = integrand(x, dir);
      seg += (j == 0 || j == subdivisions) ? 0.5 * f : f;
    }
    total += seg;
  }
  return total;
}

// ---- CSV -----------------------------------------------------------------

void write_csv(std::ostream& os, const ScalarField& f, const std::string& name) {
  const Patch& p = f.patch();
  os << "# axes=";
  for (int a = 0; a < p.dim(); ++a) os << (a ? "," : "") << 'x' << a + 1;
  os << " resolution=";
  for (int a = 0; a < p.dim(); ++a) os << (a ? "," : "") << p.resolution(a);
  os << '\n';
  for (int a = 0; a < p.dim(); ++a) os << 'x' << a + 1 << ',';
  os << name << '\n';
  auto s = f.samples();
  std::vector<double> x(static_cast<std::size_t>(p.dim()));
  char buf[64];
  for (std::size_t node = 0; node < p.size(); ++node) {
    p.coords(node, x);
    for (double v : x) {
      auto r = std::to_chars(buf, buf + sizeof buf, v);
      os.write(buf, r.ptr - buf);
      os << ',';
    }
    auto r = std::to_chars(buf, buf + sizeof buf, (*s)[node]);
    os.write(buf, r.ptr - buf);
    os << '\n';
  }
}

std::vector<double> read_csv_values(std::istream& is, const Patch& p) {
  std::string line;
  if (!std::getline(is, line) || line.rfind("# axes=", 0) != 0) throw FieldError("csv: missing header line");
  std::string expect_res = " resolution=";
  for (int a = 0; a < p.dim(); ++a) expect_res += (a ? "," : "") + std::to_string(p.resolution(a));
  if (line.find(expect_res) == std::string::npos) throw FieldError("csv: resolution does not match patch");
  std::getline(is, line);  // column names
  std::vector<double> out;
  out.reserve(p.size());
  while (std::getline(is, line)) {
    if (line.empty()) continue;
    auto pos = line.rfind(',');
    std::string_view tail(line.data() + pos + 1, line.size() - pos - 1);
    double v = 0.0;
    auto r = std::from_chars(tail.data(), tail.data() + tail.size(), v);
    if (r.ec != std::errc()) throw FieldError("csv: malformed value '" + std::string(tail) + "'");
    out.push_back(v);
  }
  if (out.size() != p.size()) throw FieldError("csv: expected " + std::to_string(p.size()) + " rows");
  return out;
}

}  // namespace spencer
