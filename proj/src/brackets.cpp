#include "spencer/brackets.hpp"

#include <cmath>
#include <optional>

namespace spencer {

namespace {

const cplx I(0.0, 1.0);

void check_same(const VectorFieldC& a, const VectorFieldC& b) {
  if (a.dim() != b.dim()) throw FieldError("vector fields of different dimension");
  if (!(a.patch() == b.patch())) throw PatchMismatch();
}

DiffMode pick(ModeRequest req, std::initializer_list<bool> exprs) {
  bool all = true;
  for (bool e : exprs) all = all && e;
  return resolve_mode(req, all);
}

}  // namespace

VectorFieldC::VectorFieldC(std::vector<ComplexField> c) : comps(std::move(c)) {
  if (comps.empty()) throw FieldError("vector field without components");
  for (const auto& x : comps)
    if (!(x.patch() == comps.front().patch())) throw PatchMismatch();
  if (static_cast<int>(comps.size()) != comps.front().patch().dim())
    throw FieldError("vector field needs one component per coordinate");
}

VectorFieldC VectorFieldC::coordinate(const PatchPtr& p, int axis) {
  std::vector<ComplexField> c;
  for (int k = 0; k < p->dim(); ++k) c.push_back(ComplexField::constant(p, k == axis ? 1.0 : 0.0));
  return VectorFieldC(std::move(c));
}

VectorFieldC VectorFieldC::parse(const PatchPtr& p, const std::vector<std::pair<std::string, std::string>>& comps) {
  std::vector<ComplexField> c;
  for (const auto& [re, im] : comps) c.push_back(ComplexField::parse(p, re, im));
  return VectorFieldC(std::move(c));
}

bool VectorFieldC::is_expr() const {
  for (const auto& c : comps)
    if (!c.is_expr()) return false;
  return true;
}

VectorFieldC operator+(const VectorFieldC& a, const VectorFieldC& b) {
  check_same(a, b);
  std::vector<ComplexField> c;
  for (int k = 0; k < a.dim(); ++k) c.push_back(a.comps[static_cast<std::size_t>(k)] + b.comps[static_cast<std::size_t>(k)]);
  return VectorFieldC(std::move(c));
}

VectorFieldC operator-(const VectorFieldC& a, const VectorFieldC& b) {
  check_same(a, b);
  std::vector<ComplexField> c;
  for (int k = 0; k < a.dim(); ++k) c.push_back(a.comps[static_cast<std::size_t>(k)] - b.comps[static_cast<std::size_t>(k)]);
  return VectorFieldC(std::move(c));
}

VectorFieldC operator*(cplx s, const VectorFieldC& a) {
  std::vector<ComplexField> c;
  for (const auto& x : a.comps) c.push_back(s * x);
  return VectorFieldC(std::move(c));
}

VectorFieldC operator*(const ComplexField& f, const VectorFieldC& a) {
  std::vector<ComplexField> c;
  for (const auto& x : a.comps) c.push_back(f * x);
  return VectorFieldC(std::move(c));
}

EigenspaceViolation::EigenspaceViolation(const std::string& which, double residual)
    : FieldError(which + " is not in the declared eigenspace (residual " + std::to_string(residual) + ")"),
      residual_(residual) {}

ComplexField apply_vf(const VectorFieldC& X, const ComplexField& u, DiffMode mode) {
  if (X.dim() != u.patch().dim()) throw FieldError("vector field and function dimensions differ");
  if (!(X.patch() == u.patch())) throw PatchMismatch();
  std::optional<ComplexField> acc;
  for (int k = 0; k < X.dim(); ++k) {
    const ComplexField& xk = X.comps[static_cast<std::size_t>(k)];
    if (xk.is_zero()) continue;
    ComplexField term = xk * diff(u, k, mode);
    acc = acc ? *acc + term : term;
  }
  return acc ? *acc : ComplexField::constant(u.patch_ptr(), 0.0);
}

ComplexField apply_vf(const VectorFieldC& X, const ScalarField& u, DiffMode mode) {
  return apply_vf(X, ComplexField(u), mode);
}

VectorFieldC j_action(const AlmostComplexStructure& acs, const VectorFieldC& X) {
  if (acs.dim() != X.dim()) throw FieldError("structure and vector field dimensions differ");
  if (!(acs.patch() == X.patch())) throw PatchMismatch();
  std::vector<ComplexField> c;
  for (int k = 0; k < X.dim(); ++k) {
    std::optional<ComplexField> acc;
    for (int j = 0; j < X.dim(); ++j) {
      const ScalarField& a = acs.j_tan(k, j);
      const ComplexField& xj = X.comps[static_cast<std::size_t>(j)];
      if (a.is_zero() || xj.is_zero()) continue;
      ComplexField term = a * xj;
      acc = acc ? *acc + term : term;
    }
    c.push_back(acc ? *acc : ComplexField::constant(X.patch_ptr(), 0.0));
  }
  return VectorFieldC(std::move(c));
}

VectorFieldC commutator(const VectorFieldC& X, const VectorFieldC& Y, DiffMode mode) {
  check_same(X, Y);
  std::vector<ComplexField> c;
  for (int k = 0; k < X.dim(); ++k)
    c.push_back(apply_vf(X, Y.comps[static_cast<std::size_t>(k)], mode) -
                apply_vf(Y, X.comps[static_cast<std::size_t>(k)], mode));
  return VectorFieldC(std::move(c));
}

ComplexField bracket(const VectorFieldC& X, const VectorFieldC& Y, const ComplexField& u, DiffMode mode) {
  check_same(X, Y);
  return apply_vf(X, apply_vf(Y, u, mode), mode) - apply_vf(Y, apply_vf(X, u, mode), mode);
}

ComplexField bracket_j(const AlmostComplexStructure& acs, const VectorFieldC& X, const VectorFieldC& Y,
                       const ComplexField& u, DiffMode mode) {
  check_same(X, Y);
  return apply_vf(X, apply_vf(j_action(acs, Y), u, mode), mode) -
         apply_vf(Y, apply_vf(j_action(acs, X), u, mode), mode);
}

ComplexField potential_vf_residual(const AlmostComplexStructure& acs, const VectorFieldC& X, const VectorFieldC& Y,
                                   const ScalarField& u, DiffMode mode) {
  ComplexField cu(u);
  return bracket_j(acs, X, Y, cu, mode) - apply_vf(j_action(acs, commutator(X, Y, mode)), cu, mode);
}

std::pair<VectorFieldC, VectorFieldC> splitting_projections(const AlmostComplexStructure& acs, const VectorFieldC& X) {
  VectorFieldC jx = j_action(acs, X);
  VectorFieldC ijx = I * jx;
  return {cplx(0.5) * (X - ijx), cplx(0.5) * (X + ijx)};
}

double eigen_residual(const AlmostComplexStructure& acs, const VectorFieldC& X, cplx lambda) {
  VectorFieldC r = j_action(acs, X) - lambda * X;
  double m = 0.0;
  for (const auto& c : r.comps)
    for (const cplx& v : complex_samples(c)) m = std::max(m, std::abs(v));
  return m;
}

const char* to_string(BracketCase c) {
  switch (c) {
    case BracketCase::Both10: return "(1,0),(1,0)";
    case BracketCase::Both01: return "(0,1),(0,1)";
    case BracketCase::Mixed10_01: return "(1,0),(0,1)";
    case BracketCase::Mixed01_10: return "(0,1),(1,0)";
  }
  return "?";
}

ResidualReport complex_sup(const std::string& check, const ComplexField& f, DiffMode mode) {
  const Patch& patch = f.patch();
  std::vector<cplx> s = complex_samples(f);
  ResidualAccumulator acc(check, patch, mode);
  for (std::size_t node = 0; node < patch.size(); ++node)
    if (patch.is_interior(node)) acc.add(node, std::abs(s[node]));
  return acc.finish();
}

BracketLawReport bracket_law_check(const AlmostComplexStructure& acs, const VectorFieldC& X, const VectorFieldC& Y,
                                   const ComplexField& u, BracketCase which, ModeRequest req, double eigen_tol) {
  const bool x10 = which == BracketCase::Both10 || which == BracketCase::Mixed10_01;
  const bool y10 = which == BracketCase::Both10 || which == BracketCase::Mixed01_10;
  BracketLawReport rep;
  rep.which = which;
  rep.eigen_x = eigen_residual(acs, X, x10 ? I : -I);
  rep.eigen_y = eigen_residual(acs, Y, y10 ? I : -I);
  if (rep.eigen_x > eigen_tol) throw EigenspaceViolation(std::string("X for case ") + to_string(which), rep.eigen_x);
  if (rep.eigen_y > eigen_tol) throw EigenspaceViolation(std::string("Y for case ") + to_string(which), rep.eigen_y);

  const DiffMode mode = pick(req, {acs.is_expr(), X.is_expr(), Y.is_expr(), u.is_expr()});
  ComplexField lhs = bracket_j(acs, X, Y, u, mode);
  ComplexField xy = apply_vf(X, apply_vf(Y, u, mode), mode);
  ComplexField yx = apply_vf(Y, apply_vf(X, u, mode), mode);
  const std::string name = std::string("[X,Y]_J law ") + to_string(which);
  switch (which) {
    case BracketCase::Both10:
      rep.law = complex_sup(name + ": i[X,Y]", lhs - I * (xy - yx), mode);
      rep.swapped_sign_law = rep.law;
      break;
    case BracketCase::Both01:
      rep.law = complex_sup(name + ": -i[X,Y]", lhs + I * (xy - yx), mode);
      rep.swapped_sign_law = rep.law;
      break;
    case BracketCase::Mixed10_01:
      rep.law = complex_sup(name + ": -i{X,Y}", lhs + I * (xy + yx), mode);
      rep.swapped_sign_law = complex_sup(name + ": +i{X,Y}", lhs - I * (xy + yx), mode);
      break;
    case BracketCase::Mixed01_10:
      rep.law = complex_sup(name + ": +i{X,Y}", lhs - I * (xy + yx), mode);
      rep.swapped_sign_law = complex_sup(name + ": -i{X,Y}", lhs + I * (xy + yx), mode);
      break;
  }
  return rep;
}

ResidualReport leibniz_defect_check(const AlmostComplexStructure& acs, const VectorFieldC& X, const VectorFieldC& Y,
                                    const ComplexField& f, const ComplexField& h, ModeRequest req) {
  const DiffMode mode = pick(req, {acs.is_expr(), X.is_expr(), Y.is_expr(), f.is_expr(), h.is_expr()});
  VectorFieldC jx = j_action(acs, X), jy = j_action(acs, Y);
  ComplexField lhs = bracket_j(acs, X, Y, f * h, mode);
  ComplexField rhs = bracket_j(acs, X, Y, f, mode) * h + f * bracket_j(acs, X, Y, h, mode) +
                     apply_vf(X, f, mode) * apply_vf(jy, h, mode) - apply_vf(jx, f, mode) * apply_vf(Y, h, mode) +
                     apply_vf(X, h, mode) * apply_vf(jy, f, mode) - apply_vf(jx, h, mode) * apply_vf(Y, f, mode);
  return complex_sup("Leibniz rule for [X,Y]_J", lhs - rhs, mode);
}

}  // namespace spencer
