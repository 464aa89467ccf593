#include "spencer/elliptic.hpp"

#include "spencer/linalg.hpp"

#include <cmath>
#include <limits>
#include <optional>
#include <random>

#include <Eigen/SparseLU>
#include <unsupported/Eigen/IterativeSolvers>

namespace spencer {

namespace {

void require_points(const Patch& p, int min_points) {
  for (int a = 0; a < p.dim(); ++a)
    if (p.resolution(a) < min_points) throw PatchTooCoarse(a, p.resolution(a));
}

ScalarField accumulate(std::optional<ScalarField>& acc, const ScalarField& term) {
  acc = acc ? *acc + term : term;
  return *acc;
}

ScalarField or_zero(const std::optional<ScalarField>& acc, const PatchPtr& p) {
  return acc ? *acc : ScalarField::constant(p, 0.0);
}

// Sparse row under construction: neighbour node -> weight, center kept apart.
struct RowBuilder {
  std::vector<std::pair<std::size_t, double>> entries;
  void add(std::size_t node, double w) {
    if (w == 0.0) return;
    for (auto& e : entries)
      if (e.first == node) {
        e.second += w;
        return;
      }
    entries.emplace_back(node, w);
  }
};

// Central second difference d_s d_q v at interior nodes (boundary left 0).
std::vector<double> second_difference(const Patch& p, const std::vector<double>& v, int s, int q) {
  std::vector<double> out(v.size(), 0.0);
  const std::size_t ss = p.stride(s), sq = p.stride(q);
  for (std::size_t n = 0; n < v.size(); ++n) {
    if (!p.is_interior(n)) continue;
    if (s == q)
      out[n] = (v[n + ss] - 2.0 * v[n] + v[n - ss]) / (p.spacing(s) * p.spacing(s));
    else
      out[n] = (v[n + ss + sq] - v[n + ss - sq] - v[n - ss + sq] + v[n - ss - sq]) /
               (4.0 * p.spacing(s) * p.spacing(q));
  }
  return out;
}

}  // namespace

OneForm potential_form(const AlmostComplexStructure& acs, const ScalarField& u, DiffMode mode) {
  const int d = acs.dim();
  std::vector<ScalarField> g = gradient(u, mode);
  std::vector<ScalarField> w;
  for (int q = 0; q < d; ++q) {
    std::optional<ScalarField> acc;
    for (int p = 0; p < d; ++p) {
      const ScalarField& j = acs.j_cot(q, p);
      if (j.is_zero() || g[static_cast<std::size_t>(p)].is_zero()) continue;
      accumulate(acc, j * g[static_cast<std::size_t>(p)]);
    }
    w.push_back(or_zero(acc, u.patch_ptr()));
  }
  return OneForm(std::move(w));
}

TwoForm potential_curvature(const AlmostComplexStructure& acs, const ScalarField& u, DiffMode mode) {
  const int d = acs.dim();
  if (mode == DiffMode::Exact) return d_oneform(potential_form(acs, u, mode), mode);
  const Patch& patch = u.patch();
  SamplePtr us = eval_field(u).samples();
  std::vector<SamplePtr> g = sample_all(gradient(u, mode));
  MatrixSamples J = acs.j_cot.sample();
  std::vector<MatrixSamples> dJ;
  for (int a = 0; a < d; ++a) dJ.push_back(diff(acs.j_cot, a, mode).sample());
  std::vector<std::vector<double>> H(static_cast<std::size_t>(d * d));
  for (int a = 0; a < d; ++a)
    for (int b = a; b < d; ++b) {
      H[static_cast<std::size_t>(a * d + b)] = second_difference(patch, *us, a, b);
      H[static_cast<std::size_t>(b * d + a)] = H[static_cast<std::size_t>(a * d + b)];
    }
  auto hess = [&](int a, int b, std::size_t n) { return H[static_cast<std::size_t>(a * d + b)][n]; };
  std::vector<ScalarField> upper;
  for (int s = 0; s < d; ++s)
    for (int q = s + 1; q < d; ++q) {
      std::vector<double> r(patch.size(), 0.0);
      for (std::size_t n = 0; n < patch.size(); ++n) {
        if (!patch.is_interior(n)) continue;
        auto j = J.at(n);
        auto djs = dJ[static_cast<std::size_t>(s)].at(n);
        auto djq = dJ[static_cast<std::size_t>(q)].at(n);
        double v = 0.0;
        for (int p = 0; p < d; ++p) {
          const double gp = (*g[static_cast<std::size_t>(p)])[n];
          v += (djs(q, p) - djq(s, p)) * gp + j(q, p) * hess(s, p, n) - j(s, p) * hess(q, p, n);
        }
        r[n] = v;
      }
      upper.emplace_back(u.patch_ptr(), std::move(r));
    }
  return TwoForm(d, std::move(upper));
}

ResidualReport potential_closedness_residual(const AlmostComplexStructure& acs, const ScalarField& u,
                                             ModeRequest req) {
  if (!(acs.patch() == u.patch())) throw PatchMismatch();
  const DiffMode mode = resolve_mode(req, acs.is_expr() && u.is_expr());
  TwoForm R = potential_curvature(acs, u, mode);
  const int d = acs.dim();
  std::vector<SamplePtr> s = sample_all(R.upper_entries());
  const Patch& patch = u.patch();
  ResidualAccumulator acc("potential structure: d(J*du) = 0", patch, mode);
  for (std::size_t node = 0; node < patch.size(); ++node) {
    if (!patch.is_interior(node)) continue;
    double m = 0.0;
    std::size_t k = 0;
    for (int a = 0; a < d; ++a)
      for (int b = a + 1; b < d; ++b, ++k) {
        double v = std::abs((*s[k])[node]);
        acc.add_part(k, "R_" + std::to_string(a + 1) + std::to_string(b + 1), v);
        m = std::max(m, v);
      }
    acc.add(node, m);
  }
  return acc.finish();
}

EllipticOperator assemble_operator(const AlmostComplexStructure& acs, ModeRequest req) {
  if (!acs.valid)
    throw InvalidStructure("operator needs a valid almost-complex structure", acs.worst_node, acs.acs_residual);
  const Patch& patch = acs.patch();
  require_points(patch, 3);
  const int d = acs.dim();
  const DiffMode mode = resolve_mode(req, acs.is_expr());
  const MatrixField& J = acs.j_cot;

  MatrixField A = J.transpose() * J + MatrixField::identity(acs.patch_ptr(), d);
  std::vector<MatrixField> dJ;
  for (int s = 0; s < d; ++s) dJ.push_back(diff(J, s, mode));
  std::vector<ScalarField> B;
  for (int p = 0; p < d; ++p) {
    std::optional<ScalarField> acc;
    for (int s = 0; s < d; ++s)
      for (int q = 0; q < d; ++q) {
        const ScalarField& jqs = J(q, s);
        if (jqs.is_zero()) continue;
        ScalarField diffs = dJ[static_cast<std::size_t>(s)](q, p) - dJ[static_cast<std::size_t>(q)](s, p);
        if (diffs.is_zero()) continue;
        accumulate(acc, jqs * diffs);
      }
    B.push_back(or_zero(acc, acs.patch_ptr()));
  }

  // Stencil.
  MatrixSamples As = A.sample();
  std::vector<SamplePtr> Bs = sample_all(B);
  using Triplet = Eigen::Triplet<double>;
  std::vector<Triplet> trip;
  for (std::size_t node = 0; node < patch.size(); ++node) {
    if (!patch.is_interior(node)) continue;
    auto a = As.at(node);
    RowBuilder row;
    double center = 0.0;
    for (int s = 0; s < d; ++s) {
      const double h = patch.spacing(s);
      const std::size_t st = patch.stride(s);
      const double c = a(s, s) / (h * h);
      if (c != 0.0) {
        row.add(node + st, c);
        row.add(node - st, c);
        center += -2.0 * c;
      }
    }
    for (int s = 0; s < d; ++s)
      for (int p = s + 1; p < d; ++p) {
        const double asp = 0.5 * (a(s, p) + a(p, s));
        if (asp == 0.0) continue;
        const double c = asp / (2.0 * patch.spacing(s) * patch.spacing(p));
        const std::size_t ss = patch.stride(s), sp = patch.stride(p);
        row.add(node + ss + sp, c);
        row.add(node + ss - sp, -c);
        row.add(node - ss + sp, -c);
        row.add(node - ss - sp, c);
      }
    for (int p = 0; p < d; ++p) {
      const double b = (*Bs[static_cast<std::size_t>(p)])[node];
      if (b == 0.0) continue;
      const double c = b / (2.0 * patch.spacing(p));
      row.add(node + patch.stride(p), c);
      row.add(node - patch.stride(p), -c);
    }
    trip.emplace_back(static_cast<int>(node), static_cast<int>(node), center);
    for (const auto& [nb, w] : row.entries) trip.emplace_back(static_cast<int>(node), static_cast<int>(nb), w);
  }
  Eigen::SparseMatrix<double, Eigen::RowMajor> st(static_cast<Eigen::Index>(patch.size()),
                                                  static_cast<Eigen::Index>(patch.size()));
  st.setFromTriplets(trip.begin(), trip.end());
  return EllipticOperator{J, std::move(A), std::move(B), mode, std::move(st)};
}

EllipticityReport ellipticity_certificate(const EllipticOperator& op, std::size_t samples, std::uint64_t seed,
                                          double tol) {
  EllipticityReport rep;
  MatrixSamples A = op.A.sample(), J = op.j_cot.sample();
  const int d = A.rows();
  rep.min_quadratic = std::numeric_limits<double>::infinity();
  rep.min_eigenvalue = std::numeric_limits<double>::infinity();
  for (std::size_t node = 0; node < A.nodes(); ++node) {
    Eigen::MatrixXd a = A.at(node);
    rep.symmetry_defect = std::max(rep.symmetry_defect, (a - a.transpose()).cwiseAbs().maxCoeff());
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(0.5 * (a + a.transpose()), Eigen::EigenvaluesOnly);
    rep.min_eigenvalue = std::min(rep.min_eigenvalue, es.eigenvalues()(0));
  }
  std::mt19937_64 rng(seed);
  std::uniform_int_distribution<std::size_t> pick(0, A.nodes() - 1);
  std::normal_distribution<double> g;
  bool identity_ok = true;
  for (std::size_t k = 0; k < samples; ++k) {
    std::size_t node = pick(rng);
    Eigen::VectorXd xi(d);
    for (int i = 0; i < d; ++i) xi[i] = g(rng);
    xi.normalize();
    const double q = xi.dot(Eigen::MatrixXd(A.at(node)) * xi);
    const double jx = (Eigen::MatrixXd(J.at(node)) * xi).squaredNorm();
    const double defect = std::abs(q - jx - 1.0);
    rep.identity_defect = std::max(rep.identity_defect, defect);
    if (defect > tol * (1.0 + jx)) identity_ok = false;
    if (q < rep.min_quadratic) {
      rep.min_quadratic = q;
      rep.worst_node = node;
      rep.worst_xi = xi;
    }
  }
  rep.samples = samples;
  rep.passed = identity_ok && rep.min_quadratic >= 1.0 - tol && rep.min_eigenvalue >= 1.0 - tol &&
               rep.symmetry_defect <= tol;
  return rep;
}

ScalarField apply_operator(const EllipticOperator& op, const ScalarField& u) {
  if (!(u.patch() == op.patch())) throw PatchMismatch();
  SamplePtr s = u.samples();
  Eigen::Map<const Eigen::VectorXd> v(s->data(), static_cast<Eigen::Index>(s->size()));
  Eigen::VectorXd r = op.stencil * v;
  return ScalarField(u.patch_ptr(), std::vector<double>(r.data(), r.data() + r.size()));
}

ScalarField delta_j(const EllipticOperator& op, const ScalarField& u, DiffMode mode) {
  if (mode == DiffMode::FiniteDifference) return apply_operator(op, eval_field(u));
  const int d = op.A.rows();
  std::vector<ScalarField> g = gradient(u, mode);
  std::optional<ScalarField> acc;
  for (int s = 0; s < d; ++s)
    for (int p = s; p < d; ++p) {
      ScalarField coef = s == p ? op.A(s, s) : op.A(s, p) + op.A(p, s);
      if (coef.is_zero()) continue;
      accumulate(acc, coef * diff(g[static_cast<std::size_t>(s)], p, mode));
    }
  for (int p = 0; p < d; ++p) {
    const ScalarField& b = op.B[static_cast<std::size_t>(p)];
    if (b.is_zero() || g[static_cast<std::size_t>(p)].is_zero()) continue;
    accumulate(acc, b * g[static_cast<std::size_t>(p)]);
  }
  return or_zero(acc, u.patch_ptr());
}

namespace {

ScalarField contraction_rhs(const AlmostComplexStructure& acs, const ScalarField& u, DiffMode mode) {
  const int d = acs.dim();
  TwoForm R = potential_curvature(acs, u, mode);
  std::optional<ScalarField> acc;
  for (int s = 0; s < d; ++s)
    for (int q = 0; q < d; ++q) {
      if (s == q) continue;
      const ScalarField& j = acs.j_cot(q, s);
      if (j.is_zero()) continue;
      accumulate(acc, j * R(s, q));
    }
  return or_zero(acc, u.patch_ptr());
}

}  // namespace

ResidualReport contraction_identity_residual(const AlmostComplexStructure& acs, const ScalarField& u,
                                             ModeRequest req) {
  if (!(acs.patch() == u.patch())) throw PatchMismatch();
  const DiffMode mode = resolve_mode(req, acs.is_expr() && u.is_expr());
  EllipticOperator op = assemble_operator(acs, mode == DiffMode::Exact ? ModeRequest::Exact : ModeRequest::FiniteDifference);
  std::vector<ScalarField> both = {delta_j(op, u, mode), contraction_rhs(acs, u, mode)};
  std::vector<SamplePtr> s = sample_all(both);
  const Patch& patch = u.patch();
  ResidualAccumulator acc("contraction identity: Delta_J u = sum J_q^s (dw)_sq", patch, mode);
  for (std::size_t node = 0; node < patch.size(); ++node)
    if (patch.is_interior(node)) acc.add(node, std::abs((*s[0])[node] - (*s[1])[node]));
  return acc.finish();
}

TheoremReport theorem_check(const AlmostComplexStructure& acs, const ScalarField& u, ModeRequest req) {
  const DiffMode mode = resolve_mode(req, acs.is_expr() && u.is_expr());
  const ModeRequest fixed = mode == DiffMode::Exact ? ModeRequest::Exact : ModeRequest::FiniteDifference;
  TheoremReport rep{potential_closedness_residual(acs, u, fixed), ResidualReport{},
                    contraction_identity_residual(acs, u, fixed)};
  EllipticOperator op = assemble_operator(acs, fixed);
  SamplePtr du = delta_j(op, u, mode).samples();
  const Patch& patch = u.patch();
  ResidualAccumulator acc("Delta_J u = 0 for almost-pluriharmonic u", patch, mode);
  for (std::size_t node = 0; node < patch.size(); ++node)
    if (patch.is_interior(node)) acc.add(node, std::abs((*du)[node]));
  rep.delta = acc.finish();
  rep.j_sup = sup_abs(acs.j_cot.sample());
  const int d = acs.dim();
  rep.bound = d * (d - 1) * rep.j_sup * rep.closedness.sup + rep.contraction.sup + 1e-10;
  rep.bound_holds = rep.delta.sup <= rep.bound;
  return rep;
}

DirichletResult solve_dirichlet(const DirichletProblem& prob) {
  if (prob.op == nullptr) throw FieldError("Dirichlet problem without an operator");
  const EllipticOperator& op = *prob.op;
  const Patch& patch = op.patch();
  if (!(prob.boundary.patch() == patch)) throw PatchMismatch();
  SamplePtr bc = prob.boundary.samples();

  std::vector<long> index(patch.size(), -1);
  long unknowns = 0;
  for (std::size_t node = 0; node < patch.size(); ++node)
    if (patch.is_interior(node)) index[node] = unknowns++;

  DirichletResult res{ScalarField(prob.boundary.patch_ptr(), *bc), "", 0, 0.0, false, false, 0.0, false, 0.0, 0.0, 0.0, 0.0};
  res.boundary_min = std::numeric_limits<double>::infinity();
  res.boundary_max = -std::numeric_limits<double>::infinity();
  for (std::size_t node = 0; node < patch.size(); ++node)
    if (index[node] < 0) {
      res.boundary_min = std::min(res.boundary_min, (*bc)[node]);
      res.boundary_max = std::max(res.boundary_max, (*bc)[node]);
    }
  if (unknowns == 0) {
    res.method = "none";
    res.converged = true;
    res.monotone = true;
    res.interior_min = res.boundary_min;
    res.interior_max = res.boundary_max;
    return res;
  }

  using SpMat = Eigen::SparseMatrix<double>;
  std::vector<Eigen::Triplet<double>> trip;
  Eigen::VectorXd rhs = Eigen::VectorXd::Zero(unknowns);
  res.monotone = true;
  for (std::size_t node = 0; node < patch.size(); ++node) {
    const long row = index[node];
    if (row < 0) continue;
    for (Eigen::SparseMatrix<double, Eigen::RowMajor>::InnerIterator it(op.stencil, static_cast<Eigen::Index>(node)); it;
         ++it) {
      const auto col = static_cast<std::size_t>(it.col());
      if (col != node && it.value() < 0.0) res.monotone = false;
      if (index[col] >= 0)
        trip.emplace_back(row, index[col], it.value());
      else
        rhs[row] -= it.value() * (*bc)[col];
    }
  }
  SpMat L(unknowns, unknowns);
  L.setFromTriplets(trip.begin(), trip.end());
  L.makeCompressed();

  // Mesh Peclet number.
  {
    MatrixSamples A = op.A.sample();
    std::vector<SamplePtr> B = sample_all(op.B);
    const double h = patch.max_spacing();
    for (std::size_t node = 0; node < patch.size(); ++node) {
      if (index[node] < 0) continue;
      double bmax = 0.0;
      for (const auto& b : B) bmax = std::max(bmax, std::abs((*b)[node]));
      if (bmax == 0.0) continue;
      Eigen::MatrixXd a = A.at(node);
      Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(0.5 * (a + a.transpose()), Eigen::EigenvaluesOnly);
      res.peclet = std::max(res.peclet, bmax * h / es.eigenvalues()(0));
    }
    res.peclet_warning = res.peclet > 1.0;
  }

  Eigen::VectorXd x;
  const bool direct = prob.method == SolverMethod::Direct ||
                      (prob.method == SolverMethod::Auto && static_cast<std::size_t>(unknowns) <= prob.direct_limit);
  if (direct) {
    Eigen::SparseLU<SpMat, Eigen::COLAMDOrdering<int>> lu;
    lu.analyzePattern(L);
    lu.factorize(L);
    if (lu.info() != Eigen::Success) throw FieldError("sparse LU factorization failed: " + lu.lastErrorMessage());
    x = lu.solve(rhs);
    res.method = "sparse-lu";
    res.iterations = 1;
  } else {
    Eigen::GMRES<SpMat, Eigen::DiagonalPreconditioner<double>> gmres;
    gmres.set_restart(prob.restart);
    gmres.setTolerance(prob.tolerance);
    gmres.setMaxIterations(prob.max_iterations);
    gmres.compute(L);
    x = gmres.solve(rhs);
    res.method = "gmres";
    res.iterations = static_cast<int>(gmres.iterations());
  }
  const double bnorm = rhs.norm();
  const double rnorm = (L * x - rhs).norm();
  res.residual = bnorm > 0.0 ? rnorm / bnorm : rnorm;
  res.converged = std::isfinite(res.residual) && res.residual <= prob.tolerance;

  std::vector<double> u(*bc);
  res.interior_min = std::numeric_limits<double>::infinity();
  res.interior_max = -std::numeric_limits<double>::infinity();
  for (std::size_t node = 0; node < patch.size(); ++node)
    if (index[node] >= 0) {
      u[node] = x[index[node]];
      res.interior_min = std::min(res.interior_min, u[node]);
      res.interior_max = std::max(res.interior_max, u[node]);
    }
  res.solution = ScalarField(prob.boundary.patch_ptr(), std::move(u));
  return res;
}

}  // namespace spencer
