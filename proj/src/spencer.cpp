#include "spencer/spencer.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>

#include <Eigen/LU>
#include <Eigen/QR>
#include <Eigen/SVD>

namespace spencer {

namespace {

const cplx I(0.0, 1.0);

ModeRequest as_request(DiffMode m) { return m == DiffMode::Exact ? ModeRequest::Exact : ModeRequest::FiniteDifference; }

DiffMode chart_mode(ModeRequest req, const SpencerChart& chart, bool extra = true) {
  return resolve_mode(req, chart.is_expr() && extra);
}

/// Per node, the rows of Phi: gradients of all coordinates, then their conjugates.
std::vector<Eigen::MatrixXcd> basis_rows(const SpencerChart& chart, DiffMode mode) {
  const Patch& patch = chart.patch();
  const int n = chart.n(), d = patch.dim();
  std::vector<std::vector<Eigen::VectorXcd>> grads;
  for (const auto& c : chart.coords()) grads.push_back(complex_gradient(c, mode));
  std::vector<Eigen::MatrixXcd> out(patch.size(), Eigen::MatrixXcd(2 * n, d));
  for (std::size_t node = 0; node < patch.size(); ++node)
    for (int k = 0; k < n; ++k) {
      const Eigen::VectorXcd& g = grads[static_cast<std::size_t>(k)][node];
      out[node].row(k) = g.transpose();
      out[node].row(n + k) = g.conjugate().transpose();
    }
  return out;
}

double normalized_det(const Eigen::MatrixXcd& phi, int n) {
  // Real Jacobian: rows grad Re, grad Im of each coordinate.
  const int d = static_cast<int>(phi.cols());
  Eigen::MatrixXd real(d, d);
  for (int k = 0; k < n; ++k) {
    real.row(2 * k) = phi.row(k).real();
    real.row(2 * k + 1) = phi.row(k).imag();
  }
  double scale = 1.0;
  for (int r = 0; r < d; ++r) scale *= real.row(r).norm();
  if (scale == 0.0) return 0.0;
  return std::abs(real.determinant()) / scale;
}

void check_coords(const std::vector<ComplexField>& cs, const PatchPtr& p) {
  for (const auto& c : cs)
    if (!(c.patch() == *p)) throw PatchMismatch();
}

std::string describe(const PatternReport& r) {
  return "worst block '" + r.worst_block + "' residual " + std::to_string(r.worst) + " at node " +
         std::to_string(r.worst_node);
}

}  // namespace

SpencerChart::SpencerChart(std::vector<ComplexField> holo, std::vector<ComplexField> complement)
    : m(static_cast<int>(holo.size())), holo_coords(std::move(holo)), complement_coords(std::move(complement)) {
  if (holo_coords.empty() && complement_coords.empty()) throw FieldError("chart without coordinates");
  check_coords(holo_coords, patch_ptr());
  check_coords(complement_coords, patch_ptr());
  if (2 * n() != patch().dim())
    throw FieldError("chart needs n = " + std::to_string(patch().dim_half()) + " complex coordinates, got " +
                     std::to_string(n()));
}

std::vector<ComplexField> SpencerChart::coords() const {
  std::vector<ComplexField> all = holo_coords;
  all.insert(all.end(), complement_coords.begin(), complement_coords.end());
  return all;
}

bool SpencerChart::is_expr() const {
  for (const auto& c : coords())
    if (!c.is_expr()) return false;
  return true;
}

DegenerateChart::DegenerateChart(std::size_t node, double det)
    : FieldError("chart Jacobian degenerate at node " + std::to_string(node) + " (normalized |det| " +
                 std::to_string(det) + ")"),
      node_(node),
      det_(det) {}

double default_pattern_tolerance(const Patch& patch, DiffMode mode) {
  if (mode == DiffMode::Exact) return 1e-8;
  const double h = patch.max_spacing();
  return 30.0 * h * h;
}

PatternReport verify_chart(const AlmostComplexStructure& acs, const SpencerChart& chart, int sign, ModeRequest req,
                           double tol) {
  if (sign != 1 && sign != -1) throw FieldError("pattern sign must be +1 or -1");
  if (!(acs.patch() == chart.patch())) throw PatchMismatch();
  const DiffMode mode = chart_mode(req, chart, acs.is_expr());
  const Patch& patch = chart.patch();
  const int n = chart.n(), m = chart.m;

  PatternReport rep;
  rep.sign = sign;
  rep.mode = mode;
  rep.tolerance = tol < 0.0 ? default_pattern_tolerance(patch, mode) : tol;
  rep.min_normalized_det = 1.0;

  std::vector<Eigen::MatrixXcd> phi = basis_rows(chart, mode);
  MatrixSamples J = acs.j_cot.sample();
  std::size_t det_node = 0;
  for (std::size_t node = 0; node < patch.size(); ++node) {
    const double det = normalized_det(phi[node], n);
    if (det < rep.min_normalized_det) {
      rep.min_normalized_det = det;
      det_node = node;
    }
  }
  if (rep.min_normalized_det <= 1e-8) throw DegenerateChart(det_node, rep.min_normalized_det);

  const cplx lead = sign > 0 ? I : -I;
  const std::string lead_name = sign > 0 ? "iE_m" : "-iE_m";
  const std::string conj_name = sign > 0 ? "-iE_m" : "iE_m";
  rep.block_residuals = {{lead_name + " block", 0.0},
                         {"zeros in dw columns", 0.0},
                         {conj_name + " block", 0.0},
                         {"zeros in dw-bar columns", 0.0}};
  std::vector<std::size_t> block_node(4, 0);
  const std::size_t centre = patch.center_node();
  for (std::size_t node = 0; node < patch.size(); ++node) {
    if (!patch.is_interior(node) && node != centre) continue;
    Eigen::MatrixXcd jc = Eigen::MatrixXd(J.at(node)).cast<cplx>();
    Eigen::MatrixXcd phit = phi[node].transpose();
    Eigen::MatrixXcd R = phit.partialPivLu().solve(jc * phit);
    if (node == centre) rep.center_matrix = R;
    if (!patch.is_interior(node) || m == 0) continue;
    Eigen::MatrixXcd c1 = R.middleCols(0, m), c3 = R.middleCols(n, m);
    const Eigen::MatrixXcd E = Eigen::MatrixXcd::Identity(m, m);
    double vals[4];
    vals[0] = (c1.topRows(m) - lead * E).norm();
    vals[1] = c1.bottomRows(2 * n - m).norm();
    Eigen::MatrixXcd c3_off = c3;
    c3_off.middleRows(n, m).setZero();
    vals[2] = (c3.middleRows(n, m) + lead * E).norm();
    vals[3] = c3_off.norm();
    for (std::size_t b = 0; b < 4; ++b)
      if (vals[b] > rep.block_residuals[b].second) {
        rep.block_residuals[b].second = vals[b];
        block_node[b] = node;
      }
  }

  for (const auto& w : chart.holo_coords)
    rep.holo.push_back(sign > 0 ? holo_residual(acs, w, as_request(mode)) : antiholo_residual(acs, w, as_request(mode)));

  rep.worst = -1.0;
  for (std::size_t b = 0; b < 4; ++b)
    if (rep.block_residuals[b].second > rep.worst) {
      rep.worst = rep.block_residuals[b].second;
      rep.worst_block = rep.block_residuals[b].first;
      rep.worst_node = block_node[b];
    }
  for (std::size_t j = 0; j < rep.holo.size(); ++j)
    if (rep.holo[j].sup > rep.worst) {
      rep.worst = rep.holo[j].sup;
      rep.worst_block = (sign > 0 ? "holo residual of w" : "antiholo residual of w") + std::to_string(j + 1);
      rep.worst_node = rep.holo[j].worst_node;
    }
  rep.passes = rep.worst <= rep.tolerance;
  return rep;
}

RankReport independence_rank(const SpencerChart& chart, ModeRequest req, double rel_tol) {
  const DiffMode mode = chart_mode(req, chart);
  const Patch& patch = chart.patch();
  const int m = chart.m, d = patch.dim();
  RankReport rep;
  rep.min_rank = m;
  rep.min_singular = m == 0 ? 0.0 : std::numeric_limits<double>::infinity();
  if (m == 0) return rep;
  std::vector<std::vector<Eigen::VectorXcd>> grads;
  for (const auto& w : chart.holo_coords) grads.push_back(complex_gradient(w, mode));
  // Scale for the rank threshold: largest gradient entry anywhere.
  double scale = 0.0;
  for (const auto& g : grads)
    for (const auto& v : g) scale = std::max(scale, v.cwiseAbs().maxCoeff());
  const double thresh = rel_tol * std::max(1.0, scale);
  Eigen::MatrixXcd jac(m, d);
  for (std::size_t node = 0; node < patch.size(); ++node) {
    for (int j = 0; j < m; ++j) jac.row(j) = grads[static_cast<std::size_t>(j)][node].transpose();
    Eigen::JacobiSVD<Eigen::MatrixXcd> svd(jac);
    const auto& s = svd.singularValues();
    int rank = 0;
    for (int k = 0; k < s.size(); ++k)
      if (s[k] > thresh) ++rank;
    if (s[m - 1] < rep.min_singular) rep.min_singular = s[m - 1];
    if (rank < rep.min_rank) {
      rep.min_rank = rank;
      rep.worst_node = node;
    }
  }
  return rep;
}

ResidualReport superposition_check(const AlmostComplexStructure& acs, const SpencerChart& chart, const ComplexField& h,
                                   ModeRequest req, double tol) {
  if (!(h.patch() == chart.patch())) throw PatchMismatch();
  PatternReport pat = verify_chart(acs, chart, 1, req, tol);
  if (!pat.passes) throw ChartError("superposition: chart fails verification, " + describe(pat));
  const DiffMode mode = pat.mode == DiffMode::Exact && h.is_expr() ? DiffMode::Exact : resolve_mode(req, false);
  const double htol = tol < 0.0 ? default_pattern_tolerance(chart.patch(), mode) : tol;
  ResidualReport hr = holo_residual(acs, h, as_request(mode));
  if (hr.sup > htol)
    throw PreconditionFailed("superposition: h is not almost-holomorphic (residual " + std::to_string(hr.sup) + ")");

  const Patch& patch = chart.patch();
  const int n = chart.n(), m = chart.m;
  std::vector<Eigen::MatrixXcd> phi = basis_rows(chart, mode);
  std::vector<Eigen::VectorXcd> gh = complex_gradient(h, mode);
  ResidualAccumulator acc("superposition: dh in span(dw)", patch, mode);
  for (std::size_t node = 0; node < patch.size(); ++node) {
    if (!patch.is_interior(node)) continue;
    Eigen::VectorXcd c = phi[node].transpose().partialPivLu().solve(gh[node]);
    acc.add_part(0, "dz coefficients", c.segment(m, n - m).norm());
    acc.add_part(1, "dw-bar coefficients", c.segment(n, m).norm());
    acc.add_part(2, "dz-bar coefficients", c.segment(n + m, n - m).norm());
    acc.add(node, c.tail(2 * n - m).norm());
  }
  return acc.finish();
}

SuperpositionFit superposition_fit(const SpencerChart& chart, const ComplexField& h, int degree) {
  if (degree < 0) throw FieldError("superposition fit: negative degree");
  if (!(h.patch() == chart.patch())) throw PatchMismatch();
  const int m = chart.m;
  SuperpositionFit fit;
  std::vector<int> idx(static_cast<std::size_t>(m), 0);
  std::function<void(int, int)> gen = [&](int var, int left) {
    if (var == m) {
      fit.exponents.push_back(idx);
      return;
    }
    for (int e = 0; e <= left; ++e) {
      idx[static_cast<std::size_t>(var)] = e;
      gen(var + 1, left - e);
    }
    idx[static_cast<std::size_t>(var)] = 0;
  };
  gen(0, degree);

  std::vector<std::vector<cplx>> w;
  for (const auto& c : chart.holo_coords) w.push_back(complex_samples(c));
  std::vector<cplx> hv = complex_samples(h);
  const std::size_t N = chart.patch().size();
  Eigen::MatrixXcd A(static_cast<Eigen::Index>(N), static_cast<Eigen::Index>(fit.exponents.size()));
  Eigen::VectorXcd b(static_cast<Eigen::Index>(N));
  for (std::size_t node = 0; node < N; ++node) {
    for (std::size_t t = 0; t < fit.exponents.size(); ++t) {
      cplx v = 1.0;
      for (int j = 0; j < m; ++j) v *= std::pow(w[static_cast<std::size_t>(j)][node], fit.exponents[t][static_cast<std::size_t>(j)]);
      A(static_cast<Eigen::Index>(node), static_cast<Eigen::Index>(t)) = v;
    }
    b[static_cast<Eigen::Index>(node)] = hv[node];
  }
  Eigen::VectorXcd c = A.colPivHouseholderQr().solve(b);
  fit.coefficients.assign(c.data(), c.data() + c.size());
  fit.residual = (A * c - b).cwiseAbs().maxCoeff();
  return fit;
}

ResidualReport transition_holomorphy_check(const AlmostComplexStructure& acs, const SpencerChart& a,
                                           const SpencerChart& b, const std::vector<ComplexExpr>& H, ModeRequest req,
                                           double tol) {
  if (!(a.patch() == b.patch()) || !(acs.patch() == a.patch())) throw PatchMismatch();
  if (a.m != b.m) throw ChartError("transition: charts of different type");
  if (static_cast<int>(H.size()) != a.m) throw FieldError("transition map needs one component per holomorphic coordinate");
  const int m = a.m;
  for (const auto& c : H)
    if (c.re.max_var() >= 2 * m || c.im.max_var() >= 2 * m)
      throw FieldError("transition map uses variables beyond (Re w, Im w)");
  PatternReport pa = verify_chart(acs, a, 1, req, tol);
  if (!pa.passes) throw ChartError("transition: first chart fails verification, " + describe(pa));
  PatternReport pb = verify_chart(acs, b, 1, req, tol);
  if (!pb.passes) throw ChartError("transition: second chart fails verification, " + describe(pb));

  // dH_k/dw-bar_j = 1/2 [(re_x - im_y) + i (im_x + re_y)].
  std::vector<Expr> outputs;
  for (const auto& c : H) {
    outputs.push_back(c.re);
    outputs.push_back(c.im);
    for (int j = 0; j < m; ++j) {
      outputs.push_back(symbolic_diff(c.re, 2 * j) - symbolic_diff(c.im, 2 * j + 1));
      outputs.push_back(symbolic_diff(c.im, 2 * j) + symbolic_diff(c.re, 2 * j + 1));
    }
  }
  Tape tape(outputs);
  std::vector<double> scratch(tape.slot_count()), out(tape.output_count()), y(static_cast<std::size_t>(2 * m));
  std::vector<std::vector<cplx>> wa, vb;
  for (const auto& c : a.holo_coords) wa.push_back(complex_samples(c));
  for (const auto& c : b.holo_coords) vb.push_back(complex_samples(c));

  const Patch& patch = a.patch();
  ResidualAccumulator acc("transition: H holomorphic and v = H(w)", patch, pa.mode);
  const std::size_t stride = 2 + 2 * static_cast<std::size_t>(m);
  for (std::size_t node = 0; node < patch.size(); ++node) {
    if (!patch.is_interior(node)) continue;
    for (int j = 0; j < m; ++j) {
      y[static_cast<std::size_t>(2 * j)] = wa[static_cast<std::size_t>(j)][node].real();
      y[static_cast<std::size_t>(2 * j + 1)] = wa[static_cast<std::size_t>(j)][node].imag();
    }
    tape.eval(y, scratch, out);
    double cr = 0.0, cons = 0.0;
    for (int k = 0; k < m; ++k) {
      const double* o = out.data() + static_cast<std::size_t>(k) * stride;
      cons = std::hypot(cons, std::abs(cplx(o[0], o[1]) - vb[static_cast<std::size_t>(k)][node]));
      for (int j = 0; j < m; ++j) cr = std::hypot(cr, 0.5 * std::abs(cplx(o[2 + 2 * j], o[3 + 2 * j])));
    }
    acc.add_part(0, "dH/dw-bar", cr);
    acc.add_part(1, "v - H(w)", cons);
    acc.add(node, std::hypot(cr, cons));
  }
  return acc.finish();
}

HyperPatternReport hyper_spencer_pattern_check(const HypercomplexStructure& h, const SpencerChart& chart,
                                               const SpencerChart& antichart, ModeRequest mode, double tol) {
  if (chart.m != antichart.m) throw ChartError("hyper pattern: chart and antichart of different type");
  HyperPatternReport rep;
  rep.holo = verify_chart(h.J, chart, 1, mode, tol);
  rep.anti = verify_chart(h.J, antichart, -1, mode, tol);
  rep.passes = rep.holo.passes && rep.anti.passes;
  return rep;
}

HyperTransitionReport hyper_transition_check(const HypercomplexStructure& h, const QuaternionFunction& G, double tol,
                                             ModeRequest mode) {
  HyperTransitionReport rep;
  rep.j_residual = j_hyperholo_residual(h, G, mode);
  rep.k_residual = k_hyperholo_residual(h, G, mode);
  rep.fit = affine_fit(G, tol);
  rep.hyperholomorphic = rep.j_residual.sup <= tol && rep.k_residual.sup <= tol;
  rep.passes = rep.hyperholomorphic && rep.fit.affine;
  return rep;
}

AlmostComplexStructure type1_structure(const PatchPtr& patch, const Expr& a, const Expr& b) {
  if (patch->dim() != 4) throw FieldError("type-1 structure lives on R^4");
  // Rows of Phi: dx-coefficients of (dz, dw, dz-bar, dw-bar). With
  // J* beta_k = sum_l M_kl beta_l we get j_cot = Phi^T M^T Phi^-T; M is
  // affine in (a, b), so assemble the constant, a and b parts separately.
  Eigen::Matrix4cd Phi;
  Phi << 1.0, I, 0.0, 0.0,  //
      0.0, 0.0, 1.0, I,     //
      1.0, -I, 0.0, 0.0,    //
      0.0, 0.0, 1.0, -I;
  const Eigen::Matrix4cd PinvT = Phi.inverse().transpose();
  auto part = [&](const Eigen::Matrix4cd& M) -> Eigen::Matrix4d { return (Phi.transpose() * M.transpose() * PinvT).real(); };
  Eigen::Matrix4cd M0 = Eigen::Matrix4cd::Zero(), Ma = Eigen::Matrix4cd::Zero(), Mb = Eigen::Matrix4cd::Zero();
  M0.diagonal() << I, I, -I, -I;
  Ma(1, 2) = 1.0;
  Ma(3, 0) = 1.0;
  Mb(1, 2) = I;
  Mb(3, 0) = -I;
  const Eigen::Matrix4d j0 = part(M0), ja = part(Ma), jb = part(Mb);
  std::vector<ScalarField> e;
  for (int i = 0; i < 4; ++i)
    for (int j = 0; j < 4; ++j) {
      Expr v = Expr::constant(j0(i, j));
      if (ja(i, j) != 0.0) v = v + Expr::constant(ja(i, j)) * a;
      if (jb(i, j) != 0.0) v = v + Expr::constant(jb(i, j)) * b;
      e.emplace_back(patch, v);
    }
  return validate_acs(MatrixField(4, 4, std::move(e)));
}

}  // namespace spencer
