#include "spencer/linalg.hpp"

#include <cmath>
#include <limits>

namespace spencer {

namespace {

using ExprMatrix = std::vector<std::vector<Expr>>;

Expr cofactor_det(const ExprMatrix& a) {
  const std::size_t n = a.size();
  if (n == 1) return a[0][0];
  if (n == 2) return a[0][0] * a[1][1] - a[0][1] * a[1][0];
  Expr acc = Expr::constant(0.0);
  for (std::size_t j = 0; j < n; ++j) {
    if (a[0][j].is_const(0.0)) continue;
    ExprMatrix minor;
    for (std::size_t i = 1; i < n; ++i) {
      std::vector<Expr> row;
      for (std::size_t k = 0; k < n; ++k)
        if (k != j) row.push_back(a[i][k]);
      minor.push_back(std::move(row));
    }
    Expr term = a[0][j] * cofactor_det(minor);
    acc = (j % 2 == 0) ? acc + term : acc - term;
  }
  return acc;
}

ExprMatrix to_exprs(const MatrixField& m) {
  ExprMatrix a(static_cast<std::size_t>(m.rows()));
  for (int i = 0; i < m.rows(); ++i)
    for (int j = 0; j < m.cols(); ++j) a[static_cast<std::size_t>(i)].push_back(m(i, j).expr());
  return a;
}

}  // namespace

InvertibilityReport check_invertible(const MatrixSamples& m, double det_rel, double cond_max, double scale_floor) {
  InvertibilityReport rep;
  rep.min_abs_det = std::numeric_limits<double>::infinity();
  const int n = m.rows();
  for (std::size_t node = 0; node < m.nodes(); ++node) {
    Eigen::MatrixXd a = m.at(node);
    const double scale = std::max(a.cwiseAbs().maxCoeff(), scale_floor);
    Eigen::PartialPivLU<Eigen::MatrixXd> lu(a);
    const double det = std::abs(lu.determinant());
    const double rcond = lu.rcond();
    const double cond = rcond > 0.0 ? 1.0 / rcond : std::numeric_limits<double>::infinity();
    if (det < rep.min_abs_det) rep.min_abs_det = det;
    const bool singular = scale == 0.0 || det <= det_rel * std::pow(scale, n) || !(cond < cond_max);
    if (singular) {
      rep.invertible = false;
      rep.worst_node = node;
      rep.max_condition = cond;
      return rep;
    }
    if (cond > rep.max_condition) {
      rep.max_condition = cond;
      rep.worst_node = node;
    }
  }
  return rep;
}

Expr determinant(const MatrixField& m) {
  if (m.rows() != m.cols()) throw FieldError("determinant of a non-square matrix field");
  return cofactor_det(to_exprs(m));
}

MatrixField inverse(const MatrixField& m, const std::string& what) {
  if (m.rows() != m.cols()) throw FieldError("inverse of a non-square matrix field");
  const int n = m.rows();
  MatrixSamples s = m.sample();
  InvertibilityReport rep = check_invertible(s);
  if (!rep.invertible) throw SingularMatrix(rep.worst_node, what);

  if (m.is_expr() && n <= 4) {
    ExprMatrix a = to_exprs(m);
    Expr det = cofactor_det(a);
    std::vector<ScalarField> e;
    for (int i = 0; i < n; ++i)
      for (int j = 0; j < n; ++j) {
        // inverse(i, j) = cofactor(j, i) / det
        Expr c;
        if (n == 1) {
          c = Expr::constant(1.0);
        } else {
          ExprMatrix minor;
          for (int r = 0; r < n; ++r) {
            if (r == j) continue;
            std::vector<Expr> row;
            for (int k = 0; k < n; ++k)
              if (k != i) row.push_back(a[static_cast<std::size_t>(r)][static_cast<std::size_t>(k)]);
            minor.push_back(std::move(row));
          }
          c = cofactor_det(minor);
          if ((i + j) % 2 == 1) c = -c;
        }
        e.emplace_back(m.patch_ptr(), c / det);
      }
    return MatrixField(n, n, std::move(e));
  }

  std::vector<std::vector<double>> vals(static_cast<std::size_t>(n * n), std::vector<double>(s.nodes()));
  for (std::size_t node = 0; node < s.nodes(); ++node) {
    Eigen::MatrixXd inv = Eigen::PartialPivLU<Eigen::MatrixXd>(Eigen::MatrixXd(s.at(node))).inverse();
    for (int i = 0; i < n; ++i)
      for (int j = 0; j < n; ++j) vals[static_cast<std::size_t>(i * n + j)][node] = inv(i, j);
  }
  std::vector<ScalarField> e;
  for (auto& v : vals) e.emplace_back(m.patch_ptr(), std::move(v));
  return MatrixField(n, n, std::move(e));
}

double sup_inf_norm(const MatrixSamples& m, std::size_t* worst) {
  double best = 0.0;
  std::size_t at = 0;
  for (std::size_t node = 0; node < m.nodes(); ++node) {
    double v = m.at(node).cwiseAbs().rowwise().sum().maxCoeff();
    if (v > best) {
      best = v;
      at = node;
    }
  }
  if (worst) *worst = at;
  return best;
}

double sup_abs(const MatrixSamples& m) {
  double best = 0.0;
  for (std::size_t node = 0; node < m.nodes(); ++node) best = std::max(best, m.at(node).cwiseAbs().maxCoeff());
  return best;
}

}  // namespace spencer
