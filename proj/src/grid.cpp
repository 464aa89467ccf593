#include "spencer/grid.hpp"

#include <algorithm>
#include <cmath>
#include <string>

namespace spencer {

Patch::Patch(int dim_half, std::vector<std::pair<double, double>> bounds, std::vector<int> resolution,
             std::size_t budget)
    : dim_half_(dim_half), bounds_(std::move(bounds)), resolution_(std::move(resolution)), budget_(budget) {
  if (dim_half < 1) throw PatchError("patch: dim_half must be positive");
  const std::size_t d = static_cast<std::size_t>(2 * dim_half);
  if (bounds_.size() != d || resolution_.size() != d)
    throw PatchError("patch: expected " + std::to_string(d) + " bounds and resolutions");
  spacing_.resize(d);
  stride_.resize(d);
  double total = 1.0;
  for (std::size_t i = 0; i < d; ++i) {
    auto [lo, hi] = bounds_[i];
    if (!(lo < hi)) throw PatchError("patch: axis " + std::to_string(i + 1) + " has min >= max");
    if (resolution_[i] < 2) throw PatchError("patch: axis " + std::to_string(i + 1) + " needs at least 2 points");
    spacing_[i] = (hi - lo) / (resolution_[i] - 1);
    if (!std::isfinite(spacing_[i]) || spacing_[i] <= 0.0)
      throw PatchError("patch: axis " + std::to_string(i + 1) + " spacing is not finite and positive");
    total *= resolution_[i];
  }
  if (total > static_cast<double>(budget_))
    throw PatchError("patch: " + std::to_string(static_cast<long long>(total)) + " points exceed budget " +
                     std::to_string(budget_));
  size_ = static_cast<std::size_t>(total);
  std::size_t s = 1;
  for (std::size_t i = d; i-- > 0;) {
    stride_[i] = s;
    s *= static_cast<std::size_t>(resolution_[i]);
  }
}

Patch Patch::cube(int dim_half, double lo, double hi, int res) {
  const std::size_t d = static_cast<std::size_t>(2 * dim_half);
  return Patch(dim_half, std::vector<std::pair<double, double>>(d, {lo, hi}), std::vector<int>(d, res));
}

double Patch::max_spacing() const { return *std::max_element(spacing_.begin(), spacing_.end()); }

std::size_t Patch::node_at(std::span<const int> idx) const {
  std::size_t n = 0;
  for (int a = 0; a < dim(); ++a) n += static_cast<std::size_t>(idx[static_cast<std::size_t>(a)]) * stride(a);
  return n;
}

void Patch::coords(std::size_t node, std::span<double> x) const {
  for (int a = 0; a < dim(); ++a) {
    int i = index_along(node, a);
    // Hit the upper bound exactly on the last node.
    x[static_cast<std::size_t>(a)] = (i == resolution(a) - 1) ? hi(a) : lo(a) + i * spacing(a);
  }
}

std::vector<double> Patch::coords(std::size_t node) const {
  std::vector<double> x(static_cast<std::size_t>(dim()));
  coords(node, x);
  return x;
}

bool Patch::is_interior(std::size_t node) const {
  for (int a = 0; a < dim(); ++a) {
    int i = index_along(node, a);
    if (i == 0 || i == resolution(a) - 1) return false;
  }
  return true;
}

bool Patch::contains(std::span<const double> x, double slack) const {
  for (int a = 0; a < dim(); ++a) {
    double v = x[static_cast<std::size_t>(a)];
    double tol = slack * std::max(1.0, hi(a) - lo(a));
    if (v < lo(a) - tol || v > hi(a) + tol) return false;
  }
  return true;
}

std::size_t Patch::nearest_node(std::span<const double> x) const {
  std::size_t n = 0;
  for (int a = 0; a < dim(); ++a) {
    double t = (x[static_cast<std::size_t>(a)] - lo(a)) / spacing(a);
    int i = std::clamp(static_cast<int>(std::lround(t)), 0, resolution(a) - 1);
    n += static_cast<std::size_t>(i) * stride(a);
  }
  return n;
}

std::size_t Patch::center_node() const {
  std::size_t n = 0;
  for (int a = 0; a < dim(); ++a) n += static_cast<std::size_t>((resolution(a) - 1) / 2) * stride(a);
  return n;
}

double Patch::cell_volume() const {
  double v = 1.0;
  for (double h : spacing_) v *= h;
  return v;
}

Patch Patch::refined(int factor) const {
  std::vector<int> res = resolution_;
  for (int& r : res) r = factor * (r - 1) + 1;
  return Patch(dim_half_, bounds_, std::move(res), budget_);
}

Patch Patch::with_resolution(int res) const {
  return Patch(dim_half_, bounds_, std::vector<int>(resolution_.size(), res), budget_);
}

}  // namespace spencer
