#pragma once

#include <cstddef>
#include <memory>
#include <span>
#include <stdexcept>
#include <utility>
#include <vector>

namespace spencer {

class PatchError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// Vertex-centred uniform grid on a box in R^{dim}. Nodes are numbered
/// row-major: the first axis varies slowest.
class Patch {
 public:
  static constexpr std::size_t kDefaultBudget = 2'000'000;

  Patch(int dim_half, std::vector<std::pair<double, double>> bounds, std::vector<int> resolution,
        std::size_t budget = kDefaultBudget);

  /// Cube [lo, hi]^{2n} with `res` points per axis.
  static Patch cube(int dim_half, double lo, double hi, int res);

  int dim_half() const { return dim_half_; }
  int dim() const { return 2 * dim_half_; }
  std::size_t size() const { return size_; }
  int resolution(int axis) const { return resolution_[static_cast<std::size_t>(axis)]; }
  double lo(int axis) const { return bounds_[static_cast<std::size_t>(axis)].first; }
  double hi(int axis) const { return bounds_[static_cast<std::size_t>(axis)].second; }
  double spacing(int axis) const { return spacing_[static_cast<std::size_t>(axis)]; }
  double max_spacing() const;
  std::size_t stride(int axis) const { return stride_[static_cast<std::size_t>(axis)]; }
  const std::vector<std::pair<double, double>>& bounds() const { return bounds_; }
  const std::vector<int>& resolutions() const { return resolution_; }

  int index_along(std::size_t node, int axis) const {
    return static_cast<int>((node / stride(axis)) % static_cast<std::size_t>(resolution(axis)));
  }
  std::size_t node_at(std::span<const int> idx) const;
  void coords(std::size_t node, std::span<double> x) const;
  std::vector<double> coords(std::size_t node) const;
  bool is_interior(std::size_t node) const;
  bool is_boundary(std::size_t node) const { return !is_interior(node); }
  bool contains(std::span<const double> x, double slack = 1e-12) const;
  /// Grid node nearest to `x` (clamped into the box).
  std::size_t nearest_node(std::span<const double> x) const;
  /// Node at the centre of the grid (exact midpoint when resolutions are odd).
  std::size_t center_node() const;
  /// Cell volume h_1 * ... * h_d.
  double cell_volume() const;

  /// Same box with resolution r -> factor*(r-1)+1 on every axis.
  Patch refined(int factor = 2) const;
  /// Same box with `res` points on every axis.
  Patch with_resolution(int res) const;

  bool operator==(const Patch& other) const {
    return dim_half_ == other.dim_half_ && bounds_ == other.bounds_ && resolution_ == other.resolution_;
  }

 private:
  int dim_half_;
  std::vector<std::pair<double, double>> bounds_;
  std::vector<int> resolution_;
  std::vector<double> spacing_;
  std::vector<std::size_t> stride_;
  std::size_t size_ = 0;
  std::size_t budget_;
};

using PatchPtr = std::shared_ptr<const Patch>;

}  // namespace spencer
