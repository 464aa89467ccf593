#pragma once

#include <cmath>
#include <cstddef>
#include <string>
#include <utility>
#include <vector>

#include "spencer/field.hpp"

namespace spencer {

/// Pointwise residual summary over the interior nodes of a patch.
struct ResidualReport {
  std::string check;  // identifier of the identity being tested
  double sup = 0.0;
  double l2 = 0.0;  // sqrt(sum v^2 * cell volume)
  std::size_t worst_node = 0;
  DiffMode mode = DiffMode::Exact;
  std::vector<std::pair<std::string, double>> breakdown;  // per-equation sup norms

  bool within(double tol) const { return sup <= tol; }
};

class ResidualAccumulator {
 public:
  ResidualAccumulator(std::string check, const Patch& patch, DiffMode mode) : patch_(&patch) {
    rep_.check = std::move(check);
    rep_.mode = mode;
  }

  void add(std::size_t node, double v) {
    sum_sq_ += v * v;
    if (!seen_ || v > rep_.sup) {
      rep_.sup = v;
      rep_.worst_node = node;
      seen_ = true;
    }
  }
  /// Per-equation sup, keyed by name in first-seen order.
  void add_part(std::size_t index, const std::string& name, double v) {
    if (index >= rep_.breakdown.size()) rep_.breakdown.resize(index + 1);
    auto& slot = rep_.breakdown[index];
    if (slot.first.empty()) slot.first = name;
    slot.second = std::max(slot.second, v);
  }

  ResidualReport finish() {
    rep_.l2 = std::sqrt(sum_sq_ * patch_->cell_volume());
    return rep_;
  }

 private:
  const Patch* patch_;
  ResidualReport rep_;
  double sum_sq_ = 0.0;
  bool seen_ = false;
};

}  // namespace spencer
