#pragma once

#include <Eigen/Core>

#include <cstddef>
#include <vector>

namespace monoflow {

/// Axis-aligned box [lo, hi] in R^d. A box with d == 0 is allowed and has no
/// axes (used for systems without inputs).
struct Box {
  Eigen::VectorXd lo;
  Eigen::VectorXd hi;

  Box() = default;
  Box(Eigen::VectorXd lo_, Eigen::VectorXd hi_);

  /// Builds a box from `{{lo, hi}, ...}` pairs.
  static Box from_intervals(const std::vector<std::pair<double, double>>& axes);

  std::size_t dim() const noexcept { return static_cast<std::size_t>(lo.size()); }
  bool contains(const Eigen::VectorXd& p) const;
  bool has_positive_volume() const;
  Eigen::VectorXd center() const { return 0.5 * (lo + hi); }

  /// Maps unit-cube coordinates in [0,1]^d onto the box.
  Eigen::VectorXd from_unit(const Eigen::Ref<const Eigen::VectorXd>& unit) const;

  /// Box scaled about its center by `factor` along every axis.
  Box expanded(double factor) const;
};

}  // namespace monoflow
