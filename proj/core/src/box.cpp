#include "monoflow/box.hpp"

#include "monoflow/error.hpp"

namespace monoflow {

Box::Box(Eigen::VectorXd lo_, Eigen::VectorXd hi_) : lo(std::move(lo_)), hi(std::move(hi_)) {
  if (lo.size() != hi.size()) throw DimensionError("box bounds have different lengths");
}

Box Box::from_intervals(const std::vector<std::pair<double, double>>& axes) {
  Eigen::VectorXd lo(static_cast<Eigen::Index>(axes.size()));
  Eigen::VectorXd hi(static_cast<Eigen::Index>(axes.size()));
  for (std::size_t j = 0; j < axes.size(); ++j) {
    lo[static_cast<Eigen::Index>(j)] = axes[j].first;
    hi[static_cast<Eigen::Index>(j)] = axes[j].second;
  }
  return Box(std::move(lo), std::move(hi));
}

bool Box::contains(const Eigen::VectorXd& p) const {
  if (p.size() != lo.size()) return false;
  for (Eigen::Index j = 0; j < p.size(); ++j) {
    if (!(p[j] >= lo[j] && p[j] <= hi[j])) return false;
  }
  return true;
}

bool Box::has_positive_volume() const {
  for (Eigen::Index j = 0; j < lo.size(); ++j) {
    if (!(lo[j] < hi[j])) return false;
  }
  return true;
}

Eigen::VectorXd Box::from_unit(const Eigen::Ref<const Eigen::VectorXd>& unit) const {
  return lo + (hi - lo).cwiseProduct(unit);
}

Box Box::expanded(double factor) const {
  const Eigen::VectorXd c = center();
  const Eigen::VectorXd half = 0.5 * (hi - lo) * factor;
  return Box(c - half, c + half);
}

}  // namespace monoflow
