#pragma once

#include <Eigen/Core>

#include <cstddef>
#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

namespace monoflow {

/// Partial order induced by the orthant T * R^n_+, T = diag(signs), on states
/// and (separately) on inputs. x <= y iff T(y - x) >= 0 componentwise.
class OrthantOrder {
 public:
  OrthantOrder() = default;
  /// Input signs default to all +1 when `input_signs` is empty and m > 0.
  explicit OrthantOrder(std::vector<int> state_signs, std::vector<int> input_signs = {});

  static OrthantOrder standard(std::size_t n, std::size_t m = 0);

  /// Parses "+,-,+" (also accepts "1,-1"). Input signs may follow a ';'.
  static OrthantOrder parse(std::string_view text);

  std::size_t n() const noexcept { return state_.size(); }
  std::size_t m() const noexcept { return input_.size(); }
  const std::vector<int>& state_signs() const noexcept { return state_; }
  const std::vector<int>& input_signs() const noexcept { return input_; }

  /// Input signs padded with +1 up to dimension m.
  std::vector<int> input_signs_for(std::size_t m) const;
  bool is_standard() const;

  Eigen::VectorXd apply(const Eigen::VectorXd& x) const;
  Eigen::VectorXd apply_input(const Eigen::VectorXd& u) const;
  Eigen::MatrixXd matrix() const;

  std::string to_string() const;

  friend bool operator==(const OrthantOrder&, const OrthantOrder&) = default;

 private:
  std::vector<int> state_;
  std::vector<int> input_;
};

/// Smallest component of T(y - x); x <= y iff this is >= 0.
double cone_margin(const Eigen::VectorXd& x, const Eigen::VectorXd& y, const OrthantOrder& order);

bool leq_cone(const Eigen::VectorXd& x, const Eigen::VectorXd& y, const OrthantOrder& order,
              double tol);

/// Smallest eigenvalue of the symmetrized difference b - a.
double psd_margin(const Eigen::MatrixXd& a, const Eigen::MatrixXd& b);

/// a <=_psd b, decided by lambda_min(sym(b - a)) >= -tol. Inputs must be
/// symmetric to within 1e-9.
bool psd_leq(const Eigen::MatrixXd& a, const Eigen::MatrixXd& b, double tol);

/// Multivariate normal N(mean, cov).
struct GaussianState {
  Eigen::VectorXd mean;
  Eigen::MatrixXd cov;

  GaussianState() = default;
  GaussianState(Eigen::VectorXd mean_, Eigen::MatrixXd cov_);

  std::size_t dim() const noexcept { return static_cast<std::size_t>(mean.size()); }
};

/// Exact increasing-order comparison of two Gaussians: means ordered and
/// covariances equal (max-norm within tol).
bool gaussian_fd_leq(const GaussianState& a, const GaussianState& b, const OrthantOrder& order,
                     double tol);

/// Sufficient criterion for the increasing-convex order of two Gaussians:
/// means ordered and covariances ordered in the PSD sense. A false result does
/// not refute the order.
bool gaussian_icx_leq(const GaussianState& a, const GaussianState& b, const OrthantOrder& order,
                      double tol);

}  // namespace monoflow
