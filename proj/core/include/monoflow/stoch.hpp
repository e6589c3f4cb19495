#pragma once

#include "monoflow/classify.hpp"
#include "monoflow/expr.hpp"
#include "monoflow/orders.hpp"

#include <Eigen/Core>

#include <cstddef>
#include <cstdint>
#include <map>
#include <string>
#include <vector>

namespace monoflow {

/// Ito diffusion dX = f(X) dt + sigma(X) dW with sigma an n x d matrix of
/// expressions in x1..xn. The diffusion matrix is c = sigma sigma^T.
class Diffusion {
 public:
  Diffusion(std::size_t n, const std::vector<std::string>& drift,
            const std::vector<std::vector<std::string>>& dispersion,
            const std::map<std::string, double>& params, Box domain);

  Diffusion(SignaturePtr sig, std::vector<Expr> drift, std::vector<std::vector<Expr>> dispersion,
            std::vector<double> param_values, Box domain);

  std::size_t n() const noexcept { return drift_.n(); }
  std::size_t noise_dim() const noexcept { return noise_dim_; }
  const SystemModel& drift_system() const noexcept { return drift_; }
  const std::vector<std::vector<Expr>>& dispersion() const noexcept { return dispersion_; }
  const Box& domain() const noexcept { return drift_.domain(); }

  Eigen::VectorXd drift(const Eigen::VectorXd& x) const;
  void drift(const Eigen::VectorXd& x, Eigen::VectorXd& out) const;
  Eigen::MatrixXd sigma(const Eigen::VectorXd& x) const;
  void sigma(const Eigen::VectorXd& x, Eigen::MatrixXd& out) const;
  Eigen::MatrixXd diffusion_matrix(const Eigen::VectorXd& x) const;

 private:
  struct ParsedTag {};
  Diffusion(ParsedTag, const SignaturePtr& sig, const std::vector<std::string>& drift,
            const std::vector<std::vector<std::string>>& dispersion,
            std::vector<double> param_values, Box domain);

  SystemModel drift_;
  std::vector<std::vector<Expr>> dispersion_;
  std::size_t noise_dim_ = 0;
};

/// Drift T f(T y) and dispersion T sigma(T y), so c~ = T c(T y) T.
Diffusion transform_diffusion(const Diffusion& diff, const OrthantOrder& order);

struct EulerMaruyamaConfig {
  double horizon = 1.0;
  double dt = 1e-3;
  std::size_t paths = 10'000;
  std::uint64_t seed = 42;
  std::size_t jobs = 1;
  /// Times at which the whole ensemble is recorded (rounded to the grid).
  std::vector<double> record_times;
};

/// Paths of an Euler-Maruyama simulation. Rows are paths.
struct Ensemble {
  Eigen::MatrixXd terminal;
  std::vector<double> record_times;
  std::vector<Eigen::MatrixXd> snapshots;
  /// 1 if the path was stopped early (non-finite value, blow-up or domain
  /// error); its row then holds the last valid state.
  std::vector<std::uint8_t> aborted;
  std::uint64_t seed = 0;

  std::size_t paths() const noexcept { return static_cast<std::size_t>(terminal.rows()); }
  std::size_t aborted_count() const;
};

/// x_{k+1} = x_k + f(x_k) dt + sigma(x_k) sqrt(dt) xi_k, xi_k ~ N(0, I_d).
/// Path p draws its normals from the counter-based stream (seed, p), so the
/// ensemble does not depend on `jobs`.
Ensemble euler_maruyama(const Diffusion& diff, const Eigen::VectorXd& x0,
                        const EulerMaruyamaConfig& config);

struct DiffusionCheck {
  Verdict verdict = Verdict::pass;
  /// Named sub-checks in a fixed order.
  std::vector<std::pair<std::string, CheckResult>> parts;

  const CheckResult& part(const std::string& name) const;
};

/// Structural conditions for propagating the increasing order: cooperative
/// drift and c_ij depending only on x_i and x_j.
DiffusionCheck check_fd_diffusion_conditions(const Diffusion& diff, const OrthantOrder& order,
                                             const ClassifyConfig& config);

/// Conditions for propagating the increasing convex order: cooperative and
/// componentwise convex drift, and sigma sigma^T increasing and midpoint
/// convex in the PSD order.
DiffusionCheck check_icx_diffusion_conditions(const Diffusion& diff, const OrthantOrder& order,
                                              const ClassifyConfig& config);

/// Draws `count` samples of N(mean, cov) using per-row streams of `seed`.
/// Ensembles drawn with the same seed share their standard normals.
Eigen::MatrixXd sample_gaussian(const GaussianState& g, std::size_t count, std::uint64_t seed);

struct EmpiricalOrderResult {
  Verdict verdict = Verdict::pass;
  /// mean g(B) - mean g(A) per test function.
  std::vector<double> margins;
  /// Allowed shortfall per function (3 pooled standard errors).
  std::vector<double> thresholds;
  std::size_t violations = 0;
};

/// Necessary-condition test of A <= B in the order generated by `cls`
/// (fd or icx): E g(A) <= E g(B) for random increasing (fd) or max-affine
/// increasing convex (icx) functions g, up to 3 pooled standard errors.
/// The first icx functions are the coordinates of T x.
EmpiricalOrderResult empirical_order_test(const Eigen::MatrixXd& a, const Eigen::MatrixXd& b,
                                          const OrthantOrder& order, OrderClass cls,
                                          std::size_t n_functions, std::uint64_t seed);

}  // namespace monoflow
