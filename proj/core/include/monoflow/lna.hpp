#pragma once

#include "monoflow/classify.hpp"
#include "monoflow/expr.hpp"
#include "monoflow/orders.hpp"
#include "monoflow/stoch.hpp"

#include <Eigen/Core>

#include <cstddef>
#include <map>
#include <optional>
#include <string>
#include <vector>

namespace monoflow {

enum class ReactionKind { degradation, conversion, other };

const char* to_string(ReactionKind k) noexcept;

struct Reaction {
  Eigen::VectorXi change;  // column of the stoichiometry matrix
  Expr rate;               // in x1..xn and the network parameters
  ReactionKind kind = ReactionKind::other;
};

/// Reaction network with rate expressions; x_i is the amount of species i.
class ReactionNetwork {
 public:
  struct ReactionSpec {
    std::vector<int> change;
    std::string rate;
  };

  /// Throws InputError on inconsistent stoichiometry or a rate that is
  /// negative at a sampled point of the positive orthant.
  ReactionNetwork(std::vector<std::string> species, const std::vector<ReactionSpec>& reactions,
                  const std::map<std::string, double>& params);

  std::size_t n() const noexcept { return species_.size(); }
  std::size_t size() const noexcept { return reactions_.size(); }
  const std::vector<std::string>& species() const noexcept { return species_; }
  const std::vector<Reaction>& reactions() const noexcept { return reactions_; }
  const SignaturePtr& signature() const noexcept { return sig_; }
  const std::vector<double>& param_values() const noexcept { return param_values_; }

  /// n x R stoichiometry matrix.
  Eigen::MatrixXd stoichiometry() const;
  Eigen::VectorXd rates(const Eigen::VectorXd& x) const;
  /// S v(x).
  Eigen::VectorXd drift(const Eigen::VectorXd& x) const;

  /// dx/dt = S v(x) as a SystemModel over `domain`.
  SystemModel drift_system(Box domain) const;

 private:
  std::vector<std::string> species_;
  SignaturePtr sig_;
  std::vector<double> param_values_;
  std::vector<Reaction> reactions_;
};

struct StructureCheck {
  bool ok = true;
  std::string reason;
};

/// True iff every reaction is a degradation X_i -> 0 or a conversion
/// X_i -> X_j whose rate is a positive constant times x_i (decided on the
/// rate expression, not numerically).
StructureCheck is_unimolecular(const ReactionNetwork& net);

/// Matrix A with S v(x) = A x for a unimolecular network. Throws InputError
/// otherwise.
Eigen::MatrixXd build_A(const ReactionNetwork& net);

/// True iff every rate depends only on the species it changes, i.e. the
/// network is a collection of decoupled birth-death processes.
StructureCheck check_birth_death_structure(const ReactionNetwork& net);

/// Mean and covariance of the linear noise approximation on a uniform grid.
struct GaussianTrajectory {
  std::vector<double> times;
  std::vector<Eigen::VectorXd> means;
  std::vector<Eigen::MatrixXd> covs;

  std::size_t size() const noexcept { return times.size(); }
};

/// Integrates dx/dt = S v(x) and dSigma/dt = J Sigma + Sigma J^T + S diag(v(x)) S^T
/// jointly with RK4. J is A for unimolecular networks and a central-difference
/// Jacobian of S v otherwise. Throws NumericalError if a rate turns negative
/// along the mean path.
GaussianTrajectory lna_moments(const ReactionNetwork& net, const GaussianState& initial,
                               double horizon, double dt);

struct LnaComparison {
  Verdict verdict = Verdict::pass;
  OrderClass order_class = OrderClass::icx;
  /// Whether the network structure guarantees propagation of the class.
  bool guaranteed = false;
  std::string label;
  std::optional<double> first_violation_time;
  std::vector<double> times;
  /// Smallest component of T(m_b - m_a) per grid time.
  std::vector<double> mean_margins;
  /// icx: lambda_min(Sigma_b - Sigma_a); fd: -max|Sigma_b - Sigma_a|.
  std::vector<double> cov_margins;
  GaussianTrajectory a;
  GaussianTrajectory b;
};

/// Propagates both initial Gaussians and applies the Gaussian criterion of
/// `cls` (fd or icx) at every grid time.
LnaComparison compare_lna(const ReactionNetwork& net, const GaussianState& a, const GaussianState& b,
                          const OrthantOrder& order, OrderClass cls, double horizon, double dt,
                          double tol = 1e-8);

/// Chemical Langevin form dX = S v(X) dt + S V(X) dW, V = diag(sqrt(v)).
Diffusion cle_diffusion(const ReactionNetwork& net, Box domain);

/// Linear noise approximation as one diffusion in (x, eta), 2n states:
/// dx = A x dt, d eta = A eta dt + S V(x) dW. Unimolecular networks only.
/// `domain` bounds x; eta gets a symmetric box of the same extent.
Diffusion lna_diffusion(const ReactionNetwork& net, const Box& domain);

}  // namespace monoflow
