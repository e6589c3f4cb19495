#pragma once

#include "monoflow/expr.hpp"
#include "monoflow/orders.hpp"

#include <Eigen/Core>

#include <cstddef>
#include <cstdint>
#include <limits>
#include <string>
#include <vector>

namespace monoflow {

enum class Verdict { pass, fail };

const char* to_string(Verdict v) noexcept;

/// Stochastic orders generated by classes of test functions: increasing,
/// increasing convex, increasing concave, increasing directionally convex.
enum class OrderClass { fd, icx, icv, idcx };

const char* to_string(OrderClass c) noexcept;

/// A sample at which a condition was violated. Coordinates are those of the
/// transformed (standard-order) system.
struct Witness {
  std::size_t sample = 0;
  Eigen::VectorXd point;    // (x, u)
  Eigen::VectorXd partner;  // second point (y, v) or chord end; empty if unused
  std::size_t component = 0;
  std::string quantity;
  double value = 0.0;
};

/// Outcome of a sampled check: "pass at budget `samples`, tolerance tol".
struct CheckResult {
  Verdict verdict = Verdict::pass;
  std::size_t samples = 0;
  std::size_t violations = 0;
  /// Smallest margin seen; the check passes iff worst >= -tol.
  double worst = std::numeric_limits<double>::infinity();
  /// First violating samples in sample-index order, at most max_witnesses.
  std::vector<Witness> witnesses;
};

struct ClassifyConfig {
  std::size_t samples = 10'000;
  double tol = 1e-6;
  std::uint64_t seed = 42;
  std::size_t max_witnesses = 10;
  std::size_t jobs = 1;
};

enum class Curvature { convex, concave };

struct ClassificationReport {
  OrthantOrder order;
  ClassifyConfig config;
  CheckResult jacobian;
  CheckResult kamke;
  Verdict monotone = Verdict::fail;
  CheckResult convex;
  CheckResult concave;
  CheckResult directionally_convex;
  std::vector<OrderClass> propagates;

  bool propagates_class(OrderClass c) const;
};

/// f~(y, w) = T f(T y, T_u w) with boxes mapped through T; the result is
/// checked against the standard order. Applying it twice gives back the
/// original expressions.
SystemModel transform_system(const SystemModel& system, const OrthantOrder& order);

/// Off-diagonal state entries and all input entries of the Jacobian of the
/// transformed system must be >= -tol at every sample.
CheckResult check_jacobian_metzler(const SystemModel& system, const OrthantOrder& order,
                                   const ClassifyConfig& config);

/// Boundary-pair Kamke test: x <= y with x_i = y_i and u <= v must give
/// f_i(x,u) <= f_i(y,v) + tol.
CheckResult check_kamke_sampled(const SystemModel& system, const OrthantOrder& order,
                                const ClassifyConfig& config);

/// Hessian eigenvalue test of every transformed component, corroborated by a
/// midpoint secant test on sampled chords.
CheckResult check_convexity(const SystemModel& system, const OrthantOrder& order,
                            Curvature curvature, const ClassifyConfig& config);

/// Every entry of every transformed-component Hessian must be >= -tol.
CheckResult check_directional_convexity(const SystemModel& system, const OrthantOrder& order,
                                        const ClassifyConfig& config);

ClassificationReport classify_system(const SystemModel& system, const OrthantOrder& order,
                                     const ClassifyConfig& config = {});

}  // namespace monoflow
