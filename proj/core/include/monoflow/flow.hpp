#pragma once

#include "monoflow/classify.hpp"
#include "monoflow/expr.hpp"
#include "monoflow/orders.hpp"

#include <Eigen/Core>

#include <cstddef>
#include <cstdint>
#include <limits>
#include <vector>

namespace monoflow {

/// Piecewise-constant input: values[k] holds on [switch_times[k], switch_times[k+1]).
/// The first piece also covers every time before switch_times[0].
class InputSignal {
 public:
  InputSignal() = default;
  InputSignal(std::vector<double> switch_times, std::vector<Eigen::VectorXd> values);

  static InputSignal constant(Eigen::VectorXd u);
  static InputSignal none() { return constant(Eigen::VectorXd(0)); }

  std::size_t dim() const noexcept;
  const Eigen::VectorXd& at(double t) const;

  const std::vector<double>& switch_times() const noexcept { return times_; }
  const std::vector<Eigen::VectorXd>& values() const noexcept { return values_; }

 private:
  std::vector<double> times_;
  std::vector<Eigen::VectorXd> values_;
};

/// Solution samples on a uniform time grid.
struct Trajectory {
  std::vector<double> times;
  std::vector<Eigen::VectorXd> states;
  InputSignal input;

  std::size_t size() const noexcept { return times.size(); }
};

/// Number of uniform steps used for horizon T at nominal step dt; the actual
/// step is T / steps.
std::size_t grid_steps(double horizon, double dt);

/// Classical fixed-step fourth-order Runge-Kutta. The input is sampled at the
/// start of each step. Throws BlowUpError if a state leaves the domain box
/// scaled by 10 about its center or becomes non-finite.
Trajectory integrate_rk4(const SystemModel& system, const Eigen::VectorXd& x0,
                         const InputSignal& u, double horizon, double dt);

struct FlowTestConfig {
  std::size_t trials = 1'000;
  double horizon = 10.0;
  /// Nominal step; 0 selects 1e-3 * horizon.
  double dt = 0.0;
  double tol = 1e-7;
  std::uint64_t seed = 42;
  std::size_t jobs = 1;

  double step() const noexcept { return dt > 0.0 ? dt : 1e-3 * horizon; }
};

/// Per-time margin of one trial: the smallest component of the quantity that
/// must be nonnegative (in transformed coordinates).
struct MarginTrace {
  std::vector<double> times;
  std::vector<double> margins;
  std::vector<std::size_t> components;

  double worst() const;
  std::size_t worst_index() const;
};

/// Initial conditions and inputs of one trial, in original coordinates.
/// Order: x <= y. Convexity: x, y, lambda. Directional convexity: the lattice
/// quadruple x1 = points[0], x2, x3, x4 with x1 + x4 = x2 + x3.
struct FlowTrial {
  std::vector<Eigen::VectorXd> points;
  std::vector<Eigen::VectorXd> inputs;
  double lambda = 0.0;
};

struct FlowTestResult {
  Verdict verdict = Verdict::pass;
  std::size_t trials = 0;
  std::size_t inconclusive = 0;
  std::size_t violations = 0;
  double worst_margin = std::numeric_limits<double>::infinity();
  std::size_t worst_trial = 0;
  double worst_time = 0.0;
  std::size_t worst_component = 0;
  FlowTrial worst;
  /// Trajectories (original coordinates) of the worst-margin trial.
  std::vector<Trajectory> worst_trajectories;
};

/// phi(t; y, v) - phi(t; x, u) mapped through T, for x <= y and u <= v.
MarginTrace order_margin(const SystemModel& system, const OrthantOrder& order, const FlowTrial& trial,
                         double horizon, double dt);

/// lambda T phi(x,u) + (1-lambda) T phi(y,v) - T phi(x^lambda, u^lambda).
MarginTrace convexity_margin(const SystemModel& system, const OrthantOrder& order,
                             const FlowTrial& trial, double horizon, double dt);

/// T (phi1 + phi4 - phi2 - phi3) over a lattice quadruple.
MarginTrace directional_convexity_margin(const SystemModel& system, const OrthantOrder& order,
                                         const FlowTrial& trial, double horizon, double dt);

/// Empirical check that ordered pairs stay ordered along the flow.
FlowTestResult test_order_preservation(const SystemModel& system, const OrthantOrder& order,
                                       const FlowTestConfig& config);

/// Empirical check that the flow map is convex in (x, u) with respect to the order.
FlowTestResult test_flow_convexity(const SystemModel& system, const OrthantOrder& order,
                                   const FlowTestConfig& config);

/// Empirical check of the lattice-quadruple inequality for the flow map.
FlowTestResult test_flow_directional_convexity(const SystemModel& system,
                                               const OrthantOrder& order,
                                               const FlowTestConfig& config);

}  // namespace monoflow
