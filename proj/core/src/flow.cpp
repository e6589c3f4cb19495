#include "monoflow/flow.hpp"

#include "monoflow/error.hpp"
#include "monoflow/sampling.hpp"

#include <algorithm>
#include <cmath>
#include <optional>

namespace monoflow {

InputSignal::InputSignal(std::vector<double> switch_times, std::vector<Eigen::VectorXd> values)
    : times_(std::move(switch_times)), values_(std::move(values)) {
  if (times_.size() != values_.size() || values_.empty())
    throw InputError("input signal needs one value per switch time");
  for (std::size_t k = 1; k < times_.size(); ++k) {
    if (!(times_[k] > times_[k - 1])) throw InputError("input switch times must increase");
    if (values_[k].size() != values_[0].size()) throw DimensionError("input values differ in size");
  }
}

InputSignal InputSignal::constant(Eigen::VectorXd u) {
  return InputSignal({0.0}, {std::move(u)});
}

std::size_t InputSignal::dim() const noexcept {
  return values_.empty() ? 0 : static_cast<std::size_t>(values_[0].size());
}

const Eigen::VectorXd& InputSignal::at(double t) const {
  static const Eigen::VectorXd empty(0);
  if (values_.empty()) return empty;
  const auto it = std::upper_bound(times_.begin(), times_.end(), t);
  const std::size_t k = it == times_.begin() ? 0 : static_cast<std::size_t>(it - times_.begin()) - 1;
  return values_[k];
}

std::size_t grid_steps(double horizon, double dt) {
  if (!(dt > 0.0) || !std::isfinite(dt)) throw InputError("time step must be positive");
  if (!(horizon > 0.0) || !std::isfinite(horizon)) throw InputError("horizon must be positive");
  return std::max<std::size_t>(1, static_cast<std::size_t>(std::llround(horizon / dt)));
}

Trajectory integrate_rk4(const SystemModel& system, const Eigen::VectorXd& x0,
                         const InputSignal& u, double horizon, double dt) {
  const std::size_t steps = grid_steps(horizon, dt);
  if (static_cast<std::size_t>(x0.size()) != system.n())
    throw DimensionError("initial state dimension does not match system");
  if (u.dim() != system.m()) throw DimensionError("input dimension does not match system");
  const double h = horizon / static_cast<double>(steps);
  const Box guard = system.domain().expanded(10.0);

  Trajectory traj;
  traj.input = u;
  traj.times.reserve(steps + 1);
  traj.states.reserve(steps + 1);
  traj.times.push_back(0.0);
  traj.states.push_back(x0);

  Eigen::VectorXd x = x0;
  Eigen::VectorXd k1, k2, k3, k4, tmp;
  for (std::size_t s = 0; s < steps; ++s) {
    const double t = static_cast<double>(s) * h;
    const Eigen::VectorXd& us = u.at(t);
    system.field(x, us, k1);
    tmp = x + 0.5 * h * k1;
    system.field(tmp, us, k2);
    tmp = x + 0.5 * h * k2;
    system.field(tmp, us, k3);
    tmp = x + h * k3;
    system.field(tmp, us, k4);
    x += (h / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4);

    const double t_next = static_cast<double>(s + 1) * h;
    if (!x.allFinite()) throw BlowUpError("non-finite state", t_next);
    if (!guard.contains(x)) throw BlowUpError("state left the expanded domain", t_next);
    traj.times.push_back(t_next);
    traj.states.push_back(x);
  }
  return traj;
}

double MarginTrace::worst() const {
  if (margins.empty()) return std::numeric_limits<double>::infinity();
  return margins[worst_index()];
}

std::size_t MarginTrace::worst_index() const {
  return static_cast<std::size_t>(std::min_element(margins.begin(), margins.end()) -
                                  margins.begin());
}

namespace {

// Trial in transformed coordinates: same layout as FlowTrial.
FlowTrial map_trial(const FlowTrial& trial, const OrthantOrder& order) {
  FlowTrial out = trial;
  for (auto& p : out.points) p = order.apply(p);
  for (auto& u : out.inputs) u = order.apply_input(u);
  return out;
}

void require_points(const FlowTrial& trial, std::size_t count) {
  if (trial.points.size() != count || trial.inputs.size() != count)
    throw InputError("flow trial needs " + std::to_string(count) + " points and inputs");
}

// Combines trajectories on a shared grid; `weights` multiply each trajectory.
MarginTrace combine(const std::vector<Trajectory>& trajs, const std::vector<double>& weights) {
  MarginTrace trace;
  const std::size_t len = trajs.front().size();
  trace.times = trajs.front().times;
  trace.margins.resize(len);
  trace.components.resize(len);
  for (std::size_t k = 0; k < len; ++k) {
    Eigen::VectorXd acc = Eigen::VectorXd::Zero(trajs.front().states[k].size());
    for (std::size_t j = 0; j < trajs.size(); ++j) acc += weights[j] * trajs[j].states[k];
    Eigen::Index c = 0;
    trace.margins[k] = acc.size() ? acc.minCoeff(&c) : std::numeric_limits<double>::infinity();
    trace.components[k] = static_cast<std::size_t>(c);
  }
  return trace;
}

std::vector<Trajectory> integrate_all(const SystemModel& t, const FlowTrial& trial, double horizon,
                                      double dt) {
  std::vector<Trajectory> trajs;
  trajs.reserve(trial.points.size());
  for (std::size_t j = 0; j < trial.points.size(); ++j)
    trajs.push_back(integrate_rk4(t, trial.points[j], InputSignal::constant(trial.inputs[j]),
                                  horizon, dt));
  return trajs;
}

MarginTrace order_margin_t(const SystemModel& t, const FlowTrial& trial, double horizon, double dt) {
  require_points(trial, 2);
  return combine(integrate_all(t, trial, horizon, dt), {-1.0, 1.0});
}

// Appends the interpolated point so trial.points = {x, y, x^lambda}.
FlowTrial with_convex_combination(FlowTrial trial) {
  const double l = trial.lambda;
  trial.points.push_back(l * trial.points[0] + (1.0 - l) * trial.points[1]);
  trial.inputs.push_back(l * trial.inputs[0] + (1.0 - l) * trial.inputs[1]);
  return trial;
}

MarginTrace convexity_margin_t(const SystemModel& t, const FlowTrial& trial, double horizon,
                               double dt) {
  require_points(trial, 2);
  if (!(trial.lambda >= 0.0 && trial.lambda <= 1.0)) throw InputError("lambda must lie in [0,1]");
  const FlowTrial full = with_convex_combination(trial);
  return combine(integrate_all(t, full, horizon, dt), {trial.lambda, 1.0 - trial.lambda, -1.0});
}

MarginTrace dirconvexity_margin_t(const SystemModel& t, const FlowTrial& trial, double horizon,
                                  double dt) {
  require_points(trial, 4);
  return combine(integrate_all(t, trial, horizon, dt), {1.0, -1.0, -1.0, 1.0});
}

Eigen::VectorXd uniform_in(const Box& box, CounterRng& rng) {
  Eigen::VectorXd r(static_cast<Eigen::Index>(box.dim()));
  for (Eigen::Index j = 0; j < r.size(); ++j) r[j] = rng.uniform();
  return box.from_unit(r);
}

// Ordered pair a <= b (standard order) inside the box.
std::pair<Eigen::VectorXd, Eigen::VectorXd> ordered_pair(const Box& box, CounterRng& rng) {
  Eigen::VectorXd a = uniform_in(box, rng);
  Eigen::VectorXd b = uniform_in(box, rng);
  return {a.cwiseMin(b), a.cwiseMax(b)};
}

// x1 and increments a, b >= 0 with x1 + a + b inside the box.
std::vector<Eigen::VectorXd> lattice_quadruple(const Box& box, CounterRng& rng) {
  const Eigen::VectorXd x1 = uniform_in(box, rng);
  Eigen::VectorXd a(x1.size());
  Eigen::VectorXd b(x1.size());
  for (Eigen::Index j = 0; j < x1.size(); ++j) {
    a[j] = rng.uniform() * (box.hi[j] - x1[j]);
    b[j] = rng.uniform() * (box.hi[j] - x1[j] - a[j]);
  }
  return {x1, x1 + a, x1 + b, x1 + a + b};
}

enum class Property { order, convexity, dirconvexity };

FlowTrial draw_trial(Property p, const SystemModel& t, CounterRng& rng) {
  FlowTrial trial;
  switch (p) {
    case Property::order: {
      auto [x, y] = ordered_pair(t.domain(), rng);
      auto [u, v] = ordered_pair(t.input_box(), rng);
      trial.points = {x, y};
      trial.inputs = {u, v};
      break;
    }
    case Property::convexity:
      trial.points = {uniform_in(t.domain(), rng), uniform_in(t.domain(), rng)};
      trial.inputs = {uniform_in(t.input_box(), rng), uniform_in(t.input_box(), rng)};
      trial.lambda = rng.uniform();
      break;
    case Property::dirconvexity:
      trial.points = lattice_quadruple(t.domain(), rng);
      trial.inputs = lattice_quadruple(t.input_box(), rng);
      break;
  }
  return trial;
}

MarginTrace margin_for(Property p, const SystemModel& t, const FlowTrial& trial, double horizon,
                       double dt) {
  switch (p) {
    case Property::order: return order_margin_t(t, trial, horizon, dt);
    case Property::convexity: return convexity_margin_t(t, trial, horizon, dt);
    case Property::dirconvexity: return dirconvexity_margin_t(t, trial, horizon, dt);
  }
  return {};
}

struct TrialOutcome {
  bool conclusive = false;
  double margin = std::numeric_limits<double>::infinity();
  double time = 0.0;
  std::size_t component = 0;
};

FlowTestResult run_flow_test(Property p, const SystemModel& system, const OrthantOrder& order,
                             const FlowTestConfig& config) {
  if (config.trials == 0) throw InputError("trial budget must be >= 1");
  if (!(config.tol > 0.0)) throw InputError("tolerance must be positive");
  const SystemModel t = transform_system(system, order);
  const double dt = config.step();
  grid_steps(config.horizon, dt);

  std::vector<TrialOutcome> outcomes(config.trials);
  parallel_for(config.trials, config.jobs, [&](std::size_t k) {
    CounterRng rng(config.seed, k, 0);
    const FlowTrial trial = draw_trial(p, t, rng);
    try {
      const MarginTrace trace = margin_for(p, t, trial, config.horizon, dt);
      const std::size_t w = trace.worst_index();
      outcomes[k] = {true, trace.margins[w], trace.times[w], trace.components[w]};
    } catch (const BlowUpError&) {
      outcomes[k] = {};
    }
  });

  FlowTestResult result;
  result.trials = config.trials;
  for (std::size_t k = 0; k < outcomes.size(); ++k) {
    const TrialOutcome& o = outcomes[k];
    if (!o.conclusive) {
      ++result.inconclusive;
      continue;
    }
    if (o.margin < -config.tol) ++result.violations;
    if (o.margin < result.worst_margin) {
      result.worst_margin = o.margin;
      result.worst_trial = k;
      result.worst_time = o.time;
      result.worst_component = o.component;
    }
  }
  result.verdict = result.violations == 0 ? Verdict::pass : Verdict::fail;

  if (result.inconclusive < result.trials) {
    CounterRng rng(config.seed, result.worst_trial, 0);
    FlowTrial trial = draw_trial(p, t, rng);
    if (p == Property::convexity) trial = with_convex_combination(trial);
    std::vector<Trajectory> trajs = integrate_all(t, trial, config.horizon, dt);
    for (Trajectory& tr : trajs) {
      for (auto& s : tr.states) s = order.apply(s);
      tr.input = InputSignal::constant(order.apply_input(tr.input.at(0.0)));
    }
    result.worst_trajectories = std::move(trajs);
    if (p == Property::convexity) {
      trial.points.pop_back();
      trial.inputs.pop_back();
    }
    result.worst = map_trial(trial, order);
  }
  return result;
}

}  // namespace

MarginTrace order_margin(const SystemModel& system, const OrthantOrder& order,
                         const FlowTrial& trial, double horizon, double dt) {
  return order_margin_t(transform_system(system, order), map_trial(trial, order), horizon, dt);
}

MarginTrace convexity_margin(const SystemModel& system, const OrthantOrder& order,
                             const FlowTrial& trial, double horizon, double dt) {
  return convexity_margin_t(transform_system(system, order), map_trial(trial, order), horizon, dt);
}

MarginTrace directional_convexity_margin(const SystemModel& system, const OrthantOrder& order,
                                         const FlowTrial& trial, double horizon, double dt) {
  return dirconvexity_margin_t(transform_system(system, order), map_trial(trial, order), horizon,
                               dt);
}

FlowTestResult test_order_preservation(const SystemModel& system, const OrthantOrder& order,
                                       const FlowTestConfig& config) {
  return run_flow_test(Property::order, system, order, config);
}

FlowTestResult test_flow_convexity(const SystemModel& system, const OrthantOrder& order,
                                   const FlowTestConfig& config) {
  return run_flow_test(Property::convexity, system, order, config);
}

FlowTestResult test_flow_directional_convexity(const SystemModel& system,
                                               const OrthantOrder& order,
                                               const FlowTestConfig& config) {
  return run_flow_test(Property::dirconvexity, system, order, config);
}

}  // namespace monoflow
