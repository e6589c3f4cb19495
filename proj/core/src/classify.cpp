#include "monoflow/classify.hpp"

#include "monoflow/error.hpp"
#include "monoflow/sampling.hpp"

#include <Eigen/Eigenvalues>

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <optional>

namespace monoflow {

const char* to_string(Verdict v) noexcept { return v == Verdict::pass ? "pass" : "fail"; }

const char* to_string(OrderClass c) noexcept {
  switch (c) {
    case OrderClass::fd: return "F_d";
    case OrderClass::icx: return "F_icx";
    case OrderClass::icv: return "F_icv";
    case OrderClass::idcx: return "F_idcx";
  }
  return "?";
}

bool ClassificationReport::propagates_class(OrderClass c) const {
  return std::find(propagates.begin(), propagates.end(), c) != propagates.end();
}

SystemModel transform_system(const SystemModel& system, const OrthantOrder& order) {
  const std::size_t n = system.n();
  const std::size_t m = system.m();
  if (order.n() != n)
    throw DimensionError("order has " + std::to_string(order.n()) + " signs for a " +
                         std::to_string(n) + "-dimensional system");
  const std::vector<int> state = order.state_signs();
  const std::vector<int> input = order.input_signs_for(m);
  const SignaturePtr& sig = system.signature();

  std::vector<std::optional<Expr>> replacements(sig->size());
  for (std::size_t j = 0; j < n; ++j) {
    if (state[j] < 0) replacements[sig->state_slot(j)] = -Expr::state(sig, j);
  }
  for (std::size_t j = 0; j < m; ++j) {
    if (input[j] < 0) replacements[sig->input_slot(j)] = -Expr::symbol(sig, sig->input_slot(j));
  }

  std::vector<Expr> f;
  f.reserve(n);
  for (std::size_t i = 0; i < n; ++i) {
    Expr fi = system.f()[i].substitute(replacements);
    f.push_back(state[i] < 0 ? -fi : fi);
  }

  auto map_box = [](const Box& box, const std::vector<int>& signs) {
    Box out = box;
    for (std::size_t j = 0; j < signs.size(); ++j) {
      if (signs[j] < 0) {
        const auto k = static_cast<Eigen::Index>(j);
        out.lo[k] = -box.hi[k];
        out.hi[k] = -box.lo[k];
      }
    }
    return out;
  };
  return SystemModel(sig, std::move(f), system.param_values(), map_box(system.domain(), state),
                     map_box(system.input_box(), input));
}

namespace {

struct SampleOutcome {
  double margin = std::numeric_limits<double>::infinity();
  Witness witness;
};

std::string format_vector(const Eigen::VectorXd& v) {
  std::string s = "(";
  for (Eigen::Index k = 0; k < v.size(); ++k) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.17g", v[k]);
    if (k) s += ", ";
    s += buf;
  }
  return s + ")";
}

// Evaluates every sample (possibly in parallel) and folds the outcomes in
// sample order.
template <class Fn>
CheckResult run_samples(const ClassifyConfig& config, Fn&& sample) {
  if (config.samples == 0) throw InputError("sample budget must be >= 1");
  std::vector<SampleOutcome> outcomes(config.samples);
  parallel_for(config.samples, config.jobs, [&](std::size_t k) { outcomes[k] = sample(k); });

  CheckResult result;
  result.samples = config.samples;
  for (std::size_t k = 0; k < outcomes.size(); ++k) {
    SampleOutcome& o = outcomes[k];
    result.worst = std::min(result.worst, o.margin);
    if (o.margin < -config.tol) {
      ++result.violations;
      if (result.witnesses.size() < config.max_witnesses) {
        o.witness.sample = k;
        o.witness.value = o.margin;
        result.witnesses.push_back(std::move(o.witness));
      }
    }
  }
  result.verdict = result.violations == 0 ? Verdict::pass : Verdict::fail;
  return result;
}

[[noreturn]] void rethrow_at(const NumericalError& e, std::size_t sample, const Eigen::VectorXd& p) {
  throw NumericalError(std::string(e.what()) + " (sample " + std::to_string(sample) + ", point " +
                       format_vector(p) + ")");
}

Eigen::VectorXd joint(const Eigen::VectorXd& x, const Eigen::VectorXd& u) {
  Eigen::VectorXd z(x.size() + u.size());
  z << x, u;
  return z;
}

std::string partial_name(const SystemModel& s, std::size_t i, std::size_t j) {
  return "d f" + std::to_string(i + 1) + " / d " + s.signature()->name(j);
}

// Point in domain x input_box from unit coordinates starting at `offset`.
Eigen::VectorXd joint_point(const SystemModel& s, const Eigen::VectorXd& unit, Eigen::Index offset) {
  const auto n = static_cast<Eigen::Index>(s.n());
  const auto m = static_cast<Eigen::Index>(s.m());
  return joint(s.domain().from_unit(unit.segment(offset, n)),
               s.input_box().from_unit(unit.segment(offset + n, m)));
}

}  // namespace

CheckResult check_jacobian_metzler(const SystemModel& system, const OrthantOrder& order,
                                   const ClassifyConfig& config) {
  const SystemModel t = transform_system(system, order);
  const std::size_t n = t.n();
  const std::size_t m = t.m();
  const HaltonSequence halton(n + m, config.seed);

  return run_samples(config, [&](std::size_t k) {
    const Eigen::VectorXd z = joint_point(t, halton.point(k), 0);
    const Eigen::VectorXd x = z.head(static_cast<Eigen::Index>(n));
    const Eigen::VectorXd u = z.tail(static_cast<Eigen::Index>(m));
    Eigen::MatrixXd jac;
    try {
      jac = jacobian_fd(t, x, u);
    } catch (const NumericalError& e) {
      rethrow_at(e, k, z);
    }
    SampleOutcome out;
    for (std::size_t i = 0; i < n; ++i) {
      for (std::size_t j = 0; j < n + m; ++j) {
        if (j == i) continue;
        const double v = jac(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j));
        if (v < out.margin) {
          out.margin = v;
          out.witness.component = i;
          out.witness.quantity = partial_name(t, i, j);
        }
      }
    }
    out.witness.point = z;
    return out;
  });
}

CheckResult check_kamke_sampled(const SystemModel& system, const OrthantOrder& order,
                                const ClassifyConfig& config) {
  const SystemModel t = transform_system(system, order);
  const auto n = static_cast<Eigen::Index>(t.n());
  const auto m = static_cast<Eigen::Index>(t.m());
  // Coordinates: x (n), face index (1), y increments (n), u (m), v increments (m).
  const HaltonSequence halton(static_cast<std::size_t>(2 * n + 1 + 2 * m), config.seed);
  const Box& dom = t.domain();
  const Box& in = t.input_box();

  return run_samples(config, [&](std::size_t k) {
    const Eigen::VectorXd r = halton.point(k);
    const Eigen::VectorXd x = dom.from_unit(r.head(n));
    const auto face = std::min<Eigen::Index>(n - 1, static_cast<Eigen::Index>(r[n] * static_cast<double>(n)));
    Eigen::VectorXd y = x + (dom.hi - x).cwiseProduct(r.segment(n + 1, n));
    y[face] = x[face];
    const Eigen::VectorXd u = in.from_unit(r.segment(2 * n + 1, m));
    const Eigen::VectorXd v = u + (in.hi - u).cwiseProduct(r.segment(2 * n + 1 + m, m));

    SampleOutcome out;
    const auto i = static_cast<std::size_t>(face);
    try {
      out.margin = t.component(i, y, v) - t.component(i, x, u);
    } catch (const NumericalError& e) {
      rethrow_at(e, k, joint(x, u));
    }
    out.witness.point = joint(x, u);
    out.witness.partner = joint(y, v);
    out.witness.component = i;
    out.witness.quantity = "f" + std::to_string(i + 1) + "(y,v) - f" + std::to_string(i + 1) + "(x,u)";
    return out;
  });
}

CheckResult check_convexity(const SystemModel& system, const OrthantOrder& order,
                            Curvature curvature, const ClassifyConfig& config) {
  const SystemModel t = transform_system(system, order);
  const std::size_t n = t.n();
  const auto d = static_cast<Eigen::Index>(n + t.m());
  const HaltonSequence halton(static_cast<std::size_t>(2 * d), config.seed);
  const bool convex = curvature == Curvature::convex;

  return run_samples(config, [&](std::size_t k) {
    const Eigen::VectorXd r = halton.point(k);
    const Eigen::VectorXd a = joint_point(t, r, 0);
    const Eigen::VectorXd b = joint_point(t, r, d);
    const Eigen::VectorXd mid = 0.5 * (a + b);
    const Eigen::VectorXd x = a.head(static_cast<Eigen::Index>(n));
    const Eigen::VectorXd u = a.tail(d - static_cast<Eigen::Index>(n));

    SampleOutcome out;
    out.witness.point = a;
    try {
      for (std::size_t i = 0; i < n; ++i) {
        const Eigen::MatrixXd h = hessian_fd(t, i, x, u);
        Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(h, Eigen::EigenvaluesOnly);
        const double hess_margin =
            convex ? eig.eigenvalues().minCoeff() : -eig.eigenvalues().maxCoeff();
        if (hess_margin < out.margin) {
          out.margin = hess_margin;
          out.witness.component = i;
          out.witness.partner.resize(0);
          out.witness.quantity = std::string(convex ? "lambda_min" : "-lambda_max") +
                                 "(hessian f" + std::to_string(i + 1) + ")";
        }
        const double chord = 0.5 * (t.component_joint(i, a) + t.component_joint(i, b));
        const double at_mid = t.component_joint(i, mid);
        const double secant_margin = convex ? chord - at_mid : at_mid - chord;
        if (secant_margin < out.margin) {
          out.margin = secant_margin;
          out.witness.component = i;
          out.witness.partner = b;
          out.witness.quantity = "secant f" + std::to_string(i + 1);
        }
      }
    } catch (const NumericalError& e) {
      rethrow_at(e, k, a);
    }
    return out;
  });
}

CheckResult check_directional_convexity(const SystemModel& system, const OrthantOrder& order,
                                        const ClassifyConfig& config) {
  const SystemModel t = transform_system(system, order);
  const std::size_t n = t.n();
  const auto d = static_cast<Eigen::Index>(n + t.m());
  const HaltonSequence halton(static_cast<std::size_t>(d), config.seed);

  return run_samples(config, [&](std::size_t k) {
    const Eigen::VectorXd a = joint_point(t, halton.point(k), 0);
    const Eigen::VectorXd x = a.head(static_cast<Eigen::Index>(n));
    const Eigen::VectorXd u = a.tail(d - static_cast<Eigen::Index>(n));
    SampleOutcome out;
    out.witness.point = a;
    try {
      for (std::size_t i = 0; i < n; ++i) {
        const Eigen::MatrixXd h = hessian_fd(t, i, x, u);
        Eigen::Index r = 0;
        Eigen::Index c = 0;
        const double v = h.minCoeff(&r, &c);
        if (v < out.margin) {
          out.margin = v;
          out.witness.component = i;
          out.witness.quantity = "d2 f" + std::to_string(i + 1) + " / d " +
                                 t.signature()->name(static_cast<std::size_t>(r)) + " d " +
                                 t.signature()->name(static_cast<std::size_t>(c));
        }
      }
    } catch (const NumericalError& e) {
      rethrow_at(e, k, a);
    }
    return out;
  });
}

ClassificationReport classify_system(const SystemModel& system, const OrthantOrder& order,
                                     const ClassifyConfig& config) {
  ClassificationReport report;
  report.order = order;
  report.config = config;
  report.jacobian = check_jacobian_metzler(system, order, config);
  report.kamke = check_kamke_sampled(system, order, config);
  report.monotone = report.jacobian.verdict == Verdict::pass && report.kamke.verdict == Verdict::pass
                        ? Verdict::pass
                        : Verdict::fail;
  report.convex = check_convexity(system, order, Curvature::convex, config);
  report.concave = check_convexity(system, order, Curvature::concave, config);
  report.directionally_convex = check_directional_convexity(system, order, config);

  if (report.monotone == Verdict::pass) {
    report.propagates.push_back(OrderClass::fd);
    if (report.convex.verdict == Verdict::pass) report.propagates.push_back(OrderClass::icx);
    if (report.concave.verdict == Verdict::pass) report.propagates.push_back(OrderClass::icv);
    if (report.directionally_convex.verdict == Verdict::pass)
      report.propagates.push_back(OrderClass::idcx);
  }
  return report;
}

}  // namespace monoflow
