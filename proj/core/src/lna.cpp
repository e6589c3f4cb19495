#include "monoflow/lna.hpp"

#include "monoflow/error.hpp"
#include "monoflow/finite_difference.hpp"
#include "monoflow/flow.hpp"
#include "monoflow/sampling.hpp"

#include <algorithm>
#include <cmath>

namespace monoflow {

const char* to_string(ReactionKind k) noexcept {
  switch (k) {
    case ReactionKind::degradation: return "degradation";
    case ReactionKind::conversion: return "conversion";
    case ReactionKind::other: return "other";
  }
  return "?";
}

namespace {

ReactionKind classify_change(const Eigen::VectorXi& change) {
  int consumed = 0;
  int produced = 0;
  for (Eigen::Index i = 0; i < change.size(); ++i) {
    if (change[i] == -1)
      ++consumed;
    else if (change[i] == 1)
      ++produced;
    else if (change[i] != 0)
      return ReactionKind::other;
  }
  if (consumed == 1 && produced == 0) return ReactionKind::degradation;
  if (consumed == 1 && produced == 1) return ReactionKind::conversion;
  return ReactionKind::other;
}

std::string species_label(const ReactionNetwork& net, std::size_t i) {
  return net.species()[i] + " (x" + std::to_string(i + 1) + ")";
}

std::vector<double> slots_for(const ReactionNetwork& net, const Eigen::VectorXd& x) {
  std::vector<double> slots(net.signature()->size(), 0.0);
  std::copy(x.data(), x.data() + x.size(), slots.begin());
  std::copy(net.param_values().begin(), net.param_values().end(),
            slots.begin() + static_cast<std::ptrdiff_t>(net.n()));
  return slots;
}

// The consumed species of a degradation/conversion.
std::size_t consumed_species(const Reaction& r) {
  for (Eigen::Index i = 0; i < r.change.size(); ++i) {
    if (r.change[i] == -1) return static_cast<std::size_t>(i);
  }
  return 0;
}

// Coefficient c if `rate` has the form c * x_i or x_i * c (or plain x_i) with
// c free of state variables.
std::optional<double> mass_action_coefficient(const ReactionNetwork& net, const Expr& rate,
                                              std::size_t i) {
  const auto& nodes = rate.nodes();
  const Node& root = nodes[rate.root()];
  const std::size_t n = net.n();
  const std::vector<double> slots = slots_for(net, Eigen::VectorXd::Zero(static_cast<Eigen::Index>(n)));
  auto state_free = [&](const Expr& e) {
    for (std::size_t s : e.symbols()) {
      if (s < n) return false;
    }
    return true;
  };
  if (root.op == Op::symbol) {
    if (root.slot == i) return 1.0;
    return std::nullopt;
  }
  if (root.op != Op::mul) return std::nullopt;
  const Node& l = nodes[static_cast<std::size_t>(root.lhs)];
  const Node& r = nodes[static_cast<std::size_t>(root.rhs)];
  std::optional<Expr> coeff;
  if (l.op == Op::symbol && l.slot == i)
    coeff = rate.subtree(static_cast<std::size_t>(root.rhs));
  else if (r.op == Op::symbol && r.slot == i)
    coeff = rate.subtree(static_cast<std::size_t>(root.lhs));
  if (!coeff || !state_free(*coeff)) return std::nullopt;
  return coeff->eval(slots);
}

}  // namespace

ReactionNetwork::ReactionNetwork(std::vector<std::string> species,
                                 const std::vector<ReactionSpec>& reactions,
                                 const std::map<std::string, double>& params)
    : species_(std::move(species)) {
  std::vector<std::string> names;
  for (const auto& [k, v] : params) {
    names.push_back(k);
    param_values_.push_back(v);
  }
  sig_ = make_signature(species_.size(), 0, std::move(names));

  for (std::size_t j = 0; j < reactions.size(); ++j) {
    const ReactionSpec& spec = reactions[j];
    if (spec.change.size() != species_.size())
      throw DimensionError("reaction " + std::to_string(j + 1) + " has " +
                           std::to_string(spec.change.size()) + " stoichiometric entries for " +
                           std::to_string(species_.size()) + " species");
    Reaction r;
    r.change = Eigen::Map<const Eigen::VectorXi>(spec.change.data(),
                                                 static_cast<Eigen::Index>(spec.change.size()));
    r.rate = parse_expression(spec.rate, sig_);
    r.kind = classify_change(r.change);
    reactions_.push_back(std::move(r));
  }

  // Rates must be nonnegative on the positive orthant; probe a box [0, 10]^n.
  const HaltonSequence halton(species_.size(), 7);
  for (std::uint64_t k = 0; k < 256 && !species_.empty(); ++k) {
    const Eigen::VectorXd x = 10.0 * halton.point(k);
    const std::vector<double> slots = slots_for(*this, x);
    for (std::size_t j = 0; j < reactions_.size(); ++j) {
      double v = 0.0;
      try {
        v = reactions_[j].rate.eval(slots);
      } catch (const DomainError& e) {
        throw InputError("rate of reaction " + std::to_string(j + 1) +
                         " cannot be evaluated on the positive orthant: " + e.what());
      }
      if (v < 0.0)
        throw InputError("rate of reaction " + std::to_string(j + 1) +
                         " is negative on the positive orthant");
    }
  }
}

Eigen::MatrixXd ReactionNetwork::stoichiometry() const {
  Eigen::MatrixXd s(static_cast<Eigen::Index>(n()), static_cast<Eigen::Index>(size()));
  for (std::size_t j = 0; j < size(); ++j) s.col(static_cast<Eigen::Index>(j)) = reactions_[j].change.cast<double>();
  return s;
}

Eigen::VectorXd ReactionNetwork::rates(const Eigen::VectorXd& x) const {
  if (static_cast<std::size_t>(x.size()) != n()) throw DimensionError("state dimension mismatch");
  const std::vector<double> slots = slots_for(*this, x);
  Eigen::VectorXd v(static_cast<Eigen::Index>(size()));
  for (std::size_t j = 0; j < size(); ++j) v[static_cast<Eigen::Index>(j)] = reactions_[j].rate.eval(slots);
  return v;
}

Eigen::VectorXd ReactionNetwork::drift(const Eigen::VectorXd& x) const {
  return stoichiometry() * rates(x);
}

SystemModel ReactionNetwork::drift_system(Box domain) const {
  std::vector<Expr> f;
  for (std::size_t i = 0; i < n(); ++i) {
    Expr fi = Expr::constant(sig_, 0.0);
    bool first = true;
    for (const Reaction& r : reactions_) {
      const int s = r.change[static_cast<Eigen::Index>(i)];
      if (s == 0) continue;
      Expr term = s == 1 ? r.rate : s == -1 ? -r.rate : Expr::constant(sig_, s) * r.rate;
      fi = first ? term : fi + term;
      first = false;
    }
    f.push_back(std::move(fi));
  }
  return SystemModel(sig_, std::move(f), param_values_, std::move(domain),
                     Box(Eigen::VectorXd(0), Eigen::VectorXd(0)));
}

StructureCheck is_unimolecular(const ReactionNetwork& net) {
  for (std::size_t j = 0; j < net.size(); ++j) {
    const Reaction& r = net.reactions()[j];
    const std::string tag = "reaction " + std::to_string(j + 1);
    if (r.kind == ReactionKind::other)
      return {false, tag + " is neither a degradation nor a conversion"};
    const std::size_t i = consumed_species(r);
    const auto coeff = mass_action_coefficient(net, r.rate, i);
    if (!coeff)
      return {false, tag + " rate '" + r.rate.to_string() + "' is not a constant times x" +
                         std::to_string(i + 1)};
    if (!(*coeff > 0.0)) return {false, tag + " has a nonpositive rate constant"};
  }
  return {true, "all reactions are degradations or conversions with mass-action rates"};
}

Eigen::MatrixXd build_A(const ReactionNetwork& net) {
  const StructureCheck check = is_unimolecular(net);
  if (!check.ok) throw InputError("network is not unimolecular: " + check.reason);
  const auto n = static_cast<Eigen::Index>(net.n());
  Eigen::MatrixXd a = Eigen::MatrixXd::Zero(n, n);
  for (const Reaction& r : net.reactions()) {
    const std::size_t i = consumed_species(r);
    const double k = *mass_action_coefficient(net, r.rate, i);
    a.col(static_cast<Eigen::Index>(i)) += k * r.change.cast<double>();
  }
  return a;
}

StructureCheck check_birth_death_structure(const ReactionNetwork& net) {
  for (std::size_t j = 0; j < net.size(); ++j) {
    const Reaction& r = net.reactions()[j];
    const std::vector<std::size_t> deps = r.rate.symbols();
    for (Eigen::Index i = 0; i < r.change.size(); ++i) {
      if (r.change[i] == 0) continue;
      for (std::size_t s : deps) {
        if (s < net.n() && s != static_cast<std::size_t>(i))
          return {false, "reaction " + std::to_string(j + 1) + " changes " +
                             species_label(net, static_cast<std::size_t>(i)) +
                             " but its rate depends on " + species_label(net, s)};
      }
    }
  }
  return {true, "every rate depends only on the species it changes"};
}

namespace {

struct MomentState {
  Eigen::VectorXd mean;
  Eigen::MatrixXd cov;
};

class MomentOde {
 public:
  explicit MomentOde(const ReactionNetwork& net)
      : net_(net), s_(net.stoichiometry()) {
    if (is_unimolecular(net).ok) a_ = build_A(net);
  }

  MomentState operator()(const MomentState& m, double t) const {
    const Eigen::VectorXd v = net_.rates(m.mean);
    for (Eigen::Index j = 0; j < v.size(); ++j) {
      if (v[j] < 0.0)
        throw NumericalError("rate of reaction " + std::to_string(j + 1) +
                             " is negative along the mean path at t=" + std::to_string(t));
    }
    Eigen::MatrixXd jac;
    if (a_) {
      jac = *a_;
    } else {
      jac = fd::jacobian([&](const Eigen::VectorXd& z) { return net_.drift(z); }, m.mean,
                         static_cast<Eigen::Index>(net_.n()));
    }
    MomentState d;
    d.mean = s_ * v;
    d.cov = jac * m.cov + m.cov * jac.transpose() + s_ * v.asDiagonal() * s_.transpose();
    return d;
  }

 private:
  const ReactionNetwork& net_;
  Eigen::MatrixXd s_;
  std::optional<Eigen::MatrixXd> a_;
};

MomentState axpy(const MomentState& x, double h, const MomentState& k) {
  return {x.mean + h * k.mean, x.cov + h * k.cov};
}

}  // namespace

GaussianTrajectory lna_moments(const ReactionNetwork& net, const GaussianState& initial,
                               double horizon, double dt) {
  if (initial.dim() != net.n()) throw DimensionError("initial Gaussian dimension does not match network");
  if ((initial.mean.array() < 0.0).any()) throw InputError("initial mean must lie in the positive orthant");
  const std::size_t steps = grid_steps(horizon, dt);
  const double h = horizon / static_cast<double>(steps);
  const MomentOde ode(net);

  GaussianTrajectory traj;
  traj.times.reserve(steps + 1);
  traj.means.reserve(steps + 1);
  traj.covs.reserve(steps + 1);
  MomentState state{initial.mean, initial.cov};
  traj.times.push_back(0.0);
  traj.means.push_back(state.mean);
  traj.covs.push_back(state.cov);

  for (std::size_t s = 0; s < steps; ++s) {
    const double t = static_cast<double>(s) * h;
    const MomentState k1 = ode(state, t);
    const MomentState k2 = ode(axpy(state, 0.5 * h, k1), t + 0.5 * h);
    const MomentState k3 = ode(axpy(state, 0.5 * h, k2), t + 0.5 * h);
    const MomentState k4 = ode(axpy(state, h, k3), t + h);
    state.mean += (h / 6.0) * (k1.mean + 2.0 * k2.mean + 2.0 * k3.mean + k4.mean);
    state.cov += (h / 6.0) * (k1.cov + 2.0 * k2.cov + 2.0 * k3.cov + k4.cov);
    state.cov = 0.5 * (state.cov + state.cov.transpose()).eval();
    if (!state.mean.allFinite() || !state.cov.allFinite())
      throw BlowUpError("non-finite LNA moments", t + h);
    traj.times.push_back(static_cast<double>(s + 1) * h);
    traj.means.push_back(state.mean);
    traj.covs.push_back(state.cov);
  }
  // Rates at the final mean are checked like every other grid point.
  ode(state, horizon);
  return traj;
}

LnaComparison compare_lna(const ReactionNetwork& net, const GaussianState& a,
                          const GaussianState& b, const OrthantOrder& order, OrderClass cls,
                          double horizon, double dt, double tol) {
  if (cls != OrderClass::fd && cls != OrderClass::icx)
    throw InputError("LNA comparison supports only the F_d and F_icx classes");
  if (order.n() != net.n()) throw DimensionError("order dimension does not match network");

  LnaComparison out;
  out.order_class = cls;
  if (cls == OrderClass::icx) {
    const StructureCheck uni = is_unimolecular(net);
    out.guaranteed = uni.ok;
    out.label = uni.ok ? "unimolecular network: F_icx propagation guaranteed"
                       : "outside guarantee: " + uni.reason;
  } else {
    const StructureCheck bd = check_birth_death_structure(net);
    out.guaranteed = bd.ok;
    out.label = bd.ok ? "decoupled birth-death network" : "outside guarantee: " + bd.reason;
  }

  out.a = lna_moments(net, a, horizon, dt);
  out.b = lna_moments(net, b, horizon, dt);
  out.times = out.a.times;
  out.verdict = Verdict::pass;
  for (std::size_t k = 0; k < out.times.size(); ++k) {
    const double mean_margin = cone_margin(out.a.means[k], out.b.means[k], order);
    const double cov_margin =
        cls == OrderClass::icx ? psd_margin(out.a.covs[k], out.b.covs[k])
        : net.n() == 0         ? 0.0
                               : -(out.b.covs[k] - out.a.covs[k]).cwiseAbs().maxCoeff();
    out.mean_margins.push_back(mean_margin);
    out.cov_margins.push_back(cov_margin);
    if ((mean_margin < -tol || cov_margin < -tol) && !out.first_violation_time) {
      out.first_violation_time = out.times[k];
      out.verdict = Verdict::fail;
    }
  }
  return out;
}

Diffusion cle_diffusion(const ReactionNetwork& net, Box domain) {
  const SystemModel drift = net.drift_system(std::move(domain));
  const SignaturePtr& sig = net.signature();
  std::vector<std::vector<Expr>> dispersion(net.n());
  for (std::size_t i = 0; i < net.n(); ++i) {
    for (const Reaction& r : net.reactions()) {
      const int s = r.change[static_cast<Eigen::Index>(i)];
      if (s == 0)
        dispersion[i].push_back(Expr::constant(sig, 0.0));
      else if (s == 1)
        dispersion[i].push_back(sqrt(r.rate));
      else
        dispersion[i].push_back(Expr::constant(sig, s) * sqrt(r.rate));
    }
  }
  return Diffusion(sig, drift.f(), std::move(dispersion), net.param_values(), drift.domain());
}

Diffusion lna_diffusion(const ReactionNetwork& net, const Box& domain) {
  const Eigen::MatrixXd a = build_A(net);
  const std::size_t n = net.n();
  const SignaturePtr& base = net.signature();
  SignaturePtr sig = make_signature(2 * n, 0, base->params());
  std::vector<std::size_t> slot_map(base->size());
  for (std::size_t i = 0; i < n; ++i) slot_map[i] = i;
  for (std::size_t k = 0; k < base->n_params(); ++k) slot_map[n + k] = 2 * n + k;

  auto linear = [&](std::size_t row, std::size_t offset) {
    Expr e = Expr::constant(sig, 0.0);
    bool first = true;
    for (std::size_t j = 0; j < n; ++j) {
      const double c = a(static_cast<Eigen::Index>(row), static_cast<Eigen::Index>(j));
      if (c == 0.0) continue;
      Expr term = Expr::constant(sig, c) * Expr::state(sig, offset + j);
      e = first ? term : e + term;
      first = false;
    }
    return e;
  };

  std::vector<Expr> drift;
  for (std::size_t i = 0; i < n; ++i) drift.push_back(linear(i, 0));
  for (std::size_t i = 0; i < n; ++i) drift.push_back(linear(i, n));

  std::vector<std::vector<Expr>> dispersion(2 * n);
  for (std::size_t i = 0; i < n; ++i) {
    for (const Reaction& r : net.reactions()) {
      dispersion[i].push_back(Expr::constant(sig, 0.0));
      const int s = r.change[static_cast<Eigen::Index>(i)];
      const Expr rate = r.rate.rebind(sig, slot_map);
      dispersion[n + i].push_back(s == 0   ? Expr::constant(sig, 0.0)
                                  : s == 1 ? sqrt(rate)
                                           : Expr::constant(sig, s) * sqrt(rate));
    }
  }

  if (domain.dim() != n) throw DimensionError("LNA domain must have one axis per species");
  const double extent = std::max(domain.hi.cwiseAbs().maxCoeff(), domain.lo.cwiseAbs().maxCoeff());
  Eigen::VectorXd lo(static_cast<Eigen::Index>(2 * n));
  Eigen::VectorXd hi(static_cast<Eigen::Index>(2 * n));
  lo << domain.lo, Eigen::VectorXd::Constant(static_cast<Eigen::Index>(n), -extent);
  hi << domain.hi, Eigen::VectorXd::Constant(static_cast<Eigen::Index>(n), extent);
  return Diffusion(sig, std::move(drift), std::move(dispersion), net.param_values(),
                   Box(std::move(lo), std::move(hi)));
}

}  // namespace monoflow
