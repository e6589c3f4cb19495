#include "monoflow/stoch.hpp"

#include "monoflow/error.hpp"
#include "monoflow/finite_difference.hpp"
#include "monoflow/flow.hpp"
#include "monoflow/sampling.hpp"

#include <Eigen/Eigenvalues>

#include <algorithm>
#include <cmath>
#include <optional>
#include <random>

namespace monoflow {

namespace {

std::vector<std::string> names_of(const std::map<std::string, double>& params) {
  std::vector<std::string> out;
  for (const auto& [k, v] : params) out.push_back(k);
  return out;
}

std::vector<double> values_of(const std::map<std::string, double>& params) {
  std::vector<double> out;
  for (const auto& [k, v] : params) out.push_back(v);
  return out;
}

SystemModel drift_model(SignaturePtr sig, std::vector<Expr> drift, std::vector<double> params,
                        Box domain) {
  return SystemModel(std::move(sig), std::move(drift), std::move(params), std::move(domain),
                     Box(Eigen::VectorXd(0), Eigen::VectorXd(0)));
}

std::vector<Expr> parse_all(const std::vector<std::string>& texts, const SignaturePtr& sig) {
  std::vector<Expr> out;
  out.reserve(texts.size());
  for (const auto& t : texts) out.push_back(parse_expression(t, sig));
  return out;
}

std::vector<std::vector<Expr>> parse_matrix(const std::vector<std::vector<std::string>>& texts,
                                            const SignaturePtr& sig) {
  std::vector<std::vector<Expr>> out;
  out.reserve(texts.size());
  for (const auto& row : texts) out.push_back(parse_all(row, sig));
  return out;
}

}  // namespace

Diffusion::Diffusion(std::size_t n, const std::vector<std::string>& drift,
                     const std::vector<std::vector<std::string>>& dispersion,
                     const std::map<std::string, double>& params, Box domain)
    : Diffusion(ParsedTag{}, make_signature(n, 0, names_of(params)), drift, dispersion,
                values_of(params), std::move(domain)) {}

Diffusion::Diffusion(ParsedTag, const SignaturePtr& sig, const std::vector<std::string>& drift,
                     const std::vector<std::vector<std::string>>& dispersion,
                     std::vector<double> param_values, Box domain)
    : Diffusion(sig, parse_all(drift, sig), parse_matrix(dispersion, sig), std::move(param_values),
                std::move(domain)) {}

Diffusion::Diffusion(SignaturePtr sig, std::vector<Expr> drift,
                     std::vector<std::vector<Expr>> dispersion, std::vector<double> param_values,
                     Box domain)
    : drift_(drift_model(sig, std::move(drift), std::move(param_values), std::move(domain))),
      dispersion_(std::move(dispersion)) {
  if (dispersion_.size() != n())
    throw DimensionError("dispersion must have one row per state");
  noise_dim_ = dispersion_.empty() ? 0 : dispersion_[0].size();
  for (const auto& row : dispersion_) {
    if (row.size() != noise_dim_) throw DimensionError("dispersion rows differ in length");
    for (const Expr& e : row) {
      if (e.signature() != drift_.signature())
        throw InputError("dispersion entry with foreign signature");
    }
  }
}

Eigen::VectorXd Diffusion::drift(const Eigen::VectorXd& x) const {
  Eigen::VectorXd out;
  drift(x, out);
  return out;
}

void Diffusion::drift(const Eigen::VectorXd& x, Eigen::VectorXd& out) const {
  static const Eigen::VectorXd no_input(0);
  drift_.field(x, no_input, out);
}

void Diffusion::sigma(const Eigen::VectorXd& x, Eigen::MatrixXd& out) const {
  thread_local std::vector<double> slots;
  const Signature& sig = *drift_.signature();
  slots.assign(sig.size(), 0.0);
  std::copy(x.data(), x.data() + x.size(), slots.begin());
  std::copy(drift_.param_values().begin(), drift_.param_values().end(),
            slots.begin() + static_cast<std::ptrdiff_t>(n()));
  out.resize(static_cast<Eigen::Index>(n()), static_cast<Eigen::Index>(noise_dim_));
  for (std::size_t i = 0; i < n(); ++i) {
    for (std::size_t j = 0; j < noise_dim_; ++j)
      out(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = dispersion_[i][j].eval(slots);
  }
}

Eigen::MatrixXd Diffusion::sigma(const Eigen::VectorXd& x) const {
  Eigen::MatrixXd out;
  sigma(x, out);
  return out;
}

Eigen::MatrixXd Diffusion::diffusion_matrix(const Eigen::VectorXd& x) const {
  const Eigen::MatrixXd s = sigma(x);
  return s * s.transpose();
}

Diffusion transform_diffusion(const Diffusion& diff, const OrthantOrder& order) {
  if (order.n() != diff.n()) throw DimensionError("order dimension does not match diffusion");
  const SystemModel drift = transform_system(diff.drift_system(), order);
  const SignaturePtr& sig = drift.signature();
  std::vector<std::optional<Expr>> replacements(sig->size());
  for (std::size_t j = 0; j < diff.n(); ++j) {
    if (order.state_signs()[j] < 0) replacements[j] = -Expr::state(sig, j);
  }
  std::vector<std::vector<Expr>> dispersion;
  for (std::size_t i = 0; i < diff.n(); ++i) {
    std::vector<Expr> row;
    for (const Expr& e : diff.dispersion()[i]) {
      Expr s = e.substitute(replacements);
      row.push_back(order.state_signs()[i] < 0 ? -s : s);
    }
    dispersion.push_back(std::move(row));
  }
  return Diffusion(sig, drift.f(), std::move(dispersion), drift.param_values(), drift.domain());
}

std::size_t Ensemble::aborted_count() const {
  return static_cast<std::size_t>(std::count(aborted.begin(), aborted.end(), 1));
}

Ensemble euler_maruyama(const Diffusion& diff, const Eigen::VectorXd& x0,
                        const EulerMaruyamaConfig& config) {
  if (config.paths == 0) throw InputError("path count must be >= 1");
  if (static_cast<std::size_t>(x0.size()) != diff.n())
    throw DimensionError("initial state dimension does not match diffusion");
  const std::size_t steps = grid_steps(config.horizon, config.dt);
  const double h = config.horizon / static_cast<double>(steps);
  const double sqrt_h = std::sqrt(h);
  const Box guard = diff.domain().expanded(10.0);
  const auto n = static_cast<Eigen::Index>(diff.n());
  const auto d = static_cast<Eigen::Index>(diff.noise_dim());

  std::vector<std::size_t> record_steps;
  for (double t : config.record_times) {
    if (t < 0.0 || t > config.horizon * (1.0 + 1e-12)) throw InputError("record time outside horizon");
    record_steps.push_back(static_cast<std::size_t>(std::llround(t / h)));
  }

  Ensemble ens;
  ens.seed = config.seed;
  ens.record_times = config.record_times;
  ens.terminal.resize(static_cast<Eigen::Index>(config.paths), n);
  ens.snapshots.assign(record_steps.size(),
                       Eigen::MatrixXd(static_cast<Eigen::Index>(config.paths), n));
  ens.aborted.assign(config.paths, 0);

  parallel_for(config.paths, config.jobs, [&](std::size_t p) {
    CounterRng rng(config.seed, p, 0);
    std::normal_distribution<double> normal;
    Eigen::VectorXd x = x0;
    Eigen::VectorXd f;
    Eigen::MatrixXd s;
    Eigen::VectorXd xi(d);
    Eigen::VectorXd noise(n);
    Eigen::VectorXd next(n);
    const auto row = static_cast<Eigen::Index>(p);
    auto record = [&](std::size_t step) {
      for (std::size_t r = 0; r < record_steps.size(); ++r) {
        if (record_steps[r] == step) ens.snapshots[r].row(row) = x.transpose();
      }
    };
    record(0);
    std::size_t step = 0;
    try {
      for (; step < steps; ++step) {
        diff.drift(x, f);
        diff.sigma(x, s);
        for (Eigen::Index j = 0; j < d; ++j) xi[j] = normal(rng);
        noise.noalias() = s * xi;
        next = x + f * h + sqrt_h * noise;
        if (!next.allFinite() || !guard.contains(next)) break;
        x.swap(next);
        record(step + 1);
      }
    } catch (const DomainError&) {
    }
    if (step < steps) {
      ens.aborted[p] = 1;
      // Later snapshots of an aborted path hold its last valid state.
      for (std::size_t r = 0; r < record_steps.size(); ++r) {
        if (record_steps[r] > step) ens.snapshots[r].row(row) = x.transpose();
      }
    }
    ens.terminal.row(row) = x.transpose();
  });
  return ens;
}

const CheckResult& DiffusionCheck::part(const std::string& name) const {
  for (const auto& [k, v] : parts) {
    if (k == name) return v;
  }
  throw InputError("no sub-check named '" + name + "'");
}

namespace {

struct Outcome {
  double margin = std::numeric_limits<double>::infinity();
  Witness witness;
};

template <class Fn>
CheckResult sampled(const ClassifyConfig& config, Fn&& fn) {
  if (config.samples == 0) throw InputError("sample budget must be >= 1");
  std::vector<Outcome> outcomes(config.samples);
  parallel_for(config.samples, config.jobs, [&](std::size_t k) { outcomes[k] = fn(k); });
  CheckResult result;
  result.samples = config.samples;
  for (std::size_t k = 0; k < outcomes.size(); ++k) {
    Outcome& o = outcomes[k];
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

// Upper-triangle entries of c(x), row-major.
Eigen::VectorXd upper_entries(const Diffusion& d, const Eigen::VectorXd& x) {
  const Eigen::MatrixXd c = d.diffusion_matrix(x);
  const Eigen::Index n = c.rows();
  Eigen::VectorXd out(n * (n + 1) / 2);
  Eigen::Index k = 0;
  for (Eigen::Index i = 0; i < n; ++i) {
    for (Eigen::Index j = i; j < n; ++j) out[k++] = c(i, j);
  }
  return out;
}

CheckResult dependence_check(const Diffusion& t, const ClassifyConfig& config) {
  const auto n = static_cast<Eigen::Index>(t.n());
  const HaltonSequence halton(t.n(), config.seed);
  return sampled(config, [&](std::size_t s) {
    const Eigen::VectorXd x = t.domain().from_unit(halton.point(s));
    const Eigen::MatrixXd jac =
        fd::jacobian([&](const Eigen::VectorXd& z) { return upper_entries(t, z); }, x, n * (n + 1) / 2);
    Outcome out;
    out.witness.point = x;
    Eigen::Index row = 0;
    for (Eigen::Index i = 0; i < n; ++i) {
      for (Eigen::Index j = i; j < n; ++j, ++row) {
        for (Eigen::Index k = 0; k < n; ++k) {
          if (k == i || k == j) continue;
          const double m = -std::abs(jac(row, k));
          if (m < out.margin) {
            out.margin = m;
            out.witness.component = static_cast<std::size_t>(i);
            out.witness.quantity = "d c" + std::to_string(i + 1) + std::to_string(j + 1) + " / d x" +
                                   std::to_string(k + 1);
          }
        }
      }
    }
    return out;
  });
}

CheckResult psd_increasing_check(const Diffusion& t, const ClassifyConfig& config) {
  const auto n = static_cast<Eigen::Index>(t.n());
  const HaltonSequence halton(2 * t.n(), config.seed);
  const Box& dom = t.domain();
  return sampled(config, [&](std::size_t s) {
    const Eigen::VectorXd r = halton.point(s);
    const Eigen::VectorXd a = dom.from_unit(r.head(n));
    const Eigen::VectorXd b = dom.from_unit(r.tail(n));
    const Eigen::VectorXd x = a.cwiseMin(b);
    const Eigen::VectorXd y = a.cwiseMax(b);
    Outcome out;
    out.margin = psd_margin(t.diffusion_matrix(x), t.diffusion_matrix(y));
    out.witness.point = x;
    out.witness.partner = y;
    out.witness.quantity = "lambda_min(c(y) - c(x))";
    return out;
  });
}

CheckResult psd_convex_check(const Diffusion& t, const ClassifyConfig& config) {
  const auto n = static_cast<Eigen::Index>(t.n());
  const HaltonSequence halton(2 * t.n(), config.seed);
  const Box& dom = t.domain();
  return sampled(config, [&](std::size_t s) {
    const Eigen::VectorXd r = halton.point(s);
    const Eigen::VectorXd a = dom.from_unit(r.head(n));
    const Eigen::VectorXd b = dom.from_unit(r.tail(n));
    const Eigen::MatrixXd chord = 0.5 * (t.diffusion_matrix(a) + t.diffusion_matrix(b));
    Outcome out;
    out.margin = psd_margin(t.diffusion_matrix(0.5 * (a + b)), chord);
    out.witness.point = a;
    out.witness.partner = b;
    out.witness.quantity = "lambda_min((c(a)+c(b))/2 - c(mid))";
    return out;
  });
}

void finish(DiffusionCheck& check) {
  check.verdict = Verdict::pass;
  for (const auto& [name, part] : check.parts) {
    if (part.verdict == Verdict::fail) check.verdict = Verdict::fail;
  }
}

}  // namespace

DiffusionCheck check_fd_diffusion_conditions(const Diffusion& diff, const OrthantOrder& order,
                                             const ClassifyConfig& config) {
  const Diffusion t = transform_diffusion(diff, order);
  const OrthantOrder standard = OrthantOrder::standard(t.n());
  DiffusionCheck check;
  check.parts.emplace_back("drift_cooperative",
                           check_jacobian_metzler(t.drift_system(), standard, config));
  check.parts.emplace_back("diffusion_dependence", dependence_check(t, config));
  finish(check);
  return check;
}

DiffusionCheck check_icx_diffusion_conditions(const Diffusion& diff, const OrthantOrder& order,
                                              const ClassifyConfig& config) {
  const Diffusion t = transform_diffusion(diff, order);
  const OrthantOrder standard = OrthantOrder::standard(t.n());
  DiffusionCheck check;
  check.parts.emplace_back("drift_cooperative",
                           check_jacobian_metzler(t.drift_system(), standard, config));
  check.parts.emplace_back("drift_convex",
                           check_convexity(t.drift_system(), standard, Curvature::convex, config));
  check.parts.emplace_back("diffusion_psd_increasing", psd_increasing_check(t, config));
  check.parts.emplace_back("diffusion_psd_convex", psd_convex_check(t, config));
  finish(check);
  return check;
}

Eigen::MatrixXd sample_gaussian(const GaussianState& g, std::size_t count, std::uint64_t seed) {
  const auto n = static_cast<Eigen::Index>(g.dim());
  // Symmetric square root handles singular covariances.
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(g.cov);
  const Eigen::VectorXd root = eig.eigenvalues().cwiseMax(0.0).cwiseSqrt();
  const Eigen::MatrixXd factor = eig.eigenvectors() * root.asDiagonal() * eig.eigenvectors().transpose();
  Eigen::MatrixXd out(static_cast<Eigen::Index>(count), n);
  Eigen::VectorXd xi(n);
  for (std::size_t r = 0; r < count; ++r) {
    CounterRng rng(seed, r, 0);
    std::normal_distribution<double> normal;
    for (Eigen::Index j = 0; j < n; ++j) xi[j] = normal(rng);
    out.row(static_cast<Eigen::Index>(r)) = (g.mean + factor * xi).transpose();
  }
  return out;
}

namespace {

double logistic(double z) { return 1.0 / (1.0 + std::exp(-z)); }

}  // namespace

EmpiricalOrderResult empirical_order_test(const Eigen::MatrixXd& a, const Eigen::MatrixXd& b,
                                          const OrthantOrder& order, OrderClass cls,
                                          std::size_t n_functions, std::uint64_t seed) {
  if (a.cols() != b.cols() || static_cast<std::size_t>(a.cols()) != order.n())
    throw DimensionError("ensemble dimensions do not match");
  if (a.rows() == 0 || b.rows() == 0) throw InputError("empty ensemble");
  if (cls != OrderClass::fd && cls != OrderClass::icx)
    throw InputError("empirical test supports only the F_d and F_icx classes");
  if (n_functions == 0) throw InputError("function budget must be >= 1");

  const Eigen::Index n = a.cols();
  const Eigen::MatrixXd ta = a * order.matrix();
  const Eigen::MatrixXd tb = b * order.matrix();

  // Pooled location and scale place the sigmoid test functions.
  Eigen::MatrixXd pooled(ta.rows() + tb.rows(), n);
  pooled << ta, tb;
  const Eigen::RowVectorXd mean = pooled.colwise().mean();
  Eigen::RowVectorXd sd = ((pooled.rowwise() - mean).array().square().colwise().sum() /
                           static_cast<double>(std::max<Eigen::Index>(1, pooled.rows() - 1)))
                              .sqrt();
  for (Eigen::Index j = 0; j < n; ++j) {
    if (!(sd[j] > 0.0)) sd[j] = 1.0;
  }

  constexpr int kPieces = 5;
  EmpiricalOrderResult result;
  for (std::size_t f = 0; f < n_functions; ++f) {
    CounterRng rng(seed, f, 0);
    std::function<double(const Eigen::RowVectorXd&)> g;
    if (cls == OrderClass::icx && f < static_cast<std::size_t>(n)) {
      const auto j = static_cast<Eigen::Index>(f);
      g = [j](const Eigen::RowVectorXd& x) { return x[j]; };
    } else if (cls == OrderClass::icx) {
      Eigen::MatrixXd slopes(kPieces, n);
      Eigen::VectorXd offsets(kPieces);
      for (int k = 0; k < kPieces; ++k) {
        for (Eigen::Index j = 0; j < n; ++j) slopes(k, j) = rng.uniform();
        offsets[k] = rng.uniform();
      }
      g = [slopes, offsets](const Eigen::RowVectorXd& x) {
        return (slopes * x.transpose() + offsets).maxCoeff();
      };
    } else {
      std::vector<Eigen::Index> coords;
      std::vector<double> centers;
      std::vector<double> rates;
      for (Eigen::Index j = 0; j < n; ++j) {
        if (rng.uniform() < 0.5) coords.push_back(j);
      }
      if (coords.empty()) coords.push_back(static_cast<Eigen::Index>(rng() % static_cast<std::uint64_t>(n)));
      for (Eigen::Index j : coords) {
        centers.push_back(mean[j] + (4.0 * rng.uniform() - 2.0) * sd[j]);
        rates.push_back((0.5 + 3.5 * rng.uniform()) / sd[j]);
      }
      g = [coords, centers, rates](const Eigen::RowVectorXd& x) {
        double v = 1.0;
        for (std::size_t k = 0; k < coords.size(); ++k)
          v *= logistic(rates[k] * (x[coords[k]] - centers[k]));
        return v;
      };
    }

    auto moments = [&](const Eigen::MatrixXd& s) {
      Eigen::VectorXd vals(s.rows());
      for (Eigen::Index r = 0; r < s.rows(); ++r) vals[r] = g(s.row(r));
      const double mu = vals.mean();
      const double var = s.rows() > 1 ? (vals.array() - mu).square().sum() / static_cast<double>(s.rows() - 1)
                                      : 0.0;
      return std::pair{mu, var};
    };
    const auto [mu_a, var_a] = moments(ta);
    const auto [mu_b, var_b] = moments(tb);
    const double se = std::sqrt(var_a / static_cast<double>(ta.rows()) + var_b / static_cast<double>(tb.rows()));
    const double threshold = std::max(3.0 * se, 1e-9);
    const double margin = mu_b - mu_a;
    result.margins.push_back(margin);
    result.thresholds.push_back(threshold);
    if (margin < -threshold) ++result.violations;
  }
  result.verdict = result.violations == 0 ? Verdict::pass : Verdict::fail;
  return result;
}

}  // namespace monoflow
