// Acceptance suite: one PASS/FAIL line per criterion, nonzero exit if any fails.
#include "monoflow/classify.hpp"
#include "monoflow/cli.hpp"
#include "monoflow/flow.hpp"
#include "monoflow/io.hpp"
#include "monoflow/lna.hpp"
#include "monoflow/stoch.hpp"

#include "test_support.hpp"

#include <Eigen/Eigenvalues>

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <exception>
#include <filesystem>
#include <functional>
#include <random>
#include <sstream>
#include <string>
#include <thread>
#include <unistd.h>
#include <vector>

namespace fs = std::filesystem;
using namespace monoflow;

namespace {

struct Outcome {
  bool pass = true;
  std::string detail;

  void require(bool ok, const std::string& what) {
    if (!ok) {
      pass = false;
      detail += (detail.empty() ? "" : "; ") + what;
    }
  }
  void note(const std::string& what) {
    if (pass) detail += (detail.empty() ? "" : "; ") + what;
  }
};

std::string fmt(const char* f, double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, f, v);
  return buf;
}

std::size_t jobs() { return std::max(1u, std::thread::hardware_concurrency()); }

ClassifyConfig classify_budget(std::size_t samples) {
  ClassifyConfig c;
  c.samples = samples;
  c.jobs = jobs();
  return c;
}

FlowTestConfig flow_budget(std::size_t trials, double horizon) {
  FlowTestConfig c;
  c.trials = trials;
  c.horizon = horizon;
  c.jobs = jobs();
  return c;
}

ReactionNetwork network(const std::string& name) { return load_network(name); }

// ---------------------------------------------------------------------------

Outcome ac1() {
  Outcome o;
  const SystemModel s = load_system("toggle_switch.json");
  const ClassificationReport r = classify_system(s, OrthantOrder::parse("+,-"), classify_budget(10'000));
  o.require(r.monotone == Verdict::pass, "monotone check failed");
  o.require(r.jacobian.witnesses.empty() && r.kamke.witnesses.empty(), "monotonicity witnesses reported");
  o.require(r.convex.verdict == Verdict::fail, "convexity passed");
  const bool on_second = std::any_of(r.convex.witnesses.begin(), r.convex.witnesses.end(),
                                     [](const Witness& w) { return w.component == 1; });
  o.require(on_second, "no convexity witness on the second component");
  o.require(!r.propagates_class(OrderClass::icx), "icx listed as propagated");
  o.note("monotone, convex fails with " + std::to_string(r.convex.violations) + " violations");
  return o;
}

// Analytic Hessians of the reciprocal model with all parameters 1, in (x1, x2).
Eigen::Matrix2d reciprocal_hessian(std::size_t i, double x1, double x2) {
  Eigen::Matrix2d h = Eigen::Matrix2d::Zero();
  if (i == 0) {
    h(1, 1) = -2.0 / std::pow(1 + x2, 3);
  } else {
    const double d = 1 + x1;
    h(0, 0) = -2 * x2 * x2 / (d * d * d);
    h(0, 1) = h(1, 0) = 2 * x2 / (d * d);
    h(1, 1) = -2 / d;
  }
  return h;
}

Outcome ac2() {
  Outcome o;
  const SystemModel s = load_system("toggle_switch_reciprocal.json");
  const OrthantOrder std2 = OrthantOrder::standard(2, 1);
  const CheckResult concave = check_convexity(s, std2, Curvature::concave, classify_budget(10'000));
  o.require(concave.verdict == Verdict::pass, "concavity failed");

  std::mt19937_64 rng(2024);
  std::uniform_real_distribution<double> ux1(0, 10), ux2(0.1, 10), uu(0, 1);
  double worst_zero = 0, worst_second = -1e300, worst_fd = 0;
  for (int k = 0; k < 100; ++k) {
    const double x1 = ux1(rng), x2 = ux2(rng);
    const Eigen::VectorXd u = Eigen::VectorXd::Constant(1, uu(rng));
    for (std::size_t i = 0; i < 2; ++i) {
      const Eigen::Matrix2d exact = reciprocal_hessian(i, x1, x2);
      const Eigen::MatrixXd numeric = hessian_fd(s, i, Eigen::Vector2d(x1, x2), u).topLeftCorner(2, 2);
      worst_fd = std::max(worst_fd, (numeric - exact).cwiseAbs().maxCoeff() / std::max(1.0, exact.norm()));
      Eigen::SelfAdjointEigenSolver<Eigen::Matrix2d> eig(numeric);
      const Eigen::Vector2d ev = eig.eigenvalues();  // ascending
      worst_zero = std::max(worst_zero, std::abs(ev[1]));
      worst_second = std::max(worst_second, ev[0]);
    }
  }
  o.require(worst_zero <= 1e-5, "largest eigenvalue not zero: " + fmt("%.3g", worst_zero));
  o.require(worst_second <= 1e-5, "second eigenvalue positive: " + fmt("%.3g", worst_second));
  o.require(worst_fd <= 1e-4, "numeric Hessian disagrees with the analytic one");
  o.note("max |lambda_0| " + fmt("%.2g", worst_zero) + ", max lambda_1 " + fmt("%.2g", worst_second));
  return o;
}

struct Case {
  std::string model;
  std::string order;
  double horizon = 10;
};

// [[-1,2],[3,-4]] has eigenvalue 0.37; over T = 10 it leaves the blow-up box.
const std::vector<Case> monotone_corpus{{"jordan_block.json", "+,+"},
                                        {"toggle_switch.json", "+,-"},
                                        {"toggle_switch_reciprocal.json", "+,+"},
                                        {"unimolecular_three.json", "+,+,+"},
                                        {"square_forcing.json", "+,+"},
                                        {"metzler_linear.json", "+,+", 2}};

Outcome ac3() {
  Outcome o;
  double worst = 1e300;
  for (const Case& c : monotone_corpus) {
    const SystemModel s = load_system(c.model);
    const FlowTestResult r = test_order_preservation(s, OrthantOrder::parse(c.order), flow_budget(1000, c.horizon));
    o.require(r.verdict == Verdict::pass && r.inconclusive == 0 && r.worst_margin >= -1e-7,
              c.model + " margin " + fmt("%.3g", r.worst_margin) + ", " + std::to_string(r.inconclusive) +
                  " inconclusive");
    worst = std::min(worst, r.worst_margin);
  }
  const SystemModel rot = load_system("rotation.json");
  const FlowTestResult r = test_order_preservation(rot, OrthantOrder::standard(2), flow_budget(1000, 10));
  const bool witness = r.worst.points.size() == 2 &&
                       leq_cone(r.worst.points[0], r.worst.points[1], OrthantOrder::standard(2), 0) &&
                       r.worst_trajectories.size() == 2;
  o.require(r.verdict == Verdict::fail && witness, "rotation not refuted with a witness");
  o.note(std::to_string(monotone_corpus.size()) + " systems, worst margin " + fmt("%.3g", worst) + ", rotation margin " + fmt("%.3g", r.worst_margin) +
         " at t=" + fmt("%.3g", r.worst_time));
  return o;
}

Outcome ac4() {
  Outcome o;
  double worst = 1e300;
  std::size_t tested = 0;
  for (const Case& c : monotone_corpus) {
    const SystemModel s = load_system(c.model);
    const OrthantOrder order = OrthantOrder::parse(c.order);
    const ClassificationReport rep = classify_system(s, order, classify_budget(2000));
    if (rep.monotone != Verdict::pass || rep.convex.verdict != Verdict::pass) continue;
    ++tested;
    const FlowTestResult r = test_flow_convexity(s, order, flow_budget(1000, c.horizon));
    o.require(r.verdict == Verdict::pass && r.inconclusive == 0 && r.worst_margin >= -1e-7,
              c.model + " margin " + fmt("%.3g", r.worst_margin) + ", " + std::to_string(r.inconclusive) +
                  " inconclusive");
    worst = std::min(worst, r.worst_margin);
  }
  o.require(tested == 4, "expected 4 monotone convex systems, found " + std::to_string(tested));

  // x' = x^2: x(t) = x0 / (1 - x0 t)
  const SystemModel q(1, 0, {"x1^2"}, {}, Box::from_intervals({{0, 0.9}}), Box());
  FlowTrial trial;
  trial.points = {Eigen::VectorXd::Constant(1, 0.2), Eigen::VectorXd::Constant(1, 0.8)};
  trial.inputs = {Eigen::VectorXd(0), Eigen::VectorXd(0)};
  trial.lambda = 0.3;
  const MarginTrace m = convexity_margin(q, OrthantOrder::standard(1), trial, 1.0, 1e-3);
  auto hyperbola = [](double x0, double t) { return x0 / (1 - x0 * t); };
  double err = 0;
  for (std::size_t k = 0; k < m.times.size(); ++k) {
    const double t = m.times[k];
    const double expected = 0.3 * hyperbola(0.2, t) + 0.7 * hyperbola(0.8, t) - hyperbola(0.3 * 0.2 + 0.7 * 0.8, t);
    err = std::max(err, std::abs(m.margins[k] - expected));
  }
  o.require(err <= 1e-6, "hyperbola mismatch " + fmt("%.3g", err));
  o.note(std::to_string(tested) + " systems, worst margin " + fmt("%.3g", worst) + ", hyperbola error " +
         fmt("%.2g", err));
  return o;
}

Outcome ac5() {
  Outcome o;
  // x' = A x with A the Jordan block: exp(A t) x0 in closed form
  const SystemModel s = load_system("jordan_block.json");
  const Eigen::Vector2d x0(1, 2);
  const double T = 2.0, e = std::exp(-T);
  const Eigen::Vector2d exact(e * (x0[0] + T * x0[1]), e * x0[1]);
  auto rk_err = [&](double dt) {
    return (integrate_rk4(s, x0, InputSignal::none(), T, dt).states.back() - Eigen::VectorXd(exact)).norm();
  };
  const double r4 = rk_err(0.2) / rk_err(0.1);
  o.require(std::abs(r4 - 16) <= 2, "RK4 ratio " + fmt("%.3f", r4));

  // dx = -x dt + dW, x0 = 1: E X_1^2 = e^-2 + (1 - e^-2) / 2
  const Diffusion ou(1, {"-x1"}, {{"1"}}, {}, Box::from_intervals({{-20, 20}}));
  const double second = std::exp(-2.0) + (1 - std::exp(-2.0)) / 2;
  const std::size_t paths = 1'000'000;
  auto em_err = [&](double dt) {
    EulerMaruyamaConfig c;
    c.horizon = 1;
    c.dt = dt;
    c.paths = paths;
    c.seed = 11;
    c.jobs = jobs();
    const Ensemble en = euler_maruyama(ou, Eigen::VectorXd::Constant(1, 1), c);
    return en.terminal.col(0).squaredNorm() / static_cast<double>(paths) - second;
  };
  const double r1 = em_err(0.2) / em_err(0.1);
  o.require(std::abs(r1 - 2) <= 0.5, "Euler-Maruyama ratio " + fmt("%.3f", r1));
  o.note("RK4 ratio " + fmt("%.2f", r4) + ", Euler-Maruyama ratio " + fmt("%.2f", r1));
  return o;
}

Outcome ac6() {
  Outcome o;
  const ReactionNetwork chain = network("conversion_chain.json");
  const Eigen::Vector2d x0(20, 5);
  const double dt = 1e-3;
  const GaussianTrajectory mom = lna_moments(chain, GaussianState(x0, Eigen::Matrix2d::Zero()), 5.0, dt);

  const Diffusion aug = lna_diffusion(chain, Box::from_intervals({{0, 100}, {0, 100}}));
  EulerMaruyamaConfig c;
  c.horizon = 5;
  c.dt = dt;
  c.paths = 10'000;
  c.seed = 6;
  c.jobs = jobs();
  c.record_times = {1, 2};
  const Ensemble en = euler_maruyama(aug, (Eigen::Vector4d() << x0, 0, 0).finished(), c);
  o.require(en.aborted_count() == 0, "aborted paths");

  const std::vector<double> times{1, 2, 5};
  const std::vector<const Eigen::MatrixXd*> snaps{&en.snapshots[0], &en.snapshots[1], &en.terminal};
  double worst_z = 0;
  for (std::size_t k = 0; k < times.size(); ++k) {
    const Eigen::MatrixXd eta = snaps[k]->rightCols(2);
    const double N = static_cast<double>(eta.rows());
    const Eigen::RowVector2d mu = eta.colwise().mean();
    const Eigen::MatrixXd centered = eta.rowwise() - mu;
    const std::size_t idx = static_cast<std::size_t>(std::llround(times[k] / dt));
    const Eigen::MatrixXd& sigma = mom.covs[idx];
    for (int i = 0; i < 2; ++i) {
      for (int j = i; j < 2; ++j) {
        const Eigen::ArrayXd prod = centered.col(i).array() * centered.col(j).array();
        const double est = prod.sum() / (N - 1);
        const double se = std::sqrt((prod - prod.mean()).square().sum() / (N - 1) / N);
        const double z = std::abs(est - sigma(i, j)) / se;
        worst_z = std::max(worst_z, z);
        o.require(z <= 3, "Sigma_" + std::to_string(i + 1) + std::to_string(j + 1) + " at t=" +
                              fmt("%g", times[k]) + " off by " + fmt("%.2f", z) + " SE");
      }
    }
  }
  o.note("worst deviation " + fmt("%.2f", worst_z) + " SE");
  return o;
}

Eigen::MatrixXd random_psd(std::mt19937_64& rng, Eigen::Index n, double scale) {
  std::normal_distribution<double> nd;
  Eigen::MatrixXd g(n, n);
  for (Eigen::Index i = 0; i < n; ++i)
    for (Eigen::Index j = 0; j < n; ++j) g(i, j) = nd(rng) * scale;
  return g * g.transpose();
}

Outcome ac7() {
  Outcome o;
  std::mt19937_64 rng(7);
  std::uniform_real_distribution<double> mean(0.5, 20), shift(0, 5);
  std::size_t runs = 0;
  double worst_mean = 1e300, worst_cov = 1e300;
  for (const std::string name : {"conversion_chain.json", "cycle_network.json", "cascade_network.json"}) {
    const ReactionNetwork net = network(name);
    o.require(is_unimolecular(net).ok, name + " is not unimolecular");
    const auto n = static_cast<Eigen::Index>(net.n());
    const OrthantOrder order = OrthantOrder::standard(net.n());
    for (int p = 0; p < 100; ++p) {
      Eigen::VectorXd ma(n), d(n);
      for (Eigen::Index i = 0; i < n; ++i) {
        ma[i] = mean(rng);
        d[i] = shift(rng);
      }
      const Eigen::MatrixXd ca = random_psd(rng, n, 0.5);
      const Eigen::MatrixXd cb = ca + random_psd(rng, n, 0.3);
      const LnaComparison r = compare_lna(net, GaussianState(ma, ca), GaussianState(ma + d, cb), order,
                                          OrderClass::icx, 10.0, 1e-2);
      ++runs;
      o.require(r.verdict == Verdict::pass, name + " pair " + std::to_string(p) + " violated");
      worst_mean = std::min(worst_mean, *std::min_element(r.mean_margins.begin(), r.mean_margins.end()));
      worst_cov = std::min(worst_cov, *std::min_element(r.cov_margins.begin(), r.cov_margins.end()));
    }
  }
  o.require(worst_mean >= -1e-8 && worst_cov >= -1e-8, "margin below -1e-8");
  o.note(std::to_string(runs) + " pairs, worst mean margin " + fmt("%.3g", worst_mean) + ", worst covariance margin " +
         fmt("%.3g", worst_cov));
  return o;
}

Outcome ac8() {
  Outcome o;
  const ReactionNetwork chain = network("conversion_chain.json");
  const GaussianState a(Eigen::Vector2d(1, 0), Eigen::Matrix2d::Zero());
  const GaussianState b(Eigen::Vector2d(2, 1), Eigen::Matrix2d::Zero());
  const OrthantOrder order = OrthantOrder::standard(2);
  o.require(gaussian_fd_leq(a, b, order, 1e-8), "initial pair not fd-ordered");
  const LnaComparison r = compare_lna(chain, a, b, order, OrderClass::fd, 5.0, 1e-2);
  o.require(r.verdict == Verdict::fail, "fd comparison passed");
  o.require(r.first_violation_time && *r.first_violation_time == r.times.at(1),
            "first violation not at the first positive grid time");
  o.require(r.cov_margins.at(1) < -1e-8 && r.mean_margins.at(1) >= 0, "violation is not a covariance split");
  o.require(!r.guaranteed, "chain labelled as guaranteed");
  o.require(!check_birth_death_structure(chain).ok, "chain reported as birth-death");
  o.require(check_birth_death_structure(network("birth_death_pair.json")).ok, "pair not reported as birth-death");
  if (r.first_violation_time) o.note("first violation at t=" + fmt("%g", *r.first_violation_time));
  return o;
}

Outcome ac9() {
  Outcome o;
  std::mt19937_64 rng(9);
  std::uniform_real_distribution<double> unit(0, 1);
  std::size_t fd_true = 0, icx_true = 0, contradictions = 0, detected = 0, unordered = 0;
  for (int p = 0; p < 50; ++p) {
    const Eigen::Index n = 2 + p % 2;
    std::vector<int> signs;
    for (Eigen::Index i = 0; i < n; ++i) signs.push_back(rng() % 2 ? 1 : -1);
    const OrthantOrder order(signs);
    const Eigen::MatrixXd T = order.matrix();
    Eigen::VectorXd ma(n), d(n);
    for (Eigen::Index i = 0; i < n; ++i) {
      ma[i] = 4 * unit(rng) - 2;
      d[i] = unit(rng);
    }
    const Eigen::MatrixXd ca = random_psd(rng, n, 0.6) + 0.1 * Eigen::MatrixXd::Identity(n, n);
    Eigen::MatrixXd cb = ca;
    const int group = p % 3;
    if (group == 1) cb += random_psd(rng, n, 0.4);
    if (group == 2) {
      d[p % n] = -0.5 - unit(rng);  // one mean component reversed in the order
      cb = random_psd(rng, n, 0.6) + 0.1 * Eigen::MatrixXd::Identity(n, n);
    }
    const GaussianState a(ma, ca), b(ma + T * d, cb);
    const bool fd = gaussian_fd_leq(a, b, order, 1e-9);
    const bool icx = gaussian_icx_leq(a, b, order, 1e-9);
    o.require(!fd || icx, "fd without icx at pair " + std::to_string(p));
    o.require(fd == (group == 0) && icx == (group != 2), "exact criteria disagree with the construction at pair " +
                                                             std::to_string(p));
    fd_true += fd;
    icx_true += icx;

    const std::uint64_t seed = 1000 + static_cast<std::uint64_t>(p);
    const Eigen::MatrixXd sa = sample_gaussian(a, 10'000, seed);
    const Eigen::MatrixXd sb = sample_gaussian(b, 10'000, seed);
    const bool emp_fd = empirical_order_test(sa, sb, order, OrderClass::fd, 50, seed).verdict == Verdict::pass;
    const bool emp_icx = empirical_order_test(sa, sb, order, OrderClass::icx, 50, seed).verdict == Verdict::pass;
    if ((fd && !emp_fd) || (icx && !emp_icx)) ++contradictions;
    if (group == 2) {
      ++unordered;
      detected += !emp_fd && !emp_icx;
    }
  }
  o.require(contradictions == 0, std::to_string(contradictions) + " empirical contradictions");
  o.require(detected == unordered, "unordered pairs missed: " + std::to_string(unordered - detected));
  o.note(std::to_string(fd_true) + " fd, " + std::to_string(icx_true) + " icx, " + std::to_string(detected) + "/" +
         std::to_string(unordered) + " unordered detected");
  return o;
}

std::vector<std::pair<std::string, std::string>> read_dir(const fs::path& dir) {
  std::vector<std::pair<std::string, std::string>> files;
  for (const auto& entry : fs::directory_iterator(dir)) {
    files.emplace_back(entry.path().filename().string(), io::read_file(entry.path()));
  }
  std::sort(files.begin(), files.end());
  return files;
}

std::string without_out(const std::string& config) {
  const std::size_t at = config.find("\"out\"");
  if (at == std::string::npos) return config;
  const std::size_t end = config.find('\n', at);
  return config.substr(0, at) + config.substr(end);
}

Outcome ac10() {
  Outcome o;
  const fs::path root = fs::temp_directory_path() / ("monoflow_acceptance_" + std::to_string(::getpid()));
  fs::remove_all(root);
  const std::vector<std::vector<std::string>> commands{
      {"classify", model_path("toggle_switch.json"), "--order=+,-", "--samples", "3000"},
      {"flow-test", model_path("toggle_switch.json"), "--order=+,-", "--pairs", "100", "--T", "5"},
      {"flow-test", model_path("square_forcing.json"), "--property", "convexity", "--pairs", "100", "--T", "2"},
      {"lna", model_path("conversion_chain.json"), "--compare", model_path("gaussian_a.json"),
       model_path("gaussian_b.json"), "--class", "fd", "--T", "5"},
      {"simulate", model_path("ornstein_uhlenbeck.json"), "--x0", "1", "--paths", "2000", "--T", "1",
       "--samples", "500"}};
  std::size_t files = 0;
  for (std::size_t k = 0; k < commands.size(); ++k) {
    const std::string tag = commands[k][0] + "_" + std::to_string(k);
    std::vector<std::vector<std::pair<std::string, std::string>>> outputs;
    std::vector<fs::path> dirs;
    for (const char* j : {"1", "8"}) {
      const fs::path dir = root / (tag + "_jobs" + j);
      std::vector<std::string> args = commands[k];
      args.insert(args.end(), {"--jobs", j, "--out", dir.string()});
      std::ostringstream out, err;
      o.require(cli::run(args, out, err) == 0, tag + " failed: " + err.str());
      dirs.push_back(dir);
    }
    for (const char* j : {"1", "8"}) {
      const fs::path dir = root / (tag + "_rerun" + j);
      std::ostringstream out, err;
      o.require(cli::run({"--config", (dirs[0] / "run_config.json").string(), "--jobs", j, "--out", dir.string()},
                         out, err) == 0,
                tag + " re-run failed: " + err.str());
      dirs.push_back(dir);
    }
    for (const fs::path& d : dirs) {
      auto listing = read_dir(d);
      for (auto& [name, body] : listing) {
        if (name == "run_config.json") body = without_out(body);
      }
      outputs.push_back(std::move(listing));
    }
    for (std::size_t r = 1; r < outputs.size(); ++r) {
      o.require(outputs[r] == outputs[0], tag + " output differs in " + dirs[r].filename().string());
    }
    files += outputs[0].size();
  }
  fs::remove_all(root);
  o.note(std::to_string(commands.size()) + " commands, " + std::to_string(files) +
         " files identical across --jobs 1/8 and config re-runs");
  return o;
}

}  // namespace

int main() {
  const std::vector<std::pair<std::string, std::function<Outcome()>>> criteria{
      {"AC1", ac1}, {"AC2", ac2}, {"AC3", ac3}, {"AC4", ac4}, {"AC5", ac5},
      {"AC6", ac6}, {"AC7", ac7}, {"AC8", ac8}, {"AC9", ac9}, {"AC10", ac10}};
  const std::vector<double> limits{10, 10, 60, 60, 0, 120, 0, 0, 0, 0};
  int failed = 0;
  for (std::size_t k = 0; k < criteria.size(); ++k) {
    const auto start = std::chrono::steady_clock::now();
    Outcome out;
    try {
      out = criteria[k].second();
    } catch (const std::exception& e) {
      out.pass = false;
      out.detail = std::string("exception: ") + e.what();
    }
    const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    if (limits[k] > 0 && secs > limits[k]) {
      out.pass = false;
      out.detail += "; runtime over " + fmt("%g", limits[k]) + " s";
    }
    failed += !out.pass;
    std::printf("%-5s %s  %s (%.2f s)\n", criteria[k].first.c_str(), out.pass ? "PASS" : "FAIL", out.detail.c_str(),
                secs);
    std::fflush(stdout);
  }
  return failed == 0 ? 0 : 1;
}
