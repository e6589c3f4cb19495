#include "monoflow/cli.hpp"

#include "monoflow/classify.hpp"
#include "monoflow/error.hpp"
#include "monoflow/flow.hpp"
#include "monoflow/io.hpp"
#include "monoflow/lna.hpp"
#include "monoflow/stoch.hpp"

#include <CLI11.hpp>
#include <json.hpp>

#include <cmath>
#include <optional>
#include <ostream>

namespace monoflow::cli {

using json = nlohmann::ordered_json;
namespace fs = std::filesystem;

namespace {

std::size_t expected_inputs(const std::string& command) {
  if (command == "lna") return 3;
  return 1;
}

bool positive_finite(double v) { return std::isfinite(v) && v > 0.0; }

OrthantOrder resolve_order(const std::string& text, std::size_t n, std::size_t m) {
  if (text.empty()) return OrthantOrder::standard(n, m);
  OrthantOrder order = OrthantOrder::parse(text);
  if (order.n() != n)
    throw DimensionError("order '" + text + "' has " + std::to_string(order.n()) +
                         " state signs but the model has " + std::to_string(n) + " states");
  if (order.m() != 0 && order.m() != m)
    throw DimensionError("order '" + text + "' has " + std::to_string(order.m()) +
                         " input signs but the model has " + std::to_string(m) + " inputs");
  return order;
}

OrderClass parse_class(const std::string& text) {
  if (text == "icx") return OrderClass::icx;
  if (text == "fd") return OrderClass::fd;
  throw InputError("unknown order class '" + text + "' (expected icx or fd)");
}

std::string read_input(const RunConfig& cfg, std::size_t k) { return io::read_file(cfg.inputs.at(k)); }

void cmd_classify(const RunConfig& cfg, std::size_t jobs, std::ostream& out) {
  const SystemModel sys = io::parse_system(read_input(cfg, 0));
  const OrthantOrder order = resolve_order(cfg.order, sys.n(), sys.m());
  ClassifyConfig cc;
  cc.samples = cfg.samples;
  cc.tol = cfg.tol_classify;
  cc.seed = cfg.seed;
  cc.jobs = jobs;
  const ClassificationReport report = classify_system(sys, order, cc);
  const fs::path dir(cfg.out);
  io::write_file(dir / "report.json", io::report_json(report));
  const std::string text = io::report_text(report);
  io::write_file(dir / "report.txt", text);
  out << text;
}

void cmd_flow_test(const RunConfig& cfg, std::size_t jobs, std::ostream& out) {
  const SystemModel sys = io::parse_system(read_input(cfg, 0));
  const OrthantOrder order = resolve_order(cfg.order, sys.n(), sys.m());
  FlowTestConfig fc;
  fc.trials = cfg.pairs;
  fc.horizon = cfg.horizon;
  fc.dt = cfg.resolved_dt();
  fc.tol = cfg.tol_flow;
  fc.seed = cfg.seed;
  fc.jobs = jobs;
  FlowTestResult result;
  if (cfg.property == "order") {
    result = test_order_preservation(sys, order, fc);
  } else if (cfg.property == "convexity") {
    result = test_flow_convexity(sys, order, fc);
  } else {
    result = test_flow_directional_convexity(sys, order, fc);
  }
  const fs::path dir(cfg.out);
  io::write_file(dir / "flow_result.json", io::flow_result_json(result, cfg.property, order));
  for (std::size_t k = 0; k < result.worst_trajectories.size(); ++k) {
    io::write_file(dir / ("worst_trajectory_" + std::to_string(k + 1) + ".csv"),
                   io::trajectory_csv(result.worst_trajectories[k]));
  }
  out << cfg.property << " under " << order.to_string() << ": " << to_string(result.verdict)
      << " (worst margin " << io::format_number(result.worst_margin) << " at t = "
      << io::format_number(result.worst_time) << ", " << result.violations << " of "
      << result.trials << " trials violate, " << result.inconclusive << " inconclusive)\n";
}

void cmd_lna(const RunConfig& cfg, std::ostream& out) {
  const std::string net_text = read_input(cfg, 0);
  const ReactionNetwork net = io::parse_network(net_text);
  const GaussianState a = io::parse_gaussian(read_input(cfg, 1));
  const GaussianState b = io::parse_gaussian(read_input(cfg, 2));
  if (static_cast<std::size_t>(a.mean.size()) != net.n() || static_cast<std::size_t>(b.mean.size()) != net.n())
    throw DimensionError("initial Gaussians must have dimension " + std::to_string(net.n()));
  const OrthantOrder order = resolve_order(cfg.order, net.n(), 0);
  const OrderClass cls = parse_class(cfg.order_class);
  const LnaComparison cmp =
      compare_lna(net, a, b, order, cls, cfg.horizon, cfg.resolved_dt(), cfg.tol_lna);
  const fs::path dir(cfg.out);
  io::write_file(dir / "lna_result.json", io::lna_comparison_json(cmp, order));
  io::write_file(dir / "lna_a.csv", io::gaussian_trajectory_csv(cmp.a));
  io::write_file(dir / "lna_b.csv", io::gaussian_trajectory_csv(cmp.b));
  out << to_string(cls) << " under " << order.to_string() << ": " << to_string(cmp.verdict);
  if (cmp.first_violation_time) out << " (first violation at t = " << io::format_number(*cmp.first_violation_time) << ")";
  out << "\n" << cmp.label << "\n";
}

void cmd_simulate(const RunConfig& cfg, std::size_t jobs, std::ostream& out) {
  const Diffusion diff = io::parse_diffusion(read_input(cfg, 0));
  if (cfg.x0.size() != diff.n())
    throw DimensionError("--x0 needs " + std::to_string(diff.n()) + " values, got " +
                         std::to_string(cfg.x0.size()));
  const OrthantOrder order = resolve_order(cfg.order, diff.n(), 0);
  EulerMaruyamaConfig ec;
  ec.horizon = cfg.horizon;
  ec.dt = cfg.resolved_dt();
  ec.paths = cfg.paths;
  ec.seed = cfg.seed;
  ec.jobs = jobs;
  const Eigen::VectorXd x0 = Eigen::Map<const Eigen::VectorXd>(cfg.x0.data(), static_cast<Eigen::Index>(cfg.x0.size()));
  const Ensemble ens = euler_maruyama(diff, x0, ec);
  ClassifyConfig cc;
  cc.samples = cfg.samples;
  cc.tol = cfg.tol_classify;
  cc.seed = cfg.seed;
  cc.jobs = jobs;
  const DiffusionCheck fd = check_fd_diffusion_conditions(diff, order, cc);
  const DiffusionCheck icx = check_icx_diffusion_conditions(diff, order, cc);
  const fs::path dir(cfg.out);
  io::write_file(dir / "ensemble.csv", io::ensemble_csv(ens, cfg.horizon));
  io::write_file(dir / "diffusion_fd.json", io::diffusion_check_json(fd, "F_d"));
  io::write_file(dir / "diffusion_icx.json", io::diffusion_check_json(icx, "F_icx"));
  out << ens.paths() << " paths, " << ens.aborted_count() << " aborted\n"
      << "F_d conditions: " << to_string(fd.verdict) << "\n"
      << "F_icx conditions: " << to_string(icx.verdict) << "\n";
}

}  // namespace

void RunConfig::validate() const {
  if (command != "classify" && command != "flow-test" && command != "lna" && command != "simulate")
    throw InputError("unknown command '" + command + "'");
  if (inputs.size() != expected_inputs(command))
    throw InputError(command + " expects " + std::to_string(expected_inputs(command)) + " input file(s)");
  if (samples < 1 || pairs < 1 || paths < 1) throw InputError("budgets must be at least 1");
  if (!positive_finite(tol_classify) || !positive_finite(tol_flow) || !positive_finite(tol_lna))
    throw InputError("tolerances must be positive");
  if (!positive_finite(horizon)) throw InputError("T must be positive");
  if (!std::isfinite(dt) || dt < 0.0) throw InputError("dt must be positive");
  if (property != "order" && property != "convexity" && property != "dirconvexity")
    throw InputError("unknown property '" + property + "' (expected order, convexity or dirconvexity)");
  if (order_class != "icx" && order_class != "fd")
    throw InputError("unknown order class '" + order_class + "' (expected icx or fd)");
  if (out.empty()) throw InputError("output directory must not be empty");
}

std::string to_json(const RunConfig& cfg) {
  json j;
  j["command"] = cfg.command;
  j["inputs"] = cfg.inputs;
  j["order"] = cfg.order;
  j["property"] = cfg.property;
  j["class"] = cfg.order_class;
  j["x0"] = cfg.x0;
  j["seed"] = cfg.seed;
  j["samples"] = cfg.samples;
  j["pairs"] = cfg.pairs;
  j["paths"] = cfg.paths;
  j["tol_classify"] = cfg.tol_classify;
  j["tol_flow"] = cfg.tol_flow;
  j["tol_lna"] = cfg.tol_lna;
  j["T"] = cfg.horizon;
  j["dt"] = cfg.resolved_dt();
  j["out"] = cfg.out;
  return j.dump(2) + "\n";
}

RunConfig run_config_from_json(const std::string& text) {
  RunConfig cfg;
  try {
    const json j = json::parse(text);
    cfg.command = j.at("command").get<std::string>();
    cfg.inputs = j.at("inputs").get<std::vector<std::string>>();
    cfg.order = j.value("order", cfg.order);
    cfg.property = j.value("property", cfg.property);
    cfg.order_class = j.value("class", cfg.order_class);
    cfg.x0 = j.value("x0", cfg.x0);
    cfg.seed = j.value("seed", cfg.seed);
    cfg.samples = j.value("samples", cfg.samples);
    cfg.pairs = j.value("pairs", cfg.pairs);
    cfg.paths = j.value("paths", cfg.paths);
    cfg.tol_classify = j.value("tol_classify", cfg.tol_classify);
    cfg.tol_flow = j.value("tol_flow", cfg.tol_flow);
    cfg.tol_lna = j.value("tol_lna", cfg.tol_lna);
    cfg.horizon = j.value("T", cfg.horizon);
    cfg.dt = j.value("dt", cfg.dt);
    cfg.out = j.value("out", cfg.out);
  } catch (const json::exception& e) {
    throw InputError(std::string("bad run config: ") + e.what());
  }
  return cfg;
}

int execute(const RunConfig& cfg, std::size_t jobs, std::ostream& out, std::ostream& err) {
  try {
    cfg.validate();
    if (jobs < 1) throw InputError("--jobs must be at least 1");
    std::error_code ec;
    fs::create_directories(cfg.out, ec);
    if (ec) throw InputError("cannot create '" + cfg.out + "': " + ec.message());
    io::write_file(fs::path(cfg.out) / "run_config.json", to_json(cfg));
    if (cfg.command == "classify") {
      cmd_classify(cfg, jobs, out);
    } else if (cfg.command == "flow-test") {
      cmd_flow_test(cfg, jobs, out);
    } else if (cfg.command == "lna") {
      cmd_lna(cfg, out);
    } else {
      cmd_simulate(cfg, jobs, out);
    }
    return 0;
  } catch (const InputError& e) {
    err << "error: " << e.what() << "\n";
    return 2;
  } catch (const NumericalError& e) {
    err << "numerical failure: " << e.what() << "\n";
    return 3;
  }
}

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Monotonicity and stochastic-order propagation checks for ODE, SDE and reaction-network models"};
  app.name("monoflow");
  app.require_subcommand(0, 1);

  RunConfig cfg;
  std::size_t jobs = 1;
  std::string config_path;
  std::optional<std::string> out_dir;
  std::optional<double> tol;

  app.add_option("--config", config_path, "Re-run from an emitted run_config.json");
  app.add_option("--jobs", jobs, "Worker threads")->check(CLI::PositiveNumber);
  app.add_option("--out", out_dir, "Output directory");

  auto common = [&](CLI::App* sub, bool stochastic_budget) {
    sub->add_option("--order", cfg.order, "Orthant signs, e.g. +,- (state signs; input signs after ';')");
    sub->add_option("--seed", cfg.seed, "Random seed");
    sub->add_option("--tol", tol, "Tolerance");
    sub->add_option("--jobs", jobs, "Worker threads")->check(CLI::PositiveNumber);
    sub->add_option("--out", out_dir, "Output directory");
    if (stochastic_budget) {
      sub->add_option("--T", cfg.horizon, "Horizon");
      sub->add_option("--dt", cfg.dt, "Step (default 1e-3*T)");
    }
  };

  std::string input;
  std::vector<std::string> compare;

  CLI::App* classify = app.add_subcommand("classify", "Sampled monotonicity and curvature classification");
  classify->add_option("system", input, "System JSON")->required();
  classify->add_option("--samples", cfg.samples, "Sample budget");
  common(classify, false);

  CLI::App* flow = app.add_subcommand("flow-test", "Flow-level order, convexity or directional convexity test");
  flow->add_option("system", input, "System JSON")->required();
  flow->add_option("--property", cfg.property, "order | convexity | dirconvexity")
      ->check(CLI::IsMember({"order", "convexity", "dirconvexity"}));
  flow->add_option("--pairs", cfg.pairs, "Number of trials");
  common(flow, true);

  CLI::App* lna = app.add_subcommand("lna", "Linear noise approximation order comparison");
  lna->add_option("network", input, "Network JSON")->required();
  lna->add_option("--compare", compare, "Initial Gaussians a.json b.json")->expected(2)->required();
  lna->add_option("--class", cfg.order_class, "icx | fd")->check(CLI::IsMember({"icx", "fd"}));
  common(lna, true);

  CLI::App* simulate = app.add_subcommand("simulate", "Euler-Maruyama ensemble and diffusion conditions");
  simulate->add_option("diffusion", input, "Diffusion JSON")->required();
  simulate->add_option("--x0", cfg.x0, "Initial state, comma separated")->delimiter(',')->required();
  simulate->add_option("--paths", cfg.paths, "Number of paths");
  simulate->add_option("--samples", cfg.samples, "Sample budget of the diffusion checks");
  common(simulate, true);

  try {
    std::vector<std::string> reversed(args.rbegin(), args.rend());
    app.parse(reversed);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e, out, err);
    return code == 0 ? 0 : 2;
  }

  if (!config_path.empty()) {
    if (!app.get_subcommands().empty()) {
      err << "error: --config replaces the command; give only --jobs and --out with it\n";
      return 2;
    }
    try {
      cfg = run_config_from_json(io::read_file(config_path));
    } catch (const InputError& e) {
      err << "error: " << e.what() << "\n";
      return 2;
    }
    if (out_dir) cfg.out = *out_dir;
    return execute(cfg, jobs, out, err);
  }

  if (app.get_subcommands().empty()) {
    err << app.help();
    return 2;
  }

  CLI::App* sub = app.get_subcommands().front();
  cfg.command = sub->get_name();
  cfg.inputs.push_back(fs::absolute(input).lexically_normal().string());
  for (const std::string& c : compare) cfg.inputs.push_back(fs::absolute(c).lexically_normal().string());
  if (tol) {
    if (cfg.command == "classify" || cfg.command == "simulate") cfg.tol_classify = *tol;
    if (cfg.command == "flow-test") cfg.tol_flow = *tol;
    if (cfg.command == "lna") cfg.tol_lna = *tol;
  }
  if (out_dir) cfg.out = *out_dir;
  return execute(cfg, jobs, out, err);
}

}  // namespace monoflow::cli
