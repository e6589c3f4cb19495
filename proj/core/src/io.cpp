#include "monoflow/io.hpp"

#include "monoflow/error.hpp"

#include <json.hpp>

#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>

namespace monoflow::io {

using json = nlohmann::ordered_json;

namespace {

json parse_json(const std::string& text) {
  try {
    return json::parse(text);
  } catch (const json::exception& e) {
    throw InputError(std::string("malformed JSON: ") + e.what());
  }
}

template <class T>
T get(const json& j, const char* key) {
  if (!j.is_object() || !j.contains(key)) throw InputError(std::string("missing field '") + key + "'");
  try {
    return j.at(key).get<T>();
  } catch (const json::exception& e) {
    throw InputError(std::string("field '") + key + "': " + e.what());
  }
}

Box parse_box(const json& j, const char* key, std::size_t dim) {
  const auto axes = get<std::vector<std::vector<double>>>(j, key);
  if (axes.size() != dim)
    throw DimensionError(std::string("'") + key + "' has " + std::to_string(axes.size()) +
                         " axes, expected " + std::to_string(dim));
  std::vector<std::pair<double, double>> pairs;
  for (const auto& a : axes) {
    if (a.size() != 2) throw InputError(std::string("'") + key + "' axes must be [lo, hi] pairs");
    if (!(a[0] < a[1])) throw InputError(std::string("'") + key + "' has an empty axis");
    pairs.emplace_back(a[0], a[1]);
  }
  return Box::from_intervals(pairs);
}

std::map<std::string, double> parse_params(const json& j) {
  if (!j.contains("params")) return {};
  return get<std::map<std::string, double>>(j, "params");
}

json number(double v) {
  if (!std::isfinite(v)) return nullptr;
  return v;
}

json vector_json(const Eigen::VectorXd& v) {
  json a = json::array();
  for (Eigen::Index k = 0; k < v.size(); ++k) a.push_back(number(v[k]));
  return a;
}

json check_json(const CheckResult& c) {
  json j;
  j["verdict"] = to_string(c.verdict);
  j["samples"] = c.samples;
  j["violations"] = c.violations;
  j["worst_margin"] = number(c.worst);
  json w = json::array();
  for (const Witness& x : c.witnesses) {
    json e;
    e["sample"] = x.sample;
    e["component"] = x.component + 1;
    e["quantity"] = x.quantity;
    e["value"] = number(x.value);
    e["point"] = vector_json(x.point);
    if (x.partner.size() > 0) e["partner"] = vector_json(x.partner);
    w.push_back(std::move(e));
  }
  j["witnesses"] = std::move(w);
  return j;
}

std::string dump(const json& j) { return j.dump(2) + "\n"; }

}  // namespace

std::string format_number(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

std::string read_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw InputError("cannot open '" + path.string() + "'");
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void write_file(const std::filesystem::path& path, const std::string& content) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw InputError("cannot write '" + path.string() + "'");
  out << content;
  if (!out) throw InputError("failed writing '" + path.string() + "'");
}

SystemModel parse_system(const std::string& json_text) {
  const json j = parse_json(json_text);
  const auto n = get<std::size_t>(j, "n");
  const std::size_t m = j.contains("m") ? get<std::size_t>(j, "m") : 0;
  const auto f = get<std::vector<std::string>>(j, "f");
  Box input = m > 0 || j.contains("input_box") ? parse_box(j, "input_box", m)
                                                : Box(Eigen::VectorXd(0), Eigen::VectorXd(0));
  return SystemModel(n, m, f, parse_params(j), parse_box(j, "domain", n), std::move(input));
}

Diffusion parse_diffusion(const std::string& json_text) {
  const json j = parse_json(json_text);
  const auto n = get<std::size_t>(j, "n");
  if (j.contains("m") && get<std::size_t>(j, "m") != 0)
    throw InputError("diffusions take no inputs (m must be 0)");
  const auto f = get<std::vector<std::string>>(j, "f");
  if (f.size() != n) throw DimensionError("drift has " + std::to_string(f.size()) + " components, expected " + std::to_string(n));
  const auto disp = get<std::vector<std::vector<std::string>>>(j, "dispersion");
  return Diffusion(n, f, disp, parse_params(j), parse_box(j, "domain", n));
}

ReactionNetwork parse_network(const std::string& json_text) {
  const json j = parse_json(json_text);
  const auto species = get<std::vector<std::string>>(j, "species");
  std::vector<ReactionNetwork::ReactionSpec> reactions;
  if (!j.contains("reactions") || !j["reactions"].is_array())
    throw InputError("missing field 'reactions'");
  for (const json& r : j["reactions"]) {
    reactions.push_back({get<std::vector<int>>(r, "change"), get<std::string>(r, "rate")});
  }
  return ReactionNetwork(species, reactions, parse_params(j));
}

Box parse_network_domain(const std::string& json_text, std::size_t n) {
  const json j = parse_json(json_text);
  if (j.contains("domain")) return parse_box(j, "domain", n);
  return Box(Eigen::VectorXd::Zero(static_cast<Eigen::Index>(n)),
             Eigen::VectorXd::Constant(static_cast<Eigen::Index>(n), 100.0));
}

GaussianState parse_gaussian(const std::string& json_text) {
  const json j = parse_json(json_text);
  const auto mean = get<std::vector<double>>(j, "mean");
  const auto cov = get<std::vector<std::vector<double>>>(j, "cov");
  const auto n = static_cast<Eigen::Index>(mean.size());
  if (cov.size() != mean.size()) throw DimensionError("covariance rows do not match mean length");
  Eigen::MatrixXd c(n, n);
  for (Eigen::Index r = 0; r < n; ++r) {
    if (cov[static_cast<std::size_t>(r)].size() != mean.size())
      throw DimensionError("covariance is not square");
    for (Eigen::Index k = 0; k < n; ++k) c(r, k) = cov[static_cast<std::size_t>(r)][static_cast<std::size_t>(k)];
  }
  return GaussianState(Eigen::Map<const Eigen::VectorXd>(mean.data(), n), std::move(c));
}

std::string trajectory_csv(const Trajectory& traj) {
  std::string out = "t";
  const std::size_t n = traj.states.empty() ? 0 : static_cast<std::size_t>(traj.states[0].size());
  for (std::size_t i = 0; i < n; ++i) out += ",x" + std::to_string(i + 1);
  out += '\n';
  for (std::size_t k = 0; k < traj.size(); ++k) {
    out += format_number(traj.times[k]);
    for (Eigen::Index i = 0; i < traj.states[k].size(); ++i) out += "," + format_number(traj.states[k][i]);
    out += '\n';
  }
  return out;
}

std::string gaussian_trajectory_csv(const GaussianTrajectory& traj) {
  const std::size_t n = traj.means.empty() ? 0 : static_cast<std::size_t>(traj.means[0].size());
  std::string out = "t";
  for (std::size_t i = 0; i < n; ++i) out += ",m" + std::to_string(i + 1);
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = 0; j < n; ++j) out += ",S" + std::to_string(i + 1) + std::to_string(j + 1);
  }
  out += '\n';
  for (std::size_t k = 0; k < traj.size(); ++k) {
    out += format_number(traj.times[k]);
    for (Eigen::Index i = 0; i < traj.means[k].size(); ++i) out += "," + format_number(traj.means[k][i]);
    const Eigen::MatrixXd& c = traj.covs[k];
    for (Eigen::Index i = 0; i < c.rows(); ++i) {
      for (Eigen::Index j = 0; j < c.cols(); ++j) {
        // Lower entries mirror the upper triangle.
        out += "," + format_number(i <= j ? c(i, j) : c(j, i));
      }
    }
    out += '\n';
  }
  return out;
}

std::string ensemble_csv(const Ensemble& ens, double horizon) {
  const auto n = ens.terminal.cols();
  std::string out = "path,t";
  for (Eigen::Index i = 0; i < n; ++i) out += ",x" + std::to_string(i + 1);
  out += '\n';
  for (Eigen::Index p = 0; p < ens.terminal.rows(); ++p) {
    auto row = [&](double t, const Eigen::MatrixXd& m) {
      out += std::to_string(p) + "," + format_number(t);
      for (Eigen::Index i = 0; i < n; ++i) out += "," + format_number(m(p, i));
      out += '\n';
    };
    for (std::size_t r = 0; r < ens.snapshots.size(); ++r) row(ens.record_times[r], ens.snapshots[r]);
    row(horizon, ens.terminal);
  }
  return out;
}

std::string report_json(const ClassificationReport& report) {
  json j;
  j["order"] = report.order.to_string();
  j["samples"] = report.config.samples;
  j["tol"] = report.config.tol;
  j["seed"] = report.config.seed;
  j["witness_coordinates"] = "transformed: y = T x, w = T_u u";
  j["monotone"] = to_string(report.monotone);
  j["convex"] = to_string(report.convex.verdict);
  j["concave"] = to_string(report.concave.verdict);
  j["directionally_convex"] = to_string(report.directionally_convex.verdict);
  json p = json::array();
  for (OrderClass c : report.propagates) p.push_back(to_string(c));
  j["propagates"] = std::move(p);
  json checks;
  checks["jacobian_metzler"] = check_json(report.jacobian);
  checks["kamke"] = check_json(report.kamke);
  checks["convex"] = check_json(report.convex);
  checks["concave"] = check_json(report.concave);
  checks["directionally_convex"] = check_json(report.directionally_convex);
  j["checks"] = std::move(checks);
  return dump(j);
}

std::string report_text(const ClassificationReport& report) {
  std::ostringstream out;
  out << "order " << report.order.to_string() << ", " << report.config.samples
      << " samples, tol " << format_number(report.config.tol) << ", seed " << report.config.seed
      << "\n";
  auto line = [&](const char* name, const CheckResult& c) {
    out << "  " << name << ": " << to_string(c.verdict) << " (worst margin "
        << format_number(c.worst) << ", " << c.violations << " violations)\n";
    for (const Witness& w : c.witnesses) {
      out << "    sample " << w.sample << ": " << w.quantity << " = " << format_number(w.value)
          << "\n";
    }
  };
  line("jacobian metzler", report.jacobian);
  line("kamke", report.kamke);
  out << "monotone: " << to_string(report.monotone) << "\n";
  line("convex", report.convex);
  line("concave", report.concave);
  line("directionally convex", report.directionally_convex);
  out << "propagates: {";
  for (std::size_t k = 0; k < report.propagates.size(); ++k)
    out << (k ? ", " : "") << to_string(report.propagates[k]);
  out << "}\n";
  return out.str();
}

std::string flow_result_json(const FlowTestResult& result, const std::string& property,
                             const OrthantOrder& order) {
  json j;
  j["property"] = property;
  j["order"] = order.to_string();
  j["verdict"] = to_string(result.verdict);
  j["trials"] = result.trials;
  j["inconclusive"] = result.inconclusive;
  j["violations"] = result.violations;
  j["worst_margin"] = number(result.worst_margin);
  json w;
  w["trial"] = result.worst_trial;
  w["time"] = result.worst_time;
  w["component"] = result.worst_component + 1;
  json pts = json::array();
  for (const auto& p : result.worst.points) pts.push_back(vector_json(p));
  w["points"] = std::move(pts);
  json ins = json::array();
  for (const auto& u : result.worst.inputs) ins.push_back(vector_json(u));
  w["inputs"] = std::move(ins);
  if (property == "convexity") w["lambda"] = result.worst.lambda;
  j["worst"] = std::move(w);
  return dump(j);
}

std::string lna_comparison_json(const LnaComparison& cmp, const OrthantOrder& order) {
  json j;
  j["class"] = to_string(cmp.order_class);
  j["order"] = order.to_string();
  j["verdict"] = to_string(cmp.verdict);
  j["guaranteed"] = cmp.guaranteed;
  j["label"] = cmp.label;
  j["criterion"] = cmp.order_class == OrderClass::icx ? "sufficient-criterion" : "exact";
  j["first_violation_time"] = cmp.first_violation_time ? json(*cmp.first_violation_time) : json(nullptr);
  json trace = json::array();
  for (std::size_t k = 0; k < cmp.times.size(); ++k) {
    json row;
    row["t"] = cmp.times[k];
    row["mean_margin"] = number(cmp.mean_margins[k]);
    row["cov_margin"] = number(cmp.cov_margins[k]);
    trace.push_back(std::move(row));
  }
  j["trace"] = std::move(trace);
  return dump(j);
}

std::string diffusion_check_json(const DiffusionCheck& check, const std::string& kind) {
  json j;
  j["conditions"] = kind;
  j["verdict"] = to_string(check.verdict);
  json parts;
  for (const auto& [name, part] : check.parts) parts[name] = check_json(part);
  j["checks"] = std::move(parts);
  return dump(j);
}

}  // namespace monoflow::io
