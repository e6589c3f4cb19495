#pragma once

#include "monoflow/classify.hpp"
#include "monoflow/expr.hpp"
#include "monoflow/flow.hpp"
#include "monoflow/lna.hpp"
#include "monoflow/orders.hpp"
#include "monoflow/stoch.hpp"

#include <filesystem>
#include <string>
#include <vector>

namespace monoflow::io {

/// "%.17g" formatting used by every CSV and text output.
std::string format_number(double v);

std::string read_file(const std::filesystem::path& path);
void write_file(const std::filesystem::path& path, const std::string& content);

/// System JSON:
/// {"n":2, "m":1, "f":["...","..."], "params":{...}, "domain":[[lo,hi],...], "input_box":[[lo,hi]]}
/// "m", "params" and "input_box" may be omitted when there are no inputs or parameters.
SystemModel parse_system(const std::string& json_text);

/// System JSON with m = 0 plus "dispersion": n rows of expression strings.
/// The "f" entries are the drift.
Diffusion parse_diffusion(const std::string& json_text);

/// {"species":["X1","X2"], "reactions":[{"change":[-1,1], "rate":"k*x1"}], "params":{"k":1.0}}
ReactionNetwork parse_network(const std::string& json_text);

/// Optional "domain" of a network file; defaults to [0, 100]^n.
Box parse_network_domain(const std::string& json_text, std::size_t n);

/// {"mean":[...], "cov":[[...],...]}
GaussianState parse_gaussian(const std::string& json_text);

/// Header `t,x1..xn`, one row per grid time.
std::string trajectory_csv(const Trajectory& traj);

/// Header `t,m1..mn,S11,S12,...,Snn`; the covariance is written row-major in
/// full, so entries below the diagonal mirror those above it.
std::string gaussian_trajectory_csv(const GaussianTrajectory& traj);

/// Terminal states: header `path,t,x1..xn`, t = horizon. With snapshots the
/// recorded times come first, in path-major order.
std::string ensemble_csv(const Ensemble& ens, double horizon);

std::string report_json(const ClassificationReport& report);
std::string report_text(const ClassificationReport& report);
std::string flow_result_json(const FlowTestResult& result, const std::string& property,
                             const OrthantOrder& order);
std::string lna_comparison_json(const LnaComparison& cmp, const OrthantOrder& order);
std::string diffusion_check_json(const DiffusionCheck& check, const std::string& kind);

}  // namespace monoflow::io
