#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <string>
#include <vector>

namespace monoflow::cli {

/// Everything needed to repeat a run. Serialized as run_config.json next to
/// the outputs; `jobs` is left out because it never changes them.
struct RunConfig {
  std::string command;
  std::vector<std::string> inputs;  // absolute paths
  std::string order;                // empty: standard order
  std::string property = "order";
  std::string order_class = "icx";
  std::vector<double> x0;           // simulate only
  std::uint64_t seed = 42;
  std::size_t samples = 10'000;
  std::size_t pairs = 1'000;
  std::size_t paths = 10'000;
  double tol_classify = 1e-6;
  double tol_flow = 1e-7;
  double tol_lna = 1e-8;
  double horizon = 10.0;
  double dt = 0.0;                  // 0: 1e-3 * horizon
  std::string out = "out";

  void validate() const;
  double resolved_dt() const { return dt > 0.0 ? dt : 1e-3 * horizon; }
};

std::string to_json(const RunConfig& cfg);
RunConfig run_config_from_json(const std::string& text);

/// Runs the command and writes its outputs into cfg.out.
/// Returns the process exit code: 0 completed, 2 input error, 3 numerical failure.
int execute(const RunConfig& cfg, std::size_t jobs, std::ostream& out, std::ostream& err);

/// Full command line entry point; args exclude the program name.
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace monoflow::cli
