#include "monoflow/classify.hpp"
#include "monoflow/flow.hpp"
#include "monoflow/io.hpp"
#include "monoflow/lna.hpp"
#include "monoflow/stoch.hpp"

#include <benchmark/benchmark.h>

#include <string>

using namespace monoflow;

namespace {

std::string model(const std::string& name) { return io::read_file(std::string(MONOFLOW_MODELS_DIR) + "/" + name); }

const SystemModel& toggle() {
  static const SystemModel s = io::parse_system(model("toggle_switch.json"));
  return s;
}

}  // namespace

static void BM_ParseExpression(benchmark::State& state) {
  const auto sig = std::make_shared<Signature>(2, 1, std::vector<std::string>{"p1", "p2"});
  for (auto _ : state) benchmark::DoNotOptimize(parse_expression("p1/(1 + x2^p2) - x1 + u1", sig));
}
BENCHMARK(BM_ParseExpression);

static void BM_EvalField(benchmark::State& state) {
  const SystemModel& s = toggle();
  const Eigen::Vector2d x(1.5, 2.5);
  const Eigen::VectorXd u = Eigen::VectorXd::Constant(1, 0.5);
  for (auto _ : state) benchmark::DoNotOptimize(s.field(x, u));
}
BENCHMARK(BM_EvalField);

static void BM_HessianFd(benchmark::State& state) {
  const SystemModel& s = toggle();
  const Eigen::Vector2d x(1.5, 2.5);
  const Eigen::VectorXd u = Eigen::VectorXd::Constant(1, 0.5);
  for (auto _ : state) benchmark::DoNotOptimize(hessian_fd(s, 1, x, u));
}
BENCHMARK(BM_HessianFd);

static void BM_Classify(benchmark::State& state) {
  ClassifyConfig c;
  c.samples = static_cast<std::size_t>(state.range(0));
  const OrthantOrder order = OrthantOrder::parse("+,-");
  for (auto _ : state) benchmark::DoNotOptimize(classify_system(toggle(), order, c));
  state.SetItemsProcessed(state.iterations() * state.range(0));
}
BENCHMARK(BM_Classify)->Arg(1000)->Arg(10000)->Unit(benchmark::kMillisecond);

static void BM_Rk4(benchmark::State& state) {
  const Eigen::Vector2d x0(1, 2);
  const InputSignal u = InputSignal::constant(Eigen::VectorXd::Constant(1, 0.5));
  for (auto _ : state) benchmark::DoNotOptimize(integrate_rk4(toggle(), x0, u, 10.0, 1e-2));
  state.SetItemsProcessed(state.iterations() * 1000);
}
BENCHMARK(BM_Rk4)->Unit(benchmark::kMicrosecond);

static void BM_OrderFlowTest(benchmark::State& state) {
  FlowTestConfig c;
  c.trials = 100;
  const OrthantOrder order = OrthantOrder::parse("+,-");
  for (auto _ : state) benchmark::DoNotOptimize(test_order_preservation(toggle(), order, c));
}
BENCHMARK(BM_OrderFlowTest)->Unit(benchmark::kMillisecond);

static void BM_EulerMaruyama(benchmark::State& state) {
  const Diffusion ou = io::parse_diffusion(model("ornstein_uhlenbeck.json"));
  EulerMaruyamaConfig c;
  c.paths = 1000;
  c.dt = 1e-2;
  for (auto _ : state) benchmark::DoNotOptimize(euler_maruyama(ou, Eigen::VectorXd::Constant(1, 1), c));
  state.SetItemsProcessed(state.iterations() * 1000 * 100);
}
BENCHMARK(BM_EulerMaruyama)->Unit(benchmark::kMillisecond);

static void BM_LnaMoments(benchmark::State& state) {
  const ReactionNetwork net = io::parse_network(model("cascade_network.json"));
  const GaussianState g(Eigen::Vector4d(10, 5, 3, 1), Eigen::Matrix4d::Identity());
  for (auto _ : state) benchmark::DoNotOptimize(lna_moments(net, g, 10.0, 1e-2));
}
BENCHMARK(BM_LnaMoments)->Unit(benchmark::kMicrosecond);

static void BM_EmpiricalOrder(benchmark::State& state) {
  const GaussianState a(Eigen::Vector2d(0, 0), Eigen::Matrix2d::Identity());
  const GaussianState b(Eigen::Vector2d(1, 1), 2 * Eigen::Matrix2d::Identity());
  const Eigen::MatrixXd sa = sample_gaussian(a, 10000, 1), sb = sample_gaussian(b, 10000, 1);
  const OrthantOrder order = OrthantOrder::standard(2);
  for (auto _ : state) benchmark::DoNotOptimize(empirical_order_test(sa, sb, order, OrderClass::icx, 50, 3));
}
BENCHMARK(BM_EmpiricalOrder)->Unit(benchmark::kMillisecond);
BENCHMARK_MAIN();
