#include "monoflow/error.hpp"
#include "monoflow/io.hpp"

#include "test_support.hpp"

#include <doctest.h>

#include <sstream>

using namespace monoflow;

TEST_CASE("number formatting uses 17 significant digits") {
  CHECK(io::format_number(0.1) == "0.10000000000000001");
  CHECK(io::format_number(1.0) == "1");
  CHECK(std::stod(io::format_number(1.0 / 3.0)) == 1.0 / 3.0);
}

TEST_CASE("system JSON") {
  const SystemModel s = load_system("toggle_switch.json");
  CHECK(s.n() == 2);
  CHECK(s.m() == 1);
  CHECK(s.params().at("p4") == 1.0);
  CHECK(s.domain().lo == Eigen::Vector2d(0, 0.1));
  const SystemModel plain = io::parse_system(R"({"n":1, "f":["-x1"], "domain":[[0,1]]})");
  CHECK(plain.m() == 0);
  CHECK_THROWS_AS(io::parse_system("{bad"), InputError);
  CHECK_THROWS_AS(io::parse_system(R"({"n":1, "domain":[[0,1]]})"), InputError);
  CHECK_THROWS_AS(io::parse_system(R"({"n":1, "f":["-x1"], "domain":[[0,1],[0,1]]})"), DimensionError);
  CHECK_THROWS_AS(io::parse_system(R"({"n":1, "f":["-x1"], "domain":[[1,0]]})"), InputError);
  CHECK_THROWS_AS(io::parse_system(R"({"n":1, "f":["-x1"], "domain":[[0,1,2]]})"), InputError);
  CHECK_THROWS_AS(io::parse_system(R"({"n":1, "m":1, "f":["-x1+u1"], "domain":[[0,1]]})"), InputError);
  CHECK_THROWS_AS(io::parse_system(R"({"n":"two", "f":["-x1"], "domain":[[0,1]]})"), InputError);
  CHECK_THROWS_AS(io::parse_system(R"({"n":1, "f":["-x1 +"], "domain":[[0,1]]})"), SyntaxError);
  CHECK_THROWS_AS(io::read_file("/nonexistent/file.json"), InputError);
}

TEST_CASE("diffusion, network and gaussian JSON") {
  const Diffusion d = io::parse_diffusion(io::read_file(model_path("ornstein_uhlenbeck.json")));
  CHECK(d.n() == 1);
  CHECK(d.sigma(Eigen::VectorXd::Zero(1))(0, 0) == 1.0);
  CHECK_THROWS_AS(io::parse_diffusion(R"({"n":1, "f":["-x1"], "domain":[[0,1]]})"), InputError);
  const std::string net = io::read_file(model_path("conversion_chain.json"));
  CHECK(io::parse_network(net).size() == 3);
  const Box dom = io::parse_network_domain(net, 2);
  CHECK(dom.lo == Eigen::Vector2d(0, 0));
  CHECK(dom.hi == Eigen::Vector2d(100, 100));
  const GaussianState g = io::parse_gaussian(R"({"mean":[1,2], "cov":[[1,0.5],[0.5,2]]})");
  CHECK(g.cov(1, 0) == 0.5);
  CHECK_THROWS_AS(io::parse_gaussian(R"({"mean":[1,2], "cov":[[1,0.5]]})"), DimensionError);
  CHECK_THROWS_AS(io::parse_gaussian(R"({"mean":[1,2], "cov":[[1,0],[0,-1]]})"), InputError);
}

TEST_CASE("trajectory CSV") {
  Trajectory t;
  t.times = {0.0, 0.1};
  t.states = {Eigen::Vector2d(1, 2), Eigen::Vector2d(0.1, 1.0 / 3.0)};
  CHECK(io::trajectory_csv(t) == "t,x1,x2\n0,1,2\n0.10000000000000001,0.10000000000000001,0.33333333333333331\n");
}

TEST_CASE("gaussian trajectory CSV mirrors the upper triangle") {
  GaussianTrajectory g;
  g.times = {0.0};
  g.means = {Eigen::Vector2d(1, 2)};
  Eigen::Matrix2d c;
  c << 1, 0.5, 0.5000000001, 2;
  g.covs = {c};
  CHECK(io::gaussian_trajectory_csv(g) == "t,m1,m2,S11,S12,S21,S22\n0,1,2,1,0.5,0.5,2\n");
}

TEST_CASE("ensemble CSV") {
  Ensemble e;
  e.terminal = Eigen::MatrixXd(2, 1);
  e.terminal << 1, 2;
  e.record_times = {0.5};
  e.snapshots = {Eigen::MatrixXd::Constant(2, 1, 7)};
  CHECK(io::ensemble_csv(e, 1.0) == "path,t,x1\n0,0.5,7\n0,1,1\n1,0.5,7\n1,1,2\n");
}
