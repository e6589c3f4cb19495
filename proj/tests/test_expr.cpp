#include "monoflow/error.hpp"
#include "monoflow/expr.hpp"

#include <doctest.h>

#include <bit>
#include <cmath>
#include <random>
#include <string>

using namespace monoflow;

namespace {

SystemModel toggle(double u_hi = 1.0) {
  return SystemModel(2, 1, {"p1/(1 + x2/p2) - p3*x1 + u1", "p4/(1 + x1/p5) - p6*x2"},
                     {{"p1", 1}, {"p2", 1}, {"p3", 1}, {"p4", 1}, {"p5", 1}, {"p6", 1}},
                     Box::from_intervals({{0, 10}, {0.1, 10}}), Box::from_intervals({{0, u_hi}}));
}

Box square(std::size_t n, double lo, double hi) {
  return Box(Eigen::VectorXd::Constant(static_cast<Eigen::Index>(n), lo),
             Eigen::VectorXd::Constant(static_cast<Eigen::Index>(n), hi));
}

Box no_inputs() { return Box(Eigen::VectorXd(0), Eigen::VectorXd(0)); }

// random well-formed expression text over x1, x2, x3, p
std::string random_text(std::mt19937_64& rng, int depth) {
  std::uniform_int_distribution<int> pick(0, depth <= 0 ? 2 : 10);
  const char* leaves[] = {"x1", "x2", "x3", "p"};
  switch (pick(rng)) {
    case 0: return leaves[rng() % 4];
    case 1: return std::to_string(rng() % 100) + "." + std::to_string(rng() % 10);
    case 2: return "2.5e-3";
    case 3: return random_text(rng, depth - 1) + " + " + random_text(rng, depth - 1);
    case 4: return random_text(rng, depth - 1) + " - " + random_text(rng, depth - 1);
    case 5: return random_text(rng, depth - 1) + "*" + random_text(rng, depth - 1);
    case 6: return random_text(rng, depth - 1) + "/" + random_text(rng, depth - 1);
    case 7: return random_text(rng, depth - 1) + "^" + random_text(rng, depth - 1);
    case 8: return "-" + random_text(rng, depth - 1);
    case 9: return "(" + random_text(rng, depth - 1) + ")";
    default: {
      const char* fns[] = {"exp", "log", "sqrt"};
      return std::string(fns[rng() % 3]) + "(" + random_text(rng, depth - 1) + ")";
    }
  }
}

}  // namespace

TEST_CASE("parser builds the toggle-switch repression term") {
  auto sig = make_signature(2, 0, {"p1", "p2"});
  const Expr e = parse_expression("p1/(1 + x2/p2)", sig);
  const Expr p1 = Expr::symbol(sig, *sig->slot("p1"));
  const Expr p2 = Expr::symbol(sig, *sig->slot("p2"));
  const Expr x2 = Expr::state(sig, 1);
  CHECK(e == p1 / (Expr::constant(sig, 1) + x2 / p2));
  CHECK(e.to_string() == "(p1 / (1 + (x2 / p2)))");
}

TEST_CASE("incomplete expression reports its offset") {
  auto sig = make_signature(1, 0);
  try {
    parse_expression("x1 +", sig);
    FAIL("expected a syntax error");
  } catch (const SyntaxError& e) {
    CHECK(e.offset() == 4);
  }
  CHECK_THROWS_AS(parse_expression("", sig), SyntaxError);
  CHECK_THROWS_AS(parse_expression("(x1", sig), SyntaxError);
  CHECK_THROWS_AS(parse_expression("x1 x1", sig), SyntaxError);
  CHECK_THROWS_AS(parse_expression("exp x1", sig), SyntaxError);
}

TEST_CASE("unknown symbols are named") {
  auto sig = make_signature(2, 0, {"k"});
  try {
    parse_expression("k*x3", sig);
    FAIL("expected an unknown symbol");
  } catch (const UnknownSymbolError& e) {
    CHECK(std::string(e.what()).find("x3") != std::string::npos);
  }
  CHECK_THROWS_AS(parse_expression("u1", sig), UnknownSymbolError);
}

TEST_CASE("precedence: power binds tighter than unary minus") {
  auto sig = make_signature(1, 0);
  const Expr x1 = Expr::state(sig, 0);
  const Expr two = Expr::constant(sig, 2);
  CHECK(parse_expression("-x1^2", sig) == -pow(x1, two));
  CHECK(evaluate(parse_expression("-x1^2", sig), {{"x1", 3}}) == -9.0);
  // right associative power, left associative division
  CHECK(evaluate(parse_expression("2^3^2", sig), {}) == 512.0);
  CHECK(evaluate(parse_expression("8/4/2", sig), {}) == 1.0);
  CHECK(evaluate(parse_expression("1 - 2 - 3", sig), {}) == -4.0);
  CHECK(evaluate(parse_expression("2*-x1", sig), {{"x1", 3}}) == -6.0);
  CHECK(evaluate(parse_expression("2^-1", sig), {}) == 0.5);
}

TEST_CASE("evaluate") {
  auto sig = make_signature(2, 0, {"p1", "p2"});
  CHECK(evaluate(parse_expression("p1/(1 + x2/p2)", sig), {{"p1", 1}, {"p2", 1}, {"x2", 1}}) == 0.5);
  CHECK(evaluate(parse_expression("x1*x2 - x1", sig), {{"x1", 2}, {"x2", 3}}) == 4.0);
  CHECK(evaluate(parse_expression("exp(0) + log(1) + sqrt(4)", sig), {}) == 3.0);
  CHECK_THROWS_AS(evaluate(parse_expression("x1", sig), {}), InputError);
}

TEST_CASE("domain errors name the subexpression") {
  auto sig = make_signature(1, 0);
  try {
    evaluate(parse_expression("1/x1", sig), {{"x1", 0}});
    FAIL("expected a domain error");
  } catch (const DomainError& e) {
    CHECK(e.subexpression() == "(1 / x1)");
  }
  CHECK_THROWS_AS(evaluate(parse_expression("log(x1)", sig), {{"x1", 0}}), DomainError);
  CHECK_THROWS_AS(evaluate(parse_expression("log(x1)", sig), {{"x1", -1}}), DomainError);
  CHECK_THROWS_AS(evaluate(parse_expression("sqrt(x1)", sig), {{"x1", -1e-300}}), DomainError);
  CHECK_THROWS_AS(evaluate(parse_expression("exp(x1)", sig), {{"x1", 1e4}}), DomainError);
}

TEST_CASE("parameter names may not shadow reserved symbols") {
  CHECK_THROWS_AS(make_signature(1, 0, {"x1"}), InputError);
  CHECK_THROWS_AS(make_signature(1, 0, {"exp"}), InputError);
  CHECK_THROWS_AS(make_signature(1, 0, {"k", "k"}), InputError);
}

TEST_CASE("parse, print, parse is stable") {
  auto sig = make_signature(3, 0, {"p"});
  std::mt19937_64 rng(7);
  for (int k = 0; k < 2000; ++k) {
    const std::string text = random_text(rng, 4);
    const Expr e = parse_expression(text, sig);
    const Expr again = parse_expression(e.to_string(), sig);
    REQUIRE_MESSAGE(again == e, text);
    CHECK(again.to_string() == e.to_string());
  }
}

TEST_CASE("evaluation is bit-identical for identical bindings") {
  auto sig = make_signature(3, 0, {"p"});
  std::mt19937_64 rng(11);
  std::uniform_real_distribution<double> val(0.1, 2.0);
  for (int k = 0; k < 200; ++k) {
    const Expr e = parse_expression(random_text(rng, 4), sig);
    const std::vector<double> slots{val(rng), val(rng), val(rng), val(rng)};
    double first = 0.0;
    bool ok = true;
    try {
      first = e.eval(slots);
    } catch (const DomainError&) {
      ok = false;
    }
    if (!ok) continue;
    CHECK(std::bit_cast<std::uint64_t>(e.eval(slots)) == std::bit_cast<std::uint64_t>(first));
  }
}

TEST_CASE("system model validation") {
  CHECK_THROWS_AS(SystemModel(2, 0, {"x1"}, {}, square(2, 0, 1), no_inputs()), DimensionError);
  CHECK_THROWS_AS(SystemModel(1, 0, {"x2"}, {}, square(1, 0, 1), no_inputs()), UnknownSymbolError);
  CHECK_THROWS_AS(SystemModel(1, 0, {"x1"}, {}, Box::from_intervals({{1, 1}}), no_inputs()), InputError);
  CHECK_THROWS_AS(SystemModel(1, 0, {"x1"}, {}, square(2, 0, 1), no_inputs()), DimensionError);
  CHECK_NOTHROW(toggle());
}

TEST_CASE("jacobian of a linear field is its matrix") {
  SystemModel lin(2, 0, {"-x1 + 2*x2", "3*x1 - 4*x2"}, {}, square(2, -5, 5), no_inputs());
  Eigen::Matrix2d a;
  a << -1, 2, 3, -4;
  const Eigen::MatrixXd j = jacobian_fd(lin, Eigen::Vector2d(0.3, -1.7), Eigen::VectorXd(0));
  CHECK((j - a).cwiseAbs().maxCoeff() < 1e-6);
  SystemModel c(2, 1, {"3", "-1"}, {}, square(2, -5, 5), square(1, 0, 1));
  const Eigen::MatrixXd z = jacobian_fd(c, Eigen::Vector2d(1, 1), Eigen::VectorXd::Constant(1, 0.5));
  CHECK(z.rows() == 2);
  CHECK(z.cols() == 3);
  CHECK(z.cwiseAbs().maxCoeff() == 0.0);
}

TEST_CASE("toggle-switch jacobian against the analytic derivative") {
  const SystemModel sys = toggle();
  const Eigen::MatrixXd j = jacobian_fd(sys, Eigen::Vector2d(1, 1), Eigen::VectorXd::Zero(1));
  // d/dx2 of p1/(1 + x2/p2) is -(p1/p2)/(1 + x2/p2)^2
  CHECK(std::abs(j(0, 1) + 0.25) < 1e-8);
  CHECK(std::abs(j(0, 0) + 1.0) < 1e-8);
  CHECK(std::abs(j(0, 2) - 1.0) < 1e-8);
  CHECK(std::abs(j(1, 0) + 0.25) < 1e-8);
  CHECK(std::abs(j(1, 1) + 1.0) < 1e-8);
  CHECK(std::abs(j(1, 2)) < 1e-12);
}

TEST_CASE("hessian of the reciprocal toggle-switch component") {
  SystemModel g(2, 1, {"p1*x2/(1/p2 + x2) - p3*x1 + u1", "-(x2^2)*p4/(1 + x1/p5) + p6*x2"},
                {{"p1", 1}, {"p2", 1}, {"p3", 1}, {"p4", 1}, {"p5", 1}, {"p6", 1}},
                Box::from_intervals({{0, 10}, {0.1, 10}}), Box::from_intervals({{0, 1}}));
  const Eigen::MatrixXd h = hessian_fd(g, 0, Eigen::Vector2d(1, 1), Eigen::VectorXd::Zero(1));
  REQUIRE(h.rows() == 3);
  // -2 (p1/p2) / (1/p2 + z2)^3 at z2 = 1
  CHECK(std::abs(h(1, 1) + 0.25) < 1e-6);
  CHECK(std::abs(h(0, 0)) < 1e-6);
  CHECK(std::abs(h(0, 1)) < 1e-6);
  // closed form of the second component's Hessian
  const double z1 = 1.3, z2 = 0.7;
  const Eigen::MatrixXd h2 = hessian_fd(g, 1, Eigen::Vector2d(z1, z2), Eigen::VectorXd::Zero(1));
  const double s = 1 + z1;
  CHECK(std::abs(h2(0, 0) + 2 * z2 * z2 / (s * s * s)) < 1e-6);
  CHECK(std::abs(h2(0, 1) - 2 * z2 / (s * s)) < 1e-6);
  CHECK(std::abs(h2(1, 1) + 2 / s) < 1e-6);
}

TEST_CASE("hessian of simple fields") {
  SystemModel lin(2, 0, {"-x1 + 2*x2", "x1*x2"}, {}, square(2, -5, 5), no_inputs());
  const Eigen::MatrixXd h0 = hessian_fd(lin, 0, Eigen::Vector2d(0.4, 2), Eigen::VectorXd(0));
  CHECK(h0.cwiseAbs().maxCoeff() < 1e-6);
  const Eigen::MatrixXd h1 = hessian_fd(lin, 1, Eigen::Vector2d(0.4, 2), Eigen::VectorXd(0));
  CHECK(std::abs(h1(0, 1) - 1) < 1e-6);
  CHECK(std::abs(h1(0, 0)) < 1e-6);
  CHECK(std::abs(h1(1, 1)) < 1e-6);
}

TEST_CASE("finite differences match analytic derivatives of random polynomials") {
  std::mt19937_64 rng(3);
  std::uniform_real_distribution<double> coef(-2, 2), pt(-1.5, 1.5);
  for (int trial = 0; trial < 50; ++trial) {
    // f = a x1^3 + b x1 x2^2 + c x2 + d x1 x2
    const double a = coef(rng), b = coef(rng), c = coef(rng), d = coef(rng);
    const std::string text = std::to_string(a) + "*x1^3 + " + std::to_string(b) + "*x1*x2^2 + " +
                             std::to_string(c) + "*x2 + " + std::to_string(d) + "*x1*x2";
    SystemModel sys(2, 0, {text, "0"}, {}, square(2, -2, 2), no_inputs());
    const std::vector<double> cs{std::stod(std::to_string(a)), std::stod(std::to_string(b)),
                                 std::stod(std::to_string(c)), std::stod(std::to_string(d))};
    const double x = pt(rng), y = pt(rng);
    const Eigen::MatrixXd j = jacobian_fd(sys, Eigen::Vector2d(x, y), Eigen::VectorXd(0));
    CHECK(std::abs(j(0, 0) - (3 * cs[0] * x * x + cs[1] * y * y + cs[3] * y)) < 1e-6);
    CHECK(std::abs(j(0, 1) - (2 * cs[1] * x * y + cs[2] + cs[3] * x)) < 1e-6);
    const Eigen::MatrixXd h = hessian_fd(sys, 0, Eigen::Vector2d(x, y), Eigen::VectorXd(0));
    CHECK(std::abs(h(0, 0) - 6 * cs[0] * x) < 1e-6);
    CHECK(std::abs(h(0, 1) - (2 * cs[1] * y + cs[3])) < 1e-6);
    CHECK(std::abs(h(1, 1) - 2 * cs[1] * x) < 1e-6);
    CHECK(h(0, 1) == h(1, 0));
  }
}

TEST_CASE("stencil outside the evaluable region raises a domain error") {
  SystemModel sys(1, 0, {"sqrt(x1)"}, {}, square(1, 0, 1), no_inputs());
  CHECK_THROWS_AS(jacobian_fd(sys, Eigen::VectorXd::Zero(1), Eigen::VectorXd(0)), DomainError);
}
