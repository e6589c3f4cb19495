#include "monoflow/orders.hpp"

#include "monoflow/error.hpp"

#include <Eigen/Eigenvalues>

#include <algorithm>
#include <cmath>
#include <limits>

namespace monoflow {

namespace {

void check_signs(const std::vector<int>& signs) {
  for (int s : signs) {
    if (s != 1 && s != -1) throw InputError("orthant signs must be +1 or -1");
  }
}

std::vector<int> parse_signs(std::string_view text) {
  std::vector<int> out;
  std::size_t start = 0;
  while (start <= text.size()) {
    std::size_t end = text.find(',', start);
    if (end == std::string_view::npos) end = text.size();
    std::string_view tok = text.substr(start, end - start);
    while (!tok.empty() && tok.front() == ' ') tok.remove_prefix(1);
    while (!tok.empty() && tok.back() == ' ') tok.remove_suffix(1);
    if (tok == "+" || tok == "+1" || tok == "1")
      out.push_back(1);
    else if (tok == "-" || tok == "-1")
      out.push_back(-1);
    else
      throw InputError("invalid orthant sign '" + std::string(tok) + "'");
    start = end + 1;
  }
  return out;
}

std::string signs_string(const std::vector<int>& signs) {
  std::string s;
  for (std::size_t k = 0; k < signs.size(); ++k) {
    if (k) s += ',';
    s += signs[k] > 0 ? '+' : '-';
  }
  return s;
}

void check_symmetric(const Eigen::MatrixXd& a, const char* what) {
  if (a.rows() != a.cols()) throw DimensionError(std::string(what) + " is not square");
  if ((a - a.transpose()).cwiseAbs().maxCoeff() > 1e-9)
    throw InputError(std::string(what) + " is not symmetric");
}

}  // namespace

OrthantOrder::OrthantOrder(std::vector<int> state_signs, std::vector<int> input_signs)
    : state_(std::move(state_signs)), input_(std::move(input_signs)) {
  check_signs(state_);
  check_signs(input_);
}

OrthantOrder OrthantOrder::standard(std::size_t n, std::size_t m) {
  return OrthantOrder(std::vector<int>(n, 1), std::vector<int>(m, 1));
}

OrthantOrder OrthantOrder::parse(std::string_view text) {
  if (text.empty()) throw InputError("empty orthant order");
  const std::size_t semi = text.find(';');
  if (semi == std::string_view::npos) return OrthantOrder(parse_signs(text));
  return OrthantOrder(parse_signs(text.substr(0, semi)), parse_signs(text.substr(semi + 1)));
}

std::vector<int> OrthantOrder::input_signs_for(std::size_t m) const {
  if (input_.size() > m) throw DimensionError("order has more input signs than inputs");
  std::vector<int> out = input_;
  out.resize(m, 1);
  return out;
}

bool OrthantOrder::is_standard() const {
  return std::all_of(state_.begin(), state_.end(), [](int s) { return s == 1; }) &&
         std::all_of(input_.begin(), input_.end(), [](int s) { return s == 1; });
}

Eigen::VectorXd OrthantOrder::apply(const Eigen::VectorXd& x) const {
  if (static_cast<std::size_t>(x.size()) != n()) throw DimensionError("order/vector dimension mismatch");
  Eigen::VectorXd out = x;
  for (std::size_t i = 0; i < n(); ++i) {
    if (state_[i] < 0) out[static_cast<Eigen::Index>(i)] = -out[static_cast<Eigen::Index>(i)];
  }
  return out;
}

Eigen::VectorXd OrthantOrder::apply_input(const Eigen::VectorXd& u) const {
  const std::vector<int> s = input_signs_for(static_cast<std::size_t>(u.size()));
  Eigen::VectorXd out = u;
  for (std::size_t j = 0; j < s.size(); ++j) {
    if (s[j] < 0) out[static_cast<Eigen::Index>(j)] = -out[static_cast<Eigen::Index>(j)];
  }
  return out;
}

Eigen::MatrixXd OrthantOrder::matrix() const {
  Eigen::VectorXd d(static_cast<Eigen::Index>(n()));
  for (std::size_t i = 0; i < n(); ++i) d[static_cast<Eigen::Index>(i)] = state_[i];
  return d.asDiagonal();
}

std::string OrthantOrder::to_string() const {
  std::string s = signs_string(state_);
  if (!input_.empty()) s += ";" + signs_string(input_);
  return s;
}

double cone_margin(const Eigen::VectorXd& x, const Eigen::VectorXd& y, const OrthantOrder& order) {
  if (x.size() != y.size() || static_cast<std::size_t>(x.size()) != order.n())
    throw DimensionError("cone comparison dimension mismatch");
  if (x.size() == 0) return std::numeric_limits<double>::infinity();
  return order.apply(y - x).minCoeff();
}

bool leq_cone(const Eigen::VectorXd& x, const Eigen::VectorXd& y, const OrthantOrder& order,
              double tol) {
  return cone_margin(x, y, order) >= -tol;
}

double psd_margin(const Eigen::MatrixXd& a, const Eigen::MatrixXd& b) {
  if (a.rows() != b.rows() || a.cols() != b.cols()) throw DimensionError("PSD comparison size mismatch");
  if (a.size() == 0) return std::numeric_limits<double>::infinity();
  const Eigen::MatrixXd diff = b - a;
  const Eigen::MatrixXd sym = 0.5 * (diff + diff.transpose());
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> solver(sym, Eigen::EigenvaluesOnly);
  return solver.eigenvalues().minCoeff();
}

bool psd_leq(const Eigen::MatrixXd& a, const Eigen::MatrixXd& b, double tol) {
  check_symmetric(a, "first matrix");
  check_symmetric(b, "second matrix");
  return psd_margin(a, b) >= -tol;
}

GaussianState::GaussianState(Eigen::VectorXd mean_, Eigen::MatrixXd cov_)
    : mean(std::move(mean_)), cov(std::move(cov_)) {
  if (cov.rows() != mean.size() || cov.cols() != mean.size())
    throw DimensionError("covariance size does not match mean");
  if (cov.size() > 0) {
    if ((cov - cov.transpose()).cwiseAbs().maxCoeff() > 1e-12)
      throw InputError("covariance is not symmetric");
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> solver(cov, Eigen::EigenvaluesOnly);
    if (solver.eigenvalues().minCoeff() < -1e-9)
      throw InputError("covariance is not positive semidefinite");
  }
}

bool gaussian_fd_leq(const GaussianState& a, const GaussianState& b, const OrthantOrder& order,
                     double tol) {
  if (a.dim() != b.dim()) throw DimensionError("Gaussian dimension mismatch");
  if (!leq_cone(a.mean, b.mean, order, tol)) return false;
  if (a.dim() == 0) return true;
  return (a.cov - b.cov).cwiseAbs().maxCoeff() <= tol;
}

bool gaussian_icx_leq(const GaussianState& a, const GaussianState& b, const OrthantOrder& order,
                      double tol) {
  if (a.dim() != b.dim()) throw DimensionError("Gaussian dimension mismatch");
  return leq_cone(a.mean, b.mean, order, tol) && psd_leq(a.cov, b.cov, tol);
}

}  // namespace monoflow
