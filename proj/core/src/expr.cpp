#include "monoflow/expr.hpp"

#include "monoflow/error.hpp"
#include "monoflow/finite_difference.hpp"

#include <algorithm>
#include <cctype>
#include <charconv>
#include <cmath>
#include <cstdio>

namespace monoflow {

namespace {

bool is_reserved(std::string_view name) {
  return name == "exp" || name == "log" || name == "sqrt";
}

// Matches "<prefix><k>" with k a positive decimal integer without leading zeros.
std::optional<std::size_t> indexed_name(std::string_view name, char prefix) {
  if (name.size() < 2 || name[0] != prefix || name[1] == '0') return std::nullopt;
  std::size_t k = 0;
  auto [ptr, ec] = std::from_chars(name.data() + 1, name.data() + name.size(), k);
  if (ec != std::errc() || ptr != name.data() + name.size()) return std::nullopt;
  return k;
}

std::string format_double(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

const char* op_symbol(Op op) {
  switch (op) {
    case Op::add: return "+";
    case Op::sub: return "-";
    case Op::mul: return "*";
    case Op::div: return "/";
    case Op::pow: return "^";
    case Op::exp: return "exp";
    case Op::log: return "log";
    case Op::sqrt: return "sqrt";
    default: return "?";
  }
}

}  // namespace

// ---------------------------------------------------------------------------
// Signature

Signature::Signature(std::size_t n_states, std::size_t n_inputs, std::vector<std::string> params)
    : n_states_(n_states), n_inputs_(n_inputs), params_(std::move(params)) {
  for (std::size_t k = 0; k < params_.size(); ++k) {
    const std::string& p = params_[k];
    if (p.empty() || !(std::isalpha(static_cast<unsigned char>(p[0])) || p[0] == '_'))
      throw InputError("invalid parameter name '" + p + "'");
    for (char c : p) {
      if (!(std::isalnum(static_cast<unsigned char>(c)) || c == '_'))
        throw InputError("invalid parameter name '" + p + "'");
    }
    if (is_reserved(p) || indexed_name(p, 'x') || indexed_name(p, 'u'))
      throw InputError("parameter name '" + p + "' collides with a reserved symbol");
    if (std::find(params_.begin(), params_.begin() + static_cast<std::ptrdiff_t>(k), p) !=
        params_.begin() + static_cast<std::ptrdiff_t>(k))
      throw InputError("duplicate parameter '" + p + "'");
  }
}

std::optional<std::size_t> Signature::slot(std::string_view name) const {
  if (auto k = indexed_name(name, 'x'); k && *k <= n_states_) return *k - 1;
  if (auto k = indexed_name(name, 'u'); k && *k <= n_inputs_) return n_states_ + *k - 1;
  for (std::size_t k = 0; k < params_.size(); ++k) {
    if (params_[k] == name) return param_slot(k);
  }
  return std::nullopt;
}

std::string Signature::name(std::size_t slot) const {
  if (slot < n_states_) return "x" + std::to_string(slot + 1);
  if (slot < n_states_ + n_inputs_) return "u" + std::to_string(slot - n_states_ + 1);
  return params_.at(slot - n_states_ - n_inputs_);
}

SignaturePtr make_signature(std::size_t n_states, std::size_t n_inputs,
                            std::vector<std::string> params) {
  return std::make_shared<const Signature>(n_states, n_inputs, std::move(params));
}

// ---------------------------------------------------------------------------
// Parser

class Parser {
 public:
  Parser(std::string_view text, SignaturePtr sig) : text_(text), sig_(std::move(sig)) {}

  Expr run() {
    Expr e;
    e.sig_ = sig_;
    nodes_ = &e.nodes_;
    skip_ws();
    if (pos_ == text_.size()) throw SyntaxError("empty expression", pos_);
    parse_sum();
    skip_ws();
    if (pos_ != text_.size()) throw SyntaxError("unexpected character", pos_);
    return e;
  }

 private:
  std::int32_t push(Node n) {
    nodes_->push_back(n);
    return static_cast<std::int32_t>(nodes_->size() - 1);
  }

  void skip_ws() {
    while (pos_ < text_.size() && std::isspace(static_cast<unsigned char>(text_[pos_]))) ++pos_;
  }

  bool accept(char c) {
    skip_ws();
    if (pos_ < text_.size() && text_[pos_] == c) {
      ++pos_;
      return true;
    }
    return false;
  }

  std::int32_t parse_sum() {
    std::int32_t lhs = parse_product();
    for (;;) {
      skip_ws();
      if (accept('+')) {
        std::int32_t rhs = parse_product();
        lhs = push({Op::add, 0.0, 0, lhs, rhs});
      } else if (accept('-')) {
        std::int32_t rhs = parse_product();
        lhs = push({Op::sub, 0.0, 0, lhs, rhs});
      } else {
        return lhs;
      }
    }
  }

  std::int32_t parse_product() {
    std::int32_t lhs = parse_unary();
    for (;;) {
      if (accept('*')) {
        std::int32_t rhs = parse_unary();
        lhs = push({Op::mul, 0.0, 0, lhs, rhs});
      } else if (accept('/')) {
        std::int32_t rhs = parse_unary();
        lhs = push({Op::div, 0.0, 0, lhs, rhs});
      } else {
        return lhs;
      }
    }
  }

  std::int32_t parse_unary() {
    if (accept('-')) {
      std::int32_t operand = parse_unary();
      return push({Op::neg, 0.0, 0, operand, -1});
    }
    return parse_power();
  }

  std::int32_t parse_power() {
    std::int32_t base = parse_primary();
    if (accept('^')) {
      // The exponent may itself carry a unary minus; ^ is right associative.
      std::int32_t exponent = parse_unary();
      return push({Op::pow, 0.0, 0, base, exponent});
    }
    return base;
  }

  std::int32_t parse_primary() {
    skip_ws();
    if (pos_ == text_.size()) throw SyntaxError("expected operand", pos_);
    const char c = text_[pos_];
    if (c == '(') {
      ++pos_;
      std::int32_t inner = parse_sum();
      if (!accept(')')) throw SyntaxError("expected ')'", pos_);
      return inner;
    }
    if (std::isdigit(static_cast<unsigned char>(c)) || c == '.') return parse_number();
    if (std::isalpha(static_cast<unsigned char>(c)) || c == '_') return parse_identifier();
    throw SyntaxError("expected operand", pos_);
  }

  std::int32_t parse_number() {
    const std::size_t start = pos_;
    while (pos_ < text_.size() &&
           (std::isdigit(static_cast<unsigned char>(text_[pos_])) || text_[pos_] == '.'))
      ++pos_;
    if (pos_ < text_.size() && (text_[pos_] == 'e' || text_[pos_] == 'E')) {
      std::size_t p = pos_ + 1;
      if (p < text_.size() && (text_[p] == '+' || text_[p] == '-')) ++p;
      if (p < text_.size() && std::isdigit(static_cast<unsigned char>(text_[p]))) {
        pos_ = p;
        while (pos_ < text_.size() && std::isdigit(static_cast<unsigned char>(text_[pos_])))
          ++pos_;
      }
    }
    double value = 0.0;
    auto [ptr, ec] = std::from_chars(text_.data() + start, text_.data() + pos_, value);
    if (ec != std::errc() || ptr != text_.data() + pos_ || !std::isfinite(value))
      throw SyntaxError("malformed number", start);
    return push({Op::constant, value, 0, -1, -1});
  }

  std::int32_t parse_identifier() {
    const std::size_t start = pos_;
    while (pos_ < text_.size() &&
           (std::isalnum(static_cast<unsigned char>(text_[pos_])) || text_[pos_] == '_'))
      ++pos_;
    const std::string_view name = text_.substr(start, pos_ - start);
    if (is_reserved(name)) {
      if (!accept('(')) throw SyntaxError("expected '(' after function name", pos_);
      std::int32_t arg = parse_sum();
      if (!accept(')')) throw SyntaxError("expected ')'", pos_);
      const Op op = name == "exp" ? Op::exp : name == "log" ? Op::log : Op::sqrt;
      return push({op, 0.0, 0, arg, -1});
    }
    auto slot = sig_->slot(name);
    if (!slot) throw UnknownSymbolError(std::string(name));
    return push({Op::symbol, 0.0, static_cast<std::uint32_t>(*slot), -1, -1});
  }

  std::string_view text_;
  SignaturePtr sig_;
  std::vector<Node>* nodes_ = nullptr;
  std::size_t pos_ = 0;
};

Expr parse_expression(std::string_view text, SignaturePtr sig) {
  if (!sig) throw InputError("expression parsed without a signature");
  return Parser(text, std::move(sig)).run();
}

// ---------------------------------------------------------------------------
// Expr

Expr Expr::constant(SignaturePtr sig, double value) {
  Expr e;
  e.sig_ = std::move(sig);
  e.nodes_.push_back({Op::constant, value, 0, -1, -1});
  return e;
}

Expr Expr::symbol(SignaturePtr sig, std::size_t slot) {
  if (slot >= sig->size()) throw InputError("symbol slot out of range");
  Expr e;
  e.sig_ = std::move(sig);
  e.nodes_.push_back({Op::symbol, 0.0, static_cast<std::uint32_t>(slot), -1, -1});
  return e;
}

namespace {

void append_shifted(std::vector<Node>& out, const std::vector<Node>& in) {
  const auto offset = static_cast<std::int32_t>(out.size());
  for (Node n : in) {
    if (n.lhs >= 0) n.lhs += offset;
    if (n.rhs >= 0) n.rhs += offset;
    out.push_back(n);
  }
}

}  // namespace

Expr Expr::binary(Op op, const Expr& a, const Expr& b) {
  if (a.sig_ != b.sig_) throw InputError("combining expressions with different signatures");
  Expr e;
  e.sig_ = a.sig_;
  e.nodes_.reserve(a.nodes_.size() + b.nodes_.size() + 1);
  append_shifted(e.nodes_, a.nodes_);
  const auto lhs = static_cast<std::int32_t>(e.nodes_.size() - 1);
  append_shifted(e.nodes_, b.nodes_);
  const auto rhs = static_cast<std::int32_t>(e.nodes_.size() - 1);
  e.nodes_.push_back({op, 0.0, 0, lhs, rhs});
  return e;
}

Expr Expr::unary(Op op, const Expr& a) {
  Expr e = a;
  const auto child = static_cast<std::int32_t>(e.nodes_.size() - 1);
  e.nodes_.push_back({op, 0.0, 0, child, -1});
  return e;
}

Expr operator+(const Expr& a, const Expr& b) { return Expr::binary(Op::add, a, b); }
Expr operator-(const Expr& a, const Expr& b) { return Expr::binary(Op::sub, a, b); }
Expr operator*(const Expr& a, const Expr& b) { return Expr::binary(Op::mul, a, b); }
Expr operator/(const Expr& a, const Expr& b) { return Expr::binary(Op::div, a, b); }
Expr pow(const Expr& a, const Expr& b) { return Expr::binary(Op::pow, a, b); }
Expr exp(const Expr& a) { return Expr::unary(Op::exp, a); }
Expr log(const Expr& a) { return Expr::unary(Op::log, a); }
Expr sqrt(const Expr& a) { return Expr::unary(Op::sqrt, a); }

Expr operator-(const Expr& a) {
  if (a.nodes_.back().op == Op::neg) return a.subtree(static_cast<std::size_t>(a.nodes_.back().lhs));
  return Expr::unary(Op::neg, a);
}

Expr Expr::subtree(std::size_t index) const {
  // Post-order storage: a subtree occupies a contiguous range ending at `index`.
  std::size_t first = index;
  std::vector<std::size_t> stack{index};
  while (!stack.empty()) {
    const Node& n = nodes_[stack.back()];
    stack.pop_back();
    for (std::int32_t c : {n.lhs, n.rhs}) {
      if (c >= 0) {
        first = std::min(first, static_cast<std::size_t>(c));
        stack.push_back(static_cast<std::size_t>(c));
      }
    }
  }
  Expr e;
  e.sig_ = sig_;
  const auto offset = static_cast<std::int32_t>(first);
  for (std::size_t k = first; k <= index; ++k) {
    Node n = nodes_[k];
    if (n.lhs >= 0) n.lhs -= offset;
    if (n.rhs >= 0) n.rhs -= offset;
    e.nodes_.push_back(n);
  }
  return e;
}

std::vector<std::size_t> Expr::symbols() const {
  std::vector<std::size_t> out;
  for (const Node& n : nodes_) {
    if (n.op == Op::symbol) out.push_back(n.slot);
  }
  std::sort(out.begin(), out.end());
  out.erase(std::unique(out.begin(), out.end()), out.end());
  return out;
}

bool Expr::references(std::size_t slot) const {
  return std::any_of(nodes_.begin(), nodes_.end(),
                     [slot](const Node& n) { return n.op == Op::symbol && n.slot == slot; });
}

Expr Expr::substitute(const std::vector<std::optional<Expr>>& replacements) const {
  // Rebuild bottom-up; each node's replacement tree is kept per index.
  std::vector<Expr> built;
  built.reserve(nodes_.size());
  for (const Node& n : nodes_) {
    switch (n.op) {
      case Op::constant: built.push_back(constant(sig_, n.value)); break;
      case Op::symbol:
        if (n.slot < replacements.size() && replacements[n.slot]) {
          if (replacements[n.slot]->sig_ != sig_)
            throw InputError("substitution with a foreign signature");
          built.push_back(*replacements[n.slot]);
        } else {
          built.push_back(symbol(sig_, n.slot));
        }
        break;
      case Op::neg: built.push_back(-built[static_cast<std::size_t>(n.lhs)]); break;
      case Op::exp:
      case Op::log:
      case Op::sqrt: built.push_back(unary(n.op, built[static_cast<std::size_t>(n.lhs)])); break;
      default:
        built.push_back(binary(n.op, built[static_cast<std::size_t>(n.lhs)],
                               built[static_cast<std::size_t>(n.rhs)]));
    }
  }
  return built.back();
}

Expr Expr::rebind(SignaturePtr sig, const std::vector<std::size_t>& slot_map) const {
  Expr e;
  e.sig_ = std::move(sig);
  e.nodes_ = nodes_;
  for (Node& n : e.nodes_) {
    if (n.op == Op::symbol) {
      if (n.slot >= slot_map.size() || slot_map[n.slot] >= e.sig_->size())
        throw InputError("rebind: slot out of range");
      n.slot = static_cast<std::uint32_t>(slot_map[n.slot]);
    }
  }
  return e;
}

std::string Expr::node_string(std::size_t index) const {
  const Node& n = nodes_[index];
  switch (n.op) {
    case Op::constant: {
      std::string s = format_double(n.value);
      return n.value < 0 || std::signbit(n.value) ? "(" + s + ")" : s;
    }
    case Op::symbol: return sig_->name(n.slot);
    case Op::neg: return "(-" + node_string(static_cast<std::size_t>(n.lhs)) + ")";
    case Op::exp:
    case Op::log:
    case Op::sqrt:
      return std::string(op_symbol(n.op)) + "(" + node_string(static_cast<std::size_t>(n.lhs)) +
             ")";
    default:
      return "(" + node_string(static_cast<std::size_t>(n.lhs)) + " " + op_symbol(n.op) + " " +
             node_string(static_cast<std::size_t>(n.rhs)) + ")";
  }
}

std::string Expr::to_string() const {
  if (nodes_.empty()) return "";
  return node_string(root());
}

double Expr::eval(std::span<const double> slots) const {
  if (nodes_.size() == 1) {
    const Node& n = nodes_[0];
    return n.op == Op::constant ? n.value : slots[n.slot];
  }
  constexpr std::size_t kStack = 64;
  double stack_values[kStack];
  std::vector<double> heap_values;
  double* values = stack_values;
  if (nodes_.size() > kStack) {
    heap_values.resize(nodes_.size());
    values = heap_values.data();
  }
  for (std::size_t k = 0; k < nodes_.size(); ++k) {
    const Node& n = nodes_[k];
    const double a = n.lhs >= 0 ? values[static_cast<std::size_t>(n.lhs)] : 0.0;
    const double b = n.rhs >= 0 ? values[static_cast<std::size_t>(n.rhs)] : 0.0;
    double r = 0.0;
    switch (n.op) {
      case Op::constant: r = n.value; break;
      case Op::symbol: r = slots[n.slot]; break;
      case Op::add: r = a + b; break;
      case Op::sub: r = a - b; break;
      case Op::mul: r = a * b; break;
      case Op::div:
        if (b == 0.0) throw DomainError("division by zero", node_string(k));
        r = a / b;
        break;
      case Op::pow: r = std::pow(a, b); break;
      case Op::neg: r = -a; break;
      case Op::exp: r = std::exp(a); break;
      case Op::log:
        if (!(a > 0.0)) throw DomainError("log of nonpositive value", node_string(k));
        r = std::log(a);
        break;
      case Op::sqrt:
        if (a < 0.0) throw DomainError("sqrt of negative value", node_string(k));
        r = std::sqrt(a);
        break;
    }
    if (!std::isfinite(r)) throw DomainError("non-finite value", node_string(k));
    values[k] = r;
  }
  return values[nodes_.size() - 1];
}

double evaluate(const Expr& expr, const std::map<std::string, double>& bindings) {
  const Signature& sig = *expr.signature();
  std::vector<double> slots(sig.size(), 0.0);
  for (std::size_t s : expr.symbols()) {
    auto it = bindings.find(sig.name(s));
    if (it == bindings.end()) throw InputError("unbound symbol '" + sig.name(s) + "'");
    slots[s] = it->second;
  }
  return expr.eval(slots);
}

// ---------------------------------------------------------------------------
// SystemModel

namespace {

std::vector<std::string> param_names(const std::map<std::string, double>& params) {
  std::vector<std::string> names;
  for (const auto& [k, v] : params) names.push_back(k);
  return names;
}

}  // namespace

SystemModel::SystemModel(std::size_t n, std::size_t m, const std::vector<std::string>& f,
                         const std::map<std::string, double>& params, Box domain, Box input_box)
    : sig_(make_signature(n, m, param_names(params))),
      domain_(std::move(domain)),
      input_box_(std::move(input_box)) {
  if (f.size() != n)
    throw DimensionError("expected " + std::to_string(n) + " vector-field components, got " +
                         std::to_string(f.size()));
  for (const std::string& text : f) f_.push_back(parse_expression(text, sig_));
  for (const auto& [k, v] : params) param_values_.push_back(v);
  validate();
}

SystemModel::SystemModel(SignaturePtr sig, std::vector<Expr> f, std::vector<double> param_values,
                         Box domain, Box input_box)
    : sig_(std::move(sig)),
      f_(std::move(f)),
      param_values_(std::move(param_values)),
      domain_(std::move(domain)),
      input_box_(std::move(input_box)) {
  validate();
}

void SystemModel::validate() const {
  if (f_.size() != sig_->n_states())
    throw DimensionError("vector field has " + std::to_string(f_.size()) +
                         " components for state dimension " + std::to_string(sig_->n_states()));
  for (const Expr& e : f_) {
    if (e.signature() != sig_) throw InputError("vector field component with foreign signature");
  }
  if (param_values_.size() != sig_->n_params())
    throw DimensionError("parameter value count does not match signature");
  if (domain_.dim() != n())
    throw DimensionError("domain has " + std::to_string(domain_.dim()) + " axes, expected " +
                         std::to_string(n()));
  if (input_box_.dim() != m())
    throw DimensionError("input box has " + std::to_string(input_box_.dim()) +
                         " axes, expected " + std::to_string(m()));
  if (!domain_.has_positive_volume()) throw InputError("domain box has zero volume");
  if (!input_box_.has_positive_volume()) throw InputError("input box has zero volume");
}

std::map<std::string, double> SystemModel::params() const {
  std::map<std::string, double> out;
  for (std::size_t k = 0; k < param_values_.size(); ++k) out[sig_->params()[k]] = param_values_[k];
  return out;
}

void SystemModel::fill_slots(const double* x, const double* u, std::vector<double>& slots) const {
  slots.resize(sig_->size());
  std::copy(x, x + n(), slots.begin());
  if (m() > 0) std::copy(u, u + m(), slots.begin() + static_cast<std::ptrdiff_t>(n()));
  std::copy(param_values_.begin(), param_values_.end(),
            slots.begin() + static_cast<std::ptrdiff_t>(n() + m()));
}

double SystemModel::component(std::size_t i, const Eigen::VectorXd& x,
                              const Eigen::VectorXd& u) const {
  thread_local std::vector<double> slots;
  fill_slots(x.data(), u.data(), slots);
  return f_[i].eval(slots);
}

double SystemModel::component_joint(std::size_t i, const Eigen::VectorXd& z) const {
  thread_local std::vector<double> slots;
  fill_slots(z.data(), z.data() + n(), slots);
  return f_[i].eval(slots);
}

void SystemModel::field(const Eigen::VectorXd& x, const Eigen::VectorXd& u,
                        Eigen::VectorXd& out) const {
  thread_local std::vector<double> slots;
  fill_slots(x.data(), u.data(), slots);
  out.resize(static_cast<Eigen::Index>(n()));
  for (std::size_t i = 0; i < n(); ++i) out[static_cast<Eigen::Index>(i)] = f_[i].eval(slots);
}

Eigen::VectorXd SystemModel::field(const Eigen::VectorXd& x, const Eigen::VectorXd& u) const {
  Eigen::VectorXd out;
  field(x, u, out);
  return out;
}

namespace {

Eigen::VectorXd joint(const Eigen::VectorXd& x, const Eigen::VectorXd& u) {
  Eigen::VectorXd z(x.size() + u.size());
  z << x, u;
  return z;
}

void check_point(const SystemModel& system, const Eigen::VectorXd& x, const Eigen::VectorXd& u) {
  if (static_cast<std::size_t>(x.size()) != system.n() ||
      static_cast<std::size_t>(u.size()) != system.m())
    throw DimensionError("point dimension does not match system");
}

}  // namespace

Eigen::MatrixXd jacobian_fd(const SystemModel& system, const Eigen::VectorXd& x,
                            const Eigen::VectorXd& u) {
  check_point(system, x, u);
  const auto n = static_cast<Eigen::Index>(system.n());
  auto f = [&](const Eigen::VectorXd& z) {
    Eigen::VectorXd out(n);
    for (Eigen::Index i = 0; i < n; ++i)
      out[i] = system.component_joint(static_cast<std::size_t>(i), z);
    return out;
  };
  return fd::jacobian(f, joint(x, u), n);
}

Eigen::MatrixXd hessian_fd(const SystemModel& system, std::size_t i, const Eigen::VectorXd& x,
                           const Eigen::VectorXd& u) {
  check_point(system, x, u);
  if (i >= system.n()) throw DimensionError("component index out of range");
  auto g = [&](const Eigen::VectorXd& z) { return system.component_joint(i, z); };
  return fd::hessian(g, joint(x, u));
}

}  // namespace monoflow
