#pragma once

#include "monoflow/box.hpp"

#include <Eigen/Core>

#include <cstddef>
#include <cstdint>
#include <map>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace monoflow {

/// The symbols an expression may reference, laid out as evaluation slots:
/// states x1..xn, then inputs u1..um, then named parameters in declaration
/// order.
class Signature {
 public:
  Signature(std::size_t n_states, std::size_t n_inputs, std::vector<std::string> params = {});

  std::size_t n_states() const noexcept { return n_states_; }
  std::size_t n_inputs() const noexcept { return n_inputs_; }
  std::size_t n_params() const noexcept { return params_.size(); }
  std::size_t size() const noexcept { return n_states_ + n_inputs_ + params_.size(); }

  std::optional<std::size_t> slot(std::string_view name) const;
  std::string name(std::size_t slot) const;

  std::size_t state_slot(std::size_t i) const noexcept { return i; }
  std::size_t input_slot(std::size_t j) const noexcept { return n_states_ + j; }
  std::size_t param_slot(std::size_t k) const noexcept { return n_states_ + n_inputs_ + k; }

  const std::vector<std::string>& params() const noexcept { return params_; }

 private:
  std::size_t n_states_;
  std::size_t n_inputs_;
  std::vector<std::string> params_;
};

using SignaturePtr = std::shared_ptr<const Signature>;

SignaturePtr make_signature(std::size_t n_states, std::size_t n_inputs,
                            std::vector<std::string> params = {});

enum class Op : std::uint8_t { constant, symbol, add, sub, mul, div, pow, neg, exp, log, sqrt };

/// One AST node. Nodes are stored in post-order so children always precede
/// their parent; `lhs`/`rhs` index into the same node array (-1 if unused).
struct Node {
  Op op = Op::constant;
  double value = 0.0;
  std::uint32_t slot = 0;
  std::int32_t lhs = -1;
  std::int32_t rhs = -1;

  friend bool operator==(const Node&, const Node&) = default;
};

/// Immutable arithmetic expression over a Signature.
class Expr {
 public:
  Expr() = default;

  static Expr constant(SignaturePtr sig, double value);
  static Expr symbol(SignaturePtr sig, std::size_t slot);
  static Expr state(SignaturePtr sig, std::size_t i) { return symbol(sig, sig->state_slot(i)); }

  /// Evaluates with one value per signature slot.
  double eval(std::span<const double> slots) const;

  /// Canonical fully parenthesized text; parses back to the same tree.
  std::string to_string() const;

  const std::vector<Node>& nodes() const noexcept { return nodes_; }
  const SignaturePtr& signature() const noexcept { return sig_; }
  bool empty() const noexcept { return nodes_.empty(); }
  std::size_t root() const noexcept { return nodes_.size() - 1; }

  /// Sorted distinct slots referenced by the expression.
  std::vector<std::size_t> symbols() const;
  bool references(std::size_t slot) const;

  /// Sub-tree rooted at node `index` as its own expression.
  Expr subtree(std::size_t index) const;

  /// Replaces every symbol whose slot has an entry in `replacements`.
  /// Replacement expressions must share this expression's signature.
  Expr substitute(const std::vector<std::optional<Expr>>& replacements) const;

  /// Same tree re-bound to another signature through a slot map.
  Expr rebind(SignaturePtr sig, const std::vector<std::size_t>& slot_map) const;

  friend Expr operator+(const Expr& a, const Expr& b);
  friend Expr operator-(const Expr& a, const Expr& b);
  friend Expr operator*(const Expr& a, const Expr& b);
  friend Expr operator/(const Expr& a, const Expr& b);
  /// Negation; -(-e) folds back to e.
  friend Expr operator-(const Expr& a);
  friend Expr pow(const Expr& a, const Expr& b);
  friend Expr exp(const Expr& a);
  friend Expr log(const Expr& a);
  friend Expr sqrt(const Expr& a);

  /// Structural equality (same signature object, same tree).
  friend bool operator==(const Expr& a, const Expr& b) {
    return a.sig_ == b.sig_ && a.nodes_ == b.nodes_;
  }

 private:
  friend class Parser;
  static Expr binary(Op op, const Expr& a, const Expr& b);
  static Expr unary(Op op, const Expr& a);
  std::string node_string(std::size_t index) const;

  SignaturePtr sig_;
  std::vector<Node> nodes_;
};

/// Parses `text` against the declared symbols. Precedence, tightest first:
/// `^` (right associative), unary minus, `* /`, `+ -` (left associative).
/// Throws SyntaxError (with byte offset) or UnknownSymbolError.
Expr parse_expression(std::string_view text, SignaturePtr sig);

/// Evaluates with named bindings; every referenced symbol must be bound.
double evaluate(const Expr& expr, const std::map<std::string, double>& bindings);

/// A vector field f(x,u) with parameter values and domain/input boxes.
class SystemModel {
 public:
  /// Parses the component expressions against x1..xn, u1..um and the
  /// parameter names.
  SystemModel(std::size_t n, std::size_t m, const std::vector<std::string>& f,
              const std::map<std::string, double>& params, Box domain, Box input_box);

  /// Assembles from already-built expressions sharing `sig`. Parameter values
  /// are given per parameter slot.
  SystemModel(SignaturePtr sig, std::vector<Expr> f, std::vector<double> param_values, Box domain,
              Box input_box);

  std::size_t n() const noexcept { return sig_->n_states(); }
  std::size_t m() const noexcept { return sig_->n_inputs(); }
  const SignaturePtr& signature() const noexcept { return sig_; }
  const std::vector<Expr>& f() const noexcept { return f_; }
  const std::vector<double>& param_values() const noexcept { return param_values_; }
  std::map<std::string, double> params() const;
  const Box& domain() const noexcept { return domain_; }
  const Box& input_box() const noexcept { return input_box_; }

  double component(std::size_t i, const Eigen::VectorXd& x, const Eigen::VectorXd& u) const;
  Eigen::VectorXd field(const Eigen::VectorXd& x, const Eigen::VectorXd& u) const;
  void field(const Eigen::VectorXd& x, const Eigen::VectorXd& u, Eigen::VectorXd& out) const;

  /// Component i at the joint point z = (x, u).
  double component_joint(std::size_t i, const Eigen::VectorXd& z) const;

 private:
  void validate() const;
  void fill_slots(const double* x, const double* u, std::vector<double>& slots) const;

  SignaturePtr sig_;
  std::vector<Expr> f_;
  std::vector<double> param_values_;
  Box domain_;
  Box input_box_;
};

/// Central-difference Jacobian of f with respect to (x, u), n x (n+m).
/// Step for column j: max(1,|z_j|) * eps^(1/3).
Eigen::MatrixXd jacobian_fd(const SystemModel& system, const Eigen::VectorXd& x,
                            const Eigen::VectorXd& u);

/// Symmetrized central-difference Hessian of f_i with respect to (x, u).
/// Step for axis j: max(1,|z_j|) * eps^(1/4).
Eigen::MatrixXd hessian_fd(const SystemModel& system, std::size_t i, const Eigen::VectorXd& x,
                           const Eigen::VectorXd& u);

}  // namespace monoflow
