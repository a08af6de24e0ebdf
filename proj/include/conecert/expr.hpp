#pragma once

#include <span>
#include <string>
#include <vector>

#include "conecert/errors.hpp"

namespace conecert {

/// Names an expression is allowed to reference: the space variables x1, x2
/// (when spatial), the solution components u1..un, and extra named scalars
/// (functional primitives bound by name).
struct ExprSignature {
  bool spatial = true;
  int n_components = 0;
  std::vector<std::string> scalar_names;

  static ExprSignature coefficients() { return {true, 0, {}}; }
  static ExprSignature nonlinearity(int n) { return {true, n, {}}; }
  static ExprSignature combiner(std::vector<std::string> names) {
    return {false, 0, std::move(names)};
  }
};

/// Evaluation environment matching an ExprSignature.
struct ExprEnv {
  double x1 = 0.0;
  double x2 = 0.0;
  std::span<const double> u{};
  std::span<const double> scalars{};
};

/// Immutable arithmetic expression over x1, x2, u1..un, named scalars and pi.
///
/// Stored as a flat arena of nodes; the last node is the root. Structural
/// equality, printing and re-parsing are exact inverses of each other.
class Expr {
 public:
  enum class Op : uint8_t {
    Literal, Pi, VarX1, VarX2, VarU, VarScalar,
    Neg, Abs, Sqrt, Sin, Cos, Tan, Exp, Log,
    Add, Sub, Mul, Div, Pow, Max, Min,
  };

  struct Node {
    Op op;
    double value = 0.0;  // Literal
    int index = -1;      // VarU (0-based) / VarScalar (signature index)
    int a = -1, b = -1;  // children

    bool operator==(const Node&) const = default;
  };

  Expr() = default;

  const std::vector<Node>& nodes() const { return nodes_; }
  const ExprSignature& signature() const { return signature_; }
  bool empty() const { return nodes_.empty(); }

  double eval(const ExprEnv& env) const;

  /// Canonical text form; parse(print(e), sig) is structurally equal to e.
  std::string print() const;

  bool uses_x() const;
  bool uses_u(int k) const;  // 0-based component
  bool uses_any_u() const;

  bool operator==(const Expr& other) const { return nodes_ == other.nodes_; }

  friend Expr parse(const std::string&, const ExprSignature&);
  friend class ExprBuilder;

 private:
  std::vector<Node> nodes_;
  ExprSignature signature_;
};

/// Parse an expression; precedence ^ over unary minus over * / over + -,
/// all binary operators left-associative. Unknown identifiers are rejected
/// against the signature.
Expr parse(const std::string& text, const ExprSignature& signature);

/// Programmatic construction, used by tests and random generators.
class ExprBuilder {
 public:
  explicit ExprBuilder(ExprSignature sig) { expr_.signature_ = std::move(sig); }

  int literal(double v);
  int pi();
  int var_x1();
  int var_x2();
  int var_u(int k);
  int var_scalar(int index);
  int unary(Expr::Op op, int a);
  int binary(Expr::Op op, int a, int b);
  Expr::Node& node(int id) { return expr_.nodes_[static_cast<size_t>(id)]; }
  int size() const { return static_cast<int>(expr_.nodes_.size()); }
  Expr take() && { return std::move(expr_); }

 private:
  Expr expr_;
};

}  // namespace conecert
