#include "conecert/expr.hpp"

#include <cctype>
#include <cmath>
#include <cstdio>
#include <cstring>

namespace conecert {

namespace {

constexpr double kTanPoleBand = 1e-8;

bool is_unary(Expr::Op op) {
  switch (op) {
    case Expr::Op::Neg:
    case Expr::Op::Abs:
    case Expr::Op::Sqrt:
    case Expr::Op::Sin:
    case Expr::Op::Cos:
    case Expr::Op::Tan:
    case Expr::Op::Exp:
    case Expr::Op::Log:
      return true;
    default:
      return false;
  }
}

bool is_binary(Expr::Op op) {
  switch (op) {
    case Expr::Op::Add:
    case Expr::Op::Sub:
    case Expr::Op::Mul:
    case Expr::Op::Div:
    case Expr::Op::Pow:
    case Expr::Op::Max:
    case Expr::Op::Min:
      return true;
    default:
      return false;
  }
}

std::string format_value(double v) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

}  // namespace

int ExprBuilder::literal(double v) {
  expr_.nodes_.push_back({Expr::Op::Literal, v, -1, -1, -1});
  return static_cast<int>(expr_.nodes_.size()) - 1;
}
int ExprBuilder::pi() {
  expr_.nodes_.push_back({Expr::Op::Pi, 0, -1, -1, -1});
  return static_cast<int>(expr_.nodes_.size()) - 1;
}
int ExprBuilder::var_x1() {
  expr_.nodes_.push_back({Expr::Op::VarX1, 0, -1, -1, -1});
  return static_cast<int>(expr_.nodes_.size()) - 1;
}
int ExprBuilder::var_x2() {
  expr_.nodes_.push_back({Expr::Op::VarX2, 0, -1, -1, -1});
  return static_cast<int>(expr_.nodes_.size()) - 1;
}
int ExprBuilder::var_u(int k) {
  expr_.nodes_.push_back({Expr::Op::VarU, 0, k, -1, -1});
  return static_cast<int>(expr_.nodes_.size()) - 1;
}
int ExprBuilder::var_scalar(int index) {
  expr_.nodes_.push_back({Expr::Op::VarScalar, 0, index, -1, -1});
  return static_cast<int>(expr_.nodes_.size()) - 1;
}
int ExprBuilder::unary(Expr::Op op, int a) {
  expr_.nodes_.push_back({op, 0, -1, a, -1});
  return static_cast<int>(expr_.nodes_.size()) - 1;
}
int ExprBuilder::binary(Expr::Op op, int a, int b) {
  expr_.nodes_.push_back({op, 0, -1, a, b});
  return static_cast<int>(expr_.nodes_.size()) - 1;
}

// ---------------------------------------------------------------------------
// Parser
// ---------------------------------------------------------------------------

namespace {

struct Parser {
  const std::string& text;
  const ExprSignature& sig;
  size_t pos = 0;
  ExprBuilder builder;
  bool last_primary_paren = false;

  Parser(const std::string& t, const ExprSignature& s) : text(t), sig(s), builder(s) {}

  [[noreturn]] void fail(const std::string& what) {
    raise(ErrorCode::SyntaxError, what + " at position " + std::to_string(pos));
  }

  void skip_ws() {
    while (pos < text.size() && std::isspace(static_cast<unsigned char>(text[pos]))) ++pos;
  }

  bool eat(char c) {
    skip_ws();
    if (pos < text.size() && text[pos] == c) {
      ++pos;
      return true;
    }
    return false;
  }

  char peek() {
    skip_ws();
    return pos < text.size() ? text[pos] : '\0';
  }

  int parse_expr() {
    int lhs = parse_term();
    for (;;) {
      const char c = peek();
      if (c == '+' || c == '-') {
        ++pos;
        const int rhs = parse_term();
        lhs = builder.binary(c == '+' ? Expr::Op::Add : Expr::Op::Sub, lhs, rhs);
      } else {
        return lhs;
      }
    }
  }

  int parse_term() {
    int lhs = parse_unary();
    for (;;) {
      const char c = peek();
      if (c == '*' || c == '/') {
        ++pos;
        const int rhs = parse_unary();
        lhs = builder.binary(c == '*' ? Expr::Op::Mul : Expr::Op::Div, lhs, rhs);
      } else {
        return lhs;
      }
    }
  }

  int parse_unary() {
    if (peek() == '-') {
      ++pos;
      return negate(parse_unary());
    }
    return parse_power();
  }

  // Left-associative power chain; the right-hand side admits a sign but no
  // further '^' so that a^b^c groups as (a^b)^c.
  int parse_power() {
    int lhs = parse_primary();
    while (peek() == '^') {
      ++pos;
      const int rhs = parse_pow_rhs();
      lhs = builder.binary(Expr::Op::Pow, lhs, rhs);
    }
    return lhs;
  }

  int parse_pow_rhs() {
    if (peek() == '-') {
      ++pos;
      return negate(parse_pow_rhs());
    }
    return parse_primary();
  }

  // A minus applied to a bare literal token folds into a negative literal so
  // that printed negative constants round-trip structurally; parenthesized
  // literals stay wrapped in an explicit negation node.
  int negate(int operand) {
    if (!last_primary_paren && operand == builder.size() - 1 &&
        builder.node(operand).op == Expr::Op::Literal) {
      builder.node(operand).value = -builder.node(operand).value;
      return operand;
    }
    return builder.unary(Expr::Op::Neg, operand);
  }

  int parse_primary() {
    skip_ws();
    if (pos >= text.size()) fail("unexpected end of input");
    const char c = text[pos];
    if (c == '(') {
      ++pos;
      const int inner = parse_expr();
      if (!eat(')')) fail("expected ')'");
      last_primary_paren = true;
      return inner;
    }
    last_primary_paren = false;
    if (std::isdigit(static_cast<unsigned char>(c)) || c == '.') return parse_number();
    if (std::isalpha(static_cast<unsigned char>(c)) || c == '_') return parse_identifier();
    fail(std::string("unexpected character '") + c + "'");
  }

  int parse_number() {
    const size_t start = pos;
    while (pos < text.size() &&
           (std::isdigit(static_cast<unsigned char>(text[pos])) || text[pos] == '.'))
      ++pos;
    if (pos < text.size() && (text[pos] == 'e' || text[pos] == 'E')) {
      size_t e = pos + 1;
      if (e < text.size() && (text[e] == '+' || text[e] == '-')) ++e;
      if (e < text.size() && std::isdigit(static_cast<unsigned char>(text[e]))) {
        pos = e;
        while (pos < text.size() && std::isdigit(static_cast<unsigned char>(text[pos]))) ++pos;
      }
    }
    const std::string tok = text.substr(start, pos - start);
    char* end = nullptr;
    const double v = std::strtod(tok.c_str(), &end);
    if (end != tok.c_str() + tok.size()) {
      pos = start;
      fail("malformed number '" + tok + "'");
    }
    return builder.literal(v);
  }

  int parse_identifier() {
    const size_t start = pos;
    while (pos < text.size() && (std::isalnum(static_cast<unsigned char>(text[pos])) ||
                                 text[pos] == '_'))
      ++pos;
    const std::string name = text.substr(start, pos - start);

    static const struct {
      const char* name;
      Expr::Op op;
      bool binary;
    } kFunctions[] = {
        {"abs", Expr::Op::Abs, false}, {"sqrt", Expr::Op::Sqrt, false},
        {"sin", Expr::Op::Sin, false}, {"cos", Expr::Op::Cos, false},
        {"tan", Expr::Op::Tan, false}, {"exp", Expr::Op::Exp, false},
        {"log", Expr::Op::Log, false}, {"max", Expr::Op::Max, true},
        {"min", Expr::Op::Min, true},  {"pow", Expr::Op::Pow, true},
    };
    for (const auto& fn : kFunctions) {
      if (name == fn.name) {
        if (!eat('(')) fail("expected '(' after '" + name + "'");
        const int a = parse_expr();
        if (fn.binary) {
          if (!eat(',')) fail("'" + name + "' takes two arguments");
          const int b = parse_expr();
          if (!eat(')')) fail("expected ')'");
          return builder.binary(fn.op, a, b);
        }
        if (!eat(')')) fail("expected ')'");
        return builder.unary(fn.op, a);
      }
    }

    if (name == "pi") return builder.pi();
    if (sig.spatial) {
      if (name == "x1") return builder.var_x1();
      if (name == "x2") return builder.var_x2();
    }
    if (name.size() >= 2 && name[0] == 'u') {
      bool digits = true;
      for (size_t k = 1; k < name.size(); ++k)
        digits = digits && std::isdigit(static_cast<unsigned char>(name[k]));
      if (digits) {
        const int k = std::atoi(name.c_str() + 1);
        if (k >= 1 && k <= sig.n_components) return builder.var_u(k - 1);
      }
    }
    for (size_t k = 0; k < sig.scalar_names.size(); ++k) {
      if (sig.scalar_names[k] == name) return builder.var_scalar(static_cast<int>(k));
    }
    raise(ErrorCode::UnknownIdentifier,
          "'" + name + "' is not declared in the expression signature");
  }
};

}  // namespace

Expr parse(const std::string& text, const ExprSignature& signature) {
  Parser p(text, signature);
  const int root = p.parse_expr();
  p.skip_ws();
  if (p.pos != text.size()) p.fail("trailing input");
  Expr e = std::move(p.builder).take();
  if (root != static_cast<int>(e.nodes().size()) - 1)
    raise(ErrorCode::Internal, "expression root is not the last node");
  return e;
}

// ---------------------------------------------------------------------------
// Evaluation
// ---------------------------------------------------------------------------

namespace {

double check_finite(double v, const char* what) {
  if (!std::isfinite(v))
    raise(ErrorCode::EvalDomainError, std::string("non-finite result of ") + what);
  return v;
}

}  // namespace

double Expr::eval(const ExprEnv& env) const {
  if (nodes_.empty()) raise(ErrorCode::Internal, "evaluating empty expression");
  std::vector<double> stack(nodes_.size());
  for (size_t k = 0; k < nodes_.size(); ++k) {
    const Node& n = nodes_[k];
    double r = 0.0;
    switch (n.op) {
      case Op::Literal: r = n.value; break;
      case Op::Pi: r = M_PI; break;
      case Op::VarX1:
      case Op::VarX2:
        if (!signature_.spatial)
          raise(ErrorCode::UnboundName, "x is not bound in this context");
        r = n.op == Op::VarX1 ? env.x1 : env.x2;
        break;
      case Op::VarU:
        if (n.index < 0 || n.index >= static_cast<int>(env.u.size()))
          raise(ErrorCode::UnboundName, "u" + std::to_string(n.index + 1) + " is not bound");
        r = env.u[static_cast<size_t>(n.index)];
        break;
      case Op::VarScalar:
        if (n.index < 0 || n.index >= static_cast<int>(env.scalars.size()))
          raise(ErrorCode::UnboundName, "named scalar #" + std::to_string(n.index) +
                                            " is not bound");
        r = env.scalars[static_cast<size_t>(n.index)];
        break;
      case Op::Neg: r = -stack[static_cast<size_t>(n.a)]; break;
      case Op::Abs: r = std::abs(stack[static_cast<size_t>(n.a)]); break;
      case Op::Sqrt: {
        const double v = stack[static_cast<size_t>(n.a)];
        if (v < 0.0)
          raise(ErrorCode::EvalDomainError, "sqrt of negative value " + format_value(v));
        r = std::sqrt(v);
        break;
      }
      case Op::Sin: r = std::sin(stack[static_cast<size_t>(n.a)]); break;
      case Op::Cos: r = std::cos(stack[static_cast<size_t>(n.a)]); break;
      case Op::Tan: {
        const double v = stack[static_cast<size_t>(n.a)];
        // Distance from the nearest pole pi/2 + k*pi.
        const double d = std::remainder(v - M_PI_2, M_PI);
        if (std::abs(d) < kTanPoleBand)
          raise(ErrorCode::EvalDomainError, "tan evaluated within the pole guard band at " +
                                                format_value(v));
        r = check_finite(std::tan(v), "tan");
        break;
      }
      case Op::Exp: r = check_finite(std::exp(stack[static_cast<size_t>(n.a)]), "exp"); break;
      case Op::Log: {
        const double v = stack[static_cast<size_t>(n.a)];
        if (v <= 0.0)
          raise(ErrorCode::EvalDomainError, "log of non-positive value " + format_value(v));
        r = std::log(v);
        break;
      }
      case Op::Add:
        r = check_finite(stack[static_cast<size_t>(n.a)] + stack[static_cast<size_t>(n.b)], "+");
        break;
      case Op::Sub:
        r = check_finite(stack[static_cast<size_t>(n.a)] - stack[static_cast<size_t>(n.b)], "-");
        break;
      case Op::Mul:
        r = check_finite(stack[static_cast<size_t>(n.a)] * stack[static_cast<size_t>(n.b)], "*");
        break;
      case Op::Div: {
        const double den = stack[static_cast<size_t>(n.b)];
        if (den == 0.0) raise(ErrorCode::EvalDomainError, "division by zero");
        r = check_finite(stack[static_cast<size_t>(n.a)] / den, "/");
        break;
      }
      case Op::Pow: {
        const double base = stack[static_cast<size_t>(n.a)];
        const double expo = stack[static_cast<size_t>(n.b)];
        if (base < 0.0 && expo != std::floor(expo))
          raise(ErrorCode::EvalDomainError,
                "pow of negative base " + format_value(base) + " with non-integer exponent");
        if (base == 0.0 && expo < 0.0)
          raise(ErrorCode::EvalDomainError, "pow(0, negative)");
        r = check_finite(std::pow(base, expo), "pow");
        break;
      }
      case Op::Max:
        r = std::max(stack[static_cast<size_t>(n.a)], stack[static_cast<size_t>(n.b)]);
        break;
      case Op::Min:
        r = std::min(stack[static_cast<size_t>(n.a)], stack[static_cast<size_t>(n.b)]);
        break;
    }
    stack[k] = r;
  }
  return stack.back();
}

// ---------------------------------------------------------------------------
// Printing
// ---------------------------------------------------------------------------

namespace {

int precedence(Expr::Op op) {
  switch (op) {
    case Expr::Op::Add:
    case Expr::Op::Sub: return 1;
    case Expr::Op::Mul:
    case Expr::Op::Div: return 2;
    case Expr::Op::Neg: return 3;
    case Expr::Op::Pow: return 4;
    default: return 5;  // atoms and function calls
  }
}

const char* op_token(Expr::Op op) {
  switch (op) {
    case Expr::Op::Add: return " + ";
    case Expr::Op::Sub: return " - ";
    case Expr::Op::Mul: return "*";
    case Expr::Op::Div: return "/";
    case Expr::Op::Pow: return "^";
    default: return "?";
  }
}

}  // namespace

std::string Expr::print() const {
  if (nodes_.empty()) return "";
  // Bottom-up: text and precedence per node.
  std::vector<std::string> text(nodes_.size());
  std::vector<int> prec(nodes_.size());

  auto child = [&](int parent_prec, int idx, bool strict) {
    const bool need = strict ? prec[static_cast<size_t>(idx)] <= parent_prec
                             : prec[static_cast<size_t>(idx)] < parent_prec;
    return need ? "(" + text[static_cast<size_t>(idx)] + ")" : text[static_cast<size_t>(idx)];
  };

  for (size_t k = 0; k < nodes_.size(); ++k) {
    const Node& n = nodes_[k];
    const int p = precedence(n.op);
    switch (n.op) {
      case Op::Literal:
        if (n.value < 0.0 || (n.value == 0.0 && std::signbit(n.value))) {
          text[k] = format_value(n.value);
          prec[k] = 3;  // parenthesized like a unary minus where ambiguous
        } else {
          text[k] = format_value(n.value);
          prec[k] = 5;
        }
        continue;
      case Op::Pi: text[k] = "pi"; prec[k] = 5; continue;
      case Op::VarX1: text[k] = "x1"; prec[k] = 5; continue;
      case Op::VarX2: text[k] = "x2"; prec[k] = 5; continue;
      case Op::VarU: text[k] = "u" + std::to_string(n.index + 1); prec[k] = 5; continue;
      case Op::VarScalar:
        text[k] = signature_.scalar_names[static_cast<size_t>(n.index)];
        prec[k] = 5;
        continue;
      default: break;
    }
    if (is_unary(n.op)) {
      if (n.op == Op::Neg) {
        // A literal operand is parenthesized so that re-parsing does not fold
        // the sign into the constant.
        const Node& a = nodes_[static_cast<size_t>(n.a)];
        if (a.op == Op::Literal) {
          text[k] = "-(" + text[static_cast<size_t>(n.a)] + ")";
        } else {
          text[k] = "-" + child(p, n.a, false);
        }
        prec[k] = p;
      } else {
        const char* name = n.op == Op::Abs    ? "abs"
                           : n.op == Op::Sqrt ? "sqrt"
                           : n.op == Op::Sin  ? "sin"
                           : n.op == Op::Cos  ? "cos"
                           : n.op == Op::Tan  ? "tan"
                           : n.op == Op::Exp  ? "exp"
                                              : "log";
        text[k] = std::string(name) + "(" + text[static_cast<size_t>(n.a)] + ")";
        prec[k] = 5;
      }
      continue;
    }
    if (n.op == Op::Max || n.op == Op::Min) {
      text[k] = std::string(n.op == Op::Max ? "max" : "min") + "(" +
                text[static_cast<size_t>(n.a)] + ", " + text[static_cast<size_t>(n.b)] + ")";
      prec[k] = 5;
      continue;
    }
    // Infix binary, left-associative.
    text[k] = child(p, n.a, false) + op_token(n.op) + child(p, n.b, true);
    prec[k] = p;
  }
  return text.back();
}

bool Expr::uses_x() const {
  for (const Node& n : nodes_)
    if (n.op == Op::VarX1 || n.op == Op::VarX2) return true;
  return false;
}

bool Expr::uses_u(int k) const {
  for (const Node& n : nodes_)
    if (n.op == Op::VarU && n.index == k) return true;
  return false;
}

bool Expr::uses_any_u() const {
  for (const Node& n : nodes_)
    if (n.op == Op::VarU) return true;
  return false;
}

}  // namespace conecert
