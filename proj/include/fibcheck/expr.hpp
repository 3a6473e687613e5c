#pragma once

// Closed-form expression trees for maps R^n -> R^m: constants, variables,
// + - * /, nonnegative integer powers, sqrt and exp. The node set is closed
// under exact differentiation, which is what every downstream gradient and
// Jacobian consumes.
//
// DSL grammar (one statement per component, ';' or newline separated):
//   f<k> = <expr>
//   expr   := term (('+'|'-') term)*
//   term   := factor (('*'|'/') factor)*
//   factor := ('-')* power
//   power  := atom ('^' integer)?
//   atom   := number | x<k> | '(' expr ')' | sqrt '(' expr ')' | exp '(' expr ')'
// '#' starts a comment running to end of line.
//
// Division and sqrt carry domain guards (denominator != 0, radicand >= 0)
// that evaluation enforces.

#include <cctype>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <cstdlib>
#include <memory>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "fibcheck/linalg.hpp"

namespace fibcheck {

class ExprError : public std::runtime_error {
 public:
  ExprError(const std::string& what, int line = 0, int col = 0)
      : std::runtime_error(make_what(what, line, col)), line_(line), col_(col) {}
  int line() const { return line_; }
  int col() const { return col_; }

 private:
  static std::string make_what(const std::string& what, int line, int col) {
    if (line <= 0) return what;
    return what + " (line " + std::to_string(line) + ", column " + std::to_string(col) + ")";
  }
  int line_ = 0;
  int col_ = 0;
};

/// Raised when evaluation hits a domain guard (x/0 or sqrt of a negative).
class EvalError : public std::runtime_error {
 public:
  explicit EvalError(const std::string& what) : std::runtime_error(what) {}
};

namespace detail {

enum class NodeKind : std::uint8_t { Const, Var, Add, Sub, Mul, Div, Pow, Sqrt, Exp };

struct ExprNode {
  NodeKind kind;
  double cval = 0.0;  // Const
  int var = -1;       // Var (0-based)
  int ipow = 0;       // Pow exponent, >= 0
  std::shared_ptr<const ExprNode> a;
  std::shared_ptr<const ExprNode> b;
};

using NodePtr = std::shared_ptr<const ExprNode>;

inline NodePtr make_const(double v) {
  auto n = std::make_shared<ExprNode>();
  n->kind = NodeKind::Const;
  n->cval = v;
  return n;
}

inline bool is_const(const NodePtr& n, double v) { return n->kind == NodeKind::Const && n->cval == v; }

}  // namespace detail

/// Immutable expression handle with value semantics.
class Expr {
 public:
  Expr() : node_(detail::make_const(0.0)) {}

  static Expr constant(double v) { return Expr(detail::make_const(v)); }

  static Expr variable(int index) {
    if (index < 0) throw ExprError("variable index must be nonnegative");
    auto n = std::make_shared<detail::ExprNode>();
    n->kind = detail::NodeKind::Var;
    n->var = index;
    return Expr(std::move(n));
  }

  friend Expr operator+(const Expr& x, const Expr& y) {
    using namespace detail;
    if (both_const(x, y)) return constant(x.node_->cval + y.node_->cval);
    if (is_const(x.node_, 0.0)) return y;
    if (is_const(y.node_, 0.0)) return x;
    return binary(NodeKind::Add, x, y);
  }

  friend Expr operator-(const Expr& x, const Expr& y) {
    using namespace detail;
    if (both_const(x, y)) return constant(x.node_->cval - y.node_->cval);
    if (is_const(y.node_, 0.0)) return x;
    return binary(NodeKind::Sub, x, y);
  }

  friend Expr operator*(const Expr& x, const Expr& y) {
    using namespace detail;
    if (both_const(x, y)) return constant(x.node_->cval * y.node_->cval);
    if (is_const(x.node_, 0.0) || is_const(y.node_, 0.0)) return constant(0.0);
    if (is_const(x.node_, 1.0)) return y;
    if (is_const(y.node_, 1.0)) return x;
    return binary(NodeKind::Mul, x, y);
  }

  friend Expr operator/(const Expr& x, const Expr& y) {
    using namespace detail;
    // Constant folding keeps the guard: fold only when the denominator is a
    // nonzero literal. 0/expr is NOT folded (the guard must still fire).
    if (y.node_->kind == NodeKind::Const) {
      if (y.node_->cval == 0.0) throw ExprError("division by constant zero");
      if (x.node_->kind == NodeKind::Const) return constant(x.node_->cval / y.node_->cval);
      if (y.node_->cval == 1.0) return x;
    }
    return binary(NodeKind::Div, x, y);
  }

  friend Expr operator-(const Expr& x) { return constant(0.0) - x; }

  /// x^k for integer k >= 0 (keeps differentiation exact and closed).
  static Expr int_pow(const Expr& base, int k) {
    using namespace detail;
    if (k < 0) throw ExprError("power exponents must be nonnegative integers");
    if (k == 0) return constant(1.0);
    if (k == 1) return base;
    if (base.node_->kind == NodeKind::Const) return constant(std::pow(base.node_->cval, k));
    auto n = std::make_shared<ExprNode>();
    n->kind = NodeKind::Pow;
    n->ipow = k;
    n->a = base.node_;
    return Expr(std::move(n));
  }

  static Expr sqrt_of(const Expr& x) {
    using namespace detail;
    if (x.node_->kind == NodeKind::Const) {
      if (x.node_->cval < 0.0) throw ExprError("sqrt of negative constant");
      return constant(std::sqrt(x.node_->cval));
    }
    return unary(NodeKind::Sqrt, x);
  }

  static Expr exp_of(const Expr& x) {
    using namespace detail;
    if (x.node_->kind == NodeKind::Const) return constant(std::exp(x.node_->cval));
    return unary(NodeKind::Exp, x);
  }

  bool is_zero_literal() const {
    return node_->kind == detail::NodeKind::Const && node_->cval == 0.0;
  }

  /// Largest variable index referenced, or -1 for constant expressions.
  int max_var_index() const { return max_var(node_.get()); }

  /// Evaluation honoring domain guards; nullopt when a guard fires.
  std::optional<double> try_eval(std::span<const double> x) const {
    bool ok = true;
    double v = eval_node(node_.get(), x, ok);
    if (!ok) return std::nullopt;
    return v;
  }

  double eval(std::span<const double> x) const {
    bool ok = true;
    double v = eval_node(node_.get(), x, ok);
    if (!ok) throw EvalError("domain guard violated (division by zero or negative radicand)");
    return v;
  }

  /// Exact derivative with respect to variable `index`; again an Expr.
  Expr diff(int index) const { return diff_node(node_.get(), index); }

  std::string to_string() const {
    std::string out;
    print_node(node_.get(), out, 0);
    return out;
  }

  /// Replaces every variable i by `replacements[i]`.
  Expr substitute(std::span<const Expr> replacements) const {
    return subst_node(node_.get(), replacements);
  }

 private:
  explicit Expr(detail::NodePtr node) : node_(std::move(node)) {}

  static bool both_const(const Expr& x, const Expr& y) {
    return x.node_->kind == detail::NodeKind::Const && y.node_->kind == detail::NodeKind::Const;
  }

  static Expr binary(detail::NodeKind k, const Expr& x, const Expr& y) {
    auto n = std::make_shared<detail::ExprNode>();
    n->kind = k;
    n->a = x.node_;
    n->b = y.node_;
    return Expr(std::move(n));
  }

  static Expr unary(detail::NodeKind k, const Expr& x) {
    auto n = std::make_shared<detail::ExprNode>();
    n->kind = k;
    n->a = x.node_;
    return Expr(std::move(n));
  }

  static int max_var(const detail::ExprNode* n) {
    using detail::NodeKind;
    switch (n->kind) {
      case NodeKind::Const: return -1;
      case NodeKind::Var: return n->var;
      default: {
        int m = n->a ? max_var(n->a.get()) : -1;
        if (n->b) m = std::max(m, max_var(n->b.get()));
        return m;
      }
    }
  }

  static double eval_node(const detail::ExprNode* n, std::span<const double> x, bool& ok) {
    using detail::NodeKind;
    switch (n->kind) {
      case NodeKind::Const: return n->cval;
      case NodeKind::Var:
        if (n->var >= static_cast<int>(x.size())) {
          ok = false;
          return 0.0;
        }
        return x[static_cast<std::size_t>(n->var)];
      case NodeKind::Add: return eval_node(n->a.get(), x, ok) + eval_node(n->b.get(), x, ok);
      case NodeKind::Sub: return eval_node(n->a.get(), x, ok) - eval_node(n->b.get(), x, ok);
      case NodeKind::Mul: return eval_node(n->a.get(), x, ok) * eval_node(n->b.get(), x, ok);
      case NodeKind::Div: {
        double num = eval_node(n->a.get(), x, ok);
        double den = eval_node(n->b.get(), x, ok);
        if (den == 0.0) {
          ok = false;
          return 0.0;
        }
        return num / den;
      }
      case NodeKind::Pow: {
        double base = eval_node(n->a.get(), x, ok);
        double r = 1.0;
        double p = base;
        int k = n->ipow;
        while (k > 0) {  // binary exponentiation, exact for the integer powers we allow
          if (k & 1) r *= p;
          p *= p;
          k >>= 1;
        }
        return r;
      }
      case NodeKind::Sqrt: {
        double v = eval_node(n->a.get(), x, ok);
        if (v < 0.0) {
          ok = false;
          return 0.0;
        }
        return std::sqrt(v);
      }
      case NodeKind::Exp: return std::exp(eval_node(n->a.get(), x, ok));
    }
    ok = false;
    return 0.0;
  }

  static Expr diff_node(const detail::ExprNode* n, int index) {
    using detail::NodeKind;
    switch (n->kind) {
      case NodeKind::Const: return constant(0.0);
      case NodeKind::Var: return constant(n->var == index ? 1.0 : 0.0);
      case NodeKind::Add: return diff_node(n->a.get(), index) + diff_node(n->b.get(), index);
      case NodeKind::Sub: return diff_node(n->a.get(), index) - diff_node(n->b.get(), index);
      case NodeKind::Mul: {
        Expr a(n->a), b(n->b);
        return diff_node(n->a.get(), index) * b + a * diff_node(n->b.get(), index);
      }
      case NodeKind::Div: {
        Expr a(n->a), b(n->b);
        Expr da = diff_node(n->a.get(), index);
        Expr db = diff_node(n->b.get(), index);
        return (da * b - a * db) / (b * b);
      }
      case NodeKind::Pow: {
        Expr a(n->a);
        Expr da = diff_node(n->a.get(), index);
        return constant(static_cast<double>(n->ipow)) * int_pow(a, n->ipow - 1) * da;
      }
      case NodeKind::Sqrt: {
        Expr a(n->a);
        Expr da = diff_node(n->a.get(), index);
        if (da.is_zero_literal()) return constant(0.0);
        return da / (constant(2.0) * sqrt_of(a));
      }
      case NodeKind::Exp: {
        Expr a(n->a);
        return exp_of(a) * diff_node(n->a.get(), index);
      }
    }
    throw ExprError("diff: unreachable node kind");
  }

  static Expr subst_node(const detail::ExprNode* n, std::span<const Expr> repl) {
    using detail::NodeKind;
    switch (n->kind) {
      case NodeKind::Const: return constant(n->cval);
      case NodeKind::Var:
        if (n->var >= static_cast<int>(repl.size())) throw ExprError("substitute: missing replacement");
        return repl[static_cast<std::size_t>(n->var)];
      case NodeKind::Add: return subst_node(n->a.get(), repl) + subst_node(n->b.get(), repl);
      case NodeKind::Sub: return subst_node(n->a.get(), repl) - subst_node(n->b.get(), repl);
      case NodeKind::Mul: return subst_node(n->a.get(), repl) * subst_node(n->b.get(), repl);
      case NodeKind::Div: return subst_node(n->a.get(), repl) / subst_node(n->b.get(), repl);
      case NodeKind::Pow: return int_pow(subst_node(n->a.get(), repl), n->ipow);
      case NodeKind::Sqrt: return sqrt_of(subst_node(n->a.get(), repl));
      case NodeKind::Exp: return exp_of(subst_node(n->a.get(), repl));
    }
    throw ExprError("substitute: unreachable node kind");
  }

  // Precedence levels: 0 additive, 1 multiplicative, 2 unary/power operand.
  static void print_node(const detail::ExprNode* n, std::string& out, int parent_level) {
    using detail::NodeKind;
    auto parenthesize = [&](int level, auto&& body) {
      bool need = level < parent_level;
      if (need) out += '(';
      body();
      if (need) out += ')';
    };
    switch (n->kind) {
      case NodeKind::Const: {
        char buf[40];
        if (n->cval < 0.0) {
          std::snprintf(buf, sizeof buf, "(%.17g)", n->cval);
        } else {
          std::snprintf(buf, sizeof buf, "%.17g", n->cval);
        }
        out += buf;
        return;
      }
      case NodeKind::Var:
        out += 'x';
        out += std::to_string(n->var + 1);
        return;
      case NodeKind::Add:
        parenthesize(0, [&] {
          print_node(n->a.get(), out, 0);
          out += " + ";
          print_node(n->b.get(), out, 1);
        });
        return;
      case NodeKind::Sub:
        parenthesize(0, [&] {
          print_node(n->a.get(), out, 0);
          out += " - ";
          print_node(n->b.get(), out, 1);
        });
        return;
      case NodeKind::Mul:
        parenthesize(1, [&] {
          print_node(n->a.get(), out, 1);
          out += "*";
          print_node(n->b.get(), out, 2);
        });
        return;
      case NodeKind::Div:
        parenthesize(1, [&] {
          print_node(n->a.get(), out, 1);
          out += "/";
          print_node(n->b.get(), out, 2);
        });
        return;
      case NodeKind::Pow:
        parenthesize(2, [&] {
          print_node(n->a.get(), out, 3);
          out += '^';
          out += std::to_string(n->ipow);
        });
        return;
      case NodeKind::Sqrt:
        out += "sqrt(";
        print_node(n->a.get(), out, 0);
        out += ')';
        return;
      case NodeKind::Exp:
        out += "exp(";
        print_node(n->a.get(), out, 0);
        out += ')';
        return;
    }
  }

  detail::NodePtr node_;
};

/// A map R^n -> R^m given by component expressions.
struct ExprMap {
  int n_in = 0;
  std::vector<Expr> components;

  int n_out() const { return static_cast<int>(components.size()); }

  std::vector<double> eval(std::span<const double> x) const {
    std::vector<double> y;
    y.reserve(components.size());
    for (std::size_t i = 0; i < components.size(); ++i) {
      auto v = components[i].try_eval(x);
      if (!v)
        throw EvalError("domain guard violated in component f" + std::to_string(i + 1));
      y.push_back(*v);
    }
    return y;
  }

  std::optional<std::vector<double>> try_eval(std::span<const double> x) const {
    std::vector<double> y;
    y.reserve(components.size());
    for (const auto& c : components) {
      auto v = c.try_eval(x);
      if (!v) return std::nullopt;
      y.push_back(*v);
    }
    return y;
  }

  /// Component-selection map f_{i_1..i_k} (1-based indices).
  ExprMap select(std::span<const int> indices) const {
    ExprMap sub;
    sub.n_in = n_in;
    for (int idx : indices) {
      if (idx < 1 || idx > n_out()) throw ExprError("select: component index out of range");
      sub.components.push_back(components[static_cast<std::size_t>(idx - 1)]);
    }
    return sub;
  }
};

/// All first partial derivatives of `e` as expressions.
inline std::vector<Expr> gradient_exprs(const Expr& e, int n) {
  std::vector<Expr> g;
  g.reserve(static_cast<std::size_t>(n));
  for (int i = 0; i < n; ++i) g.push_back(e.diff(i));
  return g;
}

inline std::vector<double> grad(const Expr& e, int n, std::span<const double> x) {
  std::vector<double> g(static_cast<std::size_t>(n));
  for (int i = 0; i < n; ++i) g[static_cast<std::size_t>(i)] = e.diff(i).eval(x);
  return g;
}

/// Jacobian expression table: jac[i][j] = d f_i / d x_j.
inline std::vector<std::vector<Expr>> jacobian_exprs(const ExprMap& map) {
  std::vector<std::vector<Expr>> jac;
  jac.reserve(map.components.size());
  for (const auto& comp : map.components) jac.push_back(gradient_exprs(comp, map.n_in));
  return jac;
}

inline Matrix eval_jacobian(const std::vector<std::vector<Expr>>& jac, std::span<const double> x) {
  Matrix j(static_cast<int>(jac.size()), static_cast<int>(jac.front().size()));
  for (int i = 0; i < j.rows(); ++i)
    for (int c = 0; c < j.cols(); ++c)
      j(i, c) = jac[static_cast<std::size_t>(i)][static_cast<std::size_t>(c)].eval(x);
  return j;
}

inline Matrix jacobian(const ExprMap& map, std::span<const double> x) {
  return eval_jacobian(jacobian_exprs(map), x);
}

/// f composed with the linear map A (x -> f(Ax)); A must be n_in x n_in.
inline ExprMap compose_linear_right(const ExprMap& f, const Matrix& a) {
  if (a.rows() != f.n_in || a.cols() != f.n_in)
    throw ExprError("compose_linear_right: matrix must be n_in x n_in");
  std::vector<Expr> repl;
  repl.reserve(static_cast<std::size_t>(f.n_in));
  for (int i = 0; i < f.n_in; ++i) {
    Expr row = Expr::constant(0.0);
    for (int j = 0; j < f.n_in; ++j) {
      if (a(i, j) == 0.0) continue;
      row = row + Expr::constant(a(i, j)) * Expr::variable(j);
    }
    repl.push_back(row);
  }
  ExprMap out;
  out.n_in = f.n_in;
  for (const auto& c : f.components) out.components.push_back(c.substitute(repl));
  return out;
}

/// A applied after f (x -> A f(x)); A must be n_out x n_out.
inline ExprMap compose_linear_left(const Matrix& a, const ExprMap& f) {
  if (a.rows() != f.n_out() || a.cols() != f.n_out())
    throw ExprError("compose_linear_left: matrix must be n_out x n_out");
  ExprMap out;
  out.n_in = f.n_in;
  for (int i = 0; i < a.rows(); ++i) {
    Expr row = Expr::constant(0.0);
    for (int j = 0; j < a.cols(); ++j) {
      if (a(i, j) == 0.0) continue;
      row = row + Expr::constant(a(i, j)) * f.components[static_cast<std::size_t>(j)];
    }
    out.components.push_back(row);
  }
  return out;
}

// ---------------------------------------------------------------------------
// DSL parser
// ---------------------------------------------------------------------------

namespace detail {

class Parser {
 public:
  explicit Parser(std::string_view text) : text_(text) {}

  ExprMap parse_map() {
    std::vector<std::optional<Expr>> comps;
    skip_blank();
    while (!at_end()) {
      auto [index, expr] = parse_statement();
      if (index > 4096) fail("component index out of range");
      if (static_cast<std::size_t>(index) > comps.size()) comps.resize(static_cast<std::size_t>(index));
      auto& slot = comps[static_cast<std::size_t>(index - 1)];
      if (slot.has_value()) fail("component f" + std::to_string(index) + " defined twice");
      slot = std::move(expr);
      skip_blank();
      while (!at_end() && (peek() == ';' || peek() == '\n')) {
        advance();
        skip_blank();
      }
    }
    if (comps.empty()) fail("no components defined");
    ExprMap map;
    int max_var = -1;
    for (std::size_t i = 0; i < comps.size(); ++i) {
      if (!comps[i].has_value())
        fail("inconsistent dimension: component f" + std::to_string(i + 1) + " missing");
      max_var = std::max(max_var, comps[i]->max_var_index());
      map.components.push_back(std::move(*comps[i]));
    }
    map.n_in = max_var + 1;
    if (map.n_in == 0) map.n_in = 1;  // constant-only maps still live on R^1
    return map;
  }

  Expr parse_single_expr() {
    skip_blank();
    Expr e = parse_expr();
    skip_blank();
    if (!at_end()) fail("trailing input after expression");
    return e;
  }

 private:
  std::pair<int, Expr> parse_statement() {
    skip_ws();
    int line = line_, col = col_;
    std::string name = read_identifier();
    if (name.size() < 2 || name[0] != 'f') fail("expected component definition 'f<k> = ...'", line, col);
    int index = parse_positive_int(name.substr(1), line, col);
    skip_ws();
    if (at_end() || peek() != '=') fail("expected '=' after " + name);
    advance();
    Expr e = parse_expr();
    skip_ws();
    if (!at_end() && peek() != ';' && peek() != '\n' && peek() != '#')
      fail(std::string("unexpected character '") + peek() + "'");
    return {index, std::move(e)};
  }

  Expr parse_expr() {
    Expr lhs = parse_term();
    for (;;) {
      skip_ws();
      if (at_end()) return lhs;
      char c = peek();
      if (c == '+') {
        advance();
        lhs = lhs + parse_term();
      } else if (c == '-') {
        advance();
        lhs = lhs - parse_term();
      } else {
        return lhs;
      }
    }
  }

  Expr parse_term() {
    Expr lhs = parse_factor();
    for (;;) {
      skip_ws();
      if (at_end()) return lhs;
      char c = peek();
      if (c == '*') {
        advance();
        lhs = lhs * parse_factor();
      } else if (c == '/') {
        advance();
        int line = line_, col = col_;
        Expr rhs = parse_factor();
        try {
          lhs = lhs / rhs;
        } catch (const ExprError& e) {
          fail(e.what(), line, col);
        }
      } else {
        return lhs;
      }
    }
  }

  Expr parse_factor() {
    skip_ws();
    bool negate = false;
    while (!at_end() && peek() == '-') {
      advance();
      negate = !negate;
      skip_ws();
    }
    Expr e = parse_power();
    return negate ? -e : e;
  }

  Expr parse_power() {
    Expr base = parse_atom();
    skip_ws();
    if (!at_end() && peek() == '^') {
      advance();
      skip_ws();
      int line = line_, col = col_;
      if (at_end() || !std::isdigit(static_cast<unsigned char>(peek())))
        fail("exponent must be a nonnegative integer literal", line, col);
      std::string digits;
      while (!at_end() && std::isdigit(static_cast<unsigned char>(peek()))) digits += take();
      int k = parse_positive_int(digits, line, col, /*allow_zero=*/true);
      return Expr::int_pow(base, k);
    }
    return base;
  }

  Expr parse_atom() {
    skip_ws();
    if (at_end()) fail("unexpected end of input");
    int line = line_, col = col_;
    char c = peek();
    if (c == '(') {
      advance();
      Expr e = parse_expr();
      skip_ws();
      if (at_end() || peek() != ')') fail("expected ')'", line, col);
      advance();
      return e;
    }
    if (std::isdigit(static_cast<unsigned char>(c)) || c == '.') return parse_number();
    if (std::isalpha(static_cast<unsigned char>(c))) {
      std::string name = read_identifier();
      if (name == "sqrt" || name == "exp") {
        skip_ws();
        if (at_end() || peek() != '(') fail("expected '(' after " + name, line, col);
        advance();
        Expr arg = parse_expr();
        skip_ws();
        if (at_end() || peek() != ')') fail("expected ')'", line, col);
        advance();
        try {
          return name == "sqrt" ? Expr::sqrt_of(arg) : Expr::exp_of(arg);
        } catch (const ExprError& e) {
          fail(e.what(), line, col);
        }
      }
      if (name.size() >= 2 && name[0] == 'x') {
        bool digits_only = true;
        for (std::size_t i = 1; i < name.size(); ++i)
          if (!std::isdigit(static_cast<unsigned char>(name[i]))) digits_only = false;
        if (digits_only) {
          int index = parse_positive_int(name.substr(1), line, col);
          return Expr::variable(index - 1);
        }
      }
      fail("unknown identifier '" + name + "'", line, col);
    }
    fail(std::string("unexpected character '") + c + "'", line, col);
    return Expr::constant(0.0);  // unreachable
  }

  Expr parse_number() {
    int line = line_, col = col_;
    std::string digits;
    bool seen_dot = false, seen_exp = false;
    while (!at_end()) {
      char c = peek();
      if (std::isdigit(static_cast<unsigned char>(c))) {
        digits += take();
      } else if (c == '.' && !seen_dot && !seen_exp) {
        seen_dot = true;
        digits += take();
      } else if ((c == 'e' || c == 'E') && !seen_exp && !digits.empty()) {
        seen_exp = true;
        digits += take();
        if (!at_end() && (peek() == '+' || peek() == '-')) digits += take();
      } else {
        break;
      }
    }
    if (digits.empty()) fail("malformed number", line, col);
    char* end = nullptr;
    double v = std::strtod(digits.c_str(), &end);
    if (end == nullptr || *end != '\0' || !std::isfinite(v)) fail("malformed number '" + digits + "'", line, col);
    return Expr::constant(v);
  }

  int parse_positive_int(const std::string& digits, int line, int col, bool allow_zero = false) {
    if (digits.empty()) fail("expected an integer", line, col);
    long v = 0;
    for (char c : digits) {
      if (!std::isdigit(static_cast<unsigned char>(c))) fail("expected an integer", line, col);
      v = v * 10 + (c - '0');
      if (v > 1000000) fail("integer literal too large", line, col);
    }
    if (v == 0 && !allow_zero) fail("index must be positive", line, col);
    return static_cast<int>(v);
  }

  std::string read_identifier() {
    std::string s;
    while (!at_end() && (std::isalnum(static_cast<unsigned char>(peek())) || peek() == '_')) s += take();
    if (s.empty()) fail("expected an identifier");
    return s;
  }

  bool at_end() const { return pos_ >= text_.size(); }
  char peek() const { return text_[pos_]; }

  char take() {
    char c = text_[pos_++];
    if (c == '\n') {
      ++line_;
      col_ = 1;
    } else {
      ++col_;
    }
    return c;
  }

  void advance() { (void)take(); }

  // Whitespace within a statement (newlines are statement separators).
  void skip_ws() {
    while (!at_end()) {
      char c = peek();
      if (c == ' ' || c == '\t' || c == '\r') {
        advance();
      } else if (c == '#') {
        while (!at_end() && peek() != '\n') advance();
      } else {
        break;
      }
    }
  }

  void skip_blank() {
    while (!at_end()) {
      char c = peek();
      if (c == ' ' || c == '\t' || c == '\r' || c == '\n' || c == ';') {
        advance();
      } else if (c == '#') {
        while (!at_end() && peek() != '\n') advance();
      } else {
        break;
      }
    }
  }

  [[noreturn]] void fail(const std::string& msg) { fail(msg, line_, col_); }
  [[noreturn]] void fail(const std::string& msg, int line, int col) { throw ExprError(msg, line, col); }

  std::string_view text_;
  std::size_t pos_ = 0;
  int line_ = 1;
  int col_ = 1;
};

}  // namespace detail

inline ExprMap parse_map(std::string_view text) { return detail::Parser(text).parse_map(); }

inline Expr parse_expr(std::string_view text) { return detail::Parser(text).parse_single_expr(); }

inline std::string print_map(const ExprMap& map) {
  std::string out;
  for (std::size_t i = 0; i < map.components.size(); ++i) {
    out += 'f';
    out += std::to_string(i + 1);
    out += " = ";
    out += map.components[i].to_string();
    out += '\n';
  }
  return out;
}

}  // namespace fibcheck
