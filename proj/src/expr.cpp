#include "conflat/expr.hpp"

#include "conflat/errors.hpp"

#include <cctype>
#include <charconv>
#include <cmath>
#include <string>
#include <utility>

namespace conflat {

DomainError::DomainError(const std::string& what, std::string subexpr, std::vector<double> point)
    : Error(what + " in '" + subexpr + "'"), subexpr_(std::move(subexpr)), point_(std::move(point)) {}

namespace expr {

namespace {

std::shared_ptr<Node> make_node(Kind kind) {
  auto n = std::make_shared<Node>();
  n->kind = kind;
  return n;
}

bool is_const(const Expr& e) { return e->kind == Kind::constant; }
bool is_const(const Expr& e, double v) { return is_const(e) && e->value == v; }

bool is_integral(double v) { return std::isfinite(v) && std::trunc(v) == v; }

// Folds only when the operation is defined, so domain errors survive
// simplification and still surface at evaluation time.
bool try_fold_call(Func f, double a, double& out) {
  switch (f) {
    case Func::sqrt:
      if (a < 0.0) return false;
      out = std::sqrt(a);
      return true;
    case Func::sin: out = std::sin(a); return true;
    case Func::cos: out = std::cos(a); return true;
    case Func::exp: out = std::exp(a); return true;
    case Func::log:
      if (a <= 0.0) return false;
      out = std::log(a);
      return true;
  }
  return false;
}

double int_power(double base, double exponent) { return std::pow(base, exponent); }

// Smart constructors used by differentiate() and simplify().
Expr s_neg(Expr a) {
  if (is_const(a)) return constant(-a->value);
  if (a->kind == Kind::unary) return a->children[0];
  return negate(std::move(a));
}

Expr s_add(Expr a, Expr b) {
  if (is_const(a) && is_const(b)) return constant(a->value + b->value);
  if (is_const(a, 0.0)) return b;
  if (is_const(b, 0.0)) return a;
  return binary(BinaryOp::add, std::move(a), std::move(b));
}

Expr s_sub(Expr a, Expr b) {
  if (is_const(a) && is_const(b)) return constant(a->value - b->value);
  if (is_const(b, 0.0)) return a;
  if (is_const(a, 0.0)) return s_neg(std::move(b));
  return binary(BinaryOp::sub, std::move(a), std::move(b));
}

Expr s_mul(Expr a, Expr b) {
  if (is_const(a) && is_const(b)) return constant(a->value * b->value);
  if (is_const(a, 0.0) || is_const(b, 0.0)) return constant(0.0);
  if (is_const(a, 1.0)) return b;
  if (is_const(b, 1.0)) return a;
  return binary(BinaryOp::mul, std::move(a), std::move(b));
}

Expr s_div(Expr a, Expr b) {
  if (is_const(a) && is_const(b) && b->value != 0.0) return constant(a->value / b->value);
  if (is_const(b, 1.0)) return a;
  if (is_const(a, 0.0) && !is_const(b, 0.0)) return constant(0.0);
  return binary(BinaryOp::div, std::move(a), std::move(b));
}

Expr s_pow(Expr a, Expr k) {
  const double e = k->value;
  if (e == 0.0) return constant(1.0);
  if (e == 1.0) return a;
  if (is_const(a) && !(a->value == 0.0 && e < 0.0)) return constant(int_power(a->value, e));
  return binary(BinaryOp::pow, std::move(a), std::move(k));
}

Expr s_call(Func f, Expr a) {
  double v = 0.0;
  if (is_const(a) && try_fold_call(f, a->value, v)) return constant(v);
  return call(f, std::move(a));
}

// ---------------------------------------------------------------- parser

class Parser {
 public:
  Parser(std::string_view text, int dim) : text_(text), dim_(dim) {}

  Expr run() {
    skip_ws();
    if (pos_ >= text_.size()) throw ParseError("empty expression", pos_);
    Expr e = parse_expr();
    skip_ws();
    if (pos_ < text_.size()) throw ParseError(std::string("unexpected '") + text_[pos_] + "'", pos_);
    return e;
  }

 private:
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

  void expect(char c) {
    if (!accept(c)) {
      if (pos_ >= text_.size()) throw ParseError(std::string("expected '") + c + "' but input ended", pos_);
      throw ParseError(std::string("expected '") + c + "'", pos_);
    }
  }

  bool at_number() const {
    if (pos_ >= text_.size()) return false;
    const char c = text_[pos_];
    return std::isdigit(static_cast<unsigned char>(c)) || c == '.';
  }

  double read_number() {
    const std::size_t start = pos_;
    auto digits = [&] {
      while (pos_ < text_.size() && std::isdigit(static_cast<unsigned char>(text_[pos_]))) ++pos_;
    };
    digits();
    if (pos_ < text_.size() && text_[pos_] == '.') {
      ++pos_;
      digits();
    }
    if (pos_ < text_.size() && (text_[pos_] == 'e' || text_[pos_] == 'E')) {
      std::size_t save = pos_;
      ++pos_;
      if (pos_ < text_.size() && (text_[pos_] == '+' || text_[pos_] == '-')) ++pos_;
      if (pos_ < text_.size() && std::isdigit(static_cast<unsigned char>(text_[pos_]))) {
        digits();
      } else {
        pos_ = save;
      }
    }
    double v = 0.0;
    const char* first = text_.data() + start;
    const char* last = text_.data() + pos_;
    auto [ptr, ec] = std::from_chars(first, last, v);
    if (ec != std::errc() || ptr != last) throw ParseError("malformed number", start);
    return v;
  }

  Expr parse_expr() {
    Expr lhs = parse_term();
    for (;;) {
      if (accept('+')) {
        lhs = binary(BinaryOp::add, lhs, parse_term());
      } else if (accept('-')) {
        lhs = binary(BinaryOp::sub, lhs, parse_term());
      } else {
        return lhs;
      }
    }
  }

  Expr parse_term() {
    Expr lhs = parse_unary();
    for (;;) {
      if (accept('*')) {
        lhs = binary(BinaryOp::mul, lhs, parse_unary());
      } else if (accept('/')) {
        lhs = binary(BinaryOp::div, lhs, parse_unary());
      } else {
        return lhs;
      }
    }
  }

  Expr parse_unary() {
    if (!accept('-')) return parse_power();
    // A minus directly on a literal (not raised to a power) is a negative
    // constant rather than a negation node.
    skip_ws();
    if (at_number()) {
      const std::size_t save = pos_;
      const double v = read_number();
      skip_ws();
      if (pos_ >= text_.size() || text_[pos_] != '^') return constant(-v);
      pos_ = save;
    }
    return negate(parse_unary());
  }

  Expr parse_power() {
    Expr base = parse_primary();
    if (!accept('^')) return base;
    skip_ws();
    const std::size_t at = pos_;
    Expr exponent = simplify(parse_unary());
    if (!is_const(exponent) || !is_integral(exponent->value)) throw ParseError("non-integer exponent", at);
    return binary(BinaryOp::pow, base, exponent);
  }

  Expr parse_primary() {
    skip_ws();
    if (pos_ >= text_.size()) throw ParseError("unexpected end of input", pos_);
    const char c = text_[pos_];
    if (c == '(') {
      ++pos_;
      Expr inner = parse_expr();
      expect(')');
      return inner;
    }
    if (at_number()) return constant(read_number());
    if (std::isalpha(static_cast<unsigned char>(c)) || c == '_') return parse_identifier();
    throw ParseError(std::string("unexpected '") + c + "'", pos_);
  }

  Expr parse_identifier() {
    const std::size_t start = pos_;
    while (pos_ < text_.size() &&
           (std::isalnum(static_cast<unsigned char>(text_[pos_])) || text_[pos_] == '_'))
      ++pos_;
    const std::string_view name = text_.substr(start, pos_ - start);

    if (name.size() > 1 && name[0] == 'x') {
      bool all_digits = true;
      for (char d : name.substr(1)) all_digits = all_digits && std::isdigit(static_cast<unsigned char>(d));
      if (all_digits) {
        int index = 0;
        auto [ptr, ec] = std::from_chars(name.data() + 1, name.data() + name.size(), index);
        if (ec != std::errc() || index < 1)
          throw ParseError("invalid variable '" + std::string(name) + "'", start);
        if (index > dim_)
          throw ParseError("variable index " + std::to_string(index) + " exceeds dimension " +
                               std::to_string(dim_),
                           start);
        return variable(index);
      }
    }

    static constexpr std::pair<std::string_view, Func> kFuncs[] = {
        {"sqrt", Func::sqrt}, {"sin", Func::sin}, {"cos", Func::cos}, {"exp", Func::exp}, {"log", Func::log}};
    for (const auto& [fname, f] : kFuncs) {
      if (name == fname) {
        expect('(');
        Expr arg = parse_expr();
        expect(')');
        return call(f, arg);
      }
    }
    throw ParseError("unknown identifier '" + std::string(name) + "'", start);
  }

  std::string_view text_;
  int dim_;
  std::size_t pos_ = 0;
};

// --------------------------------------------------------------- printer

int precedence(const Expr& e) {
  switch (e->kind) {
    case Kind::constant:
    case Kind::variable:
    case Kind::call: return 5;
    case Kind::unary: return 3;
    case Kind::binary:
      switch (e->binary_op) {
        case BinaryOp::add:
        case BinaryOp::sub: return 1;
        case BinaryOp::mul:
        case BinaryOp::div: return 2;
        case BinaryOp::pow: return 4;
      }
  }
  return 0;
}

std::string format_number(double v) {
  char buf[64];
  auto [ptr, ec] = std::to_chars(buf, buf + sizeof buf, v);
  std::string s(buf, ptr);
  if (v < 0.0 || (v == 0.0 && std::signbit(v))) s = "(" + s + ")";
  return s;
}

void print(const Expr& e, std::string& out);

void print_wrapped(const Expr& e, bool wrap, std::string& out) {
  if (wrap) out += '(';
  print(e, out);
  if (wrap) out += ')';
}

void print(const Expr& e, std::string& out) {
  switch (e->kind) {
    case Kind::constant: out += format_number(e->value); return;
    case Kind::variable: out += "x" + std::to_string(e->var); return;
    case Kind::call:
      out += func_name(e->func);
      out += '(';
      print(e->children[0], out);
      out += ')';
      return;
    case Kind::unary: {
      const Expr& a = e->children[0];
      out += '-';
      print_wrapped(a, is_const(a) || precedence(a) < 3, out);
      return;
    }
    case Kind::binary: {
      const Expr& a = e->children[0];
      const Expr& b = e->children[1];
      if (e->binary_op == BinaryOp::pow) {
        print_wrapped(a, precedence(a) <= 4 && !(is_const(a) && a->value >= 0.0), out);
        out += '^';
        out += format_number(b->value);
        return;
      }
      const int p = precedence(e);
      static constexpr char kSymbols[] = {'+', '-', '*', '/'};
      print_wrapped(a, precedence(a) < p, out);
      out += kSymbols[static_cast<int>(e->binary_op)];
      print_wrapped(b, precedence(b) <= p, out);
      return;
    }
  }
}

std::string point_text(const Expr& e) { return to_string(e); }

}  // namespace

// ------------------------------------------------------------ construction

Expr constant(double v) {
  auto n = make_node(Kind::constant);
  n->value = v;
  return Expr(std::move(n));
}

Expr variable(int index) {
  auto n = make_node(Kind::variable);
  n->var = index;
  return Expr(std::move(n));
}

Expr negate(Expr a) {
  auto n = make_node(Kind::unary);
  n->unary_op = UnaryOp::neg;
  n->children = {std::move(a)};
  return Expr(std::move(n));
}

Expr binary(BinaryOp op, Expr a, Expr b) {
  auto n = make_node(Kind::binary);
  n->binary_op = op;
  n->children = {std::move(a), std::move(b)};
  return Expr(std::move(n));
}

Expr call(Func f, Expr a) {
  auto n = make_node(Kind::call);
  n->func = f;
  n->children = {std::move(a)};
  return Expr(std::move(n));
}

std::string_view func_name(Func f) {
  switch (f) {
    case Func::sqrt: return "sqrt";
    case Func::sin: return "sin";
    case Func::cos: return "cos";
    case Func::exp: return "exp";
    case Func::log: return "log";
  }
  return "?";
}

Expr parse(std::string_view text, int dim) {
  if (dim < 1) throw std::invalid_argument("expression dimension must be >= 1");
  return Parser(text, dim).run();
}

std::string to_string(const Expr& e) {
  std::string out;
  print(e, out);
  return out;
}

// ---------------------------------------------------------------- calculus

Expr differentiate(const Expr& e, int var) {
  if (var < 1) throw std::invalid_argument("variable index must be >= 1");
  switch (e->kind) {
    case Kind::constant: return constant(0.0);
    case Kind::variable: return constant(e->var == var ? 1.0 : 0.0);
    case Kind::unary: return s_neg(differentiate(e->children[0], var));
    case Kind::call: {
      const Expr& u = e->children[0];
      Expr du = differentiate(u, var);
      if (is_const(du, 0.0)) return du;
      switch (e->func) {
        case Func::sqrt: return s_div(du, s_mul(constant(2.0), e));
        case Func::sin: return s_mul(s_call(Func::cos, u), du);
        case Func::cos: return s_neg(s_mul(s_call(Func::sin, u), du));
        case Func::exp: return s_mul(e, du);
        case Func::log: return s_div(du, u);
      }
      break;
    }
    case Kind::binary: {
      const Expr& u = e->children[0];
      const Expr& v = e->children[1];
      switch (e->binary_op) {
        case BinaryOp::add: return s_add(differentiate(u, var), differentiate(v, var));
        case BinaryOp::sub: return s_sub(differentiate(u, var), differentiate(v, var));
        case BinaryOp::mul:
          return s_add(s_mul(differentiate(u, var), v), s_mul(u, differentiate(v, var)));
        case BinaryOp::div: {
          Expr du = differentiate(u, var);
          Expr dv = differentiate(v, var);
          if (is_const(dv, 0.0)) return s_div(du, v);
          return s_div(s_sub(s_mul(du, v), s_mul(u, dv)), s_pow(v, constant(2.0)));
        }
        case BinaryOp::pow: {
          const double k = v->value;
          Expr du = differentiate(u, var);
          return s_mul(s_mul(constant(k), s_pow(u, constant(k - 1.0))), du);
        }
      }
      break;
    }
  }
  return constant(0.0);
}

Expr simplify(const Expr& e) {
  switch (e->kind) {
    case Kind::constant:
    case Kind::variable: return e;
    case Kind::unary: return s_neg(simplify(e->children[0]));
    case Kind::call: return s_call(e->func, simplify(e->children[0]));
    case Kind::binary: {
      Expr a = simplify(e->children[0]);
      Expr b = simplify(e->children[1]);
      switch (e->binary_op) {
        case BinaryOp::add: return s_add(a, b);
        case BinaryOp::sub: return s_sub(a, b);
        case BinaryOp::mul: return s_mul(a, b);
        case BinaryOp::div: return s_div(a, b);
        case BinaryOp::pow: return s_pow(a, b);
      }
    }
  }
  return e;
}

double evaluate(const Expr& e, std::span<const double> p) {
  auto fail = [&](const char* what) -> DomainError {
    return DomainError(what, point_text(e), std::vector<double>(p.begin(), p.end()));
  };
  switch (e->kind) {
    case Kind::constant: return e->value;
    case Kind::variable:
      if (static_cast<std::size_t>(e->var) > p.size())
        throw std::invalid_argument("point has fewer coordinates than variable x" + std::to_string(e->var));
      return p[static_cast<std::size_t>(e->var) - 1];
    case Kind::unary: return -evaluate(e->children[0], p);
    case Kind::call: {
      const double a = evaluate(e->children[0], p);
      switch (e->func) {
        case Func::sqrt:
          if (a < 0.0) throw fail("sqrt of negative value");
          return std::sqrt(a);
        case Func::sin: return std::sin(a);
        case Func::cos: return std::cos(a);
        case Func::exp: return std::exp(a);
        case Func::log:
          if (a <= 0.0) throw fail("log of nonpositive value");
          return std::log(a);
      }
      break;
    }
    case Kind::binary: {
      const double a = evaluate(e->children[0], p);
      const double b = evaluate(e->children[1], p);
      switch (e->binary_op) {
        case BinaryOp::add: return a + b;
        case BinaryOp::sub: return a - b;
        case BinaryOp::mul: return a * b;
        case BinaryOp::div:
          if (b == 0.0) throw fail("division by zero");
          return a / b;
        case BinaryOp::pow:
          if (a == 0.0 && b < 0.0) throw fail("division by zero");
          return int_power(a, b);
      }
      break;
    }
  }
  return 0.0;
}

bool structurally_equal(const Expr& a, const Expr& b) {
  if (a->kind != b->kind) return false;
  switch (a->kind) {
    case Kind::constant:
      if (a->value != b->value || std::signbit(a->value) != std::signbit(b->value)) return false;
      break;
    case Kind::variable:
      if (a->var != b->var) return false;
      break;
    case Kind::unary:
      if (a->unary_op != b->unary_op) return false;
      break;
    case Kind::binary:
      if (a->binary_op != b->binary_op) return false;
      break;
    case Kind::call:
      if (a->func != b->func) return false;
      break;
  }
  if (a->children.size() != b->children.size()) return false;
  for (std::size_t i = 0; i < a->children.size(); ++i)
    if (!structurally_equal(a->children[i], b->children[i])) return false;
  return true;
}

int max_variable(const Expr& e) {
  int m = e->kind == Kind::variable ? e->var : 0;
  for (const auto& c : e->children) m = std::max(m, max_variable(c));
  return m;
}

std::size_t node_count(const Expr& e) {
  std::size_t n = 1;
  for (const auto& c : e->children) n += node_count(c);
  return n;
}

}  // namespace expr
}  // namespace conflat
