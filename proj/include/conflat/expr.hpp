#pragma once

// Scalar expression language for graph functions r(x1, ..., xn).
//
// Grammar (highest precedence first):
//   primary := number | xK | func '(' expr ')' | '(' expr ')'
//   power   := primary ['^' unary]          right-associative, integer exponent
//   unary   := '-' unary | power
//   term    := unary (('*' | '/') unary)*
//   expr    := term (('+' | '-') term)*
// func is one of sqrt, sin, cos, exp, log.

#include <memory>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace conflat::expr {

enum class Kind { constant, variable, unary, binary, call };
enum class UnaryOp { neg };
enum class BinaryOp { add, sub, mul, div, pow };
enum class Func { sqrt, sin, cos, exp, log };

struct Node;

/// Immutable expression tree handle. Copies share structure.
class Expr {
 public:
  Expr() = default;
  explicit Expr(std::shared_ptr<const Node> node) : node_(std::move(node)) {}

  const Node& node() const { return *node_; }
  const Node* operator->() const { return node_.get(); }
  explicit operator bool() const { return static_cast<bool>(node_); }

 private:
  std::shared_ptr<const Node> node_;
};

struct Node {
  Kind kind = Kind::constant;
  double value = 0.0;  // constant payload
  int var = 0;         // 1-based variable index
  UnaryOp unary_op = UnaryOp::neg;
  BinaryOp binary_op = BinaryOp::add;
  Func func = Func::sqrt;
  std::vector<Expr> children;
};

// Raw constructors; no simplification.
Expr constant(double v);
Expr variable(int index);
Expr negate(Expr a);
Expr binary(BinaryOp op, Expr a, Expr b);
Expr call(Func f, Expr a);

/// Parses `text` over variables x1..x<dim>. Throws ParseError.
Expr parse(std::string_view text, int dim);

/// Canonical text form; parse(to_string(e), n) reproduces e structurally.
std::string to_string(const Expr& e);

/// Exact symbolic partial derivative with respect to x<var> (1-based).
/// The result has trivial identities folded away.
Expr differentiate(const Expr& e, int var);

/// Constant folding and the identities 0+e, e+0, e-0, 0*e, 1*e, e/1, e^1, e^0.
Expr simplify(const Expr& e);

/// IEEE double evaluation at p (p[0] is x1). Throws DomainError on
/// sqrt of a negative, log of a nonpositive, or division by zero.
double evaluate(const Expr& e, std::span<const double> p);

bool structurally_equal(const Expr& a, const Expr& b);

/// Largest variable index referenced (0 if none).
int max_variable(const Expr& e);

std::size_t node_count(const Expr& e);

std::string_view func_name(Func f);

}  // namespace conflat::expr
