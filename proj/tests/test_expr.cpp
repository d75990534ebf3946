#include "conflat/errors.hpp"
#include "conflat/expr.hpp"

#include <doctest.h>

#include <cmath>
#include <random>
#include <string>
#include <vector>

using namespace conflat;
using namespace conflat::expr;

namespace {

double at(const std::string& text, int dim, std::vector<double> p) { return evaluate(parse(text, dim), p); }

// Random grammar-valid text over x1..x<dim>. Arguments to sqrt/log are kept
// positive so evaluation stays in the domain near the unit cube.
std::string random_text(std::mt19937_64& g, int dim, int depth) {
  std::uniform_int_distribution<int> pick(0, depth <= 0 ? 1 : 9);
  const int k = pick(g);
  auto var = [&] { return "x" + std::to_string(1 + static_cast<int>(g() % dim)); };
  switch (k) {
    case 0: return var();
    case 1: return std::to_string(static_cast<int>(g() % 7)) + "." + std::to_string(static_cast<int>(g() % 100));
    case 2: return "(" + random_text(g, dim, depth - 1) + " + " + random_text(g, dim, depth - 1) + ")";
    case 3: return random_text(g, dim, depth - 1) + " - " + random_text(g, dim, depth - 1);
    case 4: return random_text(g, dim, depth - 1) + "*" + random_text(g, dim, depth - 1);
    case 5: return random_text(g, dim, depth - 1) + "/(2 + " + var() + "^2)";
    case 6: return "(" + random_text(g, dim, depth - 1) + ")^" + std::to_string(static_cast<int>(g() % 4));
    case 7: return "-" + random_text(g, dim, depth - 1);
    case 8: return std::string(g() % 2 ? "sin(" : "cos(") + random_text(g, dim, depth - 1) + ")";
    default: return std::string(g() % 2 ? "sqrt(" : "log(") + "1 + " + var() + "^2)";
  }
}

std::vector<double> random_point(std::mt19937_64& g, int dim) {
  std::uniform_real_distribution<double> u(-0.9, 0.9);
  std::vector<double> p(dim);
  for (auto& v : p) v = u(g);
  return p;
}

}  // namespace

TEST_CASE("parse and evaluate basics") {
  CHECK(at("x1^2 + x2^2", 2, {1, 2}) == 5.0);
  CHECK(at("sqrt(1 - (2*x1^2 + 1.5*x2^2))", 2, {0, 0}) == 1.0);
  CHECK(at("2^3^2", 1, {0}) == 512.0);  // right associative
  CHECK(at("-2^2", 1, {0}) == -4.0);    // ^ binds tighter than unary minus
  CHECK(at("(-2)^2", 1, {0}) == 4.0);
  CHECK(at("x1^-1", 1, {4}) == 0.25);
  CHECK(at("1 - 2 - 3", 1, {0}) == -4.0);
  CHECK(at("8/4/2", 1, {0}) == 1.0);
  CHECK(at("1.5e2 + .5", 1, {0}) == 150.5);
  CHECK(at("exp(0) + log(1) + sin(0) + cos(0)", 1, {0}) == 2.0);
  CHECK(max_variable(parse("x1 + x3", 3)) == 3);
}

TEST_CASE("parse errors") {
  CHECK_THROWS_AS(parse("x1 + x3", 2), ParseError);
  CHECK_THROWS_AS(parse("x0", 2), ParseError);
  CHECK_THROWS_AS(parse("y1", 2), ParseError);
  CHECK_THROWS_AS(parse("x1^0.5", 1), ParseError);
  CHECK_THROWS_AS(parse("x1^x1", 1), ParseError);
  CHECK_THROWS_AS(parse("sqrt x1", 1), ParseError);
  CHECK_THROWS_AS(parse("", 1), ParseError);
  CHECK_THROWS_AS(parse("(x1", 1), ParseError);
  CHECK_THROWS_AS(parse("x1 +", 1), ParseError);
  CHECK_THROWS_AS(parse("x1 x2", 2), ParseError);
  CHECK_THROWS_AS(parse("tan(x1)", 1), ParseError);

  try {
    parse("x1 + * x2", 2);
    FAIL("expected ParseError");
  } catch (const ParseError& e) {
    CHECK(e.offset() == 5);
  }
  try {
    parse("x1 + x3", 2);
    FAIL("expected ParseError");
  } catch (const ParseError& e) {
    CHECK(std::string(e.what()).find("exceeds dimension") != std::string::npos);
  }
}

TEST_CASE("domain violations are errors, not NaN") {
  CHECK_THROWS_AS(at("sqrt(1 - x1^2)", 2, {2, 0}), DomainError);
  CHECK_THROWS_AS(at("log(x1)", 1, {0}), DomainError);
  CHECK_THROWS_AS(at("log(x1)", 1, {-1}), DomainError);
  CHECK_THROWS_AS(at("1/x1", 1, {0}), DomainError);
  CHECK_THROWS_AS(at("x1^-2", 1, {0}), DomainError);
  try {
    at("x2 + sqrt(x1)", 2, {-3, 1});
    FAIL("expected DomainError");
  } catch (const DomainError& e) {
    CHECK(e.subexpression() == "sqrt(x1)");
    REQUIRE(e.point().size() == 2);
    CHECK(e.point()[0] == -3.0);
  }
}

TEST_CASE("differentiate examples") {
  const Expr d1 = simplify(differentiate(parse("x1^2 + x2^2", 2), 1));
  CHECK(structurally_equal(d1, parse("2*x1", 2)));
  const Expr d2 = differentiate(parse("sqrt(1 - x1^2)", 1), 1);
  for (double x : {-0.7, 0.0, 0.3, 0.9}) {
    std::vector<double> p{x};
    CHECK(evaluate(d2, p) == doctest::Approx(-x / std::sqrt(1 - x * x)).epsilon(1e-14));
  }
  CHECK(structurally_equal(differentiate(parse("x2", 2), 1), constant(0)));
  CHECK(evaluate(differentiate(parse("log(x1)*exp(x1)", 1), 1), std::vector<double>{2.0}) ==
        doctest::Approx(std::exp(2.0) / 2 + std::log(2.0) * std::exp(2.0)));
  CHECK(evaluate(differentiate(parse("x1^-3", 1), 1), std::vector<double>{2.0}) == doctest::Approx(-3.0 / 16));
}

TEST_CASE("simplify examples") {
  CHECK(structurally_equal(simplify(parse("0*x1 + 1*x2", 2)), parse("x2", 2)));
  CHECK(structurally_equal(simplify(parse("(2+3)*x1", 1)), parse("5*x1", 1)));
  CHECK(structurally_equal(simplify(parse("x1^1", 1)), parse("x1", 1)));
  CHECK(structurally_equal(simplify(parse("x1^0", 1)), constant(1)));
  CHECK(structurally_equal(simplify(parse("0 + x1", 1)), parse("x1", 1)));
  // undefined constants stay unfolded so evaluation still reports them
  CHECK_THROWS_AS(evaluate(simplify(parse("1/0", 1)), std::vector<double>{0}), DomainError);

  std::mt19937_64 g(3);
  const Expr a = simplify(differentiate(parse("x1^2", 1), 1));
  const Expr b = parse("2*x1", 1);
  std::uniform_real_distribution<double> u(-10, 10);
  for (int i = 0; i < 100; ++i) {
    std::vector<double> p{u(g)};
    CHECK(evaluate(a, p) == evaluate(b, p));
  }
}

TEST_CASE("printer") {
  CHECK(to_string(parse("x1 - (x2 - x3)", 3)) == "x1-(x2-x3)");
  CHECK(to_string(parse("(x1 - x2) - x3", 3)) == "x1-x2-x3");
  CHECK(to_string(parse("(x1^2)^3", 1)) == "(x1^2)^3");
  CHECK(to_string(parse("x1^2^3", 1)) == "x1^8");  // exponent folded at parse time
  CHECK(to_string(parse("-(x1 + 1)", 1)) == "-(x1+1)");
  CHECK(to_string(parse("0.1", 1)) == "0.1");
}

TEST_CASE("property: parse-print-parse round trip") {
  std::mt19937_64 g(11);
  for (int i = 0; i < 500; ++i) {
    const int dim = 1 + static_cast<int>(g() % 4);
    const std::string t = random_text(g, dim, 4);
    const Expr e = parse(t, dim);
    const std::string s = to_string(e);
    INFO(t << "  ->  " << s);
    const Expr e2 = parse(s, dim);
    CHECK(structurally_equal(e, e2));
    CHECK(to_string(e2) == s);
  }
}

TEST_CASE("property: mixed partials commute") {
  std::mt19937_64 g(12);
  int compared = 0;
  for (int i = 0; i < 200; ++i) {
    const int dim = 2 + static_cast<int>(g() % 3);
    const Expr e = parse(random_text(g, dim, 4), dim);
    const int a = 1 + static_cast<int>(g() % dim), b = 1 + static_cast<int>(g() % dim);
    const Expr dab = differentiate(differentiate(e, a), b);
    const Expr dba = differentiate(differentiate(e, b), a);
    const auto p = random_point(g, dim);
    double u, v;
    try {
      u = evaluate(dab, p);
      v = evaluate(dba, p);
    } catch (const DomainError&) {
      continue;
    }
    ++compared;
    CHECK(std::abs(u - v) <= 1e-9 * std::max(1.0, std::abs(u)));
  }
  CHECK(compared > 150);
}

TEST_CASE("property: simplify changes values by at most 4 ulps") {
  std::mt19937_64 g(13);
  int compared = 0;
  for (int i = 0; i < 300; ++i) {
    const int dim = 1 + static_cast<int>(g() % 3);
    const Expr e = differentiate(parse(random_text(g, dim, 3), dim), 1);
    const Expr s = simplify(e);
    const auto p = random_point(g, dim);
    double u, v;
    try {
      u = evaluate(e, p);
      v = evaluate(s, p);
    } catch (const DomainError&) {
      continue;
    }
    ++compared;
    const double ulp = std::nextafter(std::abs(u), INFINITY) - std::abs(u);
    CHECK(std::abs(u - v) <= 4 * ulp + 1e-300);
  }
  CHECK(compared > 200);
}

TEST_CASE("property: simplify on unsimplified raw trees") {
  std::mt19937_64 g(14);
  int compared = 0;
  for (int i = 0; i < 300; ++i) {
    const int dim = 1 + static_cast<int>(g() % 3);
    const Expr core = parse(random_text(g, dim, 3), dim);
    // wrap in identities the smart constructors would have removed
    const Expr raw = binary(BinaryOp::add, binary(BinaryOp::mul, constant(0), variable(1)),
                            binary(BinaryOp::mul, binary(BinaryOp::pow, constant(1), constant(3)),
                                   binary(BinaryOp::pow, core, constant(1))));
    const Expr s = simplify(raw);
    CHECK(node_count(s) <= node_count(core));
    const auto p = random_point(g, dim);
    double u, v;
    try {
      u = evaluate(raw, p);
      v = evaluate(s, p);
    } catch (const DomainError&) {
      continue;
    }
    ++compared;
    const double ulp = std::nextafter(std::abs(u), INFINITY) - std::abs(u);
    CHECK(std::abs(u - v) <= 4 * ulp + 1e-300);
  }
  CHECK(compared > 200);
}
