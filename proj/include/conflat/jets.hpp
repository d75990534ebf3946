#pragma once

// Point-local derivative data of a graph function r: R^n -> R, from three
// providers: closed-form surfaces, parsed expressions, and black-box
// functions through finite differences.

#include "conflat/expr.hpp"
#include "conflat/tensor.hpp"

#include <functional>
#include <optional>
#include <string>
#include <utility>
#include <vector>

namespace conflat {

/// Derivatives of r up to order 2 or 3 at x, plus b = 1 + |grad r|^2.
struct SurfaceJet {
  int n = 0;
  Vector x;
  double r = 0.0;
  Vector grad;
  Matrix hess;
  std::optional<Tensor3> third;
  double b = 1.0;

  int order() const { return third ? 3 : 2; }
};

/// Builds a jet from raw derivative data: symmetrizes hess (and third, if
/// given) and sets b from grad.
SurfaceJet make_jet(Vector x, double r, Vector grad, Matrix hess, std::optional<Tensor3> third = std::nullopt);

enum class SurfaceKind { cylinder, paraboloid, ellipsoid, graph_expr, graph_fn };

std::string to_string(SurfaceKind kind);

/// Axis-aligned box [lo_i, hi_i].
struct Box {
  std::vector<std::pair<double, double>> bounds;

  int dim() const { return static_cast<int>(bounds.size()); }
  bool contains(const Vector& x, double margin = 0.0) const;
};

using ScalarField = std::function<double(const Vector&)>;

/// A graph hypersurface x -> (x, r(x)) over a sampling box.
///  cylinder:   r = sqrt(1 - x_n^2)
///  paraboloid: r = |x|^2
///  ellipsoid:  r = sqrt(1 - sum a_i x_i^2), 0 < a_i != 1
struct SurfaceSpec {
  SurfaceKind kind = SurfaceKind::paraboloid;
  int n = 0;
  std::vector<double> a;
  expr::Expr expr;
  ScalarField fn;
  Box domain;
  std::string id;
};

SurfaceSpec make_cylinder(int n, Box domain = {});
SurfaceSpec make_paraboloid(int n, Box domain = {});
SurfaceSpec make_ellipsoid(std::vector<double> a, Box domain = {});
SurfaceSpec make_graph_expr(expr::Expr e, int n, Box domain);
SurfaceSpec make_graph_fn(ScalarField f, int n, Box domain);

/// Validates kind-specific parameters and the domain box. Throws SpecError.
void validate_spec(const SurfaceSpec& spec);

/// Interior margin for every domain-membership test.
inline constexpr double kDomainMargin = 1e-9;

/// Natural-domain constraint of the surface kind (|x_n| < 1 for the cylinder,
/// 1 - sum a_i x_i^2 > 0 for the ellipsoid), with kDomainMargin.
bool in_surface_domain(const SurfaceSpec& spec, const Vector& x);

/// Box membership and natural-domain membership together.
bool in_sampling_domain(const SurfaceSpec& spec, const Vector& x);

/// Graph height r(x) for any kind.
double surface_height(const SurfaceSpec& spec, const Vector& x);

/// Closed-form jet for cylinder, paraboloid, ellipsoid.
/// Throws OutOfDomainError outside the surface's natural domain.
SurfaceJet builtin_jet(const SurfaceSpec& spec, const Vector& x, int order);

/// Symbolic derivatives of an expression, prepared once and evaluated per
/// point. Only i <= j <= k partials are built; the rest are mirrored.
class ExprJetProvider {
 public:
  ExprJetProvider(expr::Expr e, int n, int order);

  SurfaceJet operator()(const Vector& x) const;

  int dim() const { return n_; }
  int order() const { return order_; }

 private:
  expr::Expr e_;
  int n_;
  int order_;
  std::vector<expr::Expr> grad_;
  std::vector<expr::Expr> hess_;   // packed upper triangle
  std::vector<expr::Expr> third_;  // packed i <= j <= k
};

SurfaceJet expr_jet(const expr::Expr& e, int n, const Vector& x, int order);

/// Central-difference jet of a black-box function.
/// Steps are eps^(1/3), eps^(1/4), eps^(1/5) times (1 + |x_i|) for orders 1, 2, 3.
/// Throws OutOfDomainError if f fails on a stencil point.
SurfaceJet fd_jet(const ScalarField& f, const Vector& x, int order);

/// Dispatches to the provider matching spec.kind.
SurfaceJet surface_jet(const SurfaceSpec& spec, const Vector& x, int order);

using JetField = std::function<SurfaceJet(const Vector&)>;

/// Like surface_jet, but prepares per-surface state (symbolic derivative
/// trees) once for repeated evaluation.
JetField make_jet_field(const SurfaceSpec& spec, int order);

/// Per-order comparison of two jets (order 0 = value, 1 = grad, 2 = hess,
/// 3 = third partials, present only when both jets carry them).
struct JetDiscrepancy {
  struct Order {
    int order = 0;
    double max_abs = 0.0;
    double max_rel = 0.0;  // max_abs / max(1, max |reference entry|)
    std::string worst;     // e.g. "hess[1][2]"
  };
  std::vector<Order> orders;
  double tol = 0.0;
  bool pass = true;
};

JetDiscrepancy validate_jet(const SurfaceJet& reference, const SurfaceJet& other, double tol);

}  // namespace conflat
