#include "conflat/jets.hpp"

#include "conflat/errors.hpp"

#include <array>
#include <cmath>
#include <cstdio>
#include <limits>
#include <sstream>

namespace conflat {

namespace {

constexpr double kEps = std::numeric_limits<double>::epsilon();

std::string point_string(const Vector& x) {
  std::ostringstream os;
  os << '(';
  for (Eigen::Index i = 0; i < x.size(); ++i) os << (i ? ", " : "") << x[i];
  os << ')';
  return os.str();
}

void symmetrize_third(Tensor3& t) {
  const int n = t.dim();
  for (int i = 0; i < n; ++i)
    for (int j = i; j < n; ++j)
      for (int k = j; k < n; ++k) {
        const double avg = (t(i, j, k) + t(i, k, j) + t(j, i, k) + t(j, k, i) + t(k, i, j) + t(k, j, i)) / 6.0;
        t(i, j, k) = t(i, k, j) = t(j, i, k) = t(j, k, i) = t(k, i, j) = t(k, j, i) = avg;
      }
}

Box default_box(SurfaceKind kind, int n, const std::vector<double>& a) {
  Box box;
  for (int i = 0; i < n; ++i) {
    switch (kind) {
      case SurfaceKind::cylinder:
        box.bounds.emplace_back(i == n - 1 ? std::pair{-0.9, 0.9} : std::pair{-1.0, 1.0});
        break;
      case SurfaceKind::ellipsoid: {
        const double half = 0.9 / std::sqrt(n * a[static_cast<std::size_t>(i)]);
        box.bounds.emplace_back(-half, half);
        break;
      }
      default: box.bounds.emplace_back(-1.0, 1.0); break;
    }
  }
  return box;
}

double ellipsoid_radicand(const std::vector<double>& a, const Vector& x) {
  double s = 1.0;
  for (Eigen::Index i = 0; i < x.size(); ++i) s -= a[static_cast<std::size_t>(i)] * x[i] * x[i];
  return s;
}

void check_point(const SurfaceSpec& spec, const Vector& x) {
  if (x.size() != spec.n)
    throw std::invalid_argument("point dimension " + std::to_string(x.size()) + " does not match surface dimension " +
                                std::to_string(spec.n));
  if (!x.allFinite()) throw std::invalid_argument("point has non-finite coordinates");
}

}  // namespace

std::string to_string(SurfaceKind kind) {
  switch (kind) {
    case SurfaceKind::cylinder: return "cylinder";
    case SurfaceKind::paraboloid: return "paraboloid";
    case SurfaceKind::ellipsoid: return "ellipsoid";
    case SurfaceKind::graph_expr: return "graph-expr";
    case SurfaceKind::graph_fn: return "graph-fn";
  }
  return "unknown";
}

bool Box::contains(const Vector& x, double margin) const {
  if (x.size() != dim()) return false;
  for (int i = 0; i < dim(); ++i)
    if (!(x[i] > bounds[static_cast<std::size_t>(i)].first + margin &&
          x[i] < bounds[static_cast<std::size_t>(i)].second - margin))
      return false;
  return true;
}

SurfaceJet make_jet(Vector x, double r, Vector grad, Matrix hess, std::optional<Tensor3> third) {
  SurfaceJet jet;
  jet.n = static_cast<int>(x.size());
  if (grad.size() != jet.n || hess.rows() != jet.n || hess.cols() != jet.n ||
      (third && third->dim() != jet.n))
    throw std::invalid_argument("jet component dimensions disagree");
  jet.x = std::move(x);
  jet.r = r;
  jet.b = 1.0 + grad.squaredNorm();
  jet.grad = std::move(grad);
  jet.hess = 0.5 * (hess + hess.transpose());
  if (third) {
    symmetrize_third(*third);
    jet.third = std::move(third);
  }
  return jet;
}

// ------------------------------------------------------------------ specs

SurfaceSpec make_cylinder(int n, Box domain) {
  SurfaceSpec s;
  s.kind = SurfaceKind::cylinder;
  s.n = n;
  s.domain = domain.bounds.empty() ? default_box(s.kind, n, {}) : std::move(domain);
  s.id = "cylinder-n" + std::to_string(n);
  validate_spec(s);
  return s;
}

SurfaceSpec make_paraboloid(int n, Box domain) {
  SurfaceSpec s;
  s.kind = SurfaceKind::paraboloid;
  s.n = n;
  s.domain = domain.bounds.empty() ? default_box(s.kind, n, {}) : std::move(domain);
  s.id = "paraboloid-n" + std::to_string(n);
  validate_spec(s);
  return s;
}

SurfaceSpec make_ellipsoid(std::vector<double> a, Box domain) {
  SurfaceSpec s;
  s.kind = SurfaceKind::ellipsoid;
  s.n = static_cast<int>(a.size());
  s.a = std::move(a);
  s.domain = domain.bounds.empty() ? default_box(s.kind, s.n, s.a) : std::move(domain);
  s.id = "ellipsoid-n" + std::to_string(s.n);
  validate_spec(s);
  return s;
}

SurfaceSpec make_graph_expr(expr::Expr e, int n, Box domain) {
  SurfaceSpec s;
  s.kind = SurfaceKind::graph_expr;
  s.n = n;
  s.expr = std::move(e);
  s.domain = std::move(domain);
  s.id = "graph-expr-n" + std::to_string(n);
  validate_spec(s);
  return s;
}

SurfaceSpec make_graph_fn(ScalarField f, int n, Box domain) {
  SurfaceSpec s;
  s.kind = SurfaceKind::graph_fn;
  s.n = n;
  s.fn = std::move(f);
  s.domain = std::move(domain);
  s.id = "graph-fn-n" + std::to_string(n);
  validate_spec(s);
  return s;
}

void validate_spec(const SurfaceSpec& spec) {
  if (spec.n < 1) throw SpecError("surface dimension must be >= 1");
  if (spec.domain.dim() != spec.n)
    throw SpecError("domain box has " + std::to_string(spec.domain.dim()) + " axes, expected " +
                    std::to_string(spec.n));
  for (const auto& [lo, hi] : spec.domain.bounds)
    if (!(std::isfinite(lo) && std::isfinite(hi) && lo < hi)) throw SpecError("domain box axis must satisfy lo < hi");

  switch (spec.kind) {
    case SurfaceKind::cylinder: {
      const auto [lo, hi] = spec.domain.bounds.back();
      if (!(lo > -1.0 && hi < 1.0)) throw SpecError("cylinder domain requires |x_n| < 1");
      break;
    }
    case SurfaceKind::ellipsoid: {
      if (static_cast<int>(spec.a.size()) != spec.n)
        throw SpecError("ellipsoid needs " + std::to_string(spec.n) + " coefficients");
      for (double ai : spec.a) {
        if (!(ai > 0.0)) throw SpecError("ellipsoid coefficients must be positive");
        if (ai == 1.0) throw SpecError("ellipsoid coefficients must differ from 1 (0 < a_i != 1)");
      }
      double worst = 1.0;
      for (int i = 0; i < spec.n; ++i) {
        const auto [lo, hi] = spec.domain.bounds[static_cast<std::size_t>(i)];
        worst -= spec.a[static_cast<std::size_t>(i)] * std::max(lo * lo, hi * hi);
      }
      if (!(worst > 0.0)) throw SpecError("ellipsoid domain box leaves the region 1 - sum a_i x_i^2 > 0");
      break;
    }
    case SurfaceKind::graph_expr:
      if (!spec.expr) throw SpecError("graph-expr surface has no expression");
      if (expr::max_variable(spec.expr) > spec.n) throw SpecError("expression references a variable beyond n");
      break;
    case SurfaceKind::graph_fn:
      if (!spec.fn) throw SpecError("graph-fn surface has no function");
      break;
    case SurfaceKind::paraboloid: break;
  }
}

bool in_surface_domain(const SurfaceSpec& spec, const Vector& x) {
  if (x.size() != spec.n || !x.allFinite()) return false;
  switch (spec.kind) {
    case SurfaceKind::cylinder: return 1.0 - x[spec.n - 1] * x[spec.n - 1] > kDomainMargin;
    case SurfaceKind::ellipsoid: return ellipsoid_radicand(spec.a, x) > kDomainMargin;
    default: return true;
  }
}

bool in_sampling_domain(const SurfaceSpec& spec, const Vector& x) {
  return spec.domain.contains(x, kDomainMargin) && in_surface_domain(spec, x);
}

double surface_height(const SurfaceSpec& spec, const Vector& x) {
  check_point(spec, x);
  switch (spec.kind) {
    case SurfaceKind::cylinder: {
      const double s = 1.0 - x[spec.n - 1] * x[spec.n - 1];
      if (s < 0.0) throw OutOfDomainError("point " + point_string(x) + " outside cylinder domain");
      return std::sqrt(s);
    }
    case SurfaceKind::paraboloid: return x.squaredNorm();
    case SurfaceKind::ellipsoid: {
      const double s = ellipsoid_radicand(spec.a, x);
      if (s < 0.0) throw OutOfDomainError("point " + point_string(x) + " outside ellipsoid domain");
      return std::sqrt(s);
    }
    case SurfaceKind::graph_expr:
      return expr::evaluate(spec.expr, std::span<const double>(x.data(), static_cast<std::size_t>(x.size())));
    case SurfaceKind::graph_fn: return spec.fn(x);
  }
  return 0.0;
}

// --------------------------------------------------------------- builtin

SurfaceJet builtin_jet(const SurfaceSpec& spec, const Vector& x, int order) {
  if (order != 2 && order != 3) throw std::invalid_argument("jet order must be 2 or 3");
  check_point(spec, x);
  if (!in_surface_domain(spec, x))
    throw OutOfDomainError("point " + point_string(x) + " outside " + to_string(spec.kind) + " domain");

  const int n = spec.n;
  Vector grad = Vector::Zero(n);
  Matrix hess = Matrix::Zero(n, n);
  std::optional<Tensor3> third;
  if (order == 3) third.emplace(n);
  double r = 0.0;

  switch (spec.kind) {
    case SurfaceKind::cylinder: {
      const double xn = x[n - 1];
      r = std::sqrt(1.0 - xn * xn);
      grad[n - 1] = -xn / r;
      hess(n - 1, n - 1) = -1.0 / (r * r * r);
      if (third) (*third)(n - 1, n - 1, n - 1) = -3.0 * xn / std::pow(r, 5);
      break;
    }
    case SurfaceKind::paraboloid: {
      r = x.squaredNorm();
      grad = 2.0 * x;
      hess = 2.0 * Matrix::Identity(n, n);
      break;
    }
    case SurfaceKind::ellipsoid: {
      r = std::sqrt(ellipsoid_radicand(spec.a, x));
      for (int i = 0; i < n; ++i) grad[i] = -spec.a[static_cast<std::size_t>(i)] * x[i] / r;
      for (int i = 0; i < n; ++i)
        for (int j = 0; j < n; ++j)
          hess(i, j) = (-(i == j ? spec.a[static_cast<std::size_t>(i)] : 0.0) - grad[i] * grad[j]) / r;
      if (third) {
        // r_{ijk} = -(r_{ik} r_j + r_{jk} r_i + r_{ij} r_k) / r
        for (int i = 0; i < n; ++i)
          for (int j = 0; j < n; ++j)
            for (int k = 0; k < n; ++k)
              (*third)(i, j, k) = -(hess(i, k) * grad[j] + hess(j, k) * grad[i] + hess(i, j) * grad[k]) / r;
      }
      break;
    }
    default: throw std::invalid_argument("builtin_jet requires a cylinder, paraboloid, or ellipsoid");
  }
  return make_jet(x, r, std::move(grad), std::move(hess), std::move(third));
}

// ------------------------------------------------------------ expression

namespace {

std::size_t packed2(int i, int j, int n) {
  // i <= j, row-major upper triangle
  return static_cast<std::size_t>(i * n - i * (i - 1) / 2 + (j - i));
}

}  // namespace

ExprJetProvider::ExprJetProvider(expr::Expr e, int n, int order) : e_(std::move(e)), n_(n), order_(order) {
  if (order != 2 && order != 3) throw std::invalid_argument("jet order must be 2 or 3");
  if (n < 1) throw std::invalid_argument("dimension must be >= 1");
  if (expr::max_variable(e_) > n) throw std::invalid_argument("expression references a variable beyond n");
  for (int i = 0; i < n; ++i) grad_.push_back(expr::differentiate(e_, i + 1));
  for (int i = 0; i < n; ++i)
    for (int j = i; j < n; ++j) hess_.push_back(expr::differentiate(grad_[static_cast<std::size_t>(i)], j + 1));
  if (order == 3) {
    for (int i = 0; i < n; ++i)
      for (int j = i; j < n; ++j)
        for (int k = j; k < n; ++k)
          third_.push_back(expr::differentiate(hess_[packed2(i, j, n)], k + 1));
  }
}

SurfaceJet ExprJetProvider::operator()(const Vector& x) const {
  if (x.size() != n_) throw std::invalid_argument("point dimension does not match expression dimension");
  const std::span<const double> p(x.data(), static_cast<std::size_t>(n_));
  const double r = expr::evaluate(e_, p);
  Vector grad(n_);
  for (int i = 0; i < n_; ++i) grad[i] = expr::evaluate(grad_[static_cast<std::size_t>(i)], p);
  Matrix hess(n_, n_);
  for (int i = 0; i < n_; ++i)
    for (int j = i; j < n_; ++j) hess(i, j) = hess(j, i) = expr::evaluate(hess_[packed2(i, j, n_)], p);
  std::optional<Tensor3> third;
  if (order_ == 3) {
    third.emplace(n_);
    std::size_t idx = 0;
    for (int i = 0; i < n_; ++i)
      for (int j = i; j < n_; ++j)
        for (int k = j; k < n_; ++k) {
          const double v = expr::evaluate(third_[idx++], p);
          Tensor3& t = *third;
          t(i, j, k) = t(i, k, j) = t(j, i, k) = t(j, k, i) = t(k, i, j) = t(k, j, i) = v;
        }
  }
  return make_jet(x, r, std::move(grad), std::move(hess), std::move(third));
}

SurfaceJet expr_jet(const expr::Expr& e, int n, const Vector& x, int order) {
  return ExprJetProvider(e, n, order)(x);
}

// ------------------------------------------------------ finite difference

namespace {

class Stencil {
 public:
  Stencil(const ScalarField& f, const Vector& x) : f_(f), x_(x) {}

  double at(const Vector& offset) const {
    const Vector p = x_ + offset;
    double v = 0.0;
    try {
      v = f_(p);
    } catch (const Error& e) {
      throw OutOfDomainError("finite-difference stencil point " + point_string(p) +
                             " outside function domain: " + e.what());
    }
    if (!std::isfinite(v))
      throw OutOfDomainError("function is not finite at stencil point " + point_string(p));
    return v;
  }

  // Second partial d2f/dxi dxj at x + shift. Diagonal entries use the
  // five-point fourth-order formula; mixed ones the four-point cross.
  double second(int i, int j, const Vector& h, const Vector& shift) const {
    const int n = static_cast<int>(x_.size());
    Vector ei = Vector::Zero(n);
    ei[i] = h[i];
    if (i == j) {
      const double fpp = at(shift + 2.0 * ei), fp = at(shift + ei), f0 = at(shift), fm = at(shift - ei),
                   fmm = at(shift - 2.0 * ei);
      return (-fpp + 16.0 * fp - 30.0 * f0 + 16.0 * fm - fmm) / (12.0 * h[i] * h[i]);
    }
    Vector ej = Vector::Zero(n);
    ej[j] = h[j];
    return (at(shift + ei + ej) - at(shift + ei - ej) - at(shift - ei + ej) + at(shift - ei - ej)) /
           (4.0 * h[i] * h[j]);
  }

 private:
  const ScalarField& f_;
  const Vector& x_;
};

Vector steps(const Vector& x, double root) {
  const double base = std::pow(kEps, 1.0 / root);
  return (base * (1.0 + x.array().abs())).matrix();
}

}  // namespace

SurfaceJet fd_jet(const ScalarField& f, const Vector& x, int order) {
  if (order != 2 && order != 3) throw std::invalid_argument("jet order must be 2 or 3");
  if (!f) throw std::invalid_argument("fd_jet needs a function");
  const int n = static_cast<int>(x.size());
  const Stencil st(f, x);
  const Vector zero = Vector::Zero(n);

  const double r = st.at(zero);

  const Vector h1 = steps(x, 3.0);
  Vector grad(n);
  for (int i = 0; i < n; ++i) {
    Vector e = Vector::Zero(n);
    e[i] = h1[i];
    grad[i] = (st.at(e) - st.at(-e)) / (2.0 * h1[i]);
  }

  const Vector h2 = steps(x, 4.0);
  Matrix hess(n, n);
  for (int i = 0; i < n; ++i)
    for (int j = i; j < n; ++j) hess(i, j) = hess(j, i) = st.second(i, j, h2, zero);

  std::optional<Tensor3> third;
  if (order == 3) {
    const Vector h3 = steps(x, 5.0);
    // d/dx_k of the Hessian stencil, both at step h
    auto diff = [&](int i, int j, int k, const Vector& h) {
      Vector ek = Vector::Zero(n);
      ek[k] = h[k];
      return (st.second(i, j, h, ek) - st.second(i, j, h, -ek)) / (2.0 * h[k]);
    };
    third.emplace(n);
    Tensor3& t = *third;
    for (int i = 0; i < n; ++i)
      for (int j = i; j < n; ++j)
        for (int k = j; k < n; ++k) {
          // one Richardson level against 2h removes the h^2 term
          const double v = (4.0 * diff(i, j, k, h3) - diff(i, j, k, 2.0 * h3)) / 3.0;
          t(i, j, k) = t(i, k, j) = t(j, i, k) = t(j, k, i) = t(k, i, j) = t(k, j, i) = v;
        }
  }
  return make_jet(x, r, std::move(grad), std::move(hess), std::move(third));
}

// --------------------------------------------------------------- dispatch

SurfaceJet surface_jet(const SurfaceSpec& spec, const Vector& x, int order) {
  return make_jet_field(spec, order)(x);
}

JetField make_jet_field(const SurfaceSpec& spec, int order) {
  if (order != 2 && order != 3) throw std::invalid_argument("jet order must be 2 or 3");
  switch (spec.kind) {
    case SurfaceKind::cylinder:
    case SurfaceKind::paraboloid:
    case SurfaceKind::ellipsoid:
      return [spec, order](const Vector& x) { return builtin_jet(spec, x, order); };
    case SurfaceKind::graph_expr: {
      auto provider = std::make_shared<const ExprJetProvider>(spec.expr, spec.n, order);
      return [provider](const Vector& x) { return (*provider)(x); };
    }
    case SurfaceKind::graph_fn: {
      ScalarField f = spec.fn;
      return [f, order](const Vector& x) { return fd_jet(f, x, order); };
    }
  }
  throw std::invalid_argument("unknown surface kind");
}

// ------------------------------------------------------------- validation

JetDiscrepancy validate_jet(const SurfaceJet& reference, const SurfaceJet& other, double tol) {
  if (reference.n != other.n) throw std::invalid_argument("jets have different dimensions");
  if ((reference.x - other.x).cwiseAbs().maxCoeff() > 0.0)
    throw std::invalid_argument("jets are taken at different points");
  const int n = reference.n;
  JetDiscrepancy out;
  out.tol = tol;

  auto finish = [&](JetDiscrepancy::Order o, double ref_scale) {
    o.max_rel = o.max_abs / std::max(1.0, ref_scale);
    if (!(o.max_rel <= tol)) out.pass = false;
    out.orders.push_back(std::move(o));
  };
  auto consider = [](JetDiscrepancy::Order& o, double a, double b, const std::string& where) {
    const double d = std::abs(a - b);
    if (d > o.max_abs || (std::isnan(d) && !std::isnan(o.max_abs))) {
      o.max_abs = std::isnan(d) ? std::numeric_limits<double>::infinity() : d;
      o.worst = where;
    }
  };
  auto idx = [](const char* name, std::initializer_list<int> ix) {
    std::string s = name;
    for (int i : ix) s += "[" + std::to_string(i) + "]";
    return s;
  };

  {
    JetDiscrepancy::Order o{0};
    consider(o, reference.r, other.r, "r");
    finish(o, std::abs(reference.r));
  }
  {
    JetDiscrepancy::Order o{1};
    for (int i = 0; i < n; ++i) consider(o, reference.grad[i], other.grad[i], idx("grad", {i}));
    finish(o, reference.grad.cwiseAbs().maxCoeff());
  }
  {
    JetDiscrepancy::Order o{2};
    for (int i = 0; i < n; ++i)
      for (int j = 0; j < n; ++j) consider(o, reference.hess(i, j), other.hess(i, j), idx("hess", {i, j}));
    finish(o, max_abs(reference.hess));
  }
  if (reference.third && other.third) {
    JetDiscrepancy::Order o{3};
    for (int i = 0; i < n; ++i)
      for (int j = 0; j < n; ++j)
        for (int k = 0; k < n; ++k)
          consider(o, (*reference.third)(i, j, k), (*other.third)(i, j, k), idx("third", {i, j, k}));
    finish(o, reference.third->max_abs());
  }
  return out;
}

}  // namespace conflat
