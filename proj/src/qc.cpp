#include "conflat/qc.hpp"

#include "conflat/errors.hpp"

#include <cmath>
#include <limits>
#include <memory>
#include <random>

namespace conflat::qc {

namespace {

constexpr double kEps = std::numeric_limits<double>::epsilon();

Vector eval_checked(const Map& f, const Vector& x) {
  Vector y = f.eval(x);
  if (y.size() != f.out_dim) throw std::invalid_argument("map '" + f.name + "' returned the wrong dimension");
  if (!y.allFinite()) throw DomainError("map is not finite", f.name, std::vector<double>(x.begin(), x.end()));
  return y;
}

double frobenius(const Matrix& m) { return m.norm(); }

}  // namespace

void QCReport::add(QCPoint p) {
  max_defect = std::max(max_defect, p.defect);
  points.push_back(std::move(p));
}

JacobianSample jacobian(const Map& f, const Vector& x, bool force_fd) {
  if (x.size() != f.in_dim) throw std::invalid_argument("point dimension does not match map '" + f.name + "'");
  JacobianSample s;
  s.x = x;
  if (f.jacobian && !force_fd) {
    s.J = f.jacobian(x);
    s.provenance = Provenance::analytic;
    return s;
  }
  const int n = f.in_dim;
  s.J.resize(f.out_dim, n);
  const double base = std::cbrt(kEps);
  for (int i = 0; i < n; ++i) {
    const double h = base * (1.0 + std::abs(x[i]));
    Vector e = Vector::Zero(n);
    e[i] = h;
    s.J.col(i) = (eval_checked(f, x + e) - eval_checked(f, x - e)) / (2.0 * h);
  }
  s.provenance = Provenance::finite_difference;
  return s;
}

Conformality conformal_defect(const Matrix& J) {
  const int n = static_cast<int>(J.cols());
  if (n < 1 || J.rows() < n) throw std::invalid_argument("Jacobian must be m x n with m >= n >= 1");
  const Matrix M = J.transpose() * J;
  const double det = M.determinant();
  if (!(det > 0.0) || !std::isfinite(det)) throw NumericalError("degenerate Jacobian: det(J^T J) <= 0");
  Conformality c;
  c.factor = std::pow(det, 1.0 / (2.0 * n));
  const double c2 = c.factor * c.factor;
  c.defect = frobenius(M - c2 * Matrix::Identity(n, n)) / c2;
  return c;
}

QCReport qc_check_map(const Map& f, const std::vector<Vector>& points, bool force_fd) {
  QCReport report;
  for (const Vector& x : points) {
    try {
      const Conformality c = conformal_defect(jacobian(f, x, force_fd));
      report.add({x, c.defect, c.factor, 0});
    } catch (const NumericalError&) {
      ++report.skipped;
    } catch (const DomainError&) {
      ++report.skipped;
    }
  }
  return report;
}

QCReport beltrami_residual(const Map& h, const MetricField& G, const std::vector<Vector>& points, bool force_fd) {
  if (h.in_dim != h.out_dim) throw std::invalid_argument("Beltrami candidate must map R^n to R^n");
  QCReport report;
  for (const Vector& x : points) {
    const Matrix g = G(x);
    if (g.rows() != h.in_dim || g.cols() != h.in_dim) throw std::invalid_argument("metric field has wrong size");
    if (max_abs(g - g.transpose()) > 1e-12 * (1.0 + max_abs(g)))
      throw NumericalError("metric field is not symmetric");
    Eigen::LLT<Matrix> llt(g);
    if (llt.info() != Eigen::Success) throw NumericalError("metric field is not positive definite");
    const Matrix J = jacobian(h, x, force_fd).J;
    const double residual = frobenius(J.transpose() * J - g) / (1.0 + frobenius(g));
    report.add({x, residual, 1.0, 0});
  }
  return report;
}

MetricField induced_metric(const Map& sigma) {
  return [sigma](const Vector& x) {
    const Matrix J = jacobian(sigma, x).J;
    return Matrix(J.transpose() * J);
  };
}

NewtonResult invert(const Map& h, const Vector& z, const Vector& seed) {
  constexpr double kTol = 1e-12;
  constexpr int kMaxIter = 50;
  NewtonResult out;
  out.x = seed;
  Vector residual;
  try {
    residual = eval_checked(h, out.x) - z;
  } catch (const Error&) {
    return out;
  }
  double rnorm = residual.norm();
  for (out.iterations = 0; out.iterations < kMaxIter; ++out.iterations) {
    if (rnorm <= kTol) {
      out.converged = true;
      break;
    }
    const Matrix J = jacobian(h, out.x).J;
    Eigen::PartialPivLU<Matrix> lu(J);
    if (!(std::abs(lu.determinant()) > 0.0)) return out;
    const Vector step = lu.solve(residual);
    double t = 1.0;
    bool improved = false;
    for (int halving = 0; halving < 40; ++halving, t *= 0.5) {
      const Vector trial = out.x - t * step;
      Vector trial_res;
      try {
        trial_res = eval_checked(h, trial) - z;
      } catch (const Error&) {
        continue;
      }
      if (trial_res.norm() < rnorm) {
        out.x = trial;
        residual = trial_res;
        rnorm = trial_res.norm();
        improved = true;
        break;
      }
    }
    if (!improved) {
      out.converged = rnorm <= kTol;
      return out;
    }
  }
  if (!out.converged) out.converged = rnorm <= kTol;
  if (out.converged) {
    // One polishing step; kept only if it does not increase the residual.
    const Matrix J = jacobian(h, out.x).J;
    const Vector trial = out.x - Eigen::PartialPivLU<Matrix>(J).solve(residual);
    try {
      if ((eval_checked(h, trial) - z).norm() <= rnorm) out.x = trial;
    } catch (const Error&) {
    }
  }
  return out;
}

QCReport compose_check(const Map& sigma, const Map& h, const std::vector<Vector>& points) {
  if (h.in_dim != h.out_dim || sigma.in_dim != h.in_dim)
    throw std::invalid_argument("compose_check needs h: R^n -> R^n and sigma: R^n -> R^m");
  const int n = h.in_dim;
  const double base = std::cbrt(kEps);
  QCReport report;
  for (const Vector& x : points) {
    try {
      const Vector z = eval_checked(h, x);
      Matrix J(sigma.out_dim, n);
      int iterations = 0;
      bool ok = true;
      for (int k = 0; k < n && ok; ++k) {
        const double step = base * (1.0 + std::abs(z[k]));
        Vector e = Vector::Zero(n);
        e[k] = step;
        const NewtonResult plus = invert(h, z + e, x);
        const NewtonResult minus = invert(h, z - e, x);
        ok = plus.converged && minus.converged;
        iterations = std::max({iterations, plus.iterations, minus.iterations});
        if (ok) J.col(k) = (eval_checked(sigma, plus.x) - eval_checked(sigma, minus.x)) / (2.0 * step);
      }
      if (!ok) {
        ++report.skipped;
        continue;
      }
      const Conformality c = conformal_defect(J);
      report.add({x, c.defect, c.factor, iterations});
    } catch (const Error&) {
      ++report.skipped;
    }
  }
  return report;
}

// ------------------------------------------------------------- distortion

std::vector<Vector> sphere_directions(int n, int count) {
  static constexpr int kPrimes[] = {2, 3, 5, 7, 11, 13, 17, 19, 23, 29, 31, 37, 41, 43, 47, 53};
  if (n < 1 || n > static_cast<int>(std::size(kPrimes))) throw std::invalid_argument("unsupported dimension");
  std::vector<Vector> dirs;
  for (int i = 0; i < n && static_cast<int>(dirs.size()) < count; ++i) {
    for (double sign : {1.0, -1.0}) {
      if (static_cast<int>(dirs.size()) >= count) break;
      Vector e = Vector::Zero(n);
      e[i] = sign;
      dirs.push_back(e);
    }
  }
  for (long index = 1; static_cast<int>(dirs.size()) < count; ++index) {
    Vector v(n);
    for (int d = 0; d < n; ++d) {
      // radical inverse of index in base kPrimes[d]
      double f = 1.0, u = 0.0;
      for (long k = index; k > 0; k /= kPrimes[d]) {
        f /= kPrimes[d];
        u += f * static_cast<double>(k % kPrimes[d]);
      }
      v[d] = 2.0 * u - 1.0;
    }
    const double norm = v.norm();
    if (norm > 1e-3) dirs.push_back(v / norm);
  }
  return dirs;
}

std::vector<DistortionRow> distortion_ratio(const Map& f, const Vector& x, const std::vector<double>& radii,
                                            int directions) {
  if (directions < 2) throw std::invalid_argument("need at least two directions");
  for (std::size_t i = 0; i < radii.size(); ++i) {
    if (!(radii[i] > 0.0)) throw std::invalid_argument("radii must be positive");
    if (i > 0 && !(radii[i] < radii[i - 1])) throw std::invalid_argument("radii must be decreasing");
  }
  const std::vector<Vector> dirs = sphere_directions(f.in_dim, directions);
  const Vector fx = eval_checked(f, x);
  std::vector<DistortionRow> rows;
  for (double r : radii) {
    double lo = std::numeric_limits<double>::infinity(), hi = 0.0;
    for (const Vector& e : dirs) {
      const double d = (eval_checked(f, x + r * e) - fx).norm();
      lo = std::min(lo, d);
      hi = std::max(hi, d);
    }
    if (!(lo > 0.0)) throw NumericalError("map collapses a sampled direction");
    rows.push_back({r, hi / lo});
  }
  return rows;
}

// ------------------------------------------------------------------- maps

Map identity_map(int n) {
  return {"identity", n, n, [](const Vector& x) { return x; },
          [n](const Vector&) { return Matrix(Matrix::Identity(n, n)); }};
}

Map similarity_map(int n, double scale, std::uint64_t rotation_seed, Vector shift) {
  std::mt19937_64 gen(rotation_seed);
  auto uniform = [&] { return (static_cast<double>(gen() >> 11) + 0.5) * 0x1.0p-53; };
  Matrix A(n, n);
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j)
      A(i, j) = std::sqrt(-2.0 * std::log(uniform())) * std::cos(2.0 * M_PI * uniform());
  Eigen::HouseholderQR<Matrix> qr(A);
  const Matrix Q = qr.householderQ() * Matrix::Identity(n, n);
  const Matrix L = scale * Q;
  if (shift.size() == 0) shift = Vector::Zero(n);
  return {"similarity", n, n, [L, shift](const Vector& x) { return Vector(L * x + shift); },
          [L](const Vector&) { return L; }};
}

Map diagonal_map(Vector d) {
  const int n = static_cast<int>(d.size());
  return {"diagonal", n, n, [d](const Vector& x) { return Vector(d.cwiseProduct(x)); },
          [d](const Vector&) { return Matrix(d.asDiagonal()); }};
}

Map graph_embedding(const SurfaceSpec& spec) {
  const int n = spec.n;
  auto field = std::make_shared<JetField>(make_jet_field(spec, 2));
  return {"graph-embedding:" + to_string(spec.kind), n, n + 1,
          [spec, n](const Vector& x) {
            Vector y(n + 1);
            y.head(n) = x;
            y[n] = surface_height(spec, x);
            return y;
          },
          [field, n](const Vector& x) {
            const SurfaceJet jet = (*field)(x);
            Matrix J = Matrix::Zero(n + 1, n);
            J.topRows(n).setIdentity();
            J.row(n) = jet.grad.transpose();
            return J;
          }};
}

Map cylinder_unroll(int n) {
  auto check = [](double xn) {
    if (!(std::abs(xn) < 1.0))
      throw OutOfDomainError("cylinder unroll needs |x_n| < 1 (got " + std::to_string(xn) + ")");
  };
  return {"cylinder-unroll", n, n,
          [n, check](const Vector& x) {
            check(x[n - 1]);
            Vector y = x;
            y[n - 1] = std::asin(x[n - 1]);
            return y;
          },
          [n, check](const Vector& x) {
            check(x[n - 1]);
            Matrix J = Matrix::Identity(n, n);
            J(n - 1, n - 1) = 1.0 / std::sqrt(1.0 - x[n - 1] * x[n - 1]);
            return J;
          }};
}

Map expression_map(const std::vector<expr::Expr>& components, int in_dim) {
  const int m = static_cast<int>(components.size());
  if (m < 1) throw std::invalid_argument("expression map needs at least one component");
  auto partials = std::make_shared<std::vector<expr::Expr>>();
  for (const auto& c : components) {
    if (expr::max_variable(c) > in_dim) throw std::invalid_argument("component references a variable beyond n");
    for (int i = 1; i <= in_dim; ++i) partials->push_back(expr::differentiate(c, i));
  }
  auto comps = std::make_shared<std::vector<expr::Expr>>(components);
  return {"expression", in_dim, m,
          [comps, in_dim](const Vector& x) {
            const std::span<const double> p(x.data(), static_cast<std::size_t>(in_dim));
            Vector y(static_cast<Eigen::Index>(comps->size()));
            for (std::size_t j = 0; j < comps->size(); ++j) y[static_cast<Eigen::Index>(j)] = expr::evaluate((*comps)[j], p);
            return y;
          },
          [partials, m, in_dim](const Vector& x) {
            const std::span<const double> p(x.data(), static_cast<std::size_t>(in_dim));
            Matrix J(m, in_dim);
            for (int j = 0; j < m; ++j)
              for (int i = 0; i < in_dim; ++i)
                J(j, i) = expr::evaluate((*partials)[static_cast<std::size_t>(j * in_dim + i)], p);
            return J;
          }};
}

}  // namespace conflat::qc
