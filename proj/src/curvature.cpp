#include "conflat/curvature.hpp"

#include "conflat/errors.hpp"

#include <algorithm>
#include <cmath>

namespace conflat {

namespace {

void require_order3(const SurfaceJet& jet, const char* who) {
  if (!jet.third) throw std::invalid_argument(std::string(who) + " requires an order-3 jet");
}

// dg(m, i, j) = d g_ij / d x_m = r_im r_j + r_i r_jm
Tensor3 metric_derivative(const SurfaceJet& jet) {
  const int n = jet.n;
  Tensor3 dg(n);
  for (int m = 0; m < n; ++m)
    for (int i = 0; i < n; ++i)
      for (int j = 0; j < n; ++j) dg(m, i, j) = jet.hess(i, m) * jet.grad[j] + jet.grad[i] * jet.hess(j, m);
  return dg;
}

// dginv(m, i, j) = d g^ij / d x_m = -(ginv dg_m ginv)_ij
Tensor3 inverse_metric_derivative(const MetricData& md, const Tensor3& dg) {
  const int n = dg.dim();
  Tensor3 out(n);
  for (int m = 0; m < n; ++m) {
    Matrix dgm(n, n);
    for (int i = 0; i < n; ++i)
      for (int j = 0; j < n; ++j) dgm(i, j) = dg(m, i, j);
    const Matrix d = -md.ginv * dgm * md.ginv;
    for (int i = 0; i < n; ++i)
      for (int j = 0; j < n; ++j) out(m, i, j) = d(i, j);
  }
  return out;
}

Matrix symmetrized(const Matrix& a) { return 0.5 * (a + a.transpose()); }

}  // namespace

MetricData metric(const SurfaceJet& jet) {
  const int n = jet.n;
  MetricData m;
  m.b = jet.b;
  m.g = Matrix::Identity(n, n) + jet.grad * jet.grad.transpose();
  m.ginv = Matrix::Identity(n, n) - (jet.grad * jet.grad.transpose()) / jet.b;
  return m;
}

Matrix metric_inverse_direct(const Matrix& g) {
  Eigen::LLT<Matrix> llt(g);
  if (llt.info() != Eigen::Success) throw NumericalError("metric is not positive definite");
  return symmetrized(llt.solve(Matrix::Identity(g.rows(), g.cols())));
}

Tensor3 christoffel(const SurfaceJet& jet, const MetricData& m) {
  const int n = jet.n;
  const Tensor3 dg = metric_derivative(jet);
  Tensor3 gamma(n);
  for (int mm = 0; mm < n; ++mm)
    for (int i = 0; i < n; ++i)
      for (int j = i; j < n; ++j) {
        double s = 0.0;
        for (int k = 0; k < n; ++k) s += m.ginv(k, mm) * (dg(i, k, j) + dg(j, k, i) - dg(k, i, j));
        gamma(mm, i, j) = gamma(mm, j, i) = 0.5 * s;
      }
  return gamma;
}

Matrix second_fundamental(const SurfaceJet& jet) { return jet.hess / std::sqrt(jet.b); }

Matrix shape_operator(const MetricData& m, const Matrix& h) { return m.ginv * h; }

Matrix shape_operator_direct(const SurfaceJet& jet) {
  const int n = jet.n;
  const double b = jet.b;
  const Vector rk_rki = jet.hess.transpose() * jet.grad;  // sum_k r_k r_ki
  Matrix s(n, n);
  for (int j = 0; j < n; ++j)
    for (int i = 0; i < n; ++i)
      s(j, i) = -std::pow(b, -1.5) * jet.grad[j] * rk_rki[i] + jet.hess(j, i) / std::sqrt(b);
  return s;
}

Vector principal_curvatures(const MetricData& m, const Matrix& h) {
  Eigen::LLT<Matrix> llt(m.g);
  if (llt.info() != Eigen::Success) throw NumericalError("metric factorization failed (g not SPD)");
  const auto L = llt.matrixL();
  Matrix a = L.solve(h);                                   // L^{-1} h
  a = L.solve(Matrix(a.transpose())).transpose().eval();   // L^{-1} h L^{-T}
  Eigen::SelfAdjointEigenSolver<Matrix> es(symmetrized(a), Eigen::EigenvaluesOnly);
  if (es.info() != Eigen::Success) throw NumericalError("symmetric eigensolver did not converge");
  return es.eigenvalues();
}

Tensor4 riemann_gauss(const SurfaceJet& jet) {
  const int n = jet.n;
  const Matrix& H = jet.hess;
  Tensor4 R(n);
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j)
      for (int k = 0; k < n; ++k)
        for (int l = 0; l < n; ++l) R(i, j, k, l) = (H(i, l) * H(j, k) - H(i, k) * H(j, l)) / jet.b;
  return R;
}

Tensor4 riemann_christoffel(const SurfaceJet& jet) {
  require_order3(jet, "riemann_christoffel");
  const int n = jet.n;
  const Vector& r1 = jet.grad;
  const Matrix& r2 = jet.hess;
  const Tensor3& r3 = *jet.third;
  const MetricData md = metric(jet);
  const Tensor3 dg = metric_derivative(jet);
  const Tensor3 dginv = inverse_metric_derivative(md, dg);

  // Christoffel symbols of the first kind and their derivatives.
  Tensor3 first(n);  // first(k, i, j) = Gamma_kij
  for (int k = 0; k < n; ++k)
    for (int i = 0; i < n; ++i)
      for (int j = 0; j < n; ++j) first(k, i, j) = 0.5 * (dg(i, k, j) + dg(j, k, i) - dg(k, i, j));

  // d_p d_q g_ab
  auto ddg = [&](int p, int q, int a, int bb) {
    return r3(a, q, p) * r1[bb] + r2(a, q) * r2(bb, p) + r2(a, p) * r2(bb, q) + r1[a] * r3(bb, q, p);
  };

  Tensor3 gamma(n);
  for (int m = 0; m < n; ++m)
    for (int i = 0; i < n; ++i)
      for (int j = 0; j < n; ++j) {
        double s = 0.0;
        for (int k = 0; k < n; ++k) s += md.ginv(m, k) * first(k, i, j);
        gamma(m, i, j) = s;
      }

  // dgamma[p](m, i, j) = d Gamma^m_ij / d x_p
  std::vector<Tensor3> dgamma(static_cast<std::size_t>(n), Tensor3(n));
  for (int p = 0; p < n; ++p)
    for (int m = 0; m < n; ++m)
      for (int i = 0; i < n; ++i)
        for (int j = 0; j < n; ++j) {
          double s = 0.0;
          for (int k = 0; k < n; ++k) {
            const double dfirst = 0.5 * (ddg(p, i, k, j) + ddg(p, j, k, i) - ddg(p, k, i, j));
            s += dginv(p, m, k) * first(k, i, j) + md.ginv(m, k) * dfirst;
          }
          dgamma[static_cast<std::size_t>(p)](m, i, j) = s;
        }

  Tensor4 R(n);
  Vector coeff(n);
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j)
      for (int k = 0; k < n; ++k) {
        for (int m = 0; m < n; ++m) {
          double c = dgamma[static_cast<std::size_t>(i)](m, j, k) - dgamma[static_cast<std::size_t>(j)](m, i, k);
          for (int p = 0; p < n; ++p) c += gamma(p, j, k) * gamma(m, i, p) - gamma(p, i, k) * gamma(m, j, p);
          coeff[m] = c;
        }
        for (int l = 0; l < n; ++l) R(i, j, k, l) = md.g.col(l).dot(coeff);
      }
  return R;
}

RicciScalar ricci_scalar(const MetricData& m, const Tensor4& R) {
  const int n = R.dim();
  RicciScalar out;
  out.ricci = Matrix::Zero(n, n);
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j) {
      double s = 0.0;
      for (int mu = 0; mu < n; ++mu)
        for (int nu = 0; nu < n; ++nu) s += m.ginv(mu, nu) * R(mu, i, j, nu);
      out.ricci(i, j) = s;
    }
  out.ricci = symmetrized(out.ricci);
  out.scalar = (m.ginv.array() * out.ricci.array()).sum();
  return out;
}

Matrix schouten(const MetricData& m, const Matrix& ricci, double scalar, int n) {
  if (n < 3) throw std::invalid_argument("Schouten tensor requires n >= 3");
  return (ricci - scalar * m.g / (2.0 * (n - 1))) / (n - 2.0);
}

Tensor4 weyl(const MetricData& m, const Tensor4& R, const Matrix& ricci, double scalar, int n) {
  if (n <= 3)
    throw std::invalid_argument("Weyl tensor criterion requires n >= 4 (use the Cotton tensor for n = 3)");
  const Matrix& g = m.g;
  const double c1 = 1.0 / (n - 2.0);
  const double c2 = scalar / ((n - 1.0) * (n - 2.0));
  Tensor4 W(n);
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j)
      for (int k = 0; k < n; ++k)
        for (int l = 0; l < n; ++l)
          W(i, j, k, l) = R(i, j, k, l) +
                          c1 * (g(k, i) * ricci(j, l) - g(i, l) * ricci(j, k) + g(j, l) * ricci(i, k) -
                                g(j, k) * ricci(i, l)) +
                          c2 * (g(i, l) * g(j, k) - g(k, i) * g(j, l));
  return W;
}

Matrix schouten_from_jet(const SurfaceJet& jet) {
  const MetricData md = metric(jet);
  const RicciScalar rs = ricci_scalar(md, riemann_gauss(jet));
  return schouten(md, rs.ricci, rs.scalar, jet.n);
}

// ------------------------------------------------------------------ Cotton

namespace {

Tensor3 cotton_from(const Matrix& S, const Tensor3& dS, const Tensor3& gamma) {
  const int n = static_cast<int>(S.rows());
  // nabla(j, i, k) = nabla_j S_ik
  Tensor3 nabla(n);
  for (int j = 0; j < n; ++j)
    for (int i = 0; i < n; ++i)
      for (int k = 0; k < n; ++k) {
        double s = dS(j, i, k);
        for (int m = 0; m < n; ++m) s -= S(m, k) * gamma(m, i, j) + S(i, m) * gamma(m, k, j);
        nabla(j, i, k) = s;
      }
  Tensor3 C(n);
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j)
      for (int k = 0; k < n; ++k) C(i, j, k) = nabla(j, i, k) - nabla(k, i, j);
  return C;
}

}  // namespace

CottonData cotton_analytic(const SurfaceJet& jet) {
  require_order3(jet, "analytic Cotton");
  const int n = jet.n;
  if (n < 3) throw std::invalid_argument("Cotton tensor requires n >= 3");
  const Vector& r1 = jet.grad;
  const Matrix& r2 = jet.hess;
  const Tensor3& r3 = *jet.third;
  const double b = jet.b;

  const MetricData md = metric(jet);
  const Tensor3 dg = metric_derivative(jet);
  const Tensor3 dginv = inverse_metric_derivative(md, dg);
  const Tensor4 R = riemann_gauss(jet);
  const RicciScalar rs = ricci_scalar(md, R);
  const Matrix S = schouten(md, rs.ricci, rs.scalar, n);

  Vector db(n);  // d b / d x_m = 2 sum_p r_p r_pm
  for (int m = 0; m < n; ++m) db[m] = 2.0 * r1.dot(r2.col(m));

  auto dR = [&](int m, int i, int j, int k, int l) {
    const double q = r2(i, l) * r2(j, k) - r2(i, k) * r2(j, l);
    const double dq = r3(i, l, m) * r2(j, k) + r2(i, l) * r3(j, k, m) - r3(i, k, m) * r2(j, l) - r2(i, k) * r3(j, l, m);
    return -db[m] * q / (b * b) + dq / b;
  };

  CottonData out;
  out.dschouten = Tensor3(n);
  for (int m = 0; m < n; ++m) {
    Matrix dric = Matrix::Zero(n, n);
    for (int i = 0; i < n; ++i)
      for (int j = 0; j < n; ++j) {
        double s = 0.0;
        for (int mu = 0; mu < n; ++mu)
          for (int nu = 0; nu < n; ++nu)
            s += dginv(m, mu, nu) * R(mu, i, j, nu) + md.ginv(mu, nu) * dR(m, mu, i, j, nu);
        dric(i, j) = s;
      }
    dric = symmetrized(dric);
    double dscal = 0.0;
    for (int i = 0; i < n; ++i)
      for (int j = 0; j < n; ++j) dscal += dginv(m, i, j) * rs.ricci(i, j) + md.ginv(i, j) * dric(i, j);
    for (int i = 0; i < n; ++i)
      for (int k = 0; k < n; ++k)
        out.dschouten(m, i, k) =
            (dric(i, k) - (dscal * md.g(i, k) + rs.scalar * dg(m, i, k)) / (2.0 * (n - 1))) / (n - 2.0);
  }
  out.schouten = S;
  out.christoffel = christoffel(jet, md);
  out.cotton = cotton_from(S, out.dschouten, out.christoffel);
  return out;
}

CottonData cotton_fd(const JetField& field, const Vector& x) {
  const int n = static_cast<int>(x.size());
  if (n < 3) throw std::invalid_argument("Cotton tensor requires n >= 3");
  const SurfaceJet center = field(x);
  const MetricData md = metric(center);

  auto schouten_at = [&](const Vector& p) {
    try {
      return schouten_from_jet(field(p));
    } catch (const OutOfDomainError&) {
      throw;
    } catch (const Error& e) {
      throw OutOfDomainError(std::string("Cotton stencil point outside surface domain: ") + e.what());
    }
  };

  CottonData out;
  out.dschouten = Tensor3(n);
  for (int j = 0; j < n; ++j) {
    const double h = 1e-4 * (1.0 + std::abs(x[j]));
    auto central = [&](double step) {
      Vector e = Vector::Zero(n);
      e[j] = step;
      return Matrix((schouten_at(x + e) - schouten_at(x - e)) / (2.0 * step));
    };
    const Matrix coarse = central(h);
    const Matrix fine = central(0.5 * h);
    const Matrix d = symmetrized((4.0 * fine - coarse) / 3.0);
    for (int i = 0; i < n; ++i)
      for (int k = 0; k < n; ++k) out.dschouten(j, i, k) = d(i, k);
  }
  const RicciScalar rs = ricci_scalar(md, riemann_gauss(center));
  out.schouten = schouten(md, rs.ricci, rs.scalar, n);
  out.christoffel = christoffel(center, md);
  out.cotton = cotton_from(out.schouten, out.dschouten, out.christoffel);
  return out;
}

CottonData cotton(const SurfaceSpec& spec, const Vector& x, CottonMode mode) {
  if (mode == CottonMode::analytic) return cotton_analytic(surface_jet(spec, x, 3));
  return cotton_fd(make_jet_field(spec, 2), x);
}

// ----------------------------------------------------------------- packs

CurvatureEngine::CurvatureEngine(const SurfaceSpec& spec, PackOptions options)
    : n_(spec.n),
      with_cotton_(options.with_cotton.value_or(spec.n == 3)),
      mode_(options.cotton_mode) {
  if (with_cotton_ && n_ < 3) throw std::invalid_argument("Cotton tensor requires n >= 3");
  const bool need3 = with_cotton_ && mode_ == CottonMode::analytic;
  field_ = make_jet_field(spec, need3 ? 3 : 2);
  field2_ = need3 ? make_jet_field(spec, 2) : field_;
}

CurvaturePack CurvatureEngine::at(const Vector& x) const {
  const SurfaceJet jet = field_(x);
  CurvaturePack p;
  p.n = n_;
  p.x = x;
  p.metric = metric(jet);
  p.christoffel = christoffel(jet, p.metric);
  p.h = second_fundamental(jet);
  p.shape = shape_operator(p.metric, p.h);
  p.kappa = principal_curvatures(p.metric, p.h);
  p.riemann = riemann_gauss(jet);
  const RicciScalar rs = ricci_scalar(p.metric, p.riemann);
  p.ricci = rs.ricci;
  p.scalar = rs.scalar;
  if (n_ >= 3) p.schouten = schouten(p.metric, p.ricci, p.scalar, n_);
  if (n_ >= 4) p.weyl = weyl(p.metric, p.riemann, p.ricci, p.scalar, n_);
  if (with_cotton_) p.cotton = mode_ == CottonMode::analytic ? cotton_analytic(jet) : cotton_fd(field2_, x);
  return p;
}

CurvaturePack curvature_pack(const SurfaceSpec& spec, const Vector& x, PackOptions options) {
  return CurvatureEngine(spec, options).at(x);
}

// -------------------------------------------------------------- invariants

double InvariantResiduals::worst() const {
  return std::max({riemann_antisymmetry, riemann_pair_symmetry, bianchi, weyl_trace, cotton_antisymmetry,
                   cotton_trace, metric_inverse});
}

InvariantResiduals check_invariants(const CurvaturePack& p) {
  const int n = p.n;
  const Tensor4& R = p.riemann;
  const Matrix& gi = p.metric.ginv;
  InvariantResiduals out;

  const double rscale = 1.0 + R.max_abs();
  double anti = 0.0, pair = 0.0, bianchi = 0.0;
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j)
      for (int k = 0; k < n; ++k)
        for (int l = 0; l < n; ++l) {
          anti = std::max({anti, std::abs(R(i, j, k, l) + R(j, i, k, l)), std::abs(R(i, j, k, l) + R(i, j, l, k))});
          pair = std::max(pair, std::abs(R(i, j, k, l) - R(k, l, i, j)));
          bianchi = std::max(bianchi, std::abs(R(i, j, k, l) + R(i, k, l, j) + R(i, l, j, k)));
        }
  out.riemann_antisymmetry = anti / rscale;
  out.riemann_pair_symmetry = pair / rscale;
  out.bianchi = bianchi / rscale;

  if (p.weyl) {
    const Tensor4& W = *p.weyl;
    const double wscale = 1.0 + std::max(W.max_abs(), R.max_abs());
    double worst = 0.0;
    // contraction over slots (s1, s2) for every pair
    static constexpr int kPairs[6][2] = {{0, 1}, {0, 2}, {0, 3}, {1, 2}, {1, 3}, {2, 3}};
    for (const auto& pr : kPairs) {
      for (int u = 0; u < n; ++u)
        for (int v = 0; v < n; ++v) {
          double s = 0.0;
          for (int a = 0; a < n; ++a)
            for (int c = 0; c < n; ++c) {
              int idx[4];
              int free_slot = 0;
              const int frees[2] = {u, v};
              for (int slot = 0; slot < 4; ++slot) {
                if (slot == pr[0]) idx[slot] = a;
                else if (slot == pr[1]) idx[slot] = c;
                else idx[slot] = frees[free_slot++];
              }
              s += gi(a, c) * W(idx[0], idx[1], idx[2], idx[3]);
            }
          worst = std::max(worst, std::abs(s));
        }
    }
    out.weyl_trace = worst / wscale;
  }

  if (p.cotton) {
    const Tensor3& C = p.cotton->cotton;
    const double cscale = 1.0 + std::max({C.max_abs(), p.cotton->dschouten.max_abs(),
                                          max_abs(p.cotton->schouten) * p.cotton->christoffel.max_abs()});
    double anti3 = 0.0, trace = 0.0;
    for (int i = 0; i < n; ++i)
      for (int j = 0; j < n; ++j)
        for (int k = 0; k < n; ++k) anti3 = std::max(anti3, std::abs(C(i, j, k) + C(i, k, j)));
    for (int k = 0; k < n; ++k) {
      double t12 = 0.0, t13 = 0.0;
      for (int a = 0; a < n; ++a)
        for (int c = 0; c < n; ++c) {
          t12 += gi(a, c) * C(a, c, k);
          t13 += gi(a, c) * C(a, k, c);
        }
      trace = std::max({trace, std::abs(t12), std::abs(t13)});
    }
    out.cotton_antisymmetry = anti3 / cscale;
    out.cotton_trace = trace / cscale;
  }

  const Matrix direct = metric_inverse_direct(p.metric.g);
  out.metric_inverse = max_abs(direct - gi) / (1.0 + max_abs(gi));
  return out;
}

}  // namespace conflat
