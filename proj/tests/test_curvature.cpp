#include "conflat/curvature.hpp"
#include "conflat/errors.hpp"
#include "conflat/expr.hpp"
#include "conflat/flatness.hpp"

#include <doctest.h>

#include <Eigen/Eigenvalues>

#include <algorithm>
#include <cmath>

using namespace conflat;

namespace {

Box cube(int n, double h) {
  Box b;
  for (int i = 0; i < n; ++i) b.bounds.emplace_back(-h, h);
  return b;
}

SurfaceSpec graph(const char* text, int n, double half = 0.5) {
  return make_graph_expr(expr::parse(text, n), n, cube(n, half));
}

std::vector<SurfaceSpec> families(int n) {
  std::vector<double> a(n, 2.0);
  a[n - 1] = 1.5;
  std::vector<SurfaceSpec> out = {make_cylinder(n), make_paraboloid(n), make_ellipsoid(a)};
  if (n == 3) {
    out.push_back(graph("sin(x1)*x2 + x3^3/3 + exp(x1*x3)", 3));
    out.push_back(graph("log(2 + x1^2 + x2*x3) - x2^2", 3));
  }
  if (n == 4) out.push_back(graph("x1*x2 + cos(x3)*x4 + x4^2", 4));
  return out;
}

double max_diff(const Tensor3& a, const Tensor3& b) {
  double m = 0;
  for (std::size_t i = 0; i < a.data().size(); ++i) m = std::max(m, std::abs(a.data()[i] - b.data()[i]));
  return m;
}

double max_diff(const Tensor4& a, const Tensor4& b) {
  double m = 0;
  for (std::size_t i = 0; i < a.data().size(); ++i) m = std::max(m, std::abs(a.data()[i] - b.data()[i]));
  return m;
}

// Gamma^m_ij from the textbook definition, with dg by central differences
// of the metric field itself.
Tensor3 christoffel_oracle(const SurfaceSpec& s, const Vector& x) {
  const int n = s.n;
  auto g_at = [&](const Vector& y) { return metric(builtin_jet(s, y, 2)).g; };
  std::vector<Matrix> dg(n);
  for (int k = 0; k < n; ++k) {
    const double h = 1e-4;
    Vector e = Vector::Zero(n);
    e[k] = h;
    dg[k] = (-g_at(x + 2 * e) + 8 * g_at(x + e) - 8 * g_at(x - e) + g_at(x - 2 * e)) / (12 * h);
  }
  const Matrix ginv = g_at(x).inverse();
  Tensor3 G(n);
  for (int m = 0; m < n; ++m)
    for (int i = 0; i < n; ++i)
      for (int j = 0; j < n; ++j) {
        double v = 0;
        for (int k = 0; k < n; ++k) v += 0.5 * ginv(m, k) * (dg[i](k, j) + dg[j](k, i) - dg[k](i, j));
        G(m, i, j) = v;
      }
  return G;
}

// C_ijk from central differences of schouten_from_jet, with the Christoffel
// terms contracted here rather than in the library.
Tensor3 cotton_oracle(const SurfaceSpec& s, const Vector& x) {
  const int n = s.n;
  const JetField field = make_jet_field(s, 2);
  auto S_at = [&](const Vector& y) { return schouten_from_jet(field(y)); };
  std::vector<Matrix> dS(n);
  for (int j = 0; j < n; ++j) {
    const double h = 2e-3;
    Vector e = Vector::Zero(n);
    e[j] = h;
    dS[j] = (-S_at(x + 2 * e) + 8 * S_at(x + e) - 8 * S_at(x - e) + S_at(x - 2 * e)) / (12 * h);
  }
  const SurfaceJet jet = field(x);
  const MetricData m = metric(jet);
  const Tensor3 G = christoffel(jet, m);
  const Matrix S = schouten_from_jet(jet);
  auto nabla = [&](int j, int i, int k) {
    double v = dS[j](i, k);
    for (int p = 0; p < n; ++p) v -= S(p, k) * G(p, i, j) + S(i, p) * G(p, k, j);
    return v;
  };
  Tensor3 C(n);
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j)
      for (int k = 0; k < n; ++k) C(i, j, k) = nabla(j, i, k) - nabla(k, i, j);
  return C;
}

}  // namespace

TEST_CASE("metric") {
  const MetricData m0 = metric(builtin_jet(make_paraboloid(3), Vector::Zero(3), 2));
  CHECK(m0.g.isIdentity());
  CHECK(m0.ginv.isIdentity());
  CHECK(m0.b == 1.0);

  const Vector x = (Vector(3) << 0.3, -0.4, 0.1).finished();
  const MetricData m = metric(builtin_jet(make_paraboloid(3), x, 2));
  const double b = 1 + 4 * x.squaredNorm();
  CHECK((m.g - (Matrix::Identity(3, 3) + 4 * x * x.transpose())).cwiseAbs().maxCoeff() <= 1e-15);
  CHECK((m.ginv - (Matrix::Identity(3, 3) - 4 / b * x * x.transpose())).cwiseAbs().maxCoeff() <= 1e-15);

  const SurfaceJet c = builtin_jet(make_cylinder(3), x, 2);
  const MetricData mc = metric(c);
  Matrix want = Matrix::Identity(3, 3);
  want(2, 2) = 1 + c.grad[2] * c.grad[2];
  CHECK((mc.g - want).cwiseAbs().maxCoeff() == 0.0);
}

TEST_CASE("christoffel") {
  const Vector x = (Vector(3) << 0.3, -0.4, 0.1).finished();
  const SurfaceJet p = builtin_jet(make_paraboloid(3), x, 2);
  const Tensor3 G = christoffel(p, metric(p));
  const double b = p.b;
  for (int i = 0; i < 3; ++i)
    for (int k = 0; k < 3; ++k)
      for (int l = 0; l < 3; ++l)
        CHECK(G(i, k, l) == doctest::Approx(k == l ? 4 / b * x[i] : 0.0).epsilon(1e-14).scale(1e-14));

  const SurfaceSpec lin = graph("0.3*x1 - 0.2*x2 + x3", 3);
  const SurfaceJet lj = make_jet_field(lin, 2)(x);
  CHECK(christoffel(lj, metric(lj)).max_abs() == 0.0);

  const SurfaceSpec cyl = make_cylinder(3);
  const Vector y = (Vector(3) << 0.2, -0.1, 0.5).finished();
  const SurfaceJet cj = builtin_jet(cyl, y, 2);
  const Tensor3 Gc = christoffel(cj, metric(cj));
  CHECK(Gc(2, 2, 2) != 0.0);
  CHECK(std::abs(Gc(2, 2, 2)) == doctest::Approx(Gc.max_abs()));
  double others = 0;
  for (int m = 0; m < 3; ++m)
    for (int i = 0; i < 3; ++i)
      for (int j = 0; j < 3; ++j)
        if (m != 2 || i != 2 || j != 2) others = std::max(others, std::abs(Gc(m, i, j)));
  CHECK(others == 0.0);
  CHECK(max_diff(Gc, christoffel_oracle(cyl, y)) <= 1e-6);

  for (int n : {3, 4})
    for (const auto& s : families(n)) {
      if (s.kind == SurfaceKind::graph_expr) continue;
      for (const auto& z : sample_points(s, RandomSampler{10, 3})) {
        const SurfaceJet j = builtin_jet(s, z, 2);
        const Tensor3 Gs = christoffel(j, metric(j));
        CHECK(max_diff(Gs, christoffel_oracle(s, z)) <= 1e-6 * (1 + Gs.max_abs()));
        for (int m = 0; m < n; ++m)
          for (int i = 0; i < n; ++i)
            for (int k = 0; k < n; ++k) CHECK(Gs(m, i, k) == Gs(m, k, i));
      }
    }
}

TEST_CASE("second fundamental form and shape operator") {
  const SurfaceJet p0 = builtin_jet(make_paraboloid(3), Vector::Zero(3), 2);
  CHECK(second_fundamental(p0).isApprox(2 * Matrix::Identity(3, 3)));

  const Vector x = (Vector(4) << 0.2, -0.1, 0.15, 0.3).finished();
  const std::vector<double> a{2, 2, 2, 1.5};
  const SurfaceJet e = builtin_jet(make_ellipsoid(a), x, 2);
  Matrix want = e.grad * e.grad.transpose();
  for (int i = 0; i < 4; ++i) want(i, i) += a[i];
  want *= -1 / (std::sqrt(e.b) * e.r);
  CHECK((second_fundamental(e) - want).cwiseAbs().maxCoeff() <= 1e-14);

  const SurfaceJet lin = make_jet_field(graph("x1 - 2*x2 + 0.5*x3 + x4", 4), 2)(x);
  CHECK(second_fundamental(lin).isZero());

  const SurfaceJet p = builtin_jet(make_paraboloid(4), x, 2);
  const MetricData mp = metric(p);
  CHECK((shape_operator(mp, second_fundamental(p)) - 2 / std::sqrt(p.b) * mp.ginv).cwiseAbs().maxCoeff() <= 1e-14);

  const SurfaceJet c = builtin_jet(make_cylinder(4), x, 2);
  const Matrix sc = shape_operator(metric(c), second_fundamental(c));
  CHECK(sc.leftCols(3).isZero());

  const SurfaceSpec ell = make_ellipsoid(a);
  for (const auto& z : sample_points(ell, RandomSampler{50, 5})) {
    const SurfaceJet j = builtin_jet(ell, z, 2);
    const MetricData m = metric(j);
    const Matrix h = second_fundamental(j);
    const Matrix s = shape_operator(m, h);
    CHECK((s - shape_operator_direct(j)).cwiseAbs().maxCoeff() <= 1e-12);
    CHECK(s.determinant() == doctest::Approx(h.determinant() / m.g.determinant()).epsilon(1e-10));
  }
}

TEST_CASE("principal curvatures") {
  const Vector x = (Vector(4) << 0.2, -0.1, 0.15, 0.3).finished();
  const SurfaceSpec cap = graph("sqrt(1 - (x1^2 + x2^2 + x3^2 + x4^2))", 4);
  const SurfaceJet j = make_jet_field(cap, 2)(x);
  const Vector k = principal_curvatures(metric(j), second_fundamental(j));
  CHECK(k.maxCoeff() - k.minCoeff() <= 1e-13);
  CHECK(k[0] == doctest::Approx(-1.0));

  const SurfaceJet c = builtin_jet(make_cylinder(4), x, 2);
  const Vector kc = principal_curvatures(metric(c), second_fundamental(c));
  // the nonzero curvature is negative, so it sorts first
  CHECK(kc.tail(3).isZero());
  CHECK(kc[0] < 0.0);

  // brute force: eigenvalues of the nonsymmetric g^-1 h
  for (int n : {3, 4, 5})
    for (const auto& s : families(n))
      for (const auto& z : sample_points(s, RandomSampler{10, 6})) {
        const SurfaceJet jz = make_jet_field(s, 2)(z);
        const MetricData m = metric(jz);
        const Matrix h = second_fundamental(jz);
        const Vector got = principal_curvatures(m, h);
        Eigen::EigenSolver<Matrix> es(m.g.inverse() * h);
        Vector want = es.eigenvalues().real();
        CHECK(es.eigenvalues().imag().cwiseAbs().maxCoeff() <= 1e-10);
        std::sort(want.data(), want.data() + want.size());
        CHECK((got - want).cwiseAbs().maxCoeff() <= 1e-10 * (1 + want.cwiseAbs().maxCoeff()));
        CHECK(std::is_sorted(got.data(), got.data() + got.size()));
      }

  MetricData bad;
  bad.g = -Matrix::Identity(2, 2);
  bad.ginv = bad.g;
  CHECK_THROWS_AS(principal_curvatures(bad, Matrix::Identity(2, 2)), NumericalError);
}

TEST_CASE("riemann") {
  const Vector x = (Vector(4) << 0.2, -0.1, 0.15, 0.3).finished();
  const SurfaceJet p = builtin_jet(make_paraboloid(4), x, 3);
  const Tensor4 R = riemann_gauss(p);
  Tensor4 want(4);
  auto d = [](int a, int b) { return a == b ? 1.0 : 0.0; };
  for (int i = 0; i < 4; ++i)
    for (int j = 0; j < 4; ++j)
      for (int k = 0; k < 4; ++k)
        for (int l = 0; l < 4; ++l) want(i, j, k, l) = 4 / p.b * (d(i, l) * d(j, k) - d(i, k) * d(j, l));
  CHECK(max_diff(R, want) <= 1e-15);
  CHECK(max_diff(riemann_christoffel(p), want) <= 1e-13);

  CHECK(riemann_gauss(builtin_jet(make_cylinder(4), x, 2)).max_abs() == 0.0);
  CHECK(riemann_christoffel(builtin_jet(make_cylinder(4), x, 3)).max_abs() <= 1e-15);
  CHECK(riemann_gauss(make_jet_field(graph("x1 + x2 - x3", 3), 2)(x.head(3))).max_abs() == 0.0);
  CHECK_THROWS_AS(riemann_christoffel(builtin_jet(make_paraboloid(4), x, 2)), std::invalid_argument);

  for (int n : {3, 4})
    for (const auto& s : families(n))
      for (const auto& z : sample_points(s, RandomSampler{20, 8})) {
        const SurfaceJet j = make_jet_field(s, 3)(z);
        const Tensor4 a = riemann_gauss(j);
        CHECK(max_diff(a, riemann_christoffel(j)) <= 1e-9 * (1 + a.max_abs()));
      }
}

TEST_CASE("ricci, scalar, schouten") {
  const SurfaceJet p = builtin_jet(make_paraboloid(4), Vector::Zero(4), 2);
  const MetricData m = metric(p);
  const RicciScalar rs = ricci_scalar(m, riemann_gauss(p));
  CHECK(rs.ricci.isApprox(12 * Matrix::Identity(4, 4)));
  CHECK(rs.scalar == doctest::Approx(48));

  CHECK_THROWS_AS(schouten(m, rs.ricci, rs.scalar, 2), std::invalid_argument);
  const SurfaceJet flat = make_jet_field(graph("x1 - x2 + 2*x3", 3), 2)(Vector::Constant(3, 0.1));
  CHECK(schouten_from_jet(flat).isZero());
  CHECK(schouten_from_jet(builtin_jet(make_cylinder(3), Vector::Constant(3, 0.4), 2)).isZero());

  const Vector x = (Vector(3) << 0.1, 0.2, 0.3).finished();
  const SurfaceJet p3 = builtin_jet(make_paraboloid(3), x, 2);
  const Matrix want = 2 / p3.b * (Matrix::Identity(3, 3) - 4 * x * x.transpose());
  CHECK((schouten_from_jet(p3) - want).cwiseAbs().maxCoeff() <= 1e-14);
}

TEST_CASE("weyl") {
  const SurfaceJet p = builtin_jet(make_paraboloid(3), Vector::Zero(3), 2);
  const MetricData m3 = metric(p);
  const Tensor4 R3 = riemann_gauss(p);
  const RicciScalar rs3 = ricci_scalar(m3, R3);
  CHECK_THROWS_AS(weyl(m3, R3, rs3.ricci, rs3.scalar, 3), std::invalid_argument);

  // constant sectional curvature built on a curved metric
  const Vector x = (Vector(5) << 0.1, -0.2, 0.15, 0.05, 0.2).finished();
  const SurfaceJet e = builtin_jet(make_ellipsoid({2, 2, 2, 2, 1.5}), x, 2);
  const MetricData m = metric(e);
  const double c = 0.7;
  Tensor4 R(5);
  for (int i = 0; i < 5; ++i)
    for (int j = 0; j < 5; ++j)
      for (int k = 0; k < 5; ++k)
        for (int l = 0; l < 5; ++l) R(i, j, k, l) = c * (m.g(i, l) * m.g(j, k) - m.g(i, k) * m.g(j, l));
  const RicciScalar rs = ricci_scalar(m, R);
  CHECK(weyl(m, R, rs.ricci, rs.scalar, 5).max_abs() <= 1e-13);
  CHECK(rs.scalar == doctest::Approx(c * 5 * 4));

  const CurvatureEngine cyl(make_cylinder(5));
  CHECK(cyl.at(x).weyl->max_abs() == 0.0);
}

TEST_CASE("cotton") {
  const SurfaceSpec p = make_paraboloid(3);
  CHECK_THROWS_AS(cotton_analytic(builtin_jet(make_paraboloid(3), Vector::Zero(3), 2)), std::invalid_argument);
  CHECK_THROWS_AS(cotton(make_paraboloid(2), Vector::Zero(2), CottonMode::analytic), std::invalid_argument);
  for (const auto& x : sample_points(p, RandomSampler{20, 9})) {
    const CottonData a = cotton(p, x, CottonMode::analytic);
    const CottonData f = cotton(p, x, CottonMode::fd);
    CHECK(a.cotton.max_abs() <= 1e-8);
    CHECK(max_diff(a.cotton, f.cotton) <= 1e-5);
  }
  CHECK(cotton(make_cylinder(3), Vector::Constant(3, 0.3), CottonMode::analytic).cotton.max_abs() == 0.0);

  // non-flat surfaces: analytic Cotton against a test-side fd oracle
  for (const auto& s : families(3)) {
    if (s.kind == SurfaceKind::cylinder || s.kind == SurfaceKind::paraboloid) continue;
    INFO(s.id);
    double scale = 0;
    for (const auto& x : sample_points(s, RandomSampler{10, 10})) {
      const CottonData a = cotton(s, x, CottonMode::analytic);
      const CottonData f = cotton(s, x, CottonMode::fd);
      const Tensor3 o = cotton_oracle(s, x);
      scale = std::max(scale, a.cotton.max_abs());
      CHECK(max_diff(a.cotton, o) <= 1e-7 * (1 + a.cotton.max_abs()));
      CHECK(max_diff(a.cotton, f.cotton) <= 1e-5 * (1 + a.cotton.max_abs()));
    }
    CHECK(scale > 1e-3);  // these surfaces really are not conformally flat
  }

  // fd mode near the domain edge: stencil leaving the natural domain is an error
  const Vector edge = (Vector(3) << 0.0, 0.0, 1.0 - 1e-7).finished();
  CHECK_THROWS_AS(cotton(make_cylinder(3), edge, CottonMode::fd), OutOfDomainError);
}

TEST_CASE("engine and pack") {
  const SurfaceSpec s = make_ellipsoid({2, 2, 1.5});
  const Vector x = (Vector(3) << 0.1, 0.2, -0.1).finished();
  const CurvatureEngine eng(s);
  CHECK(eng.computes_cotton());
  const CurvaturePack a = eng.at(x);
  const CurvaturePack b = curvature_pack(s, x);
  CHECK(max_diff(a.riemann, b.riemann) == 0.0);
  CHECK(max_diff(a.cotton->cotton, b.cotton->cotton) == 0.0);
  CHECK_FALSE(a.weyl.has_value());
  PackOptions none;
  none.with_cotton = false;
  CHECK_FALSE(curvature_pack(s, x, none).cotton.has_value());
  CHECK(curvature_pack(make_ellipsoid({2, 2, 2, 1.5}), Vector::Constant(4, 0.1)).weyl.has_value());
}

TEST_CASE("property: pack identities on every family") {
  for (int n : {3, 4, 5})
    for (const auto& s : families(n)) {
      PackOptions po;
      po.with_cotton = true;
      const CurvatureEngine eng(s, po);
      for (const auto& x : sample_points(s, RandomSampler{25, static_cast<std::uint64_t>(20 + n)})) {
        const InvariantResiduals r = check_invariants(eng.at(x));
        INFO(s.id << " " << x.transpose());
        CHECK(r.worst() <= 1e-11);
      }
    }
}
