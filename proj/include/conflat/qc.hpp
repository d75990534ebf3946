#pragma once

// 1-quasiconformality of smooth maps and residuals of the Beltrami system
// (dz/dx)^T (dz/dx) = G(x).

#include "conflat/jets.hpp"
#include "conflat/tensor.hpp"

#include <functional>
#include <optional>
#include <string>
#include <vector>

namespace conflat::qc {

enum class Provenance { analytic, finite_difference };

struct JacobianSample {
  Vector x;
  Matrix J;  // m x n, J(j, i) = d f_j / d x_i
  Provenance provenance = Provenance::analytic;
};

using VectorField = std::function<Vector(const Vector&)>;
using JacobianField = std::function<Matrix(const Vector&)>;
using MetricField = std::function<Matrix(const Vector&)>;

/// A smooth map R^n -> R^m, optionally with a closed-form Jacobian.
struct Map {
  std::string name;
  int in_dim = 0;
  int out_dim = 0;
  VectorField eval;
  JacobianField jacobian;  // may be empty
};

/// Jacobian at x: analytic when the map has one, else central differences
/// with step eps^(1/3) (1 + |x_i|).
JacobianSample jacobian(const Map& f, const Vector& x, bool force_fd = false);

struct Conformality {
  double defect = 0.0;  // ||J^T J - c^2 I||_F / c^2
  double factor = 1.0;  // c = det(J^T J)^(1/(2n))
};

/// Throws NumericalError when det(J^T J) <= 0.
Conformality conformal_defect(const Matrix& J);
inline Conformality conformal_defect(const JacobianSample& s) { return conformal_defect(s.J); }

struct QCPoint {
  Vector x;
  double defect = 0.0;    // conformal defect, or Beltrami residual
  double factor = 1.0;    // conformal factor (1 for residual rows)
  int newton_iterations = 0;
};

struct QCReport {
  std::vector<QCPoint> points;
  double max_defect = 0.0;
  int skipped = 0;

  void add(QCPoint p);
};

QCReport qc_check_map(const Map& f, const std::vector<Vector>& points, bool force_fd = false);

/// ||(dh/dx)^T (dh/dx) - G(x)||_F / (1 + ||G(x)||_F) per point.
/// Throws NumericalError if G(x) is not symmetric positive definite.
QCReport beltrami_residual(const Map& h, const MetricField& G, const std::vector<Vector>& points,
                           bool force_fd = false);

/// G = (dsigma/dx)^T (dsigma/dx) of a parameterization.
MetricField induced_metric(const Map& sigma);

struct NewtonResult {
  Vector x;
  int iterations = 0;
  bool converged = false;
};

/// Solves h(y) = z by damped Newton from `seed` (tolerance 1e-12 on the
/// residual, at most 50 iterations, step halved while the residual grows).
NewtonResult invert(const Map& h, const Vector& z, const Vector& seed);

/// For each x: z = h(x); f = sigma o h^{-1}; the Jacobian of f at z by central
/// differences (each stencil point inverted by Newton seeded at x); reports the
/// conformal defect of f. Points where Newton fails are skipped.
QCReport compose_check(const Map& sigma, const Map& h, const std::vector<Vector>& points);

struct DistortionRow {
  double radius = 0.0;
  double ratio = 1.0;
};

/// max/min of |f(x + r e) - f(x)| over a deterministic direction set: the
/// 2n coordinate directions followed by normalized Halton points.
std::vector<DistortionRow> distortion_ratio(const Map& f, const Vector& x, const std::vector<double>& radii,
                                            int directions);

std::vector<Vector> sphere_directions(int n, int count);

// Built-in maps.
Map identity_map(int n);
/// x -> scale Q x + shift, Q a seeded random orthogonal n x n matrix.
Map similarity_map(int n, double scale, std::uint64_t rotation_seed, Vector shift = {});
/// x -> diag(d) x.
Map diagonal_map(Vector d);
/// x -> (x, r(x)) for a graph surface; analytic Jacobian from the jet.
Map graph_embedding(const SurfaceSpec& spec);
/// x -> (x_1, ..., x_{n-1}, arcsin x_n): solves the Beltrami system of the
/// cylinder graph exactly.
Map cylinder_unroll(int n);
/// Componentwise expression map over x1..x<in_dim>; Jacobian symbolic.
Map expression_map(const std::vector<expr::Expr>& components, int in_dim);

}  // namespace conflat::qc
