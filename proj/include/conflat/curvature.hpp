#pragma once

// Intrinsic and extrinsic tensors of a graph hypersurface x -> (x, r(x)) at a
// point, computed from a SurfaceJet.
//
// Index conventions:
//   christoffel(m, i, j)  = Gamma^m_{ij}
//   riemann(i, j, k, l)   = R_{ijkl} = <R(d_i, d_j) d_k, d_l> = h_il h_jk - h_ik h_jl
//   ricci(i, j)           = g^{mu nu} R_{mu i j nu}
//   shape(j, i)           = s^j_i, so shape = ginv * h
//   cotton(i, j, k)       = C_{ijk} = nabla_j S_ik - nabla_k S_ij
//   dschouten(j, i, k)    = d S_ik / d x_j

#include "conflat/jets.hpp"
#include "conflat/tensor.hpp"

#include <optional>

namespace conflat {

struct MetricData {
  Matrix g;
  Matrix ginv;
  double b = 1.0;
};

struct RicciScalar {
  Matrix ricci;
  double scalar = 0.0;
};

struct CottonData {
  Tensor3 cotton;
  Tensor3 dschouten;
  Matrix schouten;
  Tensor3 christoffel;
};

enum class CottonMode { analytic, fd };

struct CurvaturePack {
  int n = 0;
  Vector x;
  MetricData metric;
  Tensor3 christoffel;
  Matrix h;
  Matrix shape;
  Vector kappa;  // ascending
  Tensor4 riemann;
  Matrix ricci;
  double scalar = 0.0;
  Matrix schouten;            // n >= 3
  std::optional<Tensor4> weyl;  // n >= 4
  std::optional<CottonData> cotton;
};

/// g = I + grad grad^T and the closed-form inverse I - grad grad^T / b.
MetricData metric(const SurfaceJet& jet);

/// Inverse of an SPD matrix by Cholesky, for cross-checking the closed form.
Matrix metric_inverse_direct(const Matrix& g);

Tensor3 christoffel(const SurfaceJet& jet, const MetricData& m);

/// h_ij = r_ij / sqrt(b).
Matrix second_fundamental(const SurfaceJet& jet);

Matrix shape_operator(const MetricData& m, const Matrix& h);

/// s^j_i = -b^{-3/2} r_j sum_k r_k r_ki + b^{-1/2} r_ji, from the Weingarten
/// equation without forming ginv.
Matrix shape_operator_direct(const SurfaceJet& jet);

/// Eigenvalues of h v = kappa g v via g = L L^T and the symmetric problem
/// L^{-1} h L^{-T}; ascending. Throws NumericalError if g is not SPD.
Vector principal_curvatures(const MetricData& m, const Matrix& h);

/// Gauss equation: R_ijkl = (r_il r_jk - r_ik r_jl) / b.
Tensor4 riemann_gauss(const SurfaceJet& jet);

/// Intrinsic route through Christoffel symbols and their exact derivatives.
/// Requires an order-3 jet.
Tensor4 riemann_christoffel(const SurfaceJet& jet);

RicciScalar ricci_scalar(const MetricData& m, const Tensor4& riemann);

/// S_ij = (R_ij - R g_ij / (2(n-1))) / (n-2). Requires n >= 3.
Matrix schouten(const MetricData& m, const Matrix& ricci, double scalar, int n);

/// Weyl tensor. Requires n >= 4; in dimension 3 the Cotton tensor is the
/// flatness obstruction and this throws.
Tensor4 weyl(const MetricData& m, const Tensor4& riemann, const Matrix& ricci, double scalar, int n);

/// Schouten tensor of the jet, end to end.
Matrix schouten_from_jet(const SurfaceJet& jet);

/// Cotton tensor from an order-3 jet with the Schouten derivative obtained
/// by exact chain-rule differentiation of the closed forms.
CottonData cotton_analytic(const SurfaceJet& jet);

/// Cotton tensor with dS/dx_j from central differences of the Schouten
/// field (step 1e-4 (1 + |x_j|), one Richardson level). `field` must yield
/// at least order-2 jets on the stencil.
CottonData cotton_fd(const JetField& field, const Vector& x);

CottonData cotton(const SurfaceSpec& spec, const Vector& x, CottonMode mode);

struct PackOptions {
  /// Compute Cotton; defaults to n == 3 when unset.
  std::optional<bool> with_cotton;
  CottonMode cotton_mode = CottonMode::analytic;
};

/// Builds every tensor of a CurvaturePack at successive points of one surface.
class CurvatureEngine {
 public:
  explicit CurvatureEngine(const SurfaceSpec& spec, PackOptions options = {});

  CurvaturePack at(const Vector& x) const;

  int dim() const { return n_; }
  bool computes_cotton() const { return with_cotton_; }

 private:
  int n_;
  bool with_cotton_;
  CottonMode mode_;
  JetField field_;   // order 3 when analytic Cotton is needed, else 2
  JetField field2_;  // order 2, for fd Cotton stencils
};

CurvaturePack curvature_pack(const SurfaceSpec& spec, const Vector& x, PackOptions options = {});

/// Algebraic identities of a pack, each normalized by (1 + the largest
/// magnitude among the tensors involved).
struct InvariantResiduals {
  double riemann_antisymmetry = 0.0;  // R_ijkl + R_jikl and R_ijkl + R_ijlk
  double riemann_pair_symmetry = 0.0;  // R_ijkl - R_klij
  double bianchi = 0.0;                // R_ijkl + R_iklj + R_iljk
  double weyl_trace = 0.0;             // every g-contraction of W
  double cotton_antisymmetry = 0.0;    // C_ijk + C_ikj
  double cotton_trace = 0.0;           // g^ij C_ijk and g^ik C_ijk
  double metric_inverse = 0.0;         // g ginv - I, closed form vs Cholesky

  double worst() const;
};

InvariantResiduals check_invariants(const CurvaturePack& pack);

}  // namespace conflat
