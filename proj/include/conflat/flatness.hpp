#pragma once

// Local conformal flatness verdicts: vanishing Weyl tensor (n >= 4),
// vanishing Cotton tensor (n = 3), or n-1 coinciding principal curvatures
// (n >= 4), evaluated over sampled points of a surface.

#include "conflat/curvature.hpp"
#include "conflat/jets.hpp"

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <variant>
#include <vector>

namespace conflat {

enum class Criterion { weyl, cotton, principal_curvature };
enum class Aggregate { flat, not_flat, inconclusive };

std::string to_string(Criterion c);
std::string to_string(Aggregate a);

/// Default tolerances: symbolic or closed-form jets vs finite-difference jets.
inline constexpr double kTolAnalytic = 1e-8;
inline constexpr double kTolFiniteDifference = 1e-4;

/// Margin a failing point must exceed tol by to count as a not-flat witness.
inline constexpr double kWitnessFactor = 10.0;

struct PointVerdict {
  bool pass = false;
  double measure = 0.0;  // tensor norm or curvature spread
  double scale = 1.0;    // pass iff measure <= tol * scale
  double tol = 0.0;

  /// measure / (tol * scale)
  double excess() const { return measure / (tol * scale); }
};

/// Weyl (n >= 4) or Cotton (n = 3) test on a computed pack.
///  n >= 4: max|W| <= tol (1 + max|R|)
///  n  = 3: max|C| <= tol max(1, 1 + max|S| max|Gamma| + max|dS|)
PointVerdict classify_point(const CurvaturePack& pack, int n, double tol);

/// n-1 coinciding principal curvatures. kappa must be sorted ascending.
/// Passes iff min(spread(k2..kn), spread(k1..k(n-1))) <= tol (1 + max|k|).
PointVerdict pc_criterion(const Vector& kappa, int n, double tol);

struct RandomSampler {
  int count = 100;
  std::uint64_t seed = 0;
};

struct GridSampler {
  std::vector<int> per_axis;
};

using Sampler = std::variant<RandomSampler, GridSampler>;

/// Deterministic points in the spec's sampling domain. Random draws use
/// rejection (up to 1000 attempts per accepted point); grid points are cell
/// centers. Points closer than min_abs_coord to a coordinate hyperplane are
/// rejected as well. `rejected` receives the number of discarded candidates.
std::vector<Vector> sample_points(const SurfaceSpec& spec, const Sampler& sampler, double min_abs_coord = 0.0,
                                  int* rejected = nullptr);

struct ScanOptions {
  Sampler sampler = RandomSampler{};
  std::optional<Criterion> criterion;  // default: weyl for n >= 4, cotton for n = 3
  std::optional<double> tol;           // default from the jet provider
  CottonMode mode = CottonMode::analytic;
  double min_abs_coord = 0.0;
};

struct PointRecord {
  Vector x;
  PointVerdict verdict;
  std::map<std::string, double> witness;  // max|R|, max|W|, kappa spread, ...
};

struct FlatnessReport {
  std::string surface_id;
  int n = 0;
  Criterion criterion = Criterion::weyl;
  double tol = 0.0;
  std::vector<PointRecord> points;
  Aggregate aggregate = Aggregate::inconclusive;
  int skipped_domain = 0;
  int skipped_singular = 0;
};

/// flat iff every point passes; not-flat iff some point fails by at least
/// kWitnessFactor * tol; otherwise inconclusive.
Aggregate aggregate_verdict(const std::vector<PointRecord>& points);

Criterion default_criterion(int n);
double default_tolerance(const SurfaceSpec& spec, CottonMode mode);

/// Throws NumericalError when no sampled point could be evaluated.
FlatnessReport grid_scan(const SurfaceSpec& spec, const ScanOptions& options);

/// det(B - lambda I) for the ellipsoid's B = diag(d) (I + r r^T),
/// d_i = 1/(a_i - 1), through the rank-one determinant identity.
double ellipsoid_charpoly(const SurfaceJet& jet, const std::vector<double>& a, double lambda);

/// Eigenvalues of B from the secular form of the charpoly (no dense
/// eigensolver), mapped to principal curvatures k = q (1 + 1/mu),
/// q = -1 / (sqrt(b) r). Ascending.
Vector ellipsoid_curvatures_from_charpoly(const SurfaceJet& jet, const std::vector<double>& a);

/// Roots mu of det(B - mu I), ascending, with multiplicity.
Vector ellipsoid_charpoly_roots(const SurfaceJet& jet, const std::vector<double>& a);

}  // namespace conflat
