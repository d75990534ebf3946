#include "conflat/flatness.hpp"

#include "conflat/errors.hpp"

#include <algorithm>
#include <cmath>
#include <complex>
#include <random>

namespace conflat {

std::string to_string(Criterion c) {
  switch (c) {
    case Criterion::weyl: return "weyl";
    case Criterion::cotton: return "cotton";
    case Criterion::principal_curvature: return "principal-curvature";
  }
  return "unknown";
}

std::string to_string(Aggregate a) {
  switch (a) {
    case Aggregate::flat: return "flat";
    case Aggregate::not_flat: return "not-flat";
    case Aggregate::inconclusive: return "inconclusive";
  }
  return "unknown";
}

// ------------------------------------------------------------- point tests

PointVerdict classify_point(const CurvaturePack& pack, int n, double tol) {
  if (n < 3) throw std::invalid_argument("conformal flatness criteria require n >= 3");
  PointVerdict v;
  v.tol = tol;
  if (n >= 4) {
    if (!pack.weyl) throw std::invalid_argument("pack has no Weyl tensor");
    v.measure = pack.weyl->max_abs();
    v.scale = 1.0 + pack.riemann.max_abs();
  } else {
    if (!pack.cotton) throw std::invalid_argument("pack has no Cotton tensor");
    const CottonData& c = *pack.cotton;
    v.measure = c.cotton.max_abs();
    v.scale = std::max(1.0, 1.0 + max_abs(c.schouten) * c.christoffel.max_abs() + c.dschouten.max_abs());
  }
  v.pass = v.measure <= tol * v.scale;
  return v;
}

PointVerdict pc_criterion(const Vector& kappa, int n, double tol) {
  if (n <= 3) throw std::invalid_argument("principal-curvature criterion requires n >= 4");
  if (kappa.size() != n) throw std::invalid_argument("kappa has the wrong length");
  const double drop_first = kappa[n - 1] - kappa[1];
  const double drop_last = kappa[n - 2] - kappa[0];
  PointVerdict v;
  v.tol = tol;
  v.measure = std::min(drop_first, drop_last);
  v.scale = 1.0 + kappa.cwiseAbs().maxCoeff();
  v.pass = v.measure <= tol * v.scale;
  return v;
}

Aggregate aggregate_verdict(const std::vector<PointRecord>& points) {
  bool all_pass = true;
  for (const auto& p : points) {
    if (p.verdict.pass) continue;
    all_pass = false;
    if (p.verdict.measure >= kWitnessFactor * p.verdict.tol * p.verdict.scale) return Aggregate::not_flat;
  }
  return all_pass ? Aggregate::flat : Aggregate::inconclusive;
}

Criterion default_criterion(int n) { return n == 3 ? Criterion::cotton : Criterion::weyl; }

double default_tolerance(const SurfaceSpec& spec, CottonMode mode) {
  if (spec.kind == SurfaceKind::graph_fn || mode == CottonMode::fd) return kTolFiniteDifference;
  return kTolAnalytic;
}

// --------------------------------------------------------------- sampling

namespace {

double unit_double(std::mt19937_64& gen) { return static_cast<double>(gen() >> 11) * 0x1.0p-53; }

bool far_from_axes(const Vector& x, double min_abs) {
  return min_abs <= 0.0 || x.cwiseAbs().minCoeff() >= min_abs;
}

}  // namespace

std::vector<Vector> sample_points(const SurfaceSpec& spec, const Sampler& sampler, double min_abs_coord,
                                  int* rejected) {
  const int n = spec.n;
  if (spec.domain.dim() != n) throw SpecError("domain box does not match surface dimension");
  std::vector<Vector> out;
  int dropped = 0;

  if (const auto* rs = std::get_if<RandomSampler>(&sampler)) {
    if (rs->count < 1) throw SpecError("random sampler needs a positive point count");
    std::mt19937_64 gen(rs->seed);
    const long long max_attempts = 1000LL * rs->count;
    long long attempts = 0;
    while (static_cast<int>(out.size()) < rs->count && attempts < max_attempts) {
      ++attempts;
      Vector x(n);
      for (int i = 0; i < n; ++i) {
        const auto [lo, hi] = spec.domain.bounds[static_cast<std::size_t>(i)];
        x[i] = lo + unit_double(gen) * (hi - lo);
      }
      if (in_sampling_domain(spec, x) && far_from_axes(x, min_abs_coord)) {
        out.push_back(std::move(x));
      } else {
        ++dropped;
      }
    }
  } else {
    const auto& grid = std::get<GridSampler>(sampler);
    if (static_cast<int>(grid.per_axis.size()) != n) throw SpecError("grid needs one count per axis");
    for (int k : grid.per_axis)
      if (k < 1) throw SpecError("grid counts must be positive");
    std::vector<int> idx(static_cast<std::size_t>(n), 0);
    for (;;) {
      Vector x(n);
      for (int i = 0; i < n; ++i) {
        const auto [lo, hi] = spec.domain.bounds[static_cast<std::size_t>(i)];
        const int k = grid.per_axis[static_cast<std::size_t>(i)];
        x[i] = lo + (idx[static_cast<std::size_t>(i)] + 0.5) * (hi - lo) / k;
      }
      if (in_sampling_domain(spec, x) && far_from_axes(x, min_abs_coord)) {
        out.push_back(std::move(x));
      } else {
        ++dropped;
      }
      int axis = n - 1;
      while (axis >= 0 && ++idx[static_cast<std::size_t>(axis)] == grid.per_axis[static_cast<std::size_t>(axis)]) {
        idx[static_cast<std::size_t>(axis)] = 0;
        --axis;
      }
      if (axis < 0) break;
    }
  }
  if (rejected) *rejected = dropped;
  return out;
}

// ------------------------------------------------------------------- scan

FlatnessReport grid_scan(const SurfaceSpec& spec, const ScanOptions& options) {
  validate_spec(spec);
  const int n = spec.n;
  const Criterion criterion = options.criterion.value_or(default_criterion(n));
  switch (criterion) {
    case Criterion::weyl:
      if (n < 4) throw std::invalid_argument("Weyl criterion requires n >= 4");
      break;
    case Criterion::cotton:
      if (n != 3) throw std::invalid_argument("Cotton criterion applies to n = 3");
      break;
    case Criterion::principal_curvature:
      if (n < 4) throw std::invalid_argument("principal-curvature criterion requires n >= 4");
      break;
  }

  FlatnessReport report;
  report.surface_id = spec.id;
  report.n = n;
  report.criterion = criterion;
  report.tol = options.tol.value_or(default_tolerance(spec, options.mode));
  if (!(report.tol > 0.0)) throw std::invalid_argument("tolerance must be positive");

  PackOptions pack_options;
  pack_options.with_cotton = criterion == Criterion::cotton;
  pack_options.cotton_mode = options.mode;
  const CurvatureEngine engine(spec, pack_options);

  int rejected = 0;
  const std::vector<Vector> points = sample_points(spec, options.sampler, options.min_abs_coord, &rejected);
  report.skipped_domain = rejected;

  for (const Vector& x : points) {
    CurvaturePack pack;
    try {
      pack = engine.at(x);
    } catch (const DomainError&) {
      ++report.skipped_domain;
      continue;
    } catch (const OutOfDomainError&) {
      ++report.skipped_domain;
      continue;
    } catch (const NumericalError&) {
      ++report.skipped_singular;
      continue;
    }

    PointRecord rec;
    rec.x = x;
    rec.verdict = criterion == Criterion::principal_curvature ? pc_criterion(pack.kappa, n, report.tol)
                                                              : classify_point(pack, n, report.tol);
    rec.witness["max_abs_riemann"] = pack.riemann.max_abs();
    rec.witness["scalar"] = pack.scalar;
    if (pack.weyl) rec.witness["max_abs_weyl"] = pack.weyl->max_abs();
    if (pack.cotton) rec.witness["max_abs_cotton"] = pack.cotton->cotton.max_abs();
    if (n >= 4) rec.witness["pc_spread"] = pc_criterion(pack.kappa, n, report.tol).measure;
    rec.witness["max_abs_kappa"] = pack.kappa.cwiseAbs().maxCoeff();
    report.points.push_back(std::move(rec));
  }

  if (report.points.empty()) throw NumericalError("no sampled point could be evaluated");
  report.aggregate = aggregate_verdict(report.points);
  return report;
}

// -------------------------------------------------------------- ellipsoid

namespace {

void check_coefficients(const SurfaceJet& jet, const std::vector<double>& a) {
  if (static_cast<int>(a.size()) != jet.n) throw std::invalid_argument("coefficient count does not match jet");
  for (double ai : a)
    if (ai == 1.0) throw std::invalid_argument("ellipsoid coefficients must differ from 1");
}

}  // namespace

double ellipsoid_charpoly(const SurfaceJet& jet, const std::vector<double>& a, double lambda) {
  check_coefficients(jet, a);
  double prod = 1.0;
  double sum = 1.0;
  for (int i = 0; i < jet.n; ++i) {
    const double am1 = a[static_cast<std::size_t>(i)] - 1.0;
    const double denom = 1.0 - am1 * lambda;
    if (denom == 0.0) throw std::invalid_argument("lambda coincides with a pole 1/(a_i - 1)");
    prod *= 1.0 / am1 - lambda;
    sum += jet.grad[i] * jet.grad[i] / denom;
  }
  return prod * sum;
}

Vector ellipsoid_charpoly_roots(const SurfaceJet& jet, const std::vector<double>& a) {
  check_coefficients(jet, a);
  const int n = jet.n;

  // Group equal poles d = 1/(a-1); each group of size m with weight
  // w = d * sum r_i^2 contributes d with multiplicity m - 1 (m if w = 0),
  // and the remaining roots solve 1 + sum_k w_k / (d_k - mu) = 0.
  struct Group {
    double d;
    int count;
    double weight;
  };
  std::vector<Group> groups;
  for (int i = 0; i < n; ++i) {
    const double d = 1.0 / (a[static_cast<std::size_t>(i)] - 1.0);
    const double w = d * jet.grad[i] * jet.grad[i];
    auto it = std::find_if(groups.begin(), groups.end(), [d](const Group& g) { return g.d == d; });
    if (it == groups.end()) {
      groups.push_back({d, 1, w});
    } else {
      ++it->count;
      it->weight += w;
    }
  }

  std::vector<double> roots;
  std::vector<Group> active;
  for (const auto& g : groups) {
    const int fixed = g.weight == 0.0 ? g.count : g.count - 1;
    for (int k = 0; k < fixed; ++k) roots.push_back(g.d);
    if (g.weight != 0.0) active.push_back(g);
  }

  const int K = static_cast<int>(active.size());
  if (K > 0) {
    using C = std::complex<double>;
    // P(mu) = prod_k (d_k - mu) + sum_k w_k prod_{j != k} (d_j - mu); leading coefficient (-1)^K.
    auto P = [&](C mu) {
      C prod = 1.0;
      for (const auto& g : active) prod *= g.d - mu;
      C sum = 0.0;
      for (std::size_t k = 0; k < active.size(); ++k) {
        C part = active[k].weight;
        for (std::size_t j = 0; j < active.size(); ++j)
          if (j != k) part *= active[j].d - mu;
        sum += part;
      }
      return prod + sum;
    };
    const double lead = (K % 2 == 0) ? 1.0 : -1.0;

    double radius = 1.0;
    for (const auto& g : active) radius += std::abs(g.d) + std::abs(g.weight);
    std::vector<C> z(static_cast<std::size_t>(K));
    const C seed(0.4, 0.9);
    for (int k = 0; k < K; ++k) z[static_cast<std::size_t>(k)] = radius * std::pow(seed, k + 1);

    // Durand-Kerner (Weierstrass) simultaneous iteration.
    for (int iter = 0; iter < 500; ++iter) {
      double change = 0.0;
      for (int k = 0; k < K; ++k) {
        C denom = lead;
        for (int j = 0; j < K; ++j)
          if (j != k) denom *= z[static_cast<std::size_t>(k)] - z[static_cast<std::size_t>(j)];
        const C step = P(z[static_cast<std::size_t>(k)]) / denom;
        z[static_cast<std::size_t>(k)] -= step;
        change = std::max(change, std::abs(step) / (1.0 + std::abs(z[static_cast<std::size_t>(k)])));
      }
      if (change < 1e-16) break;
    }
    for (const C& root : z) roots.push_back(root.real());
  }

  std::sort(roots.begin(), roots.end());
  return Eigen::Map<const Vector>(roots.data(), static_cast<Eigen::Index>(roots.size()));
}

Vector ellipsoid_curvatures_from_charpoly(const SurfaceJet& jet, const std::vector<double>& a) {
  const Vector mu = ellipsoid_charpoly_roots(jet, a);
  const double q = -1.0 / (std::sqrt(jet.b) * jet.r);
  Vector kappa(mu.size());
  for (Eigen::Index i = 0; i < mu.size(); ++i) kappa[i] = q * (1.0 + 1.0 / mu[i]);
  std::sort(kappa.begin(), kappa.end());
  return kappa;
}

}  // namespace conflat
