#pragma once

#include <cstdint>
#include <functional>
#include <vector>

#include "anosov/bundles_branches.hpp"
#include "anosov/conjugacy.hpp"
#include "anosov/periodic_orbits.hpp"

namespace anosov {

using ScalarField = std::function<double(const Vec&)>;

// ---------------------------------------------------------------------------
// Stable leaves

/// A traced leaf on the lift. Nodes run from one end to the other; origin is the start point.
struct LeafPolyline {
  std::vector<Vec> points;
  std::vector<double> arclength;  ///< cumulative from points[0]
  int index = 0;                  ///< stable bundle index (0 = strongest)
  int origin = 0;
  double step = 0.0;

  double length() const { return arclength.empty() ? 0.0 : arclength.back(); }
  double origin_arclength() const { return arclength.at(origin); }
  Vec point_at(double s) const;
};

struct TraceOptions {
  int depth = 24;          ///< pull-back depth for the direction field
  double max_turn = 0.25;  ///< radians between the two midpoint-rule directions
};

/// Midpoint-rule integration of E^s_i from x to arclength L on both sides.
/// Throws StepRejected when the direction turns faster than the step size allows.
LeafPolyline trace_stable_leaf(const TorusMap& f, const Vec& x, int i, double length, double step,
                               const TraceOptions& options = {});

/// Largest angle between a segment and E^s_i at the segment midpoint.
double tangency_residual(const TorusMap& f, const LeafPolyline& leaf, int depth = 24);

/// Distance from a point to the polyline, and the arclength of the closest point.
double distance_to_polyline(const LeafPolyline& leaf, const Vec& p, double* arclength = nullptr);

/// Largest distance from F(leaf) to the traced leaf through F(origin).
double leaf_invariance_defect(const TorusMap& f, const LeafPolyline& leaf, const TraceOptions& options = {});

// ---------------------------------------------------------------------------
// Cohomological equation phi = lambda + psi o F - psi

/// Real trigonometric polynomial over the half-space of frequencies with |k|_inf <= order.
class FourierSeries {
 public:
  FourierSeries() = default;
  FourierSeries(int dim, int order);

  int dim() const { return dim_; }
  int order() const { return order_; }
  std::size_t basis_size() const { return 2 * modes_.size(); }
  const std::vector<IntVec>& modes() const { return modes_; }
  Vec& coefficients() { return coef_; }
  const Vec& coefficients() const { return coef_; }

  /// cos and sin of 2 pi k.x for every mode, interleaved.
  void basis(const Vec& x, double* out) const;
  double value(const Vec& x) const;
  FourierSeries scaled(double factor) const;
  double sup_on_grid(int grid_n) const;

 private:
  int dim_ = 0;
  int order_ = 0;
  std::vector<IntVec> modes_;
  Vec coef_;
};

struct LivschitzOptions {
  int order = 0;                  ///< 0 picks 16 / 4 / 2 by dimension
  double oversampling = 2.5;      ///< collocation points per unknown
  int residual_grid = 0;          ///< 0 picks 64 / 16 / 6 by dimension
  int obstruction_period = 4;
  double obstruction_tol = 1e-4;
  int orbit_average_length = 4000;
  std::uint64_t seed = 7;
};

struct CocycleSolution {
  FourierSeries psi;
  double lambda = 0.0;         ///< constant fitted together with psi
  double orbit_average = 0.0;  ///< Birkhoff average along one long orbit
  double residual = 0.0;       ///< sup over a uniform grid of |phi - lambda - psi o F + psi|
  double collocation_rms = 0.0;
  std::vector<double> periodic_averages;
  std::vector<int> periodic_periods;
  double obstruction = 0.0;  ///< max |periodic average - lambda|
  double obstruction_tol = 1e-4;
  bool obstructed = false;
  int collocation_points = 0;
};

/// Least-squares Fourier solution of the cohomological equation. A nonzero periodic
/// obstruction is flagged on the result; require_coboundary turns it into an error.
CocycleSolution livschitz_solve(const TorusMap& f, const ScalarField& phi, const LivschitzOptions& options = {},
                                const std::vector<PeriodicOrbit>* orbits = nullptr);

void require_coboundary(const CocycleSolution& solution);

/// log of the growth of DF on E^s_1 (i = 0) or on the flag quotient E^s_(1,i+1) / E^s_(1,i).
double bundle_observable(const TorusMap& f, const Vec& x, int i, int depth);

struct BundleCoboundary {
  int index = 0;
  CocycleSolution solution;
  FourierSeries Psi;  ///< log|DF|E^s_i| = lambda + Psi - Psi o F
  double linear_exponent = 0.0;
  double lambda_error = 0.0;
  double sup_abs_Psi = 0.0;
  double equivalence_constant = 1.0;  ///< exp(sup |Psi|)
  double operator()(const Vec& x) const { return Psi.value(x); }
};

BundleCoboundary bundle_coboundary_psi(const TorusMap& f, int i, const LivschitzOptions& options = {},
                                       int depth = 24, const std::vector<PeriodicOrbit>* orbits = nullptr);

// ---------------------------------------------------------------------------
// Affine leaf metric

/// Trapezoid rule for the integral of exp(Psi) |dgamma| over consecutive nodes.
double affine_length(const std::vector<Vec>& nodes, const ScalarField& Psi);

/// Affine distance along the leaf between arclength parameters sa and sb.
double affine_distance(const LeafPolyline& leaf, double sa, double sb, const ScalarField& Psi);

struct AffinityReport {
  std::vector<double> ratios;  ///< d(Fa, Fb) / d(a, b)
  double expected = 0.0;       ///< exp(lambda)
  double max_relative_error = 0.0;
  /// Pairs violating arclength / K <= d <= K arclength with K = exp(sup |Psi|).
  int equivalence_violations = 0;
  double worst_equivalence_ratio = 1.0;  ///< max over pairs of max(d / arc, arc / d)
};

/// Checks d(Fa, Fb) = exp(lambda) d(a, b) on random pairs along traced leaves.
AffinityReport affinity_check(const TorusMap& f, const BundleCoboundary& psi, int leaves, int pairs_per_leaf,
                              std::uint64_t seed = 3, double length = 0.2, double step = 1e-3, int depth = 24);

// ---------------------------------------------------------------------------
// Holonomy and conjugacy on leaves (d = 2)

struct HolonomyOptions {
  double search_radius = 0.5;
  double step = 1e-3;
  int branch_depth = 12;
};

struct HolonomyPoint {
  Vec point;
  double arclength = 0.0;  ///< position on the target stable leaf
};

/// Slides y along its unstable curve until it meets the traced stable leaf W^s(x').
/// Refuses when the verdict says the unstable direction depends on the branch.
HolonomyPoint unstable_holonomy(const TorusMap& f, const IntegrabilityVerdict& verdict, const LeafPolyline& target,
                                const Vec& y, const HolonomyOptions& options = {});
HolonomyPoint unstable_holonomy(const TorusMap& f, const IntegrabilityVerdict& verdict, const Vec& x_prime,
                                const Vec& y, const HolonomyOptions& options = {});

/// Follows the unstable curve from x for the given signed arclength.
Vec unstable_displacement(const TorusMap& f, const Vec& x, double distance, const HolonomyOptions& options = {});

struct IsometryReport {
  int pairs = 0;
  std::vector<double> affine;  ///< d^s per pair (before scaling)
  std::vector<double> linear;  ///< comparison distance per pair
  double max_relative_defect = 0.0;
  double scale = 1.0;  ///< fitted constant when comparing with the linear leaf
  std::vector<double> defects;
};

IsometryReport holonomy_isometry_check(const TorusMap& f, const IntegrabilityVerdict& verdict,
                                       const BundleCoboundary& psi, int samples, std::uint64_t seed = 5,
                                       const HolonomyOptions& options = {});

/// Compares the affine distance along traced leaves with |H(a) - H(b)| on the linear leaf.
IsometryReport conjugacy_leaf_isometry_check(const ConjugacyEvaluator& ce, const BundleCoboundary& psi, int samples,
                                             std::uint64_t seed = 9, double length = 0.2, double step = 1e-3);

/// Largest unstable component of H(p) - H(origin) over the leaf nodes.
double leaf_conjugacy_defect(const ConjugacyEvaluator& ce, const LeafPolyline& leaf);

struct QuasiIsometryFit {
  double a = 0.0;
  double b = 0.0;
  int pairs = 0;
};

/// arclength <= a |x - y| + b over node pairs of the traced leaves.
QuasiIsometryFit quasi_isometry_fit(const std::vector<LeafPolyline>& leaves, int pairs_per_leaf, std::uint64_t seed = 11);

}  // namespace anosov
