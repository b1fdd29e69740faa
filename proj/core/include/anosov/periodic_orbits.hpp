#pragma once

#include <cstdint>
#include <vector>

#include "anosov/torus_maps.hpp"

namespace anosov {

/// A periodic cycle of the linear model held exactly: point j is numerators[j] / denominator.
struct LinearCycle {
  int period = 0;
  std::int64_t denominator = 1;
  std::vector<IntVec> numerators;
  IntVec translation;  ///< A^n x_0 - x_0 for the first point as a lift in [0,1)^d
  std::vector<Vec> points() const;
};

/// All x in [0,1)^d with A^n x = x mod Z^d; exactly |det(A^n - I)| points.
std::vector<Vec> linear_periodic_points(const LinearModel& a, int n, std::int64_t cap = 1 << 20);

/// The same points grouped into cycles of minimal period exactly n.
std::vector<LinearCycle> linear_cycles(const LinearModel& a, int n, std::int64_t cap = 1 << 20);

struct PeriodicOrbit {
  std::vector<Vec> points;       ///< cycle on the torus, points[0] lexicographically smallest
  int period = 0;
  IntVec translation_class;      ///< F^n(points[0]) = points[0] + m on the lift
  std::vector<double> stable_exponents;  ///< increasing
  std::vector<double> all_exponents;     ///< increasing
  double residual = 0.0;
  int newton_steps = 0;
  double cross_check_error = 0.0;  ///< QR versus explicit product eigenvalues (period <= 8), else 0
};

struct OrbitOptions {
  double tol = 1e-11;
  int max_iterations = 50;
  double continuation_step = 0.01;
};

/// Newton on F^n(x) - x - m. When m is empty it is inferred from the seed.
PeriodicOrbit refine_orbit(const TorusMap& f, const Vec& seed, int n, const OrbitOptions& options = {},
                           const IntVec& translation = IntVec());

/// Follow a linear periodic point from epsilon = 0 to f.epsilon() in steps of continuation_step.
PeriodicOrbit continue_orbit(const TorusMap& f, const Vec& linear_point, const IntVec& translation, int n,
                             const OrbitOptions& options = {});

/// (1/n) log moduli of the eigenvalues of DF(x_{n-1}) ... DF(x_0), increasing, by periodic QR.
std::vector<double> cocycle_exponents(const TorusMap& f, const std::vector<Vec>& cycle);

/// The k most negative cocycle exponents of the orbit (k = stable dimension of A).
std::vector<double> stable_spectrum_of_orbit(const TorusMap& f, const PeriodicOrbit& orbit);

/// One orbit per cycle for every period 1..max_period.
/// Throws IncompleteEnumeration if a continuation fails or two cycles merge.
std::vector<PeriodicOrbit> enumerate_orbits(const TorusMap& f, int max_period, const OrbitOptions& options = {});

struct RigidityRow {
  int orbit_id = 0;
  int period = 0;
  Vec point0;
  IntVec translation_class;
  std::vector<double> exponents;
  double deviation = 0.0;  ///< max_i |lambda_i - lambda_i(A)|
};

struct RigidityReport {
  std::vector<RigidityRow> rows;
  std::vector<double> linear_exponents;
  std::vector<double> max_deviation_per_index;
  std::vector<double> spread_per_index;  ///< max - min over orbits
  double max_deviation = 0.0;
  double max_spread = 0.0;
  double threshold = 5e-4;
  bool rigid = true;
};

RigidityReport rigidity_report(const TorusMap& f, const std::vector<PeriodicOrbit>& orbits, double threshold = 5e-4);
RigidityReport rigidity_report(const TorusMap& f, int max_period, double threshold = 5e-4);

}  // namespace anosov
