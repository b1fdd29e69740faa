#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <complex>

#include "anosov/periodic_orbits.hpp"

using namespace anosov;

namespace {

std::int64_t periodic_count(const IntMatrix& a, int n) {
  return std::abs(exact_determinant(a.power(n).minus_identity().entries()));
}

int moebius(int n) {
  int result = 1;
  for (int p = 2; p * p <= n; ++p) {
    if (n % p) continue;
    n /= p;
    if (n % p == 0) return 0;
    result = -result;
  }
  return n > 1 ? -result : result;
}

// number of cycles of minimal period n
std::int64_t cycle_count(const IntMatrix& a, int n) {
  std::int64_t points = 0;
  for (int d = 1; d <= n; ++d)
    if (n % d == 0) points += moebius(n / d) * periodic_count(a, d);
  return points / n;
}

// (1/n) log |eigenvalues| of the explicit Jacobian product
std::vector<double> product_exponents(const TorusMap& f, const std::vector<Vec>& cycle) {
  const int d = f.dim();
  Mat prod = Mat::Identity(d, d);
  for (const auto& p : cycle) prod = f.jacobian(p) * prod;
  Eigen::EigenSolver<Mat> es(prod);
  std::vector<double> out;
  for (int i = 0; i < d; ++i) out.push_back(std::log(std::abs(es.eigenvalues()[i])) / cycle.size());
  std::sort(out.begin(), out.end());
  return out;
}

}  // namespace

TEST(LinearPeriodic, CountsMatchDeterminant) {
  const TorusMap f = fixture_catalog("linear_A0");
  const IntMatrix& a = f.linear().matrix;
  EXPECT_EQ(periodic_count(a, 1), 1);
  EXPECT_EQ(periodic_count(a, 2), 7);
  for (int n = 1; n <= 6; ++n) {
    const auto pts = linear_periodic_points(f.linear(), n);
    EXPECT_EQ(static_cast<std::int64_t>(pts.size()), periodic_count(a, n)) << n;
    const Mat an = a.power(n).to_real();
    for (const auto& p : pts) EXPECT_LE(torus_distance(an * p, p), 1e-9);
  }
}

TEST(LinearPeriodic, CyclesPartitionByMinimalPeriod) {
  for (const auto& name : {"linear_A0", "product_T3", "cubic_companion"}) {
    const TorusMap f = fixture_catalog(name);
    const Mat a = f.linear().matrix.to_real();
    for (int n = 1; n <= 4; ++n) {
      const auto cycles = linear_cycles(f.linear(), n);
      EXPECT_EQ(static_cast<std::int64_t>(cycles.size()), cycle_count(f.linear().matrix, n)) << name << " " << n;
      for (const auto& c : cycles) {
        const auto pts = c.points();
        ASSERT_EQ(static_cast<int>(pts.size()), n);
        for (int j = 0; j < n; ++j) EXPECT_LE(torus_distance(a * pts[j], pts[(j + 1) % n]), 1e-9);
      }
    }
  }
}

TEST(LinearPeriodic, CapIsEnforced) {
  const TorusMap f = fixture_catalog("linear_A0");
  try {
    linear_periodic_points(f.linear(), 8, 100);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::ResourceLimit);
  }
  EXPECT_THROW(linear_periodic_points(f.linear(), 0), Error);
}

TEST(RefineOrbit, ShearFixedPointAndPeriodThree) {
  const TorusMap f = fixture_catalog("shear_A0", 0.05);
  Vec zero = Vec::Zero(2);
  const PeriodicOrbit fixed = refine_orbit(f, zero, 1);
  EXPECT_LE(fixed.residual, 1e-11);
  EXPECT_LE(torus_distance(f.evaluate(fixed.points[0]), fixed.points[0]), 1e-11);

  const auto cycles = linear_cycles(f.linear(), 3);
  ASSERT_FALSE(cycles.empty());
  const PeriodicOrbit o = continue_orbit(f, cycles[0].points()[0], cycles[0].translation, 3);
  ASSERT_EQ(o.points.size(), 3u);
  for (int j = 0; j < 3; ++j) EXPECT_LE(torus_distance(f.evaluate(o.points[j]), o.points[(j + 1) % 3]), 1e-10);
}

TEST(Exponents, LinearOrbitsCarryTheLinearSpectrum) {
  const TorusMap f = fixture_catalog("linear_A0");
  const double ls = std::log(2.0 - std::sqrt(2.0)), lu = std::log(2.0 + std::sqrt(2.0));
  for (const auto& o : enumerate_orbits(f, 4)) {
    ASSERT_EQ(o.all_exponents.size(), 2u);
    EXPECT_NEAR(o.all_exponents[0], ls, 1e-12);
    EXPECT_NEAR(o.all_exponents[1], lu, 1e-12);
    EXPECT_NEAR(o.stable_exponents[0], ls, 1e-12);
  }
}

TEST(Exponents, QrAgreesWithExplicitProductAndRelabeling) {
  const TorusMap f = fixture_catalog("shear_A0", 0.05);
  for (const auto& o : enumerate_orbits(f, 4)) {
    const auto ref = product_exponents(f, o.points);
    for (std::size_t i = 0; i < ref.size(); ++i) EXPECT_NEAR(o.all_exponents[i], ref[i], 1e-9);
    std::vector<Vec> rotated(o.points.begin() + 1, o.points.end());
    rotated.push_back(o.points.front());
    const auto again = cocycle_exponents(f, rotated);
    for (std::size_t i = 0; i < again.size(); ++i) EXPECT_NEAR(again[i], o.all_exponents[i], 1e-10);
    // exponent sum is the mean log-determinant
    double logdet = 0.0;
    for (const auto& p : o.points) logdet += std::log(std::abs(f.jacobian(p).determinant()));
    EXPECT_NEAR(o.all_exponents[0] + o.all_exponents[1], logdet / o.period, 1e-10);
  }
}

TEST(Enumerate, OrbitCountsMatchCycleOracle) {
  const TorusMap f = fixture_catalog("shear_A0", 0.01);
  const auto orbits = enumerate_orbits(f, 6);
  std::int64_t expected = 0;
  for (int n = 1; n <= 6; ++n) expected += cycle_count(f.linear().matrix, n);
  EXPECT_EQ(expected, 375);
  EXPECT_EQ(static_cast<std::int64_t>(orbits.size()), expected);
  for (const auto& o : orbits) {
    EXPECT_LE(o.residual, 1e-10);
    for (const auto& p : o.points) {
      EXPECT_FALSE(std::lexicographical_compare(p.begin(), p.end(), o.points[0].begin(), o.points[0].end()));
    }
  }
}

TEST(Rigidity, ConjugatedFixtureIsRigid) {
  const RigidityReport r = rigidity_report(fixture_catalog("conjugated_A0", 0.05), 6);
  EXPECT_TRUE(r.rigid);
  EXPECT_LE(r.max_deviation, 1e-9);
  EXPECT_EQ(r.rows.size(), 375u);
}

TEST(Rigidity, ShearIsNotRigid) {
  const RigidityReport r = rigidity_report(fixture_catalog("shear_A0", 0.05), 6);
  EXPECT_FALSE(r.rigid);
  EXPECT_GT(r.max_deviation, 1e-3);
  EXPECT_GT(r.max_spread, 1e-3);
}

TEST(Rigidity, ReducibleProductHasSpread) {
  const RigidityReport r = rigidity_report(fixture_catalog("product_T3", 0.05), 4);
  EXPECT_FALSE(r.rigid);
  EXPECT_GT(r.max_spread, 5e-4);
}

TEST(Rigidity, LinearCubicIsRigidInBothStableIndices) {
  const RigidityReport r = rigidity_report(fixture_catalog("cubic_companion"), 3);
  EXPECT_TRUE(r.rigid);
  ASSERT_EQ(r.linear_exponents.size(), 2u);
  EXPECT_LE(r.max_deviation, 1e-10);
}
