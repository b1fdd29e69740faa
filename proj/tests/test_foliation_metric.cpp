#include <gtest/gtest.h>

#include <cmath>
#include <numbers>

#include "anosov/foliation_metric.hpp"

using namespace anosov;

namespace {

constexpr double kTwoPi = 2.0 * std::numbers::pi;

Vec pt(double x, double y) {
  Vec v(2);
  v << x, y;
  return v;
}

Vec conjugator_inverse_oracle(const Vec& y, double eps) {
  Vec z = y;
  for (int it = 0; it < 200; ++it) z = pt(y[0] - eps * 0.1 * std::sin(kTwoPi * z[1]), y[1] - eps * 0.1 * std::sin(kTwoPi * z[0]));
  return z;
}

// log |DG(z) l| for the conjugator G and the linear stable line l
double log_stretch(const Vec& z, const Vec& l, double eps) {
  Mat dg(2, 2);
  dg << 1, eps * 0.1 * kTwoPi * std::cos(kTwoPi * z[1]), eps * 0.1 * kTwoPi * std::cos(kTwoPi * z[0]), 1;
  return std::log((dg * l).norm());
}

const BundleCoboundary& conjugated_psi() {
  static const BundleCoboundary psi = [] {
    LivschitzOptions o;
    o.orbit_average_length = 500;
    return bundle_coboundary_psi(fixture_catalog("conjugated_A0", 0.05), 0, o);
  }();
  return psi;
}

}  // namespace

TEST(Fourier, BasisLayout) {
  const FourierSeries s(2, 3);
  EXPECT_EQ(s.basis_size(), 48u);
  for (const auto& k : s.modes()) {
    const int lead = k[0] != 0 ? 0 : 1;
    EXPECT_GT(k[lead], 0);
  }
  FourierSeries t(2, 2);
  const auto& modes = t.modes();
  for (std::size_t m = 0; m < modes.size(); ++m) {
    if (modes[m][0] == 1 && modes[m][1] == -2) t.coefficients()[2 * m] = 1.0;
    if (modes[m][0] == 0 && modes[m][1] == 1) t.coefficients()[2 * m + 1] = 0.5;
  }
  const Vec x = pt(0.13, 0.71);
  EXPECT_NEAR(t.value(x), std::cos(kTwoPi * (0.13 - 1.42)) + 0.5 * std::sin(kTwoPi * 0.71), 1e-14);
  EXPECT_NEAR(t.scaled(-2.0).value(x), -2.0 * t.value(x), 1e-14);
  EXPECT_THROW(FourierSeries(2, 0), Error);
}

TEST(Livschitz, ManufacturedCoboundaryIsRecovered) {
  for (const auto& [name, eps] : std::vector<std::pair<std::string, double>>{{"conjugated_A0", 0.05}, {"shear_A0", 0.05}}) {
    const TorusMap f = fixture_catalog(name, eps);
    const auto psi0 = [](const Vec& x) { return std::cos(kTwoPi * x[0]) + 0.5 * std::sin(kTwoPi * (x[0] + 2 * x[1])); };
    const auto phi = [&](const Vec& x) { return 0.3 + psi0(f.torus_step(x)) - psi0(x); };
    LivschitzOptions o;
    o.order = 16;
    o.orbit_average_length = 2000;
    const CocycleSolution s = livschitz_solve(f, phi, o);
    EXPECT_NEAR(s.lambda, 0.3, 1e-9) << name;
    EXPECT_LE(s.residual, 1e-8) << name;
    EXPECT_FALSE(s.obstructed);
    EXPECT_NEAR(s.orbit_average, 0.3, 0.01);
    Rng rng(9);
    for (int i = 0; i < 500; ++i) {
      const Vec x = rng.uniform_point(2);
      EXPECT_NEAR(s.psi.value(x), psi0(x), 1e-8);
    }
    EXPECT_NO_THROW(require_coboundary(s));
  }
}

TEST(Livschitz, BumpObservableIsObstructed) {
  const TorusMap f = fixture_catalog("linear_A0");
  // peaked at the fixed point 0, small on the period-2 orbits
  const auto bump = [](const Vec& x) { return std::exp(4.0 * (std::cos(kTwoPi * x[0]) + std::cos(kTwoPi * x[1]) - 2.0)); };
  LivschitzOptions o;
  o.order = 8;
  o.orbit_average_length = 1000;
  const CocycleSolution s = livschitz_solve(f, bump, o);
  EXPECT_TRUE(s.obstructed);
  EXPECT_GT(s.obstruction, 0.1);
  ASSERT_FALSE(s.periodic_averages.empty());
  EXPECT_NEAR(s.periodic_averages[0], 1.0, 1e-12);
  try {
    require_coboundary(s);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::ObstructionNonzero);
  }
}

TEST(BundleCoboundary, ConjugatedFixtureMatchesConjugatorOracle) {
  const double eps = 0.05;
  const TorusMap f = fixture_catalog("conjugated_A0", eps);
  const BundleCoboundary& psi = conjugated_psi();
  EXPECT_LE(psi.lambda_error, 1e-9);
  EXPECT_LE(psi.solution.residual, 1e-8);
  EXPECT_FALSE(psi.solution.obstructed);
  const Vec l = f.linear().stable_lines.col(0);
  const Vec base = pt(0.1, 0.2);
  const double ref0 = -log_stretch(conjugator_inverse_oracle(base, eps), l, eps);
  Rng rng(10);
  for (int i = 0; i < 100; ++i) {
    const Vec x = rng.uniform_point(2);
    const double ref = -log_stretch(conjugator_inverse_oracle(x, eps), l, eps);
    EXPECT_NEAR(psi(x) - psi(base), ref - ref0, 1e-8);
  }
  EXPECT_NEAR(psi.equivalence_constant, std::exp(psi.sup_abs_Psi), 1e-15);
}

TEST(BundleCoboundary, ShearIsObstructed) {
  LivschitzOptions o;
  o.order = 8;
  o.orbit_average_length = 200;
  const BundleCoboundary b = bundle_coboundary_psi(fixture_catalog("shear_A0", 0.05), 0, o);
  EXPECT_TRUE(b.solution.obstructed);
  EXPECT_GT(b.solution.obstruction, 1e-3);
}

TEST(BundleCoboundary, LinearCubicQuotientExponents) {
  const TorusMap f = fixture_catalog("cubic_companion");
  LivschitzOptions o;
  o.order = 2;
  o.orbit_average_length = 100;
  for (int i = 0; i < 2; ++i) {
    const BundleCoboundary b = bundle_coboundary_psi(f, i, o, 60);
    EXPECT_LE(b.lambda_error, 1e-9) << i;
    EXPECT_LE(b.sup_abs_Psi, 1e-9) << i;
  }
}

TEST(Leaves, LinearLeafIsTheStableLine) {
  const TorusMap f = fixture_catalog("linear_A0");
  const Vec x = pt(0.3, 0.3);
  const LeafPolyline leaf = trace_stable_leaf(f, x, 0, 0.2, 1e-2);
  EXPECT_EQ(leaf.points.size(), 41u);
  EXPECT_NEAR(leaf.length(), 0.4, 1e-12);
  EXPECT_NEAR(leaf.origin_arclength(), 0.2, 1e-12);
  for (const auto& p : leaf.points) EXPECT_LE((f.linear().unstable_projection * (p - x)).norm(), 1e-12);
  EXPECT_LE(tangency_residual(f, leaf), 1e-12);
  EXPECT_LE((leaf.point_at(leaf.origin_arclength()) - x).norm(), 1e-15);
}

TEST(Leaves, MidpointRuleTangencyShrinksWithStep) {
  const TorusMap f = fixture_catalog("shear_A0", 0.05);
  const Vec x = pt(0.3, 0.3);
  const double coarse = tangency_residual(f, trace_stable_leaf(f, x, 0, 0.2, 2e-2));
  const double fine = tangency_residual(f, trace_stable_leaf(f, x, 0, 0.2, 1e-2));
  EXPECT_GT(coarse, 0.0);
  EXPECT_LE(fine, 0.5 * coarse);
  EXPECT_LE(tangency_residual(f, trace_stable_leaf(f, x, 0, 0.2, 1e-3)), 1e-6);
}

TEST(Leaves, SharpTurnsAreRejected) {
  const TorusMap f = fixture_catalog("shear_A0", 0.05);
  TraceOptions o;
  o.max_turn = 1e-9;
  try {
    trace_stable_leaf(f, pt(0.3, 0.3), 0, 0.2, 0.05, o);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::StepRejected);
  }
  EXPECT_THROW(trace_stable_leaf(f, pt(0.3, 0.3), 1, 0.2, 0.01), Error);
}

TEST(Leaves, InvariantAndContracted) {
  const TorusMap f = fixture_catalog("shear_A0", 0.05);
  const LeafPolyline leaf = trace_stable_leaf(f, pt(0.6, 0.1), 0, 0.1, 1e-3);
  EXPECT_LE(leaf_invariance_defect(f, leaf), 1e-6);
  Vec a = leaf.points.front(), b = leaf.points.back();
  const double d0 = (a - b).norm();
  for (int j = 0; j < 10; ++j) a = f.evaluate(a), b = f.evaluate(b);
  EXPECT_LE((a - b).norm(), 0.01 * d0);
}

TEST(Leaves, ConjugacyMapsLeavesToLinearLeaves) {
  const ConjugacyEvaluator ce(fixture_catalog("shear_A0", 0.05));
  const LeafPolyline leaf = trace_stable_leaf(ce.map(), pt(0.2, 0.5), 0, 0.1, 1e-3);
  EXPECT_LE(leaf_conjugacy_defect(ce, leaf), 1e-7);
}

TEST(Leaves, QuasiIsometryConstants) {
  const TorusMap f = fixture_catalog("shear_A0", 0.05);
  std::vector<LeafPolyline> leaves;
  Rng rng(12);
  for (int i = 0; i < 4; ++i) leaves.push_back(trace_stable_leaf(f, rng.uniform_point(2), 0, 0.3, 5e-3));
  const QuasiIsometryFit fit = quasi_isometry_fit(leaves, 50);
  EXPECT_GE(fit.a, 1.0);
  EXPECT_LE(fit.a, 1.1);
  EXPECT_GE(fit.b, 0.0);
  EXPECT_LE(fit.b, 0.05);
  EXPECT_GT(fit.pairs, 150);
  EXPECT_LE(fit.pairs, 200);
}

TEST(AffineMetric, FlatPsiGivesEuclideanLength) {
  const std::vector<Vec> nodes{pt(0, 0), pt(0.3, 0.4), pt(0.3, 1.4)};
  EXPECT_NEAR(affine_length(nodes, [](const Vec&) { return 0.0; }), 1.5, 1e-15);
  EXPECT_NEAR(affine_length(nodes, [](const Vec&) { return std::log(2.0); }), 3.0, 1e-14);
}

TEST(AffineMetric, ContractionIsExactlyAffine) {
  const TorusMap f = fixture_catalog("conjugated_A0", 0.05);
  const BundleCoboundary& psi = conjugated_psi();
  const AffinityReport r = affinity_check(f, psi, 5, 4);
  EXPECT_EQ(r.ratios.size(), 20u);
  EXPECT_NEAR(r.expected, 2.0 - std::sqrt(2.0), 1e-9);
  EXPECT_LE(r.max_relative_error, 1e-6);
  EXPECT_EQ(r.equivalence_violations, 0);
  EXPECT_LE(r.worst_equivalence_ratio, psi.equivalence_constant);
}

TEST(Holonomy, IsometryOnTheSpecialFixture) {
  const TorusMap f = fixture_catalog("conjugated_A0", 0.05);
  const IntegrabilityVerdict v = integrability_verdict(f, 10, 4, 12);
  ASSERT_TRUE(v.integrable);
  const IsometryReport r = holonomy_isometry_check(f, v, conjugated_psi(), 5);
  EXPECT_LE(r.max_relative_defect, 1e-6);
}

TEST(Holonomy, LandsOnTheTargetLeaf) {
  const TorusMap f = fixture_catalog("linear_A0");
  const IntegrabilityVerdict v = integrability_verdict(f, 5, 3, 8);
  const Vec x_prime = pt(0.5, 0.5);
  const LeafPolyline target = trace_stable_leaf(f, x_prime, 0, 0.3, 1e-3);
  const Vec y = pt(0.52, 0.47);
  const HolonomyPoint h = unstable_holonomy(f, v, target, y);
  EXPECT_LE(distance_to_polyline(target, h.point), 1e-12);
  // the displacement lies along the unstable line
  EXPECT_LE((f.linear().stable_projection * (h.point - y)).norm(), 1e-10);
}

TEST(Holonomy, RefusalsAndMisses) {
  const TorusMap shear = fixture_catalog("shear_A0", 0.05);
  const IntegrabilityVerdict bad = integrability_verdict(shear, 10, 4, 12);
  try {
    unstable_holonomy(shear, bad, pt(0.3, 0.3), pt(0.31, 0.3));
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::RefusedNonIntegrable);
  }
  const TorusMap lin = fixture_catalog("linear_A0");
  const IntegrabilityVerdict good = integrability_verdict(lin, 5, 3, 8);
  HolonomyOptions o;
  o.search_radius = 0.01;
  try {
    unstable_holonomy(lin, good, pt(0.3, 0.3), pt(0.6, 0.1), o);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::NoIntersection);
  }
}

TEST(ConjugacyIsometry, SpecialFixtureAfterScaling) {
  const ConjugacyEvaluator ce(fixture_catalog("conjugated_A0", 0.05));
  const IsometryReport r = conjugacy_leaf_isometry_check(ce, conjugated_psi(), 20);
  EXPECT_EQ(r.pairs, 20);
  EXPECT_LE(r.max_relative_defect, 1e-6);
  EXPECT_GT(r.scale, 0.0);
}
