#include <gtest/gtest.h>

#include <cmath>
#include <numbers>

#include "anosov/torus_maps.hpp"

using namespace anosov;

namespace {

constexpr double kTwoPi = 2.0 * std::numbers::pi;

Vec point(double x, double y) {
  Vec v(2);
  v << x, y;
  return v;
}

// G = Id + eps (0.1 sin 2 pi y, 0.1 sin 2 pi x)
Vec conjugator(const Vec& z, double eps) {
  return point(z[0] + eps * 0.1 * std::sin(kTwoPi * z[1]), z[1] + eps * 0.1 * std::sin(kTwoPi * z[0]));
}

Mat finite_difference_jacobian(const TorusMap& f, const Vec& x) {
  const int d = f.dim();
  Mat j(d, d);
  const double h = 1e-6;
  for (int c = 0; c < d; ++c) {
    Vec e = Vec::Zero(d);
    e[c] = h;
    j.col(c) = (f.evaluate(x + e) - f.evaluate(x - e)) / (2 * h);
  }
  return j;
}

}  // namespace

TEST(TrigFieldTest, ValueAndBound) {
  TrigTerm a{0, IntVec::Unit(2, 1), 0.5, -0.25};
  TrigTerm b{1, IntVec::Ones(2), 0.0, 2.0};
  const TrigField field(2, {a, b});
  const Vec x = point(0.2, 0.7);
  const Vec v = field.value(x);
  EXPECT_NEAR(v[0], 0.5 * std::cos(kTwoPi * 0.7) - 0.25 * std::sin(kTwoPi * 0.7), 1e-15);
  EXPECT_NEAR(v[1], 2.0 * std::sin(kTwoPi * 0.9), 1e-14);
  EXPECT_DOUBLE_EQ(field.coefficient_bound(), std::hypot(0.75, 2.0));
  EXPECT_THROW(TrigField(3, {a}), Error);
}

TEST(TorusMapTest, ShearMatchesClosedForm) {
  const double eps = 0.05;
  const TorusMap f = fixture_catalog("shear_A0", eps);
  Rng rng(2);
  for (int i = 0; i < 50; ++i) {
    const Vec x = 3.0 * rng.uniform_point(2);
    const Vec y = f.evaluate(x);
    EXPECT_NEAR(y[0], 3 * x[0] + x[1], 1e-14);
    EXPECT_NEAR(y[1], x[0] + x[1] + eps * std::sin(kTwoPi * x[0]), 1e-14);
  }
}

TEST(TorusMapTest, LiftCommutesWithIntegerTranslation) {
  const TorusMap f = fixture_catalog("conjugated_A0", 0.05);
  const Vec x = point(0.3, 0.6);
  const Vec n = point(2, -1);
  const Vec an = f.linear().matrix.to_real() * n;
  EXPECT_LE((f.evaluate(x + n) - f.evaluate(x) - an).norm(), 1e-12);
}

TEST(TorusMapTest, JacobianMatchesFiniteDifferences) {
  for (const auto& [name, eps] : std::vector<std::pair<std::string, double>>{
           {"shear_A0", 0.05}, {"conjugated_A0", 0.05}, {"product_T3", 0.05}, {"cubic_companion", 0.02}}) {
    const TorusMap f = fixture_catalog(name, eps);
    Rng rng(4);
    for (int i = 0; i < 10; ++i) {
      const Vec x = rng.uniform_point(f.dim());
      EXPECT_LE((f.jacobian(x) - finite_difference_jacobian(f, x)).norm(), 1e-7) << name;
    }
  }
}

TEST(TorusMapTest, ConjugatedFixtureIsConjugateToLinear) {
  const double eps = 0.05;
  const TorusMap f = fixture_catalog("conjugated_A0", eps);
  const Mat a = f.linear().matrix.to_real();
  Rng rng(5);
  for (int i = 0; i < 50; ++i) {
    const Vec z = rng.uniform_point(2);
    EXPECT_LE((f.evaluate(conjugator(z, eps)) - conjugator(a * z, eps)).norm(), 1e-11);
    EXPECT_LE((f.conjugator_inverse(conjugator(z, eps)) - z).norm(), 1e-12);
  }
}

TEST(TorusMapTest, WithEpsilonKeepsTheFamily) {
  const TorusMap f = fixture_catalog("shear_A0", 0.01);
  const TorusMap g = f.with_epsilon(0.02);
  EXPECT_EQ(g.name(), "shear_A0");
  EXPECT_DOUBLE_EQ(g.epsilon(), 0.02);
  EXPECT_FALSE(g.is_linear());
  EXPECT_TRUE(f.with_epsilon(0.0).is_linear());
}

TEST(InvertLift, RoundTrip) {
  for (const auto& [name, eps] : std::vector<std::pair<std::string, double>>{
           {"linear_A0", 0.0}, {"shear_A0", 0.3}, {"conjugated_A0", 0.05}, {"cubic_companion", 0.02}}) {
    const TorusMap f = fixture_catalog(name, eps);
    Rng rng(6);
    for (int i = 0; i < 30; ++i) {
      const Vec y = 20.0 * rng.uniform_point(f.dim()) - Vec::Constant(f.dim(), 10.0);
      const Vec x = invert_lift(f, y);
      EXPECT_LE((f.evaluate(x) - y).norm(), 1e-11 * std::max(1.0, y.norm())) << name;
    }
  }
}

TEST(InvertLift, RefusesWhenNotALocalDiffeomorphism) {
  // det DF = 2 - 2 pi eps cos 2 pi x changes sign for eps > 1 / pi
  const TorusMap f = fixture_catalog("shear_A0", 0.5);
  EXPECT_FALSE(f.local_diffeo_on_grid());
  EXPECT_LT(f.min_jacobian_det(), 0.0);
  try {
    invert_lift(f, point(0.2, 0.3));
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::NotLocalDiffeo);
  }
  EXPECT_TRUE(fixture_catalog("shear_A0", 0.3).local_diffeo_on_grid());
}

TEST(Preimages, CountEqualsDegree) {
  const TorusMap lin = fixture_catalog("linear_A0");
  const auto z = torus_preimages(lin, point(0, 0));
  ASSERT_EQ(z.size(), 2u);
  EXPECT_LE(torus_distance(z[0], point(0, 0)), 1e-14);
  EXPECT_LE(torus_distance(z[1], point(0.5, 0.5)), 1e-14);
  for (const auto& [name, eps] : std::vector<std::pair<std::string, double>>{
           {"shear_A0", 0.05}, {"conjugated_A0", 0.05}, {"product_T3", 0.05}, {"cubic_companion", 0.02}}) {
    const TorusMap f = fixture_catalog(name, eps);
    Rng rng(8);
    const Vec x = rng.uniform_point(f.dim());
    const auto pre = torus_preimages(f, x);
    EXPECT_EQ(static_cast<std::int64_t>(pre.size()), f.degree()) << name;
    for (const auto& p : pre) EXPECT_LE(torus_distance(f.evaluate(p), x), 1e-10);
    for (std::size_t i = 0; i < pre.size(); ++i)
      for (std::size_t j = i + 1; j < pre.size(); ++j) EXPECT_GT(torus_distance(pre[i], pre[j]), 1e-6);
  }
}

TEST(Certificate, SmallPerturbationsCertify) {
  for (const auto& [name, eps] : std::vector<std::pair<std::string, double>>{
           {"linear_A0", 0.0}, {"shear_A0", 0.01}, {"shear_A0", 0.05}, {"conjugated_A0", 0.05}, {"product_T3", 0.05}}) {
    const AnosovCertificate c = anosov_certificate(fixture_catalog(name, eps), 1.0, 1);
    EXPECT_TRUE(c.certified) << name << " " << eps;
    EXPECT_GT(c.min_expansion, 1.0);
    EXPECT_LE(c.max_unstable_slope, 0.5);
  }
}

TEST(Certificate, CubicNeedsTwoIterations) {
  const TorusMap f = fixture_catalog("cubic_companion", 0.02);
  EXPECT_FALSE(measure_cones(f, 1.0, 1, 0).certified);
  EXPECT_TRUE(measure_cones(f, 1.0, 2, 0).certified);
}

TEST(Certificate, LargeShearFailsWithWitness) {
  const TorusMap f = fixture_catalog("shear_A0", 2.0);
  const AnosovCertificate c = measure_cones(f, 1.0, 1, 0);
  EXPECT_FALSE(c.certified);
  EXPECT_FALSE(c.failure.empty());
  EXPECT_EQ(c.witness_point.size(), 2);
  try {
    anosov_certificate(f, 1.0, 1);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::CertificationFailed);
  }
  EXPECT_THROW(measure_cones(f, -1.0, 1, 0), Error);
}

TEST(Fixtures, NamesAndErrors) {
  for (const auto& name : fixture_names()) EXPECT_EQ(fixture_catalog(name, 0.01).name(), name);
  try {
    fixture_catalog("custom");
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::InvalidArgument);
  }
  try {
    fixture_catalog("not_a_fixture");
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::UnknownFixture);
  }
  EXPECT_EQ(default_grid(2), 64);
  EXPECT_EQ(default_grid(3), 24);
}
