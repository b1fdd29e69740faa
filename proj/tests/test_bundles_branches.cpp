#include <gtest/gtest.h>

#include <cmath>

#include "anosov/bundles_branches.hpp"

using namespace anosov;

namespace {

Vec pt(std::initializer_list<double> xs) {
  Vec v(static_cast<Eigen::Index>(xs.size()));
  int i = 0;
  for (double x : xs) v[i++] = x;
  return v;
}

Mat line(const Vec& v) { return v.normalized(); }

}  // namespace

TEST(StableSplitting, LinearMapReturnsLinearFlag) {
  const TorusMap f = fixture_catalog("linear_A0");
  const StableSplitting s = stable_splitting_at(f, pt({0.3, 0.4}), 10);
  EXPECT_LE(principal_angle(s.flag, f.linear().stable_basis), 1e-12);
  EXPECT_NEAR(s.finite_time_rates[0], std::log(2.0 - std::sqrt(2.0)), 1e-12);
  EXPECT_LE(s.convergence_gap, 1e-12);
}

TEST(StableSplitting, CubicFlagAndRates) {
  const TorusMap f = fixture_catalog("cubic_companion");
  const StableSplitting s = stable_splitting_at(f, pt({0.1, 0.2, 0.3}), 30);
  const LinearModel& lin = f.linear();
  EXPECT_LE(principal_angle(s.flag.col(0), line(lin.stable_lines.col(0))), 1e-10);
  EXPECT_LE(principal_angle(s.flag, lin.stable_basis), 1e-10);
  const auto exps = lin.stable_exponents();
  EXPECT_NEAR(s.finite_time_rates[0], exps[0], 1e-10);
  EXPECT_NEAR(s.finite_time_rates[1], exps[1], 1e-10);
  for (int i = 0; i < 2; ++i) EXPECT_LE(principal_angle(line(stable_line_on_lift(f, pt({0.1, 0.2, 0.3}), i, 40)), line(lin.stable_lines.col(i))), 1e-9);
}

TEST(StableSplitting, RepeatedModuliRaiseGapTooSmall) {
  IntMat m = IntMat::Zero(4, 4);
  m.topLeftCorner(2, 2) << 3, 1, 1, 1;
  m.bottomRightCorner(2, 2) << 3, 1, 1, 1;
  const TorusMap f(analyze_matrix(IntMatrix(m)), TrigField(4, {}), 0.0, "double_A0");
  try {
    stable_splitting_at(f, Vec::Constant(4, 0.2), 10);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::GapTooSmall);
  }
}

TEST(StableSplitting, InvariantUnderTheDerivative) {
  const TorusMap f = fixture_catalog("shear_A0", 0.05);
  Rng rng(3);
  for (int i = 0; i < 20; ++i) {
    const Vec x = rng.uniform_point(2);
    const Vec es = stable_splitting_at(f, x, 24).direction(0);
    const Vec image = f.jacobian(x) * es;
    const Vec es_next = stable_splitting_at(f, f.torus_step(x), 24).direction(0);
    EXPECT_LE(principal_angle(line(image), line(es_next)), 1e-9);
  }
}

TEST(StableSplitting, ConvergesWithDepth) {
  const TorusMap f = fixture_catalog("shear_A0", 0.05);
  const Vec x = pt({0.21, 0.77});
  EXPECT_LT(stable_splitting_at(f, x, 12).convergence_gap, stable_splitting_at(f, x, 4).convergence_gap);
  EXPECT_LE(stable_splitting_at(f, x, 12).convergence_gap, 1e-8);
}

TEST(Branches, BackwardOrbitMapsForward) {
  const TorusMap f = fixture_catalog("shear_A0", 0.05);
  BranchCode code{{0, 1, 1, 0, 1}};
  const auto orbit = backward_orbit(f, pt({0.4, 0.6}), code);
  ASSERT_EQ(orbit.size(), 6u);
  for (std::size_t j = 1; j < orbit.size(); ++j) EXPECT_LE(torus_distance(f.evaluate(orbit[j]), orbit[j - 1]), 1e-11);
  EXPECT_EQ(code.to_string(), "01101");
  try {
    backward_orbit(f, pt({0.4, 0.6}), BranchCode{{2}});
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::InvalidArgument);
  }
}

TEST(Branches, UnstableDirectionIsInvariantAlongTheBranch) {
  const TorusMap f = fixture_catalog("shear_A0", 0.05);
  const Vec x = pt({0.4, 0.6});
  const BranchCode code{{1, 0, 1, 1, 0, 0, 1, 0, 1, 1, 0, 1, 0}};
  const auto orbit = backward_orbit(f, x, code);
  BranchCode tail{std::vector<int>(code.choices.begin() + 1, code.choices.end())};
  const Mat at_x = unstable_direction_along_branch(f, x, code);
  const Mat at_prev = unstable_direction_along_branch(f, orbit[1], tail);
  EXPECT_LE(principal_angle(at_x, orthonormalize(f.jacobian(orbit[1]) * at_prev)), 1e-12);
}

TEST(Branches, LinearUnstableDirectionIsTheEigenline) {
  const TorusMap f = fixture_catalog("linear_A0");
  Rng rng(1);
  for (const auto& code : sample_codes(f, 4, 10, rng))
    EXPECT_LE(principal_angle(unstable_direction_along_branch(f, pt({0.1, 0.9}), code), f.linear().unstable_basis), 1e-12);
}

TEST(Branches, SampleCodesStartWithConstantWords) {
  const TorusMap f = fixture_catalog("shear_A0", 0.05);
  Rng rng(2);
  const auto codes = sample_codes(f, 5, 7, rng);
  ASSERT_EQ(codes.size(), 5u);
  EXPECT_EQ(codes[0].to_string(), "0000000");
  EXPECT_EQ(codes[1].to_string(), "1111111");
  for (const auto& c : codes) EXPECT_EQ(c.depth(), 7u);
}

TEST(Integrability, VerdictsOnTheFixtures) {
  const auto verdict = [](const std::string& name, double eps) { return integrability_verdict(fixture_catalog(name, eps), 20, 6, 12); };
  const auto lin = verdict("linear_A0", 0.0);
  EXPECT_TRUE(lin.integrable);
  EXPECT_LE(lin.max_spread, 1e-12);
  const auto conj = verdict("conjugated_A0", 0.05);
  EXPECT_TRUE(conj.integrable);
  EXPECT_LE(conj.max_spread, 1e-8);
  const auto prod = verdict("product_T3", 0.05);
  EXPECT_TRUE(prod.integrable);
  const auto shear = verdict("shear_A0", 0.05);
  EXPECT_FALSE(shear.integrable);
  EXPECT_GT(shear.max_spread, 1e-2);
  EXPECT_EQ(shear.distribution.size(), 20u * 15u);
  EXPECT_EQ(shear.witness_point.size(), 2);
  EXPECT_NE(shear.witness_a.to_string(), shear.witness_b.to_string());
}

TEST(Integrability, SpreadGrowsWithEpsilon) {
  double previous = 0.0;
  for (double eps : {0.0, 0.01, 0.02, 0.05}) {
    const double spread = integrability_verdict(fixture_catalog("shear_A0", eps), 20, 6, 12).max_spread;
    EXPECT_GE(spread, previous);
    previous = spread;
  }
}

TEST(Integrability, SeedDeterminesTheResult) {
  const TorusMap f = fixture_catalog("shear_A0", 0.02);
  set_thread_count(1);
  const auto a = integrability_verdict(f, 10, 4, 10, 1e-3, 42);
  set_thread_count(4);
  const auto b = integrability_verdict(f, 10, 4, 10, 1e-3, 42);
  set_thread_count(1);
  ASSERT_EQ(a.distribution.size(), b.distribution.size());
  for (std::size_t i = 0; i < a.distribution.size(); ++i) EXPECT_EQ(a.distribution[i].angle, b.distribution[i].angle);
  EXPECT_THROW(integrability_verdict(f, 10, 1, 10), Error);
}
