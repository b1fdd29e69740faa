#include <gtest/gtest.h>

#include <cmath>

#include "anosov/common.hpp"

using namespace anosov;

namespace {

// minimum over the 3^d neighbouring translates
double brute_torus_distance(const Vec& a, const Vec& b) {
  const int d = static_cast<int>(a.size());
  const Vec wa = wrap(a), wb = wrap(b);
  double best = 1e300;
  int total = 1;
  for (int j = 0; j < d; ++j) total *= 3;
  for (int idx = 0; idx < total; ++idx) {
    Vec shift(d);
    int r = idx;
    for (int j = 0; j < d; ++j) {
      shift[j] = r % 3 - 1;
      r /= 3;
    }
    best = std::min(best, (wb + shift - wa).norm());
  }
  return best;
}

}  // namespace

TEST(Wrap, ReducesIntoUnitCube) {
  Vec x(3);
  x << -0.25, 1.75, 3.0;
  const Vec w = wrap(x);
  EXPECT_DOUBLE_EQ(w[0], 0.75);
  EXPECT_DOUBLE_EQ(w[1], 0.75);
  EXPECT_DOUBLE_EQ(w[2], 0.0);
  for (int j = 0; j < 3; ++j) {
    EXPECT_GE(w[j], 0.0);
    EXPECT_LT(w[j], 1.0);
  }
}

TEST(TorusDistance, MatchesNeighbourTranslateSearch) {
  Rng rng(17);
  for (int d = 1; d <= 3; ++d) {
    for (int trial = 0; trial < 300; ++trial) {
      const Vec a = 4.0 * rng.uniform_point(d) - Vec::Constant(d, 2.0);
      const Vec b = 4.0 * rng.uniform_point(d) - Vec::Constant(d, 2.0);
      EXPECT_NEAR(torus_distance(a, b), brute_torus_distance(a, b), 1e-12);
    }
  }
}

TEST(TorusDistance, DeltaIsSmallestRepresentative) {
  Vec a(2), b(2);
  a << 0.95, 0.1;
  b << 0.05, 0.9;
  const Vec delta = torus_delta(a, b);
  EXPECT_NEAR(delta[0], 0.1, 1e-15);
  EXPECT_NEAR(delta[1], -0.2, 1e-15);
  EXPECT_NEAR(torus_distance(a, b), std::hypot(0.1, 0.2), 1e-15);
}

TEST(PrincipalAngle, LinesInThePlane) {
  Mat a(2, 1), b(2, 1);
  a << 1, 0;
  const double theta = 0.3;
  b << std::cos(theta), std::sin(theta);
  EXPECT_NEAR(principal_angle(a, b), theta, 1e-14);
  EXPECT_NEAR(principal_angle(a, -b), theta, 1e-14);
  EXPECT_NEAR(principal_angle(a, a), 0.0, 1e-15);
}

TEST(Orthonormalize, SpansTheSameSpace) {
  Mat m(3, 2);
  m << 1, 2, 0, 1, 1, 0;
  const Mat q = orthonormalize(m);
  EXPECT_NEAR((q.transpose() * q - Mat::Identity(2, 2)).norm(), 0.0, 1e-14);
  EXPECT_NEAR((m - q * (q.transpose() * m)).norm(), 0.0, 1e-14);
}

TEST(RngTest, SeedDeterminesStream) {
  Rng a(5), b(5), c(6);
  for (int i = 0; i < 10; ++i) {
    const double x = a.uniform();
    EXPECT_EQ(x, b.uniform());
    EXPECT_GE(x, 0.0);
    EXPECT_LT(x, 1.0);
  }
  EXPECT_NE(Rng(5).next(), c.next());
  Rng r(1);
  for (int i = 0; i < 1000; ++i) {
    const int k = r.index(7);
    EXPECT_GE(k, 0);
    EXPECT_LT(k, 7);
  }
}

TEST(ParallelFor, ResultsIndependentOfThreadCount) {
  std::vector<double> one(500), four(500);
  set_thread_count(1);
  parallel_for(one.size(), [&](std::size_t i) { one[i] = std::sin(static_cast<double>(i)); });
  set_thread_count(4);
  parallel_for(four.size(), [&](std::size_t i) { four[i] = std::sin(static_cast<double>(i)); });
  set_thread_count(1);
  EXPECT_EQ(one, four);
}

TEST(ParallelFor, RethrowsLowestIndexError) {
  set_thread_count(4);
  try {
    parallel_for(100, [](std::size_t i) {
      if (i == 13 || i == 70) fail(ErrorKind::NoConvergence, "index " + std::to_string(i));
    });
    FAIL() << "expected an error";
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::NoConvergence);
    EXPECT_STREQ(e.what(), "NoConvergence: index 13");
  }
  set_thread_count(1);
}

TEST(ParallelFor, NestedLoopsRunToCompletion) {
  set_thread_count(3);
  std::vector<int> counts(20, 0);
  parallel_for(counts.size(), [&](std::size_t i) {
    std::vector<int> inner(10, 0);
    parallel_for(inner.size(), [&](std::size_t j) { inner[j] = 1; });
    for (int v : inner) counts[i] += v;
  });
  set_thread_count(1);
  for (int c : counts) EXPECT_EQ(c, 10);
}

TEST(ErrorTest, KindNamesAreStable) {
  EXPECT_STREQ(to_string(ErrorKind::NotHyperbolic), "NotHyperbolic");
  EXPECT_STREQ(to_string(ErrorKind::ConfigInvalid), "ConfigInvalid");
  try {
    fail(ErrorKind::StepRejected, "msg");
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::StepRejected);
  }
}
