#include <gtest/gtest.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <map>
#include <sstream>

#include "anosov/experiments.hpp"

using namespace anosov;
namespace fs = std::filesystem;

namespace {

fs::path fresh_dir(const std::string& name) {
  const fs::path p = fs::temp_directory_path() / ("anosov_test_" + name);
  fs::remove_all(p);
  return p;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream s;
  s << in.rdbuf();
  return s.str();
}

std::map<std::string, std::string> csv_files(const fs::path& dir) {
  std::map<std::string, std::string> out;
  for (const auto& e : fs::directory_iterator(dir))
    if (e.path().extension() == ".csv") out[e.path().filename().string()] = slurp(e.path());
  return out;
}

std::string summary_value(const RunReport& r, const std::string& key) {
  for (const auto& [k, v] : r.summary)
    if (k == key) return v;
  return "<missing>";
}

Scenario small_scenario(const std::string& fixture, double eps, const std::string& out) {
  Scenario s;
  s.fixture.name = fixture;
  s.fixture.epsilon = eps;
  s.output_dir = out;
  s.depths.max_period = 3;
  s.depths.fourier_order = 8;
  s.depths.decay_m = 4;
  s.depths.obstruction_period = 3;
  s.sampling.residual = 20;
  s.sampling.round_trip = 5;
  s.sampling.defect = 20;
  s.sampling.decay = 4;
  s.sampling.decay_inverse = false;
  s.sampling.branch_points = 4;
  s.sampling.branch_codes = 3;
  s.sampling.affinity_leaves = 2;
  s.sampling.affinity_pairs = 3;
  s.sampling.holonomy_pairs = 3;
  s.sampling.isometry_pairs = 5;
  s.sampling.covering_k = 4;
  s.sampling.covering_grid = 32;
  s.sampling.orbit_average_length = 300;
  return s;
}

void expect_config_error(const std::string& text, const std::string& field) {
  try {
    parse_scenario(text);
    FAIL() << "accepted " << text;
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::ConfigInvalid);
    EXPECT_NE(std::string(e.what()).find(field + ":"), std::string::npos) << e.what();
  }
}

class ThreadGuard {
 public:
  ~ThreadGuard() { set_thread_count(1); }
};

}  // namespace

TEST(Config, DefaultsAndCanonicalRoundTrip) {
  const Scenario s = parse_scenario("{}");
  EXPECT_EQ(s.fixture.name, "linear_A0");
  EXPECT_EQ(s.stages.size(), 6u);
  EXPECT_DOUBLE_EQ(s.tolerances.rigidity, 5e-4);
  EXPECT_FALSE(s.dichotomy.has_value());
  const Scenario t = parse_scenario(
      R"({"fixture": {"name": "shear_A0", "epsilon": 0.02}, "stages": ["orbits"], "seed": 42,
          "depths": {"max_period": 4}, "dichotomy": {"family": "shear_A0", "epsilons": [0, 0.01]}})");
  EXPECT_EQ(t.fixture.name, "shear_A0");
  EXPECT_EQ(t.depths.max_period, 4);
  EXPECT_EQ(t.seed, 42u);
  ASSERT_TRUE(t.dichotomy.has_value());
  EXPECT_EQ(t.dichotomy->epsilons.size(), 2u);
  const std::string canon = canonical_config(t);
  EXPECT_EQ(canonical_config(parse_scenario(canon)), canon);
}

TEST(Config, CustomMap) {
  const Scenario s = parse_scenario(
      R"({"fixture": {"name": "custom", "epsilon": 0.01, "matrix": [[2, 1], [1, 1]],
          "terms": [{"component": 0, "frequency": [0, 1], "sin": 0.1}]}})");
  const TorusMap f = build_map(s.fixture);
  EXPECT_EQ(f.dim(), 2);
  EXPECT_NEAR(f.evaluate(Vec::Constant(2, 0.25))[0], 0.75 + 0.001, 1e-14);
}

TEST(Config, FieldLevelErrors) {
  expect_config_error("[1, 2", "<root>");
  expect_config_error(R"({"bogus": 1})", "bogus");
  expect_config_error(R"({"fixture": {"epsilon": "x"}})", "fixture.epsilon");
  expect_config_error(R"({"fixture": {"name": "nope"}})", "fixture.name");
  expect_config_error(R"({"fixture": {"name": "linear_A0", "matrix": [[2, 1], [1, 1]]}})", "fixture");
  expect_config_error(R"({"fixture": {"name": "custom"}})", "fixture.matrix");
  expect_config_error(R"({"fixture": {"name": "custom", "matrix": [[2, 1], [1, 1]],
      "terms": [{"component": 5, "frequency": [0, 1]}]}})",
                      "fixture.terms[0].component");
  expect_config_error(R"({"stages": ["analyze", "fly"]})", "stages[1]");
  expect_config_error(R"({"tolerances": {"rigidity": -1}})", "tolerances.rigidity");
  expect_config_error(R"({"depths": {"branch": 0}})", "depths.branch");
  expect_config_error(R"({"depths": {"max_period": 2.5}})", "depths.max_period");
  expect_config_error(R"({"sampling": {"decay_inverse": 1}})", "sampling.decay_inverse");
  expect_config_error(R"({"seed": -3})", "seed");
}

TEST(Config, NonAnosovMatrixIsRejectedAtBuild) {
  FixtureConfig fx;
  fx.name = "custom";
  fx.matrix = {{1, 1}, {0, 1}};
  EXPECT_THROW(build_map(fx), Error);
}

TEST(Fnv, KnownVectors) {
  EXPECT_EQ(fnv1a64(""), 0xcbf29ce484222325ULL);
  EXPECT_EQ(fnv1a64("a"), 0xaf63dc4c8601ec8cULL);
  EXPECT_EQ(fnv1a64("foobar"), 0x85944171f73967e8ULL);
}

TEST(Run, LinearFixtureIsConsistent) {
  const fs::path out = fresh_dir("linear");
  const RunReport r = run_scenario(small_scenario("linear_A0", 0.0, out.string()));
  EXPECT_EQ(r.exit_code, 0) << r.error;
  EXPECT_TRUE(r.findings.empty());
  EXPECT_EQ(summary_value(r, "conjugacy.special"), "yes");
  EXPECT_EQ(summary_value(r, "branches.integrable"), "yes");
  EXPECT_EQ(summary_value(r, "orbits.rigid"), "yes");
  EXPECT_EQ(summary_value(r, "conjugacy.H_origin"), "0;0");
  for (const char* f : {"linear_model.csv", "covering_radii.csv", "certificate.csv", "conjugacy_defects.csv", "decay.csv",
                        "orbits.csv", "spread.csv", "coboundary.csv", "affinity.csv", "holonomy.csv", "isometry.csv",
                        "summary.txt", "metadata.txt"}) {
    EXPECT_TRUE(fs::exists(out / f)) << f;
  }
  const std::string summary = slurp(out / "summary.txt");
  EXPECT_NE(summary.find("exit_code: 0"), std::string::npos);
}

TEST(Run, CertificationFailureIsAFinding) {
  const fs::path out = fresh_dir("certify_fail");
  const RunReport r = run_scenario(small_scenario("shear_A0", 2.0, out.string()), {"certify"});
  EXPECT_EQ(r.exit_code, 2);
  ASSERT_EQ(r.findings.size(), 1u);
  EXPECT_NE(r.findings[0].find("cone certification failed"), std::string::npos);
  EXPECT_EQ(summary_value(r, "certify.certified"), "no");
}

TEST(Run, ErrorsGiveExitCodeOne) {
  const fs::path out = fresh_dir("error");
  Scenario s = small_scenario("custom", 0.0, out.string());
  s.fixture.matrix = {{1, 1}, {0, 1}};
  const RunReport r = run_scenario(s, {"analyze"});
  EXPECT_EQ(r.exit_code, 1);
  EXPECT_FALSE(r.error.empty());
  EXPECT_NE(slurp(out / "summary.txt").find("exit_code: 1"), std::string::npos);
  EXPECT_THROW(run_scenario(s, {"nonsense"}), Error);
}

TEST(Run, ReducibleFixtureGetsANote) {
  const fs::path out = fresh_dir("reducible");
  Scenario s = small_scenario("product_T3", 0.05, out.string());
  const RunReport r = run_scenario(s, {"conjugacy", "orbits", "branches"});
  EXPECT_EQ(summary_value(r, "conjugacy.special"), "yes");
  EXPECT_EQ(summary_value(r, "branches.integrable"), "yes");
  EXPECT_EQ(summary_value(r, "orbits.rigid"), "no");
  EXPECT_NE(summary_value(r, "verdict.note"), "<missing>");
  EXPECT_EQ(r.exit_code, 0);
}

TEST(Run, InvertibleFixtureIsExemptFromRigidity) {
  const fs::path out = fresh_dir("invertible");
  Scenario s = small_scenario("custom", 0.02, out.string());
  s.fixture.matrix = {{2, 1}, {1, 1}};
  TrigTerm t;
  t.component = 1;
  t.frequency = IntVec::Unit(2, 0);
  t.sin_coef = 1.0;
  s.fixture.terms = {t};
  const RunReport r = run_scenario(s, {"conjugacy", "orbits", "branches"});
  EXPECT_EQ(summary_value(r, "conjugacy.special"), "yes");
  EXPECT_EQ(summary_value(r, "branches.integrable"), "yes");
  EXPECT_EQ(summary_value(r, "orbits.rigid"), "no");
  EXPECT_NE(summary_value(r, "verdict.note").find("invertible"), std::string::npos);
  EXPECT_EQ(r.exit_code, 0);
  const DichotomyReport rep = dichotomy_sweep("custom", {0.0, 0.02}, s);
  EXPECT_TRUE(rep.invertible);
  EXPECT_TRUE(rep.all_agree);
}

TEST(Run, OutputIsIndependentOfThreadCount) {
  ThreadGuard guard;
  std::map<std::string, std::string> reference;
  for (int threads : {1, 3}) {
    set_thread_count(threads);
    const fs::path out = fresh_dir("threads_" + std::to_string(threads));
    const RunReport r = run_scenario(small_scenario("conjugated_A0", 0.02, out.string()));
    ASSERT_NE(r.exit_code, 1) << r.error;
    const auto files = csv_files(out);
    EXPECT_GE(files.size(), 10u);
    if (reference.empty()) {
      reference = files;
    } else {
      EXPECT_EQ(files, reference);
    }
  }
}

TEST(Run, CacheHitsReproduceColdRun) {
  const fs::path cache = fresh_dir("cache");
  const fs::path cold = fresh_dir("cache_cold");
  const fs::path warm = fresh_dir("cache_warm");
  Scenario s = small_scenario("shear_A0", 0.02, cold.string());
  s.cache_dir = cache.string();
  const RunReport a = run_scenario(s, {"conjugacy", "orbits"});
  EXPECT_EQ(a.cache_hits, 0);
  s.output_dir = warm.string();
  const RunReport b = run_scenario(s, {"conjugacy", "orbits"});
  EXPECT_EQ(b.cache_hits, 2);
  EXPECT_EQ(csv_files(cold), csv_files(warm));
  s.seed = 2;
  const RunReport c = run_scenario(s, {"conjugacy"});
  EXPECT_EQ(c.cache_hits, 0);
}

TEST(Run, CacheDirectoryPrecedence) {
  Scenario s;
  s.cache_dir = "/from/config";
  ::unsetenv("ANOSOV_CACHE_DIR");
  EXPECT_EQ(cache_directory(s), "/from/config");
  ::setenv("ANOSOV_CACHE_DIR", "/from/env", 1);
  EXPECT_EQ(cache_directory(s), "/from/env");
  ::unsetenv("ANOSOV_CACHE_DIR");
  EXPECT_EQ(cache_directory(Scenario{}), "");
}

TEST(Dichotomy, ShearSweepAgreesRowByRow) {
  Scenario s = small_scenario("shear_A0", 0.0, fresh_dir("dichotomy").string());
  const DichotomyReport rep = dichotomy_sweep("shear_A0", {0.0, 0.05}, s);
  ASSERT_EQ(rep.rows.size(), 2u);
  EXPECT_TRUE(rep.irreducible);
  EXPECT_TRUE(rep.rows[0].special && rep.rows[0].integrable && rep.rows[0].rigid);
  EXPECT_FALSE(rep.rows[1].special || rep.rows[1].integrable || rep.rows[1].rigid);
  EXPECT_TRUE(rep.all_agree);
  EXPECT_TRUE(rep.co_increasing);
}
