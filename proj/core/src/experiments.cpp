#include "anosov/experiments.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <ctime>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <memory>
#include <sstream>

#include "json.hpp"

namespace anosov {

using json = nlohmann::json;
namespace fs = std::filesystem;

namespace {

// ---------------------------------------------------------------------------
// Config parsing

[[noreturn]] void invalid(const std::string& field, const std::string& message) {
  fail(ErrorKind::ConfigInvalid, field + ": " + message);
}

std::string join(const std::string& path, const std::string& key) { return path.empty() ? key : path + "." + key; }

void check_keys(const json& obj, const std::string& path, const std::vector<std::string>& allowed) {
  if (!obj.is_object()) invalid(path.empty() ? "<root>" : path, "expected an object");
  for (const auto& item : obj.items()) {
    if (std::find(allowed.begin(), allowed.end(), item.key()) == allowed.end()) {
      invalid(join(path, item.key()), "unknown key");
    }
  }
}

void read_value(const json& v, const std::string& field, double& out) {
  if (!v.is_number()) invalid(field, "expected a number");
  out = v.get<double>();
  if (!std::isfinite(out)) invalid(field, "must be finite");
}

void read_value(const json& v, const std::string& field, int& out) {
  if (!v.is_number_integer()) invalid(field, "expected an integer");
  const auto wide = v.get<std::int64_t>();
  if (wide < std::numeric_limits<int>::min() || wide > std::numeric_limits<int>::max()) invalid(field, "out of range");
  out = static_cast<int>(wide);
}

void read_value(const json& v, const std::string& field, bool& out) {
  if (!v.is_boolean()) invalid(field, "expected true or false");
  out = v.get<bool>();
}

void read_value(const json& v, const std::string& field, std::string& out) {
  if (!v.is_string()) invalid(field, "expected a string");
  out = v.get<std::string>();
}

void read_value(const json& v, const std::string& field, std::uint64_t& out) {
  if (!v.is_number_integer() || (v.is_number_integer() && !v.is_number_unsigned() && v.get<std::int64_t>() < 0)) {
    invalid(field, "expected a non-negative integer");
  }
  out = v.get<std::uint64_t>();
}

template <class T>
void read(const json& obj, const std::string& path, const std::string& key, T& out) {
  if (obj.contains(key)) read_value(obj.at(key), join(path, key), out);
}

void require_positive(const std::string& field, double v) {
  if (!(v > 0)) invalid(field, "must be positive");
}

void require_at_least(const std::string& field, int v, int lower) {
  if (v < lower) invalid(field, "must be at least " + std::to_string(lower));
}

std::vector<std::int64_t> read_int_array(const json& v, const std::string& field) {
  if (!v.is_array()) invalid(field, "expected an array of integers");
  std::vector<std::int64_t> out;
  for (std::size_t i = 0; i < v.size(); ++i) {
    if (!v[i].is_number_integer()) invalid(field + "[" + std::to_string(i) + "]", "expected an integer");
    out.push_back(v[i].get<std::int64_t>());
  }
  return out;
}

FixtureConfig parse_fixture(const json& obj) {
  const std::string path = "fixture";
  check_keys(obj, path, {"name", "epsilon", "matrix", "terms"});
  FixtureConfig fx;
  read(obj, path, "name", fx.name);
  read(obj, path, "epsilon", fx.epsilon);
  if (obj.contains("matrix")) {
    const json& m = obj.at("matrix");
    if (!m.is_array() || m.empty()) invalid("fixture.matrix", "expected a non-empty array of rows");
    for (std::size_t r = 0; r < m.size(); ++r) {
      fx.matrix.push_back(read_int_array(m[r], "fixture.matrix[" + std::to_string(r) + "]"));
      if (fx.matrix.back().size() != m.size()) invalid("fixture.matrix[" + std::to_string(r) + "]", "matrix must be square");
    }
  }
  if (obj.contains("terms")) {
    const json& t = obj.at("terms");
    if (!t.is_array()) invalid("fixture.terms", "expected an array");
    for (std::size_t i = 0; i < t.size(); ++i) {
      const std::string tp = "fixture.terms[" + std::to_string(i) + "]";
      check_keys(t[i], tp, {"component", "frequency", "cos", "sin"});
      TrigTerm term;
      read(t[i], tp, "component", term.component);
      if (!t[i].contains("frequency")) invalid(tp + ".frequency", "required");
      const auto k = read_int_array(t[i].at("frequency"), tp + ".frequency");
      term.frequency = IntVec(static_cast<Eigen::Index>(k.size()));
      for (std::size_t j = 0; j < k.size(); ++j) term.frequency[static_cast<Eigen::Index>(j)] = k[j];
      read(t[i], tp, "cos", term.cos_coef);
      read(t[i], tp, "sin", term.sin_coef);
      fx.terms.push_back(term);
    }
  }
  if (fx.name == "custom") {
    if (fx.matrix.empty()) invalid("fixture.matrix", "required for custom fixtures");
    const int d = static_cast<int>(fx.matrix.size());
    for (std::size_t i = 0; i < fx.terms.size(); ++i) {
      const std::string tp = "fixture.terms[" + std::to_string(i) + "]";
      if (fx.terms[i].component < 0 || fx.terms[i].component >= d) invalid(tp + ".component", "out of range");
      if (fx.terms[i].frequency.size() != d) invalid(tp + ".frequency", "length must equal the dimension");
    }
  } else {
    const auto& names = fixture_names();
    if (std::find(names.begin(), names.end(), fx.name) == names.end()) invalid("fixture.name", "unknown fixture '" + fx.name + "'");
    if (!fx.matrix.empty() || !fx.terms.empty()) invalid("fixture", "matrix and terms are only allowed for custom fixtures");
  }
  return fx;
}

json fixture_json(const FixtureConfig& fx) {
  json j = {{"name", fx.name}, {"epsilon", fx.epsilon}};
  if (!fx.matrix.empty()) j["matrix"] = fx.matrix;
  if (!fx.terms.empty()) {
    json terms = json::array();
    for (const auto& t : fx.terms) {
      std::vector<std::int64_t> k(t.frequency.data(), t.frequency.data() + t.frequency.size());
      terms.push_back({{"component", t.component}, {"frequency", k}, {"cos", t.cos_coef}, {"sin", t.sin_coef}});
    }
    j["terms"] = terms;
  }
  return j;
}

json scenario_json(const Scenario& s) {
  const auto& t = s.tolerances;
  const auto& d = s.depths;
  const auto& m = s.sampling;
  json j;
  j["fixture"] = fixture_json(s.fixture);
  j["stages"] = s.stages;
  j["tolerances"] = {{"rigidity", t.rigidity},         {"spread", t.spread},   {"specialness", t.specialness},
                     {"conjugacy_tail", t.conjugacy_tail}, {"inverse", t.inverse}, {"obstruction", t.obstruction}};
  j["depths"] = {{"series", d.series},
                 {"branch", d.branch},
                 {"max_period", d.max_period},
                 {"fourier_order", d.fourier_order},
                 {"splitting", d.splitting},
                 {"decay_m", d.decay_m},
                 {"certify_iterations", d.certify_iterations},
                 {"obstruction_period", d.obstruction_period}};
  j["sampling"] = {{"residual", m.residual},
                   {"round_trip", m.round_trip},
                   {"defect", m.defect},
                   {"decay", m.decay},
                   {"decay_inverse", m.decay_inverse},
                   {"branch_points", m.branch_points},
                   {"branch_codes", m.branch_codes},
                   {"affinity_leaves", m.affinity_leaves},
                   {"affinity_pairs", m.affinity_pairs},
                   {"holonomy_pairs", m.holonomy_pairs},
                   {"isometry_pairs", m.isometry_pairs},
                   {"covering_k", m.covering_k},
                   {"covering_grid", m.covering_grid},
                   {"certify_grid", m.certify_grid},
                   {"cone_slope", m.cone_slope},
                   {"orbit_average_length", m.orbit_average_length}};
  j["seed"] = s.seed;
  j["output_dir"] = s.output_dir;
  j["cache_dir"] = s.cache_dir;
  if (s.dichotomy) j["dichotomy"] = {{"family", s.dichotomy->family}, {"epsilons", s.dichotomy->epsilons}};
  return j;
}

// ---------------------------------------------------------------------------
// Output helpers

std::string num(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

std::string num_list(const std::vector<double>& v) {
  std::string s;
  for (std::size_t i = 0; i < v.size(); ++i) s += (i ? ";" : "") + num(v[i]);
  return s;
}

std::string int_list(const IntVec& v) {
  std::string s;
  for (Eigen::Index i = 0; i < v.size(); ++i) s += (i ? ";" : "") + std::to_string(v[i]);
  return s;
}

std::string yes_no(bool b) { return b ? "yes" : "no"; }

class CsvFile {
 public:
  CsvFile(const fs::path& path, const std::vector<std::string>& header) : out_(path) {
    if (!out_) fail(ErrorKind::InvalidArgument, "cannot write " + path.string());
    row(header);
  }
  void row(const std::vector<std::string>& cells) {
    for (std::size_t i = 0; i < cells.size(); ++i) out_ << (i ? "," : "") << cells[i];
    out_ << '\n';
  }

 private:
  std::ofstream out_;
};

// ---------------------------------------------------------------------------
// Content-addressed cache for orbit enumerations and conjugacy stage results

class ArtifactCache {
 public:
  explicit ArtifactCache(std::string dir) : dir_(std::move(dir)) {}

  std::optional<json> load(const std::string& kind, const json& key) {
    if (dir_.empty()) return std::nullopt;
    std::ifstream in(path(kind, key));
    if (!in) return std::nullopt;
    try {
      const json stored = json::parse(in);
      if (stored.at("key") != key) return std::nullopt;
      ++hits_;
      return stored.at("value");
    } catch (const json::exception&) {
      return std::nullopt;
    }
  }

  void store(const std::string& kind, const json& key, const json& value) {
    if (dir_.empty()) return;
    fs::create_directories(dir_);
    const fs::path target = path(kind, key);
    const fs::path tmp = target.string() + ".tmp";
    {
      std::ofstream out(tmp);
      out << json{{"key", key}, {"value", value}}.dump();
    }
    fs::rename(tmp, target);
  }

  int hits() const { return hits_; }

 private:
  fs::path path(const std::string& kind, const json& key) const {
    char hex[17];
    std::snprintf(hex, sizeof hex, "%016llx", static_cast<unsigned long long>(fnv1a64(kind + key.dump())));
    return fs::path(dir_) / (kind + "-" + hex + ".json");
  }

  std::string dir_;
  int hits_ = 0;
};

json vec_json(const Vec& v) { return std::vector<double>(v.data(), v.data() + v.size()); }

Vec json_vec(const json& j) {
  const auto v = j.get<std::vector<double>>();
  return Eigen::Map<const Vec>(v.data(), static_cast<Eigen::Index>(v.size()));
}

json ivec_json(const IntVec& v) { return std::vector<std::int64_t>(v.data(), v.data() + v.size()); }

IntVec json_ivec(const json& j) {
  const auto v = j.get<std::vector<std::int64_t>>();
  IntVec out(static_cast<Eigen::Index>(v.size()));
  for (std::size_t i = 0; i < v.size(); ++i) out[static_cast<Eigen::Index>(i)] = v[i];
  return out;
}

json orbits_json(const std::vector<PeriodicOrbit>& orbits) {
  json arr = json::array();
  for (const auto& o : orbits) {
    json pts = json::array();
    for (const auto& p : o.points) pts.push_back(vec_json(p));
    arr.push_back({{"points", pts},
                   {"period", o.period},
                   {"translation", ivec_json(o.translation_class)},
                   {"stable", o.stable_exponents},
                   {"all", o.all_exponents},
                   {"residual", o.residual},
                   {"newton_steps", o.newton_steps},
                   {"cross_check", o.cross_check_error}});
  }
  return arr;
}

std::vector<PeriodicOrbit> json_orbits(const json& arr) {
  std::vector<PeriodicOrbit> out;
  for (const auto& j : arr) {
    PeriodicOrbit o;
    for (const auto& p : j.at("points")) o.points.push_back(json_vec(p));
    o.period = j.at("period").get<int>();
    o.translation_class = json_ivec(j.at("translation"));
    o.stable_exponents = j.at("stable").get<std::vector<double>>();
    o.all_exponents = j.at("all").get<std::vector<double>>();
    o.residual = j.at("residual").get<double>();
    o.newton_steps = j.at("newton_steps").get<int>();
    o.cross_check_error = j.at("cross_check").get<double>();
    out.push_back(std::move(o));
  }
  return out;
}

struct ConjugacyStage {
  int series_depth = 0;
  double tail_bound = 0.0;
  double u_bound = 0.0;
  double residual = 0.0;
  double round_trip = 0.0;
  Vec h_origin;  ///< H(0); the series solution need not fix the origin
  SpecialnessDefect specialness;
  DecayTable decay;
};

json conjugacy_json(const ConjugacyStage& c) {
  json samples = json::array();
  for (const auto& s : c.specialness.samples)
    samples.push_back({vec_json(s.point), s.direction, s.stable_component, s.unstable_component, s.norm});
  json rows = json::array();
  for (const auto& r : c.decay.rows)
    rows.push_back({r.m, ivec_json(r.n_m), r.defect, r.inverse_defect, r.unstable_component});
  const auto& sd = c.specialness;
  return {{"series_depth", c.series_depth},
          {"tail_bound", c.tail_bound},
          {"u_bound", c.u_bound},
          {"residual", c.residual},
          {"round_trip", c.round_trip},
          {"h_origin", vec_json(c.h_origin)},
          {"specialness",
           {{"defect", sd.defect},
            {"stable", sd.max_stable_component},
            {"unstable", sd.max_unstable_component},
            {"u_sup", sd.u_sup},
            {"relative", sd.relative},
            {"threshold", sd.threshold},
            {"special", sd.special},
            {"samples", samples}}},
          {"decay",
           {{"rows", rows},
            {"rate", c.decay.fitted_rate},
            {"inverse_rate", c.decay.fitted_inverse_rate},
            {"reference", c.decay.reference_rate}}}};
}

ConjugacyStage json_conjugacy(const json& j) {
  ConjugacyStage c;
  c.series_depth = j.at("series_depth").get<int>();
  c.tail_bound = j.at("tail_bound").get<double>();
  c.u_bound = j.at("u_bound").get<double>();
  c.residual = j.at("residual").get<double>();
  c.round_trip = j.at("round_trip").get<double>();
  c.h_origin = json_vec(j.at("h_origin"));
  const json& s = j.at("specialness");
  auto& sd = c.specialness;
  sd.defect = s.at("defect").get<double>();
  sd.max_stable_component = s.at("stable").get<double>();
  sd.max_unstable_component = s.at("unstable").get<double>();
  sd.u_sup = s.at("u_sup").get<double>();
  sd.relative = s.at("relative").get<double>();
  sd.threshold = s.at("threshold").get<double>();
  sd.special = s.at("special").get<bool>();
  for (const auto& row : s.at("samples"))
    sd.samples.push_back({json_vec(row[0]), row[1].get<int>(), row[2].get<double>(), row[3].get<double>(), row[4].get<double>()});
  const json& d = j.at("decay");
  for (const auto& row : d.at("rows"))
    c.decay.rows.push_back({row[0].get<int>(), json_ivec(row[1]), row[2].get<double>(), row[3].get<double>(), row[4].get<double>()});
  c.decay.fitted_rate = d.at("rate").get<double>();
  c.decay.fitted_inverse_rate = d.at("inverse_rate").get<double>();
  c.decay.reference_rate = d.at("reference").get<double>();
  return c;
}

// ---------------------------------------------------------------------------
// Pipeline

struct Context {
  const Scenario& scenario;
  TorusMap map;
  fs::path out;
  ArtifactCache cache;
  RunReport report;
  std::optional<bool> special, integrable, rigid;
  std::optional<IntegrabilityVerdict> verdict;

  void put(const std::string& key, const std::string& value) { report.summary.emplace_back(key, value); }
  fs::path file(const std::string& name) {
    report.files.push_back(name);
    return out / name;
  }
};

json fixture_key(const TorusMap& f, const FixtureConfig& fx) {
  json j = fixture_json(fx);
  j["epsilon"] = f.epsilon();
  return j;
}

ConjugacyOptions conjugacy_options(const Scenario& s) {
  ConjugacyOptions opt;
  opt.tail_target = s.tolerances.conjugacy_tail;
  opt.fixed_depth = s.depths.series;
  return opt;
}

std::vector<PeriodicOrbit> cached_orbits(const TorusMap& f, const FixtureConfig& fx, int max_period, ArtifactCache& cache) {
  const OrbitOptions opts;
  const json key = {{"fixture", fixture_key(f, fx)},
                    {"max_period", max_period},
                    {"tol", opts.tol},
                    {"max_iterations", opts.max_iterations},
                    {"continuation_step", opts.continuation_step}};
  if (auto hit = cache.load("orbits", key)) return json_orbits(*hit);
  auto orbits = enumerate_orbits(f, max_period, opts);
  cache.store("orbits", key, orbits_json(orbits));
  return orbits;
}

ConjugacyStage cached_conjugacy(const TorusMap& f, const Scenario& s, ArtifactCache& cache, bool with_decay) {
  const auto& m = s.sampling;
  const json key = {{"fixture", fixture_key(f, s.fixture)},
                    {"tail", s.tolerances.conjugacy_tail},
                    {"series", s.depths.series},
                    {"inverse_tol", s.tolerances.inverse},
                    {"specialness", s.tolerances.specialness},
                    {"residual", m.residual},
                    {"round_trip", m.round_trip},
                    {"defect", m.defect},
                    {"decay", with_decay ? m.decay : 0},
                    {"decay_m", with_decay ? s.depths.decay_m : 0},
                    {"decay_inverse", m.decay_inverse},
                    {"seed", s.seed}};
  if (auto hit = cache.load("conjugacy", key)) return json_conjugacy(*hit);

  const ConjugacyEvaluator ce(f, conjugacy_options(s));
  ConjugacyStage c;
  c.series_depth = ce.series_depth();
  c.tail_bound = ce.tail_bound();
  c.u_bound = ce.u_bound();
  c.h_origin = ce.evaluate(Vec::Zero(f.dim()));
  Rng rng(s.seed + 101);
  std::vector<Vec> pts, targets;
  for (int i = 0; i < m.residual; ++i) pts.push_back(rng.uniform_point(f.dim()));
  for (int i = 0; i < m.round_trip; ++i) targets.push_back(rng.uniform_point(f.dim()));
  std::vector<double> res(pts.size()), trip(targets.size());
  parallel_for(pts.size(), [&](std::size_t i) { res[i] = ce.conjugacy_residual(pts[i]); });
  parallel_for(targets.size(), [&](std::size_t i) {
    trip[i] = (ce.evaluate(ce.evaluate_inverse(targets[i], s.tolerances.inverse)) - targets[i]).norm();
  });
  for (double r : res) c.residual = std::max(c.residual, r);
  for (double r : trip) c.round_trip = std::max(c.round_trip, r);
  c.specialness = specialness_defect(ce, m.defect, s.seed + 102, s.tolerances.specialness);
  if (with_decay && m.decay > 0) c.decay = deep_translation_decay(ce, s.depths.decay_m, m.decay, s.seed + 103, m.decay_inverse);
  cache.store("conjugacy", key, conjugacy_json(c));
  return c;
}

void stage_analyze(Context& ctx) {
  const LinearModel& lin = ctx.map.linear();
  const auto& m = ctx.scenario.sampling;
  {
    CsvFile csv(ctx.file("linear_model.csv"), {"quantity", "index", "value"});
    csv.row({"dimension", "0", std::to_string(lin.dim())});
    csv.row({"determinant", "0", std::to_string(lin.matrix.determinant())});
    for (std::size_t i = 0; i < lin.char_poly.size(); ++i) csv.row({"char_poly", std::to_string(i), std::to_string(lin.char_poly[i])});
    csv.row({"irreducible", "0", lin.irreducibility_decided ? (lin.irreducible ? "1" : "0") : "undecided"});
    csv.row({"hyperbolic", "0", lin.hyperbolic ? "1" : "0"});
    csv.row({"real_simple_stable", "0", lin.real_simple_stable ? "1" : "0"});
    const auto exps = lin.stable_exponents();
    for (std::size_t i = 0; i < lin.stable_eigenvalues.size(); ++i) {
      csv.row({"stable_eigenvalue", std::to_string(i), num(lin.stable_eigenvalues[i])});
      csv.row({"stable_exponent", std::to_string(i), num(exps[i])});
    }
    csv.row({"stable_norm", "0", num(lin.stable_norm)});
    csv.row({"unstable_conorm", "0", num(lin.unstable_conorm)});
  }
  std::string poly;
  for (std::size_t i = 0; i < lin.char_poly.size(); ++i) poly += (i ? " " : "") + std::to_string(lin.char_poly[i]);
  ctx.put("analyze.char_poly", poly);
  ctx.put("analyze.irreducible", lin.irreducibility_decided ? yes_no(lin.irreducible) : "undecided");
  ctx.put("analyze.hyperbolic", yes_no(lin.hyperbolic));
  ctx.put("analyze.stable_exponents", num_list(lin.stable_exponents()));
  ctx.put("analyze.degree", std::to_string(lin.degree));

  const std::int64_t det = std::abs(lin.matrix.determinant());
  if (det < 2 || m.covering_k < 1) return;
  const int d = lin.dim();
  const int grid = d == 2 ? m.covering_grid : std::max(32, m.covering_grid / 2);
  std::vector<double> radii;
  for (int k = 0; k <= m.covering_k; ++k) radii.push_back(preimage_covering_radius(lin.matrix, k, grid));
  const double c = radii[1] * std::pow(static_cast<double>(det), 1.0 / d);
  bool holds = true;
  double rmin = std::numeric_limits<double>::infinity(), rmax = 0.0;
  CsvFile csv(ctx.file("covering_radii.csv"), {"k", "radius", "bound", "ratio_k_minus_2"});
  for (int k = 0; k <= m.covering_k; ++k) {
    const double bound = c * std::pow(static_cast<double>(det), -static_cast<double>(k) / d);
    if (k >= 1 && radii[k] > bound * (1 + 1e-12)) holds = false;
    std::string ratio;
    if (k >= 2) {
      const double q = radii[k] / radii[k - 2];
      rmin = std::min(rmin, q);
      rmax = std::max(rmax, q);
      ratio = num(q);
    }
    csv.row({std::to_string(k), num(radii[k]), num(bound), ratio});
  }
  ctx.put("analyze.covering_constant", num(c));
  ctx.put("analyze.covering_bound_holds", yes_no(holds));
  if (m.covering_k >= 2) ctx.put("analyze.covering_ratio_range", num(rmin) + " " + num(rmax));
}

void stage_certify(Context& ctx) {
  const auto& m = ctx.scenario.sampling;
  AnosovCertificate cert;
  for (int it = 1; it <= ctx.scenario.depths.certify_iterations; ++it) {
    cert = measure_cones(ctx.map, m.cone_slope, it, m.certify_grid);
    if (cert.certified) break;
  }
  CsvFile csv(ctx.file("certificate.csv"), {"field", "value"});
  csv.row({"certified", cert.certified ? "1" : "0"});
  csv.row({"cone_slope", num(cert.cone_slope)});
  csv.row({"iterations", std::to_string(cert.iterations)});
  csv.row({"grid_n", std::to_string(cert.grid_n)});
  csv.row({"max_unstable_slope", num(cert.max_unstable_slope)});
  csv.row({"min_expansion", num(cert.min_expansion)});
  csv.row({"max_stable_slope", num(cert.max_stable_slope)});
  csv.row({"min_contraction_inverse", num(cert.min_contraction_inverse)});
  csv.row({"lipschitz_estimate", num(cert.lipschitz_estimate)});
  csv.row({"safety_margin", num(cert.safety_margin)});
  csv.row({"min_jacobian_det", num(ctx.map.min_jacobian_det())});
  csv.row({"max_jacobian_det", num(ctx.map.max_jacobian_det())});
  ctx.put("certify.certified", yes_no(cert.certified));
  ctx.put("certify.iterations", std::to_string(cert.iterations));
  if (!cert.certified) {
    ctx.put("certify.failure", cert.failure);
    ctx.report.findings.push_back("cone certification failed: " + cert.failure);
  }
}

void stage_conjugacy(Context& ctx) {
  const ConjugacyStage c = cached_conjugacy(ctx.map, ctx.scenario, ctx.cache, true);
  const int d = ctx.map.dim();
  {
    std::vector<std::string> header{"sample", "direction"};
    for (int j = 0; j < d; ++j) header.push_back("x" + std::to_string(j));
    header.insert(header.end(), {"defect", "stable_component", "unstable_component"});
    CsvFile csv(ctx.file("conjugacy_defects.csv"), header);
    for (std::size_t i = 0; i < c.specialness.samples.size(); ++i) {
      const auto& s = c.specialness.samples[i];
      std::vector<std::string> row{std::to_string(i), std::to_string(s.direction)};
      for (int j = 0; j < d; ++j) row.push_back(num(s.point[j]));
      row.push_back(num(s.norm));
      row.push_back(num(s.stable_component));
      row.push_back(num(s.unstable_component));
      csv.row(row);
    }
  }
  if (!c.decay.rows.empty()) {
    CsvFile csv(ctx.file("decay.csv"), {"m", "n_m", "D_m", "D_m_inverse", "fitted_rate"});
    for (const auto& r : c.decay.rows)
      csv.row({std::to_string(r.m), int_list(r.n_m), num(r.defect), num(r.inverse_defect), num(c.decay.fitted_rate)});
  }
  ctx.put("conjugacy.series_depth", std::to_string(c.series_depth));
  ctx.put("conjugacy.tail_bound", num(c.tail_bound));
  ctx.put("conjugacy.residual_max", num(c.residual));
  ctx.put("conjugacy.round_trip_max", num(c.round_trip));
  ctx.put("conjugacy.H_origin", num_list(std::vector<double>(c.h_origin.data(), c.h_origin.data() + c.h_origin.size())));
  ctx.put("conjugacy.specialness_defect", num(c.specialness.defect));
  ctx.put("conjugacy.specialness_relative", num(c.specialness.relative));
  ctx.put("conjugacy.max_unstable_component", num(c.specialness.max_unstable_component));
  ctx.put("conjugacy.special", yes_no(c.specialness.special));
  if (!c.decay.rows.empty()) {
    ctx.put("conjugacy.decay_rate", num(c.decay.fitted_rate));
    ctx.put("conjugacy.decay_inverse_rate", num(c.decay.fitted_inverse_rate));
    ctx.put("conjugacy.decay_reference", num(c.decay.reference_rate));
  }
  ctx.special = c.specialness.special;
}

void stage_orbits(Context& ctx) {
  const auto orbits = cached_orbits(ctx.map, ctx.scenario.fixture, ctx.scenario.depths.max_period, ctx.cache);
  const RigidityReport rep = rigidity_report(ctx.map, orbits, ctx.scenario.tolerances.rigidity);
  const int d = ctx.map.dim();
  const int k = ctx.map.linear().stable_dim();
  std::vector<std::string> header{"period", "orbit_id"};
  for (int j = 0; j < d; ++j) header.push_back("point0_x" + std::to_string(j));
  header.push_back("m_class");
  for (int i = 0; i < k; ++i) header.push_back("lambda_s_" + std::to_string(i + 1));
  header.insert(header.end(), {"deviation", "spread"});
  std::vector<double> mean(k, 0.0);
  for (const auto& r : rep.rows)
    for (int i = 0; i < k; ++i) mean[i] += r.exponents[i] / static_cast<double>(rep.rows.size());
  CsvFile csv(ctx.file("orbits.csv"), header);
  for (const auto& r : rep.rows) {
    std::vector<std::string> row{std::to_string(r.period), std::to_string(r.orbit_id)};
    for (int j = 0; j < d; ++j) row.push_back(num(r.point0[j]));
    row.push_back(int_list(r.translation_class));
    double spread = 0.0;
    for (int i = 0; i < k; ++i) {
      row.push_back(num(r.exponents[i]));
      spread = std::max(spread, std::abs(r.exponents[i] - mean[i]));
    }
    row.push_back(num(r.deviation));
    row.push_back(num(spread));
    csv.row(row);
  }
  ctx.put("orbits.count", std::to_string(rep.rows.size()));
  ctx.put("orbits.max_period", std::to_string(ctx.scenario.depths.max_period));
  ctx.put("orbits.max_deviation", num(rep.max_deviation));
  ctx.put("orbits.max_spread", num(rep.max_spread));
  ctx.put("orbits.rigid", yes_no(rep.rigid));
  ctx.rigid = rep.rigid;
}

IntegrabilityVerdict verdict_for(const TorusMap& f, const Scenario& s) {
  return integrability_verdict(f, s.sampling.branch_points, s.sampling.branch_codes, s.depths.branch, s.tolerances.spread,
                               s.seed + 201);
}

void stage_branches(Context& ctx) {
  ctx.verdict = verdict_for(ctx.map, ctx.scenario);
  const auto& v = *ctx.verdict;
  CsvFile csv(ctx.file("spread.csv"), {"point", "code_a", "code_b", "angle"});
  for (const auto& r : v.distribution)
    csv.row({std::to_string(r.point_index), std::to_string(r.code_a), std::to_string(r.code_b), num(r.angle)});
  ctx.put("branches.max_spread", num(v.max_spread));
  ctx.put("branches.integrable", yes_no(v.integrable));
  if (!v.integrable) {
    std::string w;
    for (Eigen::Index j = 0; j < v.witness_point.size(); ++j) w += (j ? " " : "") + num(v.witness_point[j]);
    ctx.put("branches.witness_point", w);
    ctx.put("branches.witness_codes", v.witness_a.to_string() + " " + v.witness_b.to_string());
  }
  ctx.integrable = v.integrable;
}

void stage_metric(Context& ctx) {
  const Scenario& s = ctx.scenario;
  const TorusMap& f = ctx.map;
  const LinearModel& lin = f.linear();
  const auto orbits = cached_orbits(f, s.fixture, s.depths.obstruction_period, ctx.cache);
  LivschitzOptions lopt;
  lopt.order = s.depths.fourier_order;
  lopt.obstruction_tol = s.tolerances.obstruction;
  lopt.obstruction_period = s.depths.obstruction_period;
  lopt.orbit_average_length = s.sampling.orbit_average_length;
  lopt.seed = s.seed + 301;
  const int bundles = lin.real_simple_stable ? lin.stable_dim() : 1;
  std::vector<BundleCoboundary> cob;
  {
    CsvFile csv(ctx.file("coboundary.csv"),
                {"index", "modes", "lambda", "linear_exponent", "residual", "obstruction", "obstructed"});
    for (int i = 0; i < bundles; ++i) {
      cob.push_back(bundle_coboundary_psi(f, i, lopt, s.depths.splitting, &orbits));
      const auto& b = cob.back();
      csv.row({std::to_string(i), std::to_string(b.solution.psi.basis_size()), num(b.solution.lambda),
               num(b.linear_exponent), num(b.solution.residual), num(b.solution.obstruction),
               b.solution.obstructed ? "1" : "0"});
    }
  }
  const BundleCoboundary& psi = cob.front();
  ctx.put("metric.lambda", num(psi.solution.lambda));
  ctx.put("metric.lambda_error", num(psi.lambda_error));
  ctx.put("metric.residual", num(psi.solution.residual));
  ctx.put("metric.obstruction", num(psi.solution.obstruction));
  ctx.put("metric.sup_abs_Psi", num(psi.sup_abs_Psi));
  bool obstructed = false;
  for (const auto& b : cob) obstructed = obstructed || b.solution.obstructed;
  if (obstructed) {
    ctx.put("metric.status", "skipped leaf metric checks: nonzero periodic obstruction");
    if (ctx.rigid.value_or(false)) ctx.report.findings.push_back("rigid periodic data but nonzero Livschitz obstruction");
    return;
  }

  const AffinityReport aff = affinity_check(f, psi, s.sampling.affinity_leaves, s.sampling.affinity_pairs, s.seed + 302,
                                            0.2, 1e-3, s.depths.splitting);
  {
    CsvFile csv(ctx.file("affinity.csv"), {"pair", "ratio", "expected", "relative_error"});
    for (std::size_t i = 0; i < aff.ratios.size(); ++i)
      csv.row({std::to_string(i), num(aff.ratios[i]), num(aff.expected), num(std::abs(aff.ratios[i] / aff.expected - 1.0))});
  }
  ctx.put("metric.affinity_max_relative_error", num(aff.max_relative_error));
  ctx.put("metric.equivalence_constant", num(psi.equivalence_constant));
  ctx.put("metric.equivalence_violations", std::to_string(aff.equivalence_violations));

  if (f.dim() == 2) {
    if (!ctx.verdict) ctx.verdict = verdict_for(f, s);
    if (ctx.verdict->integrable) {
      const IsometryReport hol = holonomy_isometry_check(f, *ctx.verdict, psi, s.sampling.holonomy_pairs, s.seed + 303);
      CsvFile csv(ctx.file("holonomy.csv"), {"pair", "d_s", "d_s_image", "relative_defect"});
      for (int i = 0; i < hol.pairs; ++i)
        csv.row({std::to_string(i), num(hol.affine[i]), num(hol.linear[i]), num(hol.defects[i])});
      ctx.put("metric.holonomy_max_defect", num(hol.max_relative_defect));
    } else {
      ctx.put("metric.holonomy", "refused: unstable direction depends on the branch");
    }
  }

  const ConjugacyEvaluator ce(f, conjugacy_options(s));
  const IsometryReport iso = conjugacy_leaf_isometry_check(ce, psi, s.sampling.isometry_pairs, s.seed + 304);
  CsvFile csv(ctx.file("isometry.csv"), {"pair", "d_s", "linear_distance", "scaled_deviation"});
  for (int i = 0; i < iso.pairs; ++i)
    csv.row({std::to_string(i), num(iso.affine[i]), num(iso.linear[i]), num(iso.defects[i])});
  ctx.put("metric.isometry_scale", num(iso.scale));
  ctx.put("metric.isometry_max_deviation", num(iso.max_relative_defect));
}

void stage_dichotomy(Context& ctx) {
  if (!ctx.scenario.dichotomy) {
    ctx.put("dichotomy.status", "no dichotomy section in the config");
    return;
  }
  const DichotomyReport rep = dichotomy_sweep(ctx.scenario.dichotomy->family, ctx.scenario.dichotomy->epsilons, ctx.scenario);
  CsvFile csv(ctx.file("dichotomy.csv"), {"epsilon", "specialness_defect", "max_spread", "rigidity_deviation", "special",
                                          "integrable", "rigid", "agreement", "error"});
  for (const auto& r : rep.rows) {
    csv.row({num(r.epsilon), num(r.specialness_defect), num(r.max_spread), num(r.rigidity_deviation), r.special ? "1" : "0",
             r.integrable ? "1" : "0", r.rigid ? "1" : "0", r.agreement ? "1" : "0", r.error});
    if (!r.error.empty()) ctx.report.findings.push_back("dichotomy row epsilon=" + num(r.epsilon) + " failed: " + r.error);
  }
  ctx.put("dichotomy.family", rep.family);
  ctx.put("dichotomy.all_agree", yes_no(rep.all_agree));
  ctx.put("dichotomy.co_increasing", yes_no(rep.co_increasing));
  if (!rep.all_agree) ctx.report.findings.push_back("dichotomy verdicts disagree on at least one row");
}

void reconcile_verdicts(Context& ctx) {
  std::vector<std::pair<std::string, bool>> got;
  if (ctx.special) got.emplace_back("special", *ctx.special);
  if (ctx.integrable) got.emplace_back("integrable", *ctx.integrable);
  if (ctx.rigid) got.emplace_back("rigid", *ctx.rigid);
  if (got.size() < 2) return;
  const LinearModel& lin = ctx.map.linear();
  bool agree = true;
  for (const auto& g : got) agree = agree && g.second == got.front().second;
  ctx.put("verdict.agreement", yes_no(agree));
  if (agree) return;
  if (lin.degree == 1) {
    const bool geometric_agree = !(ctx.special && ctx.integrable) || *ctx.special == *ctx.integrable;
    ctx.put("verdict.note",
            "A is invertible; every Anosov diffeomorphism is special with integrable unstable bundle, "
            "so periodic stable exponents are not constrained by these verdicts");
    if (!geometric_agree) ctx.report.findings.push_back("specialness and integrability verdicts disagree");
    return;
  }
  if (lin.irreducibility_decided && !lin.irreducible) {
    const bool geometric_agree = !(ctx.special && ctx.integrable) || *ctx.special == *ctx.integrable;
    ctx.put("verdict.note",
            "A is reducible over Q; rigidity of periodic stable exponents is only equivalent to "
            "integrability for irreducible A, so this split is the expected counterexample behaviour");
    if (!geometric_agree) ctx.report.findings.push_back("specialness and integrability verdicts disagree");
    return;
  }
  ctx.report.findings.push_back("special / integrable / rigid verdicts disagree on an irreducible fixture");
}

std::string timestamp() {
  const auto now = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
  std::tm tm{};
  gmtime_r(&now, &tm);
  std::ostringstream s;
  s << std::put_time(&tm, "%Y-%m-%dT%H:%M:%SZ");
  return s.str();
}

}  // namespace

// ---------------------------------------------------------------------------

std::uint64_t fnv1a64(const std::string& bytes) {
  std::uint64_t h = 14695981039346656037ull;
  for (unsigned char c : bytes) {
    h ^= c;
    h *= 1099511628211ull;
  }
  return h;
}

std::string cache_directory(const Scenario& scenario) {
  if (const char* env = std::getenv("ANOSOV_CACHE_DIR"); env && *env) return env;
  return scenario.cache_dir;
}

const std::vector<std::string>& stage_names() {
  static const std::vector<std::string> names{"analyze", "certify", "conjugacy", "orbits", "branches", "metric", "dichotomy"};
  return names;
}

Scenario parse_scenario(const std::string& json_text) {
  json root;
  try {
    root = json::parse(json_text);
  } catch (const json::parse_error& e) {
    invalid("<root>", std::string("not valid JSON: ") + e.what());
  }
  check_keys(root, "", {"fixture", "stages", "tolerances", "depths", "sampling", "seed", "output_dir", "cache_dir", "dichotomy"});
  Scenario s;
  if (root.contains("fixture")) s.fixture = parse_fixture(root.at("fixture"));
  if (root.contains("stages")) {
    const json& st = root.at("stages");
    if (!st.is_array()) invalid("stages", "expected an array of stage names");
    s.stages.clear();
    for (std::size_t i = 0; i < st.size(); ++i) {
      std::string name;
      read_value(st[i], "stages[" + std::to_string(i) + "]", name);
      const auto& names = stage_names();
      if (std::find(names.begin(), names.end(), name) == names.end()) invalid("stages[" + std::to_string(i) + "]", "unknown stage '" + name + "'");
      s.stages.push_back(name);
    }
  }
  if (root.contains("tolerances")) {
    const json& t = root.at("tolerances");
    check_keys(t, "tolerances", {"rigidity", "spread", "specialness", "conjugacy_tail", "inverse", "obstruction"});
    auto& o = s.tolerances;
    read(t, "tolerances", "rigidity", o.rigidity);
    read(t, "tolerances", "spread", o.spread);
    read(t, "tolerances", "specialness", o.specialness);
    read(t, "tolerances", "conjugacy_tail", o.conjugacy_tail);
    read(t, "tolerances", "inverse", o.inverse);
    read(t, "tolerances", "obstruction", o.obstruction);
    require_positive("tolerances.rigidity", o.rigidity);
    require_positive("tolerances.spread", o.spread);
    require_positive("tolerances.specialness", o.specialness);
    require_positive("tolerances.conjugacy_tail", o.conjugacy_tail);
    require_positive("tolerances.inverse", o.inverse);
    require_positive("tolerances.obstruction", o.obstruction);
  }
  if (root.contains("depths")) {
    const json& d = root.at("depths");
    check_keys(d, "depths", {"series", "branch", "max_period", "fourier_order", "splitting", "decay_m", "certify_iterations",
                             "obstruction_period"});
    auto& o = s.depths;
    read(d, "depths", "series", o.series);
    read(d, "depths", "branch", o.branch);
    read(d, "depths", "max_period", o.max_period);
    read(d, "depths", "fourier_order", o.fourier_order);
    read(d, "depths", "splitting", o.splitting);
    read(d, "depths", "decay_m", o.decay_m);
    read(d, "depths", "certify_iterations", o.certify_iterations);
    read(d, "depths", "obstruction_period", o.obstruction_period);
    require_at_least("depths.series", o.series, 0);
    require_at_least("depths.branch", o.branch, 1);
    require_at_least("depths.max_period", o.max_period, 1);
    require_at_least("depths.fourier_order", o.fourier_order, 0);
    require_at_least("depths.splitting", o.splitting, 1);
    require_at_least("depths.decay_m", o.decay_m, 1);
    require_at_least("depths.certify_iterations", o.certify_iterations, 1);
    require_at_least("depths.obstruction_period", o.obstruction_period, 1);
  }
  if (root.contains("sampling")) {
    const json& m = root.at("sampling");
    check_keys(m, "sampling", {"residual", "round_trip", "defect", "decay", "decay_inverse", "branch_points", "branch_codes",
                               "affinity_leaves", "affinity_pairs", "holonomy_pairs", "isometry_pairs", "covering_k",
                               "covering_grid", "certify_grid", "cone_slope", "orbit_average_length"});
    auto& o = s.sampling;
    read(m, "sampling", "residual", o.residual);
    read(m, "sampling", "round_trip", o.round_trip);
    read(m, "sampling", "defect", o.defect);
    read(m, "sampling", "decay", o.decay);
    read(m, "sampling", "decay_inverse", o.decay_inverse);
    read(m, "sampling", "branch_points", o.branch_points);
    read(m, "sampling", "branch_codes", o.branch_codes);
    read(m, "sampling", "affinity_leaves", o.affinity_leaves);
    read(m, "sampling", "affinity_pairs", o.affinity_pairs);
    read(m, "sampling", "holonomy_pairs", o.holonomy_pairs);
    read(m, "sampling", "isometry_pairs", o.isometry_pairs);
    read(m, "sampling", "covering_k", o.covering_k);
    read(m, "sampling", "covering_grid", o.covering_grid);
    read(m, "sampling", "certify_grid", o.certify_grid);
    read(m, "sampling", "cone_slope", o.cone_slope);
    read(m, "sampling", "orbit_average_length", o.orbit_average_length);
    require_at_least("sampling.residual", o.residual, 1);
    require_at_least("sampling.round_trip", o.round_trip, 0);
    require_at_least("sampling.defect", o.defect, 1);
    require_at_least("sampling.decay", o.decay, 0);
    require_at_least("sampling.branch_points", o.branch_points, 1);
    require_at_least("sampling.branch_codes", o.branch_codes, 2);
    require_at_least("sampling.affinity_leaves", o.affinity_leaves, 1);
    require_at_least("sampling.affinity_pairs", o.affinity_pairs, 1);
    require_at_least("sampling.holonomy_pairs", o.holonomy_pairs, 1);
    require_at_least("sampling.isometry_pairs", o.isometry_pairs, 1);
    require_at_least("sampling.covering_k", o.covering_k, 0);
    require_at_least("sampling.covering_grid", o.covering_grid, 32);
    require_at_least("sampling.certify_grid", o.certify_grid, 0);
    require_positive("sampling.cone_slope", o.cone_slope);
    require_at_least("sampling.orbit_average_length", o.orbit_average_length, 0);
  }
  read(root, "", "seed", s.seed);
  read(root, "", "output_dir", s.output_dir);
  read(root, "", "cache_dir", s.cache_dir);
  if (s.output_dir.empty()) invalid("output_dir", "must not be empty");
  if (root.contains("dichotomy")) {
    const json& d = root.at("dichotomy");
    check_keys(d, "dichotomy", {"family", "epsilons"});
    DichotomyConfig dc;
    read(d, "dichotomy", "family", dc.family);
    const auto& names = fixture_names();
    if (std::find(names.begin(), names.end(), dc.family) == names.end()) invalid("dichotomy.family", "unknown fixture '" + dc.family + "'");
    if (!d.contains("epsilons") || !d.at("epsilons").is_array() || d.at("epsilons").empty()) {
      invalid("dichotomy.epsilons", "expected a non-empty array of numbers");
    }
    for (std::size_t i = 0; i < d.at("epsilons").size(); ++i) {
      double e = 0.0;
      read_value(d.at("epsilons")[i], "dichotomy.epsilons[" + std::to_string(i) + "]", e);
      dc.epsilons.push_back(e);
    }
    s.dichotomy = dc;
  }
  return s;
}

Scenario load_scenario(const std::string& path) {
  std::ifstream in(path);
  if (!in) fail(ErrorKind::ConfigInvalid, path + ": cannot open config file");
  std::ostringstream text;
  text << in.rdbuf();
  return parse_scenario(text.str());
}

std::string canonical_config(const Scenario& scenario) { return scenario_json(scenario).dump(); }

TorusMap build_map(const FixtureConfig& fixture) {
  if (fixture.name != "custom") return fixture_catalog(fixture.name, fixture.epsilon);
  const LinearModel lin = analyze_matrix(IntMatrix::from_rows(fixture.matrix));
  return TorusMap(lin, TrigField(lin.dim(), fixture.terms), fixture.epsilon, "custom");
}

DichotomyReport dichotomy_sweep(const std::string& family, const std::vector<double>& epsilons, const Scenario& scenario) {
  DichotomyReport rep;
  rep.family = family;
  ArtifactCache cache(cache_directory(scenario));
  Scenario local = scenario;
  local.fixture.name = family;
  for (double eps : epsilons) {
    DichotomyRow row;
    row.epsilon = eps;
    try {
      local.fixture.epsilon = eps;
      const TorusMap f = build_map(local.fixture);
      rep.irreducible = f.linear().irreducible;
      rep.invertible = f.linear().degree == 1;
      const ConjugacyStage c = cached_conjugacy(f, local, cache, false);
      row.specialness_defect = c.specialness.relative;
      row.special = c.specialness.special;
      const IntegrabilityVerdict v = verdict_for(f, local);
      row.max_spread = v.max_spread;
      row.integrable = v.integrable;
      const RigidityReport rr = rigidity_report(f, cached_orbits(f, local.fixture, local.depths.max_period, cache),
                                                local.tolerances.rigidity);
      row.rigidity_deviation = rr.max_deviation;
      row.rigid = rr.rigid;
      const bool three_way = rep.irreducible && !rep.invertible;
      row.agreement = three_way ? (row.special == row.integrable && row.integrable == row.rigid)
                                : row.special == row.integrable;
    } catch (const std::exception& e) {
      row.error = e.what();
      row.agreement = false;
    }
    rep.all_agree = rep.all_agree && row.agreement;
    rep.rows.push_back(row);
  }
  std::vector<DichotomyRow> sorted = rep.rows;
  std::stable_sort(sorted.begin(), sorted.end(), [](const auto& a, const auto& b) { return a.epsilon < b.epsilon; });
  for (std::size_t i = 1; i < sorted.size(); ++i) {
    const auto& a = sorted[i - 1];
    const auto& b = sorted[i];
    if (b.specialness_defect < a.specialness_defect || b.max_spread < a.max_spread ||
        b.rigidity_deviation < a.rigidity_deviation) {
      rep.co_increasing = false;
    }
  }
  return rep;
}

RunReport run_scenario(const Scenario& scenario, const std::vector<std::string>& stages) {
  const auto started = std::chrono::steady_clock::now();
  const std::vector<std::string>& requested = stages.empty() ? scenario.stages : stages;
  for (const auto& s : requested) {
    const auto& names = stage_names();
    if (std::find(names.begin(), names.end(), s) == names.end()) fail(ErrorKind::ConfigInvalid, "stages: unknown stage '" + s + "'");
  }
  const fs::path out(scenario.output_dir);
  fs::create_directories(out);

  RunReport result;
  std::unique_ptr<Context> ctx;
  try {
    ctx = std::make_unique<Context>(Context{scenario, build_map(scenario.fixture), out,
                                            ArtifactCache(cache_directory(scenario)), {}, {}, {}, {}, {}});
    ctx->put("fixture.name", scenario.fixture.name);
    ctx->put("fixture.epsilon", num(scenario.fixture.epsilon));
    ctx->put("seed", std::to_string(scenario.seed));
    for (const auto& name : stage_names()) {
      if (std::find(requested.begin(), requested.end(), name) == requested.end()) continue;
      if (name == "analyze") stage_analyze(*ctx);
      if (name == "certify") stage_certify(*ctx);
      if (name == "conjugacy") stage_conjugacy(*ctx);
      if (name == "orbits") stage_orbits(*ctx);
      if (name == "branches") stage_branches(*ctx);
      if (name == "metric") stage_metric(*ctx);
      if (name == "dichotomy") stage_dichotomy(*ctx);
    }
    reconcile_verdicts(*ctx);
    result = ctx->report;
    result.cache_hits = ctx->cache.hits();
    result.exit_code = result.findings.empty() ? 0 : 2;
  } catch (const Error& e) {
    if (ctx) result = ctx->report;
    result.error = e.what();
    result.exit_code = 1;
  } catch (const std::exception& e) {
    if (ctx) result = ctx->report;
    result.error = e.what();
    result.exit_code = 1;
  }

  {
    std::ofstream summary(out / "summary.txt");
    for (const auto& [k, v] : result.summary) summary << k << ": " << v << '\n';
    for (const auto& f : result.findings) summary << "finding: " << f << '\n';
    if (!result.error.empty()) summary << "error: " << result.error << '\n';
    summary << "exit_code: " << result.exit_code << '\n';
  }
  result.files.push_back("summary.txt");
  {
    std::ofstream meta(out / "metadata.txt");
    meta << "timestamp: " << timestamp() << '\n';
    meta << "threads: " << thread_count() << '\n';
    meta << "cache_dir: " << cache_directory(scenario) << '\n';
    meta << "cache_hits: " << result.cache_hits << '\n';
    meta << "wall_seconds: " << std::chrono::duration<double>(std::chrono::steady_clock::now() - started).count() << '\n';
    meta << "config: " << canonical_config(scenario) << '\n';
  }
  result.files.push_back("metadata.txt");
  return result;
}

}  // namespace anosov
