#include "anosov/periodic_orbits.hpp"

#include <algorithm>
#include <cmath>
#include <complex>
#include <map>
#include <set>
#include <sstream>

namespace anosov {

namespace {

using i128 = __int128;

std::int64_t mod_positive(i128 a, std::int64_t m) {
  i128 r = a % m;
  if (r < 0) r += m;
  return static_cast<std::int64_t>(r);
}

IntVec apply_mod(const IntMat& a, const IntVec& v, std::int64_t m) {
  IntVec out(v.size());
  for (Eigen::Index i = 0; i < a.rows(); ++i) {
    i128 acc = 0;
    for (Eigen::Index k = 0; k < a.cols(); ++k) acc += static_cast<i128>(a(i, k)) * v[k];
    out[i] = mod_positive(acc, m);
  }
  return out;
}

std::vector<std::int64_t> as_key(const IntVec& v) { return std::vector<std::int64_t>(v.data(), v.data() + v.size()); }

/// Dedup key: coordinates rounded to 1e-8 and reduced mod 1.
std::vector<std::int64_t> point_key(const Vec& x) {
  std::vector<std::int64_t> key(x.size());
  for (Eigen::Index i = 0; i < x.size(); ++i) {
    const auto r = static_cast<std::int64_t>(std::llround(x[i] * 1e8));
    key[i] = ((r % 100000000) + 100000000) % 100000000;
  }
  return key;
}

/// F^n(x) - x split as (z_n - x) + M with M integer, plus D F^n(x).
void return_map(const TorusMap& f, const Vec& x, int n, Vec& frac, IntVec& lattice, Mat& jac,
                std::vector<Vec>* orbit = nullptr) {
  const int d = f.dim();
  const IntMat& a = f.linear().matrix.entries();
  Vec z = x;
  lattice = IntVec::Zero(d);
  jac = Mat::Identity(d, d);
  for (int j = 0; j < n; ++j) {
    if (orbit) orbit->push_back(wrap(z));
    const JetSample jet = f.evaluate_with_jacobian(z);
    jac = jet.jacobian * jac;
    IntVec k(d);
    for (int i = 0; i < d; ++i) k[i] = static_cast<std::int64_t>(std::floor(jet.image[i]));
    z = jet.image - k.cast<double>();
    lattice = checked_product(a, lattice) + k;
  }
  frac = z - x;
}

struct RawSolution {
  Vec x;
  IntVec m;
  double residual = 0.0;
  int steps = 0;
};

RawSolution newton_periodic(const TorusMap& f, const Vec& seed, int n, const OrbitOptions& options, IntVec m) {
  const int d = f.dim();
  Vec x = seed;
  Vec frac;
  IntVec lattice;
  Mat jac;
  return_map(f, x, n, frac, lattice, jac);
  if (m.size() == 0) {
    m = IntVec(d);
    for (int i = 0; i < d; ++i) m[i] = static_cast<std::int64_t>(std::llround(frac[i] + lattice[i]));
  }
  auto residual_of = [&](const Vec& fr, const IntVec& lat) -> Vec { return fr + (lat - m).cast<double>(); };
  Vec g = residual_of(frac, lattice);
  RawSolution sol;
  int it = 0;
  for (; it < options.max_iterations && g.norm() > options.tol; ++it) {
    const Mat sys = jac - Mat::Identity(d, d);
    Eigen::PartialPivLU<Mat> lu(sys);
    if (std::abs(lu.determinant()) < 1e-12) {
      fail(ErrorKind::SingularJacobian, "DF^n - I is singular along the Newton iteration");
    }
    const Vec step = lu.solve(g);
    x -= step;
    return_map(f, x, n, frac, lattice, jac);
    g = residual_of(frac, lattice);
    if (step.norm() <= 1e-15 * (1.0 + x.norm())) break;
  }
  if (g.norm() > options.tol) {
    std::ostringstream msg;
    msg << "periodic Newton (period " << n << ") stopped at residual " << g.norm();
    fail(ErrorKind::NoConvergence, msg.str());
  }
  sol.x = x;
  sol.m = m;
  sol.residual = g.norm();
  sol.steps = it;
  return sol;
}

PeriodicOrbit build_orbit(const TorusMap& f, const RawSolution& raw, int n, const OrbitOptions& options) {
  Vec frac;
  IntVec lattice;
  Mat jac;
  std::vector<Vec> cycle;
  return_map(f, raw.x, n, frac, lattice, jac, &cycle);
  // start the cycle at its lexicographically smallest point
  std::size_t start = 0;
  for (std::size_t j = 1; j < cycle.size(); ++j)
    if (point_key(cycle[j]) < point_key(cycle[start])) start = j;
  std::rotate(cycle.begin(), cycle.begin() + static_cast<std::ptrdiff_t>(start), cycle.end());

  PeriodicOrbit orbit;
  orbit.period = n;
  orbit.newton_steps = raw.steps;
  orbit.points = cycle;
  if (start == 0 && (wrap(raw.x) - raw.x).norm() == 0.0) {
    orbit.translation_class = raw.m;
    orbit.residual = raw.residual;
  } else {
    // polish at the new base point so the residual refers to points[0]
    const RawSolution again = newton_periodic(f, cycle.front(), n, options, IntVec());
    orbit.points.front() = again.x;
    orbit.translation_class = again.m;
    orbit.residual = again.residual;
  }
  orbit.all_exponents = cocycle_exponents(f, orbit.points);
  orbit.stable_exponents.assign(orbit.all_exponents.begin(),
                                orbit.all_exponents.begin() + f.linear().stable_dim());
  if (n <= 8) {
    Mat product = Mat::Identity(f.dim(), f.dim());
    for (const Vec& p : orbit.points) product = f.jacobian(p) * product;
    Eigen::EigenSolver<Mat> es(product, false);
    std::vector<double> direct;
    for (Eigen::Index i = 0; i < es.eigenvalues().size(); ++i) direct.push_back(std::log(std::abs(es.eigenvalues()[i])) / n);
    std::sort(direct.begin(), direct.end());
    for (std::size_t i = 0; i < direct.size(); ++i)
      orbit.cross_check_error = std::max(orbit.cross_check_error, std::abs(direct[i] - orbit.all_exponents[i]));
  }
  return orbit;
}

}  // namespace

// ---------------------------------------------------------------------------
// linear periodic points

std::vector<Vec> LinearCycle::points() const {
  std::vector<Vec> out;
  for (const auto& num : numerators) out.push_back(num.cast<double>() / static_cast<double>(denominator));
  return out;
}

namespace {

struct LinearPeriodicSet {
  IntMat b;
  std::int64_t denominator = 1;
  std::vector<IntVec> numerators;
};

LinearPeriodicSet linear_set(const LinearModel& a, int n, std::int64_t cap) {
  if (n < 1) fail(ErrorKind::InvalidArgument, "period must be positive");
  const IntMatrix power = a.matrix.power(n);
  const IntMat b = power.entries() - IntMat::Identity(a.dim(), a.dim());
  const std::int64_t det = exact_determinant(b);
  if (det == 0) fail(ErrorKind::NotHyperbolic, "A^n - I is singular");
  LinearPeriodicSet set;
  set.b = b;
  set.denominator = std::abs(det);
  if (set.denominator > cap) fail(ErrorKind::ResourceLimit, "periodic point count exceeds the cap");
  const IntMat adj = exact_adjugate(b);
  const LatticeCoset reps = coset_representatives(b);
  for (const auto& r : reps.representatives) {
    IntVec num = checked_product(adj, r);
    if (det < 0) num = -num;
    for (Eigen::Index i = 0; i < num.size(); ++i) num[i] = mod_positive(num[i], set.denominator);
    set.numerators.push_back(num);
  }
  return set;
}

}  // namespace

std::vector<Vec> linear_periodic_points(const LinearModel& a, int n, std::int64_t cap) {
  const LinearPeriodicSet set = linear_set(a, n, cap);
  std::vector<Vec> out;
  for (const auto& num : set.numerators) out.push_back(num.cast<double>() / static_cast<double>(set.denominator));
  return out;
}

std::vector<LinearCycle> linear_cycles(const LinearModel& a, int n, std::int64_t cap) {
  const LinearPeriodicSet set = linear_set(a, n, cap);
  const IntMat& am = a.matrix.entries();
  const std::int64_t den = set.denominator;
  std::set<std::vector<std::int64_t>> remaining;
  for (const auto& num : set.numerators) remaining.insert(as_key(num));
  std::vector<LinearCycle> cycles;
  while (!remaining.empty()) {
    const std::vector<std::int64_t> first = *remaining.begin();
    IntVec cur = Eigen::Map<const IntVec>(first.data(), static_cast<Eigen::Index>(first.size()));
    LinearCycle cycle;
    cycle.denominator = den;
    do {
      cycle.numerators.push_back(cur);
      remaining.erase(as_key(cur));
      cur = apply_mod(am, cur, den);
    } while (as_key(cur) != first);
    cycle.period = static_cast<int>(cycle.numerators.size());
    if (cycle.period != n) continue;
    // A^n x0 - x0 = B x0, an integer vector
    const IntVec bx = checked_product(set.b, cycle.numerators.front());
    cycle.translation = IntVec(bx.size());
    for (Eigen::Index i = 0; i < bx.size(); ++i) cycle.translation[i] = bx[i] / den;
    cycles.push_back(std::move(cycle));
  }
  return cycles;
}

// ---------------------------------------------------------------------------
// refinement and exponents

PeriodicOrbit refine_orbit(const TorusMap& f, const Vec& seed, int n, const OrbitOptions& options,
                           const IntVec& translation) {
  if (n < 1) fail(ErrorKind::InvalidArgument, "period must be positive");
  const RawSolution raw = newton_periodic(f, seed, n, options, translation);
  return build_orbit(f, raw, n, options);
}

namespace {

std::vector<TorusMap> continuation_family(const TorusMap& f, double step) {
  std::vector<TorusMap> family;
  if (f.is_linear()) return family;
  const int steps = std::max(1, static_cast<int>(std::ceil(std::abs(f.epsilon()) / step - 1e-12)));
  for (int s = 1; s < steps; ++s) family.push_back(f.with_epsilon(f.epsilon() * s / steps));
  return family;
}

RawSolution continue_raw(const TorusMap& f, const std::vector<TorusMap>& family, const Vec& x0, const IntVec& m,
                         int n, const OrbitOptions& options) {
  Vec x = x0;
  for (const TorusMap& g : family) x = newton_periodic(g, x, n, options, m).x;
  return newton_periodic(f, x, n, options, m);
}

}  // namespace

PeriodicOrbit continue_orbit(const TorusMap& f, const Vec& linear_point, const IntVec& translation, int n,
                             const OrbitOptions& options) {
  const auto family = continuation_family(f, options.continuation_step);
  return build_orbit(f, continue_raw(f, family, linear_point, translation, n, options), n, options);
}

std::vector<double> cocycle_exponents(const TorusMap& f, const std::vector<Vec>& cycle) {
  const int d = f.dim();
  const int n = static_cast<int>(cycle.size());
  if (n == 0) fail(ErrorKind::InvalidArgument, "empty cycle");
  std::vector<Mat> jacs;
  for (const Vec& p : cycle) jacs.push_back(f.jacobian(p));

  auto qr_step = [&](const Mat& m, Mat& q, Vec& logs) {
    Eigen::HouseholderQR<Mat> qr(m);
    q = qr.householderQ() * Mat::Identity(d, d);
    const Mat r = qr.matrixQR().triangularView<Eigen::Upper>();
    for (int i = 0; i < d; ++i) {
      if (r(i, i) < 0) q.col(i) = -q.col(i);
      logs[i] += std::log(std::abs(r(i, i)));
    }
  };
  Mat q = Mat::Identity(d, d);
  Vec logs = Vec::Zero(d);
  double previous = 1e300;
  for (int pass = 0; pass < 5000; ++pass) {
    const Mat start = q;
    for (const Mat& j : jacs) qr_step(j * q, q, logs);
    double change = 0.0;
    for (int c = 0; c < d; ++c) change = std::max(change, std::min((q.col(c) - start.col(c)).norm(), (q.col(c) + start.col(c)).norm()));
    // converged, or stalled at the rounding floor
    if (change < 1e-14 || (change < 1e-11 && change >= previous)) break;
    previous = change;
  }
  logs.setZero();
  for (const Mat& j : jacs) qr_step(j * q, q, logs);
  std::vector<double> out(logs.data(), logs.data() + d);
  for (double& v : out) v /= n;
  std::sort(out.begin(), out.end());
  return out;
}

std::vector<double> stable_spectrum_of_orbit(const TorusMap& f, const PeriodicOrbit& orbit) {
  const std::vector<double> all = cocycle_exponents(f, orbit.points);
  return std::vector<double>(all.begin(), all.begin() + f.linear().stable_dim());
}

std::vector<PeriodicOrbit> enumerate_orbits(const TorusMap& f, int max_period, const OrbitOptions& options) {
  std::vector<PeriodicOrbit> all;
  if (max_period <= 0) return all;
  const auto family = continuation_family(f, options.continuation_step);
  for (int n = 1; n <= max_period; ++n) {
    const std::vector<LinearCycle> cycles = linear_cycles(f.linear(), n);
    std::vector<PeriodicOrbit> found(cycles.size());
    parallel_for(cycles.size(), [&](std::size_t c) {
      const Vec x0 = cycles[c].numerators.front().cast<double>() / static_cast<double>(cycles[c].denominator);
      try {
        found[c] = build_orbit(f, continue_raw(f, family, x0, cycles[c].translation, n, options), n, options);
      } catch (const Error& e) {
        fail(ErrorKind::IncompleteEnumeration, "continuation of a period-" + std::to_string(n) + " cycle failed: " + e.what());
      }
    });
    // distinct linear cycles must stay distinct
    std::map<std::vector<std::int64_t>, std::size_t> owner;
    for (std::size_t c = 0; c < found.size(); ++c) {
      for (const Vec& p : found[c].points) {
        const auto key = point_key(p);
        auto [it, inserted] = owner.emplace(key, c);
        if (!inserted && it->second != c) {
          fail(ErrorKind::IncompleteEnumeration, "two continued cycles of period " + std::to_string(n) + " merged");
        }
      }
    }
    std::sort(found.begin(), found.end(), [](const PeriodicOrbit& a, const PeriodicOrbit& b) {
      return point_key(a.points.front()) < point_key(b.points.front());
    });
    for (auto& o : found) all.push_back(std::move(o));
  }
  return all;
}

// ---------------------------------------------------------------------------
// report

RigidityReport rigidity_report(const TorusMap& f, const std::vector<PeriodicOrbit>& orbits, double threshold) {
  RigidityReport report;
  report.threshold = threshold;
  report.linear_exponents = f.linear().stable_exponents();
  const std::size_t k = report.linear_exponents.size();
  report.max_deviation_per_index.assign(k, 0.0);
  report.spread_per_index.assign(k, 0.0);
  std::vector<double> lo(k, 1e300), hi(k, -1e300);
  int id = 0;
  for (const auto& o : orbits) {
    RigidityRow row;
    row.orbit_id = id++;
    row.period = o.period;
    row.point0 = o.points.front();
    row.translation_class = o.translation_class;
    row.exponents = o.stable_exponents;
    for (std::size_t i = 0; i < k; ++i) {
      const double dev = std::abs(o.stable_exponents[i] - report.linear_exponents[i]);
      row.deviation = std::max(row.deviation, dev);
      report.max_deviation_per_index[i] = std::max(report.max_deviation_per_index[i], dev);
      lo[i] = std::min(lo[i], o.stable_exponents[i]);
      hi[i] = std::max(hi[i], o.stable_exponents[i]);
    }
    report.max_deviation = std::max(report.max_deviation, row.deviation);
    report.rows.push_back(std::move(row));
  }
  if (!orbits.empty()) {
    for (std::size_t i = 0; i < k; ++i) {
      report.spread_per_index[i] = hi[i] - lo[i];
      report.max_spread = std::max(report.max_spread, report.spread_per_index[i]);
    }
  }
  report.rigid = report.max_deviation <= threshold;
  return report;
}

RigidityReport rigidity_report(const TorusMap& f, int max_period, double threshold) {
  return rigidity_report(f, enumerate_orbits(f, max_period), threshold);
}

}  // namespace anosov
