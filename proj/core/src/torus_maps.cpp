#include "anosov/torus_maps.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <sstream>

namespace anosov {

namespace {

constexpr double kTwoPi = 2.0 * std::numbers::pi;

std::string format_vec(const Vec& v) {
  std::ostringstream out;
  out.precision(6);
  out << "(";
  for (Eigen::Index i = 0; i < v.size(); ++i) out << (i ? ", " : "") << v[i];
  out << ")";
  return out.str();
}

Vec grid_point(std::size_t cell, int dim, int n) {
  Vec g(dim);
  for (int i = dim - 1; i >= 0; --i) {
    g[i] = (static_cast<double>(cell % n) + 0.5) / n;
    cell /= n;
  }
  return g;
}

std::size_t grid_size(int dim, int n) {
  std::size_t cells = 1;
  for (int i = 0; i < dim; ++i) cells *= static_cast<std::size_t>(n);
  return cells;
}

/// Deterministic unit vectors covering the sphere S^{dim-1} (up to sign).
std::vector<Vec> sphere_samples(int dim) {
  std::vector<Vec> out;
  if (dim == 0) {
    out.emplace_back(Vec(0));
  } else if (dim == 1) {
    out.emplace_back(Vec::Ones(1));
  } else if (dim == 2) {
    for (int j = 0; j < 16; ++j) {
      const double t = std::numbers::pi * j / 16.0;
      Vec v(2);
      v << std::cos(t), std::sin(t);
      out.push_back(v);
    }
  } else {
    for (int j = 0; j < dim; ++j) out.emplace_back(Vec::Unit(dim, j));
    Rng rng(0x5eed);
    for (int j = 0; j < 48; ++j) {
      Vec v(dim);
      for (int i = 0; i < dim; ++i) v[i] = 2.0 * rng.uniform() - 1.0;
      if (v.norm() > 1e-3) out.push_back(v.normalized());
    }
  }
  return out;
}

}  // namespace

// ---------------------------------------------------------------------------
// TrigField

TrigField::TrigField(int dim, std::vector<TrigTerm> terms) : dim_(dim), terms_(std::move(terms)) {
  for (const auto& t : terms_) {
    if (t.component < 0 || t.component >= dim_ || t.frequency.size() != dim_) {
      fail(ErrorKind::InvalidArgument, "perturbation term does not match the dimension");
    }
  }
}

Vec TrigField::value(const Vec& x) const {
  Vec v = Vec::Zero(x.size());
  for (const auto& t : terms_) {
    const double phase = kTwoPi * t.frequency.cast<double>().dot(x);
    v[t.component] += t.cos_coef * std::cos(phase) + t.sin_coef * std::sin(phase);
  }
  return v;
}

void TrigField::value_and_jacobian(const Vec& x, Vec& value, Mat& jacobian) const {
  const auto d = x.size();
  value = Vec::Zero(d);
  jacobian = Mat::Zero(d, d);
  for (const auto& t : terms_) {
    const Vec k = t.frequency.cast<double>();
    const double phase = kTwoPi * k.dot(x);
    const double c = std::cos(phase), s = std::sin(phase);
    value[t.component] += t.cos_coef * c + t.sin_coef * s;
    jacobian.row(t.component) += kTwoPi * (t.sin_coef * c - t.cos_coef * s) * k.transpose();
  }
}

double TrigField::coefficient_bound() const {
  Vec bound = Vec::Zero(std::max(dim_, 1));
  for (const auto& t : terms_) bound[t.component] += std::abs(t.cos_coef) + std::abs(t.sin_coef);
  return bound.norm();
}

// ---------------------------------------------------------------------------
// TorusMap

TorusMap::TorusMap(LinearModel linear, TrigField perturbation, double epsilon, std::string name,
                   TrigField conjugator)
    : linear_(std::move(linear)),
      perturbation_(std::move(perturbation)),
      conjugator_(std::move(conjugator)),
      epsilon_(epsilon),
      name_(std::move(name)) {
  const int d = linear_.dim();
  if (perturbation_.dim() == 0) perturbation_ = TrigField(d, {});
  if (conjugator_.dim() == 0) conjugator_ = TrigField(d, {});
  if (perturbation_.dim() != d || conjugator_.dim() != d) {
    fail(ErrorKind::InvalidArgument, "perturbation dimension differs from the matrix dimension");
  }
  if (!std::isfinite(epsilon_)) fail(ErrorKind::InvalidArgument, "epsilon must be finite");
  a_real_ = linear_.matrix.to_real();
  a_inverse_ = a_real_.inverse();
  scan_determinant();
}

TorusMap TorusMap::with_epsilon(double epsilon) const {
  return TorusMap(linear_, perturbation_, epsilon, name_, conjugator_);
}

Vec TorusMap::conjugator_apply(const Vec& x) const {
  if (!has_conjugator()) return x;
  return x + epsilon_ * conjugator_.value(x);
}

Vec TorusMap::conjugator_inverse(const Vec& x) const {
  if (!has_conjugator()) return x;
  const int d = dim();
  Vec z = x;
  Vec q;
  Mat dq;
  const double scale = std::max(1.0, x.norm());
  for (int it = 0; it < 60; ++it) {
    conjugator_.value_and_jacobian(z, q, dq);
    const Vec r = z + epsilon_ * q - x;
    if (r.norm() <= 1e-15 * scale) return z;
    const Mat j = Mat::Identity(d, d) + epsilon_ * dq;
    const Vec step = j.partialPivLu().solve(r);
    z -= step;
    if (step.norm() <= 1e-16 * scale) return z;
  }
  conjugator_.value_and_jacobian(z, q, dq);
  if ((z + epsilon_ * q - x).norm() <= 1e-12 * scale) return z;
  fail(ErrorKind::NoConvergence, "conjugator inverse did not converge at " + format_vec(x));
}

Vec TorusMap::evaluate(const Vec& x) const {
  if (is_linear()) return a_real_ * x;
  if (!has_conjugator()) return a_real_ * x + epsilon_ * perturbation_.value(x);
  const Vec z = conjugator_inverse(x);
  Vec w = a_real_ * z;
  if (!perturbation_.empty()) w += epsilon_ * perturbation_.value(z);
  return w + epsilon_ * conjugator_.value(w);
}

JetSample TorusMap::evaluate_with_jacobian(const Vec& x) const {
  JetSample s;
  s.point = x;
  if (is_linear()) {
    s.image = a_real_ * x;
    s.jacobian = a_real_;
    return s;
  }
  Vec p;
  Mat dp;
  if (!has_conjugator()) {
    perturbation_.value_and_jacobian(x, p, dp);
    s.image = a_real_ * x + epsilon_ * p;
    s.jacobian = a_real_ + epsilon_ * dp;
    return s;
  }
  const int d = dim();
  const Mat id = Mat::Identity(d, d);
  const Vec z = conjugator_inverse(x);
  Vec q;
  Mat dq;
  conjugator_.value_and_jacobian(z, q, dq);
  const Mat dg_z = id + epsilon_ * dq;
  Vec w = a_real_ * z;
  Mat dbase = a_real_;
  if (!perturbation_.empty()) {
    perturbation_.value_and_jacobian(z, p, dp);
    w += epsilon_ * p;
    dbase += epsilon_ * dp;
  }
  conjugator_.value_and_jacobian(w, q, dq);
  s.image = w + epsilon_ * q;
  s.jacobian = (id + epsilon_ * dq) * dbase * dg_z.inverse();
  return s;
}

void TorusMap::scan_determinant() {
  if (is_linear()) {
    det_min_ = det_max_ = static_cast<double>(linear_.matrix.determinant());
    return;
  }
  const int d = dim();
  const int n = default_grid(d);
  const std::size_t cells = grid_size(d, n);
  std::vector<double> dets(cells);
  parallel_for(cells, [&](std::size_t cell) {
    dets[cell] = evaluate_with_jacobian(grid_point(cell, d, n)).jacobian.determinant();
  });
  const auto [lo, hi] = std::minmax_element(dets.begin(), dets.end());
  det_min_ = *lo;
  det_max_ = *hi;
}

bool TorusMap::local_diffeo_on_grid() const {
  if (det_min_ * det_max_ <= 0.0) return false;
  return std::min(std::abs(det_min_), std::abs(det_max_)) > 1e-9;
}

// ---------------------------------------------------------------------------
// inversion and preimages

Vec invert_lift(const TorusMap& f, const Vec& y, const NewtonOptions& options) {
  if (!f.local_diffeo_on_grid()) {
    std::ostringstream msg;
    msg << "det DF ranges over [" << f.min_jacobian_det() << ", " << f.max_jacobian_det()
        << "] on the verification grid";
    fail(ErrorKind::NotLocalDiffeo, msg.str());
  }
  const Mat a = f.linear().matrix.to_real();
  Vec x = a.partialPivLu().solve(y);
  if (f.is_linear()) return x;
  const double scale = std::max(1.0, y.norm());
  const double target = options.tol * scale;
  JetSample jet = f.evaluate_with_jacobian(x);
  Vec r = jet.image - y;
  double rn = r.norm();
  for (int it = 0; it < options.max_iterations; ++it) {
    if (rn <= target) return x;
    Eigen::PartialPivLU<Mat> lu(jet.jacobian);
    if (std::abs(lu.determinant()) < 1e-12) {
      fail(ErrorKind::NotLocalDiffeo, "singular Jacobian at " + format_vec(x));
    }
    const Vec step = lu.solve(r);
    double t = 1.0;
    bool improved = false;
    for (int back = 0; back < 30; ++back, t *= 0.5) {
      const Vec trial = x - t * step;
      JetSample tj = f.evaluate_with_jacobian(trial);
      const double tn = (tj.image - y).norm();
      if (tn < rn) {
        x = trial;
        jet = std::move(tj);
        r = jet.image - y;
        rn = tn;
        improved = true;
        break;
      }
    }
    if (!improved) {
      // rounding floor reached; accept if close to the requested accuracy
      if (rn <= 1e3 * target) return x;
      break;
    }
  }
  if (rn <= target) return x;
  std::ostringstream msg;
  msg << "Newton for F(x) = " << format_vec(y) << " stalled with residual " << rn;
  fail(ErrorKind::NoConvergence, msg.str());
}

Vec preimage_branch(const TorusMap& f, const Vec& x, const IntVec& representative, const NewtonOptions& options) {
  return wrap(invert_lift(f, x + representative.cast<double>(), options));
}

std::vector<Vec> torus_preimages(const TorusMap& f, const Vec& x, double tol) {
  const LatticeCoset cosets = coset_representatives(f.linear().matrix);
  std::vector<Vec> out;
  out.reserve(cosets.size());
  for (const auto& r : cosets.representatives) {
    Vec z;
    try {
      z = preimage_branch(f, x, r);
    } catch (const Error& e) {
      if (e.kind() == ErrorKind::NotLocalDiffeo) throw;
      fail(ErrorKind::IncompleteEnumeration, std::string("preimage Newton failed: ") + e.what());
    }
    if (torus_distance(f.torus_step(z), x) > tol) {
      fail(ErrorKind::IncompleteEnumeration, "preimage residual exceeds tolerance at " + format_vec(x));
    }
    for (const auto& other : out) {
      if (torus_distance(other, z) <= tol) {
        fail(ErrorKind::IncompleteEnumeration, "two preimages collide at " + format_vec(z));
      }
    }
    out.push_back(z);
  }
  return out;
}

// ---------------------------------------------------------------------------
// cone certification

int default_grid(int dim) {
  switch (dim) {
    case 1: return 256;
    case 2: return 64;
    case 3: return 24;
    default: return 8;
  }
}

AnosovCertificate measure_cones(const TorusMap& f, double cone_slope, int iterations, int grid_n) {
  if (cone_slope <= 0.0 || iterations < 1) fail(ErrorKind::InvalidArgument, "cone slope and iterations must be positive");
  const int d = f.dim();
  if (grid_n <= 0) grid_n = default_grid(d);
  const LinearModel& lin = f.linear();
  const Mat& ps = lin.stable_projection;
  const Mat& pu = lin.unstable_projection;
  const Mat& eu = lin.unstable_basis;
  const Mat& es = lin.stable_basis;
  const int du = lin.unstable_dim(), ds = lin.stable_dim();

  // directions v = a + s t b with a in L^u, b in L^s unit, t in {0, 1/2, 1}
  auto cone_directions = [&](const Mat& main, int dm, const Mat& side, int dside) {
    std::vector<Vec> dirs;
    for (const Vec& alpha : sphere_samples(dm)) {
      const Vec a = main * alpha;
      dirs.push_back(a);
      if (dside == 0) continue;
      for (const Vec& beta : sphere_samples(dside)) {
        for (double t : {0.5, 1.0}) {
          dirs.push_back(a + cone_slope * t * (side * beta));
          dirs.push_back(a - cone_slope * t * (side * beta));
        }
      }
    }
    return dirs;
  };
  const std::vector<Vec> udirs = cone_directions(eu, du, es, ds);
  const std::vector<Vec> sdirs = ds > 0 ? cone_directions(es, ds, eu, du) : std::vector<Vec>{};

  struct Cell {
    double uslope = 0, uexp = std::numeric_limits<double>::infinity();
    double sslope = 0, sexp = std::numeric_limits<double>::infinity();
    Vec worst_dir;
    double worst_score = -std::numeric_limits<double>::infinity();
  };
  const std::size_t cells = grid_size(d, grid_n);
  std::vector<Cell> results(cells);
  parallel_for(cells, [&](std::size_t cell) {
    Vec x = grid_point(cell, d, grid_n);
    Mat m = Mat::Identity(d, d);
    for (int i = 0; i < iterations; ++i) {
      const JetSample jet = f.evaluate_with_jacobian(x);
      m = jet.jacobian * m;
      x = wrap(jet.image);
    }
    Cell c;
    for (const Vec& v : udirs) {
      const Vec w = m * v;
      const double wu = (pu * w).norm();
      const double slope = wu > 0 ? (ps * w).norm() / wu : std::numeric_limits<double>::infinity();
      const double growth = wu / (pu * v).norm();
      c.uslope = std::max(c.uslope, slope);
      c.uexp = std::min(c.uexp, growth);
      const double score = std::max(slope / (0.5 * cone_slope), 1.0 / growth);
      if (score > c.worst_score) { c.worst_score = score; c.worst_dir = v.normalized(); }
    }
    if (!sdirs.empty()) {
      const Mat minv = m.inverse();
      for (const Vec& v : sdirs) {
        const Vec w = minv * v;
        const double ws = (ps * w).norm();
        const double slope = ws > 0 ? (pu * w).norm() / ws : std::numeric_limits<double>::infinity();
        const double growth = ws / (ps * v).norm();
        c.sslope = std::max(c.sslope, slope);
        c.sexp = std::min(c.sexp, growth);
        const double score = std::max(slope / (0.5 * cone_slope), 1.0 / growth);
        if (score > c.worst_score) { c.worst_score = score; c.worst_dir = v.normalized(); }
      }
    }
    results[cell] = std::move(c);
  });

  AnosovCertificate cert;
  cert.cone_slope = cone_slope;
  cert.iterations = iterations;
  cert.grid_n = grid_n;
  cert.min_expansion = std::numeric_limits<double>::infinity();
  cert.min_contraction_inverse = ds > 0 ? std::numeric_limits<double>::infinity() : 0.0;
  std::size_t worst = 0;
  for (std::size_t cell = 0; cell < cells; ++cell) {
    const Cell& c = results[cell];
    cert.max_unstable_slope = std::max(cert.max_unstable_slope, c.uslope);
    cert.min_expansion = std::min(cert.min_expansion, c.uexp);
    if (ds > 0) {
      cert.max_stable_slope = std::max(cert.max_stable_slope, c.sslope);
      cert.min_contraction_inverse = std::min(cert.min_contraction_inverse, c.sexp);
    }
    if (c.worst_score > results[worst].worst_score) worst = cell;
  }
  // Lipschitz estimate of the per-cell unstable slope along grid axes
  const double h = 1.0 / grid_n;
  double lip = 0.0;
  for (std::size_t cell = 0; cell < cells; ++cell) {
    std::size_t stride = 1;
    for (int axis = d - 1; axis >= 0; --axis) {
      const std::size_t coord = (cell / stride) % grid_n;
      const std::size_t neighbour = coord + 1 < static_cast<std::size_t>(grid_n) ? cell + stride : cell - coord * stride;
      lip = std::max(lip, std::abs(results[cell].uslope - results[neighbour].uslope) / h);
      stride *= grid_n;
    }
  }
  cert.lipschitz_estimate = lip;
  cert.safety_margin = lip * 0.5 * h * std::sqrt(static_cast<double>(d));
  cert.witness_point = grid_point(worst, d, grid_n);
  cert.witness_direction = results[worst].worst_dir;

  std::ostringstream why;
  if (!(cert.max_unstable_slope <= 0.5 * cone_slope)) why << "unstable cone not mapped into half slope; ";
  if (!(cert.min_expansion > 1.0)) why << "unstable cone not expanded; ";
  if (ds > 0 && !(cert.max_stable_slope <= 0.5 * cone_slope)) why << "stable cone not mapped into half slope by inverse; ";
  if (ds > 0 && !(cert.min_contraction_inverse > 1.0)) why << "stable cone not expanded by inverse; ";
  cert.failure = why.str();
  cert.certified = cert.failure.empty();
  return cert;
}

AnosovCertificate anosov_certificate(const TorusMap& f, double cone_slope, int iterations, int grid_n) {
  AnosovCertificate cert = measure_cones(f, cone_slope, iterations, grid_n);
  if (!cert.certified) {
    fail(ErrorKind::CertificationFailed, cert.failure + "witness point " + format_vec(cert.witness_point) +
                                             " direction " + format_vec(cert.witness_direction));
  }
  return cert;
}

// ---------------------------------------------------------------------------
// fixtures

TrigField shear_field() {
  TrigTerm t;
  t.component = 1;
  t.frequency = IntVec::Unit(2, 0);
  t.sin_coef = 1.0;
  return TrigField(2, {t});
}

std::vector<std::string> fixture_names() {
  return {"linear_A0", "shear_A0", "conjugated_A0", "product_T3", "cubic_companion"};
}

TorusMap fixture_catalog(const std::string& name, double epsilon) {
  const IntMatrix a0 = IntMatrix::from_rows({{3, 1}, {1, 1}});
  if (name == "linear_A0") return TorusMap(analyze_matrix(a0), TrigField(2, {}), 0.0, name);
  if (name == "shear_A0") return TorusMap(analyze_matrix(a0), shear_field(), epsilon, name);
  if (name == "conjugated_A0") {
    TrigTerm gx{0, IntVec::Unit(2, 1), 0.0, 0.1};
    TrigTerm gy{1, IntVec::Unit(2, 0), 0.0, 0.1};
    return TorusMap(analyze_matrix(a0), TrigField(2, {}), epsilon, name, TrigField(2, {gx, gy}));
  }
  if (name == "product_T3") {
    const IntMatrix a1 = IntMatrix::from_rows({{2, 1, 0}, {1, 1, 0}, {0, 0, 2}});
    TrigTerm t{1, IntVec::Unit(3, 0), 0.0, 1.0};
    return TorusMap(analyze_matrix(a1), TrigField(3, {t}), epsilon, name);
  }
  if (name == "cubic_companion") {
    TrigTerm t{2, IntVec::Unit(3, 0), 0.0, 1.0};
    return TorusMap(analyze_matrix(IntMatrix::companion({1, -6, -1, 2})), TrigField(3, {t}), epsilon, name);
  }
  if (name == "custom") {
    fail(ErrorKind::InvalidArgument, "custom maps are built from a matrix and term table, not the catalog");
  }
  fail(ErrorKind::UnknownFixture, "unknown fixture '" + name + "'");
}

}  // namespace anosov
