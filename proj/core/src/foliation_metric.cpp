#include "anosov/foliation_metric.hpp"

#include <algorithm>
#include <cmath>
#include <complex>
#include <limits>
#include <numbers>
#include <sstream>

namespace anosov {

namespace {

constexpr double kTwoPi = 2.0 * std::numbers::pi;

int default_order(int dim) {
  switch (dim) {
    case 2: return 16;
    case 3: return 4;
    default: return 2;
  }
}

int default_residual_grid(int dim) {
  switch (dim) {
    case 2: return 64;
    case 3: return 16;
    default: return 6;
  }
}

/// Visits every point of the uniform n^d vertex grid.
std::vector<Vec> uniform_grid(int dim, int n) {
  std::size_t total = 1;
  for (int j = 0; j < dim; ++j) total *= static_cast<std::size_t>(n);
  std::vector<Vec> pts(total, Vec(dim));
  for (std::size_t idx = 0; idx < total; ++idx) {
    std::size_t r = idx;
    for (int j = 0; j < dim; ++j) {
      pts[idx][j] = static_cast<double>(r % n) / n;
      r /= n;
    }
  }
  return pts;
}

/// Additive recurrence with the generalized golden ratio; low discrepancy in any dimension.
std::vector<Vec> kronecker_points(int dim, int count) {
  double g = 2.0;
  for (int it = 0; it < 60; ++it) g = std::pow(1.0 + g, 1.0 / (dim + 1));
  Vec alpha(dim);
  for (int j = 0; j < dim; ++j) alpha[j] = std::fmod(std::pow(1.0 / g, j + 1), 1.0);
  std::vector<Vec> pts(count, Vec(dim));
  for (int n = 0; n < count; ++n)
    for (int j = 0; j < dim; ++j) pts[n][j] = std::fmod(0.5 + (n + 1) * alpha[j], 1.0);
  return pts;
}

Vec oriented(Vec v, const Vec& reference) {
  if (reference.size() == v.size() && v.dot(reference) < 0) v = -v;
  return v;
}

double line_angle(const Vec& a, const Vec& b) {
  const Vec ua = a.normalized();
  const Vec ub = b.normalized();
  return std::asin(std::min(1.0, (ub - ua * ua.dot(ub)).norm()));
}

/// One midpoint-rule step along the line field.
Vec midpoint_step(const std::function<Vec(const Vec&)>& field, const Vec& p, Vec& heading, double h,
                  double max_turn) {
  const Vec v = oriented(field(p), heading);
  const Vec m = p + 0.5 * h * v;
  const Vec vm = oriented(field(m), v);
  if (line_angle(v, vm) > max_turn) {
    std::ostringstream msg;
    msg << "direction turns by " << line_angle(v, vm) << " rad within one step of size " << h;
    fail(ErrorKind::StepRejected, msg.str());
  }
  heading = vm;
  return p + h * vm;
}

double closest_on_segment(const Vec& a, const Vec& b, const Vec& p, double& t) {
  const Vec ab = b - a;
  const double len2 = ab.squaredNorm();
  t = len2 > 0 ? std::clamp((p - a).dot(ab) / len2, 0.0, 1.0) : 0.0;
  return (a + t * ab - p).norm();
}

}  // namespace

// ---------------------------------------------------------------------------

Vec LeafPolyline::point_at(double s) const {
  if (points.empty()) fail(ErrorKind::InvalidArgument, "empty leaf");
  if (s <= arclength.front()) return points.front();
  if (s >= arclength.back()) return points.back();
  const auto it = std::upper_bound(arclength.begin(), arclength.end(), s);
  const std::size_t j = static_cast<std::size_t>(it - arclength.begin());
  const double seg = arclength[j] - arclength[j - 1];
  const double t = seg > 0 ? (s - arclength[j - 1]) / seg : 0.0;
  return points[j - 1] + t * (points[j] - points[j - 1]);
}

LeafPolyline trace_stable_leaf(const TorusMap& f, const Vec& x, int i, double length, double step,
                               const TraceOptions& options) {
  if (length <= 0 || step <= 0) fail(ErrorKind::InvalidArgument, "leaf length and step must be positive");
  if (i < 0 || i >= f.linear().stable_dim()) fail(ErrorKind::InvalidArgument, "stable index out of range");
  const int n = static_cast<int>(std::ceil(length / step));
  const double h = length / n;
  const auto field = [&](const Vec& p) { return stable_line_on_lift(f, p, i, options.depth); };
  const Vec v0 = field(x);

  std::vector<Vec> sides[2];
  for (int side = 0; side < 2; ++side) {
    Vec heading = side == 0 ? v0 : Vec(-v0);
    Vec p = x;
    for (int s = 0; s < n; ++s) {
      p = midpoint_step(field, p, heading, h, options.max_turn);
      sides[side].push_back(p);
    }
  }
  LeafPolyline leaf;
  leaf.index = i;
  leaf.step = h;
  for (auto it = sides[1].rbegin(); it != sides[1].rend(); ++it) leaf.points.push_back(*it);
  leaf.origin = static_cast<int>(leaf.points.size());
  leaf.points.push_back(x);
  for (const auto& p : sides[0]) leaf.points.push_back(p);
  leaf.arclength.assign(leaf.points.size(), 0.0);
  for (std::size_t j = 1; j < leaf.points.size(); ++j)
    leaf.arclength[j] = leaf.arclength[j - 1] + (leaf.points[j] - leaf.points[j - 1]).norm();
  return leaf;
}

double tangency_residual(const TorusMap& f, const LeafPolyline& leaf, int depth) {
  const std::size_t segs = leaf.points.size() > 0 ? leaf.points.size() - 1 : 0;
  std::vector<double> angle(segs, 0.0);
  parallel_for(segs, [&](std::size_t j) {
    const Vec seg = leaf.points[j + 1] - leaf.points[j];
    const Vec mid = 0.5 * (leaf.points[j + 1] + leaf.points[j]);
    angle[j] = line_angle(seg, stable_line_on_lift(f, mid, leaf.index, depth));
  });
  return angle.empty() ? 0.0 : *std::max_element(angle.begin(), angle.end());
}

double distance_to_polyline(const LeafPolyline& leaf, const Vec& p, double* arclength) {
  if (leaf.points.size() == 1) {
    if (arclength) *arclength = 0.0;
    return (leaf.points[0] - p).norm();
  }
  double best = std::numeric_limits<double>::infinity();
  double best_s = 0.0;
  for (std::size_t j = 0; j + 1 < leaf.points.size(); ++j) {
    double t = 0.0;
    const double dist = closest_on_segment(leaf.points[j], leaf.points[j + 1], p, t);
    if (dist < best) {
      best = dist;
      best_s = leaf.arclength[j] + t * (leaf.arclength[j + 1] - leaf.arclength[j]);
    }
  }
  if (arclength) *arclength = best_s;
  return best;
}

double leaf_invariance_defect(const TorusMap& f, const LeafPolyline& leaf, const TraceOptions& options) {
  const Vec image_origin = f.evaluate(leaf.points[leaf.origin]);
  const double half = std::max(leaf.origin_arclength(), leaf.length() - leaf.origin_arclength());
  const LeafPolyline target = trace_stable_leaf(f, image_origin, leaf.index, half, leaf.step, options);
  std::vector<double> dist(leaf.points.size());
  parallel_for(leaf.points.size(), [&](std::size_t j) {
    dist[j] = distance_to_polyline(target, f.evaluate(leaf.points[j]));
  });
  return *std::max_element(dist.begin(), dist.end());
}

// ---------------------------------------------------------------------------

FourierSeries::FourierSeries(int dim, int order) : dim_(dim), order_(order) {
  if (dim < 1 || order < 1) fail(ErrorKind::InvalidArgument, "Fourier series needs dim >= 1 and order >= 1");
  const int width = 2 * order + 1;
  std::size_t total = 1;
  for (int j = 0; j < dim; ++j) total *= static_cast<std::size_t>(width);
  for (std::size_t idx = 0; idx < total; ++idx) {
    IntVec k(dim);
    std::size_t r = idx;
    for (int j = 0; j < dim; ++j) {
      k[j] = static_cast<std::int64_t>(r % width) - order;
      r /= width;
    }
    int lead = 0;
    while (lead < dim && k[lead] == 0) ++lead;
    if (lead < dim && k[lead] > 0) modes_.push_back(k);
  }
  coef_ = Vec::Zero(static_cast<Eigen::Index>(basis_size()));
}

void FourierSeries::basis(const Vec& x, double* out) const {
  const int width = 2 * order_ + 1;
  std::vector<std::complex<double>> e(static_cast<std::size_t>(dim_ * width));
  for (int j = 0; j < dim_; ++j)
    for (int m = -order_; m <= order_; ++m) e[j * width + m + order_] = std::polar(1.0, kTwoPi * m * x[j]);
  for (std::size_t t = 0; t < modes_.size(); ++t) {
    std::complex<double> z(1.0, 0.0);
    for (int j = 0; j < dim_; ++j) z *= e[j * width + modes_[t][j] + order_];
    out[2 * t] = z.real();
    out[2 * t + 1] = z.imag();
  }
}

double FourierSeries::value(const Vec& x) const {
  Vec b(static_cast<Eigen::Index>(basis_size()));
  basis(x, b.data());
  return b.dot(coef_);
}

FourierSeries FourierSeries::scaled(double factor) const {
  FourierSeries out = *this;
  out.coef_ *= factor;
  return out;
}

double FourierSeries::sup_on_grid(int grid_n) const {
  const std::vector<Vec> pts = uniform_grid(dim_, grid_n);
  std::vector<double> v(pts.size());
  parallel_for(pts.size(), [&](std::size_t j) { v[j] = std::abs(value(pts[j])); });
  return *std::max_element(v.begin(), v.end());
}

CocycleSolution livschitz_solve(const TorusMap& f, const ScalarField& phi, const LivschitzOptions& options,
                                const std::vector<PeriodicOrbit>* orbits) {
  if (options.oversampling < 1.0) fail(ErrorKind::InvalidArgument, "oversampling must be at least 1");
  const int d = f.dim();
  CocycleSolution sol;
  sol.psi = FourierSeries(d, options.order > 0 ? options.order : default_order(d));
  sol.obstruction_tol = options.obstruction_tol;
  const auto nb = static_cast<Eigen::Index>(sol.psi.basis_size());
  const Eigen::Index unknowns = nb + 1;
  const int count = static_cast<int>(std::ceil(options.oversampling * static_cast<double>(unknowns)));
  sol.collocation_points = count;

  const std::vector<Vec> pts = kronecker_points(d, count);
  Mat a(count, unknowns);
  Vec rhs(count);
  parallel_for(static_cast<std::size_t>(count), [&](std::size_t n) {
    Vec bx(nb), bf(nb);
    const Vec& x = pts[n];
    sol.psi.basis(x, bx.data());
    sol.psi.basis(wrap(f.evaluate(x)), bf.data());
    a.row(static_cast<Eigen::Index>(n)).head(nb) = (bf - bx).transpose();
    a(static_cast<Eigen::Index>(n), nb) = 1.0;
    rhs[static_cast<Eigen::Index>(n)] = phi(x);
  });
  Mat normal = a.transpose() * a;
  normal.diagonal().array() += 1e-13 * normal.diagonal().maxCoeff();
  const Vec solution = normal.ldlt().solve(a.transpose() * rhs);
  sol.psi.coefficients() = solution.head(nb);
  sol.lambda = solution[nb];
  sol.collocation_rms = std::sqrt((a * solution - rhs).squaredNorm() / count);

  const int grid_n = options.residual_grid > 0 ? options.residual_grid : default_residual_grid(d);
  const std::vector<Vec> grid = uniform_grid(d, grid_n);
  std::vector<double> res(grid.size());
  parallel_for(grid.size(), [&](std::size_t j) {
    const Vec& x = grid[j];
    res[j] = std::abs(phi(x) - sol.lambda - sol.psi.value(wrap(f.evaluate(x))) + sol.psi.value(x));
  });
  sol.residual = *std::max_element(res.begin(), res.end());

  if (options.orbit_average_length > 0) {
    Rng rng(options.seed);
    Vec x = rng.uniform_point(d);
    double sum = 0.0;
    for (int n = 0; n < options.orbit_average_length; ++n) {
      sum += phi(x);
      x = wrap(f.evaluate(x));
    }
    sol.orbit_average = sum / options.orbit_average_length;
  }

  std::vector<PeriodicOrbit> owned;
  if (!orbits && options.obstruction_period > 0) {
    owned = enumerate_orbits(f, options.obstruction_period);
    orbits = &owned;
  }
  if (orbits) {
    for (const auto& orbit : *orbits) {
      double sum = 0.0;
      for (const auto& p : orbit.points) sum += phi(p);
      const double avg = sum / static_cast<double>(orbit.points.size());
      sol.periodic_averages.push_back(avg);
      sol.periodic_periods.push_back(orbit.period);
      sol.obstruction = std::max(sol.obstruction, std::abs(avg - sol.lambda));
    }
  }
  sol.obstructed = sol.obstruction > sol.obstruction_tol;
  return sol;
}

void require_coboundary(const CocycleSolution& solution) {
  if (!solution.obstructed) return;
  std::ostringstream msg;
  msg << "periodic averages differ from lambda = " << solution.lambda << " by up to " << solution.obstruction
      << " (tolerance " << solution.obstruction_tol << ")";
  fail(ErrorKind::ObstructionNonzero, msg.str());
}

double bundle_observable(const TorusMap& f, const Vec& x, int i, int depth) {
  const int k = f.linear().stable_dim();
  if (i < 0 || i >= k) fail(ErrorKind::InvalidArgument, "stable index out of range");
  const Mat flag = stable_flag(f, x, depth);
  const Mat image = f.jacobian(wrap(x)) * flag.leftCols(i + 1);
  const Eigen::HouseholderQR<Mat> qr(image);
  return std::log(std::abs(qr.matrixQR()(i, i)));
}

BundleCoboundary bundle_coboundary_psi(const TorusMap& f, int i, const LivschitzOptions& options, int depth,
                                       const std::vector<PeriodicOrbit>* orbits) {
  BundleCoboundary out;
  out.index = i;
  out.linear_exponent = f.linear().stable_exponents().at(static_cast<std::size_t>(i));
  out.solution = livschitz_solve(f, [&](const Vec& x) { return bundle_observable(f, x, i, depth); }, options, orbits);
  out.Psi = out.solution.psi.scaled(-1.0);
  out.lambda_error = std::abs(out.solution.lambda - out.linear_exponent);
  const int grid_n = options.residual_grid > 0 ? options.residual_grid : default_residual_grid(f.dim());
  out.sup_abs_Psi = out.Psi.sup_on_grid(grid_n);
  out.equivalence_constant = std::exp(out.sup_abs_Psi);
  return out;
}

// ---------------------------------------------------------------------------

double affine_length(const std::vector<Vec>& nodes, const ScalarField& Psi) {
  if (nodes.size() < 2) return 0.0;
  double total = 0.0;
  double prev = std::exp(Psi(nodes[0]));
  for (std::size_t j = 1; j < nodes.size(); ++j) {
    const double cur = std::exp(Psi(nodes[j]));
    total += 0.5 * (prev + cur) * (nodes[j] - nodes[j - 1]).norm();
    prev = cur;
  }
  return total;
}

double affine_distance(const LeafPolyline& leaf, double sa, double sb, const ScalarField& Psi) {
  if (sa > sb) std::swap(sa, sb);
  std::vector<Vec> nodes{leaf.point_at(sa)};
  for (std::size_t j = 0; j < leaf.points.size(); ++j)
    if (leaf.arclength[j] > sa && leaf.arclength[j] < sb) nodes.push_back(leaf.points[j]);
  nodes.push_back(leaf.point_at(sb));
  return affine_length(nodes, Psi);
}

AffinityReport affinity_check(const TorusMap& f, const BundleCoboundary& psi, int leaves, int pairs_per_leaf,
                              std::uint64_t seed, double length, double step, int depth) {
  if (leaves < 1 || pairs_per_leaf < 1) fail(ErrorKind::InvalidArgument, "affinity_check needs samples");
  AffinityReport report;
  report.expected = std::exp(psi.solution.lambda);
  Rng rng(seed);
  std::vector<Vec> starts;
  std::vector<std::vector<std::pair<double, double>>> params(leaves);
  for (int l = 0; l < leaves; ++l) {
    starts.push_back(rng.uniform_point(f.dim()));
    for (int p = 0; p < pairs_per_leaf; ++p) params[l].push_back({rng.uniform(), rng.uniform()});
  }
  const ScalarField field = [&](const Vec& x) { return psi(x); };
  std::vector<std::vector<double>> ratios(leaves), spread(leaves);
  parallel_for(static_cast<std::size_t>(leaves), [&](std::size_t l) {
    TraceOptions topt;
    topt.depth = depth;
    const LeafPolyline leaf = trace_stable_leaf(f, starts[l], psi.index, length, step, topt);
    const int n = static_cast<int>(leaf.points.size());
    for (const auto& [u, v] : params[l]) {
      int ja = static_cast<int>(u * (n - 1));
      int jb = static_cast<int>(v * (n - 1));
      if (ja > jb) std::swap(ja, jb);
      if (jb - ja < 10) jb = std::min(n - 1, ja + 10), ja = jb - 10;
      std::vector<Vec> seg(leaf.points.begin() + ja, leaf.points.begin() + jb + 1);
      std::vector<Vec> image;
      for (const auto& p : seg) image.push_back(f.evaluate(p));
      const double d = affine_length(seg, field);
      const double arc = leaf.arclength[jb] - leaf.arclength[ja];
      ratios[l].push_back(affine_length(image, field) / d);
      spread[l].push_back(std::max(d / arc, arc / d));
    }
  });
  for (int l = 0; l < leaves; ++l) {
    for (double r : ratios[l]) {
      report.ratios.push_back(r);
      report.max_relative_error = std::max(report.max_relative_error, std::abs(r / report.expected - 1.0));
    }
    for (double q : spread[l]) {
      report.worst_equivalence_ratio = std::max(report.worst_equivalence_ratio, q);
      if (q > psi.equivalence_constant * (1.0 + 1e-9)) ++report.equivalence_violations;
    }
  }
  return report;
}

// ---------------------------------------------------------------------------

namespace {

void require_planar_integrable(const TorusMap& f, const IntegrabilityVerdict& verdict) {
  if (f.dim() != 2) fail(ErrorKind::InvalidArgument, "unstable holonomy is implemented for d = 2");
  if (!verdict.integrable) {
    std::ostringstream msg;
    msg << "unstable direction depends on the branch (spread " << verdict.max_spread << " > " << verdict.tol << ")";
    fail(ErrorKind::RefusedNonIntegrable, msg.str());
  }
}

std::function<Vec(const Vec&)> unstable_field(const TorusMap& f, int depth) {
  const BranchCode code = BranchCode::constant(depth, 0);
  return [&f, code](const Vec& p) -> Vec { return unstable_direction_along_branch(f, wrap(p), code).col(0); };
}

double signed_offset(const LeafPolyline& leaf, const Vec& p) {
  double best = std::numeric_limits<double>::infinity();
  double offset = 0.0;
  for (std::size_t j = 0; j + 1 < leaf.points.size(); ++j) {
    double t = 0.0;
    const double dist = closest_on_segment(leaf.points[j], leaf.points[j + 1], p, t);
    if (dist < best) {
      best = dist;
      const Vec tangent = (leaf.points[j + 1] - leaf.points[j]).normalized();
      const Vec rel = p - (leaf.points[j] + t * (leaf.points[j + 1] - leaf.points[j]));
      offset = tangent[0] * rel[1] - tangent[1] * rel[0];
    }
  }
  return offset;
}

}  // namespace

Vec unstable_displacement(const TorusMap& f, const Vec& x, double distance, const HolonomyOptions& options) {
  if (f.dim() != 2) fail(ErrorKind::InvalidArgument, "unstable displacement is implemented for d = 2");
  const auto field = unstable_field(f, options.branch_depth);
  const int n = std::max(1, static_cast<int>(std::ceil(std::abs(distance) / options.step)));
  const double h = std::abs(distance) / n;
  Vec heading = field(x);
  if (distance < 0) heading = -heading;
  Vec p = x;
  for (int s = 0; s < n; ++s) p = midpoint_step(field, p, heading, h, 0.5);
  return p;
}

HolonomyPoint unstable_holonomy(const TorusMap& f, const IntegrabilityVerdict& verdict, const LeafPolyline& target,
                                const Vec& y, const HolonomyOptions& options) {
  require_planar_integrable(f, verdict);
  const auto field = unstable_field(f, options.branch_depth);
  const double h = options.step;
  HolonomyPoint out;
  double g0 = signed_offset(target, y);
  if (std::abs(g0) < 1e-15) {
    distance_to_polyline(target, y, &out.arclength);
    out.point = y;
    return out;
  }
  Vec heading = field(y);
  if (std::abs(signed_offset(target, y + h * heading)) > std::abs(g0)) heading = -heading;
  Vec p = y;
  double travelled = 0.0;
  while (travelled < options.search_radius) {
    const Vec q = midpoint_step(field, p, heading, h, 0.5);
    const double g1 = signed_offset(target, q);
    if ((g0 < 0) != (g1 < 0) || g1 == 0.0) {
      double lo = 0.0, hi = 1.0, glo = g0;
      for (int it = 0; it < 80 && hi - lo > 1e-15; ++it) {
        const double mid = 0.5 * (lo + hi);
        const double gm = signed_offset(target, p + mid * (q - p));
        if ((gm < 0) == (glo < 0)) {
          lo = mid;
          glo = gm;
        } else {
          hi = mid;
        }
      }
      out.point = p + 0.5 * (lo + hi) * (q - p);
      const double dist = distance_to_polyline(target, out.point, &out.arclength);
      if (dist > 10 * h || out.arclength <= 0.0 || out.arclength >= target.length()) {
        fail(ErrorKind::NoIntersection, "unstable curve crosses the line of the leaf outside the traced segment");
      }
      return out;
    }
    p = q;
    g0 = g1;
    travelled += h;
  }
  std::ostringstream msg;
  msg << "no intersection with the stable leaf within unstable arclength " << options.search_radius;
  fail(ErrorKind::NoIntersection, msg.str());
}

HolonomyPoint unstable_holonomy(const TorusMap& f, const IntegrabilityVerdict& verdict, const Vec& x_prime,
                                const Vec& y, const HolonomyOptions& options) {
  require_planar_integrable(f, verdict);
  const LeafPolyline target = trace_stable_leaf(f, x_prime, 0, options.search_radius, options.step);
  return unstable_holonomy(f, verdict, target, y, options);
}

IsometryReport holonomy_isometry_check(const TorusMap& f, const IntegrabilityVerdict& verdict,
                                       const BundleCoboundary& psi, int samples, std::uint64_t seed,
                                       const HolonomyOptions& options) {
  require_planar_integrable(f, verdict);
  if (samples < 1) fail(ErrorKind::InvalidArgument, "holonomy_isometry_check needs samples");
  struct Draw {
    Vec x;
    double shift, left, right;
  };
  Rng rng(seed);
  std::vector<Draw> draws;
  for (int s = 0; s < samples; ++s) {
    Draw d{rng.uniform_point(2), 0, 0, 0};
    d.shift = (rng.uniform() < 0.5 ? -1.0 : 1.0) * (0.02 + 0.04 * rng.uniform());
    d.left = 0.03 + 0.07 * rng.uniform();
    d.right = 0.03 + 0.07 * rng.uniform();
    draws.push_back(d);
  }
  const ScalarField field = [&](const Vec& x) { return psi(x); };
  IsometryReport report;
  report.pairs = samples;
  report.defects.assign(samples, 0.0);
  report.affine.assign(samples, 0.0);
  report.linear.assign(samples, 0.0);
  parallel_for(static_cast<std::size_t>(samples), [&](std::size_t s) {
    const Draw& d = draws[s];
    const LeafPolyline source = trace_stable_leaf(f, d.x, 0, 0.12, options.step);
    const Vec x_prime = unstable_displacement(f, d.x, d.shift, options);
    const LeafPolyline target = trace_stable_leaf(f, x_prime, 0, 0.3, options.step);
    const double sa = source.origin_arclength() - d.left;
    const double sb = source.origin_arclength() + d.right;
    const HolonomyPoint ha = unstable_holonomy(f, verdict, target, source.point_at(sa), options);
    const HolonomyPoint hb = unstable_holonomy(f, verdict, target, source.point_at(sb), options);
    const double before = affine_distance(source, sa, sb, field);
    const double after = affine_distance(target, ha.arclength, hb.arclength, field);
    report.affine[s] = before;
    report.linear[s] = after;
    report.defects[s] = std::abs(after / before - 1.0);
  });
  report.max_relative_defect = *std::max_element(report.defects.begin(), report.defects.end());
  return report;
}

IsometryReport conjugacy_leaf_isometry_check(const ConjugacyEvaluator& ce, const BundleCoboundary& psi, int samples,
                                             std::uint64_t seed, double length, double step) {
  if (samples < 1) fail(ErrorKind::InvalidArgument, "conjugacy_leaf_isometry_check needs samples");
  const TorusMap& f = ce.map();
  Rng rng(seed);
  std::vector<Vec> starts;
  std::vector<std::pair<double, double>> params;
  for (int s = 0; s < samples; ++s) {
    starts.push_back(rng.uniform_point(f.dim()));
    params.push_back({rng.uniform(), rng.uniform()});
  }
  const ScalarField field = [&](const Vec& x) { return psi(x); };
  std::vector<double> affine(samples), linear(samples);
  parallel_for(static_cast<std::size_t>(samples), [&](std::size_t s) {
    const LeafPolyline leaf = trace_stable_leaf(f, starts[s], psi.index, length, step);
    double sa = params[s].first * leaf.length();
    double sb = params[s].second * leaf.length();
    if (std::abs(sb - sa) < 0.05 * leaf.length()) sb = sa < 0.5 * leaf.length() ? sa + 0.3 * leaf.length() : sa - 0.3 * leaf.length();
    affine[s] = affine_distance(leaf, sa, sb, field);
    linear[s] = (ce.evaluate(leaf.point_at(sa)) - ce.evaluate(leaf.point_at(sb))).norm();
  });
  IsometryReport report;
  report.pairs = samples;
  report.affine = affine;
  report.linear = linear;
  double num = 0.0, den = 0.0;
  for (int s = 0; s < samples; ++s) {
    num += affine[s] * linear[s];
    den += affine[s] * affine[s];
  }
  report.scale = num / den;
  for (int s = 0; s < samples; ++s) {
    report.defects.push_back(std::abs(report.scale * affine[s] - linear[s]) / linear[s]);
    report.max_relative_defect = std::max(report.max_relative_defect, report.defects.back());
  }
  return report;
}

double leaf_conjugacy_defect(const ConjugacyEvaluator& ce, const LeafPolyline& leaf) {
  const Mat& pu = ce.map().linear().unstable_projection;
  const Vec h0 = ce.evaluate(leaf.points[leaf.origin]);
  std::vector<double> off(leaf.points.size());
  parallel_for(leaf.points.size(), [&](std::size_t j) { off[j] = (pu * (ce.evaluate(leaf.points[j]) - h0)).norm(); });
  return *std::max_element(off.begin(), off.end());
}

QuasiIsometryFit quasi_isometry_fit(const std::vector<LeafPolyline>& leaves, int pairs_per_leaf, std::uint64_t seed) {
  Rng rng(seed);
  std::vector<double> chord, arc;
  for (const auto& leaf : leaves) {
    const int n = static_cast<int>(leaf.points.size());
    if (n < 2) continue;
    for (int p = 0; p < pairs_per_leaf; ++p) {
      const int a = rng.index(n);
      const int b = rng.index(n);
      if (a == b) continue;
      chord.push_back((leaf.points[a] - leaf.points[b]).norm());
      arc.push_back(std::abs(leaf.arclength[a] - leaf.arclength[b]));
    }
  }
  QuasiIsometryFit fit;
  fit.pairs = static_cast<int>(chord.size());
  if (chord.empty()) return fit;
  double num = 0.0, den = 0.0;
  for (std::size_t j = 0; j < chord.size(); ++j) {
    num += chord[j] * arc[j];
    den += chord[j] * chord[j];
  }
  fit.a = den > 0 ? num / den : 1.0;
  for (std::size_t j = 0; j < chord.size(); ++j) fit.b = std::max(fit.b, arc[j] - fit.a * chord[j]);
  return fit;
}

}  // namespace anosov
