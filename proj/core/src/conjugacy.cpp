#include "anosov/conjugacy.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>

namespace anosov {

namespace {

std::size_t grid_cells(int d, int n) {
  std::size_t c = 1;
  for (int i = 0; i < d; ++i) c *= static_cast<std::size_t>(n);
  return c;
}

/// Orthonormal rows spanning the row space of a projection of the given rank.
Mat row_space(const Mat& projection, int rank) {
  const auto d = projection.rows();
  if (rank == 0) return Mat(0, d);
  Eigen::JacobiSVD<Mat> svd(projection.transpose(), Eigen::ComputeFullU);
  return svd.matrixU().leftCols(rank).transpose();
}

}  // namespace

// ---------------------------------------------------------------------------
// displacement

Vec DisplacementField::value(const Vec& x) const {
  if (map->is_linear()) return Vec::Zero(x.size());
  const Vec w = wrap(x);
  return map->evaluate(w) - map->linear().matrix.to_real() * w;
}

void DisplacementField::value_and_jacobian(const Vec& x, Vec& value, Mat& jacobian) const {
  const Mat a = map->linear().matrix.to_real();
  if (map->is_linear()) {
    value = Vec::Zero(x.size());
    jacobian = Mat::Zero(x.size(), x.size());
    return;
  }
  const Vec w = wrap(x);
  const JetSample jet = map->evaluate_with_jacobian(w);
  value = jet.image - a * w;
  jacobian = jet.jacobian - a;
}

DisplacementField displacement_field(const TorusMap& f, int grid_n) {
  DisplacementField phi;
  phi.map = &f;
  const int d = f.dim();
  phi.grid_n = grid_n > 0 ? grid_n : default_grid(d);
  if (f.is_linear()) return phi;
  const int n = phi.grid_n;
  const std::size_t cells = grid_cells(d, n);
  std::vector<double> sup(cells), lip(cells);
  parallel_for(cells, [&](std::size_t cell) {
    Vec x(d);
    std::size_t rest = cell;
    for (int i = d - 1; i >= 0; --i) {
      x[i] = static_cast<double>(rest % n) / n;
      rest /= n;
    }
    Vec v;
    Mat j;
    phi.value_and_jacobian(x, v, j);
    sup[cell] = v.norm();
    lip[cell] = j.jacobiSvd().singularValues()(0);
  });
  phi.sup_norm = *std::max_element(sup.begin(), sup.end());
  phi.lipschitz = *std::max_element(lip.begin(), lip.end());
  phi.certified_bound = phi.sup_norm + phi.lipschitz * 0.5 * std::sqrt(static_cast<double>(d)) / n;
  return phi;
}

// ---------------------------------------------------------------------------
// evaluator

ConjugacyEvaluator::ConjugacyEvaluator(TorusMap f, const ConjugacyOptions& options)
    : map_(std::make_shared<const TorusMap>(std::move(f))) {
  phi_ = displacement_field(*map_, options.grid_n);
  const LinearModel& lin = map_->linear();
  const int d = lin.dim();
  a_ = lin.matrix.to_real();
  ps_ = lin.stable_projection;
  pu_ = lin.unstable_projection;
  stable_rows_ = row_space(ps_, lin.stable_dim());
  unstable_rows_ = row_space(pu_, lin.unstable_dim());
  stable_norm_ = lin.stable_norm;
  unstable_conorm_ = lin.unstable_conorm;

  // series coefficients and the explicit tail sums; the sums are exact for
  // non-normal A where the one-step norm bound would be too optimistic
  const Mat a_inv = a_.inverse();
  std::vector<double> weights;
  Mat s = ps_;
  Mat u = a_inv * pu_;
  const double first = s.norm() + u.norm();
  for (int n = 0; n < 100000; ++n) {
    const double w = s.jacobiSvd().singularValues()(0) * (lin.stable_dim() > 0) +
                     u.jacobiSvd().singularValues()(0);
    weights.push_back(w);
    if (n < options.max_depth) {
      stable_terms_.push_back(s);
      unstable_terms_.push_back(u);
    }
    if (n >= options.max_depth && w < 1e-40 * std::max(first, 1e-300)) break;
    // re-projecting keeps rounding leakage out of the growing direction
    s = ps_ * (a_ * s);
    u = pu_ * (a_inv * u);
  }
  suffix_.assign(weights.size() + 1, 0.0);
  for (std::size_t n = weights.size(); n-- > 0;) suffix_[n] = suffix_[n + 1] + weights[n];

  const double disp = phi_.certified_bound;
  if (options.fixed_depth > 0) {
    depth_ = std::min(options.fixed_depth, options.max_depth);
  } else if (disp == 0.0) {
    depth_ = 1;
  } else {
    depth_ = depth_for(options.tail_target / disp);
  }
  tail_bound_ = disp * suffix_[depth_];
  u_bound_ = disp * suffix_[0];
  (void)d;
}

int ConjugacyEvaluator::depth_for(double target) const {
  const int cap = static_cast<int>(stable_terms_.size());
  for (int n = 1; n < cap; ++n)
    if (suffix_[n] <= target) return n;
  fail(ErrorKind::ResourceLimit, "series depth for the requested tail exceeds max_depth");
}

Vec ConjugacyEvaluator::u(const Vec& x) const {
  const int d = map_->dim();
  Vec acc = Vec::Zero(d);
  if (map_->is_linear()) return acc;
  // forward part along the torus orbit (phi is periodic)
  Vec z = wrap(x);
  for (int n = 0; n < depth_; ++n) {
    const Vec fz = map_->evaluate(z);
    acc += unstable_terms_[n] * (fz - a_ * z);
    z = wrap(fz);
  }
  // backward part along the unique lift backward orbit
  if (map_->linear().stable_dim() > 0) {
    Vec y = x;
    for (int n = 0; n < depth_; ++n) {
      y = invert_lift(*map_, y);
      acc -= stable_terms_[n] * phi_.value(y);
    }
  }
  return acc;
}

double ConjugacyEvaluator::conjugacy_residual(const Vec& x) const {
  return (a_ * evaluate(x) - evaluate(map_->evaluate(x))).norm();
}

Vec ConjugacyEvaluator::evaluate_inverse(const Vec& y, double tol) const {
  if (map_->is_linear()) return y;
  const int d = map_->dim();
  const int ds = map_->linear().stable_dim();
  const int du = d - ds;
  // w_j = F^j(x) - A^j y stays bounded; w_{j+1} = A w_j + phi(A^j y + w_j)
  const double scale = std::max(u_bound_, 1e-300);
  int n = 4;
  const int cap = static_cast<int>(stable_terms_.size()) - 1;
  while (n < cap && suffix_[n] * scale > 1e-3 * tol) ++n;
  const int blocks = 2 * n + 1;
  const int size = blocks * d;

  std::vector<Vec> rho(blocks);
  rho[n] = wrap(y);
  for (int j = 1; j <= n; ++j) rho[n + j] = wrap(a_ * rho[n + j - 1]);
  {
    const Eigen::PartialPivLU<Mat> lu(a_);
    Vec back = y;
    for (int j = 1; j <= n; ++j) {
      back = lu.solve(back);
      rho[n - j] = wrap(back);
    }
  }

  Vec w = Vec::Zero(size);
  std::vector<double> trace;
  bool converged = false;
  for (int it = 0; it < 40; ++it) {
    Vec res = Vec::Zero(size);
    Mat jac = Mat::Zero(size, size);
    Vec phi;
    Mat dphi;
    for (int b = 0; b + 1 < blocks; ++b) {
      const Vec wj = w.segment(b * d, d);
      phi_.value_and_jacobian(rho[b] + wj, phi, dphi);
      res.segment(b * d, d) = a_ * wj + phi - w.segment((b + 1) * d, d);
      jac.block(b * d, b * d, d, d) = a_ + dphi;
      jac.block(b * d, (b + 1) * d, d, d) = -Mat::Identity(d, d);
    }
    const int row = (blocks - 1) * d;
    if (du > 0) {
      res.segment(row, du) = unstable_rows_ * w.segment((blocks - 1) * d, d);
      jac.block(row, (blocks - 1) * d, du, d) = unstable_rows_;
    }
    if (ds > 0) {
      res.segment(row + du, ds) = stable_rows_ * w.segment(0, d);
      jac.block(row + du, 0, ds, d) = stable_rows_;
    }
    trace.push_back(res.lpNorm<Eigen::Infinity>());
    const Vec step = jac.partialPivLu().solve(res);
    w -= step;
    if (step.lpNorm<Eigen::Infinity>() <= 1e-15 * (1.0 + w.lpNorm<Eigen::Infinity>())) {
      converged = true;
      break;
    }
  }
  const Vec x = y + w.segment(n * d, d);
  const double err = (evaluate(x) - y).norm();
  if (converged && err <= tol) return x;
  std::ostringstream msg;
  msg << "inverse conjugacy: |H(x) - y| = " << err << " after Newton residuals";
  for (double t : trace) msg << " " << t;
  fail(ErrorKind::NoConvergence, msg.str());
}

// ---------------------------------------------------------------------------
// translation defects

SpecialnessDefect specialness_defect(const ConjugacyEvaluator& ce, int samples, std::uint64_t seed, double threshold) {
  if (samples < 1) fail(ErrorKind::InvalidArgument, "specialness_defect needs at least one sample");
  const int d = ce.map().dim();
  const LinearModel& lin = ce.map().linear();
  Rng rng(seed);
  std::vector<Vec> points;
  for (int i = 0; i < samples; ++i) points.push_back(rng.uniform_point(d));

  std::vector<std::vector<DefectSample>> per_point(samples);
  std::vector<double> usup(samples);
  parallel_for(static_cast<std::size_t>(samples), [&](std::size_t i) {
    const Vec& x = points[i];
    const Vec ux = ce.u(x);
    usup[i] = ux.norm();
    for (int j = 0; j < d; ++j) {
      // H(x + e) - H(x) - e written through u = H - Id
      const Vec defect = ce.u(x + Vec::Unit(d, j)) - ux;
      DefectSample s;
      s.point = x;
      s.direction = j;
      s.stable_component = (lin.stable_projection * defect).norm();
      s.unstable_component = (lin.unstable_projection * defect).norm();
      s.norm = defect.norm();
      per_point[i].push_back(s);
    }
  });

  SpecialnessDefect out;
  out.threshold = threshold;
  for (int i = 0; i < samples; ++i) {
    out.u_sup = std::max(out.u_sup, usup[i]);
    for (const auto& s : per_point[i]) {
      out.defect = std::max(out.defect, s.norm);
      out.max_stable_component = std::max(out.max_stable_component, s.stable_component);
      out.max_unstable_component = std::max(out.max_unstable_component, s.unstable_component);
      out.samples.push_back(s);
    }
  }
  out.relative = out.u_sup > 0.0 ? out.defect / out.u_sup : 0.0;
  out.special = out.relative <= threshold;
  return out;
}

double fit_log_slope(const std::vector<double>& xs, const std::vector<double>& values) {
  double sx = 0, sy = 0, sxx = 0, sxy = 0;
  int count = 0;
  for (std::size_t i = 0; i < xs.size(); ++i) {
    if (!(values[i] > 0.0)) continue;
    const double y = std::log(values[i]);
    sx += xs[i];
    sy += y;
    sxx += xs[i] * xs[i];
    sxy += xs[i] * y;
    ++count;
  }
  if (count < 2) return 0.0;
  const double denom = count * sxx - sx * sx;
  return denom == 0.0 ? 0.0 : (count * sxy - sx * sy) / denom;
}

DecayTable deep_translation_decay(const ConjugacyEvaluator& ce, int m_max, int samples, std::uint64_t seed,
                                  bool with_inverse) {
  if (m_max < 0 || samples < 1) fail(ErrorKind::InvalidArgument, "deep_translation_decay needs m_max >= 0 and samples >= 1");
  const int d = ce.map().dim();
  const LinearModel& lin = ce.map().linear();
  Rng rng(seed);
  std::vector<Vec> points;
  for (int i = 0; i < samples; ++i) points.push_back(rng.uniform_point(d));

  std::vector<IntVec> shifts;
  for (int m = 0; m <= m_max; ++m) shifts.push_back(shortest_deep_vector(lin.matrix, m));

  struct Slot {
    std::vector<double> defect, inverse, unstable;
  };
  std::vector<Slot> slots(samples);
  parallel_for(static_cast<std::size_t>(samples), [&](std::size_t i) {
    const Vec& x = points[i];
    const Vec ux = ce.u(x);
    const Vec vx = with_inverse ? Vec(ce.evaluate_inverse(x) - x) : Vec();
    Slot s;
    for (int m = 0; m <= m_max; ++m) {
      const Vec n = shifts[m].cast<double>();
      const Vec defect = ce.u(x + n) - ux;
      s.defect.push_back(defect.norm());
      s.unstable.push_back((lin.unstable_projection * defect).norm());
      s.inverse.push_back(with_inverse ? (ce.evaluate_inverse(x + n) - (x + n) - vx).norm() : 0.0);
    }
    slots[i] = std::move(s);
  });

  DecayTable table;
  table.reference_rate = std::log(lin.stable_norm);
  std::vector<double> ms, ds, is;
  for (int m = 0; m <= m_max; ++m) {
    DecayRow row;
    row.m = m;
    row.n_m = shifts[m];
    for (const auto& s : slots) {
      row.defect = std::max(row.defect, s.defect[m]);
      row.inverse_defect = std::max(row.inverse_defect, s.inverse[m]);
      row.unstable_component = std::max(row.unstable_component, s.unstable[m]);
    }
    if (m >= 1) {
      ms.push_back(m);
      ds.push_back(row.defect);
      is.push_back(row.inverse_defect);
    }
    table.rows.push_back(row);
  }
  table.fitted_rate = fit_log_slope(ms, ds);
  table.fitted_inverse_rate = fit_log_slope(ms, is);
  return table;
}

}  // namespace anosov
