#include "anosov/bundles_branches.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

namespace anosov {

std::string BranchCode::to_string() const {
  std::string s;
  for (int c : choices) s += std::to_string(c) + (c > 9 ? "." : "");
  return s;
}

namespace {

/// Flag pulled back along the forward orbit; returns the flag at x and the R-diagonal log sums.
Mat pull_back_flag(const TorusMap& f, const Vec& x, int depth, Vec& log_growth) {
  const int d = f.dim();
  const int k = f.linear().stable_dim();
  std::vector<Mat> jacs;
  Vec z = wrap(x);
  for (int j = 0; j < depth; ++j) {
    const JetSample jet = f.evaluate_with_jacobian(z);
    jacs.push_back(jet.jacobian);
    z = wrap(jet.image);
  }
  Mat q = f.linear().stable_basis;
  log_growth = Vec::Zero(k);
  for (int j = depth - 1; j >= 0; --j) {
    const Mat v = jacs[j].partialPivLu().solve(q);
    Eigen::HouseholderQR<Mat> qr(v);
    q = qr.householderQ() * Mat::Identity(d, k);
    const Mat r = qr.matrixQR().topRows(k).triangularView<Eigen::Upper>();
    for (int i = 0; i < k; ++i) {
      if (r(i, i) < 0) q.col(i) = -q.col(i);
      log_growth[i] += std::log(std::abs(r(i, i)));
    }
  }
  return q;
}

double flag_angle(const Mat& a, const Mat& b) {
  double worst = 0.0;
  for (Eigen::Index i = 1; i <= a.cols(); ++i) worst = std::max(worst, principal_angle(a.leftCols(i), b.leftCols(i)));
  return worst;
}

}  // namespace

StableSplitting stable_splitting_at(const TorusMap& f, const Vec& x, int depth, const SplittingOptions& options) {
  if (depth < 1) fail(ErrorKind::InvalidArgument, "splitting depth must be positive");
  const int k = f.linear().stable_dim();
  StableSplitting s;
  s.point = wrap(x);
  s.depth = depth;
  if (k == 0) {
    s.flag = Mat(f.dim(), 0);
    return s;
  }
  Vec growth, growth2;
  s.flag = pull_back_flag(f, x, depth, growth);
  const Mat flag2 = pull_back_flag(f, x, 2 * depth, growth2);
  s.convergence_gap = flag_angle(s.flag, flag2);
  // inverse growth log|R_ii| / N is minus the forward contraction rate of level i
  for (int i = 0; i < k; ++i) s.finite_time_rates.push_back(-growth2[i] / (2 * depth));
  for (int i = 0; i + 1 < k; ++i) {
    if (s.finite_time_rates[i + 1] - s.finite_time_rates[i] < options.min_rate_gap) {
      std::ostringstream msg;
      msg << "stable rates " << s.finite_time_rates[i] << " and " << s.finite_time_rates[i + 1]
          << " are not separated at depth " << depth;
      fail(ErrorKind::GapTooSmall, msg.str());
    }
  }
  return s;
}

Mat stable_flag(const TorusMap& f, const Vec& x, int depth) {
  Vec growth;
  return pull_back_flag(f, x, depth, growth);
}

Vec stable_line_on_lift(const TorusMap& f, const Vec& x, int i, int depth) {
  const LinearModel& lin = f.linear();
  const int d = f.dim();
  const int k = lin.stable_dim();
  if (i < 0 || i >= k) fail(ErrorKind::InvalidArgument, "stable index out of range");
  const Mat flag = stable_flag(f, x, depth);
  if (i == 0) return flag.col(0);
  if (!lin.real_simple_stable) fail(ErrorKind::GapTooSmall, "weak stable lines need distinct real stable eigenvalues");
  // weak directions need the past: push span(L^s_i..L^s_k, L^u) forward along F^{-j}(x)
  std::vector<Vec> past{x};
  for (int j = 0; j < depth; ++j) past.push_back(invert_lift(f, past.back()));
  Mat w(d, (k - i) + lin.unstable_dim());
  w << lin.stable_lines.rightCols(k - i), lin.unstable_basis;
  w = orthonormalize(w);
  for (int j = depth; j >= 1; --j) w = orthonormalize(f.jacobian(past[j]) * w);
  const Mat q = flag.leftCols(i + 1);
  const Mat outside = q - w * (w.transpose() * q);
  Eigen::JacobiSVD<Mat> svd(outside, Eigen::ComputeFullV);
  const Vec a = svd.matrixV().col(i);
  return (q * a).normalized();
}

std::vector<Vec> backward_orbit(const TorusMap& f, const Vec& x, const BranchCode& code) {
  const LatticeCoset cosets = coset_representatives(f.linear().matrix);
  std::vector<Vec> orbit{wrap(x)};
  for (int c : code.choices) {
    if (c < 0 || static_cast<std::size_t>(c) >= cosets.size()) {
      fail(ErrorKind::InvalidArgument, "branch code index exceeds the degree");
    }
    try {
      orbit.push_back(preimage_branch(f, orbit.back(), cosets.representatives[c]));
    } catch (const Error& e) {
      if (e.kind() == ErrorKind::NoConvergence) fail(ErrorKind::IncompleteEnumeration, e.what());
      throw;
    }
  }
  return orbit;
}

Mat unstable_direction_along_branch(const TorusMap& f, const Vec& x, const BranchCode& code) {
  const std::vector<Vec> orbit = backward_orbit(f, x, code);
  Mat q = f.linear().unstable_basis;
  for (std::size_t j = orbit.size() - 1; j >= 1; --j) {
    q = orthonormalize(f.jacobian(orbit[j]) * q);
  }
  return q;
}

double branch_spread(const TorusMap& f, const Vec& x, const std::vector<BranchCode>& codes) {
  if (codes.size() < 2) fail(ErrorKind::InvalidArgument, "branch_spread needs at least two codes");
  std::vector<Mat> dirs;
  for (const auto& c : codes) dirs.push_back(unstable_direction_along_branch(f, x, c));
  double worst = 0.0;
  for (std::size_t a = 0; a < dirs.size(); ++a)
    for (std::size_t b = a + 1; b < dirs.size(); ++b) worst = std::max(worst, principal_angle(dirs[a], dirs[b]));
  return worst;
}

std::vector<BranchCode> sample_codes(const TorusMap& f, int count, int depth, Rng& rng) {
  const int deg = static_cast<int>(f.degree());
  std::vector<BranchCode> codes;
  codes.push_back(BranchCode::constant(depth, 0));
  if (deg > 1 && count > 1) codes.push_back(BranchCode::constant(depth, deg - 1));
  while (static_cast<int>(codes.size()) < count) {
    BranchCode c;
    for (int j = 0; j < depth; ++j) c.choices.push_back(rng.index(deg));
    codes.push_back(c);
  }
  codes.resize(std::min<std::size_t>(codes.size(), static_cast<std::size_t>(std::max(count, 1))));
  return codes;
}

IntegrabilityVerdict integrability_verdict(const TorusMap& f, int samples, int codes_per_point, int depth, double tol,
                                           std::uint64_t seed) {
  if (samples < 1 || codes_per_point < 2 || depth < 1) {
    fail(ErrorKind::InvalidArgument, "integrability_verdict needs samples >= 1, codes >= 2, depth >= 1");
  }
  IntegrabilityVerdict v;
  v.tol = tol;
  Rng rng(seed);
  for (int i = 0; i < samples; ++i) {
    v.points.push_back(rng.uniform_point(f.dim()));
    v.codes.push_back(sample_codes(f, codes_per_point, depth, rng));
  }
  std::vector<std::vector<SpreadRow>> rows(samples);
  parallel_for(static_cast<std::size_t>(samples), [&](std::size_t i) {
    std::vector<Mat> dirs;
    for (const auto& c : v.codes[i]) dirs.push_back(unstable_direction_along_branch(f, v.points[i], c));
    for (std::size_t a = 0; a < dirs.size(); ++a)
      for (std::size_t b = a + 1; b < dirs.size(); ++b)
        rows[i].push_back({static_cast<int>(i), static_cast<int>(a), static_cast<int>(b), principal_angle(dirs[a], dirs[b])});
  });
  const SpreadRow* worst = nullptr;
  for (const auto& per_point : rows) {
    for (const auto& r : per_point) {
      v.distribution.push_back(r);
      if (!worst || r.angle > worst->angle) worst = &r;
    }
  }
  if (worst) {
    v.max_spread = worst->angle;
    v.witness_point = v.points[worst->point_index];
    v.witness_a = v.codes[worst->point_index][worst->code_a];
    v.witness_b = v.codes[worst->point_index][worst->code_b];
  }
  v.integrable = v.max_spread <= tol;
  return v;
}

}  // namespace anosov
