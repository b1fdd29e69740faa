#include "anosov/lattice_linear.hpp"

#include <algorithm>
#include <cmath>
#include <complex>
#include <limits>
#include <numeric>
#include <sstream>

namespace anosov {

namespace {

using i128 = __int128;

std::int64_t narrow(i128 v, const char* where) {
  if (v > std::numeric_limits<std::int64_t>::max() || v < std::numeric_limits<std::int64_t>::min()) {
    fail(ErrorKind::ResourceLimit, std::string("int64 overflow in ") + where);
  }
  return static_cast<std::int64_t>(v);
}

i128 checked_mul(i128 a, i128 b) {
  static const i128 limit = static_cast<i128>(1) << 120;
  if (a != 0 && b != 0) {
    const i128 aa = a < 0 ? -a : a;
    const i128 bb = b < 0 ? -b : b;
    if (aa > limit / bb) fail(ErrorKind::ResourceLimit, "int128 overflow");
  }
  return a * b;
}

std::int64_t floor_div(std::int64_t a, std::int64_t b) {
  std::int64_t q = a / b;
  if ((a % b != 0) && ((a < 0) != (b < 0))) --q;
  return q;
}

std::int64_t positive_mod(std::int64_t a, std::int64_t m) {
  std::int64_t r = a % m;
  return r < 0 ? r + m : r;
}

std::int64_t ext_gcd(std::int64_t a, std::int64_t b, std::int64_t& x, std::int64_t& y) {
  std::int64_t old_r = a, r = b, old_s = 1, s = 0, old_t = 0, t = 1;
  while (r != 0) {
    const std::int64_t q = old_r / r;
    std::int64_t tmp = old_r - q * r; old_r = r; r = tmp;
    tmp = old_s - q * s; old_s = s; s = tmp;
    tmp = old_t - q * t; old_t = t; t = tmp;
  }
  if (old_r < 0) { old_r = -old_r; old_s = -old_s; old_t = -old_t; }
  x = old_s;
  y = old_t;
  return old_r;
}

i128 eval_poly(const std::vector<std::int64_t>& monic, i128 x) {
  i128 acc = 0;
  for (std::int64_t c : monic) acc = checked_mul(acc, x) + c;
  return acc;
}

std::vector<std::int64_t> positive_divisors(std::int64_t n) {
  n = n < 0 ? -n : n;
  if (n > 1'000'000'000'000LL) fail(ErrorKind::ResourceLimit, "constant term too large for divisor search");
  std::vector<std::int64_t> out;
  for (std::int64_t i = 1; i * i <= n; ++i) {
    if (n % i == 0) {
      out.push_back(i);
      if (i != n / i) out.push_back(n / i);
    }
  }
  std::sort(out.begin(), out.end());
  return out;
}

bool is_perfect_square(std::int64_t n, std::int64_t& root) {
  if (n < 0) return false;
  auto r = static_cast<std::int64_t>(std::llround(std::sqrt(static_cast<long double>(n))));
  while (r * r > n) --r;
  while ((r + 1) * (r + 1) <= n) ++r;
  root = r;
  return r * r == n;
}

/// Newton polish of a real root of the characteristic polynomial.
double polish_root(const std::vector<std::int64_t>& monic, double guess) {
  long double x = guess;
  for (int it = 0; it < 50; ++it) {
    long double p = 0, dp = 0;
    for (std::int64_t c : monic) {
      dp = dp * x + p;
      p = p * x + static_cast<long double>(c);
    }
    if (dp == 0) break;
    const long double step = p / dp;
    x -= step;
    if (std::fabs(step) <= 1e-19L * std::max<long double>(1, std::fabs(x))) break;
  }
  return static_cast<double>(x);
}

/// Sign function of a matrix with no eigenvalues on the imaginary axis.
Mat matrix_sign(const Mat& c) {
  const auto d = c.rows();
  Mat s = c;
  for (int it = 0; it < 200; ++it) {
    Eigen::PartialPivLU<Mat> lu(s);
    const double det = std::abs(lu.determinant());
    const double gamma = (det > 0 && it < 8) ? std::pow(det, -1.0 / static_cast<double>(d)) : 1.0;
    const Mat next = 0.5 * (gamma * s + lu.inverse() / gamma);
    const double change = (next - s).norm();
    s = next;
    if (change <= 1e-14 * s.norm()) break;
  }
  return s;
}

}  // namespace

// ---------------------------------------------------------------------------
// IntMatrix

IntMatrix::IntMatrix(IntMat entries) : entries_(std::move(entries)) {
  if (entries_.rows() != entries_.cols() || entries_.rows() == 0) {
    fail(ErrorKind::InvalidArgument, "integer matrix must be square and nonempty");
  }
  det_ = exact_determinant(entries_);
  if (det_ == 0) fail(ErrorKind::InvalidArgument, "integer matrix is singular");
}

IntMatrix IntMatrix::from_rows(std::initializer_list<std::initializer_list<std::int64_t>> rows) {
  std::vector<std::vector<std::int64_t>> v;
  for (const auto& r : rows) v.emplace_back(r);
  return from_rows(v);
}

IntMatrix IntMatrix::from_rows(const std::vector<std::vector<std::int64_t>>& rows) {
  const auto n = static_cast<Eigen::Index>(rows.size());
  IntMat m(n, n);
  for (Eigen::Index i = 0; i < n; ++i) {
    if (static_cast<Eigen::Index>(rows[i].size()) != n) {
      fail(ErrorKind::InvalidArgument, "integer matrix rows must have equal length d");
    }
    for (Eigen::Index j = 0; j < n; ++j) m(i, j) = rows[i][j];
  }
  return IntMatrix(std::move(m));
}

IntMatrix IntMatrix::identity(int dim) { return IntMatrix(IntMat::Identity(dim, dim)); }

IntMatrix IntMatrix::diagonal(const std::vector<std::int64_t>& diag) {
  const auto n = static_cast<Eigen::Index>(diag.size());
  IntMat m = IntMat::Zero(n, n);
  for (Eigen::Index i = 0; i < n; ++i) m(i, i) = diag[i];
  return IntMatrix(std::move(m));
}

IntMatrix IntMatrix::companion(const std::vector<std::int64_t>& monic) {
  // x^d + a_{d-1} x^{d-1} + ... + a_0, coefficients leading first
  const auto d = static_cast<Eigen::Index>(monic.size()) - 1;
  if (d < 1 || monic[0] != 1) fail(ErrorKind::InvalidArgument, "companion needs a monic polynomial");
  IntMat m = IntMat::Zero(d, d);
  for (Eigen::Index i = 1; i < d; ++i) m(i, i - 1) = 1;
  for (Eigen::Index i = 0; i < d; ++i) m(i, d - 1) = -monic[d - i];
  return IntMatrix(std::move(m));
}

IntMatrix IntMatrix::power(int n) const {
  if (n < 0) fail(ErrorKind::InvalidArgument, "negative integer matrix power");
  IntMat result = IntMat::Identity(dim(), dim());
  for (int i = 0; i < n; ++i) result = checked_product(entries_, result);
  return IntMatrix(std::move(result));
}

IntMatrix IntMatrix::minus_identity() const {
  return IntMatrix(IntMat(entries_ - IntMat::Identity(dim(), dim())));
}

// ---------------------------------------------------------------------------
// exact kernels

std::int64_t exact_determinant(const IntMat& m) {
  const auto n = m.rows();
  std::vector<std::vector<i128>> a(n, std::vector<i128>(n));
  for (Eigen::Index i = 0; i < n; ++i)
    for (Eigen::Index j = 0; j < n; ++j) a[i][j] = m(i, j);
  i128 sign = 1, prev = 1;
  for (Eigen::Index k = 0; k < n - 1; ++k) {
    if (a[k][k] == 0) {
      Eigen::Index swap = -1;
      for (Eigen::Index r = k + 1; r < n; ++r)
        if (a[r][k] != 0) { swap = r; break; }
      if (swap < 0) return 0;
      std::swap(a[k], a[swap]);
      sign = -sign;
    }
    for (Eigen::Index i = k + 1; i < n; ++i) {
      for (Eigen::Index j = k + 1; j < n; ++j) {
        a[i][j] = (checked_mul(a[i][j], a[k][k]) - checked_mul(a[i][k], a[k][j])) / prev;
      }
    }
    prev = a[k][k];
  }
  return narrow(sign * a[n - 1][n - 1], "determinant");
}

IntMat exact_adjugate(const IntMat& m) {
  const auto n = m.rows();
  IntMat adj(n, n);
  if (n == 1) {
    adj(0, 0) = 1;
    return adj;
  }
  for (Eigen::Index i = 0; i < n; ++i) {
    for (Eigen::Index j = 0; j < n; ++j) {
      IntMat minor(n - 1, n - 1);
      for (Eigen::Index r = 0, rr = 0; r < n; ++r) {
        if (r == j) continue;
        for (Eigen::Index c = 0, cc = 0; c < n; ++c) {
          if (c == i) continue;
          minor(rr, cc++) = m(r, c);
        }
        ++rr;
      }
      const std::int64_t cof = exact_determinant(minor);
      adj(i, j) = ((i + j) % 2 == 0) ? cof : -cof;
    }
  }
  return adj;
}

IntMat checked_product(const IntMat& a, const IntMat& b) {
  IntMat out(a.rows(), b.cols());
  for (Eigen::Index i = 0; i < a.rows(); ++i) {
    for (Eigen::Index j = 0; j < b.cols(); ++j) {
      i128 acc = 0;
      for (Eigen::Index k = 0; k < a.cols(); ++k) acc += checked_mul(a(i, k), b(k, j));
      out(i, j) = narrow(acc, "matrix product");
    }
  }
  return out;
}

IntVec checked_product(const IntMat& a, const IntVec& v) {
  IntVec out(a.rows());
  for (Eigen::Index i = 0; i < a.rows(); ++i) {
    i128 acc = 0;
    for (Eigen::Index k = 0; k < a.cols(); ++k) acc += checked_mul(a(i, k), v[k]);
    out[i] = narrow(acc, "matrix-vector product");
  }
  return out;
}

IntMat hermite_lower(const IntMat& m) {
  const auto n = m.rows();
  IntMat h = m;
  auto column_combine = [&](Eigen::Index i, Eigen::Index j, std::int64_t a11, std::int64_t a12,
                            std::int64_t a21, std::int64_t a22) {
    // (col_i, col_j) <- (a11 col_i + a12 col_j, a21 col_i + a22 col_j)
    for (Eigen::Index r = 0; r < n; ++r) {
      const i128 ci = h(r, i), cj = h(r, j);
      h(r, i) = narrow(checked_mul(a11, ci) + checked_mul(a12, cj), "hermite form");
      h(r, j) = narrow(checked_mul(a21, ci) + checked_mul(a22, cj), "hermite form");
    }
  };
  for (Eigen::Index i = 0; i < n; ++i) {
    for (Eigen::Index j = i + 1; j < n; ++j) {
      const std::int64_t a = h(i, i), b = h(i, j);
      if (b == 0) continue;
      std::int64_t x = 0, y = 0;
      const std::int64_t g = ext_gcd(a, b, x, y);
      column_combine(i, j, x, y, -b / g, a / g);
    }
    if (h(i, i) == 0) fail(ErrorKind::InvalidArgument, "hermite form of a singular matrix");
    if (h(i, i) < 0) h.col(i) = -h.col(i);
    for (Eigen::Index j = 0; j < i; ++j) {
      const std::int64_t q = floor_div(h(i, j), h(i, i));
      if (q != 0) {
        for (Eigen::Index r = 0; r < n; ++r) {
          h(r, j) = narrow(static_cast<i128>(h(r, j)) - checked_mul(q, h(r, i)), "hermite reduction");
        }
      }
    }
  }
  return h;
}

bool in_image_lattice(const IntMat& m, const IntVec& v) {
  const std::int64_t det = exact_determinant(m);
  if (det == 0) fail(ErrorKind::InvalidArgument, "lattice membership for a singular matrix");
  const IntVec num = checked_product(exact_adjugate(m), v);
  for (Eigen::Index i = 0; i < num.size(); ++i)
    if (num[i] % det != 0) return false;
  return true;
}

std::vector<std::int64_t> characteristic_polynomial(const IntMat& a) {
  // Faddeev-LeVerrier; every division below is exact over Z
  const auto d = a.rows();
  std::vector<std::int64_t> c(d + 1, 0);
  c[0] = 1;
  IntMat mk = IntMat::Zero(d, d);
  for (Eigen::Index k = 1; k <= d; ++k) {
    IntMat next = checked_product(a, mk);
    for (Eigen::Index i = 0; i < d; ++i) next(i, i) += c[k - 1];
    mk = next;
    const IntMat amk = checked_product(a, mk);
    i128 trace = 0;
    for (Eigen::Index i = 0; i < d; ++i) trace += amk(i, i);
    c[k] = narrow(-trace / k, "characteristic polynomial");
  }
  return c;
}

bool irreducible_over_q(const std::vector<std::int64_t>& monic) {
  const int deg = static_cast<int>(monic.size()) - 1;
  if (deg < 1 || monic[0] != 1) fail(ErrorKind::InvalidArgument, "expected a monic polynomial");
  if (deg == 1) return true;
  if (deg > 4) fail(ErrorKind::IrreducibilityUndecided, "exact factor search only implemented for degree <= 4");
  const std::int64_t c0 = monic.back();
  if (c0 == 0) return false;
  // rational roots of a monic integer polynomial are integer divisors of c0
  for (std::int64_t r : positive_divisors(c0)) {
    if (eval_poly(monic, r) == 0 || eval_poly(monic, -r) == 0) return false;
  }
  if (deg < 4) return true;
  // x^4 + a3 x^3 + a2 x^2 + a1 x + a0 = (x^2 + a x + b)(x^2 + c x + e)
  const std::int64_t a3 = monic[1], a2 = monic[2], a1 = monic[3], a0 = monic[4];
  for (std::int64_t bp : positive_divisors(a0)) {
    for (std::int64_t b : {bp, -bp}) {
      const std::int64_t e = a0 / b;
      const std::int64_t disc = a3 * a3 - 4 * (a2 - b - e);
      std::int64_t root = 0;
      if (!is_perfect_square(disc, root)) continue;
      for (std::int64_t num : {a3 + root, a3 - root}) {
        if (num % 2 != 0) continue;
        const std::int64_t a = num / 2;
        const std::int64_t c = a3 - a;
        if (a * e + b * c == a1) return false;
      }
    }
  }
  return true;
}

// ---------------------------------------------------------------------------
// analyze_matrix

std::vector<double> LinearModel::stable_exponents() const {
  std::vector<double> out;
  for (double mu : stable_eigenvalues) out.push_back(std::log(std::abs(mu)));
  return out;
}

LinearModel analyze_matrix(const IntMatrix& a, const AnalyzeOptions& options) {
  const double tol = options.tol;
  LinearModel model;
  model.matrix = a;
  const int d = a.dim();
  model.degree = std::abs(a.determinant());
  model.char_poly = characteristic_polynomial(a.entries());
  if (d <= 4) {
    model.irreducible = irreducible_over_q(model.char_poly);
  } else if (options.allow_undecided_irreducibility) {
    model.irreducible = false;
    model.irreducibility_decided = false;
  } else {
    fail(ErrorKind::IrreducibilityUndecided, "dimension " + std::to_string(d) + " exceeds the exact factor search");
  }

  const Mat A = a.to_real();
  Eigen::EigenSolver<Mat> es(A, false);
  std::vector<std::complex<double>> eig(es.eigenvalues().data(), es.eigenvalues().data() + d);
  for (const auto& mu : eig) {
    if (std::abs(std::abs(mu) - 1.0) <= tol) {
      std::ostringstream msg;
      msg << "eigenvalue " << mu << " has modulus within " << tol << " of 1";
      fail(ErrorKind::NotHyperbolic, msg.str());
    }
  }
  model.hyperbolic = true;

  std::vector<std::complex<double>> stable;
  for (const auto& mu : eig)
    if (std::abs(mu) < 1.0) stable.push_back(mu);
  std::sort(stable.begin(), stable.end(),
            [](const auto& x, const auto& y) { return std::abs(x) < std::abs(y); });
  const int k = static_cast<int>(stable.size());

  bool all_real = true;
  for (const auto& mu : stable)
    if (std::abs(mu.imag()) > tol * std::max(1.0, std::abs(mu))) all_real = false;
  bool distinct = true;
  for (int i = 0; i + 1 < k; ++i)
    if (std::abs(stable[i + 1]) - std::abs(stable[i]) <= 10.0 * tol) distinct = false;
  model.real_simple_stable = k >= 1 && all_real && distinct;

  for (const auto& mu : stable) {
    model.stable_eigenvalues.push_back(model.real_simple_stable ? polish_root(model.char_poly, mu.real())
                                                                : std::abs(mu));
  }

  // spectral projections through the sign function of the Cayley transform,
  // which sends the open unit disk to the open left half plane
  const Mat I = Mat::Identity(d, d);
  const Mat cayley = (A - I).partialPivLu().solve(A + I);
  const Mat sign = matrix_sign(cayley);
  model.stable_projection = 0.5 * (I - sign);
  model.unstable_projection = 0.5 * (I + sign);

  auto range_basis = [&](const Mat& p, int rank) -> Mat {
    if (rank == 0) return Mat(d, 0);
    Eigen::ColPivHouseholderQR<Mat> qr(p);
    Mat q = qr.householderQ() * Mat::Identity(d, rank);
    return q;
  };

  if (model.real_simple_stable) {
    model.stable_lines.resize(d, k);
    for (int i = 0; i < k; ++i) {
      const double mu = model.stable_eigenvalues[i];
      Eigen::JacobiSVD<Mat> svd(A - mu * I, Eigen::ComputeFullV);
      Vec v = svd.matrixV().col(d - 1);
      Eigen::Index arg = 0;
      v.cwiseAbs().maxCoeff(&arg);
      if (v[arg] < 0) v = -v;
      if ((A * v - mu * v).norm() > tol) {
        fail(ErrorKind::NoConvergence, "stable eigenvector residual exceeds tolerance");
      }
      model.stable_lines.col(i) = v;
    }
    model.stable_basis = orthonormalize(model.stable_lines);
  } else {
    model.stable_lines = Mat(d, 0);
    model.stable_basis = range_basis(model.stable_projection, k);
  }
  model.unstable_basis = range_basis(model.unstable_projection, d - k);

  if (k > 0) {
    model.stable_norm = (A * model.stable_basis).jacobiSvd().singularValues()(0);
  }
  if (d - k > 0) {
    const Vec sv = (A * model.unstable_basis).jacobiSvd().singularValues();
    model.unstable_conorm = sv(sv.size() - 1);
  }
  return model;
}

// ---------------------------------------------------------------------------
// cosets and preimage lattices

std::size_t LatticeCoset::index_of(const IntVec& v) const {
  const auto n = hermite.rows();
  IntVec r = v;
  for (Eigen::Index i = 0; i < n; ++i) {
    const std::int64_t q = floor_div(r[i], hermite(i, i));
    if (q != 0) r -= q * hermite.col(i);
  }
  std::size_t index = 0;
  for (Eigen::Index i = 0; i < n; ++i) index = index * static_cast<std::size_t>(hermite(i, i)) + r[i];
  return index;
}

LatticeCoset coset_representatives(const IntMat& m) {
  LatticeCoset out;
  out.hermite = hermite_lower(m);
  const auto n = m.rows();
  i128 count = 1;
  for (Eigen::Index i = 0; i < n; ++i) count *= out.hermite(i, i);
  if (count > (1 << 26)) fail(ErrorKind::ResourceLimit, "too many coset representatives");
  IntVec r = IntVec::Zero(n);
  for (i128 c = 0; c < count; ++c) {
    out.representatives.push_back(r);
    for (Eigen::Index i = n - 1; i >= 0; --i) {
      if (++r[i] < out.hermite(i, i)) break;
      r[i] = 0;
    }
  }
  return out;
}

LatticeCoset coset_representatives(const IntMatrix& a) { return coset_representatives(a.entries()); }

std::vector<Vec> preimage_lattice_points(const IntMatrix& a, int k, const CoveringOptions& options) {
  if (k < 0) fail(ErrorKind::InvalidArgument, "negative preimage depth");
  const int d = a.dim();
  const i128 count = [&] {
    i128 c = 1;
    for (int i = 0; i < k; ++i) {
      c = checked_mul(c, std::abs(a.determinant()));
      if (c > options.enumeration_cap) fail(ErrorKind::ResourceLimit, "|det A|^k exceeds the enumeration cap");
    }
    return c;
  }();
  (void)count;
  const LatticeCoset base = coset_representatives(a);
  // representatives of Z^d / A^k Z^d: r_0 + A r_1 + ... + A^{k-1} r_{k-1}
  std::vector<IntVec> reps{IntVec::Zero(d)};
  IntMat power = IntMat::Identity(d, d);
  for (int level = 0; level < k; ++level) {
    std::vector<IntVec> next;
    next.reserve(reps.size() * base.size());
    for (const auto& s : reps)
      for (const auto& r : base.representatives) next.push_back(s + checked_product(power, r));
    reps = std::move(next);
    power = checked_product(a.entries(), power);
  }
  const IntMat adj = exact_adjugate(power);
  const std::int64_t det = exact_determinant(power);
  const std::int64_t den = std::abs(det);
  std::vector<Vec> points;
  points.reserve(reps.size());
  for (const auto& r : reps) {
    IntVec num = checked_product(adj, r);
    if (det < 0) num = -num;
    Vec p(d);
    for (int i = 0; i < d; ++i) p[i] = static_cast<double>(positive_mod(num[i], den)) / static_cast<double>(den);
    points.push_back(p);
  }
  return points;
}

double preimage_covering_radius(const IntMatrix& a, int k, int grid_n, const CoveringOptions& options) {
  if (grid_n < 32) fail(ErrorKind::InvalidArgument, "grid_n must be at least 32");
  const int d = a.dim();
  const std::vector<Vec> points = preimage_lattice_points(a, k, options);
  std::size_t cells = 1;
  for (int i = 0; i < d; ++i) cells *= static_cast<std::size_t>(grid_n);
  std::vector<double> best(cells, 0.0);
  parallel_for(cells, [&](std::size_t cell) {
    Vec g(d);
    std::size_t rest = cell;
    for (int i = d - 1; i >= 0; --i) {
      g[i] = static_cast<double>(rest % grid_n) / grid_n;
      rest /= grid_n;
    }
    double nearest = std::numeric_limits<double>::infinity();
    for (const auto& p : points) {
      double s = 0.0;
      for (int i = 0; i < d; ++i) {
        double delta = g[i] - p[i];
        delta -= std::round(delta);
        s += delta * delta;
      }
      nearest = std::min(nearest, s);
    }
    best[cell] = std::sqrt(nearest);
  });
  return *std::max_element(best.begin(), best.end());
}

std::vector<IntVec> deep_lattice_vectors(const IntMatrix& a, int m, double bound) {
  if (m < 0) fail(ErrorKind::InvalidArgument, "negative depth");
  const int d = a.dim();
  const IntMatrix am = a.power(m);
  const auto radius = static_cast<std::int64_t>(std::floor(bound));
  std::vector<IntVec> out;
  IntVec n = IntVec::Constant(d, -radius);
  while (true) {
    const double norm = n.cast<double>().norm();
    if (norm <= bound && in_image_lattice(am.entries(), n)) out.push_back(n);
    int j = 0;
    while (j < d && n[j] == radius) n[j++] = -radius;
    if (j == d) break;
    ++n[j];
  }
  // exact confirmation that every A^{-i} n is integral
  for (const auto& v : out) {
    for (int i = 1; i <= m; ++i) {
      if (!in_image_lattice(a.power(i).entries(), v)) {
        fail(ErrorKind::InvalidArgument, "deep lattice vector failed the integrality check");
      }
    }
  }
  std::sort(out.begin(), out.end(), [](const IntVec& x, const IntVec& y) {
    const auto nx = x.squaredNorm(), ny = y.squaredNorm();
    if (nx != ny) return nx < ny;
    return std::lexicographical_compare(y.data(), y.data() + y.size(), x.data(), x.data() + x.size());
  });
  return out;
}

IntVec shortest_deep_vector(const IntMatrix& a, int m) {
  const int d = a.dim();
  double bound = std::max(1.0, std::pow(static_cast<double>(std::abs(a.determinant())), static_cast<double>(m) / d));
  for (int attempt = 0; attempt < 20; ++attempt, bound *= 2.0) {
    for (const auto& v : deep_lattice_vectors(a, m, bound)) {
      if (!v.isZero()) return v;
    }
  }
  fail(ErrorKind::ResourceLimit, "no short vector found in A^m Z^d");
}

}  // namespace anosov
