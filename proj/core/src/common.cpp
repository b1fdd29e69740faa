#include "anosov/common.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <exception>
#include <mutex>
#include <thread>

namespace anosov {

const char* to_string(ErrorKind kind) {
  switch (kind) {
    case ErrorKind::InvalidArgument: return "InvalidArgument";
    case ErrorKind::NotHyperbolic: return "NotHyperbolic";
    case ErrorKind::IrreducibilityUndecided: return "IrreducibilityUndecided";
    case ErrorKind::ResourceLimit: return "ResourceLimit";
    case ErrorKind::NoConvergence: return "NoConvergence";
    case ErrorKind::NotLocalDiffeo: return "NotLocalDiffeo";
    case ErrorKind::IncompleteEnumeration: return "IncompleteEnumeration";
    case ErrorKind::CertificationFailed: return "CertificationFailed";
    case ErrorKind::UnknownFixture: return "UnknownFixture";
    case ErrorKind::SingularJacobian: return "SingularJacobian";
    case ErrorKind::GapTooSmall: return "GapTooSmall";
    case ErrorKind::StepRejected: return "StepRejected";
    case ErrorKind::ObstructionNonzero: return "ObstructionNonzero";
    case ErrorKind::RefusedNonIntegrable: return "RefusedNonIntegrable";
    case ErrorKind::NoIntersection: return "NoIntersection";
    case ErrorKind::ConfigInvalid: return "ConfigInvalid";
  }
  return "Unknown";
}

Error::Error(ErrorKind kind, const std::string& what)
    : std::runtime_error(std::string(to_string(kind)) + ": " + what), kind_(kind) {}

void fail(ErrorKind kind, const std::string& what) { throw Error(kind, what); }

Vec wrap(const Vec& x) {
  Vec y(x.size());
  for (Eigen::Index i = 0; i < x.size(); ++i) {
    double v = x[i] - std::floor(x[i]);
    // floor can return 1.0 for tiny negative inputs after rounding
    if (v >= 1.0) v -= 1.0;
    y[i] = v;
  }
  return y;
}

Vec torus_delta(const Vec& a, const Vec& b) {
  Vec d = b - a;
  for (Eigen::Index i = 0; i < d.size(); ++i) d[i] -= std::round(d[i]);
  return d;
}

double torus_distance(const Vec& a, const Vec& b) {
  // the minimum over integer translates separates coordinatewise
  return torus_delta(a, b).norm();
}

double principal_angle(const Mat& qa, const Mat& qb) {
  // sine of the largest angle = norm of the part of qb outside span(qa)
  const Mat residual = qb - qa * (qa.transpose() * qb);
  const double s = residual.cols() == 0 ? 0.0 : residual.jacobiSvd().singularValues()(0);
  return std::asin(std::min(1.0, s));
}

Mat orthonormalize(const Mat& columns) {
  Eigen::HouseholderQR<Mat> qr(columns);
  Mat q = qr.householderQ() * Mat::Identity(columns.rows(), columns.cols());
  // fix signs so that the basis is a continuous function of the input
  const Mat r = qr.matrixQR().topRows(columns.cols()).triangularView<Eigen::Upper>();
  for (Eigen::Index j = 0; j < q.cols(); ++j) {
    if (r(j, j) < 0) q.col(j) = -q.col(j);
  }
  return q;
}

double Rng::uniform() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }

Vec Rng::uniform_point(int dim) {
  Vec x(dim);
  for (int i = 0; i < dim; ++i) x[i] = uniform();
  return x;
}

int Rng::index(int upper) {
  if (upper <= 0) fail(ErrorKind::InvalidArgument, "Rng::index with empty range");
  return static_cast<int>(engine_() % static_cast<std::uint64_t>(upper));
}

namespace {
std::atomic<int> g_threads{1};
}

void set_thread_count(int threads) {
  if (threads <= 0) threads = static_cast<int>(std::thread::hardware_concurrency());
  g_threads.store(std::max(1, threads));
}
int thread_count() { return g_threads.load(); }

namespace {
thread_local bool inside_parallel_region = false;
}

void parallel_for(std::size_t count, const std::function<void(std::size_t)>& body) {
  const std::size_t workers = std::min<std::size_t>(static_cast<std::size_t>(thread_count()), count);
  if (workers <= 1 || inside_parallel_region) {
    for (std::size_t i = 0; i < count; ++i) body(i);
    return;
  }
  std::atomic<std::size_t> next{0};
  std::mutex error_mutex;
  std::size_t error_index = count;
  std::exception_ptr error;
  auto run = [&] {
    inside_parallel_region = true;
    while (true) {
      const std::size_t i = next.fetch_add(1);
      if (i >= count) {
        inside_parallel_region = false;
        return;
      }
      try {
        body(i);
      } catch (...) {
        // keep the failure of the lowest index so the reported error is stable
        std::lock_guard<std::mutex> lock(error_mutex);
        if (i < error_index) {
          error_index = i;
          error = std::current_exception();
        }
      }
    }
  };
  std::vector<std::thread> pool;
  pool.reserve(workers - 1);
  for (std::size_t w = 1; w < workers; ++w) pool.emplace_back(run);
  run();
  for (auto& t : pool) t.join();
  if (error) std::rethrow_exception(error);
}

}  // namespace anosov
