#pragma once

#include <cstdint>
#include <functional>
#include <random>
#include <stdexcept>
#include <string>
#include <vector>

#include <Eigen/Dense>

namespace anosov {

using Vec = Eigen::VectorXd;
using Mat = Eigen::MatrixXd;
using IntVec = Eigen::Matrix<std::int64_t, Eigen::Dynamic, 1>;
using IntMat = Eigen::Matrix<std::int64_t, Eigen::Dynamic, Eigen::Dynamic>;

enum class ErrorKind {
  InvalidArgument,
  NotHyperbolic,
  IrreducibilityUndecided,
  ResourceLimit,
  NoConvergence,
  NotLocalDiffeo,
  IncompleteEnumeration,
  CertificationFailed,
  UnknownFixture,
  SingularJacobian,
  GapTooSmall,
  StepRejected,
  ObstructionNonzero,
  RefusedNonIntegrable,
  NoIntersection,
  ConfigInvalid,
};

const char* to_string(ErrorKind kind);

/// Every failure raised by the library carries a machine-checkable kind.
class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& what);
  ErrorKind kind() const noexcept { return kind_; }

 private:
  ErrorKind kind_;
};

[[noreturn]] void fail(ErrorKind kind, const std::string& what);

// ---------------------------------------------------------------------------
// Torus helpers

/// Componentwise reduction into [0,1)^d.
Vec wrap(const Vec& x);

/// Euclidean distance on R^d / Z^d (minimum over all integer translates).
double torus_distance(const Vec& a, const Vec& b);

/// Difference b - a reduced to the representative of smallest norm.
Vec torus_delta(const Vec& a, const Vec& b);

/// Largest principal angle between the column spans of two orthonormal bases.
double principal_angle(const Mat& qa, const Mat& qb);

/// Orthonormal basis of the column span (thin Householder QR).
Mat orthonormalize(const Mat& columns);

// ---------------------------------------------------------------------------
// Deterministic sampling. Built directly on the 64-bit Mersenne engine so the
// stream does not depend on the standard library's distribution classes.

class Rng {
 public:
  explicit Rng(std::uint64_t seed) : engine_(seed) {}
  double uniform();
  Vec uniform_point(int dim);
  int index(int upper);
  std::uint64_t next() { return engine_(); }

 private:
  std::mt19937_64 engine_;
};

// ---------------------------------------------------------------------------
// Parallel loops. Bodies write to per-index slots; reductions happen after the
// loop in index order, so results never depend on the worker count.

/// Worker count for parallel_for (default 1); zero or less selects the hardware concurrency.
void set_thread_count(int threads);
int thread_count();
void parallel_for(std::size_t count, const std::function<void(std::size_t)>& body);

}  // namespace anosov
