#pragma once

#include <cstdint>
#include <initializer_list>
#include <vector>

#include "anosov/common.hpp"

namespace anosov {

/// Square integer matrix with nonzero determinant.
class IntMatrix {
 public:
  IntMatrix() = default;
  explicit IntMatrix(IntMat entries);
  static IntMatrix from_rows(std::initializer_list<std::initializer_list<std::int64_t>> rows);
  static IntMatrix from_rows(const std::vector<std::vector<std::int64_t>>& rows);
  static IntMatrix identity(int dim);
  static IntMatrix diagonal(const std::vector<std::int64_t>& diag);
  static IntMatrix companion(const std::vector<std::int64_t>& monic_coefficients);

  int dim() const { return static_cast<int>(entries_.rows()); }
  const IntMat& entries() const { return entries_; }
  std::int64_t operator()(int i, int j) const { return entries_(i, j); }
  Mat to_real() const { return entries_.cast<double>(); }
  std::int64_t determinant() const { return det_; }

  IntMatrix power(int n) const;
  IntMatrix minus_identity() const;

  friend bool operator==(const IntMatrix& a, const IntMatrix& b) { return a.entries_ == b.entries_; }

 private:
  IntMat entries_;
  std::int64_t det_ = 0;
};

// Exact integer kernels. All of them throw ResourceLimit when an intermediate
// value leaves the int64 range.
std::int64_t exact_determinant(const IntMat& m);
IntMat exact_adjugate(const IntMat& m);
IntMat checked_product(const IntMat& a, const IntMat& b);
IntVec checked_product(const IntMat& a, const IntVec& v);

/// Lower-triangular Hermite form H with H Z^d = M Z^d (lattice spanned by columns).
IntMat hermite_lower(const IntMat& m);

/// v in M Z^d, decided by exact rational solve M^{-1} v = adj(M) v / det(M).
bool in_image_lattice(const IntMat& m, const IntVec& v);

/// Monic characteristic polynomial, leading coefficient first.
std::vector<std::int64_t> characteristic_polynomial(const IntMat& m);

/// Exact irreducibility over Q of a monic integer polynomial of degree <= 4.
bool irreducible_over_q(const std::vector<std::int64_t>& monic);

struct LinearModel {
  IntMatrix matrix;
  std::vector<std::int64_t> char_poly;
  bool irreducible = false;
  bool irreducibility_decided = true;
  bool hyperbolic = false;
  std::int64_t degree = 1;
  std::vector<double> stable_eigenvalues;  ///< increasing modulus
  Mat stable_lines;                        ///< column i spans L^s_i (unit)
  Mat stable_basis;                        ///< orthonormal flag basis: span(cols 0..i) = L^s_(1,i+1)
  Mat unstable_basis;                      ///< orthonormal basis of L^u
  Mat stable_projection;
  Mat unstable_projection;
  bool real_simple_stable = false;
  double stable_norm = 0.0;       ///< ||A restricted to L^s||
  double unstable_conorm = 0.0;   ///< m(A restricted to L^u)

  int dim() const { return matrix.dim(); }
  int stable_dim() const { return static_cast<int>(stable_basis.cols()); }
  int unstable_dim() const { return dim() - stable_dim(); }
  /// log |mu^s_i|, i = 0..k-1
  std::vector<double> stable_exponents() const;
};

struct AnalyzeOptions {
  double tol = 1e-9;
  /// For d > 4: false raises IrreducibilityUndecided, true marks the flag undecided.
  bool allow_undecided_irreducibility = false;
};

LinearModel analyze_matrix(const IntMatrix& a, const AnalyzeOptions& options = {});

/// Transversal of Z^d / A Z^d.
struct LatticeCoset {
  IntMat hermite;                    ///< lower Hermite form of A
  std::vector<IntVec> representatives;

  std::size_t size() const { return representatives.size(); }
  /// Index of the representative equivalent to v.
  std::size_t index_of(const IntVec& v) const;
};

LatticeCoset coset_representatives(const IntMatrix& a);
LatticeCoset coset_representatives(const IntMat& m);

struct CoveringOptions {
  std::int64_t enumeration_cap = 1 << 20;
};

/// Covering radius of A^{-k} Z^d on the torus, maximized over a grid_n^d grid.
double preimage_covering_radius(const IntMatrix& a, int k, int grid_n, const CoveringOptions& options = {});

/// Points of A^{-k} Z^d reduced into [0,1)^d, from the k-fold coset expansion.
std::vector<Vec> preimage_lattice_points(const IntMatrix& a, int k, const CoveringOptions& options = {});

/// All n in A^m Z^d with ||n|| <= bound, sorted by norm then lexicographically.
std::vector<IntVec> deep_lattice_vectors(const IntMatrix& a, int m, double bound);

/// Shortest nonzero vector of A^m Z^d (ties broken lexicographically).
IntVec shortest_deep_vector(const IntMatrix& a, int m);

}  // namespace anosov
