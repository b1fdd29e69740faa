#pragma once

#include <string>
#include <vector>

#include "anosov/lattice_linear.hpp"

namespace anosov {

/// One Fourier term of a perturbation component:
///   value[component] += cos_coef * cos(2 pi k.x) + sin_coef * sin(2 pi k.x)
struct TrigTerm {
  int component = 0;
  IntVec frequency;
  double cos_coef = 0.0;
  double sin_coef = 0.0;
};

/// Finite trigonometric polynomial R^d -> R^d, Z^d-periodic by construction.
class TrigField {
 public:
  TrigField() = default;
  TrigField(int dim, std::vector<TrigTerm> terms);

  int dim() const { return dim_; }
  const std::vector<TrigTerm>& terms() const { return terms_; }
  bool empty() const { return terms_.empty(); }

  Vec value(const Vec& x) const;
  void value_and_jacobian(const Vec& x, Vec& value, Mat& jacobian) const;
  /// Euclidean norm of the per-component sums of |cos| + |sin|; bounds the sup norm.
  double coefficient_bound() const;

 private:
  int dim_ = 0;
  std::vector<TrigTerm> terms_;
};

struct JetSample {
  Vec point;
  Vec image;
  Mat jacobian;
};

/// Lift F of a torus map f homotopic to A.
///
/// Without a conjugator, F(x) = A x + eps p(x).  With a conjugator G = Id + eps q,
/// F = G o (A + eps p) o G^{-1}; G^{-1} is evaluated by Newton.
class TorusMap {
 public:
  TorusMap(LinearModel linear, TrigField perturbation, double epsilon, std::string name = "custom",
           TrigField conjugator = {});

  const std::string& name() const { return name_; }
  const LinearModel& linear() const { return linear_; }
  const TrigField& perturbation() const { return perturbation_; }
  const TrigField& conjugator() const { return conjugator_; }
  double epsilon() const { return epsilon_; }
  int dim() const { return linear_.dim(); }
  std::int64_t degree() const { return linear_.degree; }
  bool is_linear() const { return epsilon_ == 0.0 || (perturbation_.empty() && conjugator_.empty()); }
  bool has_conjugator() const { return !conjugator_.empty() && epsilon_ != 0.0; }

  /// Same family member at another epsilon.
  TorusMap with_epsilon(double epsilon) const;

  Vec evaluate(const Vec& x) const;
  JetSample evaluate_with_jacobian(const Vec& x) const;
  Mat jacobian(const Vec& x) const { return evaluate_with_jacobian(x).jacobian; }
  /// f on the torus: wrap(F(x)).
  Vec torus_step(const Vec& x) const { return wrap(evaluate(x)); }

  /// G^{-1}(x); identity when there is no conjugator.
  Vec conjugator_inverse(const Vec& x) const;
  Vec conjugator_apply(const Vec& x) const;

  /// Smallest and largest det DF over the verification grid.
  double min_jacobian_det() const { return det_min_; }
  double max_jacobian_det() const { return det_max_; }
  /// det DF keeps one sign and stays away from zero on the verification grid.
  bool local_diffeo_on_grid() const;

 private:
  void scan_determinant();

  LinearModel linear_;
  TrigField perturbation_;
  TrigField conjugator_;
  double epsilon_ = 0.0;
  std::string name_;
  Mat a_real_;
  Mat a_inverse_;
  double det_min_ = 0.0;
  double det_max_ = 0.0;
};

inline JetSample evaluate_with_jacobian(const TorusMap& f, const Vec& x) { return f.evaluate_with_jacobian(x); }

struct NewtonOptions {
  double tol = 1e-13;     ///< relative to max(1, |y|)
  int max_iterations = 60;
};

/// Solve F(x) = y on the lift by damped Newton seeded at A^{-1} y.
Vec invert_lift(const TorusMap& f, const Vec& y, const NewtonOptions& options = {});

/// Lift solution of F(z) = x + r for the coset representative r, reduced into [0,1)^d.
Vec preimage_branch(const TorusMap& f, const Vec& x, const IntVec& representative,
                    const NewtonOptions& options = {});

/// All |det A| torus points z with f(z) = x, ordered by coset representative.
std::vector<Vec> torus_preimages(const TorusMap& f, const Vec& x, double tol = 1e-10);

struct AnosovCertificate {
  bool certified = false;
  double cone_slope = 0.0;
  int iterations = 0;
  int grid_n = 0;
  double max_unstable_slope = 0.0;  ///< worst image slope of the unstable cone (must be <= slope/2)
  double min_expansion = 0.0;       ///< worst growth of ||P_u v|| (must be > 1)
  double max_stable_slope = 0.0;    ///< same for the stable cone under inverse branches
  double min_contraction_inverse = 0.0;
  double lipschitz_estimate = 0.0;  ///< of the unstable slope over neighbouring grid points
  double safety_margin = 0.0;       ///< lipschitz_estimate * half the grid diagonal
  Vec witness_point;
  Vec witness_direction;
  std::string failure;
};

/// Grid cone measurement; never throws on failure, the record says what failed.
AnosovCertificate measure_cones(const TorusMap& f, double cone_slope, int iterations, int grid_n);

/// Like measure_cones but raises CertificationFailed with the witness when a check fails.
AnosovCertificate anosov_certificate(const TorusMap& f, double cone_slope, int iterations, int grid_n = 0);

/// Default verification grid: 64 for d = 2, 24 for d = 3.
int default_grid(int dim);

/// linear_A0, shear_A0, conjugated_A0, product_T3, cubic_companion.
TorusMap fixture_catalog(const std::string& name, double epsilon = 0.0);
std::vector<std::string> fixture_names();

/// The shear family perturbation (0, sin 2 pi x) used by shear_A0.
TrigField shear_field();

}  // namespace anosov
