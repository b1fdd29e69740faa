#pragma once

#include <cstdint>
#include <memory>
#include <vector>

#include "anosov/torus_maps.hpp"

namespace anosov {

/// phi(x) = F(x) - A x, a Z^d-periodic field.
struct DisplacementField {
  const TorusMap* map = nullptr;
  double sup_norm = 0.0;        ///< max |phi| over the measurement grid
  double lipschitz = 0.0;       ///< max |D phi| over the same grid
  double certified_bound = 0.0; ///< sup_norm plus the grid Lipschitz allowance
  int grid_n = 0;

  Vec value(const Vec& x) const;
  void value_and_jacobian(const Vec& x, Vec& value, Mat& jacobian) const;
};

DisplacementField displacement_field(const TorusMap& f, int grid_n = 0);

struct ConjugacyOptions {
  double tail_target = 1e-10;  ///< requested truncation error for u
  int fixed_depth = 0;         ///< > 0 overrides the depth chosen from the tail bound
  int max_depth = 400;
  int grid_n = 0;
};

/// Truncated series for H = Id + u with A o H = H o F.
class ConjugacyEvaluator {
 public:
  explicit ConjugacyEvaluator(TorusMap f, const ConjugacyOptions& options = {});

  const TorusMap& map() const { return *map_; }
  const DisplacementField& displacement() const { return phi_; }
  int series_depth() const { return depth_; }
  double stable_norm() const { return stable_norm_; }
  double unstable_conorm() const { return unstable_conorm_; }
  double displacement_bound() const { return phi_.certified_bound; }
  double tail_bound() const { return tail_bound_; }
  /// Bound on sup |u| from the full series, tail included.
  double u_bound() const { return u_bound_; }
  /// Depth with the series tail below target for a displacement of unit size.
  int depth_for(double target) const;

  Vec u(const Vec& x) const;
  Vec evaluate(const Vec& x) const { return x + u(x); }
  /// Bounded-orbit solve of H(x) = y.
  Vec evaluate_inverse(const Vec& y, double tol = 1e-10) const;
  /// |A H(x) - H(F(x))|
  double conjugacy_residual(const Vec& x) const;

 private:
  std::shared_ptr<const TorusMap> map_;  ///< shared so that phi_.map survives copies
  DisplacementField phi_;
  Mat a_;
  Mat ps_, pu_;
  Mat stable_rows_, unstable_rows_;  ///< orthonormal rows cutting out L^u and L^s
  std::vector<Mat> stable_terms_;    ///< A^n P_s
  std::vector<Mat> unstable_terms_;  ///< A^{-(n+1)} P_u
  std::vector<double> suffix_;       ///< sum_{m >= n} (|A^m P_s| + |A^{-(m+1)} P_u|)
  int depth_ = 1;
  double stable_norm_ = 0.0;
  double unstable_conorm_ = 0.0;
  double tail_bound_ = 0.0;
  double u_bound_ = 0.0;
};

inline Vec evaluate_H(const ConjugacyEvaluator& ce, const Vec& x) { return ce.evaluate(x); }
inline Vec evaluate_H_inverse(const ConjugacyEvaluator& ce, const Vec& y, double tol = 1e-10) {
  return ce.evaluate_inverse(y, tol);
}

struct DefectSample {
  Vec point;
  int direction = 0;
  double stable_component = 0.0;
  double unstable_component = 0.0;
  double norm = 0.0;  ///< |H(x + e_j) - H(x) - e_j|
};

struct SpecialnessDefect {
  double defect = 0.0;  ///< max |H(x + e_j) - H(x) - e_j|
  double max_stable_component = 0.0;
  double max_unstable_component = 0.0;
  double u_sup = 0.0;     ///< max |u| over the sample points
  double relative = 0.0;  ///< defect / u_sup (0 when u vanishes)
  double threshold = 1e-4;
  bool special = true;
  std::vector<DefectSample> samples;
};

SpecialnessDefect specialness_defect(const ConjugacyEvaluator& ce, int samples, std::uint64_t seed = 1,
                                     double threshold = 1e-4);

struct DecayRow {
  int m = 0;
  IntVec n_m;
  double defect = 0.0;          ///< max |H(x + n_m) - H(x) - n_m|
  double inverse_defect = 0.0;  ///< same for H^{-1}
  double unstable_component = 0.0;
};

struct DecayTable {
  std::vector<DecayRow> rows;
  double fitted_rate = 0.0;          ///< least-squares slope of log D_m over m >= 1
  double fitted_inverse_rate = 0.0;
  double reference_rate = 0.0;       ///< log |A restricted to L^s|
};

DecayTable deep_translation_decay(const ConjugacyEvaluator& ce, int m_max, int samples, std::uint64_t seed = 1,
                                  bool with_inverse = true);

/// Least-squares slope of log(values[i]) against xs[i], skipping non-positive values.
double fit_log_slope(const std::vector<double>& xs, const std::vector<double>& values);

}  // namespace anosov
