#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "anosov/torus_maps.hpp"

namespace anosov {

/// Finite word of preimage-coset choices selecting a backward orbit; choices[j] picks x_{-j-1}.
struct BranchCode {
  std::vector<int> choices;
  std::size_t depth() const { return choices.size(); }
  std::string to_string() const;
  static BranchCode constant(int depth, int index) { return {std::vector<int>(depth, index)}; }
};

struct StableSplitting {
  Vec point;
  Mat flag;  ///< orthonormal; span(cols 0..i) approximates the strong stable flag E^s_(1,i+1)
  std::vector<double> finite_time_rates;  ///< per-step log contraction rates of the flag quotients
  int depth = 0;
  double convergence_gap = 0.0;  ///< largest principal angle between depth N and 2N flags
  /// Unit vector spanning E^s_1 (i = 0) or the normal of E^s_(1,i) inside E^s_(1,i+1).
  Vec direction(int i) const { return flag.col(i); }
};

struct SplittingOptions {
  double min_rate_gap = 0.02;  ///< required separation of consecutive per-step rates
};

/// Strong stable flag at x from forward data only: the linear stable flag at F^N x is
/// pulled back through DF^{-1} with a QR step at each point.
StableSplitting stable_splitting_at(const TorusMap& f, const Vec& x, int depth,
                                    const SplittingOptions& options = {});

/// Pulled-back strong stable flag only (no convergence diagnostics).
Mat stable_flag(const TorusMap& f, const Vec& x, int depth);

/// Unit vector along E^s_i at a lift point (i = 0 is the strongest direction). For i >= 1
/// the strong flag is intersected with span(L^s_i..L^s_k, L^u) pushed along the lift backward orbit.
Vec stable_line_on_lift(const TorusMap& f, const Vec& x, int i, int depth);

/// Backward orbit x_0 = x, x_{-j-1} = preimage of x_{-j} selected by code.choices[j].
std::vector<Vec> backward_orbit(const TorusMap& f, const Vec& x, const BranchCode& code);

/// Unstable subspace at x along the branch: L^u pushed forward from x_{-depth}.
Mat unstable_direction_along_branch(const TorusMap& f, const Vec& x, const BranchCode& code);

/// Largest pairwise principal angle between branch unstable subspaces at x.
double branch_spread(const TorusMap& f, const Vec& x, const std::vector<BranchCode>& codes);

/// Codes for sampling: all zeros, all (deg-1), then uniformly random words.
std::vector<BranchCode> sample_codes(const TorusMap& f, int count, int depth, Rng& rng);

struct SpreadRow {
  int point_index = 0;
  int code_a = 0;
  int code_b = 0;
  double angle = 0.0;
};

struct IntegrabilityVerdict {
  bool integrable = true;
  double max_spread = 0.0;
  double tol = 1e-3;
  Vec witness_point;
  BranchCode witness_a, witness_b;
  std::vector<Vec> points;
  std::vector<std::vector<BranchCode>> codes;  ///< per point
  std::vector<SpreadRow> distribution;
};

IntegrabilityVerdict integrability_verdict(const TorusMap& f, int samples, int codes_per_point, int depth,
                                           double tol = 1e-3, std::uint64_t seed = 1);

}  // namespace anosov
