#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "sigld/path.hpp"
#include "sigld/processes.hpp"

namespace sigld {

struct HolderTrial {
  double eps2 = 0.0;   // requested sup-distance
  double s = 0.0;      // measured sup path distance
  double dist = 0.0;   // top-level signature sup distance
  double ratio = 0.0;  // dist / sqrt(s)
};

struct HolderReport {
  PerturbMode mode = PerturbMode::random;
  std::vector<HolderTrial> trials;
  double exponent = 0.0;  // log-log fit of dist vs s
  double exponent_stderr = 0.0;
  double max_ratio = 0.0;
  std::vector<double> decades;              // distinct eps2 values, descending
  std::vector<double> decade_median_ratio;  // median ratio per decade
};

// Pair generator + measurement behind the Holder continuity check: bases
// with half the slope budget, pairs at sup-distance eps2 via perturb_in_h,
// top-level signature distance measured with the exact evaluator on the
// refined union grid.
HolderReport holder_suite(int level, int dim, double T, std::span<const double> eps2_list,
                          int trials, PerturbMode mode, std::uint64_t seed);

struct LlnPoint {
  long n = 0;
  double median_error = 0.0;
  double max_error = 0.0;
};

struct LlnReport {
  std::vector<double> limit_factor;  // Q^{tensor nu} entries (t^nu/nu! factored out)
  std::vector<LlnPoint> per_n;
  double decay_exponent = 0.0;  // fitted slope of log median error vs log n
  bool exponent_fitted = false;
};

// Sup over a knot-aligned t-grid of |Phi(phi_n)(t) - Q^{tensor nu} t^nu/nu!|,
// median over reps per n, with the decay exponent fitted across the schedule.
LlnReport lln_suite(const StepLawModel& model, int level, double T, std::span<const long> n_list,
                    int reps, std::uint64_t seed);

struct RegularityReport {
  int trials = 0;
  int level_bound_violations = 0;
  int time_lipschitz_violations = 0;
  double worst_level_slack = 1e300;     // min over trials of t^k/k! - |S_k(t)|
  double worst_lipschitz_slack = 1e300;
  double extremal_gap = 0.0;  // straight-line path: |T^k/k! - attained| at the top level
};

// Level bound t^k/k! at every knot and the time-Lipschitz bound with
// constant T^{nu-1}/(nu-1)! between all knot pairs, over random H-paths.
RegularityReport regularity_suite(int level, int dim, double T, int trials, std::uint64_t seed);

}  // namespace sigld
