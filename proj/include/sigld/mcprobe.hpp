#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "sigld/processes.hpp"
#include "sigld/rate.hpp"
#include "sigld/tensor.hpp"

namespace sigld {

struct ProbeConfig {
  StepLawModel model;
  int level = 1;
  double horizon = 1.0;
  LevelTensor target{1, 0};
  double delta = 0.1;
  std::vector<long> n_list;
  long trials = 10000;
  int batches = 16;
  std::uint64_t seed = 1;
  // desk-scale caps: n <= 500 and trials <= 1e7 unless lifted explicitly
  bool allow_large_run = false;
};

struct ProbePoint {
  long n = 0;
  double p_hat = 0.0;
  double std_error = 0.0;
  double slope = 0.0;  // -log(p_hat)/n when resolved
  bool resolved = false;
  long hits = 0;  // weighted count for the tilted estimator
};

struct LDPEstimate {
  std::string method;  // "naive" or "tilted"
  double delta = 0.0;
  std::uint64_t seed = 0;
  std::vector<ProbePoint> per_n;
  double fitted_slope = 0.0;      // weighted fit of -log p_n vs n, free intercept
  double fitted_intercept = 0.0;
  double fitted_slope_err = 0.0;
  bool slope_resolved = false;
};

// Plain Monte Carlo: count hits of the top-level tensor in the closed
// sup-norm delta-ball around the target. Deterministic in the seed; trials
// are rounded up to a multiple of the batch count, standard errors come
// from the batch means.
LDPEstimate estimate_naive(const ProbeConfig& cfg, int threads = 1);

// Exponential tilting driven by the solved slope profile: on segment i all
// steps share the tilt solving grad Lambda = v_i, defensively mixed with a
// one-in-eight untilted stream and reweighted by the exact mixture
// likelihood ratio (bounded by 8). Unbiased for the same hit probability;
// lambda = 0 reduces to the naive estimator draw-for-draw.
LDPEstimate estimate_tilted(const ProbeConfig& cfg, const RateSolution& solution, int threads = 1);

struct ComparisonRecord {
  double fitted_slope = 0.0;
  double envelope = 0.0;    // inf of the rate over the closed ball
  double point_rate = 0.0;  // contraction rate at the target itself
  double rel_tol = 0.2;
  double abs_tol = 0.02;
  std::string verdict;  // consistent | inconsistent | unresolved
};

// LDP sandwich check: the fitted decay slope should land between the
// closed-ball infimum and the point rate, up to the tolerance policy.
ComparisonRecord slope_vs_rate_report(const LDPEstimate& est, double envelope_value,
                                      double point_rate_value, double rel_tol = 0.2,
                                      double abs_tol = 0.02);

}  // namespace sigld
