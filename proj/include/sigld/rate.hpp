#pragma once

#include <cstdint>
#include <limits>
#include <span>
#include <vector>

#include "sigld/path.hpp"
#include "sigld/processes.hpp"
#include "sigld/tensor.hpp"

namespace sigld {

inline constexpr double kInfiniteRate = std::numeric_limits<double>::infinity();

struct LegendreResult {
  double value = 0.0;
  std::vector<double> maximizer;  // lambda attaining (or capping) the sup
  bool capped = false;            // ascent hit the lambda cap; sup diverges at the boundary
  bool infinite = false;          // x outside the support box
};

// Convex conjugate Lambda*(x) = sup_lambda <lambda,x> - Lambda(lambda) of an
// i.i.d. step law. Product laws solve the scalar stationarity equation per
// coordinate; joint discrete laws run a projected ascent. Two-point laws get
// the exact boundary limit -log(point mass).
class CramerTransform {
 public:
  static constexpr double kLambdaCap = 40.0;

  explicit CramerTransform(StepLawModel model);

  const StepLawModel& model() const { return model_; }
  void domain(std::span<double> lo, std::span<double> hi) const;

  double legendre(std::span<const double> x) const;
  LegendreResult legendre_full(std::span<const double> x) const;

  // Solves grad Lambda(lambda) = v; the tilt making slope v typical.
  std::vector<double> tilt_for_slope(std::span<const double> v) const;

 private:
  StepLawModel model_;
  std::vector<double> lo_, hi_;
};

// Slope-integral path cost: sum of Lambda*(slope) * duration over segments;
// infinite as soon as one slope leaves the domain.
double path_rate(const PiecewisePath& gamma, const CramerTransform& ct);

enum class TargetMode { endpoint, path };

struct RateProblem {
  StepLawModel model;
  int level = 1;
  double horizon = 1.0;
  TargetMode mode = TargetMode::endpoint;
  LevelTensor target{1, 0};                               // endpoint target, level tensor
  std::vector<std::pair<double, LevelTensor>> target_path;  // path targets on the slope grid
  int grid_segments = 32;
  int multistart = 16;
  double residual_tol = 1e-6;
  double stationarity_tol = 1e-8;
  int outer_max = 50;
  int inner_max = 400;
  std::uint64_t seed = 1;
};

struct RateSolution {
  double value = 0.0;               // sum Lambda*(v_i) * dt of the reported profile
  std::vector<double> profile;      // m*d slopes, segment-major
  double residual = 0.0;            // constraint violation, sup-norm
  bool converged = false;
  int outer_iterations = 0;
  std::vector<double> start_values;  // converged multistart values (quiet NaN = failed start)
  double dispersion = 0.0;           // spread across converged starts
};

// Contraction-principle solve: minimize the path cost over slope profiles
// whose induced signature matches the target (at T, or at every grid target
// time). Augmented-Lagrangian outer loop, projected quasi-Newton inner loop,
// exact constraint Jacobians by forward sensitivity of the per-segment Chen
// recursion. Throws on targets violating the T^nu/nu! feasibility bound.
RateSolution contraction_rate(const RateProblem& prob, int threads = 1);

// Same objective with the endpoint match relaxed to a closed sup-norm ball
// of radius delta around the target.
RateSolution rate_lower_envelope(const RateProblem& prob, double delta, int threads = 1);

}  // namespace sigld
