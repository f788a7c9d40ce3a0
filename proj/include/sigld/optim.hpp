#pragma once

#include <functional>
#include <span>
#include <vector>

namespace sigld {

struct BoxMinimizeResult {
  std::vector<double> x;
  double value = 0.0;
  double projected_grad_norm = 0.0;
  int iterations = 0;
  bool converged = false;
};

// Objective callback: fills grad (same length as x) and returns the value.
using ValueGrad = std::function<double(std::span<const double>, std::span<double>)>;

// Projected quasi-Newton minimization over a box: limited-memory BFGS
// two-loop direction, projected Armijo backtracking, gradient-step fallback.
// Stops when the projected gradient sup-norm drops below tol.
BoxMinimizeResult minimize_box(const ValueGrad& f, std::vector<double> x0,
                               std::span<const double> lower, std::span<const double> upper,
                               double tol, int max_iterations);

}  // namespace sigld
