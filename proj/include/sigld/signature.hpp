#pragma once

#include <span>
#include <vector>

#include "sigld/path.hpp"
#include "sigld/tensor.hpp"

namespace sigld {

// Levels 0..nu of a signature at one time point; level 0 is fixed to the
// scalar 1 for path signatures (derivative/difference stacks set it to 0).
class SignatureStack {
 public:
  SignatureStack(int dim, int top_level);  // identity at time 0

  int dim() const { return dim_; }
  int top_level() const { return static_cast<int>(levels_.size()) - 1; }
  double time() const { return time_; }
  void set_time(double t) { time_ = t; }
  const LevelTensor& level(int k) const { return levels_[static_cast<std::size_t>(k)]; }
  LevelTensor& level(int k) { return levels_[static_cast<std::size_t>(k)]; }

 private:
  int dim_;
  double time_;
  std::vector<LevelTensor> levels_;
};

// Signature of one linear segment: level k is slope^{tensor k} h^k / k!.
SignatureStack segment_signature(std::span<const double> slope, double duration, int top_level);

// Chen concatenation: level k of the result is sum_j a_j (x) b_{k-j}.
// a is the earlier piece; the result's time is a.time + b.time.
SignatureStack chen_concat(const SignatureStack& a, const SignatureStack& b);

// Exact enumeration of Eq-(1)-style iterated sums over strictly increasing
// index tuples drawn from samples 0..ceil(t*n)-1; level k is scaled by
// n^{-k}. Cost grows like (tn choose nu); guarded unless overridden.
SignatureStack iterated_sum_direct(const SampledSequence& seq, int top_level, long n, double t,
                                   bool allow_large = false);

// One-pass recursion over samples: appending xi(m) updates level k by
// level-(k-1) prefix (x) xi(m). Fractional grid times interpolate linearly
// between integer prefix counts. Grid must be ascending.
std::vector<SignatureStack> iterated_sum_stream(const SampledSequence& seq, int top_level, long n,
                                                std::span<const double> t_grid);

// Left-endpoint Riemann evaluation of the level recursion on the union of
// the knot grid and the h-grid; first-order accurate. Returns the stack at
// every grid point.
std::vector<SignatureStack> phi_map_quadrature(const PiecewisePath& gamma, int top_level, double h);

// Exact piecewise-linear signature via per-segment closed form and Chen
// concatenation; one stack per knot.
std::vector<SignatureStack> phi_map_exact(const PiecewisePath& gamma, int top_level);

// Signature of the linearly interpolated partial-sum path phi_n at time t.
SignatureStack signature_of_sequence(const SampledSequence& seq, int top_level, long n, double t);

// Entry (i_1,...,i_k) of level k = len(indices).
double coordinate_extract(const SignatureStack& stack, std::span<const int> indices);

// sup over the union knot grid (refined `refine`-fold, since level-k paths
// are piecewise polynomial) of the top-level sup-norm difference.
double signature_sup_distance(const PiecewisePath& a, const PiecewisePath& b, int top_level,
                              int refine = 4);

// Reusable one-pass accumulator behind iterated_sum_stream; kept public so
// Monte Carlo loops can avoid per-trial allocation.
class StreamAccumulator {
 public:
  StreamAccumulator(int dim, int top_level);
  void reset();
  void append(std::span<const double> sample);
  std::size_t count() const { return count_; }
  // Unnormalized level-k prefix sum.
  const LevelTensor& level(int k) const { return levels_[static_cast<std::size_t>(k)]; }
  // Snapshot normalized by n^{-k} per level, stamped with time t.
  SignatureStack normalized(long n, double t) const;

 private:
  int dim_;
  std::size_t count_;
  std::vector<LevelTensor> levels_;
};

}  // namespace sigld
