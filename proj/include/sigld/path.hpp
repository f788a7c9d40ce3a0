#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "sigld/rng.hpp"

namespace sigld {

// Bounded d-dimensional sample sequence, |xi(k)|_inf <= 1 certified at
// construction.
class SampledSequence {
 public:
  SampledSequence(int dim, std::vector<double> flat_samples);

  int dim() const { return dim_; }
  std::size_t size() const { return data_.size() / static_cast<std::size_t>(dim_); }
  std::span<const double> sample(std::size_t k) const {
    return {data_.data() + k * static_cast<std::size_t>(dim_), static_cast<std::size_t>(dim_)};
  }
  std::span<const double> flat() const { return data_; }
  double max_abs() const { return max_abs_; }

 private:
  int dim_;
  std::vector<double> data_;
  double max_abs_;
};

// Piecewise-linear path on [0, T], gamma(0) = 0, Lipschitz constant <= 1
// up to kLipTol. Values stored flat, one d-block per knot.
class PiecewisePath {
 public:
  static constexpr double kLipTol = 1e-9;

  PiecewisePath(int dim, std::vector<double> knots, std::vector<double> values_flat);

  int dim() const { return dim_; }
  double horizon() const { return knots_.back(); }
  std::size_t knot_count() const { return knots_.size(); }
  std::size_t segment_count() const { return knots_.size() - 1; }
  double knot(std::size_t i) const { return knots_[i]; }
  std::span<const double> knots() const { return knots_; }
  std::span<const double> value(std::size_t i) const {
    return {values_.data() + i * static_cast<std::size_t>(dim_), static_cast<std::size_t>(dim_)};
  }

  // Linear interpolation; t must lie in [0, T] (tiny float overshoot is
  // clamped).
  std::vector<double> at(double t) const;
  std::vector<double> segment_slope(std::size_t seg) const;

  // max over segments of |slope|_inf
  double lipschitz() const;

  PiecewisePath restricted(double t) const;

  // Same path with every segment split into `factor` equal pieces.
  PiecewisePath refined(int factor) const;

 private:
  int dim_;
  std::vector<double> knots_;
  std::vector<double> values_;
};

// Rescaled cumulative path phi_n: knots at j/n, slope on segment j equal to
// sample j. Needs ceil(T*n) samples.
PiecewisePath phi_n_from_sequence(const SampledSequence& seq, long n, double T);

// sup over [0,T] of |a(t) - b(t)|_inf, exact on the union of knot sets.
double sup_distance(const PiecewisePath& a, const PiecewisePath& b);

enum class PerturbMode { random, adversarial };

// Returns a path at sup-distance <= eps2 from gamma, still inside H: a
// zig-zag of amplitude <= eps2 is added using the leftover slope budget
// 1 - Lip(gamma). With no budget the path is returned unchanged.
// Adversarial mode uses an aligned sawtooth in coordinate 1 (coordinate 0
// when d = 1), the pair construction behind the Holder exponent floor.
PiecewisePath perturb_in_h(const PiecewisePath& gamma, double eps2, std::uint64_t seed,
                           PerturbMode mode = PerturbMode::random);

// Random element of H with Lipschitz constant <= max_lip: random knot grid,
// independent uniform slopes per segment.
PiecewisePath random_h_path(int dim, double T, double max_lip, Rng& rng,
                            std::size_t max_segments = 12);

}  // namespace sigld
