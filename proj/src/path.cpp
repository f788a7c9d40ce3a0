#include "sigld/path.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <string>

namespace sigld {

SampledSequence::SampledSequence(int dim, std::vector<double> flat_samples)
    : dim_(dim), data_(std::move(flat_samples)) {
  if (dim < 1) throw std::invalid_argument("sequence dim must be >= 1");
  if (data_.empty() || data_.size() % static_cast<std::size_t>(dim) != 0)
    throw std::invalid_argument("sample data length " + std::to_string(data_.size()) +
                                " is not a positive multiple of dim " + std::to_string(dim));
  max_abs_ = 0.0;
  for (double v : data_) max_abs_ = std::max(max_abs_, std::abs(v));
  if (max_abs_ > 1.0 + 1e-12)
    throw std::invalid_argument("sample bound violated: max |xi|_inf = " + std::to_string(max_abs_) +
                                " > 1");
}

PiecewisePath::PiecewisePath(int dim, std::vector<double> knots, std::vector<double> values_flat)
    : dim_(dim), knots_(std::move(knots)), values_(std::move(values_flat)) {
  if (dim < 1) throw std::invalid_argument("path dim must be >= 1");
  if (knots_.size() < 2) throw std::invalid_argument("path needs at least two knots");
  if (values_.size() != knots_.size() * static_cast<std::size_t>(dim))
    throw std::invalid_argument("path values length does not match knots*dim");
  if (knots_.front() != 0.0) throw std::invalid_argument("path must start at t = 0");
  for (int c = 0; c < dim; ++c)
    if (values_[static_cast<std::size_t>(c)] != 0.0)
      throw std::invalid_argument("path must satisfy gamma(0) = 0 exactly");
  for (std::size_t i = 0; i + 1 < knots_.size(); ++i) {
    const double dt = knots_[i + 1] - knots_[i];
    if (!(dt > 0.0)) throw std::invalid_argument("knots must be strictly increasing");
    for (int c = 0; c < dim; ++c) {
      const double dv = values_[(i + 1) * static_cast<std::size_t>(dim) + static_cast<std::size_t>(c)] -
                        values_[i * static_cast<std::size_t>(dim) + static_cast<std::size_t>(c)];
      if (std::abs(dv) > (1.0 + kLipTol) * dt)
        throw std::invalid_argument("Lipschitz bound violated on segment " + std::to_string(i) +
                                    ": |dv| = " + std::to_string(std::abs(dv)) + " > dt = " +
                                    std::to_string(dt));
    }
  }
}

std::vector<double> PiecewisePath::at(double t) const {
  const double T = horizon();
  if (t < -1e-12 || t > T + 1e-12 * std::max(1.0, T))
    throw std::invalid_argument("time " + std::to_string(t) + " outside [0, " + std::to_string(T) + "]");
  t = std::clamp(t, 0.0, T);
  auto it = std::upper_bound(knots_.begin(), knots_.end(), t);
  std::size_t seg = (it == knots_.begin()) ? 0 : static_cast<std::size_t>(it - knots_.begin()) - 1;
  if (seg >= segment_count()) seg = segment_count() - 1;
  const double t0 = knots_[seg], t1 = knots_[seg + 1];
  const double w = (t - t0) / (t1 - t0);
  std::vector<double> out(static_cast<std::size_t>(dim_));
  auto a = value(seg);
  auto b = value(seg + 1);
  for (int c = 0; c < dim_; ++c)
    out[static_cast<std::size_t>(c)] = a[static_cast<std::size_t>(c)] +
                                       w * (b[static_cast<std::size_t>(c)] - a[static_cast<std::size_t>(c)]);
  return out;
}

std::vector<double> PiecewisePath::segment_slope(std::size_t seg) const {
  const double dt = knots_[seg + 1] - knots_[seg];
  std::vector<double> out(static_cast<std::size_t>(dim_));
  auto a = value(seg);
  auto b = value(seg + 1);
  for (int c = 0; c < dim_; ++c)
    out[static_cast<std::size_t>(c)] =
        (b[static_cast<std::size_t>(c)] - a[static_cast<std::size_t>(c)]) / dt;
  return out;
}

double PiecewisePath::lipschitz() const {
  double lip = 0.0;
  for (std::size_t i = 0; i < segment_count(); ++i) {
    auto s = segment_slope(i);
    for (double v : s) lip = std::max(lip, std::abs(v));
  }
  return lip;
}

PiecewisePath PiecewisePath::restricted(double t) const {
  if (!(t > 0.0) || t > horizon() + 1e-12)
    throw std::invalid_argument("restriction time must lie in (0, T]");
  t = std::min(t, horizon());
  std::vector<double> kn, vals;
  for (std::size_t i = 0; i < knots_.size() && knots_[i] < t - 1e-15 * std::max(1.0, horizon()); ++i) {
    kn.push_back(knots_[i]);
    auto v = value(i);
    vals.insert(vals.end(), v.begin(), v.end());
  }
  kn.push_back(t);
  auto v = at(t);
  vals.insert(vals.end(), v.begin(), v.end());
  return PiecewisePath(dim_, std::move(kn), std::move(vals));
}

PiecewisePath PiecewisePath::refined(int factor) const {
  if (factor < 1) throw std::invalid_argument("refinement factor must be >= 1");
  std::vector<double> kn, vals;
  for (std::size_t i = 0; i + 1 < knots_.size(); ++i) {
    for (int j = 0; j < factor; ++j) {
      const double w = static_cast<double>(j) / factor;
      const double t = knots_[i] + w * (knots_[i + 1] - knots_[i]);
      kn.push_back(j == 0 ? knots_[i] : t);
      auto a = value(i);
      auto b = value(i + 1);
      for (int c = 0; c < dim_; ++c)
        vals.push_back(j == 0 ? a[static_cast<std::size_t>(c)]
                              : a[static_cast<std::size_t>(c)] +
                                    w * (b[static_cast<std::size_t>(c)] - a[static_cast<std::size_t>(c)]));
    }
  }
  kn.push_back(knots_.back());
  auto v = value(knots_.size() - 1);
  vals.insert(vals.end(), v.begin(), v.end());
  return PiecewisePath(dim_, std::move(kn), std::move(vals));
}

PiecewisePath phi_n_from_sequence(const SampledSequence& seq, long n, double T) {
  if (n < 1) throw std::invalid_argument("n must be >= 1");
  if (!(T > 0.0)) throw std::invalid_argument("horizon must be positive");
  const double x = T * static_cast<double>(n);
  const auto full = static_cast<std::size_t>(std::floor(x + 1e-9));
  const bool has_frac = x - static_cast<double>(full) > 1e-9;
  const std::size_t needed = full + (has_frac ? 1 : 0);
  if (seq.size() < needed)
    throw std::invalid_argument("phi_n needs " + std::to_string(needed) + " samples, got " +
                                std::to_string(seq.size()));

  const int d = seq.dim();
  std::vector<double> knots, values;
  knots.reserve(full + 2);
  values.reserve((full + 2) * static_cast<std::size_t>(d));
  std::vector<double> cum(static_cast<std::size_t>(d), 0.0);
  knots.push_back(0.0);
  values.insert(values.end(), cum.begin(), cum.end());
  for (std::size_t j = 0; j < full; ++j) {
    auto s = seq.sample(j);
    for (int c = 0; c < d; ++c) cum[static_cast<std::size_t>(c)] += s[static_cast<std::size_t>(c)] / static_cast<double>(n);
    knots.push_back(j + 1 == full && !has_frac ? T : static_cast<double>(j + 1) / static_cast<double>(n));
    values.insert(values.end(), cum.begin(), cum.end());
  }
  if (has_frac) {
    const double dt = T - static_cast<double>(full) / static_cast<double>(n);
    auto s = seq.sample(full);
    for (int c = 0; c < d; ++c) cum[static_cast<std::size_t>(c)] += s[static_cast<std::size_t>(c)] * dt;
    knots.push_back(T);
    values.insert(values.end(), cum.begin(), cum.end());
  }
  return PiecewisePath(d, std::move(knots), std::move(values));
}

double sup_distance(const PiecewisePath& a, const PiecewisePath& b) {
  if (a.dim() != b.dim())
    throw std::invalid_argument("sup_distance dim mismatch: " + std::to_string(a.dim()) + " vs " +
                                std::to_string(b.dim()));
  if (std::abs(a.horizon() - b.horizon()) > 1e-12 * std::max(1.0, a.horizon()))
    throw std::invalid_argument("sup_distance horizon mismatch: " + std::to_string(a.horizon()) +
                                " vs " + std::to_string(b.horizon()));
  // The difference is piecewise linear, so its sup sits at a union knot.
  std::vector<double> ts(a.knots().begin(), a.knots().end());
  ts.insert(ts.end(), b.knots().begin(), b.knots().end());
  std::sort(ts.begin(), ts.end());
  ts.erase(std::unique(ts.begin(), ts.end()), ts.end());
  double best = 0.0;
  for (double t : ts) {
    const double tc = std::min(t, std::min(a.horizon(), b.horizon()));
    auto va = a.at(tc);
    auto vb = b.at(tc);
    for (int c = 0; c < a.dim(); ++c)
      best = std::max(best, std::abs(va[static_cast<std::size_t>(c)] - vb[static_cast<std::size_t>(c)]));
  }
  return best;
}

PiecewisePath perturb_in_h(const PiecewisePath& gamma, double eps2, std::uint64_t seed,
                           PerturbMode mode) {
  if (eps2 < 0.0 || eps2 > 1.0) throw std::invalid_argument("eps2 must lie in [0, 1]");
  if (eps2 == 0.0) return gamma;

  const double T = gamma.horizon();
  const double budget = std::min(1.0, std::max(0.0, 1.0 - gamma.lipschitz()));
  if (budget < 1e-9) return gamma;  // no slope budget left, nothing to add

  Rng rng(seed);
  const int d = gamma.dim();
  const int coord = (mode == PerturbMode::adversarial)
                        ? (d >= 2 ? 1 : 0)
                        : static_cast<int>(rng.uniform_index(static_cast<std::size_t>(d)));

  // Sawtooth: half-run of length L at slope `budget` reaches amplitude a.
  // Teeth are fit to tile [0, T] exactly.
  double half = eps2 / budget;
  std::size_t teeth = std::max<std::size_t>(1, static_cast<std::size_t>(std::floor(T / (2.0 * half))));
  half = T / (2.0 * static_cast<double>(teeth));
  const double amp = std::min(eps2, budget * half);

  std::vector<double> zig_knots, zig_vals;  // scalar zig-zag z(t)
  zig_knots.push_back(0.0);
  zig_vals.push_back(0.0);
  for (std::size_t k = 0; k < teeth; ++k) {
    const double sgn = (mode == PerturbMode::adversarial) ? 1.0 : (rng.coin() ? 1.0 : -1.0);
    zig_knots.push_back((2.0 * k + 1.0) * half);
    zig_vals.push_back(sgn * amp);
    zig_knots.push_back(k + 1 == teeth ? T : (2.0 * k + 2.0) * half);
    zig_vals.push_back(0.0);
  }

  auto zig_at = [&](double t) {
    auto it = std::upper_bound(zig_knots.begin(), zig_knots.end(), t);
    std::size_t i = (it == zig_knots.begin()) ? 0 : static_cast<std::size_t>(it - zig_knots.begin()) - 1;
    if (i + 1 >= zig_knots.size()) i = zig_knots.size() - 2;
    const double w = (t - zig_knots[i]) / (zig_knots[i + 1] - zig_knots[i]);
    return zig_vals[i] + w * (zig_vals[i + 1] - zig_vals[i]);
  };

  std::vector<double> ts(gamma.knots().begin(), gamma.knots().end());
  ts.insert(ts.end(), zig_knots.begin(), zig_knots.end());
  std::sort(ts.begin(), ts.end());
  ts.erase(std::unique(ts.begin(), ts.end(),
                       [&](double x, double y) { return std::abs(x - y) < 1e-15 * std::max(1.0, T); }),
           ts.end());
  ts.back() = T;

  std::vector<double> vals;
  vals.reserve(ts.size() * static_cast<std::size_t>(d));
  for (double t : ts) {
    auto v = gamma.at(t);
    v[static_cast<std::size_t>(coord)] += zig_at(t);
    if (t == 0.0) v.assign(static_cast<std::size_t>(d), 0.0);
    vals.insert(vals.end(), v.begin(), v.end());
  }
  return PiecewisePath(d, std::move(ts), std::move(vals));
}

PiecewisePath random_h_path(int dim, double T, double max_lip, Rng& rng, std::size_t max_segments) {
  if (!(T > 0.0)) throw std::invalid_argument("horizon must be positive");
  if (max_lip < 0.0 || max_lip > 1.0) throw std::invalid_argument("max_lip must lie in [0, 1]");
  const std::size_t m = 2 + rng.uniform_index(max_segments > 2 ? max_segments - 1 : 1);
  std::vector<double> knots(m + 1), values((m + 1) * static_cast<std::size_t>(dim), 0.0);
  knots[0] = 0.0;
  for (std::size_t i = 1; i < m; ++i)
    knots[i] = (static_cast<double>(i) + 0.8 * (rng.uniform01() - 0.5)) * T / static_cast<double>(m);
  knots[m] = T;
  for (std::size_t i = 0; i < m; ++i) {
    const double dt = knots[i + 1] - knots[i];
    for (int c = 0; c < dim; ++c) {
      const double slope = max_lip * (2.0 * rng.uniform01() - 1.0);
      values[(i + 1) * static_cast<std::size_t>(dim) + static_cast<std::size_t>(c)] =
          values[i * static_cast<std::size_t>(dim) + static_cast<std::size_t>(c)] + slope * dt;
    }
  }
  return PiecewisePath(dim, std::move(knots), std::move(values));
}

}  // namespace sigld
