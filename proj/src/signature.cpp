#include "sigld/signature.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <string>

namespace sigld {

SignatureStack::SignatureStack(int dim, int top_level) : dim_(dim), time_(0.0) {
  if (top_level < 0) throw std::invalid_argument("top level must be >= 0");
  levels_.reserve(static_cast<std::size_t>(top_level) + 1);
  for (int k = 0; k <= top_level; ++k) levels_.emplace_back(dim, k);
  levels_[0][0] = 1.0;
}

SignatureStack segment_signature(std::span<const double> slope, double duration, int top_level) {
  const int d = static_cast<int>(slope.size());
  SignatureStack out(d, top_level);
  out.set_time(duration);
  std::vector<double> step(slope.size());
  for (std::size_t c = 0; c < slope.size(); ++c) step[c] = slope[c] * duration;
  const LevelTensor inc = LevelTensor::from_vector(d, step);
  for (int k = 1; k <= top_level; ++k) {
    LevelTensor t = tensor_product(out.level(k - 1), inc);
    t.scale(1.0 / static_cast<double>(k));
    out.level(k) = std::move(t);
  }
  return out;
}

SignatureStack chen_concat(const SignatureStack& a, const SignatureStack& b) {
  if (a.dim() != b.dim() || a.top_level() != b.top_level())
    throw std::invalid_argument("chen_concat shape mismatch");
  const int top = a.top_level();
  SignatureStack out(a.dim(), top);
  out.set_time(a.time() + b.time());
  out.level(0)[0] = a.level(0)[0] * b.level(0)[0];
  for (int k = 1; k <= top; ++k) {
    LevelTensor acc(a.dim(), k);
    for (int j = 0; j <= k; ++j) {
      const LevelTensor& lhs = a.level(j);
      const LevelTensor& rhs = b.level(k - j);
      if (j == 0) {
        add_scaled(acc, rhs, lhs[0]);
      } else if (j == k) {
        add_scaled(acc, lhs, rhs[0]);
      } else {
        add_scaled(acc, tensor_product(lhs, rhs), 1.0);
      }
    }
    out.level(k) = std::move(acc);
  }
  return out;
}

StreamAccumulator::StreamAccumulator(int dim, int top_level) : dim_(dim), count_(0) {
  if (top_level < 1) throw std::invalid_argument("stream accumulator needs top level >= 1");
  levels_.reserve(static_cast<std::size_t>(top_level) + 1);
  for (int k = 0; k <= top_level; ++k) levels_.emplace_back(dim, k);
  levels_[0][0] = 1.0;
}

void StreamAccumulator::reset() {
  count_ = 0;
  for (std::size_t k = 1; k < levels_.size(); ++k) levels_[k].fill(0.0);
}

void StreamAccumulator::append(std::span<const double> sample) {
  if (static_cast<int>(sample.size()) != dim_)
    throw std::invalid_argument("sample dim mismatch in stream accumulator");
  // Descending k so level k-1 still holds the previous prefix.
  for (int k = static_cast<int>(levels_.size()) - 1; k >= 1; --k) {
    LevelTensor& acc = levels_[static_cast<std::size_t>(k)];
    const LevelTensor& prev = levels_[static_cast<std::size_t>(k - 1)];
    const std::size_t nd = static_cast<std::size_t>(dim_);
    for (std::size_t i = 0; i < prev.size(); ++i) {
      const double p = prev[i];
      if (p == 0.0) continue;
      double* dst = acc.data().data() + i * nd;
      for (std::size_t c = 0; c < nd; ++c) dst[c] += p * sample[c];
    }
  }
  ++count_;
}

SignatureStack StreamAccumulator::normalized(long n, double t) const {
  SignatureStack out(dim_, static_cast<int>(levels_.size()) - 1);
  out.set_time(t);
  double scale = 1.0;
  for (int k = 1; k < static_cast<int>(levels_.size()); ++k) {
    scale /= static_cast<double>(n);
    out.level(k) = levels_[static_cast<std::size_t>(k)];
    out.level(k).scale(scale);
  }
  return out;
}

namespace {

std::size_t included_samples(const SampledSequence& seq, long n, double t) {
  if (t < 0.0) throw std::invalid_argument("time must be >= 0");
  const double x = t * static_cast<double>(n);
  const auto k = static_cast<std::size_t>(std::ceil(x - 1e-9));
  if (k > seq.size())
    throw std::invalid_argument("iterated sum needs " + std::to_string(k) + " samples, got " +
                                std::to_string(seq.size()));
  return k;
}

double log_binomial(std::size_t n, int k) {
  return std::lgamma(static_cast<double>(n) + 1.0) - std::lgamma(static_cast<double>(k) + 1.0) -
         std::lgamma(static_cast<double>(n - static_cast<std::size_t>(k)) + 1.0);
}

}  // namespace

SignatureStack iterated_sum_direct(const SampledSequence& seq, int top_level, long n, double t,
                                   bool allow_large) {
  if (top_level < 1) throw std::invalid_argument("level must be >= 1");
  const std::size_t count = included_samples(seq, n, t);
  if (count >= static_cast<std::size_t>(top_level) &&
      log_binomial(count, top_level) > std::log(2e7) && !allow_large)
    throw std::invalid_argument("direct enumeration too large: C(" + std::to_string(count) + "," +
                                std::to_string(top_level) + ") tuples; use the override to force");

  const int d = seq.dim();
  SignatureStack out(d, top_level);
  out.set_time(t);

  // DFS over strictly increasing tuples; the partial product at depth j is
  // added to level j, so every j-prefix contributes exactly once.
  std::vector<LevelTensor> partial;  // partial[j]: product of the chosen j factors
  partial.reserve(static_cast<std::size_t>(top_level) + 1);
  partial.emplace_back(LevelTensor::scalar(d, 1.0));

  struct Frame {
    std::size_t next;
  };
  std::vector<Frame> stack;
  stack.push_back({0});
  while (!stack.empty()) {
    Frame& f = stack.back();
    const int depth = static_cast<int>(stack.size()) - 1;
    if (depth == top_level || f.next >= count) {
      stack.pop_back();
      partial.pop_back();
      if (!stack.empty()) ++stack.back().next;
      continue;
    }
    const std::size_t k = f.next;
    LevelTensor prod = tensor_product(partial.back(), LevelTensor::from_vector(d, seq.sample(k)));
    add_scaled(out.level(depth + 1), prod, 1.0);
    partial.push_back(std::move(prod));
    stack.push_back({k + 1});
  }

  double scale = 1.0;
  for (int k = 1; k <= top_level; ++k) {
    scale /= static_cast<double>(n);
    out.level(k).scale(scale);
  }
  return out;
}

std::vector<SignatureStack> iterated_sum_stream(const SampledSequence& seq, int top_level, long n,
                                                std::span<const double> t_grid) {
  if (top_level < 1) throw std::invalid_argument("level must be >= 1");
  for (std::size_t i = 0; i + 1 < t_grid.size(); ++i)
    if (t_grid[i] > t_grid[i + 1]) throw std::invalid_argument("time grid must be ascending");

  // Integer prefix counts needed: floor and floor+1 around each grid time.
  struct Request {
    std::size_t lo, hi;
    double lambda;
  };
  std::vector<Request> reqs;
  reqs.reserve(t_grid.size());
  std::size_t max_needed = 0;
  for (double t : t_grid) {
    if (t < 0.0) throw std::invalid_argument("time must be >= 0");
    const double x = t * static_cast<double>(n);
    auto lo = static_cast<std::size_t>(std::floor(x + 1e-9));
    double lambda = x - static_cast<double>(lo);
    if (lambda <= 1e-9) lambda = 0.0;
    const std::size_t hi = lambda > 0.0 ? lo + 1 : lo;
    if (hi > seq.size())
      throw std::invalid_argument("stream needs " + std::to_string(hi) + " samples, got " +
                                  std::to_string(seq.size()));
    reqs.push_back({lo, hi, lambda});
    max_needed = std::max(max_needed, hi);
  }

  std::vector<std::size_t> snap_counts;
  for (const auto& r : reqs) {
    snap_counts.push_back(r.lo);
    snap_counts.push_back(r.hi);
  }
  std::sort(snap_counts.begin(), snap_counts.end());
  snap_counts.erase(std::unique(snap_counts.begin(), snap_counts.end()), snap_counts.end());

  StreamAccumulator acc(seq.dim(), top_level);
  std::vector<std::vector<LevelTensor>> snaps(snap_counts.size());
  auto maybe_snap = [&](std::size_t m) {
    auto it = std::lower_bound(snap_counts.begin(), snap_counts.end(), m);
    if (it != snap_counts.end() && *it == m) {
      std::vector<LevelTensor> s;
      for (int k = 0; k <= top_level; ++k) s.push_back(acc.level(k));
      snaps[static_cast<std::size_t>(it - snap_counts.begin())] = std::move(s);
    }
  };
  maybe_snap(0);
  for (std::size_t m = 0; m < max_needed; ++m) {
    acc.append(seq.sample(m));
    maybe_snap(m + 1);
  }

  auto snap_at = [&](std::size_t m) -> const std::vector<LevelTensor>& {
    auto it = std::lower_bound(snap_counts.begin(), snap_counts.end(), m);
    return snaps[static_cast<std::size_t>(it - snap_counts.begin())];
  };

  std::vector<SignatureStack> out;
  out.reserve(t_grid.size());
  for (std::size_t i = 0; i < t_grid.size(); ++i) {
    const auto& r = reqs[i];
    SignatureStack s(seq.dim(), top_level);
    s.set_time(t_grid[i]);
    double scale = 1.0;
    for (int k = 1; k <= top_level; ++k) {
      scale /= static_cast<double>(n);
      LevelTensor v = snap_at(r.lo)[static_cast<std::size_t>(k)];
      if (r.lambda > 0.0) {
        v.scale(1.0 - r.lambda);
        add_scaled(v, snap_at(r.hi)[static_cast<std::size_t>(k)], r.lambda);
      }
      v.scale(scale);
      s.level(k) = std::move(v);
    }
    out.push_back(std::move(s));
  }
  return out;
}

std::vector<SignatureStack> phi_map_quadrature(const PiecewisePath& gamma, int top_level, double h) {
  if (!(h > 0.0)) throw std::invalid_argument("quadrature step must be positive");
  const double T = gamma.horizon();
  std::vector<double> grid(gamma.knots().begin(), gamma.knots().end());
  for (double u = h; u < T; u += h) grid.push_back(u);
  std::sort(grid.begin(), grid.end());
  grid.erase(std::unique(grid.begin(), grid.end(),
                         [&](double a, double b) { return std::abs(a - b) < 1e-12 * std::max(1.0, T); }),
             grid.end());
  grid.back() = T;

  const int d = gamma.dim();
  std::vector<SignatureStack> out;
  out.reserve(grid.size());
  SignatureStack cur(d, top_level);
  out.push_back(cur);
  std::vector<double> prev_val = gamma.at(0.0);
  for (std::size_t i = 1; i < grid.size(); ++i) {
    std::vector<double> next_val = gamma.at(grid[i]);
    // Left-endpoint rule: lower level frozen at the cell start, so update
    // descends through the levels.
    for (int k = top_level; k >= 1; --k) {
      LevelTensor& acc = cur.level(k);
      const LevelTensor& prev = cur.level(k - 1);
      const std::size_t nd = static_cast<std::size_t>(d);
      for (std::size_t p = 0; p < prev.size(); ++p) {
        const double pv = prev[p];
        if (pv == 0.0) continue;
        double* dst = acc.data().data() + p * nd;
        for (std::size_t c = 0; c < nd; ++c) dst[c] += pv * (next_val[c] - prev_val[c]);
      }
    }
    cur.set_time(grid[i]);
    prev_val = std::move(next_val);
    out.push_back(cur);
  }
  return out;
}

std::vector<SignatureStack> phi_map_exact(const PiecewisePath& gamma, int top_level) {
  const int d = gamma.dim();
  std::vector<SignatureStack> out;
  out.reserve(gamma.knot_count());
  SignatureStack cur(d, top_level);
  out.push_back(cur);
  for (std::size_t i = 0; i < gamma.segment_count(); ++i) {
    auto slope = gamma.segment_slope(i);
    const double dt = gamma.knot(i + 1) - gamma.knot(i);
    cur = chen_concat(cur, segment_signature(slope, dt, top_level));
    cur.set_time(gamma.knot(i + 1));
    out.push_back(cur);
  }
  return out;
}

SignatureStack signature_of_sequence(const SampledSequence& seq, int top_level, long n, double t) {
  if (!(t > 0.0)) throw std::invalid_argument("time must be positive");
  PiecewisePath path = phi_n_from_sequence(seq, n, t);
  auto stacks = phi_map_exact(path, top_level);
  return stacks.back();
}

double coordinate_extract(const SignatureStack& stack, std::span<const int> indices) {
  const int k = static_cast<int>(indices.size());
  if (k > stack.top_level())
    throw std::invalid_argument("coordinate level " + std::to_string(k) + " exceeds stack level " +
                                std::to_string(stack.top_level()));
  return stack.level(k).at(indices);
}

double signature_sup_distance(const PiecewisePath& a, const PiecewisePath& b, int top_level,
                              int refine) {
  if (a.dim() != b.dim()) throw std::invalid_argument("signature_sup_distance dim mismatch");
  std::vector<double> ts(a.knots().begin(), a.knots().end());
  ts.insert(ts.end(), b.knots().begin(), b.knots().end());
  std::sort(ts.begin(), ts.end());
  const double T = std::min(a.horizon(), b.horizon());
  ts.erase(std::unique(ts.begin(), ts.end(),
                       [&](double x, double y) { return std::abs(x - y) < 1e-14 * std::max(1.0, T); }),
           ts.end());

  auto rebuild = [&](const PiecewisePath& p) {
    std::vector<double> vals;
    vals.reserve(ts.size() * static_cast<std::size_t>(p.dim()));
    for (double t : ts) {
      auto v = p.at(std::min(t, p.horizon()));
      vals.insert(vals.end(), v.begin(), v.end());
    }
    return PiecewisePath(p.dim(), ts, std::move(vals)).refined(refine);
  };
  PiecewisePath pa = rebuild(a);
  PiecewisePath pb = rebuild(b);
  auto sa = phi_map_exact(pa, top_level);
  auto sb = phi_map_exact(pb, top_level);
  double best = 0.0;
  for (std::size_t i = 0; i < sa.size(); ++i)
    best = std::max(best, max_abs_diff(sa[i].level(top_level), sb[i].level(top_level)));
  return best;
}

}  // namespace sigld
