#include "sigld/mcprobe.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <stdexcept>
#include <thread>

#include "sigld/rng.hpp"
#include "sigld/signature.hpp"

namespace sigld {

namespace {

struct TiltSchedule {
  // per solver segment: tilt vector and its log-MGF value
  std::vector<std::vector<double>> lambda;
  std::vector<double> log_mgf;
  int segments = 0;
};

// One trial in eight draws from the untilted law; weights use the exact
// mixture likelihood ratio 1/(alpha + (1-alpha) q_lambda/p). A pure
// single-tilt ratio under-counts by the mass of modes the tilt misses
// (e.g. the mirrored mode of even-level d=1 targets), which shows up as a
// factor-2 bias against the binomial oracle. alpha = 1/8 is exact in
// binary, so a zero tilt still reproduces the naive estimator bit-for-bit.
constexpr double kDefensiveFraction = 0.125;
constexpr long kDefensivePeriod = 8;

// One Monte Carlo pass at fixed n. Batches are summed sequentially in trial
// order and combined in batch order, so the result is independent of the
// thread layout.
ProbePoint run_point(const ProbeConfig& cfg, const TiltSchedule* tilt, long n,
                     std::uint64_t point_seed, int threads) {
  const int d = cfg.model.dim();
  const int nu = cfg.level;
  const double x = cfg.horizon * static_cast<double>(n);
  const auto full = static_cast<std::size_t>(std::floor(x + 1e-9));
  double frac = x - static_cast<double>(full);
  if (frac <= 1e-9) frac = 0.0;
  const std::size_t samples = full + (frac > 0.0 ? 1 : 0);
  const int batches = std::max(8, cfg.batches);
  long per_batch = std::max<long>(1, (cfg.trials + batches - 1) / batches);
  // keep every batch's defensive stratum identical
  per_batch = ((per_batch + kDefensivePeriod - 1) / kDefensivePeriod) * kDefensivePeriod;
  const long trials_eff = per_batch * batches;

  std::vector<double> batch_sum(static_cast<std::size_t>(batches), 0.0);
  std::vector<long> batch_hits(static_cast<std::size_t>(batches), 0);

  auto run_batch = [&](int b) {
    StreamAccumulator acc(d, nu);
    std::vector<double> sample(static_cast<std::size_t>(d));
    std::vector<LevelTensor> at_full;  // prefix snapshot when T n is fractional
    double sum = 0.0;
    long hits = 0;
    for (long j = 0; j < per_batch; ++j) {
      const long trial = static_cast<long>(b) * per_batch + j;
      const std::uint64_t trial_seed = derive_seed(point_seed, static_cast<std::uint64_t>(trial));
      acc.reset();
      at_full.clear();
      double log_lr = 0.0;
      if (frac > 0.0 && full == 0)  // fractional first step: empty prefix
        for (int lv = 0; lv <= nu; ++lv) at_full.push_back(acc.level(lv));
      auto snapshot_if_full = [&](std::size_t k) {
        if (frac > 0.0 && k + 1 == full)
          for (int lv = 0; lv <= nu; ++lv) at_full.push_back(acc.level(lv));
      };
      if (!tilt) {
        // consumes the stream exactly like the tilted loop at lambda = 0
        auto seq = cfg.model.sample_sequence(samples, trial_seed);
        for (std::size_t k = 0; k < samples; ++k) {
          acc.append(seq.sample(k));
          snapshot_if_full(k);
        }
      } else {
        Rng rng(trial_seed);
        const bool defensive = trial % kDefensivePeriod == 0;
        const std::vector<double> zero(static_cast<std::size_t>(d), 0.0);
        for (std::size_t k = 0; k < samples; ++k) {
          const double tk = static_cast<double>(k) / static_cast<double>(n);
          auto seg = static_cast<std::size_t>(tk / cfg.horizon * tilt->segments);
          seg = std::min(seg, static_cast<std::size_t>(tilt->segments - 1));
          const auto& lam = tilt->lambda[seg];
          cfg.model.draw_tilted(defensive ? std::span<const double>(zero)
                                          : std::span<const double>(lam),
                                rng, sample);
          // log q_lambda/p of the drawn sequence, whichever component drew it
          double dot = 0.0;
          for (int c = 0; c < d; ++c)
            dot += lam[static_cast<std::size_t>(c)] * sample[static_cast<std::size_t>(c)];
          log_lr += tilt->log_mgf[seg] - dot;
          acc.append(sample);
          snapshot_if_full(k);
        }
      }
      auto stack = acc.normalized(n, cfg.horizon);
      if (frac > 0.0) {
        // linear interpolation between the integer prefix counts around T n
        double scale = 1.0;
        for (int lv = 1; lv <= nu; ++lv) {
          scale /= static_cast<double>(n);
          LevelTensor blend = at_full[static_cast<std::size_t>(lv)];
          blend.scale((1.0 - frac) * scale);
          add_scaled(blend, stack.level(lv), frac);
          stack.level(lv) = std::move(blend);
        }
      }
      const bool hit = max_abs_diff(stack.level(nu), cfg.target) <= cfg.delta;
      if (hit) {
        ++hits;
        sum += tilt ? 1.0 / (kDefensiveFraction +
                             (1.0 - kDefensiveFraction) * std::exp(-log_lr))
                    : 1.0;
      }
    }
    batch_sum[static_cast<std::size_t>(b)] = sum;
    batch_hits[static_cast<std::size_t>(b)] = hits;
  };

  const int nthreads = std::max(1, threads);
  if (nthreads == 1) {
    for (int b = 0; b < batches; ++b) run_batch(b);
  } else {
    std::atomic<int> cursor{0};
    std::vector<std::thread> pool;
    for (int w = 0; w < std::min(nthreads, batches); ++w)
      pool.emplace_back([&]() {
        for (;;) {
          const int b = cursor.fetch_add(1);
          if (b >= batches) return;
          run_batch(b);
        }
      });
    for (auto& th : pool) th.join();
  }

  ProbePoint out;
  out.n = n;
  double total = 0.0;
  long hits = 0;
  for (int b = 0; b < batches; ++b) {
    total += batch_sum[static_cast<std::size_t>(b)];
    hits += batch_hits[static_cast<std::size_t>(b)];
  }
  out.hits = hits;
  out.p_hat = total / static_cast<double>(trials_eff);
  double var = 0.0;
  for (int b = 0; b < batches; ++b) {
    const double bm = batch_sum[static_cast<std::size_t>(b)] / static_cast<double>(per_batch);
    var += (bm - out.p_hat) * (bm - out.p_hat);
  }
  out.std_error = std::sqrt(var / (static_cast<double>(batches) * (batches - 1.0)));
  out.resolved = hits > 0 && out.p_hat > 0.0 && out.std_error < 0.5 * out.p_hat;
  if (out.resolved) out.slope = -std::log(out.p_hat) / static_cast<double>(n);
  return out;
}

void fit_slope(LDPEstimate& est) {
  // weighted least squares of -log p_n = a + s*n; weights from the delta
  // method, var(log p) ~ (se/p)^2
  double sw = 0.0, swx = 0.0, swy = 0.0, swxx = 0.0, swxy = 0.0;
  int used = 0;
  for (const auto& p : est.per_n) {
    if (!p.resolved) continue;
    const double x = static_cast<double>(p.n);
    const double y = -std::log(p.p_hat);
    const double rel = p.std_error / p.p_hat;
    const double w = 1.0 / std::max(1e-12, rel * rel);
    sw += w;
    swx += w * x;
    swy += w * y;
    swxx += w * x * x;
    swxy += w * x * y;
    ++used;
  }
  if (used < 2) {
    est.slope_resolved = false;
    return;
  }
  const double det = sw * swxx - swx * swx;
  if (std::abs(det) < 1e-30) {
    est.slope_resolved = false;
    return;
  }
  est.fitted_slope = (sw * swxy - swx * swy) / det;
  est.fitted_intercept = (swxx * swy - swx * swxy) / det;
  est.fitted_slope_err = std::sqrt(sw / det);
  est.slope_resolved = true;
}

LDPEstimate run_estimate(const ProbeConfig& cfg, const TiltSchedule* tilt, int threads) {
  if (cfg.level < 1) throw std::invalid_argument("level must be >= 1");
  if (!(cfg.delta > 0.0)) throw std::invalid_argument("ball radius must be positive");
  if (cfg.n_list.empty()) throw std::invalid_argument("n schedule must be nonempty");
  if (!cfg.allow_large_run) {
    for (long n : cfg.n_list)
      if (n > 500)
        throw std::invalid_argument("n = " + std::to_string(n) +
                                    " exceeds the desk-scale cap of 500; set allow_large_run");
    if (cfg.trials > 10000000)
      throw std::invalid_argument("trials exceed the desk-scale cap of 1e7; set allow_large_run");
  }
  if (cfg.target.dim() != cfg.model.dim() || cfg.target.level() != cfg.level)
    throw std::invalid_argument("probe target tensor shape mismatch");
  LDPEstimate est;
  est.method = tilt ? "tilted" : "naive";
  est.delta = cfg.delta;
  est.seed = cfg.seed;
  for (std::size_t i = 0; i < cfg.n_list.size(); ++i) {
    const auto point_seed = derive_seed(cfg.seed, i);
    est.per_n.push_back(run_point(cfg, tilt, cfg.n_list[i], point_seed, threads));
  }
  fit_slope(est);
  return est;
}

}  // namespace

LDPEstimate estimate_naive(const ProbeConfig& cfg, int threads) {
  return run_estimate(cfg, nullptr, threads);
}

LDPEstimate estimate_tilted(const ProbeConfig& cfg, const RateSolution& solution, int threads) {
  if (!cfg.model.iid()) throw std::invalid_argument("tilted estimation needs an i.i.d. model");
  if (!solution.converged)
    throw std::invalid_argument("tilted estimation rejects a non-converged rate solution");
  const int d = cfg.model.dim();
  if (solution.profile.empty() || solution.profile.size() % static_cast<std::size_t>(d) != 0)
    throw std::invalid_argument("tilt profile length is not a multiple of dim");

  CramerTransform ct(cfg.model);
  TiltSchedule tilt;
  tilt.segments = static_cast<int>(solution.profile.size() / static_cast<std::size_t>(d));
  for (int i = 0; i < tilt.segments; ++i) {
    std::span<const double> v{solution.profile.data() +
                                  static_cast<std::size_t>(i) * static_cast<std::size_t>(d),
                              static_cast<std::size_t>(d)};
    auto lam = ct.tilt_for_slope(v);
    tilt.log_mgf.push_back(cfg.model.log_mgf(lam));
    tilt.lambda.push_back(std::move(lam));
  }
  return run_estimate(cfg, &tilt, threads);
}

ComparisonRecord slope_vs_rate_report(const LDPEstimate& est, double envelope_value,
                                      double point_rate_value, double rel_tol, double abs_tol) {
  ComparisonRecord rec;
  rec.envelope = envelope_value;
  rec.point_rate = point_rate_value;
  rec.rel_tol = rel_tol;
  rec.abs_tol = abs_tol;
  if (!est.slope_resolved) {
    rec.verdict = "unresolved";
    return rec;
  }
  rec.fitted_slope = est.fitted_slope;
  const double lo = envelope_value * (1.0 - rel_tol) - abs_tol;
  const double hi = point_rate_value * (1.0 + rel_tol) + abs_tol;
  rec.verdict = (rec.fitted_slope >= lo && rec.fitted_slope <= hi) ? "consistent" : "inconsistent";
  return rec;
}

}  // namespace sigld
