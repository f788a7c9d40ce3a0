#include "sigld/diagnostics.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "sigld/rng.hpp"
#include "sigld/signature.hpp"
#include "sigld/tensor.hpp"

namespace sigld {

namespace {

double factorial(int k) {
  double f = 1.0;
  for (int i = 2; i <= k; ++i) f *= i;
  return f;
}

double median(std::vector<double> v) {
  if (v.empty()) return 0.0;
  std::sort(v.begin(), v.end());
  const std::size_t m = v.size() / 2;
  return v.size() % 2 ? v[m] : 0.5 * (v[m - 1] + v[m]);
}

// straight line with slope s in coordinate 0
PiecewisePath line_path(int dim, double T, double s) {
  std::vector<double> knots{0.0, T};
  std::vector<double> vals(2 * static_cast<std::size_t>(dim), 0.0);
  vals[static_cast<std::size_t>(dim)] = s * T;
  return PiecewisePath(dim, std::move(knots), std::move(vals));
}

}  // namespace

HolderReport holder_suite(int level, int dim, double T, std::span<const double> eps2_list,
                          int trials, PerturbMode mode, std::uint64_t seed) {
  if (level < 1) throw std::invalid_argument("level must be >= 1");
  for (double e : eps2_list)
    if (!(e > 0.0) || e > 1.0) throw std::invalid_argument("eps2 values must lie in (0, 1]");

  HolderReport rep;
  rep.mode = mode;
  rep.decades.assign(eps2_list.begin(), eps2_list.end());
  std::sort(rep.decades.rbegin(), rep.decades.rend());
  rep.decades.erase(std::unique(rep.decades.begin(), rep.decades.end()), rep.decades.end());

  std::vector<std::vector<double>> per_decade_ratios(rep.decades.size());
  std::uint64_t trial_id = 0;
  for (std::size_t di = 0; di < rep.decades.size(); ++di) {
    const double eps2 = rep.decades[di];
    for (int t = 0; t < trials; ++t, ++trial_id) {
      Rng rng(derive_seed(seed, trial_id));
      PiecewisePath base = (mode == PerturbMode::adversarial)
                               ? line_path(dim, T, 0.45 + 0.05 * rng.uniform01())
                               : random_h_path(dim, T, 0.5, rng);
      PiecewisePath other = perturb_in_h(base, eps2, derive_seed(seed, trial_id ^ 0xFEED),
                                         mode);
      // membership and distance are certified before measuring
      if (base.lipschitz() > 1.0 + PiecewisePath::kLipTol ||
          other.lipschitz() > 1.0 + PiecewisePath::kLipTol)
        throw std::runtime_error("holder pair left H");
      HolderTrial tr;
      tr.eps2 = eps2;
      tr.s = sup_distance(base, other);
      if (tr.s > eps2 * (1.0 + 1e-9)) throw std::runtime_error("holder pair distance exceeds eps2");
      tr.dist = signature_sup_distance(base, other, level);
      tr.ratio = tr.s > 0.0 ? tr.dist / std::sqrt(tr.s) : 0.0;
      rep.max_ratio = std::max(rep.max_ratio, tr.ratio);
      if (tr.s > 0.0) per_decade_ratios[di].push_back(tr.ratio);
      rep.trials.push_back(tr);
    }
  }

  for (auto& v : per_decade_ratios) rep.decade_median_ratio.push_back(median(v));

  // log-log fit of dist vs measured path distance
  double sx = 0.0, sy = 0.0, sxx = 0.0, sxy = 0.0;
  int used = 0;
  for (const auto& tr : rep.trials) {
    if (!(tr.s > 0.0) || !(tr.dist > 0.0)) continue;
    const double x = std::log(tr.s), y = std::log(tr.dist);
    sx += x;
    sy += y;
    sxx += x * x;
    sxy += x * y;
    ++used;
  }
  if (used >= 2) {
    const double det = used * sxx - sx * sx;
    if (std::abs(det) > 1e-30) {
      rep.exponent = (used * sxy - sx * sy) / det;
      double ss_res = 0.0;
      const double intercept = (sy - rep.exponent * sx) / used;
      for (const auto& tr : rep.trials) {
        if (!(tr.s > 0.0) || !(tr.dist > 0.0)) continue;
        const double r = std::log(tr.dist) - intercept - rep.exponent * std::log(tr.s);
        ss_res += r * r;
      }
      if (used > 2)
        rep.exponent_stderr = std::sqrt(ss_res / (used - 2) * used / det);
    }
  }
  return rep;
}

LlnReport lln_suite(const StepLawModel& model, int level, double T, std::span<const long> n_list,
                    int reps, std::uint64_t seed) {
  if (level < 1) throw std::invalid_argument("level must be >= 1");
  if (reps < 1) throw std::invalid_argument("reps must be >= 1");
  const int d = model.dim();
  auto q = model.mean_vector();
  LevelTensor q_pow = tensor_power(LevelTensor::from_vector(d, q), level);
  LlnReport rep;
  rep.limit_factor.assign(q_pow.data().begin(), q_pow.data().end());

  const int grid_points = 8;
  for (std::size_t ni = 0; ni < n_list.size(); ++ni) {
    const long n = n_list[ni];
    const auto samples = static_cast<std::size_t>(std::ceil(T * static_cast<double>(n) - 1e-9));
    std::vector<double> errors;
    double max_err = 0.0;
    for (int r = 0; r < reps; ++r) {
      auto seq = model.sample_sequence(samples, derive_seed(seed, ni * 1000003ull +
                                                                       static_cast<std::uint64_t>(r)));
      PiecewisePath path = phi_n_from_sequence(seq, n, T);
      auto stacks = phi_map_exact(path, level);
      double err = 0.0;
      for (int g = 1; g <= grid_points; ++g) {
        // nearest knot to the grid fraction keeps the comparison exact
        const double want = T * static_cast<double>(g) / grid_points;
        auto ki = static_cast<std::size_t>(std::llround(want / T * static_cast<double>(path.segment_count())));
        ki = std::min(ki, stacks.size() - 1);
        const double t = path.knot(ki);
        LevelTensor limit = q_pow;
        limit.scale(std::pow(t, level) / factorial(level));
        err = std::max(err, max_abs_diff(stacks[ki].level(level), limit));
      }
      errors.push_back(err);
      max_err = std::max(max_err, err);
    }
    rep.per_n.push_back({n, median(errors), max_err});
  }

  double sx = 0.0, sy = 0.0, sxx = 0.0, sxy = 0.0;
  int used = 0;
  for (const auto& p : rep.per_n) {
    if (!(p.median_error > 0.0)) continue;
    const double x = std::log(static_cast<double>(p.n)), y = std::log(p.median_error);
    sx += x;
    sy += y;
    sxx += x * x;
    sxy += x * y;
    ++used;
  }
  if (used >= 2) {
    const double det = used * sxx - sx * sx;
    if (std::abs(det) > 1e-30) {
      rep.decay_exponent = -(used * sxy - sx * sy) / det;
      rep.exponent_fitted = true;
    }
  }
  return rep;
}

RegularityReport regularity_suite(int level, int dim, double T, int trials, std::uint64_t seed) {
  if (level < 1) throw std::invalid_argument("level must be >= 1");
  RegularityReport rep;
  rep.trials = trials;
  const double slack_tol = 1e-9;
  const double lip_const = std::pow(T, level - 1) / factorial(level - 1);

  for (int t = 0; t < trials; ++t) {
    Rng rng(derive_seed(seed, static_cast<std::uint64_t>(t)));
    PiecewisePath path = random_h_path(dim, T, 1.0, rng);
    auto stacks = phi_map_exact(path, level);
    for (std::size_t i = 0; i < stacks.size(); ++i) {
      const double ti = stacks[i].time();
      for (int k = 1; k <= level; ++k) {
        const double bound = std::pow(ti, k) / factorial(k);
        const double slack = bound - sup_norm(stacks[i].level(k));
        rep.worst_level_slack = std::min(rep.worst_level_slack, slack);
        if (slack < -slack_tol) ++rep.level_bound_violations;
      }
      for (std::size_t j = 0; j < i; ++j) {
        const double dt = stacks[i].time() - stacks[j].time();
        const double diff = max_abs_diff(stacks[i].level(level), stacks[j].level(level));
        const double slack = lip_const * dt - diff;
        rep.worst_lipschitz_slack = std::min(rep.worst_lipschitz_slack, slack);
        if (slack < -slack_tol) ++rep.time_lipschitz_violations;
      }
    }
  }

  // the slope-1 straight line attains the level bound
  PiecewisePath extremal = line_path(1, T, 1.0);
  auto stacks = phi_map_exact(extremal, level);
  rep.extremal_gap =
      std::abs(std::pow(T, level) / factorial(level) - sup_norm(stacks.back().level(level)));
  return rep;
}

}  // namespace sigld
