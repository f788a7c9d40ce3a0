#include "sigld/rate.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <stdexcept>
#include <thread>

#include "sigld/optim.hpp"
#include "sigld/rng.hpp"
#include "sigld/signature.hpp"

namespace sigld {

namespace {

double factorial(int k) {
  double f = 1.0;
  for (int i = 2; i <= k; ++i) f *= i;
  return f;
}

// Scalar stationarity solve for product laws: Lambda restricted to one
// coordinate is smooth with strictly increasing derivative, so bisection on
// [-cap, cap] is enough.
struct ScalarLaw {
  const StepLawModel* model;
  int coord;

  double deriv(double lambda) const {
    std::vector<double> l(static_cast<std::size_t>(model->dim()), 0.0);
    l[static_cast<std::size_t>(coord)] = lambda;
    return model->log_mgf_gradient(l)[static_cast<std::size_t>(coord)];
  }
  double value(double lambda) const {
    std::vector<double> l(static_cast<std::size_t>(model->dim()), 0.0);
    l[static_cast<std::size_t>(coord)] = lambda;
    return model->log_mgf(l);
  }
};

}  // namespace

CramerTransform::CramerTransform(StepLawModel model) : model_(std::move(model)) {
  if (!model_.iid())
    throw std::invalid_argument("Cramer transform requires an i.i.d. model; got " +
                                to_string(model_.kind()));
  lo_.resize(static_cast<std::size_t>(model_.dim()));
  hi_.resize(static_cast<std::size_t>(model_.dim()));
  model_.support_box(lo_, hi_);
}

void CramerTransform::domain(std::span<double> lo, std::span<double> hi) const {
  std::copy(lo_.begin(), lo_.end(), lo.begin());
  std::copy(hi_.begin(), hi_.end(), hi.begin());
}

LegendreResult CramerTransform::legendre_full(std::span<const double> x) const {
  const int d = model_.dim();
  if (static_cast<int>(x.size()) != d) throw std::invalid_argument("legendre point dim mismatch");
  LegendreResult out;
  out.maximizer.assign(static_cast<std::size_t>(d), 0.0);
  for (int c = 0; c < d; ++c) {
    if (x[static_cast<std::size_t>(c)] < lo_[static_cast<std::size_t>(c)] - 1e-12 ||
        x[static_cast<std::size_t>(c)] > hi_[static_cast<std::size_t>(c)] + 1e-12) {
      out.infinite = true;
      out.value = kInfiniteRate;
      return out;
    }
  }

  const bool product_law =
      model_.kind() == ModelKind::iid_rademacher || model_.kind() == ModelKind::iid_uniform;
  if (product_law) {
    double total = 0.0;
    for (int c = 0; c < d; ++c) {
      const double xc = std::clamp(x[static_cast<std::size_t>(c)], lo_[static_cast<std::size_t>(c)],
                                   hi_[static_cast<std::size_t>(c)]);
      const ScalarLaw law{&model_, c};
      const double boundary_tol = 1e-12;
      if (model_.kind() == ModelKind::iid_rademacher &&
          (xc >= hi_[static_cast<std::size_t>(c)] - boundary_tol ||
           xc <= lo_[static_cast<std::size_t>(c)] + boundary_tol)) {
        // two-point law boundary: the exact limit is log of the inverse mass
        total += std::log(2.0);
        out.maximizer[static_cast<std::size_t>(c)] = xc > 0 ? kLambdaCap : -kLambdaCap;
        out.capped = true;
        continue;
      }
      double a = -kLambdaCap, b = kLambdaCap;
      if (law.deriv(a) >= xc) {
        out.maximizer[static_cast<std::size_t>(c)] = a;
        out.capped = true;
        total += a * xc - law.value(a);
        continue;
      }
      if (law.deriv(b) <= xc) {
        out.maximizer[static_cast<std::size_t>(c)] = b;
        out.capped = true;
        total += b * xc - law.value(b);
        continue;
      }
      for (int it = 0; it < 200; ++it) {
        const double mid = 0.5 * (a + b);
        if (law.deriv(mid) < xc)
          a = mid;
        else
          b = mid;
        if (b - a < 1e-14 * std::max(1.0, std::abs(a) + std::abs(b))) break;
      }
      double lam = 0.5 * (a + b);
      if (std::abs(lam) < 1e-12) lam = 0.0;  // snap: keeps Lambda*(mean) exactly 0
      out.maximizer[static_cast<std::size_t>(c)] = lam;
      total += lam * xc - law.value(lam);
    }
    out.value = std::max(0.0, total);
    return out;
  }

  // joint discrete law: two-point boundary handled exactly, otherwise a
  // projected concave ascent on <lambda,x> - Lambda(lambda)
  if (model_.support().size() == 2) {
    for (std::size_t i = 0; i < 2; ++i) {
      double dist = 0.0;
      std::vector<double> pt = model_.support()[i];
      if (model_.centered()) {
        auto q = model_.base_mean();
        for (int c = 0; c < d; ++c) pt[static_cast<std::size_t>(c)] -= q[static_cast<std::size_t>(c)];
      }
      for (int c = 0; c < d; ++c)
        dist = std::max(dist, std::abs(x[static_cast<std::size_t>(c)] - pt[static_cast<std::size_t>(c)]));
      if (dist <= 1e-9) {
        out.value = -std::log(model_.probs()[i]);
        out.capped = true;
        for (int c = 0; c < d; ++c)
          out.maximizer[static_cast<std::size_t>(c)] =
              pt[static_cast<std::size_t>(c)] >= 0 ? kLambdaCap : -kLambdaCap;
        return out;
      }
    }
  }

  std::vector<double> lo(static_cast<std::size_t>(d), -kLambdaCap);
  std::vector<double> hi(static_cast<std::size_t>(d), kLambdaCap);
  std::vector<double> xcopy(x.begin(), x.end());
  auto neg_dual = [&](std::span<const double> lam, std::span<double> grad) {
    const double lm = model_.log_mgf(lam);
    auto g = model_.log_mgf_gradient(lam);
    double v = -lm;
    for (int c = 0; c < d; ++c) {
      v += lam[static_cast<std::size_t>(c)] * xcopy[static_cast<std::size_t>(c)];
      grad[static_cast<std::size_t>(c)] = g[static_cast<std::size_t>(c)] - xcopy[static_cast<std::size_t>(c)];
    }
    return -v;
  };
  auto res = minimize_box(neg_dual, std::vector<double>(static_cast<std::size_t>(d), 0.0), lo, hi,
                          1e-11, 500);
  out.value = std::max(0.0, -res.value);
  out.maximizer = res.x;
  for (double l : res.x)
    if (std::abs(l) >= kLambdaCap - 1e-6) out.capped = true;
  return out;
}

double CramerTransform::legendre(std::span<const double> x) const { return legendre_full(x).value; }

std::vector<double> CramerTransform::tilt_for_slope(std::span<const double> v) const {
  return legendre_full(v).maximizer;
}

double path_rate(const PiecewisePath& gamma, const CramerTransform& ct) {
  if (gamma.dim() != ct.model().dim()) throw std::invalid_argument("path_rate dim mismatch");
  double total = 0.0;
  for (std::size_t i = 0; i < gamma.segment_count(); ++i) {
    auto slope = gamma.segment_slope(i);
    const double cost = ct.legendre(slope);
    if (std::isinf(cost)) return kInfiniteRate;
    total += cost * (gamma.knot(i + 1) - gamma.knot(i));
  }
  return total;
}

namespace {

// Forward sensitivity of the per-segment Chen recursion: the full stack and
// its derivative stacks w.r.t. every slope component, snapshotted at the
// target times.
class ConstraintEvaluator {
 public:
  ConstraintEvaluator(const RateProblem& prob) : prob_(prob) {
    d_ = prob.model.dim();
    m_ = prob.grid_segments;
    nu_ = prob.level;
    dt_ = prob.horizon / static_cast<double>(m_);
    if (prob.mode == TargetMode::endpoint) {
      targets_.push_back({m_, &prob.target});
    } else {
      if (prob.target_path.empty()) throw std::invalid_argument("path mode needs target points");
      for (const auto& [t, tensor] : prob.target_path) {
        const double idx = t / dt_;
        const auto seg = static_cast<int>(std::lround(idx));
        if (seg < 1 || seg > m_ || std::abs(idx - seg) > 1e-9 * std::max(1.0, prob.horizon))
          throw std::invalid_argument("path target time " + std::to_string(t) +
                                      " is not on the slope grid");
        targets_.push_back({seg, &tensor});
      }
    }
    block_ = level_size(d_, nu_);
    for (const auto& [seg, tensor] : targets_) {
      if (tensor->dim() != d_ || tensor->level() != nu_)
        throw std::invalid_argument("target tensor shape mismatch");
    }
  }

  std::size_t constraint_count() const { return targets_.size() * block_; }
  std::size_t var_count() const { return static_cast<std::size_t>(m_) * static_cast<std::size_t>(d_); }

  // c(v) and J = dc/dv (row-major: constraint p, variable q).
  void evaluate(std::span<const double> v, std::vector<double>& c, std::vector<double>& jac) const {
    const std::size_t nvars = var_count();
    c.assign(constraint_count(), 0.0);
    jac.assign(constraint_count() * nvars, 0.0);

    SignatureStack state(d_, nu_);
    std::vector<SignatureStack> deriv;  // one per variable already introduced
    deriv.reserve(nvars);

    std::size_t next_target = 0;
    for (int i = 0; i < m_; ++i) {
      std::span<const double> slope{v.data() + static_cast<std::size_t>(i) * static_cast<std::size_t>(d_),
                                    static_cast<std::size_t>(d_)};
      SignatureStack seg = segment_signature(slope, dt_, nu_);

      for (auto& ds : deriv) ds = chen_concat(ds, seg);
      for (int a = 0; a < d_; ++a) {
        SignatureStack dseg = segment_derivative(slope, a);
        deriv.push_back(chen_concat(state, dseg));
      }
      state = chen_concat(state, seg);

      while (next_target < targets_.size() && targets_[next_target].first == i + 1) {
        const std::size_t row0 = next_target * block_;
        const LevelTensor& top = state.level(nu_);
        const LevelTensor& want = *targets_[next_target].second;
        for (std::size_t p = 0; p < block_; ++p) c[row0 + p] = top[p] - want[p];
        for (std::size_t q = 0; q < deriv.size(); ++q) {
          const LevelTensor& dtop = deriv[q].level(nu_);
          for (std::size_t p = 0; p < block_; ++p) jac[(row0 + p) * nvars + q] = dtop[p];
        }
        ++next_target;
      }
    }
  }

 private:
  // d/dv_a of the segment signature: level k is
  // (1/k!) sum_p w^{(p-1)} (x) (e_a dt) (x) w^{(k-p)} with w = v dt.
  SignatureStack segment_derivative(std::span<const double> slope, int a) const {
    SignatureStack out(d_, nu_);
    out.level(0)[0] = 0.0;
    std::vector<double> wv(static_cast<std::size_t>(d_));
    for (int cdim = 0; cdim < d_; ++cdim)
      wv[static_cast<std::size_t>(cdim)] = slope[static_cast<std::size_t>(cdim)] * dt_;
    const LevelTensor w = LevelTensor::from_vector(d_, wv);
    std::vector<double> ev(static_cast<std::size_t>(d_), 0.0);
    ev[static_cast<std::size_t>(a)] = dt_;
    const LevelTensor e = LevelTensor::from_vector(d_, ev);

    std::vector<LevelTensor> pow;  // w^{(j)}
    pow.push_back(LevelTensor::scalar(d_, 1.0));
    for (int j = 1; j <= nu_; ++j) pow.push_back(tensor_product(pow.back(), w));

    for (int k = 1; k <= nu_; ++k) {
      LevelTensor acc(d_, k);
      for (int p = 1; p <= k; ++p) {
        LevelTensor term = tensor_product(pow[static_cast<std::size_t>(p - 1)], e);
        term = tensor_product(term, pow[static_cast<std::size_t>(k - p)]);
        add_scaled(acc, term, 1.0);
      }
      acc.scale(1.0 / factorial(k));
      out.level(k) = std::move(acc);
    }
    return out;
  }

  const RateProblem& prob_;
  int d_ = 1, m_ = 1, nu_ = 1;
  double dt_ = 1.0;
  std::size_t block_ = 1;
  std::vector<std::pair<int, const LevelTensor*>> targets_;  // (segment index, tensor)
};

struct SolveContext {
  const RateProblem* prob;
  const CramerTransform* ct;
  const ConstraintEvaluator* eval;
  std::vector<double> lo, hi;  // per-variable box (support hull per coordinate)
  double delta = 0.0;          // > 0: ball constraint instead of equality
};

double objective(const SolveContext& ctx, std::span<const double> v, std::span<double> grad) {
  const int d = ctx.prob->model.dim();
  const int m = ctx.prob->grid_segments;
  const double dt = ctx.prob->horizon / static_cast<double>(m);
  double total = 0.0;
  for (int i = 0; i < m; ++i) {
    std::span<const double> slope{v.data() + static_cast<std::size_t>(i) * static_cast<std::size_t>(d),
                                  static_cast<std::size_t>(d)};
    auto lr = ctx.ct->legendre_full(slope);
    total += lr.value * dt;
    if (!grad.empty())
      for (int c = 0; c < d; ++c)
        grad[static_cast<std::size_t>(i) * static_cast<std::size_t>(d) + static_cast<std::size_t>(c)] =
            lr.maximizer[static_cast<std::size_t>(c)] * dt;
  }
  return total;
}

struct StartResult {
  RateSolution sol;
  bool ok = false;
};

StartResult solve_from(const SolveContext& ctx, std::vector<double> v0) {
  const auto ncon = ctx.eval->constraint_count();
  const auto nvar = ctx.eval->var_count();
  const bool ball = ctx.delta > 0.0;

  std::vector<double> eta(ball ? 2 * ncon : ncon, 0.0);
  double mu = 10.0;
  std::vector<double> c, jac;
  std::vector<double> v = std::move(v0);
  for (std::size_t i = 0; i < nvar; ++i) v[i] = std::clamp(v[i], ctx.lo[i], ctx.hi[i]);

  double r_prev = kInfiniteRate;
  double inner_tol = 1e-3;
  StartResult out;
  RateSolution& sol = out.sol;

  for (int outer = 0; outer < ctx.prob->outer_max; ++outer) {
    auto al = [&](std::span<const double> x, std::span<double> grad) {
      double val = objective(ctx, x, grad);
      ctx.eval->evaluate(x, c, jac);
      // weights on the constraint rows: w_p = eta_p + mu * violation_p
      std::vector<double> w(ncon, 0.0);
      if (!ball) {
        for (std::size_t p = 0; p < ncon; ++p) {
          val += eta[p] * c[p] + 0.5 * mu * c[p] * c[p];
          w[p] = eta[p] + mu * c[p];
        }
      } else {
        for (std::size_t p = 0; p < ncon; ++p) {
          const double gu = c[p] - ctx.delta;   // <= 0
          const double gl = -c[p] - ctx.delta;  // <= 0
          const double au = std::max(0.0, eta[2 * p] + mu * gu);
          const double al_ = std::max(0.0, eta[2 * p + 1] + mu * gl);
          val += (au * au - eta[2 * p] * eta[2 * p] + al_ * al_ - eta[2 * p + 1] * eta[2 * p + 1]) /
                 (2.0 * mu);
          w[p] = au - al_;
        }
      }
      for (std::size_t q = 0; q < nvar; ++q) {
        double acc = 0.0;
        for (std::size_t p = 0; p < ncon; ++p) acc += jac[p * nvar + q] * w[p];
        grad[q] += acc;
      }
      return val;
    };

    auto res = minimize_box(al, v, ctx.lo, ctx.hi, inner_tol, ctx.prob->inner_max);
    v = res.x;

    ctx.eval->evaluate(v, c, jac);
    double r = 0.0;
    if (!ball) {
      for (double cp : c) r = std::max(r, std::abs(cp));
      for (std::size_t p = 0; p < ncon; ++p) eta[p] += mu * c[p];
    } else {
      for (std::size_t p = 0; p < ncon; ++p) {
        r = std::max(r, std::max(0.0, std::abs(c[p]) - ctx.delta));
        eta[2 * p] = std::max(0.0, eta[2 * p] + mu * (c[p] - ctx.delta));
        eta[2 * p + 1] = std::max(0.0, eta[2 * p + 1] + mu * (-c[p] - ctx.delta));
      }
    }

    sol.outer_iterations = outer + 1;
    sol.residual = r;
    if (r <= ctx.prob->residual_tol && inner_tol <= ctx.prob->stationarity_tol && res.converged) {
      sol.converged = true;
      break;
    }
    if (r > 0.5 * r_prev && outer > 0) mu = std::min(mu * 5.0, 1e10);
    r_prev = r;
    inner_tol = std::max(ctx.prob->stationarity_tol, inner_tol * 0.2);
  }

  sol.profile = v;
  sol.value = objective(ctx, v, {});
  out.ok = sol.converged;
  return out;
}

}  // namespace

static RateSolution solve_problem(const RateProblem& prob, double delta, int threads) {
  if (!prob.model.iid())
    throw std::invalid_argument("rate solver requires an i.i.d. model; got " +
                                to_string(prob.model.kind()));
  if (prob.level < 1) throw std::invalid_argument("level must be >= 1");
  if (!(prob.horizon > 0.0)) throw std::invalid_argument("horizon must be positive");
  if (prob.grid_segments < 1) throw std::invalid_argument("grid must have at least one segment");

  // necessary feasibility: |y| <= T^nu/nu!
  const double cap = std::pow(prob.horizon, prob.level) / factorial(prob.level);
  if (prob.mode == TargetMode::endpoint) {
    if (sup_norm(prob.target) > cap + 1e-9)
      throw std::invalid_argument("target violates the feasibility bound sup|y| <= T^nu/nu! (" +
                                  std::to_string(sup_norm(prob.target)) + " > " +
                                  std::to_string(cap) + ")");
  } else {
    for (const auto& [t, tensor] : prob.target_path) {
      const double tcap = std::pow(t, prob.level) / factorial(prob.level);
      if (sup_norm(tensor) > tcap + 1e-9)
        throw std::invalid_argument("path target at t=" + std::to_string(t) +
                                    " violates the feasibility bound");
    }
  }

  CramerTransform ct(prob.model);
  ConstraintEvaluator eval(prob);

  const int d = prob.model.dim();
  const int m = prob.grid_segments;
  const std::size_t nvar = eval.var_count();

  SolveContext ctx;
  ctx.prob = &prob;
  ctx.ct = &ct;
  ctx.eval = &eval;
  ctx.delta = delta;
  ctx.lo.resize(nvar);
  ctx.hi.resize(nvar);
  std::vector<double> lo1(static_cast<std::size_t>(d)), hi1(static_cast<std::size_t>(d));
  ct.domain(lo1, hi1);
  for (int i = 0; i < m; ++i)
    for (int c = 0; c < d; ++c) {
      ctx.lo[static_cast<std::size_t>(i) * static_cast<std::size_t>(d) + static_cast<std::size_t>(c)] =
          lo1[static_cast<std::size_t>(c)];
      ctx.hi[static_cast<std::size_t>(i) * static_cast<std::size_t>(d) + static_cast<std::size_t>(c)] =
          hi1[static_cast<std::size_t>(c)];
    }

  // start profiles: the mean path, sign-matched constant slopes (exact for
  // d=1 endpoint targets), then random interior profiles
  std::vector<std::vector<double>> starts;
  auto q = prob.model.mean_vector();
  std::vector<double> mean_start(nvar);
  for (int i = 0; i < m; ++i)
    for (int c = 0; c < d; ++c)
      mean_start[static_cast<std::size_t>(i) * static_cast<std::size_t>(d) + static_cast<std::size_t>(c)] =
          q[static_cast<std::size_t>(c)];
  starts.push_back(mean_start);
  if (d == 1 && prob.mode == TargetMode::endpoint) {
    // constant slope c with c^nu T^nu/nu! = y, exact when representable
    const double y = prob.target[0];
    const double base = std::pow(std::abs(y) * factorial(prob.level), 1.0 / prob.level) / prob.horizon;
    if (prob.level % 2 == 1) {
      starts.push_back(std::vector<double>(nvar, std::copysign(base, y)));
    } else {
      starts.push_back(std::vector<double>(nvar, base));
      starts.push_back(std::vector<double>(nvar, -base));
    }
  }
  Rng rng(derive_seed(prob.seed, 0xA11CE));
  while (static_cast<int>(starts.size()) < std::max(1, prob.multistart)) {
    std::vector<double> s(nvar);
    for (std::size_t i = 0; i < nvar; ++i) {
      const double w = rng.uniform01();
      s[i] = ctx.lo[i] + (0.05 + 0.9 * w) * (ctx.hi[i] - ctx.lo[i]);
    }
    starts.push_back(std::move(s));
  }

  std::vector<StartResult> results(starts.size());
  const int nthreads = std::max(1, threads);
  if (nthreads == 1 || starts.size() == 1) {
    for (std::size_t i = 0; i < starts.size(); ++i) results[i] = solve_from(ctx, starts[i]);
  } else {
    std::vector<std::thread> pool;
    std::atomic<std::size_t> cursor{0};
    for (int w = 0; w < nthreads; ++w)
      pool.emplace_back([&]() {
        for (;;) {
          const std::size_t i = cursor.fetch_add(1);
          if (i >= starts.size()) return;
          results[i] = solve_from(ctx, starts[i]);
        }
      });
    for (auto& th : pool) th.join();
  }

  // deterministic merge: converged first, then value, then lexicographic
  RateSolution best;
  bool have = false;
  std::vector<double> start_values;
  double vmin = kInfiniteRate, vmax = -kInfiniteRate;
  for (const auto& r : results) {
    start_values.push_back(r.ok ? r.sol.value : std::numeric_limits<double>::quiet_NaN());
    if (r.ok) {
      vmin = std::min(vmin, r.sol.value);
      vmax = std::max(vmax, r.sol.value);
    }
    auto better = [&](const RateSolution& a, const RateSolution& b) {
      if (a.converged != b.converged) return a.converged;
      if (a.value != b.value) return a.value < b.value;
      return a.profile < b.profile;
    };
    if (!have || better(r.sol, best)) {
      best = r.sol;
      have = true;
    }
  }
  best.start_values = std::move(start_values);
  best.dispersion = (vmax >= vmin) ? vmax - vmin : 0.0;
  return best;
}

RateSolution contraction_rate(const RateProblem& prob, int threads) {
  return solve_problem(prob, 0.0, threads);
}

RateSolution rate_lower_envelope(const RateProblem& prob, double delta, int threads) {
  if (!(delta > 0.0)) throw std::invalid_argument("envelope radius must be positive");
  if (prob.mode != TargetMode::endpoint)
    throw std::invalid_argument("envelope solve is defined for endpoint targets");
  return solve_problem(prob, delta, threads);
}

}  // namespace sigld
