#include "sigld/processes.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace sigld {

std::string to_string(ModelKind kind) {
  switch (kind) {
    case ModelKind::iid_rademacher: return "iid_rademacher";
    case ModelKind::iid_uniform: return "iid_uniform";
    case ModelKind::iid_discrete: return "iid_discrete";
    case ModelKind::markov: return "markov";
    case ModelKind::rotation: return "rotation";
    case ModelKind::doubling: return "doubling";
  }
  return "unknown";
}

ModelKind model_kind_from_string(const std::string& s) {
  if (s == "iid_rademacher") return ModelKind::iid_rademacher;
  if (s == "iid_uniform") return ModelKind::iid_uniform;
  if (s == "iid_discrete") return ModelKind::iid_discrete;
  if (s == "markov") return ModelKind::markov;
  if (s == "rotation") return ModelKind::rotation;
  if (s == "doubling") return ModelKind::doubling;
  throw std::invalid_argument("unknown model kind: " + s);
}

double TrigObservable::eval(double x) const {
  double v = constant;
  for (std::size_t j = 0; j < cos_coeff.size(); ++j)
    v += cos_coeff[j] * std::cos(2.0 * M_PI * static_cast<double>(j + 1) * x);
  for (std::size_t j = 0; j < sin_coeff.size(); ++j)
    v += sin_coeff[j] * std::sin(2.0 * M_PI * static_cast<double>(j + 1) * x);
  return v;
}

double TrigObservable::coeff_bound() const {
  double b = std::abs(constant);
  for (double c : cos_coeff) b += std::abs(c);
  for (double c : sin_coeff) b += std::abs(c);
  return b;
}

namespace {

// Stationary law of a row-stochastic matrix: solve pi^T P = pi^T, sum = 1,
// by Gaussian elimination with partial pivoting on (P^T - I) with the last
// equation replaced by the normalization.
std::vector<double> stationary_law(const std::vector<std::vector<double>>& P) {
  const std::size_t s = P.size();
  std::vector<std::vector<double>> A(s, std::vector<double>(s + 1, 0.0));
  for (std::size_t i = 0; i + 1 < s; ++i) {
    for (std::size_t j = 0; j < s; ++j) A[i][j] = P[j][i] - (i == j ? 1.0 : 0.0);
  }
  for (std::size_t j = 0; j < s; ++j) A[s - 1][j] = 1.0;
  A[s - 1][s] = 1.0;

  for (std::size_t col = 0; col < s; ++col) {
    std::size_t piv = col;
    for (std::size_t r = col + 1; r < s; ++r)
      if (std::abs(A[r][col]) > std::abs(A[piv][col])) piv = r;
    if (std::abs(A[piv][col]) < 1e-14)
      throw std::invalid_argument("transition matrix has no unique stationary law");
    std::swap(A[col], A[piv]);
    for (std::size_t r = 0; r < s; ++r) {
      if (r == col) continue;
      const double f = A[r][col] / A[col][col];
      if (f == 0.0) continue;
      for (std::size_t j = col; j <= s; ++j) A[r][j] -= f * A[col][j];
    }
  }
  std::vector<double> pi(s);
  double total = 0.0;
  for (std::size_t i = 0; i < s; ++i) {
    pi[i] = std::max(0.0, A[i][s] / A[i][i]);
    total += pi[i];
  }
  for (double& v : pi) v /= total;

  for (std::size_t j = 0; j < s; ++j) {
    double col = 0.0;
    for (std::size_t i = 0; i < s; ++i) col += pi[i] * P[i][j];
    if (std::abs(col - pi[j]) > 1e-9)
      throw std::invalid_argument("stationary law residual too large");
  }
  return pi;
}

double log_cosh(double x) {
  const double a = std::abs(x);
  return a + std::log1p(std::exp(-2.0 * a)) - std::log(2.0);
}

// log((e^w - 1)/w), the uniform-law MGF factor after shifting out e^{lambda a}.
double log_expm1_over(double w) {
  if (std::abs(w) < 1e-4) {
    const double w2 = w * w;
    return w / 2.0 + w2 / 24.0 - w2 * w2 / 2880.0;
  }
  if (w > 0.0) return w + std::log1p(-std::exp(-w)) - std::log(w);
  return std::log1p(-std::exp(w)) - std::log(-w);
}

// d/dw of the above.
double dlog_expm1_over(double w) {
  if (std::abs(w) < 1e-4) {
    const double w2 = w * w;
    return 0.5 + w / 12.0 - w * w2 / 720.0;
  }
  return 1.0 / (-std::expm1(-w)) - 1.0 / w;
}

bool all_zero(std::span<const double> v) {
  for (double x : v)
    if (x != 0.0) return false;
  return true;
}

}  // namespace

StepLawModel StepLawModel::rademacher(int dim, bool centered) {
  if (dim < 1) throw std::invalid_argument("dim must be >= 1");
  StepLawModel m;
  m.kind_ = ModelKind::iid_rademacher;
  m.dim_ = dim;
  m.centered_ = centered;  // mean is already zero, flag kept for symmetry
  return m;
}

StepLawModel StepLawModel::uniform(int dim, double low, double high, bool centered) {
  if (dim < 1) throw std::invalid_argument("dim must be >= 1");
  if (!(low < high)) throw std::invalid_argument("uniform needs low < high");
  if (low < -1.0 - 1e-12 || high > 1.0 + 1e-12)
    throw std::invalid_argument("uniform support must lie in [-1, 1]");
  StepLawModel m;
  m.kind_ = ModelKind::iid_uniform;
  m.dim_ = dim;
  m.uniform_low_ = low;
  m.uniform_high_ = high;
  m.centered_ = centered;
  return m;
}

StepLawModel StepLawModel::discrete(int dim, std::vector<std::vector<double>> support,
                                    std::vector<double> probs, bool centered) {
  if (dim < 1) throw std::invalid_argument("dim must be >= 1");
  if (support.empty() || support.size() != probs.size())
    throw std::invalid_argument("discrete law needs matching nonempty support and probs");
  double total = 0.0;
  for (double p : probs) {
    if (p < 0.0) throw std::invalid_argument("discrete law probabilities must be >= 0");
    total += p;
  }
  if (std::abs(total - 1.0) > 1e-9) throw std::invalid_argument("discrete law probabilities must sum to 1");
  for (double& p : probs) p /= total;
  for (const auto& x : support) {
    if (static_cast<int>(x.size()) != dim)
      throw std::invalid_argument("discrete support point dim mismatch");
    for (double v : x)
      if (std::abs(v) > 1.0 + 1e-12)
        throw std::invalid_argument("discrete support must lie in [-1, 1]^d");
  }
  StepLawModel m;
  m.kind_ = ModelKind::iid_discrete;
  m.dim_ = dim;
  m.support_ = std::move(support);
  m.probs_ = std::move(probs);
  m.centered_ = centered;
  if (centered) {
    auto q = m.base_mean();
    for (const auto& x : m.support_)
      for (int c = 0; c < dim; ++c)
        if (std::abs(x[static_cast<std::size_t>(c)] - q[static_cast<std::size_t>(c)]) > 1.0 + 1e-12)
          throw std::invalid_argument("centered discrete law leaves [-1, 1]^d");
  }
  return m;
}

StepLawModel StepLawModel::markov(std::vector<std::vector<double>> transition,
                                  std::vector<std::vector<double>> observations, bool centered) {
  const std::size_t s = transition.size();
  if (s == 0 || s > 64) throw std::invalid_argument("markov chain needs 1..64 states");
  for (const auto& row : transition) {
    if (row.size() != s) throw std::invalid_argument("transition matrix must be square");
    double sum = 0.0;
    for (double p : row) {
      if (p < 0.0) throw std::invalid_argument("transition probabilities must be >= 0");
      sum += p;
    }
    if (std::abs(sum - 1.0) > 1e-12)
      throw std::invalid_argument("transition rows must sum to 1 (got " + std::to_string(sum) + ")");
  }
  if (observations.size() != s) throw std::invalid_argument("one observation vector per state required");
  const int dim = static_cast<int>(observations[0].size());
  for (const auto& o : observations) {
    if (static_cast<int>(o.size()) != dim) throw std::invalid_argument("observation dim mismatch");
    for (double v : o)
      if (std::abs(v) > 1.0 + 1e-12) throw std::invalid_argument("observations must lie in [-1, 1]^d");
  }
  StepLawModel m;
  m.kind_ = ModelKind::markov;
  m.dim_ = dim;
  m.transition_ = std::move(transition);
  m.observations_ = std::move(observations);
  m.stationary_ = stationary_law(m.transition_);
  m.centered_ = centered;
  if (centered) {
    auto q = m.base_mean();
    for (const auto& o : m.observations_)
      for (int c = 0; c < dim; ++c)
        if (std::abs(o[static_cast<std::size_t>(c)] - q[static_cast<std::size_t>(c)]) > 1.0 + 1e-12)
          throw std::invalid_argument("centered observations leave [-1, 1]^d");
  }
  return m;
}

StepLawModel StepLawModel::rotation(double alpha, std::vector<TrigObservable> observables,
                                    bool centered) {
  if (observables.empty()) throw std::invalid_argument("rotation needs at least one observable");
  StepLawModel m;
  m.kind_ = ModelKind::rotation;
  m.dim_ = static_cast<int>(observables.size());
  m.alpha_ = alpha - std::floor(alpha);
  m.observables_ = std::move(observables);
  m.centered_ = centered;
  for (const auto& g : m.observables_) {
    const double eff = centered ? (g.coeff_bound() - std::abs(g.constant)) : g.coeff_bound();
    if (eff > 1.0 + 1e-12) throw std::invalid_argument("observable bound exceeds 1");
  }
  return m;
}

StepLawModel StepLawModel::doubling(std::vector<TrigObservable> observables, bool centered) {
  if (observables.empty()) throw std::invalid_argument("doubling needs at least one observable");
  StepLawModel m;
  m.kind_ = ModelKind::doubling;
  m.dim_ = static_cast<int>(observables.size());
  m.observables_ = std::move(observables);
  m.centered_ = centered;
  for (const auto& g : m.observables_) {
    const double eff = centered ? (g.coeff_bound() - std::abs(g.constant)) : g.coeff_bound();
    if (eff > 1.0 + 1e-12) throw std::invalid_argument("observable bound exceeds 1");
  }
  return m;
}

std::vector<double> StepLawModel::base_mean() const {
  std::vector<double> q(static_cast<std::size_t>(dim_), 0.0);
  switch (kind_) {
    case ModelKind::iid_rademacher:
      break;
    case ModelKind::iid_uniform:
      for (double& v : q) v = 0.5 * (uniform_low_ + uniform_high_);
      break;
    case ModelKind::iid_discrete:
      for (std::size_t i = 0; i < support_.size(); ++i)
        for (int c = 0; c < dim_; ++c)
          q[static_cast<std::size_t>(c)] += probs_[i] * support_[i][static_cast<std::size_t>(c)];
      break;
    case ModelKind::markov:
      for (std::size_t s = 0; s < stationary_.size(); ++s)
        for (int c = 0; c < dim_; ++c)
          q[static_cast<std::size_t>(c)] += stationary_[s] * observations_[s][static_cast<std::size_t>(c)];
      break;
    case ModelKind::rotation:
    case ModelKind::doubling:
      for (int c = 0; c < dim_; ++c) q[static_cast<std::size_t>(c)] = observables_[static_cast<std::size_t>(c)].mean();
      break;
  }
  return q;
}

std::vector<double> StepLawModel::mean_vector(MeanProvenance* provenance) const {
  if (provenance) *provenance = MeanProvenance::analytic;
  if (centered_) return std::vector<double>(static_cast<std::size_t>(dim_), 0.0);
  return base_mean();
}

double StepLawModel::log_mgf(std::span<const double> lambda) const {
  if (!iid()) throw std::invalid_argument("log-MGF only available for i.i.d. models");
  if (static_cast<int>(lambda.size()) != dim_) throw std::invalid_argument("lambda dim mismatch");
  if (all_zero(lambda)) return 0.0;  // normalization, exact
  double v = 0.0;
  switch (kind_) {
    case ModelKind::iid_rademacher:
      for (double l : lambda) v += log_cosh(l);
      break;
    case ModelKind::iid_uniform: {
      const double w_scale = uniform_high_ - uniform_low_;
      for (double l : lambda) v += l * uniform_low_ + log_expm1_over(l * w_scale);
      break;
    }
    case ModelKind::iid_discrete: {
      double best = -1e300;
      std::vector<double> e(support_.size());
      for (std::size_t i = 0; i < support_.size(); ++i) {
        double dot = 0.0;
        for (int c = 0; c < dim_; ++c) dot += lambda[static_cast<std::size_t>(c)] * support_[i][static_cast<std::size_t>(c)];
        e[i] = std::log(probs_[i] <= 0.0 ? 1e-300 : probs_[i]) + dot;
        best = std::max(best, e[i]);
      }
      double sum = 0.0;
      for (double x : e) sum += std::exp(x - best);
      v = best + std::log(sum);
      break;
    }
    default:
      break;
  }
  if (centered_) {
    auto q = base_mean();
    for (int c = 0; c < dim_; ++c) v -= lambda[static_cast<std::size_t>(c)] * q[static_cast<std::size_t>(c)];
  }
  return v;
}

std::vector<double> StepLawModel::log_mgf_gradient(std::span<const double> lambda) const {
  if (!iid()) throw std::invalid_argument("log-MGF only available for i.i.d. models");
  if (static_cast<int>(lambda.size()) != dim_) throw std::invalid_argument("lambda dim mismatch");
  std::vector<double> g(static_cast<std::size_t>(dim_), 0.0);
  switch (kind_) {
    case ModelKind::iid_rademacher:
      for (int c = 0; c < dim_; ++c) g[static_cast<std::size_t>(c)] = std::tanh(lambda[static_cast<std::size_t>(c)]);
      break;
    case ModelKind::iid_uniform: {
      const double w_scale = uniform_high_ - uniform_low_;
      for (int c = 0; c < dim_; ++c)
        g[static_cast<std::size_t>(c)] =
            uniform_low_ + w_scale * dlog_expm1_over(lambda[static_cast<std::size_t>(c)] * w_scale);
      break;
    }
    case ModelKind::iid_discrete: {
      std::vector<double> e(support_.size());
      double best = -1e300;
      for (std::size_t i = 0; i < support_.size(); ++i) {
        double dot = 0.0;
        for (int c = 0; c < dim_; ++c) dot += lambda[static_cast<std::size_t>(c)] * support_[i][static_cast<std::size_t>(c)];
        e[i] = std::log(probs_[i] <= 0.0 ? 1e-300 : probs_[i]) + dot;
        best = std::max(best, e[i]);
      }
      double z = 0.0;
      for (double x : e) z += std::exp(x - best);
      for (std::size_t i = 0; i < support_.size(); ++i) {
        const double w = std::exp(e[i] - best) / z;
        for (int c = 0; c < dim_; ++c) g[static_cast<std::size_t>(c)] += w * support_[i][static_cast<std::size_t>(c)];
      }
      break;
    }
    default:
      break;
  }
  if (centered_) {
    auto q = base_mean();
    for (int c = 0; c < dim_; ++c) g[static_cast<std::size_t>(c)] -= q[static_cast<std::size_t>(c)];
  }
  return g;
}

void StepLawModel::draw_base(std::span<const double> lambda, Rng& rng, std::span<double> out) const {
  switch (kind_) {
    case ModelKind::iid_rademacher:
      for (int c = 0; c < dim_; ++c) {
        const double u = rng.uniform01();
        const double l = lambda[static_cast<std::size_t>(c)];
        const double p_plus = (l == 0.0) ? 0.5 : 1.0 / (1.0 + std::exp(-2.0 * l));
        out[static_cast<std::size_t>(c)] = (u < p_plus) ? 1.0 : -1.0;
      }
      break;
    case ModelKind::iid_uniform: {
      const double span_w = uniform_high_ - uniform_low_;
      for (int c = 0; c < dim_; ++c) {
        const double u = rng.uniform01();
        const double w = lambda[static_cast<std::size_t>(c)] * span_w;
        if (w == 0.0) {
          out[static_cast<std::size_t>(c)] = uniform_low_ + u * span_w;
        } else {
          out[static_cast<std::size_t>(c)] =
              uniform_low_ + span_w * std::log1p(u * std::expm1(w)) / w;
        }
      }
      break;
    }
    case ModelKind::iid_discrete: {
      const double u = rng.uniform01();
      std::size_t pick = support_.size() - 1;
      if (all_zero(lambda)) {
        double cdf = 0.0;
        for (std::size_t i = 0; i < probs_.size(); ++i) {
          cdf += probs_[i];
          if (u < cdf) {
            pick = i;
            break;
          }
        }
      } else {
        std::vector<double> e(support_.size());
        double best = -1e300;
        for (std::size_t i = 0; i < support_.size(); ++i) {
          double dot = 0.0;
          for (int c = 0; c < dim_; ++c) dot += lambda[static_cast<std::size_t>(c)] * support_[i][static_cast<std::size_t>(c)];
          e[i] = std::log(probs_[i] <= 0.0 ? 1e-300 : probs_[i]) + dot;
          best = std::max(best, e[i]);
        }
        double z = 0.0;
        for (double x : e) z += std::exp(x - best);
        double cdf = 0.0;
        for (std::size_t i = 0; i < e.size(); ++i) {
          cdf += std::exp(e[i] - best) / z;
          if (u < cdf) {
            pick = i;
            break;
          }
        }
      }
      for (int c = 0; c < dim_; ++c) out[static_cast<std::size_t>(c)] = support_[pick][static_cast<std::size_t>(c)];
      break;
    }
    default:
      throw std::invalid_argument("draw_base is only defined for i.i.d. kinds");
  }
}

void StepLawModel::draw_tilted(std::span<const double> lambda, Rng& rng, std::span<double> out) const {
  if (!iid()) throw std::invalid_argument("tilted draws only available for i.i.d. models");
  draw_base(lambda, rng, out);
  if (centered_) {
    auto q = base_mean();
    for (int c = 0; c < dim_; ++c) out[static_cast<std::size_t>(c)] -= q[static_cast<std::size_t>(c)];
  }
}

SampledSequence StepLawModel::sample_sequence(std::size_t n, std::uint64_t seed) const {
  if (n < 1) throw std::invalid_argument("sample count must be >= 1");
  Rng rng(seed);
  std::vector<double> flat(n * static_cast<std::size_t>(dim_), 0.0);
  const std::vector<double> zero(static_cast<std::size_t>(dim_), 0.0);
  auto q = centered_ ? base_mean() : zero;

  switch (kind_) {
    case ModelKind::iid_rademacher:
    case ModelKind::iid_uniform:
    case ModelKind::iid_discrete:
      for (std::size_t k = 0; k < n; ++k) {
        std::span<double> out{flat.data() + k * static_cast<std::size_t>(dim_),
                              static_cast<std::size_t>(dim_)};
        draw_base(zero, rng, out);
        if (centered_)
          for (int c = 0; c < dim_; ++c) out[static_cast<std::size_t>(c)] -= q[static_cast<std::size_t>(c)];
      }
      break;
    case ModelKind::markov: {
      // stationary start
      const double u0 = rng.uniform01();
      std::size_t state = stationary_.size() - 1;
      double cdf = 0.0;
      for (std::size_t i = 0; i < stationary_.size(); ++i) {
        cdf += stationary_[i];
        if (u0 < cdf) {
          state = i;
          break;
        }
      }
      for (std::size_t k = 0; k < n; ++k) {
        for (int c = 0; c < dim_; ++c)
          flat[k * static_cast<std::size_t>(dim_) + static_cast<std::size_t>(c)] =
              observations_[state][static_cast<std::size_t>(c)] - q[static_cast<std::size_t>(c)];
        const double u = rng.uniform01();
        double acc = 0.0;
        std::size_t next = transition_[state].size() - 1;
        for (std::size_t j = 0; j < transition_[state].size(); ++j) {
          acc += transition_[state][j];
          if (u < acc) {
            next = j;
            break;
          }
        }
        state = next;
      }
      break;
    }
    case ModelKind::rotation: {
      double x = rng.uniform01();
      for (std::size_t k = 0; k < n; ++k) {
        for (int c = 0; c < dim_; ++c)
          flat[k * static_cast<std::size_t>(dim_) + static_cast<std::size_t>(c)] =
              observables_[static_cast<std::size_t>(c)].eval(x) - q[static_cast<std::size_t>(c)];
        x += alpha_;
        x -= std::floor(x);
      }
      break;
    }
    case ModelKind::doubling: {
      // Backward orbit of x -> 2x mod 1 from a uniform endpoint; inverse
      // branches chosen by coin flips. Forward iteration of doubling in
      // floating point collapses to 0 after ~50 steps, backward is stable
      // and measure preserving.
      std::vector<double> orbit(n);
      orbit[n - 1] = rng.uniform01();
      for (std::size_t k = n - 1; k > 0; --k) {
        const double bit = rng.coin() ? 1.0 : 0.0;
        orbit[k - 1] = (orbit[k] + bit) / 2.0;
      }
      for (std::size_t k = 0; k < n; ++k)
        for (int c = 0; c < dim_; ++c)
          flat[k * static_cast<std::size_t>(dim_) + static_cast<std::size_t>(c)] =
              observables_[static_cast<std::size_t>(c)].eval(orbit[k]) - q[static_cast<std::size_t>(c)];
      break;
    }
  }
  return SampledSequence(dim_, std::move(flat));
}

void StepLawModel::support_box(std::span<double> lo, std::span<double> hi) const {
  auto q = centered_ ? base_mean() : std::vector<double>(static_cast<std::size_t>(dim_), 0.0);
  for (int c = 0; c < dim_; ++c) {
    double a = 0.0, b = 0.0;
    switch (kind_) {
      case ModelKind::iid_rademacher:
        a = -1.0;
        b = 1.0;
        break;
      case ModelKind::iid_uniform:
        a = uniform_low_;
        b = uniform_high_;
        break;
      case ModelKind::iid_discrete: {
        a = 1e300;
        b = -1e300;
        for (const auto& x : support_) {
          a = std::min(a, x[static_cast<std::size_t>(c)]);
          b = std::max(b, x[static_cast<std::size_t>(c)]);
        }
        break;
      }
      case ModelKind::markov: {
        a = 1e300;
        b = -1e300;
        for (const auto& o : observations_) {
          a = std::min(a, o[static_cast<std::size_t>(c)]);
          b = std::max(b, o[static_cast<std::size_t>(c)]);
        }
        break;
      }
      case ModelKind::rotation:
      case ModelKind::doubling: {
        const double r = observables_[static_cast<std::size_t>(c)].coeff_bound();
        a = -r;
        b = r;
        break;
      }
    }
    lo[static_cast<std::size_t>(c)] = a - q[static_cast<std::size_t>(c)];
    hi[static_cast<std::size_t>(c)] = b - q[static_cast<std::size_t>(c)];
  }
}

MeanEstimate estimate_mean(const StepLawModel& model, std::size_t samples, int reps,
                           std::uint64_t seed) {
  if (reps < 2) throw std::invalid_argument("estimate_mean needs at least 2 reps");
  const int d = model.dim();
  std::vector<std::vector<double>> rep_means(static_cast<std::size_t>(reps));
  for (int r = 0; r < reps; ++r) {
    auto seq = model.sample_sequence(samples, derive_seed(seed, static_cast<std::uint64_t>(r)));
    std::vector<double> m(static_cast<std::size_t>(d), 0.0);
    for (std::size_t k = 0; k < seq.size(); ++k) {
      auto s = seq.sample(k);
      for (int c = 0; c < d; ++c) m[static_cast<std::size_t>(c)] += s[static_cast<std::size_t>(c)];
    }
    for (double& v : m) v /= static_cast<double>(samples);
    rep_means[static_cast<std::size_t>(r)] = std::move(m);
  }
  MeanEstimate out;
  out.mean.assign(static_cast<std::size_t>(d), 0.0);
  out.std_error.assign(static_cast<std::size_t>(d), 0.0);
  for (const auto& m : rep_means)
    for (int c = 0; c < d; ++c) out.mean[static_cast<std::size_t>(c)] += m[static_cast<std::size_t>(c)];
  for (double& v : out.mean) v /= static_cast<double>(reps);
  for (const auto& m : rep_means)
    for (int c = 0; c < d; ++c) {
      const double e = m[static_cast<std::size_t>(c)] - out.mean[static_cast<std::size_t>(c)];
      out.std_error[static_cast<std::size_t>(c)] += e * e;
    }
  for (double& v : out.std_error)
    v = std::sqrt(v / (static_cast<double>(reps) * (static_cast<double>(reps) - 1.0)));
  return out;
}

}  // namespace sigld
