#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "sigld/path.hpp"
#include "sigld/rng.hpp"

namespace sigld {

enum class ModelKind { iid_rademacher, iid_uniform, iid_discrete, markov, rotation, doubling };
enum class MeanProvenance { analytic, estimated };

std::string to_string(ModelKind kind);
ModelKind model_kind_from_string(const std::string& s);

// Bounded observable on the circle: constant + trig polynomial. The orbit
// average over the uniform (invariant) measure is the constant term.
struct TrigObservable {
  double constant = 0.0;
  std::vector<double> cos_coeff;  // coefficient of cos(2*pi*j*x), j = 1..
  std::vector<double> sin_coeff;

  double eval(double x) const;
  double coeff_bound() const;  // |constant| + sum |coeffs|, certifies |g| <= bound
  double mean() const { return constant; }
};

// Generator of bounded stationary d-dimensional step sequences with
// |xi(k)|_inf <= 1. The `centered` flag subtracts the analytic mean of the
// base law from every emitted sample.
class StepLawModel {
 public:
  StepLawModel() = default;  // Rademacher, d = 1

  static StepLawModel rademacher(int dim, bool centered = true);
  static StepLawModel uniform(int dim, double low, double high, bool centered = false);
  static StepLawModel discrete(int dim, std::vector<std::vector<double>> support,
                               std::vector<double> probs, bool centered = false);
  static StepLawModel markov(std::vector<std::vector<double>> transition,
                             std::vector<std::vector<double>> observations, bool centered = false);
  static StepLawModel rotation(double alpha, std::vector<TrigObservable> observables,
                               bool centered = false);
  static StepLawModel doubling(std::vector<TrigObservable> observables, bool centered = false);

  ModelKind kind() const { return kind_; }
  int dim() const { return dim_; }
  bool centered() const { return centered_; }
  bool iid() const {
    return kind_ == ModelKind::iid_rademacher || kind_ == ModelKind::iid_uniform ||
           kind_ == ModelKind::iid_discrete;
  }

  // Mean of the emitted law (zero when centered).
  std::vector<double> mean_vector(MeanProvenance* provenance = nullptr) const;

  // log E exp<lambda, xi> of the emitted law; i.i.d. kinds only.
  double log_mgf(std::span<const double> lambda) const;
  std::vector<double> log_mgf_gradient(std::span<const double> lambda) const;

  // Stationary sample path, deterministic in (model, seed, n).
  SampledSequence sample_sequence(std::size_t n, std::uint64_t seed) const;

  // One draw from the exponentially tilted law e^{<lambda,x>-Lambda(lambda)};
  // lambda = 0 reproduces the plain draw bit-for-bit. i.i.d. kinds only.
  void draw_tilted(std::span<const double> lambda, Rng& rng, std::span<double> out) const;

  // Accessors used by serialization and the rate module.
  double uniform_low() const { return uniform_low_; }
  double uniform_high() const { return uniform_high_; }
  const std::vector<std::vector<double>>& support() const { return support_; }
  const std::vector<double>& probs() const { return probs_; }
  const std::vector<std::vector<double>>& transition() const { return transition_; }
  const std::vector<std::vector<double>>& observations() const { return observations_; }
  const std::vector<double>& stationary() const { return stationary_; }
  double rotation_angle() const { return alpha_; }
  const std::vector<TrigObservable>& observables() const { return observables_; }

  // Per-coordinate closed hull of the emitted law's support; the effective
  // domain box of the Cramer transform.
  void support_box(std::span<double> lo, std::span<double> hi) const;

  // Mean of the base (uncentered) law.
  std::vector<double> base_mean() const;

 private:
  void draw_base(std::span<const double> lambda, Rng& rng, std::span<double> out) const;

  ModelKind kind_ = ModelKind::iid_rademacher;
  int dim_ = 1;
  bool centered_ = false;
  double uniform_low_ = -1.0, uniform_high_ = 1.0;
  std::vector<std::vector<double>> support_;
  std::vector<double> probs_;
  std::vector<std::vector<double>> transition_;
  std::vector<std::vector<double>> observations_;
  std::vector<double> stationary_;
  double alpha_ = 0.0;
  std::vector<TrigObservable> observables_;
};

// Monte Carlo mean estimate with standard error, for laws without an
// analytic mean; reps independent streams derived from seed.
struct MeanEstimate {
  std::vector<double> mean;
  std::vector<double> std_error;
};
MeanEstimate estimate_mean(const StepLawModel& model, std::size_t samples, int reps,
                           std::uint64_t seed);

}  // namespace sigld
