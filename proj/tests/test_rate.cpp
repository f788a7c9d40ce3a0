#include <doctest.h>

#include <stdexcept>

#include <cmath>
#include <vector>

#include "sigld/path.hpp"
#include "sigld/rate.hpp"
#include "sigld/rng.hpp"
#include "sigld/signature.hpp"

using namespace sigld;

namespace {

// closed-form oracle for the Rademacher transform:
// (1+x)/2 log(1+x) + (1-x)/2 log(1-x), with 0 log 0 = 0
double rademacher_star(double x) {
  auto term = [](double u) { return u > 0.0 ? 0.5 * u * std::log(u) : 0.0; };
  return term(1.0 + x) + term(1.0 - x);
}

// grid-search oracle: max over lambda of lambda x - log cosh lambda
double rademacher_star_grid(double x) {
  double best = 0.0;
  for (double l = -30.0; l <= 30.0; l += 1e-3)
    best = std::max(best, l * x - std::log(std::cosh(l)));
  return best;
}

RateProblem endpoint_problem(double y, int level, double T, int grid, int multistart = 8) {
  RateProblem p;
  p.model = StepLawModel::rademacher(1);
  p.level = level;
  p.horizon = T;
  p.mode = TargetMode::endpoint;
  LevelTensor target(1, level);
  target[0] = y;
  p.target = target;
  p.grid_segments = grid;
  p.multistart = multistart;
  p.seed = 31;
  return p;
}

}  // namespace

TEST_SUITE("rate") {

TEST_CASE("transform vanishes exactly at the mean") {
  for (const auto& model :
       {StepLawModel::rademacher(1), StepLawModel::uniform(1, -0.6, 0.8),
        StepLawModel::discrete(1, {{-0.5}, {0.25}, {1.0}}, {0.2, 0.5, 0.3})}) {
    CramerTransform ct(model);
    auto q = model.mean_vector();
    CHECK(ct.legendre(q) == 0.0);
  }
}

TEST_CASE("rademacher closed form: interior, boundary, and the 0.1308 value") {
  CramerTransform ct(StepLawModel::rademacher(1));
  const double half[] = {0.5};
  CHECK(ct.legendre(half) == doctest::Approx(rademacher_star(0.5)).epsilon(1e-9));
  CHECK(ct.legendre(half) == doctest::Approx(0.130812).epsilon(1e-4));
  CHECK(ct.legendre(half) == doctest::Approx(rademacher_star_grid(0.5)).epsilon(1e-5));

  const double one[] = {1.0};
  CHECK(ct.legendre(one) == doctest::Approx(std::log(2.0)).epsilon(1e-12));
  auto full = ct.legendre_full(one);
  CHECK(full.capped);

  Rng rng(3);
  for (int trial = 0; trial < 30; ++trial) {
    const double x[] = {1.9 * rng.uniform01() - 0.95};
    CHECK(ct.legendre(x) == doctest::Approx(rademacher_star(x[0])).epsilon(1e-9));
  }
}

TEST_CASE("two-point asymmetric law boundary limit is log inverse mass") {
  auto model = StepLawModel::discrete(1, {{-1.0}, {1.0}}, {0.25, 0.75});
  CramerTransform ct(model);
  const double hi[] = {1.0}, lo[] = {-1.0};
  CHECK(ct.legendre(hi) == doctest::Approx(std::log(1.0 / 0.75)).epsilon(1e-9));
  CHECK(ct.legendre(lo) == doctest::Approx(std::log(1.0 / 0.25)).epsilon(1e-9));
}

TEST_CASE("outside the support box the transform is infinite") {
  CramerTransform ct(StepLawModel::uniform(1, -0.5, 0.5));
  const double x[] = {0.7};
  CHECK(std::isinf(ct.legendre(x)));
  auto full = ct.legendre_full(x);
  CHECK(full.infinite);
}

TEST_CASE("weak duality holds exactly on random pairs") {
  for (const auto& model : {StepLawModel::rademacher(1), StepLawModel::uniform(1, -1.0, 1.0),
                            StepLawModel::discrete(1, {{-0.9}, {0.0}, {0.7}}, {0.3, 0.3, 0.4})}) {
    CramerTransform ct(model);
    Rng rng(7);
    std::vector<double> lo(1), hi(1);
    ct.domain(lo, hi);
    for (int trial = 0; trial < 40; ++trial) {
      const double x[] = {lo[0] + (hi[0] - lo[0]) * (0.05 + 0.9 * rng.uniform01())};
      const double l[] = {8.0 * (rng.uniform01() - 0.5)};
      CHECK(ct.legendre(x) >= l[0] * x[0] - model.log_mgf(l) - 1e-10);
    }
  }
}

TEST_CASE("transform is convex: midpoint inequality inside the domain") {
  CramerTransform ct(StepLawModel::uniform(1, -1.0, 1.0));
  Rng rng(11);
  for (int trial = 0; trial < 30; ++trial) {
    const double a[] = {1.8 * rng.uniform01() - 0.9};
    const double b[] = {1.8 * rng.uniform01() - 0.9};
    const double mid[] = {0.5 * (a[0] + b[0])};
    CHECK(ct.legendre(mid) <= 0.5 * ct.legendre(a) + 0.5 * ct.legendre(b) + 1e-10);
  }
}

TEST_CASE("tilt_for_slope round trip: grad Lambda(lambda) = v") {
  for (const auto& model : {StepLawModel::rademacher(1), StepLawModel::uniform(1, -1.0, 1.0)}) {
    CramerTransform ct(model);
    Rng rng(13);
    for (int trial = 0; trial < 20; ++trial) {
      const double v[] = {1.6 * rng.uniform01() - 0.8};
      auto lam = ct.tilt_for_slope(v);
      CHECK(model.log_mgf_gradient(lam)[0] == doctest::Approx(v[0]).epsilon(1e-8));
    }
  }
}

TEST_CASE("tilt at the mean is exactly zero") {
  CramerTransform ct(StepLawModel::rademacher(1));
  const double q[] = {0.0};
  auto lam = ct.tilt_for_slope(q);
  CHECK(lam[0] == 0.0);
}

TEST_CASE("path_rate: zero-cost mean path, slope-one line, refinement invariance") {
  auto model = StepLawModel::rademacher(1);
  CramerTransform ct(model);
  const double T = 2.0;
  PiecewisePath mean_path(1, {0.0, T}, {0.0, 0.0});
  CHECK(path_rate(mean_path, ct) == 0.0);

  PiecewisePath line(1, {0.0, T}, {0.0, T});
  CHECK(path_rate(line, ct) == doctest::Approx(T * std::log(2.0)).epsilon(1e-10));

  PiecewisePath split(1, {0.0, 0.7, T}, {0.0, 0.7, T});
  CHECK(path_rate(split, ct) == doctest::Approx(path_rate(line, ct)).epsilon(1e-12));
}

TEST_CASE("level-1 solve matches T Lambda*(y/T) with a constant argmin profile") {
  Rng rng(17);
  const double T = 1.0;
  for (int trial = 0; trial < 3; ++trial) {
    const double y = 1.8 * rng.uniform01() - 0.9;
    auto prob = endpoint_problem(y, 1, T, 8);
    auto sol = contraction_rate(prob);
    REQUIRE(sol.converged);
    const double expect = T * rademacher_star(y / T);
    CHECK(sol.value == doctest::Approx(expect).epsilon(1e-4));
    for (double v : sol.profile) CHECK(std::abs(v - y / T) <= 1e-3);
  }
}

TEST_CASE("level-1 solve beats the 2-segment exhaustive grid oracle") {
  const double y = 0.4, T = 1.0;
  auto prob = endpoint_problem(y, 1, T, 2);
  auto sol = contraction_rate(prob);
  REQUIRE(sol.converged);
  // oracle: v2 pinned by the endpoint, scan v1
  double best = 1e300;
  for (double v1 = -1.0; v1 <= 1.0; v1 += 1e-4) {
    const double v2 = 2.0 * y / T - v1;
    if (std::abs(v2) > 1.0) continue;
    best = std::min(best, 0.5 * T * (rademacher_star(v1) + rademacher_star(v2)));
  }
  CHECK(sol.value <= best + 1e-6);
  CHECK(sol.value >= best - 1e-6);  // convexity: the constant profile is the oracle min
}

TEST_CASE("zero-cost target solves to zero with the mean profile") {
  auto prob = endpoint_problem(0.0, 2, 1.0, 8);
  auto sol = contraction_rate(prob);
  REQUIRE(sol.converged);
  CHECK(sol.value <= 1e-8);
  for (double v : sol.profile) CHECK(std::abs(v) <= 1e-4);
}

TEST_CASE("boundary instance: level 2 target T^2/2 forces slope one") {
  auto prob = endpoint_problem(0.5, 2, 1.0, 8);
  auto sol = contraction_rate(prob);
  REQUIRE(sol.converged);
  CHECK(sol.value == doctest::Approx(std::log(2.0)).epsilon(1e-3));
  for (double v : sol.profile) CHECK(std::abs(std::abs(v) - 1.0) <= 1e-3);
  // random-search soundness baseline: no feasible profile does better
  Rng rng(23);
  double best = 1e300;
  for (int trial = 0; trial < 100000; ++trial) {
    double mean_slope = 0.0;
    double cost = 0.0;
    std::vector<double> v(8);
    for (auto& vi : v) {
      vi = 2.0 * rng.uniform01() - 1.0;
      mean_slope += vi / 8.0;
      cost += rademacher_star(vi) / 8.0;
    }
    // d=1 level-2 endpoint is gamma(T)^2/2
    const double endpoint = 0.5 * mean_slope * mean_slope;
    if (std::abs(endpoint - 0.5) <= 1e-3) best = std::min(best, cost);
  }
  CHECK(sol.value <= best + 1e-3);
}

TEST_CASE("infeasible targets are rejected before the solve") {
  auto prob = endpoint_problem(0.51, 2, 1.0, 8);  // cap is T^2/2 = 0.5
  CHECK_THROWS_AS(contraction_rate(prob), std::invalid_argument);
}

TEST_CASE("grid refinement never raises the value materially") {
  auto coarse = endpoint_problem(0.35, 2, 1.0, 8);
  auto fine = endpoint_problem(0.35, 2, 1.0, 16);
  auto a = contraction_rate(coarse);
  auto b = contraction_rate(fine);
  REQUIRE(a.converged);
  REQUIRE(b.converged);
  CHECK(b.value <= a.value + 1e-3);
}

TEST_CASE("reported value is the recomputed cost of the profile") {
  auto prob = endpoint_problem(0.3, 1, 1.0, 8);
  auto sol = contraction_rate(prob);
  REQUIRE(sol.converged);
  CramerTransform ct(prob.model);
  double recomputed = 0.0;
  for (double v : sol.profile) {
    const double x[] = {v};
    recomputed += ct.legendre(x) * (prob.horizon / prob.grid_segments);
  }
  CHECK(sol.value == doctest::Approx(recomputed).epsilon(1e-10));
}

TEST_CASE("envelope: wide balls are free, radius is monotone, small radius recovers the point") {
  const double y = 0.45, T = 1.0;
  auto prob = endpoint_problem(y, 1, T, 8);
  // ball reaching the zero-cost image (y itself distance 0.45 from 0)
  auto wide = rate_lower_envelope(prob, 0.5);
  REQUIRE(wide.converged);
  CHECK(wide.value <= 1e-8);

  auto e1 = rate_lower_envelope(prob, 0.1);
  auto e2 = rate_lower_envelope(prob, 0.05);
  auto e3 = rate_lower_envelope(prob, 0.01);
  REQUIRE(e1.converged);
  REQUIRE(e2.converged);
  REQUIRE(e3.converged);
  CHECK(e1.value <= e2.value + 1e-8);
  CHECK(e2.value <= e3.value + 1e-8);
  auto point = contraction_rate(prob);
  CHECK(e3.value <= point.value + 1e-8);
  CHECK(point.value - e3.value <= rademacher_star(y) - rademacher_star(y - 0.011));
  // oracle: envelope at delta equals the transform at the nearest ball point
  CHECK(e1.value == doctest::Approx(T * rademacher_star((y - 0.1) / T)).epsilon(1e-3));
}

TEST_CASE("solver runs are deterministic, including threaded multistarts") {
  auto prob = endpoint_problem(0.25, 2, 1.0, 8, 6);
  auto a = contraction_rate(prob, 1);
  auto b = contraction_rate(prob, 4);
  CHECK(a.value == b.value);
  REQUIRE(a.profile.size() == b.profile.size());
  for (std::size_t i = 0; i < a.profile.size(); ++i) CHECK(a.profile[i] == b.profile[i]);
  CHECK(a.dispersion == b.dispersion);
}

TEST_CASE("path-mode targets: zero-cost image path solves to zero") {
  RateProblem prob;
  prob.model = StepLawModel::uniform(1, -0.4, 1.0);  // mean 0.3
  prob.level = 2;
  prob.horizon = 1.0;
  prob.mode = TargetMode::path;
  prob.grid_segments = 8;
  prob.multistart = 4;
  prob.seed = 9;
  for (double t : {0.5, 1.0}) {
    LevelTensor tgt(1, 2);
    tgt[0] = 0.09 * t * t / 2.0;  // (Q t)^2/2 with Q = 0.3
    prob.target_path.emplace_back(t, tgt);
  }
  auto sol = contraction_rate(prob);
  REQUIRE(sol.converged);
  CHECK(sol.value <= 1e-7);
  for (double v : sol.profile) CHECK(std::abs(v - 0.3) <= 1e-3);
}

TEST_CASE("path-mode targets must sit on the slope grid") {
  RateProblem prob;
  prob.model = StepLawModel::rademacher(1);
  prob.level = 1;
  prob.horizon = 1.0;
  prob.mode = TargetMode::path;
  prob.grid_segments = 8;
  LevelTensor tgt(1, 1);
  tgt[0] = 0.1;
  prob.target_path.emplace_back(0.3, tgt);  // 0.3 is not a multiple of 1/8
  CHECK_THROWS_AS(contraction_rate(prob), std::invalid_argument);
}

TEST_CASE("path-mode with more grid times is at least as expensive as endpoint") {
  // straight line forced through (T/2, T): same cost as endpoint-only when
  // the target path is the line's own image
  RateProblem endpoint = endpoint_problem(0.4, 1, 1.0, 8);
  auto point_sol = contraction_rate(endpoint);
  RateProblem through;
  through.model = endpoint.model;
  through.level = 1;
  through.horizon = 1.0;
  through.mode = TargetMode::path;
  through.grid_segments = 8;
  through.multistart = 6;
  through.seed = 4;
  for (double t : {0.5, 1.0}) {
    LevelTensor tgt(1, 1);
    tgt[0] = 0.4 * t;
    through.target_path.emplace_back(t, tgt);
  }
  auto path_sol = contraction_rate(through);
  REQUIRE(point_sol.converged);
  REQUIRE(path_sol.converged);
  CHECK(path_sol.value >= point_sol.value - 1e-6);
  CHECK(path_sol.value <= point_sol.value + 1e-3);
}

TEST_CASE("non-iid models are rejected") {
  RateProblem prob;
  prob.model = StepLawModel::markov({{0.5, 0.5}, {0.5, 0.5}}, {{1.0}, {-1.0}});
  prob.level = 1;
  prob.horizon = 1.0;
  LevelTensor tgt(1, 1);
  tgt[0] = 0.1;
  prob.target = tgt;
  CHECK_THROWS_AS(contraction_rate(prob), std::invalid_argument);
  CHECK_THROWS_AS(CramerTransform(prob.model), std::invalid_argument);
}

TEST_CASE("multistart bookkeeping is reported") {
  auto prob = endpoint_problem(0.3, 2, 1.0, 8, 6);
  auto sol = contraction_rate(prob);
  CHECK(sol.start_values.size() >= 6);
  CHECK(sol.dispersion >= 0.0);
}

}  // TEST_SUITE
