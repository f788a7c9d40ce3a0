#include <doctest.h>

#include <stdexcept>

#include <cmath>
#include <functional>
#include <vector>

#include "sigld/path.hpp"
#include "sigld/rng.hpp"
#include "sigld/signature.hpp"
#include "sigld/tensor.hpp"

using namespace sigld;

namespace {

double factorial(int k) {
  double f = 1.0;
  for (int i = 2; i <= k; ++i) f *= i;
  return f;
}

SampledSequence constant_sequence(std::vector<double> q, std::size_t n) {
  std::vector<double> flat;
  for (std::size_t k = 0; k < n; ++k) flat.insert(flat.end(), q.begin(), q.end());
  return SampledSequence(static_cast<int>(q.size()), std::move(flat));
}

SampledSequence random_sequence(int d, std::size_t n, Rng& rng) {
  std::vector<double> flat(n * static_cast<std::size_t>(d));
  for (double& v : flat) v = 2.0 * rng.uniform01() - 1.0;
  return SampledSequence(d, std::move(flat));
}

double binomial(std::size_t n, int k) {
  double out = 1.0;
  for (int i = 0; i < k; ++i)
    out *= static_cast<double>(n - static_cast<std::size_t>(i)) / static_cast<double>(k - i);
  return out;
}

// Eq-(3)-style coordinate oracle: brute-force sum of sample products over
// strictly increasing tuples for one coordinate choice.
double coordinate_oracle(const SampledSequence& seq, std::span<const int> indices, long n,
                         std::size_t count) {
  const int k = static_cast<int>(indices.size());
  std::vector<std::size_t> tuple(static_cast<std::size_t>(k));
  double sum = 0.0;
  // odometer over increasing tuples
  std::function<void(int, std::size_t)> rec = [&](int depth, std::size_t start) {
    if (depth == k) {
      double prod = 1.0;
      for (int j = 0; j < k; ++j)
        prod *= seq.sample(tuple[static_cast<std::size_t>(j)])[static_cast<std::size_t>(
            indices[static_cast<std::size_t>(j)])];
      sum += prod;
      return;
    }
    for (std::size_t i = start; i < count; ++i) {
      tuple[static_cast<std::size_t>(depth)] = i;
      rec(depth + 1, i + 1);
    }
  };
  rec(0, 0);
  return sum / std::pow(static_cast<double>(n), k);
}

double stack_diff(const SignatureStack& a, const SignatureStack& b) {
  double m = 0.0;
  for (int k = 1; k <= std::min(a.top_level(), b.top_level()); ++k)
    m = std::max(m, max_abs_diff(a.level(k), b.level(k)));
  return m;
}

}  // namespace

TEST_SUITE("signature") {

TEST_CASE("segment signature closed form") {
  const std::vector<double> v{0.6, -0.4};
  const double h = 0.7;
  auto seg = segment_signature(v, h, 3);
  CHECK(seg.level(0)[0] == 1.0);
  for (int k = 1; k <= 3; ++k) {
    auto expect = tensor_power(LevelTensor::from_vector(2, v), k);
    expect.scale(std::pow(h, k) / factorial(k));
    CHECK(max_abs_diff(seg.level(k), expect) <= 1e-15);
  }
}

TEST_CASE("straight line signature is partition independent") {
  const double T = 1.3;
  const std::vector<double> q{0.5, -0.25};
  // two different partitions of the same line
  PiecewisePath one(2, {0.0, T}, {0.0, 0.0, q[0] * T, q[1] * T});
  PiecewisePath three(2, {0.0, 0.3, 0.9, T},
                      {0.0, 0.0, q[0] * 0.3, q[1] * 0.3, q[0] * 0.9, q[1] * 0.9, q[0] * T, q[1] * T});
  auto sa = phi_map_exact(one, 3).back();
  auto sb = phi_map_exact(three, 3).back();
  CHECK(stack_diff(sa, sb) <= 1e-14);
  for (int k = 1; k <= 3; ++k) {
    auto expect = tensor_power(LevelTensor::from_vector(2, q), k);
    expect.scale(std::pow(T, k) / factorial(k));
    CHECK(max_abs_diff(sa.level(k), expect) <= 1e-14);
  }
}

TEST_CASE("direct enumeration hand oracle: (1,-1,1) at level 2") {
  auto seq = SampledSequence(1, {1.0, -1.0, 1.0});
  // pairs (0,1) -> -1, (0,2) -> 1, (1,2) -> -1; sum -1; n = 1 so unnormalized
  auto s = iterated_sum_direct(seq, 2, 1, 3.0);
  CHECK(s.level(2)[0] == -1.0);
  CHECK(s.level(1)[0] == 1.0);  // partial sum
}

TEST_CASE("direct level 1 is the scaled partial sum") {
  auto seq = SampledSequence(1, {0.5, 0.25, -0.75, 0.5});
  auto s = iterated_sum_direct(seq, 1, 2, 2.0);
  CHECK(s.level(1)[0] == doctest::Approx((0.5 + 0.25 - 0.75 + 0.5) / 2.0).epsilon(1e-15));
}

TEST_CASE("constant sequence matches the binomial counting oracle") {
  const std::vector<double> q{0.3, -0.6};
  const std::size_t m = 9;
  const long n = 3;
  auto seq = constant_sequence(q, m);
  auto s = iterated_sum_direct(seq, 3, n, static_cast<double>(m) / n);
  for (int k = 1; k <= 3; ++k) {
    auto expect = tensor_power(LevelTensor::from_vector(2, q), k);
    expect.scale(binomial(m, k) / std::pow(static_cast<double>(n), k));
    CHECK(max_abs_diff(s.level(k), expect) <= 1e-12);
  }
}

TEST_CASE("enumeration guard trips on large instances unless overridden") {
  Rng rng(3);
  auto seq = random_sequence(1, 60, rng);
  CHECK_THROWS_AS(iterated_sum_direct(seq, 6, 1, 60.0), std::invalid_argument);
  CHECK_NOTHROW(iterated_sum_direct(seq, 1, 1, 60.0));
}

TEST_CASE("stream equals direct on random instances") {
  Rng rng(404);
  for (int trial = 0; trial < 50; ++trial) {
    const int d = 1 + static_cast<int>(rng.uniform_index(3));
    const int nu = 1 + static_cast<int>(rng.uniform_index(4));
    const long n = 1 + static_cast<long>(rng.uniform_index(4));
    const std::size_t count = static_cast<std::size_t>(nu) + rng.uniform_index(10);
    const double t = static_cast<double>(count) / static_cast<double>(n);
    auto seq = random_sequence(d, count, rng);
    auto direct = iterated_sum_direct(seq, nu, n, t);
    std::vector<double> grid{t};
    auto stream = iterated_sum_stream(seq, nu, n, grid)[0];
    CHECK(stack_diff(direct, stream) <= 1e-10);
  }
}

TEST_CASE("stream: empty prefix and fractional interpolation") {
  auto seq = SampledSequence(1, {1.0, -1.0, 1.0});
  std::vector<double> grid{0.0, 0.5, 1.0};
  auto out = iterated_sum_stream(seq, 2, 1, grid);
  CHECK(sup_norm(out[0].level(1)) == 0.0);
  CHECK(sup_norm(out[0].level(2)) == 0.0);
  // t = 0.5 interpolates between prefixes of length 0 and 1
  CHECK(out[1].level(1)[0] == doctest::Approx(0.5).epsilon(1e-15));
  // hand oracle at m = 3 via the same (1,-1,1) instance
  std::vector<double> grid3{3.0};
  auto s3 = iterated_sum_stream(seq, 2, 1, grid3)[0];
  CHECK(s3.level(2)[0] == -1.0);
}

TEST_CASE("quadrature: straight line reaches Q^k t^k/k! as h shrinks") {
  const double T = 1.0;
  PiecewisePath line(1, {0.0, T}, {0.0, 0.8 * T});
  auto expect = [&](int k) { return std::pow(0.8, k) * std::pow(T, k) / factorial(k); };
  double prev_err = 1e300;
  for (double h : {0.1, 0.05, 0.025}) {
    auto qs = phi_map_quadrature(line, 3, h).back();
    const double err = std::abs(qs.level(3)[0] - expect(3));
    CHECK(err < 0.6 * prev_err);  // first order: halving h about halves the error
    prev_err = err;
  }
  CHECK(prev_err <= 1e-2);
}

TEST_CASE("quadrature level 1 is exact at any knot-aligned step") {
  Rng rng(31);
  auto path = random_h_path(2, 1.0, 1.0, rng);
  auto qs = phi_map_quadrature(path, 1, 0.033);
  auto end = path.at(path.horizon());
  CHECK(qs.back().level(1)[0] == doctest::Approx(end[0]).epsilon(1e-12));
  CHECK(qs.back().level(1)[1] == doctest::Approx(end[1]).epsilon(1e-12));
}

TEST_CASE("quadrature is first order against the exact evaluator") {
  Rng rng(55);
  for (int trial = 0; trial < 4; ++trial) {
    auto path = random_h_path(2, 1.0, 1.0, rng);
    auto exact = phi_map_exact(path, 3).back();
    std::vector<double> hs{0.02, 0.01, 0.005, 0.0025};
    std::vector<double> errs;
    for (double h : hs) {
      auto qs = phi_map_quadrature(path, 3, h).back();
      errs.push_back(stack_diff(qs, exact));
    }
    double sx = 0, sy = 0, sxx = 0, sxy = 0;
    for (std::size_t i = 0; i < hs.size(); ++i) {
      const double x = std::log(hs[i]), y = std::log(errs[i]);
      sx += x;
      sy += y;
      sxx += x * x;
      sxy += x * y;
    }
    const double n = static_cast<double>(hs.size());
    const double slope = (n * sxy - sx * sy) / (n * sxx - sx * sx);
    CHECK(slope >= 0.8);
    CHECK(slope <= 1.2);
  }
}

TEST_CASE("exact agrees with fine quadrature on random paths") {
  Rng rng(56);
  auto path = random_h_path(3, 1.0, 1.0, rng);
  auto exact = phi_map_exact(path, 4).back();
  auto quad = phi_map_quadrature(path, 4, 1e-4).back();
  CHECK(stack_diff(exact, quad) <= 1e-3);
}

TEST_CASE("signature_of_sequence: constant sequences are exact") {
  auto seq = constant_sequence({0.5}, 40);
  auto s = signature_of_sequence(seq, 3, 40, 1.0);
  for (int k = 1; k <= 3; ++k)
    CHECK(std::abs(s.level(k)[0] - std::pow(0.5, k) / factorial(k)) <= 1e-14);
  // level 1 is phi_n(t)
  auto s2 = signature_of_sequence(seq, 1, 40, 0.5);
  CHECK(s2.level(1)[0] == doctest::Approx(0.25).epsilon(1e-13));
}

TEST_CASE("discrete sums vs interpolated integrals: gap decays like 1/n") {
  Rng rng(77);
  std::vector<long> ns{100, 1000, 10000};
  std::vector<double> gaps;
  for (long n : ns) {
    auto seq = random_sequence(1, static_cast<std::size_t>(n), rng);
    const double t = 1.0;
    std::vector<double> grid{t};
    auto stream = iterated_sum_stream(seq, 2, n, grid)[0];
    auto integral = signature_of_sequence(seq, 2, n, t);
    gaps.push_back(stack_diff(stream, integral));
  }
  double sx = 0, sy = 0, sxx = 0, sxy = 0;
  for (std::size_t i = 0; i < ns.size(); ++i) {
    const double x = std::log(static_cast<double>(ns[i])), y = std::log(gaps[i]);
    sx += x;
    sy += y;
    sxx += x * x;
    sxy += x * y;
  }
  const double n = 3.0;
  const double slope = (n * sxy - sx * sy) / (n * sxx - sx * sx);
  CHECK(slope <= -0.7);
  CHECK(slope >= -1.3);
}

TEST_CASE("coordinate extraction") {
  const double T = 0.8;
  PiecewisePath line(2, {0.0, T}, {0.0, 0.0, 0.5 * T, -0.75 * T});
  auto s = phi_map_exact(line, 2).back();
  const int i0[] = {0};
  CHECK(coordinate_extract(s, i0) == doctest::Approx(0.5 * T).epsilon(1e-14));
  const int i01[] = {0, 1};
  CHECK(coordinate_extract(s, i01) ==
        doctest::Approx(0.5 * (-0.75) * T * T / 2.0).epsilon(1e-13));
  const int bad[] = {0, 2};
  CHECK_THROWS_AS(coordinate_extract(s, bad), std::out_of_range);
}

TEST_CASE("coordinate extraction matches the Eq-(3) brute force oracle") {
  Rng rng(91);
  auto seq = random_sequence(2, 7, rng);
  auto s = iterated_sum_direct(seq, 3, 2, 3.5);
  for (auto idx : std::vector<std::vector<int>>{{0}, {1}, {0, 1}, {1, 0}, {0, 1, 1}, {1, 1, 0}}) {
    const double oracle = coordinate_oracle(seq, idx, 2, 7);
    CHECK(coordinate_extract(s, idx) == doctest::Approx(oracle).epsilon(1e-11));
  }
}

TEST_CASE("chen consistency: split and concatenate reproduces the whole") {
  Rng rng(123);
  for (int trial = 0; trial < 8; ++trial) {
    auto path = random_h_path(2, 1.0, 1.0, rng);
    auto whole = phi_map_exact(path, 4).back();
    const std::size_t cut = 1 + rng.uniform_index(path.segment_count() - 1);
    const double tc = path.knot(cut);
    auto left = path.restricted(tc);
    // right piece re-based at zero
    std::vector<double> kn, vals;
    auto v0 = path.at(tc);
    for (std::size_t i = cut; i < path.knot_count(); ++i) {
      kn.push_back(path.knot(i) - tc);
      auto v = path.value(i);
      for (int c = 0; c < 2; ++c)
        vals.push_back(v[static_cast<std::size_t>(c)] - v0[static_cast<std::size_t>(c)]);
    }
    for (int c = 0; c < 2; ++c) vals[static_cast<std::size_t>(c)] = 0.0;
    PiecewisePath right(2, std::move(kn), std::move(vals));
    auto combined = chen_concat(phi_map_exact(left, 4).back(), phi_map_exact(right, 4).back());
    CHECK(stack_diff(whole, combined) <= 1e-12);
  }
}

TEST_CASE("level bound and time-Lipschitz hold on random paths") {
  Rng rng(222);
  const int nu = 3;
  for (int trial = 0; trial < 50; ++trial) {
    auto path = random_h_path(2, 1.0, 1.0, rng);
    auto stacks = phi_map_exact(path, nu);
    const double lip_const = std::pow(1.0, nu - 1) / factorial(nu - 1);
    for (std::size_t i = 0; i < stacks.size(); ++i) {
      for (int k = 1; k <= nu; ++k)
        CHECK(sup_norm(stacks[i].level(k)) <=
              std::pow(stacks[i].time(), k) / factorial(k) + 1e-9);
      for (std::size_t j = 0; j < i; ++j)
        CHECK(max_abs_diff(stacks[i].level(nu), stacks[j].level(nu)) <=
              lip_const * (stacks[i].time() - stacks[j].time()) + 1e-9);
    }
  }
}

TEST_CASE("level 0 stays 1 through every operation") {
  Rng rng(11);
  auto path = random_h_path(2, 1.0, 1.0, rng);
  for (const auto& s : phi_map_exact(path, 3)) CHECK(s.level(0)[0] == 1.0);
  for (const auto& s : phi_map_quadrature(path, 3, 0.1)) CHECK(s.level(0)[0] == 1.0);
}

}  // TEST_SUITE
