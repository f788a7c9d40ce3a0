#include "sigld/optim.hpp"

#include <algorithm>
#include <cmath>
#include <deque>
#include <stdexcept>

namespace sigld {

namespace {

void project(std::span<double> x, std::span<const double> lo, std::span<const double> hi) {
  for (std::size_t i = 0; i < x.size(); ++i) x[i] = std::clamp(x[i], lo[i], hi[i]);
}

double dot(std::span<const double> a, std::span<const double> b) {
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
  return s;
}

struct Pair {
  std::vector<double> s, y;
  double rho;
};

// Standard two-loop recursion with gamma = <s,y>/<y,y> scaling.
std::vector<double> lbfgs_direction(const std::deque<Pair>& mem, std::span<const double> grad) {
  std::vector<double> q(grad.begin(), grad.end());
  std::vector<double> alpha(mem.size());
  for (std::size_t i = mem.size(); i-- > 0;) {
    alpha[i] = mem[i].rho * dot(mem[i].s, q);
    for (std::size_t j = 0; j < q.size(); ++j) q[j] -= alpha[i] * mem[i].y[j];
  }
  double gamma = 1.0;
  if (!mem.empty()) {
    const auto& last = mem.back();
    gamma = dot(last.s, last.y) / std::max(1e-300, dot(last.y, last.y));
  }
  for (double& v : q) v *= gamma;
  for (std::size_t i = 0; i < mem.size(); ++i) {
    const double beta = mem[i].rho * dot(mem[i].y, q);
    for (std::size_t j = 0; j < q.size(); ++j) q[j] += (alpha[i] - beta) * mem[i].s[j];
  }
  for (double& v : q) v = -v;
  return q;
}

}  // namespace

BoxMinimizeResult minimize_box(const ValueGrad& f, std::vector<double> x0,
                               std::span<const double> lower, std::span<const double> upper,
                               double tol, int max_iterations) {
  const std::size_t n = x0.size();
  if (lower.size() != n || upper.size() != n)
    throw std::invalid_argument("minimize_box bound sizes must match x0");
  for (std::size_t i = 0; i < n; ++i)
    if (lower[i] > upper[i]) throw std::invalid_argument("minimize_box needs lower <= upper");

  BoxMinimizeResult res;
  res.x = std::move(x0);
  project(res.x, lower, upper);
  std::vector<double> grad(n), xn(n), gn(n);
  res.value = f(res.x, grad);

  std::deque<Pair> mem;
  const std::size_t memory = 10;

  auto projected_grad_norm = [&](std::span<const double> x, std::span<const double> g) {
    double norm = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      const double step = std::clamp(x[i] - g[i], lower[i], upper[i]) - x[i];
      norm = std::max(norm, std::abs(step));
    }
    return norm;
  };

  for (int it = 0; it < max_iterations; ++it) {
    res.projected_grad_norm = projected_grad_norm(res.x, grad);
    res.iterations = it;
    if (res.projected_grad_norm <= tol) {
      res.converged = true;
      return res;
    }

    std::vector<double> dir = lbfgs_direction(mem, grad);
    if (dot(dir, grad) > -1e-14) {
      dir.assign(grad.begin(), grad.end());
      for (double& v : dir) v = -v;
    }

    bool accepted = false;
    double fn_accepted = 0.0;
    for (int attempt = 0; attempt < 2 && !accepted; ++attempt) {
      double step = 1.0;
      for (int ls = 0; ls < 60; ++ls) {
        for (std::size_t i = 0; i < n; ++i) xn[i] = res.x[i] + step * dir[i];
        project(xn, lower, upper);
        double pred = 0.0;
        for (std::size_t i = 0; i < n; ++i) pred += grad[i] * (xn[i] - res.x[i]);
        if (pred > -1e-300) {
          step *= 0.5;
          continue;
        }
        const double fn = f(xn, gn);
        if (fn <= res.value + 1e-4 * pred) {
          accepted = true;
          fn_accepted = fn;
          break;
        }
        step *= 0.5;
      }
      if (!accepted) {
        // retry once along steepest descent with fresh memory
        dir.assign(grad.begin(), grad.end());
        for (double& v : dir) v = -v;
        mem.clear();
      }
    }
    if (!accepted) {
      res.converged = res.projected_grad_norm <= tol * 10.0;
      return res;
    }

    Pair p;
    p.s.resize(n);
    p.y.resize(n);
    double sy = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      p.s[i] = xn[i] - res.x[i];
      p.y[i] = gn[i] - grad[i];
      sy += p.s[i] * p.y[i];
    }
    const double ss = std::sqrt(dot(p.s, p.s)), yy = std::sqrt(dot(p.y, p.y));
    if (sy > 1e-12 * ss * yy) {
      p.rho = 1.0 / sy;
      mem.push_back(std::move(p));
      if (mem.size() > memory) mem.pop_front();
    }
    res.x = xn;
    grad = gn;
    res.value = fn_accepted;
  }
  res.projected_grad_norm = projected_grad_norm(res.x, grad);
  res.iterations = max_iterations;
  res.converged = res.projected_grad_norm <= tol;
  return res;
}

}  // namespace sigld
