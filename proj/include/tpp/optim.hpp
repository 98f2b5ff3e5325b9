#pragma once

#include <cmath>
#include <cstddef>
#include <functional>
#include <limits>
#include <stdexcept>
#include <vector>

// Dense BFGS with Armijo backtracking for the low-dimensional maximum
// likelihood fits. Objectives may return +inf/NaN outside their numerically
// safe region; such steps are rejected by the line search.

namespace tpp::optim {

// Returns the objective value and fills grad (same size as x).
using Objective = std::function<double(const std::vector<double>&, std::vector<double>&)>;

struct BfgsOptions {
  double grad_tol = 1e-6;
  std::size_t max_iterations = 500;
  double armijo_c1 = 1e-4;
  double backtrack_shrink = 0.5;
  std::size_t max_line_search_steps = 50;
};

struct BfgsResult {
  std::vector<double> x;
  double value = std::numeric_limits<double>::infinity();
  double grad_norm = std::numeric_limits<double>::infinity();
  std::size_t iterations = 0;
  bool converged = false;
};

namespace detail {

inline double norm2(const std::vector<double>& v) {
  double s = 0.0;
  for (double x : v) s += x * x;
  return std::sqrt(s);
}

}  // namespace detail

inline BfgsResult bfgs_minimize(const Objective& f, std::vector<double> x0,
                                const BfgsOptions& opts = BfgsOptions{}) {
  const std::size_t n = x0.size();
  if (n == 0) throw std::invalid_argument("bfgs_minimize: empty start point");

  std::vector<double> g(n), g_new(n), p(n), x_new(n), s(n), y(n);
  std::vector<double> H(n * n, 0.0);  // inverse Hessian approximation
  for (std::size_t i = 0; i < n; ++i) H[i * n + i] = 1.0;

  BfgsResult res;
  res.x = std::move(x0);
  res.value = f(res.x, g);
  if (!std::isfinite(res.value))
    throw std::invalid_argument("bfgs_minimize: objective not finite at start point");

  for (std::size_t it = 0; it < opts.max_iterations; ++it) {
    res.grad_norm = detail::norm2(g);
    res.iterations = it;
    if (res.grad_norm < opts.grad_tol) {
      res.converged = true;
      return res;
    }

    // p = -H g
    for (std::size_t i = 0; i < n; ++i) {
      double acc = 0.0;
      for (std::size_t j = 0; j < n; ++j) acc += H[i * n + j] * g[j];
      p[i] = -acc;
    }
    double slope = 0.0;
    for (std::size_t i = 0; i < n; ++i) slope += p[i] * g[i];
    if (!(slope < 0.0)) {  // not a descent direction; reset to steepest descent
      for (std::size_t i = 0; i < n; ++i) {
        for (std::size_t j = 0; j < n; ++j) H[i * n + j] = (i == j) ? 1.0 : 0.0;
        p[i] = -g[i];
      }
      slope = -res.grad_norm * res.grad_norm;
      if (slope == 0.0) {
        res.converged = true;
        return res;
      }
    }

    double step = 1.0;
    double f_new = std::numeric_limits<double>::infinity();
    bool accepted = false;
    for (std::size_t ls = 0; ls < opts.max_line_search_steps; ++ls) {
      for (std::size_t i = 0; i < n; ++i) x_new[i] = res.x[i] + step * p[i];
      f_new = f(x_new, g_new);
      if (std::isfinite(f_new) && f_new <= res.value + opts.armijo_c1 * step * slope) {
        accepted = true;
        break;
      }
      step *= opts.backtrack_shrink;
    }
    if (!accepted) return res;  // stuck; report best iterate

    for (std::size_t i = 0; i < n; ++i) {
      s[i] = x_new[i] - res.x[i];
      y[i] = g_new[i] - g[i];
    }
    double sy = 0.0;
    for (std::size_t i = 0; i < n; ++i) sy += s[i] * y[i];
    if (sy > 1e-12) {
      // H <- (I - rho s y^T) H (I - rho y s^T) + rho s s^T
      const double rho = 1.0 / sy;
      std::vector<double> Hy(n, 0.0);
      for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = 0; j < n; ++j) Hy[i] += H[i * n + j] * y[j];
      double yHy = 0.0;
      for (std::size_t i = 0; i < n; ++i) yHy += y[i] * Hy[i];
      for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = 0; j < n; ++j)
          H[i * n + j] += rho * ((1.0 + rho * yHy) * s[i] * s[j] - Hy[i] * s[j] - s[i] * Hy[j]);
    }

    res.x = x_new;
    res.value = f_new;
    g = g_new;
  }
  res.grad_norm = detail::norm2(g);
  res.iterations = opts.max_iterations;
  return res;
}

}  // namespace tpp::optim
