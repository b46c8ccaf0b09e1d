#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <numeric>
#include <vector>

#include "cavlab/error.hpp"

namespace cavlab {

/// Golden-section search for a minimum of f on [lo, hi].
template <class F>
double golden_section(const F& f, double lo, double hi, double xtol = 1e-12, std::size_t max_iter = 500) {
  if (hi < lo) std::swap(lo, hi);
  constexpr double inv_phi = 0.6180339887498949;
  double a = lo, b = hi;
  double c = b - inv_phi * (b - a);
  double d = a + inv_phi * (b - a);
  double fc = f(c), fd = f(d);
  for (std::size_t i = 0; i < max_iter && (b - a) > xtol; ++i) {
    // <= keeps the left bracket on ties.
    if (fc <= fd) {
      b = d;
      d = c;
      fd = fc;
      c = b - inv_phi * (b - a);
      fc = f(c);
    } else {
      a = c;
      c = d;
      fc = fd;
      d = a + inv_phi * (b - a);
      fd = f(d);
    }
  }
  return fc <= fd ? c : d;
}

struct SimplexResult {
  std::vector<double> x;
  double value = 0.0;
  std::size_t iterations = 0;
  bool converged = false;
};

/// Nelder-Mead downhill simplex. `step` sets the initial simplex edge per
/// coordinate. Converged when the simplex diameter drops below xtol, or when
/// the spread of values falls below ftol times the starting value (the
/// objective has reached its rounding floor).
template <class F>
SimplexResult nelder_mead(const F& f, std::vector<double> x0, const std::vector<double>& step,
                          std::size_t max_iter = 2000, double xtol = 1e-10, double ftol = 1e-15) {
  const std::size_t n = x0.size();
  SimplexResult out;
  if (n == 0) {
    out.x = x0;
    out.value = f(x0);
    out.converged = true;
    return out;
  }
  if (step.size() != n) throw ValidationError("nelder_mead: step size mismatch");

  std::vector<std::vector<double>> pts(n + 1, x0);
  for (std::size_t i = 0; i < n; ++i) pts[i + 1][i] += step[i];
  std::vector<double> vals(n + 1);
  for (std::size_t i = 0; i <= n; ++i) vals[i] = f(pts[i]);
  const double f_start = std::abs(*std::min_element(vals.begin(), vals.end()));

  std::vector<std::size_t> order(n + 1);
  auto sort_simplex = [&] {
    std::iota(order.begin(), order.end(), 0);
    std::stable_sort(order.begin(), order.end(), [&](auto i, auto j) { return vals[i] < vals[j]; });
    std::vector<std::vector<double>> p2;
    std::vector<double> v2;
    for (auto i : order) {
      p2.push_back(pts[i]);
      v2.push_back(vals[i]);
    }
    pts = std::move(p2);
    vals = std::move(v2);
  };
  auto along = [&](const std::vector<double>& centroid, const std::vector<double>& worst, double coef) {
    std::vector<double> x(n);
    for (std::size_t i = 0; i < n; ++i) x[i] = centroid[i] + coef * (worst[i] - centroid[i]);
    return x;
  };

  std::size_t it = 0;
  for (; it < max_iter; ++it) {
    sort_simplex();
    double diameter = 0.0;
    for (std::size_t k = 1; k <= n; ++k)
      for (std::size_t i = 0; i < n; ++i) diameter = std::max(diameter, std::abs(pts[k][i] - pts[0][i]));
    if (diameter < xtol || vals[n] - vals[0] <= ftol * f_start) {
      out.converged = true;
      break;
    }
    std::vector<double> centroid(n, 0.0);
    for (std::size_t k = 0; k < n; ++k)
      for (std::size_t i = 0; i < n; ++i) centroid[i] += pts[k][i] / static_cast<double>(n);

    const auto xr = along(centroid, pts[n], -1.0);
    const double fr = f(xr);
    if (fr < vals[0]) {
      const auto xe = along(centroid, pts[n], -2.0);
      const double fe = f(xe);
      if (fe < fr) {
        pts[n] = xe;
        vals[n] = fe;
      } else {
        pts[n] = xr;
        vals[n] = fr;
      }
    } else if (fr < vals[n - 1]) {
      pts[n] = xr;
      vals[n] = fr;
    } else {
      const bool outside = fr < vals[n];
      const auto xc = along(centroid, pts[n], outside ? -0.5 : 0.5);
      const double fc = f(xc);
      if (fc < std::min(fr, vals[n])) {
        pts[n] = xc;
        vals[n] = fc;
      } else {
        for (std::size_t k = 1; k <= n; ++k) {
          for (std::size_t i = 0; i < n; ++i) pts[k][i] = pts[0][i] + 0.5 * (pts[k][i] - pts[0][i]);
          vals[k] = f(pts[k]);
        }
      }
    }
  }
  sort_simplex();
  out.x = pts[0];
  out.value = vals[0];
  out.iterations = it;
  return out;
}

}  // namespace cavlab
