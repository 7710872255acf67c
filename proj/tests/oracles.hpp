#pragma once

// Independent reference implementations used only by tests. These stay
// deliberately naive (direct summation, triple loops, recursive quadrature)
// so they cannot share a failure mode with the library code they check.

#include <cmath>
#include <cstddef>
#include <functional>
#include <numbers>
#include <stdexcept>
#include <vector>

#include "opforge/fft.hpp"

namespace oracles {

/// O(n^2) direct-summation DFT, forward convention exp(-i 2 pi k n / N).
inline opforge::ComplexVector direct_dft(const opforge::ComplexVector& x) {
  const std::size_t n = x.size();
  opforge::ComplexVector out(n);
  for (std::size_t k = 0; k < n; ++k) {
    double sr = 0.0, si = 0.0;
    for (std::size_t j = 0; j < n; ++j) {
      const double ang = -2.0 * std::numbers::pi * static_cast<double>(k) *
                         static_cast<double>(j) / static_cast<double>(n);
      const double c = std::cos(ang), s = std::sin(ang);
      sr += x.re[j] * c - x.im[j] * s;
      si += x.re[j] * s + x.im[j] * c;
    }
    out.re[k] = sr;
    out.im[k] = si;
  }
  return out;
}

/// Triple-loop matrix product oracle, row-major inputs.
inline std::vector<double> naive_matmul(const std::vector<double>& a,
                                        const std::vector<double>& b,
                                        std::size_t m, std::size_t k, std::size_t n) {
  std::vector<double> c(m * n, 0.0);
  for (std::size_t i = 0; i < m; ++i)
    for (std::size_t j = 0; j < n; ++j) {
      double s = 0.0;
      for (std::size_t l = 0; l < k; ++l) s += a[i * k + l] * b[l * n + j];
      c[i * n + j] = s;
    }
  return c;
}

/// Adaptive Simpson quadrature to an absolute tolerance.
inline double adaptive_simpson(const std::function<double(double)>& f, double a,
                               double b, double tol, int depth = 40) {
  auto simpson = [&](double lo, double hi) {
    const double mid = 0.5 * (lo + hi);
    return (hi - lo) / 6.0 * (f(lo) + 4.0 * f(mid) + f(hi));
  };
  std::function<double(double, double, double, int)> recurse =
      [&](double lo, double hi, double whole, int d) -> double {
    const double mid = 0.5 * (lo + hi);
    const double left = simpson(lo, mid);
    const double right = simpson(mid, hi);
    if (d <= 0 || std::abs(left + right - whole) < 15.0 * tol)
      return left + right + (left + right - whole) / 15.0;
    return recurse(lo, mid, left, d - 1) + recurse(mid, hi, right, d - 1);
  };
  return recurse(a, b, simpson(a, b), depth);
}

/// Sort-and-interpolate quantile with the linear-interpolation convention.
inline double quantile_sorted(const std::vector<double>& sorted, double p) {
  if (sorted.empty()) throw std::invalid_argument("quantile of empty list");
  const double pos = p * static_cast<double>(sorted.size() - 1);
  const auto lo = static_cast<std::size_t>(std::floor(pos));
  const auto hi = static_cast<std::size_t>(std::ceil(pos));
  const double frac = pos - static_cast<double>(lo);
  return sorted[lo] + frac * (sorted[hi] - sorted[lo]);
}

}  // namespace oracles
