#pragma once

#include <cmath>
#include <concepts>
#include <limits>
#include <string>

#include "eepc/errors.hpp"

namespace eepc {

template <typename F>
concept ScalarFunction = requires(F f, double x) {
  { f(x) } -> std::convertible_to<double>;
};

struct RootOptions {
  double residual_tolerance = 1e-10;
  int max_iterations = 200;
};

struct RootResult {
  double root = 0.0;
  double residual = 0.0;  // |g(root)|
  int iterations = 0;
};

/// Root of g on [lo, hi] given g(lo) and g(hi) of opposite sign.
///
/// Regula falsi steps are taken while they keep cutting the bracket at least
/// in half every two iterations; otherwise the step falls back to bisection.
/// Stops once |g| <= residual_tolerance or the bracket collapses to a few ulps.
template <ScalarFunction F>
RootResult find_bracketed_root(F&& g, double lo, double hi, const RootOptions& options = {}) {
  double g_lo = g(lo);
  double g_hi = g(hi);
  if (g_lo == 0.0) return {lo, 0.0, 0};
  if (g_hi == 0.0) return {hi, 0.0, 0};
  if (std::signbit(g_lo) == std::signbit(g_hi)) {
    throw NoRootError("no sign change on [" + std::to_string(lo) + ", " + std::to_string(hi) + "]");
  }

  RootResult best{std::abs(g_lo) < std::abs(g_hi) ? lo : hi, std::min(std::abs(g_lo), std::abs(g_hi)), 0};
  double width_two_steps_ago = std::numeric_limits<double>::infinity();
  double width_last = std::numeric_limits<double>::infinity();
  for (int it = 1; it <= options.max_iterations; ++it) {
    const double width = hi - lo;
    double x = lo - g_lo * width / (g_hi - g_lo);
    const bool secant_ok = std::isfinite(x) && x > lo && x < hi && width <= 0.5 * width_two_steps_ago;
    if (!secant_ok || it % 3 == 0) x = 0.5 * (lo + hi);

    const double gx = g(x);
    best.iterations = it;
    if (std::abs(gx) < best.residual) {
      best.root = x;
      best.residual = std::abs(gx);
    }
    if (std::abs(gx) <= options.residual_tolerance) {
      best.root = x;
      best.residual = std::abs(gx);
      return best;
    }
    if (std::signbit(gx) == std::signbit(g_lo)) {
      lo = x;
      g_lo = gx;
    } else {
      hi = x;
      g_hi = gx;
    }
    width_two_steps_ago = width_last;
    width_last = hi - lo;
    if (hi - lo <= 4.0 * std::numeric_limits<double>::epsilon() * std::max(1.0, std::abs(hi))) break;
  }
  return best;
}

}  // namespace eepc
