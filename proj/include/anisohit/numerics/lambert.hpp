#pragma once

#include <cmath>
#include <limits>
#include <numbers>
#include <string>

#include "anisohit/error.hpp"

namespace anisohit::numerics {

namespace detail {

// Branch-point expansion in p = -sqrt(2 (1 + e x)).
inline double wm1_branch_series(double p) {
  return -1.0 + p * (1.0 + p * (-1.0 / 3.0 + p * (11.0 / 72.0 + p * (-43.0 / 540.0 +
                     p * (769.0 / 17280.0 + p * (-221.0 / 8505.0))))));
}

inline double wm1_halley(double w, double x) {
  for (int it = 0; it < 30; ++it) {
    const double ew = std::exp(w);
    const double f = w * ew - x;
    const double wp1 = w + 1.0;
    if (wp1 == 0.0) break;
    const double denom = ew * wp1 - (w + 2.0) * f / (2.0 * wp1);
    if (denom == 0.0) break;
    const double step = f / denom;
    double next = w - step;
    if (!(next < -1.0)) next = 0.5 * (w - 1.0);
    if (std::abs(next - w) <= 4e-16 * std::abs(next)) return next;
    w = next;
  }
  return w;
}

// Newton iteration on w + log(-w) = ell, valid away from the branch point.
inline double wm1_log_newton(double ell) {
  const double l2 = std::log(-ell);
  double w = ell - l2 + l2 / ell;
  if (!(w < -1.0)) w = -1.5;
  for (int it = 0; it < 60; ++it) {
    const double f = w + std::log(-w) - ell;
    const double step = f / (1.0 + 1.0 / w);
    double next = w - step;
    if (!(next < -1.0)) next = 0.5 * (w - 1.0);
    if (std::abs(next - w) <= 2e-16 * std::abs(next)) return next;
    w = next;
  }
  return w;
}

}  // namespace detail

// Lower real branch W_{-1} given ell = log(-x), so that arguments far below
// the double range are still representable. Requires ell < -1.
inline double lambert_w_minus1_log(double ell) {
  if (!(ell < -1.0) || std::isnan(ell))
    throw DomainError("lambert_w_minus1: argument must lie in (-1/e, 0)");
  if (std::isinf(ell)) return -std::numeric_limits<double>::infinity();
  const double q = -std::expm1(ell + 1.0);
  if (q < 0.3) {
    const double w0 = detail::wm1_branch_series(-std::sqrt(2.0 * q));
    return detail::wm1_halley(w0, -std::exp(ell));
  }
  return detail::wm1_log_newton(ell);
}

inline double lambert_w_minus1(double x) {
  constexpr double inv_e = 0.36787944117144232159552377016146;
  if (std::isnan(x) || !(x < 0.0))
    throw DomainError("lambert_w_minus1: argument must lie in (-1/e, 0)");
  const double q = 1.0 + std::numbers::e * x;
  if (q <= 0.0) {
    // The double nearest -1/e sits on the branch point.
    if (q > -4e-16 && x >= -inv_e * (1.0 + 4e-16)) return -1.0;
    throw DomainError("lambert_w_minus1: argument must lie in (-1/e, 0)");
  }
  if (q < 0.3) return detail::wm1_halley(detail::wm1_branch_series(-std::sqrt(2.0 * q)), x);
  return detail::wm1_log_newton(std::log(-x));
}

}  // namespace anisohit::numerics
