#pragma once

#include <algorithm>
#include <cmath>
#include <limits>

#include "anisohit/gauge/derived_gauge.hpp"
#include "anisohit/gauge/gauge_spec.hpp"
#include "anisohit/numerics/quadrature.hpp"

namespace anisohit {

struct Interval {
  double lo = 0.0;
  double hi = 0.0;
  bool empty() const { return !(hi > lo); }
  bool contains(double x) const { return x > lo && x < hi; }
};

struct MonotonicityReport {
  Interval increasing_on;
  bool polar_points = false;
  bool closed_form = false;  // threshold from an exact formula rather than a grid scan
};

namespace detail {

inline constexpr double kExponentTol = 1e-12;

// For g-bar(q(s)) = s^a * log(c/s)^b with a, b > 0 the map increases iff
// log(c/s) > b / a. Returns the bound in the argument of g-bar.
inline double powerlog_threshold(const GaugeSpec& q, double a, double b) {
  const double log_s = std::log(q.log_scale()) - std::max(b / a, 1.0);
  const double s = std::min(std::exp(log_s), q.domain_hi());
  return q.value(s);
}

inline Interval scan_increasing(const DerivedGauge& dg) {
  // Walk up from tiny tau; the interval ends at the first sign change.
  const double log_top = std::log(dg.diam_cap());
  const int n = 4000;
  const double log_bottom = log_top - 690.0;
  double first_bad = std::numeric_limits<double>::quiet_NaN();
  bool any_good = false;
  for (int i = 0; i <= n; ++i) {
    const double lt = log_bottom + (log_top - log_bottom) * i / n;
    if (dg.gbar_elasticity(lt) > 0.0) {
      any_good = true;
    } else {
      first_bad = lt;
      break;
    }
  }
  if (!any_good) return {0.0, 0.0};
  if (std::isnan(first_bad)) return {0.0, dg.diam_cap()};
  // Refine the crossing by bisection.
  double good = first_bad - (log_top - log_bottom) / n;
  double bad = first_bad;
  for (int it = 0; it < 80; ++it) {
    const double mid = 0.5 * (good + bad);
    (dg.gbar_elasticity(mid) > 0.0 ? good : bad) = mid;
  }
  return {0.0, std::exp(good)};
}

}  // namespace detail

inline MonotonicityReport check_monotone_and_polarity(const DerivedGauge& dg) {
  MonotonicityReport rep;
  const double e = dg.exponent();
  rep.polar_points = e > detail::kExponentTol;

  if (dg.all_power()) {
    rep.closed_form = true;
    rep.increasing_on = e > detail::kExponentTol
                            ? Interval{0.0, std::numeric_limits<double>::infinity()}
                            : Interval{0.0, 0.0};
    return rep;
  }

  if (dg.is_single()) {
    // g(q(s)) = s^{nu D - d} log(c/s)^{delta D}.
    const GaugeSpec& q = dg.single_gauge();
    const double a = q.nu() * dg.D() - dg.total_dim();
    rep.closed_form = true;
    rep.increasing_on = a > 0.0 ? Interval{0.0, detail::powerlog_threshold(q, a, q.delta() * dg.D())}
                                : Interval{0.0, 0.0};
    return rep;
  }

  const bool mixed = dg.q1().is_power() != dg.q2().is_power();
  if (mixed) {
    // Power gauge i, PowerLog gauge j: g-bar(q_j(s)) = s^{nu_j D' - d_j} log(c/s)^{delta_j D'}
    // with D' = D - d_i / nu_i.
    const int i = dg.q1().is_power() ? 0 : 1;
    const int j = 1 - i;
    const GaugeSpec& qj = dg.gauge(j);
    const double Dp = dg.D() - dg.dim(i) / dg.gauge(i).nu();
    const double a = qj.nu() * Dp - dg.dim(j);
    rep.closed_form = true;
    rep.increasing_on = (Dp > 0.0 && a > 0.0)
                            ? Interval{0.0, detail::powerlog_threshold(qj, a, qj.delta() * Dp)}
                            : Interval{0.0, 0.0};
    return rep;
  }

  rep.increasing_on = detail::scan_increasing(dg);
  return rep;
}

struct HqReport {
  bool holds = false;
  double log_integral = 0.0;
};

// Scaling hypothesis q(r tau) <= phi(tau) q(r), q'(r tau) <= psi(tau) q(r tau) / r
// with the standard phi, psi of each family, plus finiteness of
// int_0^1 log^p(1 + C / tau^{2d}) phi(tau) psi(tau) dtau.
inline HqReport check_hq(const GaugeSpec& q, double p, int d, double c_tilde = 1.0) {
  if (!(p >= 1.0)) throw ConfigError("check_hq: p must be at least 1");
  if (d < 1) throw ConfigError("check_hq: d must be positive");
  if (!(c_tilde > 0.0)) throw ConfigError("check_hq: constant must be positive");

  const double nu = q.nu();
  const double delta = q.delta();
  const double big_c = std::sqrt(q.log_scale());
  auto log_phi = [&](double log_tau) {
    if (q.is_power()) return nu * log_tau;
    return nu * log_tau + delta * std::log1p(std::log(big_c) - log_tau);
  };

  HqReport rep;
  bool grid_ok = true;
  double r_top = q.domain_hi();
  if (!q.is_power()) r_top = std::min(r_top, big_c / std::exp(1.0));
  if (std::isinf(r_top)) r_top = 1.0;
  if (!(r_top > 0.0)) grid_ok = false;
  const int n = 60;
  for (int a = 0; a < n && grid_ok; ++a) {
    const double lr = std::log(r_top) - 40.0 * a / (n - 1);
    for (int b = 0; b < n; ++b) {
      const double lt = -40.0 * b / (n - 1);
      const double lhs = q.log_value(lr + lt);
      const double rhs = log_phi(lt) + q.log_value(lr);
      if (lhs > rhs + 1e-12 * std::max(1.0, std::abs(rhs))) {
        grid_ok = false;
        break;
      }
      // r tau q'(r tau) <= nu q(r tau)
      const double lhs2 = q.log_derivative(lr + lt) + lr + lt;
      const double rhs2 = std::log(nu) + q.log_value(lr + lt);
      if (lhs2 > rhs2 + 1e-12 * std::max(1.0, std::abs(rhs2))) {
        grid_ok = false;
        break;
      }
    }
  }

  // Substituting tau = exp(-s) turns the integral into one over [0, inf).
  auto integrand = [&](double s) {
    const double two_ds = 2.0 * d * s;
    const double log_term = two_ds + std::log(c_tilde + std::exp(-two_ds));
    const double lp = std::log(nu) + log_phi(-s) + s;  // Phi(tau) = phi(tau) * nu / tau
    return std::pow(log_term, p) * std::exp(lp - s);
  };
  numerics::QuadratureOptions opt;
  opt.abs_tol = 1e-13;
  opt.rel_tol = 1e-11;
  const auto res = numerics::integrate_to_infinity(integrand, 0.0, opt);
  rep.log_integral = res.value;
  rep.holds = grid_ok && res.converged && std::isfinite(res.value);
  return rep;
}

}  // namespace anisohit
