#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <limits>
#include <vector>

#include "anisohit/error.hpp"
#include "anisohit/gauge/gauge_spec.hpp"
#include "anisohit/numerics/quadrature.hpp"

namespace anisohit {

// The pair of gauges governing a field indexed by R^{d1} x R^{d2} with values
// in R^D, together with the cap c_{I,J} of the gauge integrals.
class DerivedGauge {
 public:
  DerivedGauge(GaugeSpec q1, GaugeSpec q2, int d1, int d2, int D, double diam_cap)
      : q1_(q1), q2_(q2), d1_(d1), d2_(d2), D_(D), cap_(diam_cap) {
    if (d1 < 0 || d2 < 0 || d1 + d2 < 1) throw ConfigError("derived gauge: invalid d1, d2");
    if (D < 1) throw ConfigError("derived gauge: D must be positive");
    if (!(diam_cap > 0.0) || !std::isfinite(diam_cap))
      throw ConfigError("derived gauge: diam_cap must be positive and finite");
    for (int i = 0; i < 2; ++i) {
      if (dim(i) > 0 && diam_cap > gauge(i).range_hi() * (1.0 + 1e-12))
        throw ConfigError("derived gauge: diam_cap beyond the range of a gauge");
    }
  }

  // Single gauge with parameter dimension d.
  static DerivedGauge single(GaugeSpec q, int d, int D, double diam_cap) {
    return DerivedGauge(q, q, 0, d, D, diam_cap);
  }

  const GaugeSpec& q1() const { return q1_; }
  const GaugeSpec& q2() const { return q2_; }
  const GaugeSpec& gauge(int i) const { return i == 0 ? q1_ : q2_; }
  int d1() const { return d1_; }
  int d2() const { return d2_; }
  int dim(int i) const { return i == 0 ? d1_ : d2_; }
  int D() const { return D_; }
  double diam_cap() const { return cap_; }

  // One effective gauge: the gauges coincide or only one carries dimension.
  bool is_single() const { return d1_ == 0 || d2_ == 0 || q1_ == q2_; }
  const GaugeSpec& single_gauge() const { return d1_ == 0 ? q2_ : q1_; }
  int total_dim() const { return d1_ + d2_; }

  // chi = sum d_i / nu_i; the power exponent of g-bar is D - chi.
  double chi() const {
    double s = 0.0;
    for (int i = 0; i < 2; ++i)
      if (dim(i) > 0) s += dim(i) / gauge(i).nu();
    return s;
  }
  double exponent() const { return D_ - chi(); }

  // Power of log(1/tau) multiplying tau^exponent() in the small-tau asymptotics.
  double log_power() const {
    double s = 0.0;
    for (int i = 0; i < 2; ++i)
      if (dim(i) > 0) s += dim(i) * gauge(i).delta() / gauge(i).nu();
    return s;
  }

  bool all_power() const {
    return (d1_ == 0 || q1_.is_power()) && (d2_ == 0 || q2_.is_power());
  }

  double log_gbar(double log_tau) const {
    double r = D_ * log_tau;
    for (int i = 0; i < 2; ++i)
      if (dim(i) > 0) r -= dim(i) * gauge(i).log_inverse(log_tau);
    return r;
  }

  // d log g-bar / d log tau, positive exactly where g-bar increases.
  double gbar_elasticity(double log_tau) const {
    double r = D_;
    for (int i = 0; i < 2; ++i) {
      if (dim(i) == 0) continue;
      const double lt = gauge(i).log_inverse(log_tau);
      r -= dim(i) / gauge(i).elasticity(lt);
    }
    return r;
  }

  // Log of the v-integrand with respect to s = log rho, Jacobian included.
  double log_v_integrand(double s) const {
    if (is_single()) {
      const GaugeSpec& q = single_gauge();
      const double lt = q.log_inverse(s);
      return -D_ * s + (total_dim() - 1) * lt - q.log_derivative(lt) + s;
    }
    double r = (1.0 - D_) * s + s;
    for (int i = 0; i < 2; ++i) {
      const double lt = gauge(i).log_inverse(s);
      r += (dim(i) - 1) * lt - gauge(i).log_derivative(lt);
    }
    return r;
  }

  // log of the v integral over [exp(log_lo), exp(log_hi)].
  double log_v_segment(double log_lo, double log_hi, double rel_tol = 1e-12) const {
    if (!(log_hi > log_lo)) return -std::numeric_limits<double>::infinity();
    const double shift = std::max(log_v_integrand(log_lo),
                                  log_v_integrand(0.5 * (log_lo + log_hi)));
    auto f = [&](double s) {
      const double v = log_v_integrand(s) - shift;
      return std::isfinite(v) ? std::exp(v) : (v > 0 ? std::numeric_limits<double>::infinity() : 0.0);
    };
    numerics::QuadratureOptions opt;
    opt.abs_tol = 0.0;
    opt.rel_tol = rel_tol;
    opt.max_intervals = 4000;
    const auto res = numerics::integrate(f, log_lo, log_hi, opt);
    if (!std::isfinite(res.value) || (!res.converged && res.abs_error > 1e-6 * std::abs(res.value)))
      throw NumericalError("eval_vq: gauge integral does not converge");
    return shift + std::log(res.value);
  }

 private:
  GaugeSpec q1_;
  GaugeSpec q2_;
  int d1_;
  int d2_;
  int D_;
  double cap_;
};

inline double eval_gq(const DerivedGauge& dg, double tau) {
  if (!(tau > 0.0)) throw DomainError("eval_gq: tau must be positive");
  return std::exp(dg.log_gbar(std::log(tau)));
}

// v_q in the single case, v-bar_q in the two-gauge case; zero at the cap.
inline double eval_vq(const DerivedGauge& dg, double tau) {
  if (!(tau > 0.0)) throw DomainError("eval_vq: tau must be positive");
  if (tau > dg.diam_cap() * (1.0 + 1e-12)) throw DomainError("eval_vq: tau beyond diam_cap");
  if (tau >= dg.diam_cap()) return 0.0;
  return std::exp(dg.log_v_segment(std::log(tau), std::log(dg.diam_cap())));
}

struct GrowthReport {
  bool ok = false;
  double sup_value = 0.0;
  double tail_value = 0.0;
  double limit_estimate = 0.0;
  double tail_slope = 0.0;
  std::vector<double> log_tau;
  std::vector<double> values;
};

namespace detail {

inline double ls_slope(const std::vector<double>& x, const std::vector<double>& y) {
  const double n = static_cast<double>(x.size());
  double mx = 0, my = 0;
  for (std::size_t i = 0; i < x.size(); ++i) mx += x[i], my += y[i];
  mx /= n, my /= n;
  double sxy = 0, sxx = 0;
  for (std::size_t i = 0; i < x.size(); ++i)
    sxy += (x[i] - mx) * (y[i] - my), sxx += (x[i] - mx) * (x[i] - mx);
  return sxx > 0 ? sxy / sxx : 0.0;
}

// Intercept of a least-squares quadratic in x.
inline double quadratic_intercept(const std::vector<double>& x, const std::vector<double>& y) {
  std::array<double, 5> m{};
  std::array<double, 3> b{};
  for (std::size_t i = 0; i < x.size(); ++i) {
    double p = 1.0;
    for (int k = 0; k < 5; ++k) {
      m[k] += p;
      if (k < 3) b[k] += p * y[i];
      p *= x[i];
    }
  }
  // Solve the 3x3 normal equations by Cramer's rule.
  const double a00 = m[0], a01 = m[1], a02 = m[2], a11 = m[2], a12 = m[3], a22 = m[4];
  const double det = a00 * (a11 * a22 - a12 * a12) - a01 * (a01 * a22 - a12 * a02) +
                     a02 * (a01 * a12 - a11 * a02);
  if (std::abs(det) < 1e-300) return y.back();
  const double d0 = b[0] * (a11 * a22 - a12 * a12) - a01 * (b[1] * a22 - a12 * b[2]) +
                    a02 * (b[1] * a12 - a11 * b[2]);
  return d0 / det;
}

}  // namespace detail

// v * g on tau_k = diam_cap * 2^-k, k = 1..grid_size, with the integral
// accumulated segment by segment in log space.
inline GrowthReport check_growth(const DerivedGauge& dg, int grid_size) {
  if (grid_size < 16) throw ConfigError("check_growth: grid_size must be at least 16");
  GrowthReport rep;
  const double log_cap = std::log(dg.diam_cap());
  const double step = std::log(2.0);
  double log_I = -std::numeric_limits<double>::infinity();
  bool finite = true;
  for (int k = 1; k <= grid_size; ++k) {
    const double hi = log_cap - (k - 1) * step;
    const double lo = log_cap - k * step;
    const double seg = dg.log_v_segment(lo, hi);
    log_I = std::max(log_I, seg) + std::log1p(std::exp(-std::abs(log_I - seg)));
    const double lv = log_I + dg.log_gbar(lo);
    rep.log_tau.push_back(lo);
    rep.values.push_back(std::exp(lv));
    if (!std::isfinite(lv)) finite = false;
  }
  const std::size_t n = rep.values.size();
  rep.sup_value = *std::max_element(rep.values.begin(), rep.values.end());
  rep.tail_value = rep.values.back();

  const std::size_t q0 = n - std::max<std::size_t>(4, n / 4);
  std::vector<double> xs, ys, xl;
  for (std::size_t i = q0; i < n; ++i) {
    xs.push_back(rep.log_tau[i]);
    ys.push_back(std::log(rep.values[i]));
    xl.push_back(std::log(log_cap - rep.log_tau[i] + 1.0));
  }
  rep.tail_slope = detail::ls_slope(xs, ys);
  // Logarithmic growth or decay shows as a non-vanishing slope against log log(1/tau).
  const double loglog_slope = detail::ls_slope(xl, ys);

  const std::size_t h0 = n / 2;
  std::vector<double> x_inv, y_lin;
  for (std::size_t i = h0; i < n; ++i) {
    x_inv.push_back(1.0 / (log_cap - rep.log_tau[i] + 1.0));
    y_lin.push_back(rep.values[i]);
  }
  rep.limit_estimate = detail::quadratic_intercept(x_inv, y_lin);

  const double vmin = *std::min_element(rep.values.begin(), rep.values.end());
  rep.ok = finite && vmin > 0.0 && std::isfinite(rep.sup_value / vmin) &&
           std::abs(rep.tail_slope) < 0.05 && std::abs(loglog_slope) < 0.25;
  return rep;
}

}  // namespace anisohit
