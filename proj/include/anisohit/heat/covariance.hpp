#pragma once

#include <algorithm>
#include <boost/math/special_functions/expint.hpp>
#include <boost/math/special_functions/hypergeometric_1F1.hpp>
#include <cmath>
#include <limits>
#include <numbers>
#include <vector>

#include "anisohit/error.hpp"
#include "anisohit/heat/model.hpp"
#include "anisohit/numerics/quadrature.hpp"

// Covariance of u(t, x) and u(s, y) with r = |x - y|:
//
//   cov = alpha_H int_0^t int_0^s |tau - sigma|^{2H-2} P(t - tau + s - sigma, r) dsigma dtau,
//
// where P(v, r) = c_P v^{-b} 1F1(b; d/2; -r^2 / (4v)) is the inverse Fourier transform
// of |xi|^{-alpha} exp(-v |xi|^2). With u = a - b and v = a + b for the backward
// times a = t - tau, b = s - sigma, the v-integral has a closed form and
//
//   cov = (alpha_H / 2) int_{-s}^{t} |(t - s) - u|^{2H-2} K(|u|, min(2t - u, 2s + u)) du,
//   K(lo, hi) = int_lo^hi P(v, r) dv.
//
// The spatial decrement uses P(v, 0) - P(v, r) >= 0 directly so that small
// separations carry no cancellation.

namespace anisohit {

namespace heat_detail {

inline constexpr double kEulerGamma = 0.57721566490153286060651209008240243;

// 1 - M(a, c, -w).
inline double one_minus_kummer(double a, double c, double w) {
  if (w < 1.0) {
    double term = 1.0;
    double sum = 0.0;
    for (int n = 1; n < 200; ++n) {
      term *= (a + n - 1) / (c + n - 1) * (-w) / n;
      sum += term;
      if (std::abs(term) <= 1e-17 * std::abs(sum)) break;
    }
    return -sum;
  }
  return 1.0 - boost::math::hypergeometric_1F1(a, c, -w);
}

// B with B'(w) = w^{b-2} (1 - M(b, c, -w)), normalised by B(0) = 0, so that
// int_lo^hi [P(v, 0) - P(v, r)] dv = c_P (r^2/4)^{1-b} [B(r^2/(4 lo)) - B(r^2/(4 hi))].
class SpatialAntiderivative {
 public:
  SpatialAntiderivative(double b, double c, bool white)
      : a_(b - 1.0), c_(c), white_(white), log_case_(std::abs(b - 1.0) <= 1e-12) {
    if (!log_case_) asym_ = std::tgamma(c_) / std::tgamma(c_ - a_);
    if (log_case_ && !unit_c()) b_one_ = log_series(1.0);
  }

  double operator()(double w) const {
    if (!(w > 0.0)) return 0.0;
    if (log_case_) return log_branch(w);
    if (w > 1e12) return (std::pow(w, a_) - asym_) / a_;
    if (w >= 1.0 && white_) {
      // Fast paths for alpha = 0, where c = b.
      if (a_ == -0.5) {
        const double sw = std::sqrt(w);
        return 2.0 * std::sqrt(std::numbers::pi) * std::erf(sw) + 2.0 * std::expm1(-w) / sw;
      }
      if (a_ == 0.5) {
        const double sw = std::sqrt(w);
        return 2.0 * sw - std::sqrt(std::numbers::pi) * std::erf(sw);
      }
    }
    return std::pow(w, a_) * one_minus_kummer(a_, c_, w) / a_;
  }

 private:
  bool unit_c() const { return std::abs(c_ - 1.0) <= 1e-12; }

  // sum_{n>=1} (-1)^{n+1} w^n / (n (c)_n)
  double log_series(double w) const {
    double poch_term = 1.0;  // w^n / (c)_n with sign
    double sum = 0.0;
    for (int n = 1; n < 200; ++n) {
      poch_term *= -w / (c_ + n - 1);
      const double term = -poch_term / n;
      sum += term;
      if (std::abs(term) <= 1e-17 * std::abs(sum)) break;
    }
    return sum;
  }

  double log_branch(double w) const {
    if (w <= 1.0) return log_series(w);
    if (unit_c()) {
      // Ein(w) = E1(w) + log w + gamma.
      const double e1 = w < 700.0 ? boost::math::expint(1, w) : 0.0;
      return e1 + std::log(w) + kEulerGamma;
    }
    auto f = [&](double y) { return one_minus_kummer(1.0, c_, std::exp(y)); };
    const auto r = numerics::integrate(f, 0.0, std::log(w), {1e-15, 1e-13, 2000});
    return b_one_ + r.value;
  }

  double a_;
  double c_;
  bool white_;
  bool log_case_;
  double asym_ = 0.0;
  double b_one_ = 0.0;
};

struct OuterPiece {
  double a;         // far end in u
  double e;         // end at which the substitution is anchored
  double sign;      // u = e + sign * w^{1/p}
  double p;         // substitution power, 1 for a plain piece
  double width;     // range of w
  bool at_delta;    // anchored at the diagonal singularity
  bool plain;       // no substitution: u = a + w
};

// int_{-s}^{t} |delta - u|^{2H-2} inner(u) du with delta = t - s.
template <class Inner>
double outer_integral(const HeatModel& m, double t, double s, const std::vector<double>& extra,
                      Inner&& inner, double rel_tol) {
  const double H = m.H();
  const double b = m.kernel_power();
  const double delta = t - s;
  const double q = 2.0 * H - 2.0;

  std::vector<double> br{-s, t, 0.0, delta};
  for (double x : extra)
    if (x > -s && x < t) br.push_back(x);
  // Geometric grading away from the pair {0, delta} when they nearly coincide.
  if (delta != 0.0) {
    const double gap = std::abs(delta);
    const double left = std::min(0.0, delta), right = std::max(0.0, delta);
    for (double x = gap; right + x < t || left - x > -s; x *= 2.0) {
      if (right + x < t) br.push_back(right + x);
      if (left - x > -s) br.push_back(left - x);
    }
  }
  std::sort(br.begin(), br.end());
  br.erase(std::unique(br.begin(), br.end()), br.end());

  // K(|u|, .) = smooth part + |u|^{1-b} (log|u| when b = 1) near u = 0; with
  // u = w^n the cusp becomes w^{(1-b)n} times a power that keeps it mild.
  const double zero_n = std::abs(b - 1.0) <= 1e-12 ? 4.0
                        : b < 1.0 ? std::clamp(std::ceil(3.0 / (1.0 - b)), 2.0, 8.0)
                                  : std::ceil(4.0 / (2.0 - b));
  auto singular_power = [&](double e) {
    if (e == delta && delta == 0.0) {
      // Weight and kernel singularities coincide: integrand ~ |u|^{2H-2} and |u|^{2H-1-b}.
      if (std::abs(b - 1.0) <= 1e-12) return H - 0.5;
      return std::min(2.0 * H - 1.0, 2.0 * H - b);
    }
    if (e == delta) return 2.0 * H - 1.0;
    if (e == 0.0) return 1.0 / zero_n;
    return 0.0;
  };

  std::vector<OuterPiece> pieces;
  auto add_plain = [&](double lo, double hi) {
    pieces.push_back({lo, lo, 1.0, 1.0, hi - lo, false, true});
  };
  auto add_singular = [&](double e, double far) {
    const double p = singular_power(e);
    const double sign = far > e ? 1.0 : -1.0;
    pieces.push_back({far, e, sign, p, std::pow(std::abs(far - e), p), e == delta, false});
  };
  for (std::size_t i = 0; i + 1 < br.size(); ++i) {
    const double lo = br[i], hi = br[i + 1];
    if (!(hi > lo)) continue;
    const bool sl = singular_power(lo) > 0.0;
    const bool sr = singular_power(hi) > 0.0;
    if (sl && sr) {
      const double mid = 0.5 * (lo + hi);
      add_singular(lo, mid);
      add_singular(hi, mid);
    } else if (sl) {
      add_singular(lo, hi);
    } else if (sr) {
      add_singular(hi, lo);
    } else {
      add_plain(lo, hi);
    }
  }

  auto g = [&](double x) {
    const std::size_t k = std::min(static_cast<std::size_t>(x), pieces.size() - 1);
    const OuterPiece& pc = pieces[k];
    const double w = (x - static_cast<double>(k)) * pc.width;
    if (pc.plain) {
      const double u = pc.a + w;
      return pc.width * std::pow(std::abs(delta - u), q) * inner(u);
    }
    if (!(w > 0.0)) return 0.0;
    const double inv_p = 1.0 / pc.p;
    const double u = pc.e + pc.sign * std::pow(w, inv_p);
    double jac;
    if (pc.at_delta) {
      // |delta - u|^{2H-2} du/dw combined analytically.
      jac = inv_p * std::pow(w, (2.0 * H - 1.0) * inv_p - 1.0);
    } else {
      jac = std::pow(std::abs(delta - u), q) * inv_p * std::pow(w, inv_p - 1.0);
    }
    return pc.width * jac * inner(u);
  };

  numerics::QuadratureOptions opt;
  opt.abs_tol = 0.0;
  opt.rel_tol = rel_tol;
  opt.max_intervals = 3000;
  std::vector<double> xb(pieces.size() + 1);
  for (std::size_t k = 0; k < xb.size(); ++k) xb[k] = static_cast<double>(k);
  const auto res = numerics::integrate(g, std::span<const double>(xb), opt);
  if (!std::isfinite(res.value) || (!res.converged && res.abs_error > 1e-8 * std::abs(res.value)))
    throw NumericalError("covariance: quadrature did not converge (t = " + std::to_string(t) +
                         ", s = " + std::to_string(s) + ")");
  return res.value;
}

inline void require_supported(const HeatModel& m) {
  if (m.alpha() > 0.0 && m.d() > 3)
    throw UnsupportedConfiguration("covariance: alpha > 0 is supported for d <= 3 only");
}

}  // namespace heat_detail

inline constexpr double kCovarianceRelTol = 1e-12;

// E[u(t, x) u(s, x)].
inline double temporal_covariance(const HeatModel& m, double t, double s,
                                  double rel_tol = kCovarianceRelTol) {
  heat_detail::require_supported(m);
  if (!(t >= 0.0 && s >= 0.0)) throw DomainError("covariance: times must be nonnegative");
  if (t == 0.0 || s == 0.0) return 0.0;
  if (t == s) return variance(m, t);
  const double b = m.kernel_power();
  const double cP = m.kernel_constant();
  const bool log_case = std::abs(b - 1.0) <= 1e-12;
  auto inner = [&](double u) {
    const double lo = std::abs(u);
    const double hi = std::min(2.0 * t - u, 2.0 * s + u);
    if (!(hi > lo)) return 0.0;
    if (log_case) return cP * std::log(hi / lo);
    return cP * (std::pow(hi, 1.0 - b) - std::pow(lo, 1.0 - b)) / (1.0 - b);
  };
  return 0.5 * m.alpha_H() * heat_detail::outer_integral(m, t, s, {}, inner, rel_tol);
}

// 2 (E[u(t,x) u(s,x)] - E[u(t,x) u(s,y)]) for |x - y| = r; nonnegative.
inline double spatial_decrement(const HeatModel& m, double t, double s, double r,
                                double rel_tol = kCovarianceRelTol) {
  heat_detail::require_supported(m);
  if (!(t >= 0.0 && s >= 0.0)) throw DomainError("covariance: times must be nonnegative");
  if (!(r >= 0.0)) throw DomainError("covariance: distance must be nonnegative");
  if (t == 0.0 || s == 0.0 || r == 0.0) return 0.0;
  const double b = m.kernel_power();
  const heat_detail::SpatialAntiderivative B(b, 0.5 * m.d(), m.alpha() == 0.0);
  const double r2q = 0.25 * r * r;
  const double scale = m.kernel_constant() * std::pow(r2q, 1.0 - b);
  auto inner = [&](double u) {
    const double lo = std::max(std::abs(u), 1e-300);
    const double hi = std::min(2.0 * t - u, 2.0 * s + u);
    if (!(hi > lo)) return 0.0;
    return scale * (B(r2q / lo) - B(r2q / hi));
  };
  const std::vector<double> extra{-r2q, r2q};
  return m.alpha_H() * heat_detail::outer_integral(m, t, s, extra, inner, rel_tol);
}

inline double covariance_at(const HeatModel& m, double t, double s, double r,
                            double rel_tol = kCovarianceRelTol) {
  const double c0 = temporal_covariance(m, t, s, rel_tol);
  if (r == 0.0) return c0;
  return c0 - 0.5 * spatial_decrement(m, t, s, r, rel_tol);
}

inline double covariance(const HeatModel& m, const SpaceTimePoint& p1, const SpaceTimePoint& p2) {
  if (static_cast<int>(p1.x.size()) != m.d() || static_cast<int>(p2.x.size()) != m.d())
    throw DomainError("covariance: point dimension does not match the model");
  return covariance_at(m, p1.t, p2.t, spatial_distance(p1, p2));
}

// Squared canonical metric E|u(t,x) - u(s,y)|^2, assembled from the temporal
// and spatial increments so that no large terms cancel.
inline double metric_sq(const HeatModel& m, double t, double s, double r,
                        double rel_tol = kCovarianceRelTol) {
  const double vt = variance(m, t);
  const double vs = variance(m, s);
  const double temporal = t == s ? 0.0 : vt + vs - 2.0 * temporal_covariance(m, t, s, rel_tol);
  const double total = temporal + spatial_decrement(m, t, s, r, rel_tol);
  if (total < 0.0) {
    if (-total <= 1e-10 * std::max(vt, vs)) return 0.0;
    throw NumericalError("canonical metric: negative radicand beyond roundoff");
  }
  return total;
}

inline double canonical_metric(const HeatModel& m, const SpaceTimePoint& p1, const SpaceTimePoint& p2) {
  if (static_cast<int>(p1.x.size()) != m.d() || static_cast<int>(p2.x.size()) != m.d())
    throw DomainError("canonical metric: point dimension does not match the model");
  return std::sqrt(metric_sq(m, p1.t, p2.t, spatial_distance(p1, p2)));
}

}  // namespace anisohit
