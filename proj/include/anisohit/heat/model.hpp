#pragma once

#include <cmath>
#include <numbers>
#include <vector>

#include "anisohit/error.hpp"
#include "anisohit/numerics/quadrature.hpp"

namespace anisohit {

struct SpaceTimePoint {
  double t = 0.0;
  std::vector<double> x;
};

inline double spatial_distance(const SpaceTimePoint& a, const SpaceTimePoint& b) {
  if (a.x.size() != b.x.size()) throw DomainError("points of different spatial dimension");
  double s = 0.0;
  for (std::size_t i = 0; i < a.x.size(); ++i) s += (a.x[i] - b.x[i]) * (a.x[i] - b.x[i]);
  return std::sqrt(s);
}

// Stochastic heat equation driven by noise that is fractional (Hurst H) in time
// and has spectral density |xi|^{-alpha} in space, observed on [t0, T] x [-M, M]^d.
class HeatModel {
 public:
  HeatModel(double H, double alpha, int d, int D, double t0, double T, double M)
      : H_(H), alpha_(alpha), d_(d), D_(D), t0_(t0), T_(T), M_(M) {
    if (!(H > 0.5 && H < 1.0)) throw ConfigError("heat model: H must lie in (1/2, 1)");
    if (d < 1) throw ConfigError("heat model: d must be a positive integer");
    if (D < 1) throw ConfigError("heat model: D must be a positive integer");
    if (!(alpha >= 0.0 && alpha < d)) throw ConfigError("heat model: alpha must lie in [0, d)");
    if (!(d - alpha < 4.0 * H)) throw ConfigError("heat model: requires d - alpha < 4H");
    if (!(t0 > 0.0 && T > t0) || !std::isfinite(T))
      throw ConfigError("heat model: requires 0 < t0 < T");
    if (!(M > 0.0) || !std::isfinite(M)) throw ConfigError("heat model: M must be positive");
    b_ = 0.5 * (d - alpha);
    c_P_ = std::pow(std::numbers::pi, 0.5 * d) * std::tgamma(b_) /
           (std::tgamma(0.5 * d) * std::pow(2.0 * std::numbers::pi, d));
    kappa_ = alpha_H() * c_P_ * unit_square_integral();
  }

  double H() const { return H_; }
  double alpha() const { return alpha_; }
  int d() const { return d_; }
  int D() const { return D_; }
  double t0() const { return t0_; }
  double T() const { return T_; }
  double M() const { return M_; }
  double alpha_H() const { return H_ * (2.0 * H_ - 1.0); }

  // (d - alpha) / 2: the power of the spatial kernel P(v, 0) = c_P v^{-b}.
  double kernel_power() const { return b_; }
  double kernel_constant() const { return c_P_; }
  // Variance at t = 1.
  double kappa() const { return kappa_; }

  double temporal_exponent() const { return 2.0 * H_ - b_; }
  double spatial_exponent() const { return std::min(2.0, 4.0 * H_ - (d_ - alpha_)); }
  bool critical() const { return std::abs(4.0 * H_ - (d_ - alpha_) - 2.0) <= 1e-12; }

 private:
  // int_0^1 int_0^1 |a - b|^{2H-2} (a + b)^{-b} da db = 2 J / (2H - b), where
  // J = int_0^1 (1 - y)^{2H-2} (1 + y)^{-b} dy, taken through 1 - y = w^{1/(2H-1)}.
  double unit_square_integral() const {
    const double p = 2.0 * H_ - 1.0;
    auto f = [&](double w) { return std::pow(2.0 - std::pow(w, 1.0 / p), -b_); };
    const auto r = numerics::integrate(f, 0.0, 1.0, {1e-16, 1e-14, 2000});
    const double J = r.value / p;
    return 2.0 * J / (2.0 * H_ - b_);
  }

  double H_;
  double alpha_;
  int d_;
  int D_;
  double t0_;
  double T_;
  double M_;
  double b_ = 0.0;
  double c_P_ = 0.0;
  double kappa_ = 0.0;
};

inline double variance(const HeatModel& m, double t) {
  if (!(t >= 0.0)) throw DomainError("variance: t must be nonnegative");
  if (t == 0.0) return 0.0;
  return m.kappa() * std::pow(t, m.temporal_exponent());
}

}  // namespace anisohit
