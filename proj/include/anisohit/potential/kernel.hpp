#pragma once

#include <cmath>
#include <functional>
#include <limits>
#include <string>
#include <utility>

#include "anisohit/error.hpp"
#include "anisohit/gauge/conditions.hpp"
#include "anisohit/gauge/derived_gauge.hpp"

namespace anisohit {

// Symmetric radial potential kernel k(|z|). `order` is the power of the
// blow-up at 0 (k ~ r^{-order}); log factors do not change integrability.
struct PotentialKernel {
  std::function<double(double)> radial_profile;
  double order = 0.0;
  bool finite_at_zero = true;
  std::string name;

  double operator()(double r) const {
    if (r == 0.0 && !finite_at_zero) return std::numeric_limits<double>::infinity();
    return radial_profile(r);
  }
  // Whether the self-energy of a k-dimensional cell is finite.
  bool integrable_at_zero(int k) const { return finite_at_zero || order < k; }
};

inline PotentialKernel riesz_kernel(double beta) {
  if (!(beta >= 0.0) || !std::isfinite(beta)) throw ConfigError("riesz kernel: order must be >= 0");
  if (beta == 0.0) return {[](double) { return 1.0; }, 0.0, true, "riesz(0)"};
  return {[beta](double r) { return std::pow(r, -beta); }, beta, false, "riesz(" + std::to_string(beta) + ")"};
}

inline PotentialKernel constant_kernel(double c = 1.0) {
  if (!(c > 0.0) || !std::isfinite(c)) throw ConfigError("constant kernel: value must be positive");
  return {[c](double) { return c; }, 0.0, true, "constant"};
}

// z -> 1 / g-bar(|z|) up to the end of the monotone range (at most diam_cap),
// constant beyond.
inline PotentialKernel kernel_from_gauge(const DerivedGauge& dg) {
  const double e = dg.exponent();
  if (dg.all_power()) {
    if (e < -detail::kExponentTol) throw ConfigError("kernel_from_gauge: g-bar is decreasing");
    if (e <= detail::kExponentTol) return {[](double) { return 1.0; }, 0.0, true, "gauge(constant)"};
  }
  const auto mono = check_monotone_and_polarity(dg);
  if (mono.increasing_on.empty()) throw ConfigError("kernel_from_gauge: g-bar is not increasing near 0");
  const double top = std::min(dg.diam_cap(), mono.increasing_on.hi);
  const double log_top = std::log(top);
  auto profile = [dg, log_top](double r) {
    const double lr = r > 0.0 ? std::min(std::log(r), log_top) : -std::numeric_limits<double>::infinity();
    return std::exp(-dg.log_gbar(lr));
  };
  return {profile, std::max(e, 0.0), e <= detail::kExponentTol, "gauge"};
}

}  // namespace anisohit
