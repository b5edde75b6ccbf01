#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <numbers>
#include <string>
#include <vector>

#include "anisohit/error.hpp"
#include "anisohit/gauge/derived_gauge.hpp"
#include "anisohit/gauge/gauge_spec.hpp"
#include "anisohit/heat/covariance.hpp"
#include "anisohit/heat/model.hpp"
#include "anisohit/numerics/parallel.hpp"
#include "anisohit/numerics/philox.hpp"
#include "anisohit/numerics/qmc.hpp"

namespace anisohit {

// Gauges q1 (time) and q2 (space) with q1(|t-s|) + q2(|x-y|) equivalent to the
// canonical metric on the observation window.
struct MetricEnvelope {
  GaugeSpec q1;
  GaugeSpec q2;
  int beta = 0;  // 1 when the spatial gauge carries the log factor
};

// Log scale 2 e sqrt(d) M of the critical spatial gauge.
inline double envelope_log_scale(const HeatModel& m) {
  return 2.0 * std::numbers::e * std::sqrt(static_cast<double>(m.d())) * m.M();
}

inline MetricEnvelope metric_envelope(const HeatModel& m) {
  const double nu1 = m.H() - 0.25 * (m.d() - m.alpha());
  const GaugeSpec q1 = GaugeSpec::power(nu1);
  if (m.critical()) return {q1, GaugeSpec::power_log(1.0, 0.5, envelope_log_scale(m)), 1};
  return {q1, GaugeSpec::power(std::min(1.0, 0.5 * m.spatial_exponent())), 0};
}

// Gauge pair for the field (t, x) -> u(t, x) in R^D over I x J.
inline DerivedGauge heat_derived_gauge(const HeatModel& m) {
  const auto env = metric_envelope(m);
  const double diam_I = m.T() - m.t0();
  const double diam_J = 2.0 * std::sqrt(static_cast<double>(m.d())) * m.M();
  const double x_top = std::min(diam_J, env.q2.domain_hi());
  const double cap = std::max(env.q1.value(diam_I), env.q2.value(x_top));
  return DerivedGauge(env.q1, env.q2, 1, m.d(), m.D(), std::min(cap, env.q2.range_hi()));
}

// |t-s|^{2H-(d-alpha)/2} + log(C/|x-y|)^beta |x-y|^{2 ^ (4H-(d-alpha))}.
inline double envelope_at(const HeatModel& m, double dt, double r) {
  const double temporal = dt > 0.0 ? std::pow(dt, m.temporal_exponent()) : 0.0;
  double spatial = 0.0;
  if (r > 0.0) {
    spatial = std::pow(r, m.spatial_exponent());
    if (m.critical()) spatial *= std::log(envelope_log_scale(m) / r);
  }
  return temporal + spatial;
}

inline double envelope(const HeatModel& m, const SpaceTimePoint& p1, const SpaceTimePoint& p2) {
  const double dt = std::abs(p1.t - p2.t);
  const double r = spatial_distance(p1, p2);
  if (dt == 0.0 && r == 0.0) throw DomainError("envelope: identical points");
  return envelope_at(m, dt, r);
}

struct EtaCandidate {
  std::string name;
  double eta = 0.0;
  double max_ratio = 0.0;
  bool bounded = false;
};

struct HUReport {
  double var_min = 0.0;
  double var_max = 0.0;
  double max_correlation = 0.0;  // over pairs with separation >= 1e-3
  std::vector<EtaCandidate> candidates;
  std::size_t regime_index = 0;  // candidate matching the model's regime
  bool variance_ok = false;
  bool correlation_ok = false;
  bool ratio_bounded = false;
  bool ok() const { return variance_ok && correlation_ok && ratio_bounded; }
};

// Quasi-random points of [t0, T] x [-M, M]^d from a rotated Halton sequence.
inline std::vector<SpaceTimePoint> quasi_random_pairs(const HeatModel& m, int n_pairs, std::uint64_t seed) {
  const int dim = 2 * (1 + m.d());
  const numerics::Philox4x32 gen(seed);
  std::vector<double> shift(dim);
  for (int k = 0; k < dim; ++k) {
    const auto r = gen({static_cast<std::uint32_t>(k), 0x48554849u, 0, 0});
    shift[k] = numerics::to_open_unit(r[0], r[1]);
  }
  const numerics::Halton h(dim, shift);
  std::vector<SpaceTimePoint> pts;
  pts.reserve(2 * static_cast<std::size_t>(n_pairs));
  for (int i = 0; i < n_pairs; ++i) {
    const auto u = h.point(static_cast<std::uint64_t>(i));
    for (int side = 0; side < 2; ++side) {
      const int o = side * (1 + m.d());
      SpaceTimePoint p;
      p.t = m.t0() + (m.T() - m.t0()) * u[o];
      for (int j = 0; j < m.d(); ++j) p.x.push_back(m.M() * (2.0 * u[o + 1 + j] - 1.0));
      pts.push_back(std::move(p));
    }
  }
  return pts;
}

// Variance bounds, correlation below one and the Hoelder-type control of the
// variance by the canonical metric, on quasi-random pairs of I x J.
inline HUReport check_HU(const HeatModel& m, int n_pairs, std::uint64_t seed) {
  if (n_pairs < 100) throw ConfigError("check_HU: n_pairs must be at least 100");
  const auto pts = quasi_random_pairs(m, n_pairs, seed);
  const std::size_t n = static_cast<std::size_t>(n_pairs);

  std::vector<double> sep(n), vt(n), vs(n), d2(n);
  numerics::parallel_for(n, [&](std::size_t i) {
    const auto& a = pts[2 * i];
    const auto& b = pts[2 * i + 1];
    const double r = spatial_distance(a, b);
    sep[i] = std::hypot(a.t - b.t, r);
    vt[i] = variance(m, a.t);
    vs[i] = variance(m, b.t);
    d2[i] = metric_sq(m, a.t, b.t, r);
  });

  HUReport rep;
  rep.var_min = std::numeric_limits<double>::infinity();
  rep.var_max = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    rep.var_min = std::min({rep.var_min, vt[i], vs[i]});
    rep.var_max = std::max({rep.var_max, vt[i], vs[i]});
    if (sep[i] >= 1e-3) {
      const double st = std::sqrt(vt[i]), ss = std::sqrt(vs[i]);
      const double one_minus_rho = (d2[i] - (st - ss) * (st - ss)) / (2.0 * st * ss);
      rep.max_correlation = std::max(rep.max_correlation, 1.0 - one_minus_rho);
    }
  }
  rep.variance_ok = std::isfinite(rep.var_max) && rep.var_min > 0.0;
  rep.correlation_ok = rep.max_correlation < 1.0 - 1e-6;

  const double nu1 = m.H() - 0.25 * (m.d() - m.alpha());
  rep.candidates = {{"eta_time", 1.0 / nu1 - 1.0}, {"eta_unit", 1.0}, {"eta_log", 2.0 * 0.9 - 1.0}};
  rep.regime_index = m.critical() ? 2 : 0;

  std::vector<std::size_t> order(n);
  for (std::size_t i = 0; i < n; ++i) order[i] = i;
  std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return sep[a] < sep[b]; });
  const std::size_t decile = std::max<std::size_t>(1, n / 10);

  for (auto& c : rep.candidates) {
    double near = 0.0, far = 0.0;
    for (std::size_t k = 0; k < n; ++k) {
      const std::size_t i = order[k];
      if (!(d2[i] > 0.0)) continue;
      const double ratio = std::abs(vt[i] - vs[i]) / std::pow(d2[i], 0.5 * (1.0 + c.eta));
      (k < decile ? near : far) = std::max(k < decile ? near : far, ratio);
    }
    c.max_ratio = std::max(near, far);
    c.bounded = std::isfinite(c.max_ratio) && near <= 2.0 * far;
  }
  rep.ratio_bounded = rep.candidates[rep.regime_index].bounded;
  return rep;
}

}  // namespace anisohit
