#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <string>
#include <vector>

#include "anisohit/error.hpp"
#include "anisohit/heat/hypotheses.hpp"
#include "anisohit/mc/field_sampler.hpp"
#include "anisohit/numerics/parallel.hpp"
#include "anisohit/potential/target_set.hpp"

namespace anisohit {

struct Estimate {
  double p_hat = 0.0;
  std::size_t n = 0;
  double ci_lo = 0.0;
  double ci_hi = 0.0;
};

// 95% Wilson score interval.
inline Estimate wilson(std::size_t hits, std::size_t n) {
  if (n == 0) throw DomainError("estimate: no samples");
  if (hits > n) throw DomainError("estimate: more hits than samples");
  constexpr double z = 1.959963984540054;
  const double nn = static_cast<double>(n);
  const double p = static_cast<double>(hits) / nn;
  const double denom = 1.0 + z * z / nn;
  const double centre = (p + z * z / (2.0 * nn)) / denom;
  const double half = z * std::sqrt(p * (1.0 - p) / nn + z * z / (4.0 * nn * nn)) / denom;
  Estimate e{p, n, std::max(0.0, centre - half), std::min(1.0, centre + half)};
  e.ci_lo = std::min(e.ci_lo, p);
  e.ci_hi = std::max(e.ci_hi, p);
  return e;
}

// True iff some grid value lies within `inflation` of A.
inline bool hit_indicator(const FieldSample& s, const TargetSet& A, double inflation) {
  if (!(inflation >= 0.0)) throw DomainError("hit_indicator: inflation must be nonnegative");
  if (A.is_empty()) return false;
  if (s.values.rows() != A.dim()) throw DomainError("hit_indicator: target dimension differs from D");
  const double lim = inflation * inflation;
  std::vector<double> y(static_cast<std::size_t>(s.values.rows()));
  for (Eigen::Index p = 0; p < s.values.cols(); ++p) {
    for (Eigen::Index c = 0; c < s.values.rows(); ++c) y[static_cast<std::size_t>(c)] = s.values(c, p);
    if (A.distance_sq(y.data()) <= lim) return true;
  }
  return false;
}

// Minimal distance from the sampled grid image to each target, per replicate:
// result[target][replicate]. Batches are fixed, so results do not depend on
// the number of threads.
inline std::vector<std::vector<double>> min_distances(const FieldSampler& sampler,
                                                      const std::vector<TargetSet>& targets,
                                                      std::size_t n_samples, std::uint64_t seed) {
  for (const auto& A : targets)
    if (!A.is_empty() && A.dim() != sampler.D()) throw DomainError("hitting: target dimension differs from D");
  std::vector<std::vector<double>> out(targets.size(), std::vector<double>(n_samples));
  const std::size_t B = FieldSampler::kBatch;
  const std::size_t n_batches = (n_samples + B - 1) / B;
  const std::size_t D = static_cast<std::size_t>(sampler.D());
  numerics::parallel_for(n_batches, [&](std::size_t b) {
    const auto comps = sampler.batch(seed, b);
    const Eigen::Index n = comps.front().rows();
    std::vector<double> y(D);
    for (std::size_t j = 0; j < B; ++j) {
      const std::size_t r = b * B + j;
      if (r >= n_samples) break;
      for (std::size_t t = 0; t < targets.size(); ++t) {
        double best = std::numeric_limits<double>::infinity();
        if (!targets[t].is_empty()) {
          for (Eigen::Index p = 0; p < n && best > 0.0; ++p) {
            for (std::size_t c = 0; c < D; ++c) y[c] = comps[c](p, static_cast<Eigen::Index>(j));
            best = std::min(best, targets[t].distance_sq(y.data()));
          }
        }
        out[t][r] = std::sqrt(best);
      }
    }
  });
  return out;
}

inline Estimate frequency_within(const std::vector<double>& dist, double radius) {
  const auto hits = static_cast<std::size_t>(std::count_if(dist.begin(), dist.end(), [&](double d) { return d <= radius; }));
  return wilson(hits, dist.size());
}

struct InflationPolicy {
  enum class Kind { None, Envelope, Fixed, Modulus };
  Kind kind = Kind::Envelope;
  double constant = 3.0;  // c in c (q1(dt) + q2(dx)) sqrt(2 log #grid)
  double fixed = 0.0;
};

// Grid modulus bound c (q1(dt) + q2(dx)) sqrt(2 log #grid) from the metric envelope.
inline double envelope_inflation(const HeatModel& m, const SampleGrid& g, double c = 3.0) {
  const auto env = metric_envelope(m);
  const double dt = g.time_spacing(), dx = g.site_spacing();
  const double q1 = dt > 0.0 ? env.q1.value(dt) : 0.0;
  const double q2 = dx > 0.0 ? env.q2.value(std::min(dx, env.q2.domain_hi())) : 0.0;
  return c * (q1 + q2) * std::sqrt(2.0 * std::log(static_cast<double>(std::max<std::size_t>(g.size(), 2))));
}

// One-step envelope modulus c (q1(dt) + q2(dx)) of the grid.
inline double grid_modulus(const HeatModel& m, const SampleGrid& g, double c = 1.0) {
  const auto env = metric_envelope(m);
  const double dt = g.time_spacing(), dx = g.site_spacing();
  const double q1 = dt > 0.0 ? env.q1.value(dt) : 0.0;
  const double q2 = dx > 0.0 ? env.q2.value(std::min(dx, env.q2.domain_hi())) : 0.0;
  return c * (q1 + q2);
}

inline double inflation_radius(const HeatModel& m, const SampleGrid& g, const InflationPolicy& policy) {
  switch (policy.kind) {
    case InflationPolicy::Kind::None: return 0.0;
    case InflationPolicy::Kind::Fixed:
      if (!(policy.fixed >= 0.0)) throw ConfigError("inflation: fixed radius must be nonnegative");
      return policy.fixed;
    case InflationPolicy::Kind::Envelope: return envelope_inflation(m, g, policy.constant);
    case InflationPolicy::Kind::Modulus: return grid_modulus(m, g, policy.constant);
  }
  return 0.0;
}

struct HitEstimate {
  Estimate raw;
  Estimate inflated;
  double inflation = 0.0;
};

inline HitEstimate estimate_hit_prob(const HeatModel& m, const SampleGrid& grid, const TargetSet& A,
                                     std::size_t n_samples, std::uint64_t seed,
                                     const InflationPolicy& policy = {}) {
  if (n_samples < 100) throw ConfigError("estimate_hit_prob: n_samples must be at least 100");
  const double rho = inflation_radius(m, grid, policy);
  const FieldSampler sampler(m, grid);
  const auto dist = min_distances(sampler, {A}, n_samples, seed).front();
  return {frequency_within(dist, 0.0), frequency_within(dist, rho), rho};
}

struct SmallBallResult {
  double slope = 0.0;
  double se = 0.0;
  double curvature = 0.0;  // quadratic coefficient of log p against log eps
  std::vector<double> eps;
  std::vector<Estimate> estimates;
};

inline void check_ladder(std::vector<double>& eps_ladder) {
  if (eps_ladder.size() < 3) throw ConfigError("small_ball_slope: need at least 3 radii");
  std::sort(eps_ladder.begin(), eps_ladder.end());
  if (!(eps_ladder.front() > 0.0)) throw ConfigError("small_ball_slope: radii must be positive");
  if (eps_ladder.back() / eps_ladder.front() < 8.0 * (1.0 - 1e-12))
    throw ConfigError("small_ball_slope: ladder must span at least 3 dyadic steps");
}

// Ordinary least squares of log p(eps) on log eps, where dist holds the
// per-replicate distance from the grid image to z.
inline SmallBallResult small_ball_fit(const std::vector<double>& dist, std::vector<double> eps_ladder) {
  check_ladder(eps_ladder);
  SmallBallResult res;
  res.eps = eps_ladder;
  std::vector<double> x, y;
  for (double e : eps_ladder) {
    const auto est = frequency_within(dist, e);
    res.estimates.push_back(est);
    if (est.p_hat <= 0.0 || est.p_hat >= 1.0)
      throw InsufficientResolution("small_ball_slope: estimate " + std::to_string(est.p_hat) + " at eps = " +
                                   std::to_string(e) + "; widen the ladder or raise n_samples");
    x.push_back(std::log(e));
    y.push_back(std::log(est.p_hat));
  }
  const double k = static_cast<double>(x.size());
  double mx = 0.0, my = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    mx += x[i] / k;
    my += y[i] / k;
  }
  double sxx = 0.0, sxy = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    sxx += (x[i] - mx) * (x[i] - mx);
    sxy += (x[i] - mx) * (y[i] - my);
  }
  res.slope = sxy / sxx;
  double rss = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    const double r = y[i] - my - res.slope * (x[i] - mx);
    rss += r * r;
  }
  res.se = x.size() > 2 ? std::sqrt(rss / (k - 2.0) / sxx) : 0.0;

  // Quadratic fit for the curvature diagnostic.
  Eigen::MatrixXd V(static_cast<Eigen::Index>(x.size()), 3);
  Eigen::VectorXd w(static_cast<Eigen::Index>(x.size()));
  for (std::size_t i = 0; i < x.size(); ++i) {
    const double u = x[i] - mx;
    V.row(static_cast<Eigen::Index>(i)) << 1.0, u, u * u;
    w(static_cast<Eigen::Index>(i)) = y[i];
  }
  res.curvature = V.colPivHouseholderQr().solve(w)(2);
  return res;
}

// Slope of log P(grid image meets B_eps(z)) against log eps.
inline SmallBallResult small_ball_slope(const HeatModel& m, const SampleGrid& grid, const std::vector<double>& z,
                                        std::vector<double> eps_ladder, std::size_t n_samples,
                                        std::uint64_t seed) {
  check_ladder(eps_ladder);
  if (static_cast<int>(z.size()) != m.D()) throw ConfigError("small_ball_slope: centre must lie in R^D");
  if (n_samples < 100) throw ConfigError("small_ball_slope: n_samples must be at least 100");
  const FieldSampler sampler(m, grid);
  return small_ball_fit(min_distances(sampler, {TargetSet::point(z)}, n_samples, seed).front(), eps_ladder);
}

// Log-log slope of g-bar for the heat model's gauges in the non-critical regime.
inline double gbar_slope(const HeatModel& m) {
  const double nu1 = m.H() - 0.25 * (m.d() - m.alpha());
  const double nu2 = std::min(1.0, 2.0 * m.H() - 0.5 * (m.d() - m.alpha()));
  return m.D() - 1.0 / nu1 - m.d() / nu2;
}

struct PolarityTrend {
  std::vector<std::size_t> grid_points;
  std::vector<double> inflation;
  std::vector<Estimate> raw;
  std::vector<Estimate> inflated;
  bool decreasing = false;
};

// Point-hitting estimates on successively refined grids. The exact point is
// hit with probability 0 on any grid, so the trend is read off the inflated
// estimate, whose radius shrinks with the mesh.
inline PolarityTrend polarity_trend(const HeatModel& m, const std::vector<SampleGrid>& grids,
                                    const std::vector<double>& z, std::size_t n_samples, std::uint64_t seed,
                                    const InflationPolicy& policy = {}) {
  if (grids.size() < 2) throw ConfigError("polarity_trend: need at least two grids");
  PolarityTrend tr;
  const auto point = TargetSet::point(z);
  for (const auto& g : grids) {
    const auto h = estimate_hit_prob(m, g, point, n_samples, seed, policy);
    tr.grid_points.push_back(g.size());
    tr.inflation.push_back(h.inflation);
    tr.raw.push_back(h.raw);
    tr.inflated.push_back(h.inflated);
  }
  tr.decreasing = true;
  for (std::size_t i = 1; i < grids.size(); ++i)
    tr.decreasing = tr.decreasing && tr.inflated[i].p_hat < tr.inflated[i - 1].p_hat;
  return tr;
}

}  // namespace anisohit
