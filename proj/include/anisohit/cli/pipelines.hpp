#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <functional>
#include <limits>
#include <numbers>
#include <span>
#include <string>
#include <vector>

#include <boost/math/special_functions/beta.hpp>

#include "anisohit/cli/config.hpp"
#include "anisohit/cli/report.hpp"
#include "anisohit/gauge/conditions.hpp"
#include "anisohit/gauge/derived_gauge.hpp"
#include "anisohit/heat/covariance.hpp"
#include "anisohit/heat/hypotheses.hpp"
#include "anisohit/mc/hitting.hpp"
#include "anisohit/numerics/lambert.hpp"
#include "anisohit/potential/capacity.hpp"
#include "anisohit/potential/hausdorff.hpp"
#include "anisohit/potential/kernel.hpp"

namespace anisohit::cli {

struct PipelineResult {
  std::vector<ReportRow> rows;
  std::string data;  // plot-ready CSV, empty when the pipeline has none
};

inline const std::vector<std::string>& pipeline_names() {
  static const std::vector<std::string> names{"gauge-check", "variance-scaling", "metric-equivalence",
                                              "rates",       "capacity",         "hausdorff",
                                              "hit-mc",      "small-ball",       "polarity"};
  return names;
}

namespace pipeline_detail {

inline std::string model_params(const ExperimentConfig& c) {
  return "H=" + format_value(c.H) + ";alpha=" + format_value(c.alpha) + ";d=" + std::to_string(c.d) +
         ";D=" + std::to_string(c.D);
}

inline std::string window_params(const ExperimentConfig& c) {
  return model_params(c) + ";t0=" + format_value(c.t0) + ";T=" + format_value(c.T) + ";M=" + format_value(c.M);
}

inline double verdict(bool b) { return b ? 1.0 : 0.0; }

inline double nu_time(const ExperimentConfig& c) { return c.H - 0.25 * (c.d - c.alpha); }
inline double nu_space(const ExperimentConfig& c) { return std::min(1.0, 2.0 * c.H - 0.5 * (c.d - c.alpha)); }

inline double ols_slope(const std::vector<double>& x, const std::vector<double>& y) {
  const double n = static_cast<double>(x.size());
  double mx = 0.0, my = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) mx += x[i] / n, my += y[i] / n;
  double sxy = 0.0, sxx = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) sxy += (x[i] - mx) * (y[i] - my), sxx += (x[i] - mx) * (x[i] - mx);
  return sxy / sxx;
}

// Root mean square of v about its mean.
inline double spread(const std::vector<double>& v) {
  double mean = 0.0;
  for (double x : v) mean += x / static_cast<double>(v.size());
  double ss = 0.0;
  for (double x : v) ss += (x - mean) * (x - mean);
  return std::sqrt(ss / static_cast<double>(v.size()));
}

inline InflationPolicy policy_of(const ExperimentConfig& c) {
  InflationPolicy p;
  p.constant = c.inflation_constant;
  if (c.inflation == "none") p.kind = InflationPolicy::Kind::None;
  else if (c.inflation == "modulus") p.kind = InflationPolicy::Kind::Modulus;
  else p.kind = InflationPolicy::Kind::Envelope;
  return p;
}

inline std::vector<double> eps_or_default(const ExperimentConfig& c) {
  return c.eps.empty() ? std::vector<double>{0.05, 0.1, 0.2, 0.4} : c.eps;
}

}  // namespace pipeline_detail

// Monotonicity, polarity and growth verdicts for the model's gauges, the
// Lambert branch and the closed forms of the gauge integrals.
inline PipelineResult gauge_check(const ExperimentConfig& c) {
  using namespace pipeline_detail;
  const auto m = c.model();
  const auto dg = heat_derived_gauge(m);
  const std::string p = model_params(c);
  PipelineResult res;
  auto& rows = res.rows;

  const double nu1 = nu_time(c), nu2 = nu_space(c);
  const double exponent = c.D - 1.0 / nu1 - c.d / nu2;
  const bool polar = exponent > detail::kExponentTol;
  const auto mono = check_monotone_and_polarity(dg);
  rows.push_back({"gauge-check:point polarity verdict", p + ";exponent=" + format_value(exponent),
                  verdict(mono.polar_points), verdict(polar), 0.0, Check::Abs});
  if (polar) {
    rows.push_back({"gauge-check:gbar increasing near zero", p, verdict(mono.increasing_on.hi > 0.0), 1.0, 0.0,
                    Check::Abs});
    const auto g = check_growth(dg, c.growth_grid);
    const double limit = 1.0 / (c.D * nu1 * nu2 - (nu2 + c.d * nu1));
    rows.push_back({"gauge-check:growth control verdict", p + ";grid=" + std::to_string(c.growth_grid),
                    verdict(g.ok), 1.0, 0.0, Check::Abs});
    rows.push_back({"gauge-check:growth limit of v*gbar", p + ";grid=" + std::to_string(c.growth_grid),
                    g.limit_estimate, limit, 0.02, Check::Rel});
  }

  // Closed forms of the gauge integral for power gauges with the model's exponents.
  const double cap = dg.diam_cap();
  auto max_rel_error = [&](const DerivedGauge& g, double denom) {
    double worst = 0.0;
    const double e = g.exponent();
    for (int i = 0; i < 100; ++i) {
      const double tau = cap * std::pow(10.0, -6.0 * (i + 1) / 100.0);
      const double expected = (std::pow(tau, -e) - std::pow(cap, -e)) / denom;
      worst = std::max(worst, std::abs(eval_vq(g, tau) - expected) / std::abs(expected));
    }
    return worst;
  };
  const DerivedGauge two(GaugeSpec::power(nu1), GaugeSpec::power(nu2), 1, c.d, c.D, cap);
  if (std::abs(two.exponent()) > 1e-9)
    rows.push_back({"gauge-check:two-gauge integral closed form", p + ";taus=100",
                    max_rel_error(two, nu1 * nu2 * two.exponent()), 1e-8, 0.0, Check::AtMost});
  const auto one = DerivedGauge::single(GaugeSpec::power(nu1), 1 + c.d, c.D, cap);
  if (std::abs(one.exponent()) > 1e-9)
    rows.push_back({"gauge-check:single-gauge integral closed form", p + ";taus=100",
                    max_rel_error(one, nu1 * c.D - (1 + c.d)), 1e-8, 0.0, Check::AtMost});

  // Lambert W_{-1}: residual and the two-sided bound -1 - sqrt(2z) - z < W(-e^{-z-1}) < -1 - sqrt(2z) - 2z/3.
  double worst = 0.0;
  const double lo = -std::exp(-1.0) + 1e-6, hi = -1e-6;
  for (int i = 0; i < 1000; ++i) {
    const double x = lo + (hi - lo) * (i + 0.5) / 1000.0;
    const double w = numerics::lambert_w_minus1(x);
    worst = std::max(worst, std::abs(w * std::exp(w) - x) / std::abs(x));
  }
  rows.push_back({"gauge-check:lambert residual", "points=1000", worst, 1e-12, 0.0, Check::AtMost});
  int violations = 0;
  for (int k = 0; k < 1000; ++k) {
    const double z = std::pow(10.0, -3.0 + 6.0 * k / 999.0);
    const double w = numerics::lambert_w_minus1_log(-z - 1.0);
    if (!(w > -1.0 - std::sqrt(2.0 * z) - z && w < -1.0 - std::sqrt(2.0 * z) - 2.0 * z / 3.0)) ++violations;
  }
  rows.push_back({"gauge-check:lambert two-sided bound violations", "z=1e-3..1e3;points=1000", double(violations),
                  0.0, 0.0, Check::Abs});
  return res;
}

// sigma^2 and the covariance are self-similar of order 2H - (d - alpha)/2 in time.
inline PipelineResult variance_scaling(const ExperimentConfig& c) {
  using namespace pipeline_detail;
  const auto m = c.model();
  const double expo = 2.0 * c.H - 0.5 * (c.d - c.alpha);
  PipelineResult res;
  for (double t : {0.25, 0.5, 1.0})
    for (double k : {0.5, 2.0, 4.0}) {
      const std::string p = model_params(c) + ";t=" + format_value(t) + ";c=" + format_value(k);
      res.rows.push_back({"variance-scaling:variance ratio", p, variance(m, k * t) / variance(m, t),
                          std::pow(k, expo), 1e-6, Check::Rel});
      const double s = 0.5 * t;
      res.rows.push_back({"variance-scaling:covariance ratio at (t, t/2)", p,
                          temporal_covariance(m, k * t, k * s) / temporal_covariance(m, t, s), std::pow(k, expo),
                          1e-6, Check::Rel});
    }
  return res;
}

// Canonical metric against the gauge envelope on quasi-random pairs, with the
// variance and correlation hypotheses.
inline PipelineResult metric_equivalence(const ExperimentConfig& c) {
  using namespace pipeline_detail;
  const auto m = c.model();
  const std::string p = window_params(c) + ";pairs=" + std::to_string(c.n_pairs);
  const auto pts = quasi_random_pairs(m, c.n_pairs, c.seed);
  std::vector<double> ratio(static_cast<std::size_t>(c.n_pairs));
  numerics::parallel_for(ratio.size(), [&](std::size_t i) {
    const auto& a = pts[2 * i];
    const auto& b = pts[2 * i + 1];
    ratio[i] = metric_sq(m, a.t, b.t, spatial_distance(a, b)) / envelope(m, a, b);
  });
  const auto [mn, mx] = std::minmax_element(ratio.begin(), ratio.end());
  PipelineResult res;
  res.rows.push_back({"metric-equivalence:max/min of metric^2 over envelope", p, *mx / *mn, 50.0, 0.0,
                      Check::AtMost});
  const auto hu = check_HU(m, c.n_pairs, c.seed);
  res.rows.push_back({"metric-equivalence:variance bounded away from zero", p, hu.var_min, 0.0, 0.0, Check::AtLeast});
  res.rows.push_back({"metric-equivalence:max correlation", p, hu.max_correlation, 1.0, 0.0, Check::Below});
  res.rows.push_back({"metric-equivalence:variance increment controlled by metric", p, verdict(hu.ratio_bounded), 1.0,
                      0.0, Check::Abs});
  return res;
}

// Log-log slopes of the canonical metric in time and space.
inline PipelineResult rates(const ExperimentConfig& c) {
  using namespace pipeline_detail;
  const auto m = c.model();
  PipelineResult res;
  std::vector<double> lh, lt, lx;
  for (int k = 4; k <= 14; ++k) {
    const double h = std::ldexp(1.0, -k);
    lh.push_back(std::log(h));
    lt.push_back(0.5 * std::log(metric_sq(m, c.T - h, c.T, 0.0)));
    lx.push_back(0.5 * std::log(metric_sq(m, c.T, c.T, h)));
  }
  const std::string p = model_params(c) + ";h=2^-14..2^-4";
  res.rows.push_back({"rates:temporal slope", p, ols_slope(lh, lt), nu_time(c), 0.02, Check::Abs});
  if (!m.critical()) {
    res.rows.push_back({"rates:spatial slope", p, ols_slope(lh, lx), nu_space(c), 0.03, Check::Abs});
  } else {
    const double C = envelope_log_scale(m);
    std::vector<double> with_log, pure;
    for (int k = 0; k <= 30; ++k) {
      const double r = std::pow(10.0, -4.0 + 3.0 * k / 30.0);
      const double l = std::log(metric_sq(m, c.T, c.T, r));
      with_log.push_back(l - std::log(r * r * std::log(C / r)));
      pure.push_back(l - std::log(r * r));
    }
    res.rows.push_back({"rates:pure square residual over log-corrected residual",
                        model_params(c) + ";r=1e-4..1e-1", spread(pure) / spread(with_log), 5.0, 0.0,
                        Check::AtLeast});
  }
  return res;
}

// Capacity of an interval of length L for |z|^{-beta}, 0 < beta < 1, from the
// equilibrium density (1 - t^2)^{(beta - 1)/2} on [-1, 1].
inline double riesz_interval_capacity(double beta, double L) {
  const double mass = boost::math::beta(0.5, 0.5 * (beta + 1.0));
  const double potential = std::numbers::pi / std::cos(0.5 * std::numbers::pi * beta);
  return std::pow(0.5 * L, beta) * mass / potential;
}

// Homogeneity, nesting, trivial kernels and the interval value for Riesz kernels.
inline PipelineResult capacity_pipeline(const ExperimentConfig& c) {
  if (!(c.beta > 0.0 && c.beta < 1.0)) throw ConfigError("capacity: beta must lie in (0, 1)");
  const auto k = riesz_kernel(c.beta);
  const int n = c.n_cells;
  const std::string p = "beta=" + format_value(c.beta) + ";cells=" + std::to_string(n);
  PipelineResult res;
  const double unit = capacity(k, TargetSet::box({0.0}, {1.0}), n).cap;
  const double twice = capacity(k, TargetSet::box({0.0}, {2.0}), 2 * n).cap;
  const double half = capacity(k, TargetSet::box({0.0}, {0.5}), std::max(2, n / 2)).cap;
  res.rows.push_back({"capacity:homogeneity under doubling", p, twice / unit, std::pow(2.0, c.beta), 0.01, Check::Rel});
  res.rows.push_back({"capacity:homogeneity under halving", p, half / unit, std::pow(0.5, c.beta), 0.01, Check::Rel});
  res.rows.push_back({"capacity:interval against equilibrium value", p, unit, riesz_interval_capacity(c.beta, 1.0), 0.02,
                      Check::Rel});

  const auto inner = capacity(k, TargetSet::box({0.0}, {0.5}), n);
  const auto middle = capacity(k, TargetSet::box({0.0}, {1.0}), n);
  const auto outer = capacity(k, TargetSet::unite({TargetSet::box({0.0}, {1.0}), TargetSet::box({2.0}, {2.5})}), n);
  res.rows.push_back({"capacity:nesting [0,0.5] in [0,1]", p, middle.cap, inner.cap * (1.0 - 1e-6), 0.0, Check::AtLeast});
  res.rows.push_back({"capacity:nesting [0,1] in [0,1]+[2,2.5]", p, outer.cap, middle.cap * (1.0 - 1e-6), 0.0,
                      Check::AtLeast});
  res.rows.push_back({"capacity:finite point set, singular kernel", p,
                      capacity(k, TargetSet::points({{0.1}, {0.4}, {0.9}}), 2).cap, 0.0, 0.0, Check::Abs});
  res.rows.push_back({"capacity:unit kernel", "cells=" + std::to_string(n),
                      capacity(constant_kernel(), TargetSet::box({0.0, 0.0}, {1.0, 1.0}), n).cap, 1.0, 1e-12,
                      Check::Abs});
  return res;
}

// Cover estimates for the middle-third Cantor set and for a finite point set.
inline PipelineResult hausdorff_pipeline(const ExperimentConfig&) {
  using pipeline_detail::verdict;
  PipelineResult res;
  const double gamma = std::log(2.0) / std::log(3.0);
  std::vector<double> ladder;
  for (int k = 3; k <= 8; ++k) ladder.push_back(std::pow(3.0, -k));
  const auto cantor = hausdorff_upper(power_set_function(gamma), TargetSet::cantor(10, {0.0}, {1.0}), ladder);
  for (std::size_t i = 0; i < cantor.size(); ++i)
    res.rows.push_back({"hausdorff:cantor premeasure", "gamma=log2/log3;eps=3^-" + std::to_string(i + 3),
                        cantor[i].estimate, std::pow(2.0, gamma), 2.0, Check::Factor});
  const auto pts = hausdorff_upper(power_set_function(0.7), TargetSet::points({{0.1, 0.2}, {0.5, 0.5}}),
                                   {1e-1, 1e-2, 1e-3, 1e-4, 1e-5, 1e-6});
  bool decreasing = true;
  for (std::size_t i = 1; i < pts.size(); ++i) decreasing = decreasing && pts[i].estimate < pts[i - 1].estimate;
  res.rows.push_back({"hausdorff:point set estimates decrease", "gamma=0.7;points=2", verdict(decreasing), 1.0, 0.0,
                      Check::Abs});
  res.rows.push_back({"hausdorff:point set estimate at finest eps", "gamma=0.7;points=2;eps=1e-6",
                      pts.back().estimate, 0.0, 1e-3, Check::Abs});
  res.data = "eps,estimate,balls\n";
  for (const auto& h : cantor)
    res.data += format_value(h.eps) + "," + format_value(h.estimate) + "," + std::to_string(h.balls) + "\n";
  return res;
}

namespace pipeline_detail {

inline std::string estimate_cells(const Estimate& e) {
  return format_value(e.p_hat) + "," + format_value(e.ci_lo) + "," + format_value(e.ci_hi);
}

inline std::string grid_params(const ExperimentConfig& c, const SampleGrid& g) {
  return window_params(c) + ";grid=" + std::to_string(g.times().size()) + "x" + std::to_string(g.n_sites()) +
         ";n=" + std::to_string(c.n_samples) + ";seed=" + std::to_string(c.seed);
}

}  // namespace pipeline_detail

// Ball-hitting frequencies: trivial targets, monotonicity in the radius and the raw/inflated bracket.
inline PipelineResult hit_mc(const ExperimentConfig& c) {
  using namespace pipeline_detail;
  const auto m = c.model();
  const auto grid = SampleGrid::uniform(m, c.grid_times, c.grid_sites);
  auto eps = eps_or_default(c);
  std::sort(eps.begin(), eps.end());
  const auto z = c.centre_or_origin();
  const double rho = inflation_radius(m, grid, policy_of(c));
  const double inf = std::numeric_limits<double>::infinity();
  const FieldSampler sampler(m, grid);
  const auto dist = min_distances(sampler,
                                  {TargetSet::point(z), TargetSet::empty(c.D),
                                   TargetSet::box(std::vector<double>(c.D, -inf), std::vector<double>(c.D, inf))},
                                  c.n_samples, c.seed);
  const std::string p = grid_params(c, grid);
  PipelineResult res;
  res.rows.push_back({"hit-mc:empty target", p, frequency_within(dist[1], 0.0).p_hat, 0.0, 0.0, Check::Abs});
  res.rows.push_back({"hit-mc:whole space", p, frequency_within(dist[2], 0.0).p_hat, 1.0, 0.0, Check::Abs});
  res.data = "eps,p_raw,ci_lo,ci_hi,p_inflated,inflated_ci_lo,inflated_ci_hi\n";
  double prev = 0.0;
  for (double e : eps) {
    const auto raw = frequency_within(dist[0], e);
    const auto infl = frequency_within(dist[0], e + rho);
    const std::string pe = p + ";eps=" + format_value(e) + ";rho=" + format_value(rho);
    res.rows.push_back({"hit-mc:nondecreasing in radius", pe, raw.p_hat, prev, 0.0, Check::AtLeast});
    res.rows.push_back({"hit-mc:raw at most inflated", pe, raw.p_hat, infl.p_hat, 0.0, Check::AtMost});
    res.data += format_value(e) + "," + estimate_cells(raw) + "," + estimate_cells(infl) + "\n";
    prev = raw.p_hat;
  }
  return res;
}

// Log-log slope of the ball-hitting probability against that of g-bar over the same radii.
inline PipelineResult small_ball(const ExperimentConfig& c) {
  using namespace pipeline_detail;
  const auto m = c.model();
  const auto grid = SampleGrid::uniform(m, c.grid_times, c.grid_sites);
  auto eps = eps_or_default(c);
  std::sort(eps.begin(), eps.end());
  const auto z = c.centre_or_origin();
  const FieldSampler sampler(m, grid);
  const auto dist = min_distances(sampler, {TargetSet::point(z)}, c.n_samples, c.seed).front();
  const auto r = small_ball_fit(dist, eps);
  const auto dg = heat_derived_gauge(m);
  std::vector<double> lx, lg;
  for (double e : eps) {
    lx.push_back(std::log(e));
    lg.push_back(dg.log_gbar(std::log(e)));
  }
  const double reference = ols_slope(lx, lg);
  const std::string p = grid_params(c, grid);
  PipelineResult res;
  res.rows.push_back({"small-ball:log-log slope against gbar slope",
                      p + ";eps=" + format_value(eps.front()) + ".." + format_value(eps.back()), r.slope, reference,
                      0.3, Check::Abs});

  // Same replicates at radius eps + rho: the inflated frequency must not fall below the raw one.
  const double rho = inflation_radius(m, grid, policy_of(c));
  res.data = "eps,p_raw,ci_lo,ci_hi,p_inflated,inflated_ci_lo,inflated_ci_hi,gbar\n";
  for (std::size_t i = 0; i < eps.size(); ++i) {
    const auto infl = frequency_within(dist, eps[i] + rho);
    res.rows.push_back({"small-ball:raw at most inflated", p + ";eps=" + format_value(eps[i]) + ";rho=" + format_value(rho),
                        r.estimates[i].p_hat, infl.p_hat, 0.0, Check::AtMost});
    res.data += format_value(eps[i]) + "," + estimate_cells(r.estimates[i]) + "," + estimate_cells(infl) + "," +
                format_value(std::exp(lg[i])) + "\n";
  }
  res.data += "# slope=" + format_value(r.slope) + " se=" + format_value(r.se) +
              " curvature=" + format_value(r.curvature) + " reference=" + format_value(reference) + "\n";
  return res;
}

// Point hitting on refined grids; polar points give a strictly decreasing trend.
inline PipelineResult polarity(const ExperimentConfig& c) {
  using namespace pipeline_detail;
  const auto m = c.model();
  const auto mono = check_monotone_and_polarity(heat_derived_gauge(m));
  const double exponent = c.D - 1.0 / nu_time(c) - c.d / nu_space(c);
  const std::string p = window_params(c);
  PipelineResult res;
  res.rows.push_back({"polarity:point polarity verdict", p + ";exponent=" + format_value(exponent),
                      verdict(mono.polar_points), verdict(exponent > detail::kExponentTol), 0.0, Check::Abs});
  if (c.refinements.size() < 2) throw ConfigError("polarity: need at least two refinements");
  std::vector<SampleGrid> grids;
  for (int k : c.refinements) grids.push_back(SampleGrid::uniform(m, k, k));
  const auto tr = polarity_trend(m, grids, c.centre_or_origin(), c.n_samples, c.seed, policy_of(c));
  res.data = "grid_points,inflation,p_raw,ci_lo,ci_hi,p_inflated,inflated_ci_lo,inflated_ci_hi\n";
  for (std::size_t i = 0; i < grids.size(); ++i) {
    const std::string pg = p + ";grid=" + std::to_string(c.refinements[i]) + "x" + std::to_string(c.refinements[i]) +
                           ";n=" + std::to_string(c.n_samples) + ";seed=" + std::to_string(c.seed) +
                           ";rho=" + format_value(tr.inflation[i]);
    res.rows.push_back({"polarity:raw point hits", pg, tr.raw[i].p_hat, 0.0, 0.0, Check::Abs});
    if (i > 0 && mono.polar_points)
      res.rows.push_back({"polarity:estimate decreases under refinement", pg, tr.inflated[i].p_hat,
                          tr.inflated[i - 1].p_hat, 0.0, Check::Below});
    res.data += std::to_string(tr.grid_points[i]) + "," + format_value(tr.inflation[i]) + "," +
                estimate_cells(tr.raw[i]) + "," + estimate_cells(tr.inflated[i]) + "\n";
  }
  return res;
}

inline PipelineResult run_pipeline(const std::string& name, const ExperimentConfig& c) {
  if (name == "gauge-check") return gauge_check(c);
  if (name == "variance-scaling") return variance_scaling(c);
  if (name == "metric-equivalence") return metric_equivalence(c);
  if (name == "rates") return rates(c);
  if (name == "capacity") return capacity_pipeline(c);
  if (name == "hausdorff") return hausdorff_pipeline(c);
  if (name == "hit-mc") return hit_mc(c);
  if (name == "small-ball") return small_ball(c);
  if (name == "polarity") return polarity(c);
  throw ConfigError("unknown pipeline '" + name + "'");
}

}  // namespace anisohit::cli
