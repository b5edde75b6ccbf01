#include <gtest/gtest.h>

#include <Eigen/Cholesky>
#include <Eigen/Dense>
#include <boost/math/special_functions/hypergeometric_1F1.hpp>
#include <boost/math/special_functions/hypergeometric_pFq.hpp>
#include <cmath>
#include <numbers>
#include <vector>

#include "anisohit/heat/covariance.hpp"
#include "anisohit/heat/hypotheses.hpp"
#include "anisohit/heat/model.hpp"
#include "anisohit/numerics/quadrature.hpp"

using namespace anisohit;
using numerics::integrate;

namespace {

double rel(double a, double b) { return std::abs(a - b) / std::max(std::abs(b), 1e-300); }

// Variance at t = 1 through 2F1(b, 1; 2H; -1) = 2^{-b} 2F1(b, 2H - 1; 2H; 1/2).
double kappa_oracle(const HeatModel& m) {
  const double b = m.kernel_power();
  const double H = m.H();
  const double f = std::pow(2.0, -b) *
                   boost::math::hypergeometric_pFq({b, 2.0 * H - 1.0}, {2.0 * H}, 0.5);
  const double J = f / (2.0 * H - 1.0);
  return m.alpha_H() * m.kernel_constant() * 2.0 * J / (2.0 * H - b);
}

// Integral of |tau - sigma|^{2H-2} f(sigma) over sigma in [0, s], with the
// singularity at sigma = tau removed by sigma = tau -/+ w^{1/(2H-1)}.
template <class F>
double weighted_sigma_integral(double H, double tau, double s, F&& f) {
  const double p = 2.0 * H - 1.0;
  const numerics::QuadratureOptions opt{0.0, 1e-12, 2000};
  double total = 0.0;
  const double left = std::min(tau, s);
  if (left > 0.0) {
    total += integrate([&](double w) { return f(tau - std::pow(w, 1.0 / p)); },
                       tau > s ? std::pow(tau - s, p) : 0.0, std::pow(tau, p), opt)
                 .value / p;
  }
  if (s > tau) {
    total += integrate([&](double w) { return f(tau + std::pow(w, 1.0 / p)); }, 0.0,
                       std::pow(s - tau, p), opt)
                 .value / p;
  }
  return total;
}

// Direct double integral of the heat kernel for alpha = 0.
double covariance_oracle_white(const HeatModel& m, double t, double s, double r) {
  const int d = m.d();
  auto G = [&](double v) {
    if (!(v > 0.0)) return 0.0;
    return std::pow(4.0 * std::numbers::pi * v, -0.5 * d) * std::exp(-r * r / (4.0 * v));
  };
  auto outer = [&](double tau) {
    return weighted_sigma_integral(m.H(), tau, s, [&](double sigma) { return G(t - tau + s - sigma); });
  };
  const std::vector<double> br = s < t ? std::vector<double>{0.0, s, t} : std::vector<double>{0.0, t};
  return m.alpha_H() * integrate(outer, std::span<const double>(br), {0.0, 1e-11, 2000}).value;
}

// Spectral route in d = 1: alpha_H / pi int_0^inf r^{-alpha} cos(r z) I(r^2) dr.
double covariance_oracle_spectral_1d(const HeatModel& m, double t, double s, double z) {
  auto I = [&](double lam) {
    auto outer = [&](double tau) {
      return weighted_sigma_integral(m.H(), tau, s,
                                     [&](double sigma) { return std::exp(-lam * (t - tau + s - sigma)); });
    };
    const std::vector<double> br = s < t ? std::vector<double>{0.0, s, t} : std::vector<double>{0.0, t};
    return integrate(outer, std::span<const double>(br), {0.0, 1e-10, 2000}).value;
  };
  auto f = [&](double r) { return std::pow(r, -m.alpha()) * std::cos(r * z) * I(r * r); };
  const std::vector<double> br{0.0, 1.0, 5.0, 20.0, 60.0, 200.0};
  return m.alpha_H() / std::numbers::pi * integrate(f, std::span<const double>(br), {1e-12, 1e-9, 4000}).value;
}

double log_log_slope(const std::vector<double>& x, const std::vector<double>& y) {
  double mx = 0, my = 0;
  for (std::size_t i = 0; i < x.size(); ++i) mx += std::log(x[i]), my += std::log(y[i]);
  mx /= x.size(), my /= x.size();
  double sxy = 0, sxx = 0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    sxy += (std::log(x[i]) - mx) * (std::log(y[i]) - my);
    sxx += (std::log(x[i]) - mx) * (std::log(x[i]) - mx);
  }
  return sxy / sxx;
}

}  // namespace

TEST(HeatModel, Validation) {
  EXPECT_THROW(HeatModel(0.5, 0, 1, 1, 0.1, 1, 1), ConfigError);
  EXPECT_THROW(HeatModel(0.75, 1.0, 1, 1, 0.1, 1, 1), ConfigError);
  EXPECT_THROW(HeatModel(0.6, 0.0, 3, 1, 0.1, 1, 1), ConfigError);  // d - alpha >= 4H
  EXPECT_THROW(HeatModel(0.75, 0, 1, 1, 0.0, 1, 1), ConfigError);
  EXPECT_THROW(HeatModel(0.75, 0, 1, 1, 0.5, 0.4, 1), ConfigError);
  EXPECT_THROW(HeatModel(0.75, 0, 1, 0, 0.1, 1, 1), ConfigError);
  EXPECT_NO_THROW(HeatModel(0.75, 0, 1, 1, 0.1, 1, 1));
  EXPECT_NEAR(HeatModel(0.75, 0, 1, 1, 0.1, 1, 1).alpha_H(), 0.375, 1e-15);
}

TEST(Variance, KappaMatchesHypergeometricOracle) {
  for (auto [H, a, d] : {std::tuple{0.75, 0.0, 1}, {0.6, 0.0, 1}, {0.9, 0.0, 2}, {0.8, 0.5, 2},
                         {0.95, 0.0, 3}, {0.7, 1.2, 3}}) {
    const HeatModel m(H, a, d, 1, 0.1, 1.0, 1.0);
    EXPECT_LE(rel(m.kappa(), kappa_oracle(m)), 1e-10) << H << " " << a << " " << d;
  }
}

TEST(Variance, MatchesDirectDoubleIntegral) {
  const HeatModel m(0.75, 0.0, 1, 1, 0.1, 1.0, 1.0);
  // Tensor oracle on |tau - sigma|^{2H-2} (tau + sigma)^{-1/2} over the unit square.
  const double I = integrate([&](double tau) {
                     return weighted_sigma_integral(0.75, tau, 1.0,
                                                    [&](double s) { return std::pow(tau + s, -0.5); });
                   }, 0.0, 1.0, {0.0, 1e-11, 2000}).value;
  EXPECT_LE(rel(m.kappa(), m.alpha_H() * I / std::sqrt(4.0 * std::numbers::pi)), 1e-8);
}

TEST(Variance, Examples) {
  const HeatModel m(0.75, 0.0, 1, 1, 0.1, 2.0, 1.0);
  EXPECT_EQ(variance(m, 0.0), 0.0);
  EXPECT_LE(rel(variance(m, 2.0) / variance(m, 1.0), 2.0), 1e-14);
  EXPECT_THROW(variance(m, -1.0), DomainError);
}

TEST(Variance, ScalingLaw) {
  for (auto [H, a, d] : {std::tuple{0.75, 0.0, 1}, {0.6, 0.3, 1}, {0.9, 0.0, 3}}) {
    const HeatModel m(H, a, d, 1, 0.1, 4.0, 1.0);
    for (double c : {0.5, 2.0, 4.0})
      EXPECT_LE(rel(variance(m, c * 0.7) / variance(m, 0.7), std::pow(c, m.temporal_exponent())), 1e-6);
  }
}

TEST(Covariance, DiagonalAndSymmetry) {
  const HeatModel m(0.7, 0.0, 2, 1, 0.1, 1.0, 1.0);
  SpaceTimePoint p{0.6, {0.1, -0.2}}, q{0.85, {0.3, 0.4}};
  EXPECT_LE(rel(covariance(m, p, p), variance(m, 0.6)), 1e-14);
  EXPECT_NEAR(covariance(m, p, q), covariance(m, q, p), 1e-12 * variance(m, 1.0));
  EXPECT_LE(rel(temporal_covariance(m, 0.6, 0.85), temporal_covariance(m, 0.85, 0.6)), 1e-12);
}

TEST(Covariance, TemporalMatchesDirectOracleNearDiagonal) {
  // cov(t, t') approaches var(t) continuously.
  const HeatModel m(0.75, 0.0, 1, 1, 0.1, 1.0, 1.0);
  EXPECT_LE(rel(temporal_covariance(m, 1.0, 1.0 - 1e-9), variance(m, 1.0)), 1e-8);
}

TEST(Covariance, WhiteNoiseMatchesHeatKernelOracle) {
  struct Case { double H; int d; double t, s, r; };
  for (const auto& c : {Case{0.75, 1, 1.0, 1.0, 2.0}, Case{0.75, 1, 1.0, 0.7, 0.3}, Case{0.6, 1, 0.8, 0.5, 0.05},
                        Case{0.9, 2, 1.0, 0.6, 0.4}, Case{0.8, 3, 0.9, 0.9, 0.25}, Case{0.95, 3, 0.5, 1.0, 0.8},
                        Case{0.75, 2, 0.4, 0.9, 0.0}}) {
    const HeatModel m(c.H, 0.0, c.d, 1, 0.1, 1.0, 1.0);
    const double oracle = covariance_oracle_white(m, c.t, c.s, c.r);
    EXPECT_LE(rel(covariance_at(m, c.t, c.s, c.r), oracle), 1e-7)
        << c.H << " d=" << c.d << " t=" << c.t << " s=" << c.s << " r=" << c.r;
  }
}

TEST(Covariance, FarPointsSmallPositiveAndDecreasing) {
  const HeatModel m(0.75, 0.0, 1, 1, 0.1, 1.0, 1.0);
  const double c2 = covariance_at(m, 1.0, 1.0, 2.0);
  EXPECT_GT(c2, 0.0);
  EXPECT_LT(c2, 0.5 * variance(m, 1.0));
  double prev = variance(m, 1.0);
  for (double r : {0.01, 0.1, 0.5, 1.0, 2.0, 3.0}) {
    const double c = covariance_at(m, 1.0, 1.0, r);
    EXPECT_LT(c, prev) << r;
    prev = c;
  }
}

TEST(Covariance, ColoredNoiseMatchesSpectralOracle) {
  const HeatModel m(0.75, 0.4, 1, 1, 0.1, 1.0, 1.0);
  const double oracle = covariance_oracle_spectral_1d(m, 1.0, 0.7, 0.3);
  EXPECT_LE(rel(covariance_at(m, 1.0, 0.7, 0.3), oracle), 1e-6);
}

TEST(Covariance, SpatialAntiderivativeMatchesQuadrature) {
  // B'(w) = w^{b-2} (1 - M(b, d/2, -w)) for several (b, d).
  for (auto [b, d] : {std::pair{0.5, 1}, {0.3, 1}, {1.0, 2}, {0.75, 2}, {1.5, 3}, {1.0, 3}, {1.25, 3}}) {
    const heat_detail::SpatialAntiderivative B(b, 0.5 * d, b == 0.5 * d);
    auto dB = [&](double w) {
      return std::pow(w, b - 2.0) * (1.0 - boost::math::hypergeometric_1F1(b, 0.5 * d, -w));
    };
    for (auto [lo, hi] : {std::pair{0.01, 0.5}, {0.5, 3.0}, {2.0, 40.0}, {40.0, 5000.0}}) {
      const double ref = integrate(dB, lo, hi, {0.0, 1e-13, 2000}).value;
      EXPECT_LE(rel(B(hi) - B(lo), ref), 1e-9) << b << " " << d << " " << lo << " " << hi;
    }
  }
}

TEST(Covariance, UnsupportedHighDimensionalColoredNoise) {
  const HeatModel m(0.9, 0.5, 4, 1, 0.1, 1.0, 1.0);
  EXPECT_NO_THROW(variance(m, 0.5));
  EXPECT_THROW(covariance_at(m, 0.5, 0.6, 0.1), UnsupportedConfiguration);
}

TEST(Covariance, GridMatrixIsPositiveSemidefinite) {
  const HeatModel m(0.75, 0.0, 1, 1, 0.1, 1.0, 1.0);
  const int nt = 16, nx = 32;
  std::vector<std::pair<double, double>> pts;
  for (int i = 0; i < nt; ++i)
    for (int j = 0; j < nx; ++j) pts.push_back({0.1 + 0.9 * i / (nt - 1), -1.0 + 2.0 * j / (nx - 1)});
  const int n = static_cast<int>(pts.size());
  Eigen::MatrixXd C(n, n);
  for (int a = 0; a < n; ++a)
    for (int b = a; b < n; ++b)
      C(a, b) = C(b, a) = covariance_at(m, pts[a].first, pts[b].first, std::abs(pts[a].second - pts[b].second));
  EXPECT_LE((C - C.transpose()).cwiseAbs().maxCoeff(), 0.0);
  const double jitter = 1e-10 * C.diagonal().maxCoeff();
  bool ok = false;
  for (double j : {0.0, jitter, 10.0 * jitter}) {
    Eigen::LLT<Eigen::MatrixXd> llt(C + j * Eigen::MatrixXd::Identity(n, n));
    if (llt.info() == Eigen::Success) {
      ok = true;
      break;
    }
  }
  EXPECT_TRUE(ok);
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(C);
  EXPECT_GE(es.eigenvalues().minCoeff(), -1e-10 * C.diagonal().maxCoeff());
}

TEST(Metric, ZeroOnDiagonalAndErrors) {
  const HeatModel m(0.75, 0.0, 1, 1, 0.1, 1.0, 1.0);
  SpaceTimePoint p{0.5, {0.2}};
  EXPECT_EQ(canonical_metric(m, p, p), 0.0);
  EXPECT_THROW(canonical_metric(m, p, SpaceTimePoint{0.5, {0.2, 0.1}}), DomainError);
}

TEST(Metric, TemporalAndSpatialSlopes) {
  struct Case { double H, alpha; int d; };
  for (const auto& c : {Case{0.75, 0.0, 1}, Case{0.6, 0.0, 1}, Case{0.9, 0.0, 1}, Case{0.8, 0.0, 2},
                        Case{0.7, 0.5, 2}, Case{0.9, 0.0, 3}}) {
    const HeatModel m(c.H, c.alpha, c.d, 1, 0.1, 1.0, 1.0);
    const auto env = metric_envelope(m);
    std::vector<double> h, dt, dx;
    for (int k = 4; k <= 14; ++k) {
      const double step = std::ldexp(1.0, -k);
      h.push_back(step);
      dt.push_back(std::sqrt(metric_sq(m, 1.0 - step, 1.0, 0.0)));
      dx.push_back(std::sqrt(metric_sq(m, 1.0, 1.0, step)));
    }
    EXPECT_NEAR(log_log_slope(h, dt), env.q1.nu(), 0.03) << c.H << " " << c.alpha << " " << c.d;
    if (!m.critical())
      EXPECT_NEAR(log_log_slope(h, dx), env.q2.nu(), 0.03) << c.H << " " << c.alpha << " " << c.d;
  }
}

TEST(Metric, CriticalCaseFavoursLogCorrectedGauge) {
  const HeatModel m(0.75, 0.0, 1, 1, 0.1, 1.0, 1.0);
  ASSERT_TRUE(m.critical());
  const double C = envelope_log_scale(m);
  // Residual of log d^2 - log f around its mean, for f = r^2 log(C/r) and f = r^2.
  std::vector<double> with_log, pure;
  for (int k = 0; k <= 30; ++k) {
    const double r = std::pow(10.0, -4.0 + 3.0 * k / 30.0);
    const double l = std::log(metric_sq(m, 1.0, 1.0, r));
    with_log.push_back(l - std::log(r * r * std::log(C / r)));
    pure.push_back(l - std::log(r * r));
  }
  auto spread = [](const std::vector<double>& v) {
    double mean = 0;
    for (double x : v) mean += x;
    mean /= v.size();
    double ss = 0;
    for (double x : v) ss += (x - mean) * (x - mean);
    return std::sqrt(ss / v.size());
  };
  EXPECT_LT(spread(with_log), spread(pure));
}

TEST(Metric, SandwichWithEnvelope) {
  struct Case { double H, alpha; int d; };
  for (const auto& c : {Case{0.75, 0.0, 1}, Case{0.6, 0.0, 1}, Case{0.9, 0.0, 1}, Case{0.8, 0.0, 2},
                        Case{0.7, 0.5, 2}}) {
    const HeatModel m(c.H, c.alpha, c.d, 1, 0.1, 1.0, 1.0);
    const auto pts = quasi_random_pairs(m, 1000, 7);
    double lo = 1e300, hi = 0.0;
    for (std::size_t i = 0; i < pts.size(); i += 2) {
      const double ratio = metric_sq(m, pts[i].t, pts[i + 1].t, spatial_distance(pts[i], pts[i + 1])) /
                           envelope(m, pts[i], pts[i + 1]);
      lo = std::min(lo, ratio);
      hi = std::max(hi, ratio);
    }
    EXPECT_GT(lo, 0.0);
    EXPECT_LE(hi / lo, 50.0) << c.H << " " << c.alpha << " " << c.d;
  }
}

TEST(Envelope, Examples) {
  const HeatModel crit(0.75, 0.0, 1, 1, 0.1, 1.0, 1.0);
  SpaceTimePoint a{0.5, {0.1}}, b{0.7, {0.1}}, c{0.5, {0.4}};
  EXPECT_LE(rel(envelope(crit, a, b), std::pow(0.2, 1.0)), 1e-14);
  EXPECT_LE(rel(envelope(crit, a, c), 0.09 * std::log(2.0 * std::numbers::e / 0.3)), 1e-12);
  EXPECT_THROW(envelope(crit, a, a), DomainError);
  EXPECT_EQ(metric_envelope(crit).beta, 1);
  const HeatModel smooth(0.9, 0.0, 1, 1, 0.1, 1.0, 1.0);
  EXPECT_EQ(metric_envelope(smooth).beta, 0);
  EXPECT_DOUBLE_EQ(smooth.spatial_exponent(), 2.0);
  EXPECT_LE(rel(envelope(smooth, a, c), 0.09), 1e-14);
}

TEST(Envelope, HeatDerivedGaugeCriticalMatchesGrowthLimit) {
  const HeatModel m(0.75, 0.0, 1, 4, 0.1, 1.0, 1.0);
  const auto dg = heat_derived_gauge(m);
  EXPECT_NEAR(dg.q1().nu(), 0.5, 1e-15);
  EXPECT_FALSE(dg.q2().is_power());
  EXPECT_NEAR(dg.diam_cap(), 2.0, 1e-12);
}

TEST(HU, ReportOnNoncriticalModel) {
  const HeatModel m(0.6, 0.0, 1, 1, 0.1, 1.0, 1.0);
  const auto rep = check_HU(m, 1000, 11);
  EXPECT_TRUE(rep.variance_ok);
  EXPECT_GE(rep.var_min, variance(m, m.t0()) * (1 - 1e-12));
  EXPECT_LE(rep.var_max, variance(m, m.T()) * (1 + 1e-12));
  EXPECT_TRUE(rep.correlation_ok);
  EXPECT_EQ(rep.regime_index, 0u);
  EXPECT_TRUE(rep.ratio_bounded);
  EXPECT_TRUE(std::isfinite(rep.candidates[0].max_ratio));
  EXPECT_TRUE(rep.ok());

  // Direct recomputation of the largest ratio with the heat-kernel oracle.
  const auto pts = quasi_random_pairs(m, 1000, 11);
  const double eta = rep.candidates[0].eta;
  double best = 0.0;
  std::size_t arg = 0;
  for (std::size_t i = 0; i < pts.size(); i += 2) {
    const double d2 = metric_sq(m, pts[i].t, pts[i + 1].t, spatial_distance(pts[i], pts[i + 1]));
    const double ratio = std::abs(variance(m, pts[i].t) - variance(m, pts[i + 1].t)) / std::pow(d2, 0.5 * (1 + eta));
    if (ratio > best) best = ratio, arg = i;
  }
  EXPECT_LE(rel(rep.candidates[0].max_ratio, best), 1e-12);
  const double t = pts[arg].t, s = pts[arg + 1].t, r = spatial_distance(pts[arg], pts[arg + 1]);
  const double d2_oracle = variance(m, t) + variance(m, s) - 2.0 * covariance_oracle_white(m, t, s, r);
  const double ratio_oracle = std::abs(variance(m, t) - variance(m, s)) / std::pow(d2_oracle, 0.5 * (1 + eta));
  EXPECT_LE(rel(best, ratio_oracle), 1e-5);
}

TEST(HU, CriticalRegimeUsesLogCandidate) {
  const HeatModel m(0.75, 0.0, 1, 1, 0.1, 1.0, 1.0);
  const auto rep = check_HU(m, 200, 3);
  EXPECT_EQ(rep.regime_index, 2u);
  EXPECT_NEAR(rep.candidates[2].eta, 0.8, 1e-15);
  EXPECT_TRUE(rep.ok());
  EXPECT_THROW(check_HU(m, 50, 3), ConfigError);
}
