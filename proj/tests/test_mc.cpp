#include <gtest/gtest.h>

#include <cmath>
#include <cstdlib>
#include <limits>
#include <vector>

#include "anisohit/mc/hitting.hpp"

using namespace anisohit;

namespace {

HeatModel model(int D, double H = 0.9) { return HeatModel(H, 0.0, 1, D, 0.5, 1.0, 1.2); }

// Empirical moments of component c at grid point p over n replicates.
struct Moments {
  double mean = 0.0, var = 0.0;
};

std::vector<std::vector<Moments>> moments(const FieldSampler& s, std::size_t n, std::uint64_t seed) {
  const std::size_t pts = s.grid().size();
  std::vector<std::vector<double>> sum(static_cast<std::size_t>(s.D()), std::vector<double>(pts)),
      sq = sum;
  for (std::size_t b = 0; b * FieldSampler::kBatch < n; ++b) {
    const auto comps = s.batch(seed, b);
    for (std::size_t j = 0; j < FieldSampler::kBatch && b * FieldSampler::kBatch + j < n; ++j)
      for (int c = 0; c < s.D(); ++c)
        for (std::size_t p = 0; p < pts; ++p) {
          const double v = comps[static_cast<std::size_t>(c)](static_cast<Eigen::Index>(p), static_cast<Eigen::Index>(j));
          sum[static_cast<std::size_t>(c)][p] += v;
          sq[static_cast<std::size_t>(c)][p] += v * v;
        }
  }
  std::vector<std::vector<Moments>> out(sum.size(), std::vector<Moments>(pts));
  const double nn = static_cast<double>(n);
  for (std::size_t c = 0; c < sum.size(); ++c)
    for (std::size_t p = 0; p < pts; ++p) {
      out[c][p].mean = sum[c][p] / nn;
      out[c][p].var = (sq[c][p] - nn * out[c][p].mean * out[c][p].mean) / (nn - 1.0);
    }
  return out;
}

}  // namespace

TEST(SampleGrid, Validation) {
  EXPECT_THROW(SampleGrid({}, 1, 4, 1.0), ConfigError);
  EXPECT_THROW(SampleGrid({0.6, 0.6}, 1, 4, 1.0), ConfigError);
  EXPECT_THROW(SampleGrid({0.7, 0.6}, 1, 4, 1.0), ConfigError);
  EXPECT_THROW(SampleGrid({0.6}, 1, 0, 1.0), ConfigError);
  EXPECT_THROW(SampleGrid({0.6}, 1, 4, 0.0), ConfigError);
  EXPECT_THROW(SampleGrid::uniform(model(1), 65, 64), ConfigError);
  EXPECT_NO_THROW(SampleGrid::uniform(model(1), 64, 64));
  EXPECT_THROW(SampleGrid({0.4, 0.6}, 1, 4, 1.0).check_inside(model(1)), ConfigError);
  EXPECT_THROW(SampleGrid({0.6}, 1, 4, 2.0).check_inside(model(1)), ConfigError);
  EXPECT_THROW(SampleGrid({0.6}, 2, 4, 1.0).check_inside(model(1)), ConfigError);
}

TEST(SampleGrid, Layout) {
  const auto g = SampleGrid::uniform(model(1), 3, 5);
  EXPECT_EQ(g.size(), 15u);
  EXPECT_DOUBLE_EQ(g.times().front(), 0.5);
  EXPECT_DOUBLE_EQ(g.times().back(), 1.0);
  EXPECT_DOUBLE_EQ(g.site_spacing(), 0.6);
  EXPECT_DOUBLE_EQ(g.time_spacing(), 0.25);
  const auto p = g.point(7);
  EXPECT_DOUBLE_EQ(p.t, 0.75);
  EXPECT_NEAR(p.x[0], 0.0, 1e-15);
  const SampleGrid g2({0.6}, 2, 3, 1.0);
  EXPECT_EQ(g2.site_index(5), (std::vector<int>{2, 1}));
}

TEST(GridCovariance, MatchesPointwiseCovariance) {
  const auto m = model(1);
  const SampleGrid g({0.55, 0.8, 1.0}, 1, 3, 1.0);
  const auto C = grid_covariance(m, g);
  for (std::size_t i = 0; i < g.size(); ++i) {
    EXPECT_NEAR(C(i, i), variance(m, g.point(i).t), 1e-9 * C(i, i));
    for (std::size_t j = 0; j < g.size(); ++j) {
      EXPECT_EQ(C(i, j), C(j, i));
      const double ref = covariance(m, g.point(i), g.point(j));
      EXPECT_NEAR(C(i, j), ref, 1e-9 * C(i, i));
    }
  }
}

TEST(FieldSampler, SinglePointVarianceWithinThreeSE) {
  const auto m = model(1);
  const FieldSampler s(m, SampleGrid({0.8}, 1, 1, 1.0));
  const std::size_t n = 10000;
  const auto mom = moments(s, n, 11);
  const double v = variance(m, 0.8);
  EXPECT_LT(std::abs(mom[0][0].var - v), 3.0 * v * std::sqrt(2.0 / (n - 1.0)));
}

TEST(FieldSampler, ReplicateIsReproducibleAndMatchesBatch) {
  const auto m = model(2);
  const FieldSampler s(m, SampleGrid({0.6, 0.9}, 1, 3, 1.0));
  const auto a = s.sample(5, 70);
  const auto b = s.sample(5, 70);
  EXPECT_TRUE(a.values == b.values);
  EXPECT_EQ(a.seed, 5u);
  EXPECT_EQ(a.replicate_index, 70u);
  const auto batch = s.batch(5, 1);
  for (int c = 0; c < 2; ++c)
    for (Eigen::Index p = 0; p < a.values.cols(); ++p) EXPECT_EQ(a.values(c, p), batch[static_cast<std::size_t>(c)](p, 6));
  EXPECT_FALSE(s.sample(6, 70).values == a.values);
  EXPECT_FALSE(s.sample(5, 71).values == a.values);
  EXPECT_TRUE(sample_field(m, s.grid(), 5, 70).values == a.values);
}

TEST(FieldSampler, CoincidentEvaluationsAgree) {
  // Two grids sharing the point (0.8, 0): the shared row of the factor makes
  // replicate values at that point agree when the point comes first.
  const auto m = model(1);
  const FieldSampler a(m, SampleGrid({0.8}, 1, 1, 1.0));
  const FieldSampler b(m, SampleGrid({0.8, 1.0}, 1, 1, 1.0));
  const auto sa = a.sample(3, 9), sb = b.sample(3, 9);
  EXPECT_NEAR(sa.values(0, 0), sb.values(0, 0), 1e-12 * std::abs(sa.values(0, 0)) + 1e-15);
}

TEST(FieldSampler, CorrelationMatchesCovariance) {
  const auto m = model(1);
  const SampleGrid g({0.6, 1.0}, 1, 2, 1.0);
  const FieldSampler s(m, g);
  const std::size_t n = 10000;
  for (auto [i, j] : {std::pair<std::size_t, std::size_t>{0, 3}, {1, 2}, {0, 2}}) {
    double sxy = 0.0, sxx = 0.0, syy = 0.0;
    for (std::size_t b = 0; b * FieldSampler::kBatch < n; ++b) {
      const auto Y = s.batch(21, b).front();
      for (Eigen::Index r = 0; r < Y.cols(); ++r) {
        const double x = Y(static_cast<Eigen::Index>(i), r), y = Y(static_cast<Eigen::Index>(j), r);
        sxy += x * y;
        sxx += x * x;
        syy += y * y;
      }
    }
    const double rho_hat = sxy / std::sqrt(sxx * syy);
    const double rho = covariance(m, g.point(i), g.point(j)) /
                       std::sqrt(variance(m, g.point(i).t) * variance(m, g.point(j).t));
    EXPECT_LT(std::abs(rho_hat - rho), 3.0 * (1.0 - rho * rho) / std::sqrt(static_cast<double>(n)) + 1e-3)
        << i << "," << j << " rho " << rho;
  }
}

TEST(FieldSampler, MarginalMomentsOnEveryGridPoint) {
  const auto m = model(2);
  const auto g = SampleGrid::uniform(m, 4, 4);
  const FieldSampler s(m, g);
  const std::size_t n = 10000;
  const auto mom = moments(s, n, 2024);
  const double nn = static_cast<double>(n);
  for (int c = 0; c < 2; ++c)
    for (std::size_t p = 0; p < g.size(); ++p) {
      const double v = variance(m, g.point(p).t);
      EXPECT_LE(std::abs(mom[static_cast<std::size_t>(c)][p].mean), 4.0 * std::sqrt(v / nn));
      EXPECT_LT(std::abs(mom[static_cast<std::size_t>(c)][p].var - v), 3.0 * v * std::sqrt(2.0 / (nn - 1.0)));
    }
}

TEST(FieldSampler, FactorReproducesCovariance) {
  const auto m = model(1);
  const auto g = SampleGrid::uniform(m, 6, 6);
  const FieldSampler s(m, g);
  const auto C = grid_covariance(m, g);
  const Eigen::MatrixXd L = s.factor();
  const Eigen::MatrixXd R = L * L.transpose();
  EXPECT_LE((R - C).cwiseAbs().maxCoeff(), (s.jitter() + 1e-12) * C.diagonal().maxCoeff() * 2.0);
  const Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(C);
  EXPECT_GT(es.eigenvalues().minCoeff(), -1e-10 * C.diagonal().maxCoeff());
}

TEST(HitIndicator, Examples) {
  const auto m = model(2);
  const FieldSampler s(m, SampleGrid::uniform(m, 3, 3));
  const double inf = std::numeric_limits<double>::infinity();
  const auto huge = TargetSet::box({-inf, -inf}, {inf, inf});
  const auto far = TargetSet::ball({1e3, 0.0}, 1.0);
  for (std::uint64_t r = 0; r < 50; ++r) {
    const auto sm = s.sample(1, r);
    EXPECT_TRUE(hit_indicator(sm, huge, 0.0));
    EXPECT_FALSE(hit_indicator(sm, far, 0.0));
    EXPECT_FALSE(hit_indicator(sm, TargetSet::empty(2), 10.0));
    const auto pt = TargetSet::point({0.1, -0.2});
    bool prev = false;
    for (double rho : {0.0, 0.05, 0.1, 0.2, 0.4, 0.8, 1.6}) {
      const bool h = hit_indicator(sm, pt, rho);
      EXPECT_TRUE(!prev || h);
      prev = h;
    }
  }
  EXPECT_THROW(hit_indicator(s.sample(1, 0), huge, -1.0), DomainError);
  EXPECT_THROW(hit_indicator(s.sample(1, 0), TargetSet::ball({0, 0, 0}, 1.0), 0.0), DomainError);
}

TEST(Wilson, IntervalProperties) {
  const auto e = wilson(30, 100);
  EXPECT_DOUBLE_EQ(e.p_hat, 0.3);
  EXPECT_LE(e.ci_lo, e.p_hat);
  EXPECT_GE(e.ci_hi, e.p_hat);
  // Reference values of the 95% score interval for 30/100.
  EXPECT_NEAR(e.ci_lo, 0.2189, 1e-4);
  EXPECT_NEAR(e.ci_hi, 0.3958, 1e-4);
  const auto z = wilson(0, 50), o = wilson(50, 50);
  EXPECT_EQ(z.ci_lo, 0.0);
  EXPECT_EQ(o.ci_hi, 1.0);
  const double w1 = wilson(300, 1000).ci_hi - wilson(300, 1000).ci_lo;
  const double w4 = wilson(1200, 4000).ci_hi - wilson(1200, 4000).ci_lo;
  EXPECT_NEAR(w1 / w4, 2.0, 0.02);
  EXPECT_THROW(wilson(0, 0), DomainError);
  EXPECT_THROW(wilson(3, 2), DomainError);
}

TEST(Wilson, CoverageOnBernoulliStandIn) {
  const numerics::Philox4x32 gen(99);
  int covered = 0;
  for (std::uint32_t rep = 0; rep < 200; ++rep) {
    std::size_t hits = 0;
    for (std::uint32_t i = 0; i < 100; ++i) {
      const auto r = gen({i, rep, 0u, 0u});
      if (numerics::to_open_unit(r[0], r[1]) < 0.3) ++hits;
    }
    const auto e = wilson(hits, 100);
    if (e.ci_lo <= 0.3 && 0.3 <= e.ci_hi) ++covered;
  }
  EXPECT_GE(covered, 180);
}

TEST(HitProbability, TrivialTargets) {
  const auto m = model(2);
  const auto g = SampleGrid::uniform(m, 4, 4);
  const double inf = std::numeric_limits<double>::infinity();
  const auto e0 = estimate_hit_prob(m, g, TargetSet::empty(2), 200, 3);
  EXPECT_EQ(e0.raw.p_hat, 0.0);
  EXPECT_EQ(e0.inflated.p_hat, 0.0);
  const auto e1 = estimate_hit_prob(m, g, TargetSet::box({-inf, -inf}, {inf, inf}), 200, 3);
  EXPECT_EQ(e1.raw.p_hat, 1.0);
  EXPECT_EQ(e1.raw.n, 200u);
  EXPECT_THROW(estimate_hit_prob(m, g, TargetSet::empty(2), 99, 3), ConfigError);
}

TEST(HitProbability, RawNeverExceedsInflated) {
  const auto m = model(2);
  const auto g = SampleGrid::uniform(m, 4, 4);
  for (auto kind : {InflationPolicy::Kind::Envelope, InflationPolicy::Kind::Modulus, InflationPolicy::Kind::Fixed}) {
    InflationPolicy pol;
    pol.kind = kind;
    pol.constant = 1.0;
    pol.fixed = 0.1;
    const auto e = estimate_hit_prob(m, g, TargetSet::ball({0.3, 0.0}, 0.2), 500, 8, pol);
    EXPECT_GT(e.inflation, 0.0);
    EXPECT_LE(e.raw.p_hat, e.inflated.p_hat);
  }
  InflationPolicy bad;
  bad.kind = InflationPolicy::Kind::Fixed;
  bad.fixed = -1.0;
  EXPECT_THROW(estimate_hit_prob(m, g, TargetSet::point({0, 0}), 200, 1, bad), ConfigError);
}

TEST(HitProbability, InflationRadiiShrinkWithMesh) {
  const auto m = model(4);
  const auto coarse = SampleGrid::uniform(m, 8, 8), fine = SampleGrid::uniform(m, 32, 32);
  EXPECT_GT(grid_modulus(m, coarse), grid_modulus(m, fine));
  EXPECT_GT(envelope_inflation(m, coarse), envelope_inflation(m, fine));
  EXPECT_NEAR(envelope_inflation(m, fine, 3.0),
              3.0 * grid_modulus(m, fine) * std::sqrt(2.0 * std::log(static_cast<double>(fine.size()))), 1e-14);
}

TEST(HitProbability, BallEstimateIncreasesWithRadius) {
  const auto m = model(4);
  const FieldSampler s(m, SampleGrid::uniform(m, 8, 8));
  const auto dist = min_distances(s, {TargetSet::point({0, 0, 0, 0})}, 2000, 17).front();
  double prev = -1.0;
  for (double e : {0.05, 0.1, 0.2, 0.4, 0.8}) {
    const double p = frequency_within(dist, e).p_hat;
    EXPECT_GE(p, prev);
    prev = p;
  }
  EXPECT_GT(prev, 0.0);
}

TEST(HitProbability, MonotoneInTargetUnderSharedReplicates) {
  const auto m = model(2);
  const FieldSampler s(m, SampleGrid::uniform(m, 4, 4));
  const auto small = TargetSet::ball({0.2, 0.1}, 0.1);
  const auto big = TargetSet::ball({0.2, 0.1}, 0.3);
  const auto u = TargetSet::unite({big, TargetSet::box({-1.0, 0.5}, {-0.5, 1.0})});
  const auto d = min_distances(s, {small, big, u}, 1000, 4);
  for (std::size_t r = 0; r < 1000; ++r) {
    EXPECT_LE(d[1][r], d[0][r]);
    EXPECT_LE(d[2][r], d[1][r]);
  }
  EXPECT_LE(frequency_within(d[0], 0.0).p_hat, frequency_within(d[1], 0.0).p_hat);
}

TEST(HitProbability, DeterministicAcrossThreadCounts) {
  const auto m = model(2);
  const auto g = SampleGrid::uniform(m, 4, 4);
  const std::vector<TargetSet> targets{TargetSet::point({0, 0}), TargetSet::ball({0.3, 0.3}, 0.2)};
  ::setenv("ANISOHIT_THREADS", "1", 1);
  const FieldSampler s1(m, g);
  const auto a = min_distances(s1, targets, 700, 31);
  ::setenv("ANISOHIT_THREADS", "4", 1);
  const FieldSampler s4(m, g);
  const auto b = min_distances(s4, targets, 700, 31);
  ::unsetenv("ANISOHIT_THREADS");
  EXPECT_TRUE(s1.factor() == s4.factor());
  EXPECT_EQ(a, b);
}

TEST(SmallBall, DeterministicSlopeOfGbar) {
  EXPECT_NEAR(gbar_slope(HeatModel(0.9, 0.0, 1, 4, 0.5, 1.0, 1.0)), 4.0 - 1.0 / 0.65 - 1.0, 1e-14);
  EXPECT_NEAR(gbar_slope(HeatModel(0.6, 0.0, 1, 7, 0.5, 1.0, 1.0)), 7.0 - 1.0 / 0.35 - 1.0 / 0.7, 1e-14);
}

TEST(SmallBall, SlopeAndErrors) {
  const auto m = model(2);
  const auto g = SampleGrid::uniform(m, 8, 8);
  const std::vector<double> z{0.0, 0.0};
  const auto r = small_ball_slope(m, g, z, {0.05, 0.1, 0.2, 0.4}, 2000, 5);
  ASSERT_EQ(r.estimates.size(), 4u);
  EXPECT_GT(r.slope, 0.0);
  EXPECT_GE(r.se, 0.0);
  EXPECT_TRUE(std::isfinite(r.curvature));
  EXPECT_THROW(small_ball_slope(m, g, z, {0.1, 0.2}, 2000, 5), ConfigError);
  EXPECT_THROW(small_ball_slope(m, g, z, {0.1, 0.2, 0.4}, 2000, 5), ConfigError);
  EXPECT_THROW(small_ball_slope(m, g, z, {0.0, 0.2, 0.4, 0.8}, 2000, 5), ConfigError);
  EXPECT_THROW(small_ball_slope(m, g, {0.0}, {0.1, 0.2, 0.4, 0.8}, 2000, 5), ConfigError);
  EXPECT_THROW(small_ball_slope(m, g, z, {1e-6, 1e-5, 1e-4, 1e-3}, 200, 5), InsufficientResolution);
  EXPECT_THROW(small_ball_slope(m, g, z, {10.0, 20.0, 40.0, 80.0}, 200, 5), InsufficientResolution);
}

TEST(Polarity, PolarPointEstimateDecreasesUnderRefinement) {
  const auto m = model(4);
  const std::vector<SampleGrid> grids{SampleGrid::uniform(m, 8, 8), SampleGrid::uniform(m, 16, 16),
                                      SampleGrid::uniform(m, 32, 32)};
  InflationPolicy pol;
  pol.kind = InflationPolicy::Kind::Modulus;
  pol.constant = 1.0;
  const auto tr = polarity_trend(m, grids, {0, 0, 0, 0}, 2000, 7, pol);
  EXPECT_TRUE(tr.decreasing);
  for (const auto& e : tr.raw) EXPECT_EQ(e.p_hat, 0.0);
  EXPECT_LT(tr.inflated.back().p_hat, 0.5 * tr.inflated.front().p_hat);
  EXPECT_THROW(polarity_trend(m, {grids.front()}, {0, 0, 0, 0}, 2000, 7, pol), ConfigError);
}
