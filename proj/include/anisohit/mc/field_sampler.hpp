#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <map>
#include <memory>
#include <vector>

#include <Eigen/Cholesky>
#include <Eigen/Dense>

#include "anisohit/error.hpp"
#include "anisohit/heat/covariance.hpp"
#include "anisohit/heat/model.hpp"
#include "anisohit/mc/grid.hpp"
#include "anisohit/numerics/parallel.hpp"
#include "anisohit/numerics/philox.hpp"

namespace anisohit {

// One replicate of the D-component field on a grid: values(c, p) is
// component c at grid point p.
struct FieldSample {
  Eigen::MatrixXd values;
  std::uint64_t seed = 0;
  std::uint64_t replicate_index = 0;
};

inline constexpr double kCovarianceJitter = 1e-10;
inline constexpr int kMaxJitterEscalations = 4;

// Grid covariance matrix of one component. Space enters only through the
// lattice offset, so each (time pair, squared offset) is evaluated once.
inline Eigen::MatrixXd grid_covariance(const HeatModel& m, const SampleGrid& g, double rel_tol = 1e-10) {
  g.check_inside(m);
  const std::size_t nt = g.times().size(), ns = g.n_sites();
  std::map<long, std::size_t> key_slot;
  std::vector<std::vector<long>> pair_key(ns, std::vector<long>(ns));
  for (std::size_t a = 0; a < ns; ++a) {
    const auto ka = g.site_index(a);
    for (std::size_t b = 0; b < ns; ++b) {
      const auto kb = g.site_index(b);
      long s = 0;
      for (std::size_t i = 0; i < ka.size(); ++i) s += static_cast<long>(ka[i] - kb[i]) * (ka[i] - kb[i]);
      pair_key[a][b] = s;
      key_slot.emplace(s, 0);
    }
  }
  std::vector<double> dist;
  for (auto& [k, slot] : key_slot) {
    slot = dist.size();
    dist.push_back(g.site_spacing() * std::sqrt(static_cast<double>(k)));
  }

  // cov[time pair][distance slot]
  std::vector<std::pair<std::size_t, std::size_t>> tpairs;
  for (std::size_t i = 0; i < nt; ++i)
    for (std::size_t j = i; j < nt; ++j) tpairs.emplace_back(i, j);
  std::vector<std::vector<double>> table(tpairs.size(), std::vector<double>(dist.size()));
  numerics::parallel_for(tpairs.size() * dist.size(), [&](std::size_t w) {
    const std::size_t tp = w / dist.size(), k = w % dist.size();
    const double t = g.times()[tpairs[tp].second], s = g.times()[tpairs[tp].first];
    table[tp][k] = covariance_at(m, t, s, dist[k], rel_tol);
  });

  const std::size_t n = g.size();
  Eigen::MatrixXd C(n, n);
  std::size_t tp = 0;
  for (std::size_t i = 0; i < nt; ++i)
    for (std::size_t j = i; j < nt; ++j, ++tp)
      for (std::size_t a = 0; a < ns; ++a)
        for (std::size_t b = 0; b < ns; ++b) {
          const double v = table[tp][key_slot[pair_key[a][b]]];
          C(i * ns + a, j * ns + b) = v;
          C(j * ns + b, i * ns + a) = v;
        }
  return C;
}

// Exact Gaussian sampler: cached Cholesky factor of the grid covariance and
// counter-based normals keyed by (seed, replicate, component).
class FieldSampler {
 public:
  static constexpr std::size_t kBatch = 64;

  FieldSampler(const HeatModel& m, SampleGrid grid, double mean = 0.0)
      : grid_(std::move(grid)), D_(m.D()), mean_(mean) {
    const Eigen::MatrixXd C = grid_covariance(m, grid_);
    const double scale = C.diagonal().maxCoeff();
    double eps = 0.0;
    for (int attempt = 0; attempt <= kMaxJitterEscalations + 1; ++attempt) {
      Eigen::MatrixXd A = C;
      A.diagonal().array() += eps * scale;
      Eigen::LLT<Eigen::MatrixXd> llt(A);
      if (llt.info() == Eigen::Success) {
        L_ = llt.matrixL();
        jitter_ = eps;
        return;
      }
      eps = eps == 0.0 ? kCovarianceJitter : eps * 10.0;
    }
    throw NumericalError("sampler: covariance factorization failed after jitter escalation");
  }

  const SampleGrid& grid() const { return grid_; }
  int D() const { return D_; }
  double jitter() const { return jitter_; }
  const Eigen::MatrixXd& factor() const { return L_; }

  // Replicates [kBatch * b, kBatch * (b + 1)): one grid-size x kBatch matrix per component.
  std::vector<Eigen::MatrixXd> batch(std::uint64_t seed, std::uint64_t b) const {
    const numerics::Philox4x32 gen(seed);
    const Eigen::Index n = static_cast<Eigen::Index>(grid_.size());
    std::vector<Eigen::MatrixXd> out;
    Eigen::MatrixXd Z(n, static_cast<Eigen::Index>(kBatch));
    for (int c = 0; c < D_; ++c) {
      for (std::size_t j = 0; j < kBatch; ++j) {
        const std::uint64_t r = b * kBatch + j;
        for (Eigen::Index i = 0; i < n; i += 2) {
          const auto z = numerics::normal_pair(
              gen, {static_cast<std::uint32_t>(i / 2), static_cast<std::uint32_t>(r),
                    static_cast<std::uint32_t>(r >> 32), static_cast<std::uint32_t>(c)});
          Z(i, static_cast<Eigen::Index>(j)) = z[0];
          if (i + 1 < n) Z(i + 1, static_cast<Eigen::Index>(j)) = z[1];
        }
      }
      Eigen::MatrixXd Y = L_.triangularView<Eigen::Lower>() * Z;
      if (mean_ != 0.0) Y.array() += mean_;
      out.push_back(std::move(Y));
    }
    return out;
  }

  FieldSample sample(std::uint64_t seed, std::uint64_t replicate) const {
    const auto cols = batch(seed, replicate / kBatch);
    const Eigen::Index j = static_cast<Eigen::Index>(replicate % kBatch);
    FieldSample s;
    s.seed = seed;
    s.replicate_index = replicate;
    s.values.resize(D_, static_cast<Eigen::Index>(grid_.size()));
    for (int c = 0; c < D_; ++c) s.values.row(c) = cols[static_cast<std::size_t>(c)].col(j).transpose();
    return s;
  }

 private:
  SampleGrid grid_;
  int D_;
  double mean_;
  Eigen::MatrixXd L_;
  double jitter_ = 0.0;
};

inline FieldSample sample_field(const HeatModel& m, const SampleGrid& grid, std::uint64_t seed,
                                std::uint64_t replicate) {
  return FieldSampler(m, grid).sample(seed, replicate);
}

}  // namespace anisohit
