#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <functional>
#include <unordered_set>
#include <vector>

#include "anisohit/error.hpp"
#include "anisohit/gauge/derived_gauge.hpp"
#include "anisohit/potential/target_set.hpp"

namespace anisohit {

using SetFunction = std::function<double(double)>;

inline SetFunction power_set_function(double gamma) {
  if (!(gamma >= 0.0)) throw ConfigError("set function: exponent must be >= 0");
  return [gamma](double tau) { return std::pow(tau, gamma); };
}

// tau -> g-bar(tau), frozen at its value at diam_cap for larger arguments.
inline SetFunction gbar_set_function(const DerivedGauge& dg) {
  const double log_cap = std::log(dg.diam_cap());
  return [dg, log_cap](double tau) {
    if (!(tau > 0.0)) return 0.0;
    return std::exp(dg.log_gbar(std::min(std::log(tau), log_cap)));
  };
}

struct HausdorffPoint {
  double eps = 0.0;
  double estimate = 0.0;
  std::size_t balls = 0;
};

namespace potential_detail {

struct CellHash {
  std::size_t operator()(const std::vector<std::int64_t>& v) const {
    std::uint64_t h = 0x9e3779b97f4a7c15ull;
    for (auto x : v) {
      h ^= static_cast<std::uint64_t>(x) + 0x9e3779b97f4a7c15ull + (h << 6) + (h >> 2);
    }
    return static_cast<std::size_t>(h);
  }
};

using CellSet = std::unordered_set<std::vector<std::int64_t>, CellHash>;

inline constexpr std::size_t kMaxCoverCells = std::size_t{1} << 24;
inline constexpr double kEdgeTol = 1e-9;

inline void add_checked(CellSet& cells, std::vector<std::int64_t> key) {
  cells.insert(std::move(key));
  if (cells.size() > kMaxCoverCells) throw ConfigError("hausdorff: cover too large for this eps");
}

// Cells of side h meeting the box in a set of positive relative measure
// (touching faces do not count).
inline void mark_box(CellSet& cells, const Box& b, double h) {
  const std::size_t D = b.lo.size();
  std::vector<std::int64_t> first(D), last(D);
  for (std::size_t i = 0; i < D; ++i) {
    first[i] = static_cast<std::int64_t>(std::floor(b.lo[i] / h + kEdgeTol));
    last[i] = std::max(first[i], static_cast<std::int64_t>(std::ceil(b.hi[i] / h - kEdgeTol)) - 1);
  }
  std::vector<std::int64_t> idx = first;
  while (true) {
    add_checked(cells, idx);
    std::size_t k = 0;
    for (; k < D && ++idx[k] > last[k]; ++k) idx[k] = first[k];
    if (k == D) break;
  }
}

inline void mark_ball(CellSet& cells, const Ball& b, double h) {
  const std::size_t D = b.center.size();
  std::vector<std::int64_t> first(D), last(D);
  for (std::size_t i = 0; i < D; ++i) {
    first[i] = static_cast<std::int64_t>(std::floor((b.center[i] - b.radius) / h));
    last[i] = static_cast<std::int64_t>(std::floor((b.center[i] + b.radius) / h));
  }
  std::vector<std::int64_t> idx = first;
  while (true) {
    // Distance from the centre to the closed cell.
    double s = 0.0;
    for (std::size_t i = 0; i < D; ++i) {
      const double lo = static_cast<double>(idx[i]) * h, hi = lo + h;
      const double e = std::max({lo - b.center[i], 0.0, b.center[i] - hi});
      s += e * e;
    }
    if (std::sqrt(s) < b.radius * (1.0 - kEdgeTol)) add_checked(cells, idx);
    std::size_t k = 0;
    for (; k < D && ++idx[k] > last[k]; ++k) idx[k] = first[k];
    if (k == D) break;
  }
}

inline void mark_point(CellSet& cells, const Vec& x, double h) {
  std::vector<std::int64_t> idx(x.size());
  for (std::size_t i = 0; i < x.size(); ++i) idx[i] = static_cast<std::int64_t>(std::floor(x[i] / h + kEdgeTol));
  add_checked(cells, std::move(idx));
}

}  // namespace potential_detail

// Centres of the balls of radius eps covering A: the occupied cells of the
// lattice of side eps * min(1, 2/sqrt(D)), whose circumradius is at most eps.
inline std::vector<Vec> dyadic_cover(const TargetSet& A, double eps) {
  using namespace potential_detail;
  if (!A.is_bounded()) throw DomainError("hausdorff: unbounded set");
  if (!(eps > 0.0) || !std::isfinite(eps)) throw ConfigError("hausdorff: eps must be positive");
  std::vector<Vec> centers;
  if (A.is_empty()) return centers;
  const auto pieces = A.pieces();
  const double h = eps * std::min(1.0, 2.0 / std::sqrt(static_cast<double>(A.dim())));
  CellSet cells;
  for (const auto& b : pieces.boxes) mark_box(cells, b, h);
  for (const auto& b : pieces.balls) mark_ball(cells, b, h);
  for (const auto& p : pieces.points) mark_point(cells, p, h);
  centers.reserve(cells.size());
  for (const auto& c : cells) {
    Vec x(c.size());
    for (std::size_t i = 0; i < c.size(); ++i) x[i] = (static_cast<double>(c[i]) + 0.5) * h;
    centers.push_back(std::move(x));
  }
  std::sort(centers.begin(), centers.end());
  return centers;
}

// Upper estimates sum_i g(2 r_i) of the g-Hausdorff premeasure along the ladder.
inline std::vector<HausdorffPoint> hausdorff_upper(const SetFunction& g, const TargetSet& A,
                                                   const std::vector<double>& eps_ladder) {
  if (!A.is_bounded()) throw DomainError("hausdorff: unbounded set");
  if (eps_ladder.empty()) throw ConfigError("hausdorff: empty eps ladder");
  for (std::size_t i = 0; i < eps_ladder.size(); ++i) {
    if (!(eps_ladder[i] > 0.0) || !std::isfinite(eps_ladder[i]))
      throw ConfigError("hausdorff: eps values must be positive");
    if (i > 0 && !(eps_ladder[i] < eps_ladder[i - 1]))
      throw ConfigError("hausdorff: eps ladder must be strictly decreasing");
  }
  std::vector<HausdorffPoint> out;
  for (double eps : eps_ladder) {
    const std::size_t n = dyadic_cover(A, eps).size();
    out.push_back({eps, n == 0 ? 0.0 : static_cast<double>(n) * g(2.0 * eps), n});
  }
  return out;
}

}  // namespace anisohit
