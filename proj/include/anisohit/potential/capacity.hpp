#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <limits>
#include <vector>

#include <Eigen/Dense>

#include "anisohit/error.hpp"
#include "anisohit/numerics/parallel.hpp"
#include "anisohit/numerics/qmc.hpp"
#include "anisohit/potential/kernel.hpp"
#include "anisohit/potential/target_set.hpp"

namespace anisohit {

// Discrete probability measure on cell centres of a target set.
struct GridMeasure {
  std::vector<Vec> atoms;
  std::vector<double> weights;
  double cell_width = 0.0;  // longest cell side; 0 when all atoms are isolated points
};

struct CapacityResult {
  double cap = 0.0;
  double energy = std::numeric_limits<double>::infinity();
  double gap = 0.0;  // Frank-Wolfe duality gap: energy - optimum <= gap
  int iterations = 0;
  GridMeasure minimizer;
};

// Cell decomposition of a target set: uniform cells (equal sides per axis) on
// the bounding box of the solid part, kept when their centre lies in the set,
// plus the isolated points as zero-width atoms.
struct CellDecomposition {
  std::vector<Vec> centers;
  std::vector<bool> solid;
  Vec side;            // per-axis cell side of the solid cells
  int cell_dim = 0;    // number of axes with positive side
};

namespace potential_detail {

inline constexpr std::size_t kMaxGridCells = std::size_t{1} << 24;

struct SolidGrid {
  Vec lo;
  Vec spacing;
  std::vector<std::size_t> m;
  std::size_t total = 1;
};

inline SolidGrid make_grid(const Box& bb, double h) {
  SolidGrid g;
  g.lo = bb.lo;
  for (std::size_t i = 0; i < bb.lo.size(); ++i) {
    const double e = bb.hi[i] - bb.lo[i];
    const std::size_t mi = e > 0.0 ? std::max<std::size_t>(1, static_cast<std::size_t>(std::ceil(e / h - 1e-9))) : 1;
    g.m.push_back(mi);
    g.spacing.push_back(e > 0.0 ? e / static_cast<double>(mi) : 0.0);
    g.total = g.total > kMaxGridCells / mi ? kMaxGridCells + 1 : g.total * mi;
  }
  return g;
}

// Calls f(center) for each grid cell whose centre lies in the set.
template <class F>
std::size_t for_each_inside(const TargetSet& A, const SolidGrid& g, double tol_sq, F&& f) {
  const std::size_t D = g.lo.size();
  std::vector<std::size_t> idx(D, 0);
  Vec c(D);
  std::size_t count = 0;
  for (std::size_t n = 0; n < g.total; ++n) {
    for (std::size_t i = 0; i < D; ++i) c[i] = g.lo[i] + (static_cast<double>(idx[i]) + 0.5) * g.spacing[i];
    if (A.distance_sq(c.data()) <= tol_sq) {
      ++count;
      f(c);
    }
    for (std::size_t k = 0; k < D && ++idx[k] == g.m[k]; ++k) idx[k] = 0;
  }
  return count;
}

}  // namespace potential_detail

inline CellDecomposition discretize(const TargetSet& A, int n_cells) {
  using namespace potential_detail;
  if (A.is_empty()) throw DomainError("discretize: empty set");
  if (!A.is_bounded()) throw DomainError("discretize: unbounded set");
  if (n_cells < 2) throw ConfigError("discretize: n_cells must be at least 2");

  const auto pieces = A.pieces();
  CellDecomposition out;
  const std::size_t D = static_cast<std::size_t>(A.dim());
  out.side.assign(D, 0.0);

  // Isolated points, deduplicated.
  std::vector<Vec> pts = pieces.points;
  std::sort(pts.begin(), pts.end());
  pts.erase(std::unique(pts.begin(), pts.end()), pts.end());

  if (!pieces.boxes.empty() || !pieces.balls.empty()) {
    Box bb;
    auto grow = [&](const Box& b) {
      if (bb.lo.empty()) {
        bb = b;
        return;
      }
      for (std::size_t i = 0; i < D; ++i) {
        bb.lo[i] = std::min(bb.lo[i], b.lo[i]);
        bb.hi[i] = std::max(bb.hi[i], b.hi[i]);
      }
    };
    for (const auto& b : pieces.boxes) grow(b);
    for (const auto& b : pieces.balls) grow(TargetSet(b).bounding_box());
    double ext = 0.0;
    for (std::size_t i = 0; i < D; ++i) ext = std::max(ext, bb.hi[i] - bb.lo[i]);
    const double tol_sq = std::pow(1e-12 * std::max(ext, 1.0), 2);
    auto count = [&](double h) {
      const auto g = make_grid(bb, h);
      if (g.total > kMaxGridCells) return std::numeric_limits<std::size_t>::max();
      return for_each_inside(A, g, tol_sq, [](const Vec&) {});
    };
    // Largest spacing giving at least n_cells cells.
    const std::size_t target = static_cast<std::size_t>(n_cells);
    double big = ext > 0.0 ? 2.0 * ext : 1.0;
    double small = big;
    while (count(small) < target) {
      small *= 0.5;
      if (small < ext * 1e-9) throw ConfigError("discretize: cannot reach the requested cell count");
    }
    if (count(big) >= target) small = big;
    for (int it = 0; it < 60 && big / small > 1.0 + 1e-12; ++it) {
      const double mid = std::sqrt(big * small);
      (count(mid) >= target ? small : big) = mid;
    }
    const auto g = make_grid(bb, small);
    if (g.total > kMaxGridCells) throw ConfigError("discretize: grid too large");
    for_each_inside(A, g, tol_sq, [&](const Vec& c) {
      out.centers.push_back(c);
      out.solid.push_back(true);
    });
    out.side = g.spacing;
    out.cell_dim = static_cast<int>(std::count_if(g.spacing.begin(), g.spacing.end(), [](double s) { return s > 0.0; }));
  }
  for (auto& p : pts) {
    out.centers.push_back(std::move(p));
    out.solid.push_back(false);
  }
  return out;
}

// Mean of k(|x - y|) over 64 quasi-random pairs of a cell with the given sides.
inline double cell_self_energy(const PotentialKernel& k, const Vec& side, int cell_dim) {
  if (cell_dim == 0) return k(0.0);
  if (!k.integrable_at_zero(cell_dim)) return std::numeric_limits<double>::infinity();
  const int D = static_cast<int>(side.size());
  const numerics::Halton h(2 * D, std::vector<double>(2 * D, 0.0));
  constexpr int kPairs = 64;
  double sum = 0.0;
  for (int i = 0; i < kPairs; ++i) {
    const auto u = h.point(static_cast<std::uint64_t>(i));
    double s = 0.0;
    for (int j = 0; j < D; ++j) {
      const double diff = (u[j] - u[D + j]) * side[j];
      s += diff * diff;
    }
    sum += k(std::sqrt(s));
  }
  return sum / kPairs;
}

inline Eigen::MatrixXd energy_matrix(const PotentialKernel& k, const CellDecomposition& cells) {
  const std::size_t n = cells.centers.size();
  const double self_solid = cell_self_energy(k, cells.side, cells.cell_dim);
  const double self_point = k(0.0);
  Eigen::MatrixXd K(n, n);
  numerics::parallel_for(n, [&](std::size_t i) {
    K(i, i) = cells.solid[i] ? self_solid : self_point;
    for (std::size_t j = i + 1; j < n; ++j) {
      double s = 0.0;
      for (std::size_t a = 0; a < cells.centers[i].size(); ++a) {
        const double diff = cells.centers[i][a] - cells.centers[j][a];
        s += diff * diff;
      }
      const double v = k(std::sqrt(s));
      if (!std::isfinite(v)) throw KernelError("capacity: kernel is not finite off zero");
      K(i, j) = v;
    }
  });
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = i + 1; j < n; ++j) K(j, i) = K(i, j);
  return K;
}

// Minimises mu' K mu over the probability simplex by away-step Frank-Wolfe,
// stopping once the duality gap is at most tol times the current energy.
// Atoms with infinite self-energy are excluded (they force infinite energy).
inline CapacityResult minimize_energy(const Eigen::MatrixXd& K, double tol, int max_iter = 200000) {
  if (!(tol > 0.0)) throw ConfigError("capacity: tol must be positive");
  const Eigen::Index n = K.rows();
  CapacityResult res;
  std::vector<Eigen::Index> live;
  for (Eigen::Index i = 0; i < n; ++i)
    if (std::isfinite(K(i, i))) live.push_back(i);
  res.minimizer.weights.assign(static_cast<std::size_t>(n), 0.0);
  if (live.empty()) {
    std::fill(res.minimizer.weights.begin(), res.minimizer.weights.end(), 1.0 / static_cast<double>(n));
    return res;  // every measure has infinite energy
  }
  const Eigen::Index m = static_cast<Eigen::Index>(live.size());
  Eigen::MatrixXd Kl(m, m);
  for (Eigen::Index i = 0; i < m; ++i)
    for (Eigen::Index j = 0; j < m; ++j) Kl(i, j) = K(live[i], live[j]);

  Eigen::Index start;
  Kl.diagonal().minCoeff(&start);
  Eigen::VectorXd x = Eigen::VectorXd::Zero(m);
  x(start) = 1.0;
  Eigen::VectorXd Kx = Kl.col(start);
  double f = Kl(start, start);
  double gap = 0.0;
  int it = 0;
  for (; it < max_iter; ++it) {
    Eigen::Index s;
    Kx.minCoeff(&s);
    gap = 2.0 * (f - Kx(s));
    if (gap <= tol * f) break;
    Eigen::Index a = -1;
    double worst = -std::numeric_limits<double>::infinity();
    for (Eigen::Index i = 0; i < m; ++i)
      if (x(i) > 0.0 && Kx(i) > worst) {
        worst = Kx(i);
        a = i;
      }
    const double away_gap = 2.0 * (Kx(a) - f);
    double slope, curv, gmax;
    bool toward = gap >= away_gap || x(a) >= 1.0;
    if (toward) {
      slope = Kx(s) - f;
      curv = Kl(s, s) - 2.0 * Kx(s) + f;
      gmax = 1.0;
    } else {
      slope = f - Kx(a);
      curv = f - 2.0 * Kx(a) + Kl(a, a);
      gmax = x(a) / (1.0 - x(a));
    }
    const double gamma = curv > 0.0 ? std::min(gmax, -slope / curv) : gmax;
    if (!(gamma > 0.0)) break;
    if (toward) {
      x *= 1.0 - gamma;
      x(s) += gamma;
      Kx = (1.0 - gamma) * Kx + gamma * Kl.col(s);
    } else {
      x *= 1.0 + gamma;
      x(a) -= gamma;
      if (gamma == gmax) x(a) = 0.0;
      Kx = (1.0 + gamma) * Kx - gamma * Kl.col(a);
    }
    x = x.cwiseMax(0.0);
    x /= x.sum();
    // Refresh against drift every so often.
    if (it % 256 == 255) Kx.noalias() = Kl * x;
    f = x.dot(Kx);
  }
  Kx.noalias() = Kl * x;
  f = x.dot(Kx);
  Eigen::Index s;
  Kx.minCoeff(&s);
  res.gap = std::max(0.0, 2.0 * (f - Kx(s)));
  res.energy = f;
  res.cap = 1.0 / f;
  res.iterations = it;
  for (Eigen::Index i = 0; i < m; ++i) res.minimizer.weights[static_cast<std::size_t>(live[i])] = x(i);
  return res;
}

// Capacity 1 / inf { E(mu) : mu a probability measure on A } over cell-uniform
// measures of an n_cells decomposition.
inline CapacityResult capacity(const PotentialKernel& k, const TargetSet& A, int n_cells, double tol = 1e-6) {
  if (A.is_empty()) throw DomainError("capacity: empty set");
  if (!(tol > 0.0)) throw ConfigError("capacity: tol must be positive");
  const auto cells = discretize(A, n_cells);
  const auto K = energy_matrix(k, cells);
  auto res = minimize_energy(K, tol);
  res.minimizer.atoms = cells.centers;
  res.minimizer.cell_width = cells.cell_dim > 0 ? *std::max_element(cells.side.begin(), cells.side.end()) : 0.0;
  return res;
}

}  // namespace anisohit
