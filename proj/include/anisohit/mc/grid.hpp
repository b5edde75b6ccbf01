#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <vector>

#include "anisohit/error.hpp"
#include "anisohit/heat/model.hpp"

namespace anisohit {

// times x sites, where the sites form the uniform lattice with n_sites points
// per axis on [-M, M]^d (the single site 0 when n_sites == 1).
class SampleGrid {
 public:
  static constexpr std::size_t kMaxPoints = 4096;

  SampleGrid(std::vector<double> times, int d, int n_sites, double M)
      : times_(std::move(times)), d_(d), n_sites_(n_sites), M_(M) {
    if (times_.empty()) throw ConfigError("grid: no times");
    if (!std::is_sorted(times_.begin(), times_.end()) ||
        std::adjacent_find(times_.begin(), times_.end()) != times_.end())
      throw ConfigError("grid: times must be strictly increasing");
    if (d < 1) throw ConfigError("grid: d must be positive");
    if (n_sites < 1) throw ConfigError("grid: need at least one site per axis");
    if (!(M > 0.0)) throw ConfigError("grid: M must be positive");
    std::size_t sites = 1;
    for (int i = 0; i < d; ++i) {
      sites *= static_cast<std::size_t>(n_sites);
      if (sites * times_.size() > kMaxPoints) throw ConfigError("grid: more than 4096 points");
    }
    n_site_points_ = sites;
  }

  // n_times equally spaced times on [t0, T] (T alone when n_times == 1).
  static SampleGrid uniform(const HeatModel& m, int n_times, int n_sites) {
    if (n_times < 1) throw ConfigError("grid: need at least one time");
    std::vector<double> t(static_cast<std::size_t>(n_times));
    for (int i = 0; i < n_times; ++i)
      t[static_cast<std::size_t>(i)] = n_times == 1 ? m.T() : m.t0() + (m.T() - m.t0()) * i / (n_times - 1);
    t.back() = m.T();
    SampleGrid g(std::move(t), m.d(), n_sites, m.M());
    g.check_inside(m);
    return g;
  }

  void check_inside(const HeatModel& m) const {
    if (d_ != m.d()) throw ConfigError("grid: dimension does not match the model");
    if (times_.front() < m.t0() || times_.back() > m.T()) throw ConfigError("grid: times outside [t0, T]");
    if (M_ > m.M()) throw ConfigError("grid: sites outside [-M, M]^d");
  }

  const std::vector<double>& times() const { return times_; }
  int d() const { return d_; }
  int n_sites_per_axis() const { return n_sites_; }
  double M() const { return M_; }
  std::size_t n_sites() const { return n_site_points_; }
  std::size_t size() const { return times_.size() * n_site_points_; }

  double site_spacing() const { return n_sites_ > 1 ? 2.0 * M_ / (n_sites_ - 1) : 0.0; }
  double time_spacing() const {
    double h = 0.0;
    for (std::size_t i = 1; i < times_.size(); ++i) h = std::max(h, times_[i] - times_[i - 1]);
    return h;
  }

  // Lattice multi-index of site s (axis 0 fastest).
  std::vector<int> site_index(std::size_t s) const {
    std::vector<int> k(static_cast<std::size_t>(d_));
    for (int i = 0; i < d_; ++i) {
      k[static_cast<std::size_t>(i)] = static_cast<int>(s % static_cast<std::size_t>(n_sites_));
      s /= static_cast<std::size_t>(n_sites_);
    }
    return k;
  }
  std::vector<double> site(std::size_t s) const {
    const auto k = site_index(s);
    std::vector<double> x(k.size());
    for (std::size_t i = 0; i < k.size(); ++i) x[i] = n_sites_ > 1 ? -M_ + k[i] * site_spacing() : 0.0;
    return x;
  }

  // Point p = time index * n_sites() + site index.
  SpaceTimePoint point(std::size_t p) const {
    return {times_[p / n_site_points_], site(p % n_site_points_)};
  }

 private:
  std::vector<double> times_;
  int d_;
  int n_sites_;
  double M_;
  std::size_t n_site_points_ = 1;
};

}  // namespace anisohit
