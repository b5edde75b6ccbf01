#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <limits>
#include <memory>
#include <utility>
#include <variant>
#include <vector>

#include "anisohit/error.hpp"

namespace anisohit {

using Vec = std::vector<double>;

// Axis-aligned box [lo, hi]; degenerate axes (lo == hi) are allowed.
struct Box {
  Vec lo;
  Vec hi;
};

struct Ball {
  Vec center;
  double radius = 0.0;
};

struct PointSet {
  std::vector<Vec> points;
};

// Middle-thirds Cantor construction applied on every axis of a base box.
struct CantorDust {
  int level = 0;
  Box base;
};

class TargetSet;

struct Union {
  std::vector<TargetSet> parts;
};

// Borel target in R^D from a closed vocabulary.
class TargetSet {
 public:
  using Variant = std::variant<Ball, Box, PointSet, CantorDust, Union>;

  TargetSet(Ball b) : v_(std::move(b)) { validate(); }
  TargetSet(Box b) : v_(std::move(b)) { validate(); }
  TargetSet(PointSet p) : v_(std::move(p)) { validate(); }
  TargetSet(CantorDust c) : v_(std::move(c)) { validate(); }
  TargetSet(Union u) : v_(std::move(u)) { validate(); }

  static TargetSet ball(Vec center, double radius) { return TargetSet(Ball{std::move(center), radius}); }
  static TargetSet box(Vec lo, Vec hi) { return TargetSet(Box{std::move(lo), std::move(hi)}); }
  static TargetSet point(Vec z) { return TargetSet(PointSet{{std::move(z)}}); }
  static TargetSet points(std::vector<Vec> pts) { return TargetSet(PointSet{std::move(pts)}); }
  static TargetSet empty(int D) { return TargetSet(PointSet{}, D); }
  static TargetSet cantor(int level, Vec lo, Vec hi) {
    return TargetSet(CantorDust{level, Box{std::move(lo), std::move(hi)}});
  }
  static TargetSet unite(std::vector<TargetSet> parts) { return TargetSet(Union{std::move(parts)}); }

  const Variant& variant() const { return v_; }
  int dim() const { return dim_; }
  bool is_empty() const { return empty_; }
  bool is_bounded() const { return bounded_; }

  // Smallest box containing the set (meaningless for an empty set).
  Box bounding_box() const {
    return std::visit([&](const auto& s) { return bbox(s); }, v_);
  }

  // Euclidean distance from y to the set; +inf for the empty set.
  double distance(const Vec& y) const {
    if (static_cast<int>(y.size()) != dim_) throw DomainError("target set: point dimension mismatch");
    return std::sqrt(distance_sq(y.data()));
  }
  double distance_sq(const double* y) const {
    return std::visit([&](const auto& s) { return dist_sq(s, y); }, v_);
  }
  bool contains(const Vec& y) const { return distance(y) == 0.0; }

  // Solid pieces as boxes plus balls, and isolated points.
  struct Pieces {
    std::vector<Box> boxes;
    std::vector<Ball> balls;
    std::vector<Vec> points;
  };
  Pieces pieces(std::size_t max_boxes = std::size_t{1} << 22) const {
    Pieces out;
    collect(v_, out, max_boxes);
    return out;
  }

 private:
  TargetSet(PointSet p, int D) : v_(std::move(p)), dim_(D), empty_(true), bounded_(true) {
    if (D < 1) throw DomainError("target set: dimension must be positive");
  }

  static bool finite_vec(const Vec& v) {
    return std::all_of(v.begin(), v.end(), [](double x) { return std::isfinite(x); });
  }
  static bool no_nan(const Vec& v) {
    return std::none_of(v.begin(), v.end(), [](double x) { return std::isnan(x); });
  }

  void validate() {
    std::visit([&](const auto& s) { check(s); }, v_);
  }

  void check(const Ball& b) {
    dim_ = static_cast<int>(b.center.size());
    if (dim_ < 1 || !finite_vec(b.center)) throw DomainError("ball: center must be a finite vector");
    if (!(b.radius >= 0.0) || !std::isfinite(b.radius)) throw DomainError("ball: radius must be finite and >= 0");
  }
  void check(const Box& b) {
    dim_ = static_cast<int>(b.lo.size());
    if (dim_ < 1 || b.hi.size() != b.lo.size()) throw DomainError("box: bounds must have equal positive length");
    if (!no_nan(b.lo) || !no_nan(b.hi)) throw DomainError("box: NaN bound");
    for (int i = 0; i < dim_; ++i)
      if (!(b.lo[i] <= b.hi[i])) throw DomainError("box: lo must not exceed hi");
    bounded_ = finite_vec(b.lo) && finite_vec(b.hi);
  }
  void check(const PointSet& p) {
    if (p.points.empty()) throw DomainError("point set: use TargetSet::empty for the empty set");
    dim_ = static_cast<int>(p.points.front().size());
    if (dim_ < 1) throw DomainError("point set: points must have positive dimension");
    for (const auto& x : p.points)
      if (static_cast<int>(x.size()) != dim_ || !finite_vec(x)) throw DomainError("point set: bad point");
  }
  void check(const CantorDust& c) {
    if (c.level < 0 || c.level > 40) throw DomainError("cantor dust: level must lie in [0, 40]");
    check(c.base);
    if (!bounded_) throw DomainError("cantor dust: base box must be bounded");
  }
  void check(const Union& u) {
    if (u.parts.empty()) throw DomainError("union: no parts");
    dim_ = u.parts.front().dim();
    empty_ = true;
    for (const auto& p : u.parts) {
      if (p.dim() != dim_) throw DomainError("union: parts of different dimension");
      empty_ = empty_ && p.is_empty();
      bounded_ = bounded_ && p.is_bounded();
    }
  }

  static Box bbox(const Ball& b) {
    Box out{b.center, b.center};
    for (std::size_t i = 0; i < b.center.size(); ++i) {
      out.lo[i] -= b.radius;
      out.hi[i] += b.radius;
    }
    return out;
  }
  static Box bbox(const Box& b) { return b; }
  static Box bbox(const PointSet& p) {
    if (p.points.empty()) return {};
    Box out{p.points.front(), p.points.front()};
    for (const auto& x : p.points)
      for (std::size_t i = 0; i < x.size(); ++i) {
        out.lo[i] = std::min(out.lo[i], x[i]);
        out.hi[i] = std::max(out.hi[i], x[i]);
      }
    return out;
  }
  static Box bbox(const CantorDust& c) { return c.base; }
  static Box bbox(const Union& u) {
    Box out;
    for (const auto& p : u.parts) {
      if (p.is_empty()) continue;
      const Box b = p.bounding_box();
      if (out.lo.empty()) {
        out = b;
        continue;
      }
      for (std::size_t i = 0; i < b.lo.size(); ++i) {
        out.lo[i] = std::min(out.lo[i], b.lo[i]);
        out.hi[i] = std::max(out.hi[i], b.hi[i]);
      }
    }
    return out;
  }

  double dist_sq(const Ball& b, const double* y) const {
    double s = 0.0;
    for (int i = 0; i < dim_; ++i) s += (y[i] - b.center[i]) * (y[i] - b.center[i]);
    const double r = std::max(0.0, std::sqrt(s) - b.radius);
    return r * r;
  }
  double dist_sq(const Box& b, const double* y) const {
    double s = 0.0;
    for (int i = 0; i < dim_; ++i) {
      const double e = std::max({b.lo[i] - y[i], 0.0, y[i] - b.hi[i]});
      s += e * e;
    }
    return s;
  }
  double dist_sq(const PointSet& p, const double* y) const {
    double best = std::numeric_limits<double>::infinity();
    for (const auto& x : p.points) {
      double s = 0.0;
      for (int i = 0; i < dim_; ++i) s += (y[i] - x[i]) * (y[i] - x[i]);
      best = std::min(best, s);
    }
    return best;
  }
  // The dust is a product of 1-D Cantor sets, so squared distances add up by axis.
  double dist_sq(const CantorDust& c, const double* y) const {
    double s = 0.0;
    for (int i = 0; i < dim_; ++i) {
      const double e = cantor_distance(c.base.lo[i], c.base.hi[i], c.level, y[i]);
      s += e * e;
    }
    return s;
  }
  double dist_sq(const Union& u, const double* y) const {
    double best = std::numeric_limits<double>::infinity();
    for (const auto& p : u.parts) best = std::min(best, p.distance_sq(y));
    return best;
  }

  static double cantor_distance(double lo, double hi, int level, double y) {
    if (y <= lo) return lo - y;
    if (y >= hi) return y - hi;
    if (level == 0) return 0.0;
    const double third = (hi - lo) / 3.0;
    const double a = lo + third, b = hi - third;
    if (y <= a) return cantor_distance(lo, a, level - 1, y);
    if (y >= b) return cantor_distance(b, hi, level - 1, y);
    return std::min(cantor_distance(lo, a, level - 1, y), cantor_distance(b, hi, level - 1, y));
  }

  static void collect(const Variant& v, Pieces& out, std::size_t max_boxes) {
    if (const auto* b = std::get_if<Ball>(&v)) {
      if (b->radius == 0.0)
        out.points.push_back(b->center);
      else
        out.balls.push_back(*b);
    } else if (const auto* b = std::get_if<Box>(&v)) {
      out.boxes.push_back(*b);
    } else if (const auto* p = std::get_if<PointSet>(&v)) {
      out.points.insert(out.points.end(), p->points.begin(), p->points.end());
    } else if (const auto* c = std::get_if<CantorDust>(&v)) {
      const std::size_t D = c->base.lo.size();
      if (static_cast<double>(c->level) * D > std::log2(static_cast<double>(max_boxes)))
        throw ConfigError("cantor dust: too many pieces to enumerate");
      std::vector<std::vector<std::pair<double, double>>> axis(D);
      for (std::size_t i = 0; i < D; ++i) {
        axis[i] = {{c->base.lo[i], c->base.hi[i]}};
        for (int l = 0; l < c->level; ++l) {
          std::vector<std::pair<double, double>> next;
          for (auto [a, b] : axis[i]) {
            const double third = (b - a) / 3.0;
            next.emplace_back(a, a + third);
            next.emplace_back(b - third, b);
          }
          axis[i] = std::move(next);
        }
      }
      std::vector<std::size_t> idx(D, 0);
      while (true) {
        Box piece{Vec(D), Vec(D)};
        for (std::size_t i = 0; i < D; ++i) std::tie(piece.lo[i], piece.hi[i]) = axis[i][idx[i]];
        out.boxes.push_back(std::move(piece));
        std::size_t k = 0;
        while (k < D && ++idx[k] == axis[k].size()) idx[k++] = 0;
        if (k == D) break;
      }
    } else if (const auto* u = std::get_if<Union>(&v)) {
      for (const auto& p : u->parts)
        if (!p.is_empty()) collect(p.variant(), out, max_boxes);
    }
  }

  Variant v_;
  int dim_ = 0;
  bool empty_ = false;
  bool bounded_ = true;
};

}  // namespace anisohit
