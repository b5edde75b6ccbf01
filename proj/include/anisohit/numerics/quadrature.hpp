#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <limits>
#include <queue>
#include <span>
#include <vector>

namespace anisohit::numerics {

struct QuadratureOptions {
  double abs_tol = 1e-10;
  double rel_tol = 1e-8;
  int max_intervals = 4000;
};

struct QuadratureResult {
  double value = 0.0;
  double abs_error = 0.0;
  int intervals = 0;
  bool converged = false;
};

namespace detail {

// 21-point Kronrod extension of the 10-point Gauss rule.
inline constexpr std::array<double, 11> kXgk = {
    0.995657163025808080735527280689003, 0.973906528517171720077964012084452,
    0.930157491355708226001207180059508, 0.865063366688984510732096688423493,
    0.780817726586416897063717578345042, 0.679409568299024406234327365114874,
    0.562757134668604683339000099272694, 0.433395394129247190799265943165784,
    0.294392862701460198131126603103866, 0.148874338981631210884826001129720,
    0.0};
inline constexpr std::array<double, 11> kWgk = {
    0.011694638867371874278064396062192, 0.032558162307964727478818972459390,
    0.054755896574351996031381300244580, 0.075039674810919952767043140916190,
    0.093125454583697605535065465083366, 0.109387158802297641899210590325805,
    0.123491976262065851077208480373670, 0.134709217311473325928054001771707,
    0.142775938577060080797094273138717, 0.147739104901338491374841515972068,
    0.149445554002916905664936468389821};
inline constexpr std::array<double, 5> kWg = {
    0.066671344308688137593568809893332, 0.149451349150580593145776339657697,
    0.219086362515982043995534934228163, 0.269266719309996355091226921569469,
    0.295524224714752870173892994651338};

struct Segment {
  double a;
  double b;
  double value;
  double error;
  bool operator<(const Segment& other) const { return error < other.error; }
};

template <class F>
Segment gauss_kronrod21(F& f, double a, double b) {
  const double center = 0.5 * (a + b);
  const double half = 0.5 * (b - a);
  const double fc = f(center);
  double resk = kWgk[10] * fc;
  double resg = 0.0;
  double resabs = std::abs(resk);
  std::array<double, 10> f1{}, f2{};
  for (int j = 0; j < 10; ++j) {
    const double dx = half * kXgk[j];
    f1[j] = f(center - dx);
    f2[j] = f(center + dx);
    const double s = f1[j] + f2[j];
    resk += kWgk[j] * s;
    resabs += kWgk[j] * (std::abs(f1[j]) + std::abs(f2[j]));
    if (j % 2 == 1) resg += kWg[j / 2] * s;
  }
  const double mean = 0.5 * resk;
  double resasc = kWgk[10] * std::abs(fc - mean);
  for (int j = 0; j < 10; ++j)
    resasc += kWgk[j] * (std::abs(f1[j] - mean) + std::abs(f2[j] - mean));
  resk *= half;
  resg *= half;
  resabs *= std::abs(half);
  resasc *= std::abs(half);

  double err = std::abs(resk - resg);
  if (resasc != 0.0 && err != 0.0)
    err = resasc * std::min(1.0, std::pow(200.0 * err / resasc, 1.5));
  constexpr double eps = std::numeric_limits<double>::epsilon();
  if (resabs > std::numeric_limits<double>::min() / (50.0 * eps))
    err = std::max(50.0 * eps * resabs, err);
  return {a, b, resk, err};
}

}  // namespace detail

// Globally adaptive Gauss-Kronrod integration over [breaks.front(), breaks.back()],
// with the interior breakpoints used as the initial partition.
template <class F>
QuadratureResult integrate(F&& f, std::span<const double> breaks,
                           const QuadratureOptions& opt = {}) {
  QuadratureResult out;
  if (breaks.size() < 2) return out;
  std::priority_queue<detail::Segment> heap;
  double total = 0.0;
  double total_err = 0.0;
  for (std::size_t i = 0; i + 1 < breaks.size(); ++i) {
    if (!(breaks[i + 1] > breaks[i])) continue;
    auto seg = detail::gauss_kronrod21(f, breaks[i], breaks[i + 1]);
    total += seg.value;
    total_err += seg.error;
    heap.push(seg);
  }
  std::vector<detail::Segment> frozen;
  while (!heap.empty()) {
    if (total_err <= std::max(opt.abs_tol, opt.rel_tol * std::abs(total))) {
      out.converged = true;
      break;
    }
    if (static_cast<int>(heap.size() + frozen.size()) >= opt.max_intervals) break;
    auto worst = heap.top();
    heap.pop();
    const double mid = 0.5 * (worst.a + worst.b);
    // Segments a few thousand ulps wide would let nodes round onto the endpoints.
    const double scale = std::max({std::abs(worst.a), std::abs(worst.b), 1e-300});
    if (worst.b - worst.a < 1e4 * std::numeric_limits<double>::epsilon() * scale) {
      frozen.push_back(worst);
      continue;
    }
    auto left = detail::gauss_kronrod21(f, worst.a, mid);
    auto right = detail::gauss_kronrod21(f, mid, worst.b);
    total += left.value + right.value - worst.value;
    total_err += left.error + right.error - worst.error;
    heap.push(left);
    heap.push(right);
  }
  // Re-sum to shed the drift of incremental updates.
  double sum = 0.0;
  double err = 0.0;
  out.intervals = static_cast<int>(heap.size() + frozen.size());
  while (!heap.empty()) {
    sum += heap.top().value;
    err += heap.top().error;
    heap.pop();
  }
  for (const auto& s : frozen) {
    sum += s.value;
    err += s.error;
  }
  out.value = sum;
  out.abs_error = err;
  if (!out.converged) out.converged = err <= std::max(opt.abs_tol, opt.rel_tol * std::abs(sum));
  return out;
}

template <class F>
QuadratureResult integrate(F&& f, double a, double b, const QuadratureOptions& opt = {}) {
  const std::array<double, 2> br{a, b};
  return integrate(f, std::span<const double>(br), opt);
}

// Integral over [a, inf) through x = a + s / (1 - s).
template <class F>
QuadratureResult integrate_to_infinity(F&& f, double a, const QuadratureOptions& opt = {}) {
  auto g = [&](double s) {
    const double one_minus = 1.0 - s;
    const double x = a + s / one_minus;
    const double fx = f(x);
    return fx == 0.0 ? 0.0 : fx / (one_minus * one_minus);
  };
  return integrate(g, 0.0, 1.0, opt);
}

}  // namespace anisohit::numerics
