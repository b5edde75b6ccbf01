#pragma once

#include <array>
#include <cmath>
#include <cstdint>
#include <stdexcept>
#include <vector>

namespace anisohit::numerics {

inline constexpr std::array<int, 16> kPrimes = {2,  3,  5,  7,  11, 13, 17, 19,
                                                23, 29, 31, 37, 41, 43, 47, 53};

inline double radical_inverse(std::uint64_t index, int base) {
  double result = 0.0;
  double inv = 1.0 / base;
  double f = inv;
  while (index > 0) {
    result += f * static_cast<double>(index % base);
    index /= base;
    f *= inv;
  }
  return result;
}

// Halton sequence, optionally shifted modulo 1 (Cranley-Patterson rotation).
class Halton {
 public:
  explicit Halton(int dim, std::vector<double> shift = {}) : dim_(dim), shift_(std::move(shift)) {
    if (dim < 1 || dim > static_cast<int>(kPrimes.size()))
      throw std::invalid_argument("Halton: dimension out of range");
    if (!shift_.empty() && static_cast<int>(shift_.size()) != dim)
      throw std::invalid_argument("Halton: shift dimension mismatch");
  }

  int dim() const { return dim_; }

  // Point with index i, skipping the origin.
  std::vector<double> point(std::uint64_t i) const {
    std::vector<double> p(dim_);
    for (int k = 0; k < dim_; ++k) {
      double v = radical_inverse(i + 1, kPrimes[k]);
      if (!shift_.empty()) {
        v += shift_[k];
        v -= std::floor(v);
      }
      p[k] = v;
    }
    return p;
  }

 private:
  int dim_;
  std::vector<double> shift_;
};

}  // namespace anisohit::numerics
