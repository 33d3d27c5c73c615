#pragma once

#include <cmath>
#include <cstdint>
#include <random>

namespace geoparc {

// Neumaier's variant of Kahan summation.
class CompensatedSum {
 public:
  void add(double x) {
    double t = sum_ + x;
    if (std::fabs(sum_) >= std::fabs(x)) {
      comp_ += (sum_ - t) + x;
    } else {
      comp_ += (x - t) + sum_;
    }
    sum_ = t;
  }
  CompensatedSum& operator+=(double x) {
    add(x);
    return *this;
  }
  double value() const { return sum_ + comp_; }

 private:
  double sum_ = 0.0;
  double comp_ = 0.0;
};

// Bisection on [lo, hi] for a function whose sign at lo differs from its sign
// at hi. Stops when the bracket has collapsed to adjacent doubles or its width
// falls below rel_tol * |midpoint|.
template <typename Function>
double bisect(Function&& f, double lo, double hi, double rel_tol = 0.0) {
  double f_lo = f(lo);
  bool lo_positive = f_lo > 0;
  for (int iter = 0; iter < 2000; ++iter) {
    double mid = 0.5 * (lo + hi);
    if (mid <= lo || mid >= hi) break;
    if (rel_tol > 0 && (hi - lo) <= rel_tol * std::fabs(mid)) break;
    double f_mid = f(mid);
    if (f_mid == 0) return mid;
    if ((f_mid > 0) == lo_positive) {
      lo = mid;
    } else {
      hi = mid;
    }
  }
  return 0.5 * (lo + hi);
}

using RandomStream = std::mt19937_64;

inline std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9E3779B97F4A7C15ULL;
  x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ULL;
  x = (x ^ (x >> 27)) * 0x94D049BB133111EBULL;
  return x ^ (x >> 31);
}

// Seed of the index-th independent stream derived from a master seed.
inline std::uint64_t derive_seed(std::uint64_t master, std::uint64_t index) {
  return splitmix64(splitmix64(master) ^ splitmix64(index + 0x632BE59BD9B4E019ULL));
}

// Uniform double in [0, 1) with 53 random bits.
inline double uniform01(RandomStream& rng) {
  return static_cast<double>(rng() >> 11) * 0x1.0p-53;
}

}  // namespace geoparc
