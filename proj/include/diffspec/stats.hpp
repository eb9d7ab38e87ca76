#pragma once

// Deterministic statistical reductions. Sums are pairwise in a fixed
// order so batch results are identical at any worker count.

#include <cmath>
#include <cstddef>
#include <span>

namespace diffspec {

inline double pairwise_sum(std::span<const double> v) {
  const std::size_t n = v.size();
  if (n <= 32) {
    double s = 0.0;
    for (double x : v) s += x;
    return s;
  }
  const std::size_t half = n / 2;
  return pairwise_sum(v.first(half)) + pairwise_sum(v.subspan(half));
}

struct SampleMoments {
  std::size_t n = 0;
  double mean = 0.0;
  double variance = 0.0;  // unbiased
  double m4 = 0.0;        // fourth central moment (biased, 1/n)

  double mean_std_error() const {
    return n > 0 ? std::sqrt(variance / static_cast<double>(n)) : 0.0;
  }
  // Standard error of the unbiased variance estimator from sample moments.
  double variance_std_error() const {
    if (n < 2) return 0.0;
    const double nn = static_cast<double>(n);
    const double v = m4 - variance * variance * (nn - 3.0) / (nn - 1.0);
    return v > 0.0 ? std::sqrt(v / nn) : 0.0;
  }
};

namespace detail {

inline double pairwise_pow_dev(std::span<const double> v, double center,
                               int power) {
  const std::size_t n = v.size();
  if (n <= 32) {
    double s = 0.0;
    for (double x : v) {
      const double d = x - center;
      double p = d * d;
      if (power == 4) p *= p;
      s += p;
    }
    return s;
  }
  const std::size_t half = n / 2;
  return pairwise_pow_dev(v.first(half), center, power) +
         pairwise_pow_dev(v.subspan(half), center, power);
}

}  // namespace detail

inline SampleMoments sample_moments(std::span<const double> v) {
  SampleMoments m;
  m.n = v.size();
  if (m.n == 0) return m;
  const double nn = static_cast<double>(m.n);
  m.mean = pairwise_sum(v) / nn;
  if (m.n < 2) return m;
  m.variance = detail::pairwise_pow_dev(v, m.mean, 2) / (nn - 1.0);
  m.m4 = detail::pairwise_pow_dev(v, m.mean, 4) / nn;
  return m;
}

}  // namespace diffspec
