#pragma once

// Monotone (Fritsch-Carlson) cubic interpolation. Used to turn Monte-Carlo
// free-entropy means on a time grid into a continuous function a root
// finder can bisect.

#include <cmath>
#include <cstddef>
#include <stdexcept>
#include <vector>

namespace diffspec {

class PchipInterpolant {
 public:
  PchipInterpolant() = default;

  PchipInterpolant(std::vector<double> xs, std::vector<double> ys)
      : x_(std::move(xs)), y_(std::move(ys)) {
    const std::size_t n = x_.size();
    if (n < 2 || y_.size() != n)
      throw std::invalid_argument("pchip: need >= 2 matching points");
    for (std::size_t i = 1; i < n; ++i)
      if (!(x_[i] > x_[i - 1]))
        throw std::invalid_argument("pchip: abscissae must be increasing");
    d_.assign(n, 0.0);
    std::vector<double> h(n - 1), s(n - 1);
    for (std::size_t i = 0; i + 1 < n; ++i) {
      h[i] = x_[i + 1] - x_[i];
      s[i] = (y_[i + 1] - y_[i]) / h[i];
    }
    if (n == 2) {
      d_[0] = d_[1] = s[0];
    } else {
      for (std::size_t i = 1; i + 1 < n; ++i) {
        if (s[i - 1] * s[i] <= 0.0) {
          d_[i] = 0.0;
        } else {
          const double w1 = 2.0 * h[i] + h[i - 1];
          const double w2 = h[i] + 2.0 * h[i - 1];
          d_[i] = (w1 + w2) / (w1 / s[i - 1] + w2 / s[i]);
        }
      }
      d_[0] = edge_slope(h[0], h[1], s[0], s[1]);
      d_[n - 1] = edge_slope(h[n - 2], h[n - 3], s[n - 2], s[n - 3]);
    }
  }

  double front_x() const { return x_.front(); }
  double back_x() const { return x_.back(); }

  // Clamped to the end values outside the grid.
  double operator()(double x) const {
    if (x <= x_.front()) return y_.front();
    if (x >= x_.back()) return y_.back();
    std::size_t lo = 0, hi = x_.size() - 1;
    while (hi - lo > 1) {
      const std::size_t mid = (lo + hi) / 2;
      (x_[mid] <= x ? lo : hi) = mid;
    }
    const double h = x_[lo + 1] - x_[lo];
    const double u = (x - x_[lo]) / h;
    const double u2 = u * u;
    const double u3 = u2 * u;
    return y_[lo] * (2 * u3 - 3 * u2 + 1) + h * d_[lo] * (u3 - 2 * u2 + u) +
           y_[lo + 1] * (-2 * u3 + 3 * u2) + h * d_[lo + 1] * (u3 - u2);
  }

 private:
  // One-sided three-point end slope with the usual monotonicity clamps.
  static double edge_slope(double h0, double h1, double s0, double s1) {
    double d = ((2.0 * h0 + h1) * s0 - h0 * s1) / (h0 + h1);
    if (d * s0 <= 0.0)
      d = 0.0;
    else if (s0 * s1 < 0.0 && std::fabs(d) > 3.0 * std::fabs(s0))
      d = 3.0 * s0;
    return d;
  }

  std::vector<double> x_, y_, d_;
};

// Log-spaced grid helper (inclusive of both ends).
inline std::vector<double> log_spaced(double lo, double hi, int count) {
  if (!(lo > 0.0 && hi > lo && count >= 2))
    throw std::invalid_argument("log_spaced: need 0 < lo < hi, count >= 2");
  std::vector<double> g(static_cast<std::size_t>(count));
  const double llo = std::log(lo), lhi = std::log(hi);
  for (int i = 0; i < count; ++i)
    g[static_cast<std::size_t>(i)] =
        std::exp(llo + (lhi - llo) * i / (count - 1));
  g.front() = lo;
  g.back() = hi;
  return g;
}

inline std::vector<double> lin_spaced(double lo, double hi, int count) {
  if (!(hi > lo && count >= 2))
    throw std::invalid_argument("lin_spaced: need lo < hi, count >= 2");
  std::vector<double> g(static_cast<std::size_t>(count));
  for (int i = 0; i < count; ++i)
    g[static_cast<std::size_t>(i)] = lo + (hi - lo) * i / (count - 1);
  g.front() = lo;
  g.back() = hi;
  return g;
}

}  // namespace diffspec
