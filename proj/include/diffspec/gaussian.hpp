#pragma once

// Exact scores, potentials and speciation-time solvers for the two
// Gaussian mixture benchmarks: a balanced pair of Gaussians at +-m with
// shared isotropic variance, and a pair of zero-mean Gaussians with
// variances 1 -+ delta.

#include <cmath>
#include <span>
#include <stdexcept>
#include <vector>

#include "diffspec/errors.hpp"

namespace diffspec {

// Overflow-safe log cosh(u) = |u| + log1p(e^{-2|u|}) - log 2.
inline double log_cosh(double u) {
  const double a = std::fabs(u);
  return a + std::log1p(std::exp(-2.0 * a)) - M_LN2;
}

// --------------------------------------------------------------------------
// Balanced mixture of N(+m, sigma^2 I) and N(-m, sigma^2 I).

struct GaussianMeansModel {
  std::vector<double> m;
  double sigma2 = 1.0;

  GaussianMeansModel(std::vector<double> mean, double variance = 1.0)
      : m(std::move(mean)), sigma2(variance) {
    if (m.empty()) throw std::invalid_argument("means model: empty mean");
    if (!(sigma2 > 0.0))
      throw std::invalid_argument("means model: sigma2 must be positive");
  }

  int dim() const { return static_cast<int>(m.size()); }

  double mean_norm2() const {
    double s = 0.0;
    for (double v : m) s += v * v;
    return s;
  }

  // ||m||^2 / N
  double mu_tilde2() const { return mean_norm2() / dim(); }

  // Per-coordinate variance of the noised component.
  double gamma_t(double t) const {
    const double e2 = std::exp(-2.0 * t);
    return sigma2 * e2 + (1.0 - e2);
  }

  // score = -x/Gamma_t + m (e^{-t}/Gamma_t) tanh(x.m e^{-t}/Gamma_t)
  void score(std::span<const double> x, double t, std::span<double> out) const {
    const double g = gamma_t(t);
    const double decay = std::exp(-t);
    double dot = 0.0;
    for (std::size_t i = 0; i < x.size(); ++i) dot += x[i] * m[i];
    const double th = std::tanh(dot * decay / g);
    const double c = decay / g * th;
    for (std::size_t i = 0; i < x.size(); ++i) out[i] = -x[i] / g + m[i] * c;
  }

  // Potential for the overlap coordinate q = m.x / sqrt(N):
  //   V(q,t) = q^2/2 - 2 mu~^2 log cosh(q e^{-t} sqrt(N)).
  double overlap_potential(double q, double t) const {
    const double u = q * std::exp(-t) * std::sqrt(static_cast<double>(dim()));
    return 0.5 * q * q - 2.0 * mu_tilde2() * log_cosh(u);
  }

  // d^2V/dq^2 at q = 0; changes sign at t* = log(2 mu~^2 N) / 2.
  double overlap_curvature_at_zero(double t) const {
    return 1.0 - 2.0 * mu_tilde2() * dim() * std::exp(-2.0 * t);
  }
};

// --------------------------------------------------------------------------
// Zero-mean mixture with variances 1 - delta and 1 + delta.

struct GaussianVarModel {
  double delta = 0.0;  // radius separation parameter, in [0, 1)
  int n = 0;           // dimension

  GaussianVarModel(double delta_param, int dim) : delta(delta_param), n(dim) {
    if (!(delta >= 0.0 && delta < 1.0))
      throw std::invalid_argument("variance model: delta must be in [0,1)");
    if (n < 1) throw std::invalid_argument("variance model: dim must be >= 1");
  }

  double gamma1(double t) const { return 1.0 - delta * std::exp(-2.0 * t); }
  double gamma2(double t) const { return 1.0 + delta * std::exp(-2.0 * t); }

  // Shrinkage factor of the exact score S(x,t) = -lambda(||x||, t) x.
  // Evaluated in log space after subtracting the larger exponent; always
  // within [1/Gamma_2, 1/Gamma_1].
  double score_factor(double norm_x, double t) const {
    const double g1 = gamma1(t);
    const double g2 = gamma2(t);
    const double x2 = norm_x * norm_x;
    const double l1 = -0.5 * n * std::log(g1) - x2 / (2.0 * g1);
    const double l2 = -0.5 * n * std::log(g2) - x2 / (2.0 * g2);
    const double top = l1 > l2 ? l1 : l2;
    const double w1 = std::exp(l1 - top);
    const double w2 = std::exp(l2 - top);
    return (w1 / g1 + w2 / g2) / (w1 + w2);
  }

  void score(std::span<const double> x, double t, std::span<double> out) const {
    double x2 = 0.0;
    for (double v : x) x2 += v * v;
    const double lam = score_factor(std::sqrt(x2), t);
    for (std::size_t i = 0; i < x.size(); ++i) out[i] = -lam * x[i];
  }

  // lambda(sqrt(N), t) - 1 without cancellation. With eps = delta e^{-2t}
  // and D = log of the component likelihood ratio at ||x||^2 = N,
  //   lambda - 1 = eps (eps - tanh(D/2)) / (1 - eps^2),
  //   D = N (eps/(1-eps^2) - atanh(eps)).
  // The sign change of this quantity in t locates the curvature transition
  // of the radial potential at r = 1.
  double curvature_excess(double t) const {
    const double eps = delta * std::exp(-2.0 * t);
    double d;
    if (eps < 1e-2) {
      const double e2 = eps * eps;
      d = n * eps * e2 *
          (2.0 / 3.0 + e2 * (4.0 / 5.0 + e2 * (6.0 / 7.0 + e2 * 8.0 / 9.0)));
    } else {
      d = n * (eps / (1.0 - eps * eps) - std::atanh(eps));
    }
    return eps * (eps - std::tanh(0.5 * d)) / (1.0 - eps * eps);
  }

  // Drift of the radial coordinate r = ||x||^2 / N in the reverse SDE:
  //   dr = [2(r+1) - 4 r lambda(sqrt(N r), t)] dt + 2 sqrt(2r/N) dB.
  double radial_drift(double r, double t) const {
    if (!(r >= 0.0)) throw std::invalid_argument("radial_drift: r must be >= 0");
    if (r == 0.0) return 2.0;
    return 2.0 * (r + 1.0) -
           4.0 * r * score_factor(std::sqrt(static_cast<double>(n) * r), t);
  }

  // V_t(r) = -int_0^r drift(s) ds, composite Simpson with n_quad panels.
  double radial_potential(double r, double t, int n_quad = 512) const {
    if (!(r >= 0.0))
      throw std::invalid_argument("radial_potential: r must be >= 0");
    if (n_quad < 64)
      throw std::invalid_argument("radial_potential: n_quad must be >= 64");
    if (r == 0.0) return 0.0;
    int panels = n_quad;
    if (panels % 2 != 0) ++panels;
    const double h = r / panels;
    double acc = radial_drift(0.0, t) + radial_drift(r, t);
    for (int k = 1; k < panels; ++k)
      acc += radial_drift(k * h, t) * (k % 2 == 1 ? 4.0 : 2.0);
    return -acc * h / 3.0;
  }

  // Analytic mean of the per-spin log-likelihood gap between the two
  // components under the first one (a KL divergence, hence >= 0):
  //   -[log(G1/G2) + 1 - G1/G2] / 2.
  double free_entropy_gap(double t) const {
    const double ratio = gamma1(t) / gamma2(t);
    return -0.5 * (std::log(ratio) + 1.0 - ratio);
  }

  // Variance of the same per-spin gap over samples of the first component:
  //   G1^2 (1/G1 - 1/G2)^2 / (2N).
  double free_entropy_gap_variance(double t) const {
    const double g1 = gamma1(t);
    const double g2 = gamma2(t);
    const double u = g1 * (1.0 / g1 - 1.0 / g2);
    return u * u / (2.0 * n);
  }
};

struct CurvatureTime {
  double t = 0.0;
  double t_lo = 0.0;
  double t_hi = 0.0;
};

// Bisection on curvature_excess over [0, log N]. Requires delta > 0.
inline CurvatureTime solve_curvature_time(const GaussianVarModel& model,
                                          double tol = 1e-6) {
  if (!(model.delta > 0.0))
    throw DegeneratePairError(
        "solve_curvature_time: delta = 0 has no transition");
  double lo = 0.0;
  double hi = std::log(static_cast<double>(model.n));
  double flo = model.curvature_excess(lo);
  const double fhi = model.curvature_excess(hi);
  if (!(flo < 0.0 && fhi > 0.0))
    throw BracketingError("solve_curvature_time: no sign change in [0, log N]");
  while (hi - lo > tol) {
    const double mid = 0.5 * (lo + hi);
    const double fm = model.curvature_excess(mid);
    if (fm < 0.0) {
      lo = mid;
      flo = fm;
    } else {
      hi = mid;
    }
  }
  return {0.5 * (lo + hi), lo, hi};
}

// t_s = log(N)/4 + log(delta)/2 - log(3)/4.
inline double closed_form_speciation_time(double n, double delta_param) {
  if (!(delta_param > 0.0 && n >= 1.0))
    throw std::invalid_argument("closed form t_s: need delta > 0, N >= 1");
  return 0.25 * std::log(n) + 0.5 * std::log(delta_param) -
         0.25 * std::log(3.0);
}

}  // namespace diffspec
