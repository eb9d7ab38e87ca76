#pragma once

// General speciation machinery: Monte-Carlo free-entropy statistics,
// large-time expansion coefficients, the criterion solver and the
// predicted attribution-matrix structure.
//
// The criterion declares components r and s merged at time t once
//   |f_rr(t) - f_rs(t)| < K sqrt(Var[...]) ,
// with the variance taken in its large-time form. Only the pair enters;
// other components of the mixture are irrelevant to the solve.

#include <cmath>
#include <cstdint>
#include <functional>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "diffspec/errors.hpp"
#include "diffspec/interpolate.hpp"
#include "diffspec/parallel.hpp"
#include "diffspec/rng.hpp"
#include "diffspec/schedule.hpp"
#include "diffspec/sde.hpp"
#include "diffspec/stats.hpp"

namespace diffspec {

struct SquareMatrix {
  int n = 0;
  std::vector<double> a;

  explicit SquareMatrix(int size)
      : n(size), a(static_cast<std::size_t>(size) * size, 0.0) {}
  double& operator()(int i, int j) {
    return a[static_cast<std::size_t>(i) * n + j];
  }
  double operator()(int i, int j) const {
    return a[static_cast<std::size_t>(i) * n + j];
  }
};

// Coefficients of the large-time expansion of the per-spin KL divergence
// between two noised components, built from their first and second
// moments.
struct AsymptoticCoefficients {
  double mean_gap = 0.0;  // (1/N) sum_i (mean_r - mean_s)_i^2
  double cov_gap = 0.0;   // (1/N) sum_ij (cov_r - cov_s)_ij^2
  double cross = 0.0;     // mixed mean/covariance term, sign-free
};

inline AsymptoticCoefficients coefficients_from_moments(
    std::span<const double> mean_r, std::span<const double> mean_s,
    const SquareMatrix& cov_r, const SquareMatrix& cov_s) {
  const auto n = static_cast<int>(mean_r.size());
  if (mean_s.size() != mean_r.size() || cov_r.n != n || cov_s.n != n)
    throw std::invalid_argument("coefficients_from_moments: dimension mismatch");
  AsymptoticCoefficients c;
  double a = 0.0;
  for (int i = 0; i < n; ++i) {
    const double d = mean_r[i] - mean_s[i];
    a += d * d;
  }
  c.mean_gap = a / n;
  double cg = 0.0;
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j) {
      const double d = cov_r(i, j) - cov_s(i, j);
      cg += d * d;
    }
  c.cov_gap = cg / n;
  // 2 sum_i da_i (cov_s mean_s - cov_r mean_r)_i - da^T cov_s da, over 2N
  double lin = 0.0, quad = 0.0;
  for (int i = 0; i < n; ++i) {
    double vs = 0.0, vr = 0.0, qs = 0.0;
    for (int j = 0; j < n; ++j) {
      vs += cov_s(i, j) * mean_s[j];
      vr += cov_r(i, j) * mean_r[j];
      qs += cov_s(i, j) * (mean_r[j] - mean_s[j]);
    }
    const double d = mean_r[i] - mean_s[i];
    lin += d * (vs - vr);
    quad += d * qs;
  }
  c.cross = (2.0 * lin - quad) / (2.0 * n);
  return c;
}

// Mean of the per-spin log-likelihood gap at large t:
//   (mean_gap/2)(e^{-2t} + e^{-4t}) + (cov_gap/4) e^{-4t} + cross e^{-4t}.
inline double large_time_kl(const AsymptoticCoefficients& c, double t) {
  const double e2 = std::exp(-2.0 * t);
  const double e4 = e2 * e2;
  return 0.5 * c.mean_gap * (e2 + e4) + 0.25 * c.cov_gap * e4 + c.cross * e4;
}

// Variance of the same gap:
//   (mean_gap/N)(e^{-2t} + 2 e^{-4t}) + (cov_gap/2N) e^{-4t}.
inline double large_time_variance(const AsymptoticCoefficients& c, double t,
                                  double n) {
  const double e2 = std::exp(-2.0 * t);
  const double e4 = e2 * e2;
  return c.mean_gap / n * (e2 + 2.0 * e4) + 0.5 * c.cov_gap / n * e4;
}

// Speciation time when the pair separates through first moments:
//   t = log(N)/2 - log(4/mean_gap)/2 - log K.
inline double speciation_time_first_moment(double mean_gap, double n,
                                           double k) {
  if (!(mean_gap > 0.0))
    throw DegeneratePairError("first-moment time: mean gap must be positive");
  return 0.5 * std::log(n) - 0.5 * std::log(4.0 / mean_gap) - std::log(k);
}

// Speciation time for coinciding means, separation through covariances:
//   t = log(N)/4 - log(8/cov_gap)/4 - log(K)/2.
inline double speciation_time_second_moment(double cov_gap, double n,
                                            double k) {
  if (!(cov_gap > 0.0))
    throw DegeneratePairError(
        "second-moment time: covariance gap must be positive");
  return 0.25 * std::log(n) - 0.25 * std::log(8.0 / cov_gap) -
         0.5 * std::log(k);
}

enum class SolveMethod {
  kAsymptoticFirstMoment,
  kAsymptoticSecondMoment,
  kFullSolve,
};

struct SpeciationSolveResult {
  double t_rs = 0.0;
  double k = 1.0;
  SolveMethod method = SolveMethod::kFullSolve;
  double t_lo = 0.0;
  double t_hi = 0.0;
};

// Bisection root of |mean_diff(t)| = K sqrt(cov_gap / 2N) e^{-2t}.
// mean_diff may be an analytic curve, a Monte-Carlo interpolant or the
// large-time expansion; it only needs a sign change of the criterion
// inside the bracket.
inline SpeciationSolveResult solve_speciation(
    const std::function<double(double)>& mean_diff, double cov_gap, double n,
    double k, double t_lo, double t_hi, double tol = 1e-4,
    SolveMethod method = SolveMethod::kFullSolve) {
  if (!(cov_gap > 0.0))
    throw DegeneratePairError(
        "solve_speciation: zero covariance gap, pair is degenerate");
  const double amp = k * std::sqrt(cov_gap / (2.0 * n));
  auto crit = [&](double t) {
    return std::fabs(mean_diff(t)) - amp * std::exp(-2.0 * t);
  };
  double flo = crit(t_lo);
  double fhi = crit(t_hi);
  if (!(flo > 0.0 && fhi < 0.0))
    throw BracketingError(
        "solve_speciation: criterion does not change sign over bracket");
  double lo = t_lo, hi = t_hi;
  while (hi - lo > tol) {
    const double mid = 0.5 * (lo + hi);
    if (crit(mid) > 0.0)
      lo = mid;
    else
      hi = mid;
  }
  SpeciationSolveResult res;
  res.t_rs = 0.5 * (lo + hi);
  res.k = k;
  res.method = method;
  res.t_lo = lo;
  res.t_hi = hi;
  return res;
}

// ---------------------------------------------------------------------------
// Predicted attribution-matrix structure.

struct AttributionStructure {
  int r = 0;
  std::vector<char> merged_raw;  // pairwise criterion, reflexive
  std::vector<char> blocks;      // transitive closure of merged_raw
  bool raw(int i, int j) const {
    return merged_raw[static_cast<std::size_t>(i) * r + j] != 0;
  }
  bool block(int i, int j) const {
    return blocks[static_cast<std::size_t>(i) * r + j] != 0;
  }
  // Partition labels: index of the block representative per component.
  std::vector<int> labels() const {
    std::vector<int> lab(static_cast<std::size_t>(r), -1);
    int next = 0;
    for (int i = 0; i < r; ++i) {
      if (lab[static_cast<std::size_t>(i)] >= 0) continue;
      for (int j = i; j < r; ++j)
        if (block(i, j)) lab[static_cast<std::size_t>(j)] = next;
      ++next;
    }
    return lab;
  }
};

// Entry (r,s) of the raw matrix is set iff r == s or
// |mean_diff(r,s,t)| < K sqrt(cov_gap(r,s) / 2N) e^{-2t}. The merged
// relation is then closed transitively into blocks, matching how the
// rendered matrices coarsen.
inline AttributionStructure predicted_attribution_structure(
    int r_count, double t, double n,
    const std::function<double(int, int, double)>& mean_diff,
    const std::function<double(int, int)>& cov_gap, double k = 1.0) {
  AttributionStructure s;
  s.r = r_count;
  s.merged_raw.assign(static_cast<std::size_t>(r_count) * r_count, 0);
  for (int i = 0; i < r_count; ++i)
    for (int j = 0; j < r_count; ++j) {
      bool merged;
      if (i == j) {
        merged = true;
      } else {
        const double c = cov_gap(i, j);
        const double gap = std::fabs(mean_diff(i, j, t));
        merged = c > 0.0
                     ? gap < k * std::sqrt(c / (2.0 * n)) * std::exp(-2.0 * t)
                     : gap == 0.0;
      }
      s.merged_raw[static_cast<std::size_t>(i) * r_count + j] = merged ? 1 : 0;
    }
  // transitive closure
  s.blocks = s.merged_raw;
  for (int m = 0; m < r_count; ++m)
    for (int i = 0; i < r_count; ++i)
      if (s.blocks[static_cast<std::size_t>(i) * r_count + m])
        for (int j = 0; j < r_count; ++j)
          if (s.blocks[static_cast<std::size_t>(m) * r_count + j])
            s.blocks[static_cast<std::size_t>(i) * r_count + j] = 1;
  return s;
}

// ---------------------------------------------------------------------------
// Monte-Carlo free-entropy statistics.

struct FreeEntropyStats {
  double t = 0.0;
  int origin = 0;  // component the samples are diffused from
  int model = 0;   // component whose likelihood is evaluated
  int n_samples = 0;
  double mean = 0.0;      // mean of f_model over diffused samples
  double variance = 0.0;  // variance of the same
  // Paired statistics of f_origin - f_model on the same samples.
  double diff_mean = 0.0;
  double diff_variance = 0.0;
  double diff_std_error = 0.0;
  double diff_variance_std_error = 0.0;
};

// Diffuses n_samples draws of the origin component to time t and collects
// mean and fluctuation statistics of the model component's free entropy
// and of the paired difference. Sample i uses the stream derived from
// (master_seed, key(phase, origin, grid_index, i)); the model index never
// enters the stream, so pairs sharing an origin see identical samples.
template <class Mixture>
FreeEntropyStats estimate_free_entropy_stats(
    const Mixture& mix, int dim, int origin, int model, double t,
    int n_samples, std::uint64_t master_seed, int threads = 1,
    unsigned phase = kPhaseStats, unsigned grid_index = 0) {
  if (n_samples < 100)
    throw std::invalid_argument("estimate_free_entropy_stats: need >= 100");
  const Schedule sched = make_schedule(t);
  std::vector<double> fs(static_cast<std::size_t>(n_samples));
  std::vector<double> diff(static_cast<std::size_t>(n_samples));
  parallel_for(static_cast<std::size_t>(n_samples), threads, [&](std::size_t i) {
    Rng rng = derive_sample_rng(
        master_seed,
        sample_key(phase, static_cast<unsigned>(origin), grid_index, i));
    const auto a = mix.sample_component(origin, dim, rng);
    const auto x = forward_diffuse(a, t, rng);
    const double fm = mix.free_entropy(model, x, sched);
    const double fo =
        model == origin ? fm : mix.free_entropy(origin, x, sched);
    fs[i] = fm;
    diff[i] = fo - fm;
  });
  const SampleMoments ms = sample_moments(fs);
  const SampleMoments md = sample_moments(diff);
  FreeEntropyStats out;
  out.t = t;
  out.origin = origin;
  out.model = model;
  out.n_samples = n_samples;
  out.mean = ms.mean;
  out.variance = ms.variance;
  out.diff_mean = md.mean;
  out.diff_variance = md.variance;
  out.diff_std_error = md.mean_std_error();
  out.diff_variance_std_error = md.variance_std_error();
  return out;
}

// Monte-Carlo mean-difference curve f_rr - f_rs on a time grid, wrapped
// into a monotone cubic interpolant for the full criterion solve.
template <class Mixture>
PchipInterpolant mc_mean_diff_interpolant(const Mixture& mix, int dim,
                                          int origin, int model,
                                          std::span<const double> t_grid,
                                          int samples_per_point,
                                          std::uint64_t master_seed,
                                          int threads = 1) {
  std::vector<double> xs(t_grid.begin(), t_grid.end());
  std::vector<double> ys(xs.size());
  for (std::size_t g = 0; g < xs.size(); ++g) {
    const auto st = estimate_free_entropy_stats(
        mix, dim, origin, model, xs[g], samples_per_point, master_seed,
        threads, kPhaseStats, static_cast<unsigned>(g));
    ys[g] = st.diff_mean;
  }
  return PchipInterpolant(std::move(xs), std::move(ys));
}

}  // namespace diffspec
