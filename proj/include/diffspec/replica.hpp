#pragma once

// Replica-symmetric average free entropy of the random-field chain,
// computed by population dynamics on the left eigenvector of the n -> 0
// transfer kernel.
//
// The kernel acts on a two-branch density (phi+, phi-) over x > 0. One
// population update, with destination branch d in {+,-}:
//   - pick the source branch with probability e^{beta_r * d * src} / (2 cosh beta_r),
//   - draw an atom x from it and z ~ N(0,1),
//   - push  g_d(x,z) = e^{2 gamma z + 2 gamma^2 d} (e^{-b} + x e^{b}) / (e^{b} + x e^{-b}),
// with b = beta_s and gamma = e^{-t}/sqrt(Delta_t). At the fixed point the
// O(n) eigenvalue slope is
//   k = [(beta_s - gamma^2 + E+[log(1+cx)]) + (beta_s + gamma^2 + E-[log(1+cx)])]/2,
// c = e^{-2 beta_s}; subtracting log(2 cosh beta_s) (the per-spin
// normalization of the chain) gives the free entropy that the transfer
// matrix measures on samples, up to O(1/N) end effects. The zero-field
// fixed point x = 1 makes this vanish identically, which pins the
// normalization.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <stdexcept>
#include <vector>

#include "diffspec/errors.hpp"
#include "diffspec/rng.hpp"
#include "diffspec/schedule.hpp"

namespace diffspec {

struct ReplicaPopulation {
  double beta_r = 0.0;
  double beta_s = 0.0;
  double gamma = 0.0;
  std::vector<double> x_plus;
  std::vector<double> x_minus;
};

struct ReplicaResult {
  double k = 0.0;
  double f_rs = 0.0;
  double convergence_metric = 0.0;
};

struct ReplicaOptions {
  int population = 100000;
  int sweeps = 200;
  int burn_in = 50;
  double convergence_threshold = 0.05;
};

inline ReplicaPopulation init_population(double beta_r, double beta_s,
                                         double gamma, int population) {
  if (population < 2)
    throw std::invalid_argument("replica: population must be >= 2");
  ReplicaPopulation st;
  st.beta_r = beta_r;
  st.beta_s = beta_s;
  st.gamma = gamma;
  st.x_plus.assign(static_cast<std::size_t>(population), 1.0);
  st.x_minus.assign(static_cast<std::size_t>(population), 1.0);
  return st;
}

namespace detail_replica {

inline void one_sweep(ReplicaPopulation& st, Rng& rng,
                      std::vector<double>& buf_plus,
                      std::vector<double>& buf_minus) {
  const std::size_t m = st.x_plus.size();
  buf_plus.resize(m);
  buf_minus.resize(m);
  const double eb = std::exp(st.beta_s);
  const double ebm = std::exp(-st.beta_s);
  const double g2 = st.gamma * st.gamma;
  const double two_gamma = 2.0 * st.gamma;
  // P(source = +) given the destination branch
  const double p_src_plus_for_plus = 1.0 / (1.0 + std::exp(-2.0 * st.beta_r));
  const double p_src_plus_for_minus = 1.0 - p_src_plus_for_plus;
  for (int dest = 0; dest < 2; ++dest) {
    const double bias = dest == 0 ? std::exp(2.0 * g2) : std::exp(-2.0 * g2);
    const double p_plus = dest == 0 ? p_src_plus_for_plus : p_src_plus_for_minus;
    std::vector<double>& out = dest == 0 ? buf_plus : buf_minus;
    for (std::size_t j = 0; j < m; ++j) {
      const std::vector<double>& src =
          rng.uniform() < p_plus ? st.x_plus : st.x_minus;
      const double x = src[rng.below(m)];
      const double z = rng.normal();
      const double ratio = (ebm + x * eb) / (eb + x * ebm);
      const double xn = std::exp(two_gamma * z) * ratio * bias;
      if (!std::isfinite(xn))
        throw NumericalError("replica sweep produced a non-finite atom");
      out[j] = xn;
    }
  }
  st.x_plus.swap(buf_plus);
  st.x_minus.swap(buf_minus);
}

}  // namespace detail_replica

inline void iterate_population(ReplicaPopulation& st, int n_sweeps, Rng& rng) {
  std::vector<double> bp, bm;
  for (int s = 0; s < n_sweeps; ++s) detail_replica::one_sweep(st, rng, bp, bm);
}

// log of every atom (both branches); histogram fodder for convergence
// diagnostics.
inline std::vector<double> population_log_values(const ReplicaPopulation& st) {
  std::vector<double> u;
  u.reserve(st.x_plus.size() + st.x_minus.size());
  for (double x : st.x_plus) u.push_back(std::log(x));
  for (double x : st.x_minus) u.push_back(std::log(x));
  return u;
}

// Total-variation distance between the histograms of two samples on a
// shared binning.
inline double histogram_tv(const std::vector<double>& a,
                           const std::vector<double>& b, int bins = 64) {
  if (a.empty() || b.empty() || bins < 2)
    throw std::invalid_argument("histogram_tv: empty input");
  double lo = a[0], hi = a[0];
  for (double v : a) {
    lo = std::min(lo, v);
    hi = std::max(hi, v);
  }
  for (double v : b) {
    lo = std::min(lo, v);
    hi = std::max(hi, v);
  }
  if (hi <= lo) return 0.0;
  const double w = (hi - lo) / bins;
  std::vector<double> pa(static_cast<std::size_t>(bins), 0.0), pb = pa;
  auto fill = [&](const std::vector<double>& v, std::vector<double>& p) {
    for (double x : v) {
      auto idx = static_cast<int>((x - lo) / w);
      idx = std::clamp(idx, 0, bins - 1);
      p[static_cast<std::size_t>(idx)] += 1.0 / v.size();
    }
  };
  fill(a, pa);
  fill(b, pb);
  double tv = 0.0;
  for (int i = 0; i < bins; ++i)
    tv += std::fabs(pa[static_cast<std::size_t>(i)] -
                    pb[static_cast<std::size_t>(i)]);
  return 0.5 * tv;
}

// O(n) eigenvalue slope of the current population state.
inline ReplicaResult eigenvalue_slope(const ReplicaPopulation& st,
                                      double convergence_metric = 0.0) {
  const double c = std::exp(-2.0 * st.beta_s);
  auto mean_log = [&](const std::vector<double>& xs) {
    double s = 0.0;
    for (double x : xs) s += std::log1p(c * x);
    return s / static_cast<double>(xs.size());
  };
  const double g2 = st.gamma * st.gamma;
  const double ep = st.beta_s - g2 + mean_log(st.x_plus);
  const double em = st.beta_s + g2 + mean_log(st.x_minus);
  ReplicaResult r;
  r.k = 0.5 * (ep + em);
  r.f_rs = r.k - (std::log(std::cosh(st.beta_s)) + M_LN2);
  r.convergence_metric = convergence_metric;
  return r;
}

// End-to-end computation: burn in, then average the eigenvalue-slope
// estimator over the remaining sweeps (the single-state estimate is
// unbiased but noisy; the sweep average tightens it well below the
// acceptance tolerances). Convergence is diagnosed by the TV distance
// between the u-histograms at mid-measurement and at the end.
inline ReplicaResult replica_free_entropy(double beta_r, double beta_s,
                                          double t,
                                          const ReplicaOptions& opts,
                                          std::uint64_t seed) {
  if (!(t > 0.0))
    throw std::invalid_argument("replica_free_entropy: need t > 0");
  if (opts.sweeps <= opts.burn_in)
    throw std::invalid_argument("replica_free_entropy: sweeps <= burn_in");
  const Schedule sched = make_schedule(t);
  ReplicaPopulation st =
      init_population(beta_r, beta_s, sched.gamma, opts.population);
  Rng rng = derive_sample_rng(seed, sample_key(kPhaseReplica, 0, 0, 0));
  std::vector<double> bp, bm;
  const int measure = opts.sweeps - opts.burn_in;
  const int snap_at = opts.burn_in + measure / 2;
  std::vector<double> snapshot;
  const double c = std::exp(-2.0 * beta_s);
  double acc_plus = 0.0, acc_minus = 0.0;
  for (int s = 1; s <= opts.sweeps; ++s) {
    detail_replica::one_sweep(st, rng, bp, bm);
    if (s > opts.burn_in) {
      double sp = 0.0, sm = 0.0;
      for (double x : st.x_plus) sp += std::log1p(c * x);
      for (double x : st.x_minus) sm += std::log1p(c * x);
      acc_plus += sp / static_cast<double>(st.x_plus.size());
      acc_minus += sm / static_cast<double>(st.x_minus.size());
    }
    if (s == snap_at) snapshot = population_log_values(st);
  }
  const double metric = histogram_tv(snapshot, population_log_values(st));
  if (metric > opts.convergence_threshold)
    throw ConvergenceError(metric, "replica population did not converge");
  const double g2 = st.gamma * st.gamma;
  const double ep = beta_s - g2 + acc_plus / measure;
  const double em = beta_s + g2 + acc_minus / measure;
  ReplicaResult r;
  r.k = 0.5 * (ep + em);
  r.f_rs = r.k - (std::log(std::cosh(beta_s)) + M_LN2);
  r.convergence_metric = metric;
  return r;
}

inline ReplicaResult replica_free_entropy(double beta_r, double beta_s,
                                          double t, std::uint64_t seed) {
  return replica_free_entropy(beta_r, beta_s, t, ReplicaOptions{}, seed);
}

}  // namespace diffspec
