#pragma once

// Mixtures of open 1D Ising chains as a diffusion target: exact sampling,
// random-field free entropy via transfer matrices, Bayes attribution,
// posterior magnetization and the exact score.
//
// Conventions (fixed across the project):
//   - open chain, couplings between sites i and i+1 for i = 1..N-1;
//   - the diffused state x enters as a local field h_i = (e^{-t}/Delta_t) x_i
//     on every one of the N spins;
//   - per-component normalization Z(beta) = 2 (2 cosh beta)^{N-1}.
//
// Transfer sweeps factor e^{|h_i|} out of every site so matrix entries stay
// bounded; scales are re-absorbed every few sites and their logs accumulated,
// which keeps the sweeps exact at any N and field strength.

#include <cmath>
#include <cstdint>
#include <span>
#include <stdexcept>
#include <vector>

#include "diffspec/rng.hpp"
#include "diffspec/schedule.hpp"

namespace diffspec {

struct IsingComponent {
  double beta = 0.0;
  double weight = 1.0;

  // log Z(beta) = log 2 + (N-1) log(2 cosh beta)
  double log_partition(int n) const {
    return M_LN2 + (n - 1) * (log_cosh_beta() + M_LN2);
  }
  double log_cosh_beta() const { return std::log(std::cosh(beta)); }
};

// Exact sample of the open-chain measure exp(beta sum s_i s_{i+1}) / Z:
// the first spin is uniform, each next one repeats its neighbor with
// probability e^{beta} / (2 cosh beta).
inline std::vector<double> sample_chain(double beta, int n, Rng& rng) {
  if (n < 2) throw std::invalid_argument("sample_chain: need N >= 2");
  const double p_flip = 1.0 / (1.0 + std::exp(2.0 * beta));
  std::vector<double> s(static_cast<std::size_t>(n));
  s[0] = rng.uniform() < 0.5 ? 1.0 : -1.0;
  for (int i = 1; i < n; ++i)
    s[i] = rng.uniform() < p_flip ? -s[i - 1] : s[i - 1];
  return s;
}

// Scratch buffers for the transfer sweeps; reusable across calls so the
// per-step cost of the backward sampler stays allocation-free.
struct TransferWorkspace {
  std::vector<double> field;   // h_i
  std::vector<double> damp;    // e^{-2|h_i|}
  double sum_abs_field = 0.0;  // sum_i |h_i|
  std::vector<double> lpairs;  // per-component prefix pairs, R x 2N
  std::vector<double> logz;    // per-component log of the dressed sum
  std::vector<double> logits;  // per-component attribution logits
  std::vector<double> magnet;  // posterior magnetization buffer
};

namespace detail_ising {

inline constexpr int kRenormStride = 16;

inline void prepare_fields(std::span<const double> x, const Schedule& sched,
                           TransferWorkspace& ws) {
  if (sched.degenerate)
    throw std::invalid_argument("transfer sweep: schedule is degenerate (t=0)");
  const std::size_t n = x.size();
  ws.field.resize(n);
  ws.damp.resize(n);
  const double c = sched.decay / sched.delta;
  double acc = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    const double h = c * x[i];
    if (!std::isfinite(h))
      throw std::invalid_argument("transfer sweep: non-finite field");
    ws.field[i] = h;
    const double a = std::fabs(h);
    acc += a;
    ws.damp[i] = std::exp(-2.0 * a);
  }
  ws.sum_abs_field = acc;
}

// Prefix sweep. Returns log of the field-dressed partition sum
// log sum_s exp(beta sum s s' + sum h s). When store != nullptr the
// (possibly chunk-rescaled) pair at every site is written to store[2i],
// store[2i+1]; only ratios within one site are meaningful there.
inline double prefix_sweep(double beta, const TransferWorkspace& ws,
                           double* store) {
  const std::size_t n = ws.field.size();
  const double ep = std::exp(beta);
  const double em = std::exp(-beta);
  double lp, lm;
  if (ws.field[0] >= 0.0) {
    lp = 1.0;
    lm = ws.damp[0];
  } else {
    lp = ws.damp[0];
    lm = 1.0;
  }
  if (store) {
    store[0] = lp;
    store[1] = lm;
  }
  double log_scale = 0.0;
  for (std::size_t i = 1; i < n; ++i) {
    const double a = ep * lp + em * lm;
    const double b = em * lp + ep * lm;
    if (ws.field[i] >= 0.0) {
      lp = a;
      lm = ws.damp[i] * b;
    } else {
      lp = ws.damp[i] * a;
      lm = b;
    }
    if (i % kRenormStride == 0) {
      const double s = lp + lm;
      log_scale += std::log(s);
      const double inv = 1.0 / s;
      lp *= inv;
      lm *= inv;
    }
    if (store) {
      store[2 * i] = lp;
      store[2 * i + 1] = lm;
    }
  }
  return ws.sum_abs_field + log_scale + std::log(lp + lm);
}

// Suffix pass over a stored prefix sweep: computes the per-site
// magnetization of the tilted single-component measure and either stores
// it or accumulates weight * m_i into acc.
inline void suffix_magnetization(double beta, const TransferWorkspace& ws,
                                 const double* lpair, double weight,
                                 double* acc, bool accumulate) {
  const auto n = static_cast<std::ptrdiff_t>(ws.field.size());
  const double ep = std::exp(beta);
  const double em = std::exp(-beta);
  double rp = 1.0, rm = 1.0;
  for (std::ptrdiff_t i = n - 1; i >= 0; --i) {
    const double num = lpair[2 * i] * rp - lpair[2 * i + 1] * rm;
    const double den = lpair[2 * i] * rp + lpair[2 * i + 1] * rm;
    const double m = num / den;
    if (accumulate)
      acc[i] += weight * m;
    else
      acc[i] = m;
    if (i == 0) break;
    // absorb field of site i, then the coupling to site i-1
    double fp, fm;
    if (ws.field[i] >= 0.0) {
      fp = rp;
      fm = ws.damp[i] * rm;
    } else {
      fp = ws.damp[i] * rp;
      fm = rm;
    }
    rp = ep * fp + em * fm;
    rm = em * fp + ep * fm;
    if ((n - i) % kRenormStride == 0) {
      const double inv = 1.0 / (rp + rm);
      rp *= inv;
      rm *= inv;
    }
  }
}

inline void softmax_inplace(std::vector<double>& v) {
  double top = v[0];
  for (double x : v) top = std::max(top, x);
  double sum = 0.0;
  for (double& x : v) {
    x = std::exp(x - top);
    sum += x;
  }
  for (double& x : v) x /= sum;
}

}  // namespace detail_ising

// Free entropy of one chain in the random field of the diffused state:
//   f = [log sum_s exp(beta sum ss' + sum h s) - log Z(beta)] / N.
inline double free_entropy_rfim(double beta, std::span<const double> x,
                                const Schedule& sched, TransferWorkspace& ws) {
  detail_ising::prepare_fields(x, sched, ws);
  const auto n = static_cast<int>(x.size());
  const IsingComponent comp{beta, 1.0};
  const double logz = detail_ising::prefix_sweep(beta, ws, nullptr);
  return (logz - comp.log_partition(n)) / n;
}

inline double free_entropy_rfim(double beta, std::span<const double> x,
                                const Schedule& sched) {
  TransferWorkspace ws;
  return free_entropy_rfim(beta, x, sched, ws);
}

struct IsingMixture {
  std::vector<IsingComponent> comps;

  IsingMixture() = default;
  explicit IsingMixture(std::vector<IsingComponent> components)
      : comps(std::move(components)) {
    double w = 0.0;
    for (const auto& c : comps) w += c.weight;
    if (comps.empty() || std::fabs(w - 1.0) > 1e-12)
      throw std::invalid_argument("IsingMixture: weights must sum to 1");
  }

  static IsingMixture uniform(const std::vector<double>& betas) {
    std::vector<IsingComponent> cs;
    cs.reserve(betas.size());
    for (double b : betas)
      cs.push_back({b, 1.0 / static_cast<double>(betas.size())});
    return IsingMixture(std::move(cs));
  }

  int components() const { return static_cast<int>(comps.size()); }

  std::vector<double> sample_component(int r, int n, Rng& rng) const {
    return sample_chain(comps[static_cast<std::size_t>(r)].beta, n, rng);
  }

  double free_entropy(int s, std::span<const double> x,
                      const Schedule& sched) const {
    return free_entropy_rfim(comps[static_cast<std::size_t>(s)].beta, x, sched);
  }
};

// Posterior component probabilities of a noised state: softmax over
// log w_s + N f_s(x,t), computed with max subtraction.
inline std::vector<double> bayes_attribution(const IsingMixture& mix,
                                             std::span<const double> x,
                                             const Schedule& sched,
                                             TransferWorkspace& ws) {
  detail_ising::prepare_fields(x, sched, ws);
  const auto n = static_cast<int>(x.size());
  const int r = mix.components();
  ws.logits.resize(static_cast<std::size_t>(r));
  for (int s = 0; s < r; ++s) {
    const auto& c = mix.comps[static_cast<std::size_t>(s)];
    ws.logits[static_cast<std::size_t>(s)] =
        std::log(c.weight) + detail_ising::prefix_sweep(c.beta, ws, nullptr) -
        c.log_partition(n);
  }
  std::vector<double> out = ws.logits;
  detail_ising::softmax_inplace(out);
  return out;
}

inline std::vector<double> bayes_attribution(const IsingMixture& mix,
                                             std::span<const double> x,
                                             const Schedule& sched) {
  TransferWorkspace ws;
  return bayes_attribution(mix, x, sched, ws);
}

// Posterior mean <s_i>_x of the spins given the noised state: the
// attribution-weighted single-component tilted magnetizations, each
// obtained from one prefix and one suffix transfer sweep (O(N) per
// component).
inline void posterior_mean(const IsingMixture& mix, std::span<const double> x,
                           const Schedule& sched, TransferWorkspace& ws,
                           std::span<double> out) {
  detail_ising::prepare_fields(x, sched, ws);
  const auto n = static_cast<std::size_t>(x.size());
  const int r = mix.components();
  ws.lpairs.resize(static_cast<std::size_t>(r) * 2 * n);
  ws.logits.resize(static_cast<std::size_t>(r));
  for (int s = 0; s < r; ++s) {
    const auto& c = mix.comps[static_cast<std::size_t>(s)];
    double* store = ws.lpairs.data() + static_cast<std::size_t>(s) * 2 * n;
    ws.logits[static_cast<std::size_t>(s)] =
        std::log(c.weight) + detail_ising::prefix_sweep(c.beta, ws, store) -
        c.log_partition(static_cast<int>(n));
  }
  std::vector<double> omega = ws.logits;
  detail_ising::softmax_inplace(omega);
  for (std::size_t i = 0; i < n; ++i) out[i] = 0.0;
  for (int s = 0; s < r; ++s) {
    const double w = omega[static_cast<std::size_t>(s)];
    if (w == 0.0) continue;
    detail_ising::suffix_magnetization(
        mix.comps[static_cast<std::size_t>(s)].beta, ws,
        ws.lpairs.data() + static_cast<std::size_t>(s) * 2 * n, w, out.data(),
        true);
  }
}

inline std::vector<double> posterior_mean(const IsingMixture& mix,
                                          std::span<const double> x,
                                          const Schedule& sched) {
  TransferWorkspace ws;
  std::vector<double> out(x.size());
  posterior_mean(mix, x, sched, ws, out);
  return out;
}

// Exact score S(x,t) = -(x - e^{-t} <s>_x) / Delta_t.
inline void exact_score(const IsingMixture& mix, std::span<const double> x,
                        const Schedule& sched, TransferWorkspace& ws,
                        std::span<double> out) {
  posterior_mean(mix, x, sched, ws, out);
  const double inv = 1.0 / sched.delta;
  for (std::size_t i = 0; i < x.size(); ++i)
    out[i] = -(x[i] - sched.decay * out[i]) * inv;
}

inline std::vector<double> exact_score(const IsingMixture& mix,
                                       std::span<const double> x,
                                       const Schedule& sched) {
  TransferWorkspace ws;
  std::vector<double> out(x.size());
  exact_score(mix, x, sched, ws, out);
  return out;
}

// Score functor for the backward integrator; owns its scratch space.
struct IsingMixtureScore {
  const IsingMixture* mix;
  TransferWorkspace ws;

  explicit IsingMixtureScore(const IsingMixture& m) : mix(&m) {}

  void operator()(std::span<const double> x, double t, std::span<double> out) {
    const Schedule sched = make_schedule(t);
    exact_score(*mix, x, sched, ws, out);
  }
};

// Thermodynamic-limit squared distance between the correlation functions
// of two chains, per spin:
//   2 [ u^2/(1-u^2) + v^2/(1-v^2) - 2uv/(1-uv) ],  u = tanh(beta_r),
// v = tanh(beta_s). Symmetric and nonnegative (it is 2 sum_k (u^k - v^k)^2).
inline double correlation_distance(double beta_r, double beta_s) {
  const double u = std::tanh(beta_r);
  const double v = std::tanh(beta_s);
  return 2.0 * (u * u / (1.0 - u * u) + v * v / (1.0 - v * v) -
                2.0 * u * v / (1.0 - u * v));
}

}  // namespace diffspec
