#pragma once

// Forward noising and backward Euler-Maruyama integration against an
// abstract score. The backward process, integrated with time decreasing,
// updates
//   y <- y + (y + 2 S(y,t)) dt + sqrt(2 dt) xi,   xi ~ N(0, I),
// which has the target marginal as its t -> 0 limit when S is the exact
// score of the noised density.

#include <cmath>
#include <concepts>
#include <cstdint>
#include <span>
#include <stdexcept>
#include <vector>

#include "diffspec/errors.hpp"
#include "diffspec/parallel.hpp"
#include "diffspec/rng.hpp"
#include "diffspec/schedule.hpp"

namespace diffspec {

template <class F>
concept ScoreFunction =
    std::invocable<F&, std::span<const double>, double, std::span<double>>;

inline void forward_diffuse(std::span<const double> a, double t, Rng& rng,
                            std::span<double> out) {
  const Schedule s = make_schedule(t);
  const double noise = std::sqrt(s.delta);
  for (std::size_t i = 0; i < a.size(); ++i)
    out[i] = a[i] * s.decay + noise * rng.normal();
}

inline std::vector<double> forward_diffuse(std::span<const double> a, double t,
                                           Rng& rng) {
  std::vector<double> out(a.size());
  forward_diffuse(a, t, rng, out);
  return out;
}

// Integrates from t_start down to t_min with a uniform step of (nominally)
// dt; the span is divided into an integer number of steps. Throws
// IntegrationError if the score goes non-finite.
template <ScoreFunction S>
std::vector<double> integrate_backward(S&& score,
                                       std::span<const double> x_start,
                                       double t_start, double t_min, double dt,
                                       Rng& rng) {
  if (!(t_start > t_min && t_min >= dt && dt > 0.0))
    throw std::invalid_argument(
        "integrate_backward: need t_start > t_min >= dt > 0");
  const auto n_steps =
      static_cast<std::size_t>(std::llround((t_start - t_min) / dt));
  const std::size_t n = n_steps > 0 ? n_steps : 1;
  const double h = (t_start - t_min) / static_cast<double>(n);
  const double noise = std::sqrt(2.0 * h);

  std::vector<double> y(x_start.begin(), x_start.end());
  std::vector<double> drift(y.size());
  for (std::size_t k = 0; k < n; ++k) {
    const double t = t_start - static_cast<double>(k) * h;
    score(std::span<const double>(y), t, std::span<double>(drift));
    for (std::size_t i = 0; i < y.size(); ++i) {
      if (!std::isfinite(drift[i]))
        throw IntegrationError(k, "integrate_backward: non-finite score");
      y[i] += (y[i] + 2.0 * drift[i]) * h + noise * rng.normal();
    }
  }
  return y;
}

// A batch of forward-diffused samples with their origin labels and the
// seed lineage needed to reproduce them bit-for-bit.
struct TrajectoryBatch {
  int n_samples = 0;
  int dim = 0;
  double t = 0.0;
  std::vector<double> states;      // n_samples x dim, row-major
  std::vector<int> origin_labels;  // component index per sample
  std::uint64_t master_seed = 0;

  std::span<double> row(int i) {
    return {states.data() + static_cast<std::size_t>(i) * dim,
            static_cast<std::size_t>(dim)};
  }
  std::span<const double> row(int i) const {
    return {states.data() + static_cast<std::size_t>(i) * dim,
            static_cast<std::size_t>(dim)};
  }
};

// Mixture concept used by batch drivers: per-component exact sampling
// plus per-component free entropy of the noised state.
template <class M>
concept SampledMixture = requires(const M& m, int r, int n, Rng& rng) {
  { m.components() } -> std::convertible_to<int>;
  { m.sample_component(r, n, rng) } -> std::convertible_to<std::vector<double>>;
};

template <SampledMixture M>
TrajectoryBatch forward_batch(const M& mix, int dim, double t,
                              int per_component, std::uint64_t master_seed,
                              int threads = 1) {
  const int R = mix.components();
  TrajectoryBatch batch;
  batch.n_samples = R * per_component;
  batch.dim = dim;
  batch.t = t;
  batch.master_seed = master_seed;
  batch.states.resize(static_cast<std::size_t>(batch.n_samples) * dim);
  batch.origin_labels.resize(batch.n_samples);
  parallel_for(static_cast<std::size_t>(batch.n_samples), threads,
               [&](std::size_t i) {
                 const int r = static_cast<int>(i) / per_component;
                 const auto j = static_cast<unsigned>(i % per_component);
                 Rng rng = derive_sample_rng(
                     master_seed, sample_key(kPhaseForward, r, 0, j));
                 const auto a = mix.sample_component(r, dim, rng);
                 forward_diffuse(a, t, rng, batch.row(static_cast<int>(i)));
                 batch.origin_labels[i] = r;
               });
  return batch;
}

}  // namespace diffspec
