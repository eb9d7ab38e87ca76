#pragma once

// Counter-derived random streams shared by all stochastic code.
//
// Every Monte-Carlo sample gets its own stream derived from
// (master seed, sample key), so results never depend on scheduling or
// worker count. Generator is xoshiro256++ seeded through splitmix64.

#include <cmath>
#include <cstdint>

namespace diffspec {

namespace detail {

inline constexpr std::uint64_t kGolden = 0x9e3779b97f4a7c15ULL;

inline std::uint64_t mix64(std::uint64_t z) {
  z += kGolden;
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

inline std::uint64_t rotl(std::uint64_t x, int k) {
  return (x << k) | (x >> (64 - k));
}

}  // namespace detail

class Rng {
 public:
  explicit Rng(std::uint64_t seed) {
    std::uint64_t s = seed;
    for (auto& w : state_) {
      s = detail::mix64(s);
      w = s;
    }
  }

  std::uint64_t next_u64() {
    const std::uint64_t out =
        detail::rotl(state_[0] + state_[3], 23) + state_[0];
    const std::uint64_t t = state_[1] << 17;
    state_[2] ^= state_[0];
    state_[3] ^= state_[1];
    state_[1] ^= state_[2];
    state_[0] ^= state_[3];
    state_[2] ^= t;
    state_[3] = detail::rotl(state_[3], 45);
    return out;
  }

  // Uniform on [0,1), 53 random bits.
  double uniform() {
    return static_cast<double>(next_u64() >> 11) * 0x1.0p-53;
  }

  // Standard normal, Marsaglia polar; the second deviate is cached.
  double normal() {
    if (has_spare_) {
      has_spare_ = false;
      return spare_;
    }
    double u, v, s;
    do {
      u = 2.0 * uniform() - 1.0;
      v = 2.0 * uniform() - 1.0;
      s = u * u + v * v;
    } while (s >= 1.0 || s == 0.0);
    const double f = std::sqrt(-2.0 * std::log(s) / s);
    spare_ = v * f;
    has_spare_ = true;
    return u * f;
  }

  // Unbiased integer in [0, n), Lemire's method.
  std::uint64_t below(std::uint64_t n) {
    unsigned __int128 m =
        static_cast<unsigned __int128>(next_u64()) * n;
    auto lo = static_cast<std::uint64_t>(m);
    if (lo < n) {
      const std::uint64_t thresh = (-n) % n;
      while (lo < thresh) {
        m = static_cast<unsigned __int128>(next_u64()) * n;
        lo = static_cast<std::uint64_t>(m);
      }
    }
    return static_cast<std::uint64_t>(m >> 64);
  }

 private:
  std::uint64_t state_[4];
  double spare_ = 0.0;
  bool has_spare_ = false;
};

// Statistically independent stream for (master_seed, sample_index).
// Deterministic, order-free: the same pair always yields the same stream.
inline Rng derive_sample_rng(std::uint64_t master_seed,
                             std::uint64_t sample_index) {
  const std::uint64_t a = detail::mix64(master_seed);
  const std::uint64_t b = detail::mix64(sample_index ^ 0xd1b54a32d192ed03ULL);
  return Rng(detail::mix64(a ^ detail::rotl(b, 31)));
}

// Packs the logical coordinates of one Monte-Carlo sample into a key.
// phase distinguishes experiment stages, row/grid the loop indices.
constexpr std::uint64_t sample_key(unsigned phase, unsigned row,
                                   unsigned grid, std::uint64_t index) {
  return (static_cast<std::uint64_t>(phase & 0xff) << 56) |
         (static_cast<std::uint64_t>(row & 0xff) << 48) |
         (static_cast<std::uint64_t>(grid & 0xffff) << 32) |
         (index & 0xffffffffULL);
}

// Phase tags; values are arbitrary but frozen (reseeding would change
// every archived run).
enum SamplePhase : unsigned {
  kPhaseForward = 1,
  kPhaseUturn = 2,
  kPhaseMisattribution = 3,
  kPhaseStats = 4,
  kPhaseCollapse = 5,
  kPhaseReplica = 6,
};

}  // namespace diffspec
