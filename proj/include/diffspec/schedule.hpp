#pragma once

// Diffusion-time bundle for the Ornstein-Uhlenbeck forward process
//   x_t = a e^{-t} + sqrt(1 - e^{-2t}) z.

#include <cmath>
#include <limits>
#include <stdexcept>

namespace diffspec {

struct Schedule {
  double t = 0.0;      // diffusion time
  double decay = 1.0;  // e^{-t}
  double delta = 0.0;  // 1 - e^{-2t}, the noise variance
  double gamma = 0.0;  // e^{-t} / sqrt(delta), the replica field scale
  bool degenerate = false;  // t == 0: delta vanishes, gamma undefined
};

inline Schedule make_schedule(double t) {
  if (!(t >= 0.0)) throw std::invalid_argument("make_schedule: t must be >= 0");
  Schedule s;
  s.t = t;
  s.decay = std::exp(-t);
  s.delta = -std::expm1(-2.0 * t);
  s.degenerate = (s.delta == 0.0);
  s.gamma = s.degenerate ? std::numeric_limits<double>::infinity()
                         : s.decay / std::sqrt(s.delta);
  return s;
}

}  // namespace diffspec
