#pragma once

#include <cmath>
#include <cstdint>

namespace mima {

// Counter-based stream generator (SplitMix64 over a Weyl sequence). Each
// stream is a pure function of its 64-bit key, so derived streams do not
// perturb one another: chain k of a run always sees the same numbers no
// matter how many chains run beside it.
class Rng {
 public:
  explicit Rng(std::uint64_t key) : state_(mix(key ^ 0x9e3779b97f4a7c15ull)) {}

  // Stream key for a sub-task (chain, replication, prediction noise, ...).
  static std::uint64_t derive(std::uint64_t seed, std::uint64_t index) {
    return mix(mix(seed) + 0x9e3779b97f4a7c15ull * (index + 1));
  }

  std::uint64_t next_u64() {
    state_ += 0x9e3779b97f4a7c15ull;
    return mix(state_);
  }

  // Uniform on [0,1) with 53-bit resolution.
  double uniform() { return static_cast<double>(next_u64() >> 11) * 0x1.0p-53; }

  // Uniform on (0,1), never exactly 0 (safe to take logs).
  double uniform_pos() {
    double u = uniform();
    while (u <= 0.0) u = uniform();
    return u;
  }

  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

  // Standard normal via Marsaglia's polar method; second value discarded to
  // keep the draw sequence a simple function of the stream position.
  double normal() {
    for (;;) {
      const double u = 2.0 * uniform() - 1.0;
      const double v = 2.0 * uniform() - 1.0;
      const double s = u * u + v * v;
      if (s > 0.0 && s < 1.0) return u * std::sqrt(-2.0 * std::log(s) / s);
    }
  }

  double normal(double mean, double sd) { return mean + sd * normal(); }

  bool bernoulli(double p) { return uniform() < p; }

  // Marsaglia-Tsang for shape >= 1, boosted below 1. Rate parameterisation.
  double gamma(double shape, double rate) {
    if (shape < 1.0) {
      const double u = uniform_pos();
      return gamma(shape + 1.0, rate) * std::pow(u, 1.0 / shape);
    }
    const double d = shape - 1.0 / 3.0;
    const double c = 1.0 / std::sqrt(9.0 * d);
    for (;;) {
      double x = normal();
      double v = 1.0 + c * x;
      if (v <= 0.0) continue;
      v = v * v * v;
      const double u = uniform_pos();
      if (std::log(u) < 0.5 * x * x + d - d * v + d * std::log(v)) {
        return d * v / rate;
      }
    }
  }

  double beta(double a, double b) {
    const double x = gamma(a, 1.0);
    const double y = gamma(b, 1.0);
    return x / (x + y);
  }

 private:
  static std::uint64_t mix(std::uint64_t z) {
    z ^= z >> 30;
    z *= 0xbf58476d1ce4e5b9ull;
    z ^= z >> 27;
    z *= 0x94d049bb133111ebull;
    z ^= z >> 31;
    return z;
  }

  std::uint64_t state_;
};

}  // namespace mima
