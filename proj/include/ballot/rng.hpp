#pragma once

#include <cstdint>
#include <cmath>

namespace ballot {

// Counter-based stream derivation. Every trial owns an independent generator
// whose seed is a pure function of (master_seed, row, trial), so results are
// bit-identical for any thread count or execution order.
//
// Derivation (documented contract, stable across releases):
//   mix(x)  = splitmix64 finalizer
//   s_row   = mix(master ^ 0x9e3779b97f4a7c15 * (row + 1))
//   s_trial = mix(s_row ^ 0xbf58476d1ce4e5b9 * (trial + 1))
// The generator itself is a splitmix64 counter stream seeded with s_trial.

inline uint64_t splitmix64_mix(uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

inline uint64_t derive_row_seed(uint64_t master, uint64_t row) {
  return splitmix64_mix(master ^ (0x9e3779b97f4a7c15ULL * (row + 1)));
}

inline uint64_t derive_trial_seed(uint64_t row_seed, uint64_t trial) {
  return splitmix64_mix(row_seed ^ (0xbf58476d1ce4e5b9ULL * (trial + 1)));
}

class Rng {
 public:
  explicit Rng(uint64_t seed) : state_(seed) {}

  uint64_t next_u64() {
    state_ += 0x9e3779b97f4a7c15ULL;
    uint64_t x = state_;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
    return x ^ (x >> 31);
  }

  // uniform in [0,1) with 53 random bits
  double next_double() { return (next_u64() >> 11) * 0x1.0p-53; }

  // standard normal via explicit Box-Muller (pair cached); spelled out here so
  // draws do not depend on any standard-library distribution algorithm
  double next_normal() {
    if (have_spare_) {
      have_spare_ = false;
      return spare_;
    }
    double u1 = 1.0 - next_double();  // (0,1]
    double u2 = next_double();
    double r = std::sqrt(-2.0 * std::log(u1));
    double t = 6.283185307179586476925286766559 * u2;
    spare_ = r * std::sin(t);
    have_spare_ = true;
    return r * std::cos(t);
  }

  // exponential with mean 1
  double next_exponential() { return -std::log(1.0 - next_double()); }

 private:
  uint64_t state_;
  bool have_spare_ = false;
  double spare_ = 0.0;
};

}  // namespace ballot
