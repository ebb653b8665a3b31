#pragma once

// Counter-based random streams. A stream is identified by a key tuple
// (seed, experiment, p, sample, component); draws are a pure function of the
// key and the draw index, so results never depend on scheduling.

#include <cmath>
#include <cstdint>
#include <initializer_list>

#include "bergman_lab/core.hpp"

namespace bergman_lab {

inline std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

inline std::uint64_t hash_key(std::initializer_list<std::uint64_t> parts) {
  std::uint64_t h = 0x6a09e667f3bcc909ULL;
  for (auto v : parts) h = splitmix64(h ^ splitmix64(v));
  return h;
}

class RngStream {
 public:
  RngStream(std::uint64_t seed, std::uint64_t experiment, std::uint64_t p, std::uint64_t sample,
            std::uint64_t component = 0)
      : key_(hash_key({seed, experiment, p, sample, component})) {}
  explicit RngStream(std::uint64_t key) : key_(key) {}

  std::uint64_t next_u64() { return splitmix64(key_ ^ splitmix64(counter_++)); }
  // Uniform in (0, 1).
  double uniform() { return (static_cast<double>(next_u64() >> 11) + 0.5) * 0x1.0p-53; }
  double normal() {
    if (has_spare_) {
      has_spare_ = false;
      return spare_;
    }
    const double u1 = uniform(), u2 = uniform();
    const double r = std::sqrt(-2.0 * std::log(u1));
    spare_ = r * std::sin(2.0 * kPi * u2);
    has_spare_ = true;
    return r * std::cos(2.0 * kPi * u2);
  }
  // Standard complex Gaussian: E|ξ|² = 1.
  Complex complex_normal() {
    const double a = normal(), b = normal();
    return {a * M_SQRT1_2, b * M_SQRT1_2};
  }

 private:
  std::uint64_t key_;
  std::uint64_t counter_ = 0;
  double spare_ = 0.0;
  bool has_spare_ = false;
};

}  // namespace bergman_lab
