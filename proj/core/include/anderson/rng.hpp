#pragma once

#include <cmath>
#include <cstdint>

// Counter-free splitmix64 streams. Every random quantity in the project is a
// pure function of a 64-bit key, so results do not depend on evaluation order,
// thread count, or the platform's std::<distribution> internals.

namespace anderson {

inline std::uint64_t splitmix64(std::uint64_t& state) {
  state += 0x9e3779b97f4a7c15ULL;
  std::uint64_t z = state;
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

// One-shot mix of two words into a fresh stream key.
inline std::uint64_t mix_keys(std::uint64_t a, std::uint64_t b) {
  std::uint64_t s = a;
  std::uint64_t x = splitmix64(s);
  s = x ^ b;
  return splitmix64(s);
}

class Rng {
 public:
  explicit Rng(std::uint64_t key) : state_(key) {}

  std::uint64_t next_u64() { return splitmix64(state_); }

  // Uniform on [0, 1) with 53 random bits.
  double uniform01() { return static_cast<double>(next_u64() >> 11) * 0x1.0p-53; }

  // Uniform on (0, 1], safe as inverse-CDF input.
  double uniform01_open_left() { return 1.0 - uniform01(); }

  bool fair_bit() { return (next_u64() & 1ULL) != 0; }

  // Box-Muller; one draw per call, the partner variate is discarded to keep
  // every value a fixed function of the stream position.
  double standard_normal() {
    double u = uniform01_open_left();
    double v = uniform01();
    return std::sqrt(-2.0 * std::log(u)) * std::cos(6.283185307179586476925287 * v);
  }

 private:
  std::uint64_t state_;
};

}  // namespace anderson
