#pragma once

#include <cstdint>
#include <random>

#include "locklab/bytes.hpp"

namespace locklab {

// Deterministic randomness source. Every emulated party draws exclusively
// from one of these so that equal seeds reproduce equal runs byte for byte.
// mt19937_64 has a standard-mandated algorithm, so streams are identical
// across platforms and standard libraries.
class DeterministicRng {
 public:
  explicit DeterministicRng(uint64_t seed) : eng_(seed) {}

  uint64_t next_u64() { return eng_(); }

  // 8 bytes per draw, little-endian, truncating the final draw.
  void fill(uint8_t* out, size_t n) {
    size_t i = 0;
    while (i < n) {
      uint64_t v = next_u64();
      for (int b = 0; b < 8 && i < n; ++b, ++i) {
        out[i] = static_cast<uint8_t>(v >> (8 * b));
      }
    }
  }

  Bytes bytes(size_t n) {
    Bytes out(n);
    fill(out.data(), n);
    return out;
  }

  template <size_t N>
  std::array<uint8_t, N> array() {
    std::array<uint8_t, N> out;
    fill(out.data(), N);
    return out;
  }

  // Derives an independent child stream; draw order is part of a component's
  // interface, so forks happen in one documented sequence per composite.
  DeterministicRng fork() { return DeterministicRng(next_u64()); }

  // Bounded draw; modulo bias is irrelevant here (determinism, not statistics).
  uint64_t below(uint64_t bound) { return bound == 0 ? 0 : next_u64() % bound; }

 private:
  std::mt19937_64 eng_;
};

}  // namespace locklab
