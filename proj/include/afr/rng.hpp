#pragma once

#include <cstdint>
#include <random>

namespace afr {

// Platform-independent draws on top of the standardized 64-bit Mersenne Twister
// (std distributions are implementation-defined).
class rng {
 public:
  explicit rng(std::uint64_t seed) : engine_(seed) {}

  // Uniform in [0, 1).
  double uniform() { return double(engine_() >> 11) * 0x1.0p-53; }
  // Uniform in [0, n).
  std::uint64_t index(std::uint64_t n) {
    return std::uint64_t((static_cast<unsigned __int128>(engine_()) * n) >> 64);
  }

 private:
  std::mt19937_64 engine_;
};

}  // namespace afr
