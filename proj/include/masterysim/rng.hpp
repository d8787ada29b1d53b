#pragma once

// Deterministic random source used everywhere in the simulator.
//
// Algorithm is pinned so that runs are reproducible bit-for-bit:
//   * generator: xoshiro256** (Blackman & Vigna), state seeded from a
//     splitmix64 stream of the 64-bit seed
//   * uniform():      (next() >> 11) * 2^-53, in [0, 1)
//   * uniform_index(n): high 64 bits of next() * n (multiply-shift)
//   * normal():       Box-Muller on two uniform() draws, no caching
//   * per-learner seed: split_seed(seed, i) = mix64(seed + (i + 1) * 0x9E3779B97F4A7C15)
//     where mix64 is the splitmix64 finalizer
//
// std:: distributions are deliberately not used; their output is
// implementation defined.

#include <array>
#include <cmath>
#include <cstdint>
#include <numbers>

namespace masterysim {

constexpr std::uint64_t mix64(std::uint64_t z) noexcept {
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
  return z ^ (z >> 31);
}

constexpr std::uint64_t kGoldenGamma = 0x9E3779B97F4A7C15ULL;

constexpr std::uint64_t split_seed(std::uint64_t seed, std::uint64_t index) noexcept {
  return mix64(seed + (index + 1) * kGoldenGamma);
}

class Rng {
 public:
  explicit Rng(std::uint64_t seed = 0) noexcept { reseed(seed); }

  void reseed(std::uint64_t seed) noexcept {
    std::uint64_t x = seed;
    for (auto& word : state_) {
      x += kGoldenGamma;
      word = mix64(x);
    }
  }

  std::uint64_t next() noexcept {
    const std::uint64_t result = rotl(state_[1] * 5, 7) * 9;
    const std::uint64_t t = state_[1] << 17;
    state_[2] ^= state_[0];
    state_[3] ^= state_[1];
    state_[1] ^= state_[2];
    state_[0] ^= state_[3];
    state_[2] ^= t;
    state_[3] = rotl(state_[3], 45);
    return result;
  }

  double uniform() noexcept { return static_cast<double>(next() >> 11) * 0x1.0p-53; }

  // n must be > 0.
  std::size_t uniform_index(std::size_t n) noexcept {
    const unsigned __int128 wide = static_cast<unsigned __int128>(next()) * n;
    return static_cast<std::size_t>(wide >> 64);
  }

  bool bernoulli(double p) noexcept { return uniform() < p; }

  double normal() noexcept {
    // 1 - u keeps the log argument in (0, 1].
    const double u1 = 1.0 - uniform();
    const double u2 = uniform();
    return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * std::numbers::pi * u2);
  }

  double normal(double mean, double sd) noexcept { return mean + sd * normal(); }

  std::array<std::uint64_t, 4> state() const noexcept { return state_; }

 private:
  static constexpr std::uint64_t rotl(std::uint64_t x, int k) noexcept {
    return (x << k) | (x >> (64 - k));
  }

  std::array<std::uint64_t, 4> state_{};
};

}  // namespace masterysim
