#pragma once

#include <array>
#include <cstdint>
#include <limits>

namespace depcen {

/// SplitMix64 finalizer; used to derive independent seeds from (seed, stream) keys.
constexpr std::uint64_t splitmix64(std::uint64_t x) noexcept {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

/// Seedable, splittable xoshiro256** generator.
///
/// Every draw helper below is implemented here rather than through <random>
/// distributions so that streams are bit-identical across standard libraries.
class Rng {
 public:
  using result_type = std::uint64_t;

  explicit Rng(std::uint64_t seed = 0) noexcept : key_(seed) {
    std::uint64_t s = seed;
    for (auto& word : state_) {
      s = splitmix64(s);
      word = s;
    }
  }

  static constexpr result_type min() noexcept { return 0; }
  static constexpr result_type max() noexcept {
    return std::numeric_limits<result_type>::max();
  }

  result_type operator()() noexcept {
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

  /// Independent substream keyed by `stream`; does not advance this generator.
  [[nodiscard]] Rng split(std::uint64_t stream) const noexcept {
    return Rng(splitmix64(key_ ^ splitmix64(stream + 0x632be59bd9b4e019ULL)));
  }

  /// Uniform on the open interval (0, 1) with 53 bits of resolution.
  double uniform() noexcept {
    return (static_cast<double>((*this)() >> 11) + 0.5) * 0x1.0p-53;
  }

  /// Uniform integer in [0, n) by rejection (unbiased).
  std::uint64_t index(std::uint64_t n) noexcept {
    const std::uint64_t limit = max() - max() % n;
    std::uint64_t r = (*this)();
    while (r >= limit) r = (*this)();
    return r % n;
  }

  /// Standard normal draw by inversion of a uniform.
  double normal() noexcept;

  [[nodiscard]] std::uint64_t key() const noexcept { return key_; }

 private:
  static constexpr std::uint64_t rotl(std::uint64_t x, int k) noexcept {
    return (x << k) | (x >> (64 - k));
  }

  std::uint64_t key_;
  std::array<std::uint64_t, 4> state_{};
};

}  // namespace depcen
