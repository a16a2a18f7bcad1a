#pragma once

#include <array>
#include <cstdint>

namespace abcstat {

namespace detail {

// SplitMix64 finalizer (Vigna); used for seeding and key derivation.
constexpr std::uint64_t mix64(std::uint64_t z) noexcept {
  z += 0x9e3779b97f4a7c15ull;
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ull;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebull;
  return z ^ (z >> 31);
}

constexpr std::uint64_t rotl64(std::uint64_t x, int k) noexcept {
  return (x << k) | (x >> (64 - k));
}

}  // namespace detail

// Seedable, splittable random stream: a xoshiro256++ engine whose state is
// expanded from a 64-bit key. split(i) derives an independent child stream
// from (key, i) alone — drawing from a stream never perturbs its children —
// so derive one child per independent consumer (iteration, replicate, cell)
// and results stay identical under any parallel schedule.
class RngStream {
 public:
  explicit RngStream(std::uint64_t seed) : key_(detail::mix64(seed)) {
    expand_key();
  }

  [[nodiscard]] RngStream split(std::uint64_t index) const noexcept {
    return RngStream(derived{}, detail::mix64(key_ ^ detail::mix64(index + 0x632be59bd9b4e019ull)));
  }

  std::uint64_t key() const noexcept { return key_; }

  std::uint64_t next_u64() noexcept {
    const std::uint64_t result = detail::rotl64(s_[0] + s_[3], 23) + s_[0];
    const std::uint64_t t = s_[1] << 17;
    s_[2] ^= s_[0];
    s_[3] ^= s_[1];
    s_[1] ^= s_[2];
    s_[0] ^= s_[3];
    s_[2] ^= t;
    s_[3] = detail::rotl64(s_[3], 45);
    return result;
  }

  // Uniform on [0,1) with 53-bit resolution.
  double uniform01() noexcept {
    return static_cast<double>(next_u64() >> 11) * 0x1.0p-53;
  }

  // Uniform on the open interval (0,1); safe to push through inverse CDFs.
  double uniform_open01() noexcept {
    return (static_cast<double>(next_u64() >> 11) + 0.5) * 0x1.0p-53;
  }

  double uniform(double lower, double upper) noexcept {
    return lower + (upper - lower) * uniform01();
  }

  double uniform_open(double lower, double upper) noexcept {
    return lower + (upper - lower) * uniform_open01();
  }

  // Uniform index in [0, bound); bound must be nonzero.
  std::uint64_t uniform_index(std::uint64_t bound) noexcept {
    return static_cast<std::uint64_t>(
        (static_cast<unsigned __int128>(next_u64()) * bound) >> 64);
  }

 private:
  struct derived {};
  RngStream(derived, std::uint64_t key) noexcept : key_(key) { expand_key(); }

  void expand_key() noexcept {
    std::uint64_t s = key_;
    for (auto& word : s_) word = detail::mix64(s += 0x9e3779b97f4a7c15ull);
    if ((s_[0] | s_[1] | s_[2] | s_[3]) == 0) s_[0] = 1;  // xoshiro state must not be all zero
  }

  std::uint64_t key_;
  std::array<std::uint64_t, 4> s_{};
};

}  // namespace abcstat
