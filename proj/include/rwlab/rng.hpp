#pragma once

// Counter-based random numbers (Philox4x32-10). A draw is a pure function of
// (seed, stream, index), so results do not depend on scheduling or call order.

#include <array>
#include <cstdint>

namespace rwlab {

using PhiloxBlock = std::array<std::uint32_t, 4>;
using PhiloxKey = std::array<std::uint32_t, 2>;

namespace detail {

inline void mulhilo32(std::uint32_t a, std::uint32_t b, std::uint32_t& lo, std::uint32_t& hi) {
  const std::uint64_t p = static_cast<std::uint64_t>(a) * b;
  lo = static_cast<std::uint32_t>(p);
  hi = static_cast<std::uint32_t>(p >> 32);
}

}  // namespace detail

/// Ten-round Philox4x32 bijection of `ctr` under `key`.
constexpr std::uint32_t kPhiloxM0 = 0xD2511F53u;
constexpr std::uint32_t kPhiloxM1 = 0xCD9E8D57u;
constexpr std::uint32_t kPhiloxW0 = 0x9E3779B9u;
constexpr std::uint32_t kPhiloxW1 = 0xBB67AE85u;

inline PhiloxBlock philox4x32_10(PhiloxBlock ctr, PhiloxKey key) {
  for (int round = 0; round < 10; ++round) {
    std::uint32_t lo0, hi0, lo1, hi1;
    detail::mulhilo32(kPhiloxM0, ctr[0], lo0, hi0);
    detail::mulhilo32(kPhiloxM1, ctr[2], lo1, hi1);
    ctr = {hi1 ^ ctr[1] ^ key[0], lo1, hi0 ^ ctr[3] ^ key[1], lo0};
    key[0] += kPhiloxW0;
    key[1] += kPhiloxW1;
  }
  return ctr;
}

/// 64-bit finalizer from SplitMix64; used only to derive seeds.
constexpr std::uint64_t mix64(std::uint64_t z) {
  z += 0x9E3779B97F4A7C15ull;
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ull;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBull;
  return z ^ (z >> 31);
}

/// Child seed for task `a` (and optional sub-task `b`) of `master`.
constexpr std::uint64_t derive_seed(std::uint64_t master, std::uint64_t a, std::uint64_t b = 0) {
  return mix64(mix64(master ^ mix64(a + 0x632BE59BD9B4E019ull)) + mix64(b ^ 0x8CB92BA72F3D8DD7ull));
}

/// Uniform double in [0,1) built from 53 bits of two words.
constexpr double unit_from_words(std::uint32_t hi, std::uint32_t lo) {
  const std::uint64_t bits = ((static_cast<std::uint64_t>(hi) << 32) | lo) >> 11;
  return static_cast<double>(bits) * 0x1.0p-53;
}

/// Random access stream keyed by (seed, stream id). Block i yields two
/// uniforms (slots 0 and 1) or four raw words.
class CounterStream {
 public:
  CounterStream(std::uint64_t seed, std::uint64_t stream)
      : key_{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32)},
        stream_lo_(static_cast<std::uint32_t>(stream)),
        stream_hi_(static_cast<std::uint32_t>(stream >> 32)) {}

  PhiloxBlock block(std::uint64_t index) const {
    return philox4x32_10({static_cast<std::uint32_t>(index), static_cast<std::uint32_t>(index >> 32),
                          stream_lo_, stream_hi_},
                         key_);
  }

  double uniform(std::uint64_t index, int slot = 0) const {
    const PhiloxBlock b = block(index);
    return slot == 0 ? unit_from_words(b[0], b[1]) : unit_from_words(b[2], b[3]);
  }

  std::uint64_t bits64(std::uint64_t index, int slot = 0) const {
    const PhiloxBlock b = block(index);
    return slot == 0 ? (static_cast<std::uint64_t>(b[0]) << 32 | b[1])
                     : (static_cast<std::uint64_t>(b[2]) << 32 | b[3]);
  }

 private:
  PhiloxKey key_;
  std::uint32_t stream_lo_;
  std::uint32_t stream_hi_;
};

}  // namespace rwlab
