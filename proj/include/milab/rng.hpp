#pragma once

#include <cmath>
#include <cstdint>
#include <numbers>

namespace milab::rng {

/// Philox 4x32-10 counter-based generator (Salmon et al., SC 2011).
/// A draw is addressed by (key, counter): the key encodes (seed, stream)
/// and the counter is a 128-bit block index. Any sample in any stream can
/// be regenerated in O(1), which is what makes parallel sweeps and
/// common-random-number estimates bit-reproducible.
struct PhiloxBlock {
  std::uint32_t v[4];
};

inline PhiloxBlock philox4x32(std::uint64_t seed, std::uint64_t stream,
                              std::uint64_t counter) {
  constexpr std::uint32_t kM0 = 0xD2511F53u, kM1 = 0xCD9E8D57u;
  constexpr std::uint32_t kW0 = 0x9E3779B9u, kW1 = 0xBB67AE85u;
  std::uint32_t c0 = static_cast<std::uint32_t>(counter);
  std::uint32_t c1 = static_cast<std::uint32_t>(counter >> 32);
  std::uint32_t c2 = static_cast<std::uint32_t>(stream);
  std::uint32_t c3 = static_cast<std::uint32_t>(stream >> 32);
  std::uint32_t k0 = static_cast<std::uint32_t>(seed);
  std::uint32_t k1 = static_cast<std::uint32_t>(seed >> 32);
  for (int round = 0; round < 10; ++round) {
    const std::uint64_t p0 = static_cast<std::uint64_t>(kM0) * c0;
    const std::uint64_t p1 = static_cast<std::uint64_t>(kM1) * c2;
    const std::uint32_t hi0 = static_cast<std::uint32_t>(p0 >> 32);
    const std::uint32_t lo0 = static_cast<std::uint32_t>(p0);
    const std::uint32_t hi1 = static_cast<std::uint32_t>(p1 >> 32);
    const std::uint32_t lo1 = static_cast<std::uint32_t>(p1);
    const std::uint32_t n0 = hi1 ^ c1 ^ k0;
    const std::uint32_t n1 = lo1;
    const std::uint32_t n2 = hi0 ^ c3 ^ k1;
    const std::uint32_t n3 = lo0;
    c0 = n0;
    c1 = n1;
    c2 = n2;
    c3 = n3;
    k0 += kW0;
    k1 += kW1;
  }
  return PhiloxBlock{{c0, c1, c2, c3}};
}

inline double u32_to_unit_open(std::uint32_t x) {
  // (0, 1]: suitable as the log argument in Box-Muller.
  return (static_cast<double>(x) + 1.0) * (1.0 / 4294967296.0);
}

inline double u64_to_unit(std::uint64_t x) {
  return static_cast<double>(x >> 11) * 0x1.0p-53;
}

/// Sequential view over one (seed, stream) pair. Each Philox block yields
/// four 32-bit words; gaussians come in Box-Muller pairs so consumption
/// stays block-aligned and addressable.
class Stream {
 public:
  Stream(std::uint64_t seed, std::uint64_t stream, std::uint64_t start_block = 0)
      : seed_(seed), stream_(stream), block_(start_block) {}

  std::uint64_t seed() const { return seed_; }
  std::uint64_t stream_id() const { return stream_; }
  std::uint64_t block() const { return block_; }
  void seek(std::uint64_t block) {
    block_ = block;
    word_ = 4;
    have_gauss_ = false;
  }

  std::uint32_t next_u32() {
    if (word_ >= 4) {
      cur_ = philox4x32(seed_, stream_, block_++);
      word_ = 0;
    }
    return cur_.v[word_++];
  }

  std::uint64_t next_u64() {
    const std::uint64_t hi = next_u32();
    return (hi << 32) | next_u32();
  }

  /// Uniform in [0, 1).
  double next_double() { return u64_to_unit(next_u64()); }

  /// Standard normal via Box-Muller on consecutive 64-bit uniforms.
  double next_gaussian() {
    if (have_gauss_) {
      have_gauss_ = false;
      return spare_;
    }
    const double u1 = (static_cast<double>(next_u64() >> 11) + 1.0) * 0x1.0p-53;
    const double u2 = next_double();
    const double r = std::sqrt(-2.0 * std::log(u1));
    const double a = 2.0 * std::numbers::pi * u2;
    spare_ = r * std::sin(a);
    have_gauss_ = true;
    return r * std::cos(a);
  }

  /// +1/-1 with equal probability (one 32-bit word per draw).
  double next_sign() { return (next_u32() >> 31) ? 1.0 : -1.0; }

 private:
  std::uint64_t seed_, stream_, block_;
  PhiloxBlock cur_{};
  int word_ = 4;
  double spare_ = 0.0;
  bool have_gauss_ = false;
};

// Stream ids used by the lab; keeping them centralized makes every draw in a
// run addressable as (seed, stream, block).
enum StreamId : std::uint64_t {
  kStreamInit = 0,
  kStreamSgd = 1,
  kStreamLoss = 2,
  kStreamGrad = 3,
  kStreamKappa = 4,
  kStreamTask = 5,
  kStreamScratch = 100,
};

}  // namespace milab::rng
