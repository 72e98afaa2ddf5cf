#pragma once

#include <array>
#include <cstdint>
#include <limits>

namespace fec {

/// Philox4x32-10 counter-based generator (Salmon et al., SC'11).
///
/// A stream is identified by (seed, trial, setting): the seed is the key,
/// trial and setting occupy the upper half of the counter and the lower half
/// counts blocks. Distinct substreams never share a counter value, so
/// parallel workers given different (trial, setting) pairs draw independent
/// and reproducible sequences.
class Philox4x32 {
public:
  using result_type = std::uint32_t;

  explicit Philox4x32(std::uint64_t seed, std::uint32_t trial = 0,
                      std::uint32_t setting = 0)
      : key_{static_cast<std::uint32_t>(seed),
             static_cast<std::uint32_t>(seed >> 32)},
        counter_{0, 0, trial, setting} {}

  static constexpr result_type min() { return 0; }
  static constexpr result_type max() {
    return std::numeric_limits<result_type>::max();
  }

  result_type operator()() {
    if (index_ == 4) {
      block_ = generate_block(counter_, key_);
      if (++counter_[0] == 0) ++counter_[1];
      index_ = 0;
    }
    return block_[index_++];
  }

  std::uint64_t next_u64() {
    const std::uint64_t hi = (*this)();
    const std::uint64_t lo = (*this)();
    return (hi << 32) | lo;
  }

  /// Uniform double in [0, 1) with 53 random bits. Bit-identical across
  /// platforms, unlike std::uniform_real_distribution.
  double uniform() {
    return static_cast<double>(next_u64() >> 11) * 0x1.0p-53;
  }

  static std::array<std::uint32_t, 4>
  generate_block(std::array<std::uint32_t, 4> ctr,
                 std::array<std::uint32_t, 2> key) {
    constexpr std::uint32_t m0 = 0xD2511F53u, m1 = 0xCD9E8D57u;
    constexpr std::uint32_t w0 = 0x9E3779B9u, w1 = 0xBB67AE85u;
    for (int round = 0; round < 10; ++round) {
      const std::uint64_t p0 = std::uint64_t{m0} * ctr[0];
      const std::uint64_t p1 = std::uint64_t{m1} * ctr[2];
      ctr = {static_cast<std::uint32_t>(p1 >> 32) ^ ctr[1] ^ key[0],
             static_cast<std::uint32_t>(p1),
             static_cast<std::uint32_t>(p0 >> 32) ^ ctr[3] ^ key[1],
             static_cast<std::uint32_t>(p0)};
      key[0] += w0;
      key[1] += w1;
    }
    return ctr;
  }

private:
  std::array<std::uint32_t, 2> key_;
  std::array<std::uint32_t, 4> counter_;
  std::array<std::uint32_t, 4> block_{};
  int index_ = 4;
};

} // namespace fec
