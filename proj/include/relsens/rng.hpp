#pragma once

#include <array>
#include <cstdint>

#include "relsens/normal.hpp"

namespace relsens {

/// Philox4x32-10 counter-based generator (Salmon et al.). Each draw is a
/// pure function of (seed, sample index, coordinate), so sample streams are
/// independent of evaluation order and of the number of worker threads.
class CounterRng {
 public:
  /// Uniform deviate in the open interval (0,1).
  static double uniform01(std::uint64_t seed, std::uint64_t sample_index,
                          std::uint32_t coordinate) {
    // counter word 3 is a fixed stream tag separating this use of the
    // generator from any other counter layout over the same seed
    const auto out = block(seed, {static_cast<std::uint32_t>(sample_index),
                                  static_cast<std::uint32_t>(sample_index >> 32),
                                  coordinate, 0x52534e53u});
    const std::uint64_t bits =
        (static_cast<std::uint64_t>(out[1]) << 32) | out[0];
    // 53 significant bits, offset by half an ulp to stay strictly inside (0,1)
    return (static_cast<double>(bits >> 11) + 0.5) * 0x1p-53;
  }

  /// Standard normal deviate via inverse-CDF mapping of the uniform counter
  /// stream. Inverse mapping (not rejection) keeps the counter->draw
  /// correspondence stationary.
  static double normal(std::uint64_t seed, std::uint64_t sample_index,
                       std::uint32_t coordinate) {
    return norm_quantile(uniform01(seed, sample_index, coordinate));
  }

  static std::array<std::uint32_t, 4> block(std::uint64_t key,
                                            std::array<std::uint32_t, 4> ctr) {
    std::uint32_t k0 = static_cast<std::uint32_t>(key);
    std::uint32_t k1 = static_cast<std::uint32_t>(key >> 32);
    for (int round = 0; round < 10; ++round) {
      const std::uint64_t p0 = kMul0 * static_cast<std::uint64_t>(ctr[0]);
      const std::uint64_t p1 = kMul1 * static_cast<std::uint64_t>(ctr[2]);
      ctr = {static_cast<std::uint32_t>(p1 >> 32) ^ ctr[1] ^ k0,
             static_cast<std::uint32_t>(p1),
             static_cast<std::uint32_t>(p0 >> 32) ^ ctr[3] ^ k1,
             static_cast<std::uint32_t>(p0)};
      k0 += kWeyl0;
      k1 += kWeyl1;
    }
    return ctr;
  }

 private:
  static constexpr std::uint64_t kMul0 = 0xD2511F53ull;
  static constexpr std::uint64_t kMul1 = 0xCD9E8D57ull;
  static constexpr std::uint32_t kWeyl0 = 0x9E3779B9u;
  static constexpr std::uint32_t kWeyl1 = 0xBB67AE85u;
};

}  // namespace relsens
