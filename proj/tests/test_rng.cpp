#include <catch2/catch.hpp>

#include <cmath>

#include "relsens/rng.hpp"

using relsens::CounterRng;

TEST_CASE("philox4x32-10 known-answer vectors") {
  // reference vectors from the Random123 distribution (kat_vectors)
  {
    const auto out = CounterRng::block(0x0ull, {0u, 0u, 0u, 0u});
    REQUIRE(out[0] == 0x6627e8d5u);
    REQUIRE(out[1] == 0xe169c58du);
    REQUIRE(out[2] == 0xbc57ac4cu);
    REQUIRE(out[3] == 0x9b00dbd8u);
  }
  {
    const auto out = CounterRng::block(
        0xffffffffffffffffull, {0xffffffffu, 0xffffffffu, 0xffffffffu, 0xffffffffu});
    REQUIRE(out[0] == 0x408f276du);
    REQUIRE(out[1] == 0x41c83b0eu);
    REQUIRE(out[2] == 0xa20bc7c6u);
    REQUIRE(out[3] == 0x6d5451fdu);
  }
  {
    // key words (a4093822, 299f31d0) pack little-endian into the 64-bit seed
    const auto out = CounterRng::block(
        0x299f31d0a4093822ull, {0x243f6a88u, 0x85a308d3u, 0x13198a2eu, 0x03707344u});
    REQUIRE(out[0] == 0xd16cfe09u);
    REQUIRE(out[1] == 0x94fdccebu);
    REQUIRE(out[2] == 0x5001e420u);
    REQUIRE(out[3] == 0x24126ea1u);
  }
}

TEST_CASE("uniform counter stream is strictly inside (0,1) with sane moments") {
  const std::size_t n = 200000;
  double sum = 0.0, sum_sq = 0.0, min_v = 1.0, max_v = 0.0;
  for (std::size_t s = 0; s < n; ++s) {
    const double u = CounterRng::uniform01(123, s, 0);
    REQUIRE(u > 0.0);
    REQUIRE(u < 1.0);
    sum += u;
    sum_sq += u * u;
    min_v = std::min(min_v, u);
    max_v = std::max(max_v, u);
  }
  const double mean = sum / n;
  const double var = sum_sq / n - mean * mean;
  REQUIRE(mean == Approx(0.5).margin(0.002));          // se ~ 0.00065
  REQUIRE(var == Approx(1.0 / 12.0).margin(0.001));
  REQUIRE(min_v < 0.001);
  REQUIRE(max_v > 0.999);
}

TEST_CASE("normal draws have standard moments and no cross-coordinate leakage") {
  const std::size_t n = 100000;
  double m1 = 0.0, m2 = 0.0, cross = 0.0, lag = 0.0;
  double prev = 0.0;
  for (std::size_t s = 0; s < n; ++s) {
    const double a = CounterRng::normal(7, s, 0);
    const double b = CounterRng::normal(7, s, 1);
    m1 += a;
    m2 += a * a;
    cross += a * b;
    if (s > 0) lag += a * prev;
    prev = a;
  }
  REQUIRE(m1 / n == Approx(0.0).margin(0.01));
  REQUIRE(m2 / n == Approx(1.0).margin(0.02));
  REQUIRE(cross / n == Approx(0.0).margin(0.01));  // coordinate independence
  REQUIRE(lag / n == Approx(0.0).margin(0.01));    // serial independence
}

TEST_CASE("streams with different seeds decorrelate") {
  const std::size_t n = 50000;
  double cross = 0.0;
  for (std::size_t s = 0; s < n; ++s) {
    cross += CounterRng::normal(1, s, 0) * CounterRng::normal(2, s, 0);
  }
  REQUIRE(cross / n == Approx(0.0).margin(0.02));
}
