#include <gtest/gtest.h>

#include <cmath>
#include <set>
#include <vector>

#include "rwlab/rng.hpp"

using namespace rwlab;

// Known-answer vectors from the Random123 distribution.
TEST(Philox, KnownAnswers) {
  EXPECT_EQ(philox4x32_10({0, 0, 0, 0}, {0, 0}),
            (PhiloxBlock{0x6627e8d5u, 0xe169c58du, 0xbc57ac4cu, 0x9b00dbd8u}));
  EXPECT_EQ(philox4x32_10({0xffffffffu, 0xffffffffu, 0xffffffffu, 0xffffffffu}, {0xffffffffu, 0xffffffffu}),
            (PhiloxBlock{0x408f276du, 0x41c83b0eu, 0xa20bc7c6u, 0x6d5451fdu}));
  EXPECT_EQ(philox4x32_10({0x243f6a88u, 0x85a308d3u, 0x13198a2eu, 0x03707344u}, {0xa4093822u, 0x299f31d0u}),
            (PhiloxBlock{0xd16cfe09u, 0x94fdccebu, 0x5001e420u, 0x24126ea1u}));
}

TEST(CounterStream, RandomAccessIsPure) {
  const CounterStream a(42, 7);
  const CounterStream b(42, 7);
  std::vector<PhiloxBlock> backwards(100);
  for (std::uint64_t i = 100; i-- > 0;) backwards[i] = b.block(i);
  for (std::uint64_t i = 0; i < 100; ++i) EXPECT_EQ(a.block(i), backwards[i]);
  EXPECT_NE(CounterStream(42, 7).bits64(3), CounterStream(42, 8).bits64(3));
  EXPECT_NE(CounterStream(42, 7).bits64(3), CounterStream(43, 7).bits64(3));
}

TEST(CounterStream, UniformMoments) {
  const CounterStream s(2024, 0);
  const int n = 200000;
  double sum = 0.0, sq = 0.0;
  for (int i = 0; i < n; ++i) {
    for (int slot = 0; slot < 2; ++slot) {
      const double u = s.uniform(i, slot);
      ASSERT_GE(u, 0.0);
      ASSERT_LT(u, 1.0);
      sum += u;
      sq += u * u;
    }
  }
  const double m = sum / (2.0 * n);
  const double v = sq / (2.0 * n) - m * m;
  EXPECT_NEAR(m, 0.5, 5.0 * std::sqrt(1.0 / 12.0 / (2.0 * n)));
  EXPECT_NEAR(v, 1.0 / 12.0, 1e-3);
}

TEST(DeriveSeed, DistinctChildren) {
  std::set<std::uint64_t> seen;
  for (std::uint64_t a = 0; a < 1000; ++a)
    for (std::uint64_t b = 0; b < 4; ++b) seen.insert(derive_seed(1, a, b));
  EXPECT_EQ(seen.size(), 4000u);
}
