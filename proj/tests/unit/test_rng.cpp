#include <gtest/gtest.h>

#include <array>
#include <cstdint>
#include <set>

#include "palm/rng.hpp"

using namespace palm;

using Block = std::array<std::uint32_t, 4>;

// Known-answer vectors published with the Random123 reference implementation.
TEST(Philox, KnownAnswerZero) {
  EXPECT_EQ(philox4x32_10({0, 0, 0, 0}, {0, 0}),
            (Block{0x6627e8d5u, 0xe169c58du, 0xbc57ac4cu, 0x9b00dbd8u}));
}

TEST(Philox, KnownAnswerAllOnes) {
  EXPECT_EQ(philox4x32_10({0xffffffffu, 0xffffffffu, 0xffffffffu, 0xffffffffu},
                          {0xffffffffu, 0xffffffffu}),
            (Block{0x408f276du, 0x41c83b0eu, 0xa20bc7c6u, 0x6d5451fdu}));
}

TEST(Philox, KnownAnswerPiDigits) {
  EXPECT_EQ(philox4x32_10({0x243f6a88u, 0x85a308d3u, 0x13198a2eu, 0x03707344u},
                          {0xa4093822u, 0x299f31d0u}),
            (Block{0xd16cfe09u, 0x94fdccebu, 0x5001e420u, 0x24126ea1u}));
}

TEST(Rng, SameSeedSameStream) {
  Rng a(Seeded{42}), b(Seeded{42});
  for (int i = 0; i < 100; ++i) EXPECT_EQ(a.next_u64(), b.next_u64());
  EXPECT_EQ(Rng(Seeded{42}).normal_vector(50), Rng(Seeded{42}).normal_vector(50));
}

TEST(Rng, SeedsAndStreamsDiffer) {
  std::set<std::uint64_t> first;
  for (std::uint64_t s = 0; s < 50; ++s) first.insert(Rng(Seeded{s}).next_u64());
  first.insert(Rng(Seeded{0}, 1).next_u64());
  first.insert(Rng(Seeded{1ull << 40}).next_u64());
  EXPECT_EQ(first.size(), 52u);
}

TEST(Rng, UniformAndIndexRanges) {
  Rng rng(Seeded{7});
  for (int i = 0; i < 10000; ++i) {
    const double u = rng.uniform();
    EXPECT_GE(u, 0.0);
    EXPECT_LT(u, 1.0);
    const double v = rng.uniform(-3.0, 2.0);
    EXPECT_GE(v, -3.0);
    EXPECT_LT(v, 2.0);
    const Index k = rng.index(7);
    EXPECT_GE(k, 0);
    EXPECT_LT(k, 7);
  }
}

TEST(Rng, NormalMoments) {
  Rng rng(Seeded{8});
  constexpr int N = 200000;
  double s = 0.0, s2 = 0.0, s4 = 0.0;
  for (int i = 0; i < N; ++i) {
    const double z = rng.normal();
    s += z;
    s2 += z * z;
    s4 += z * z * z * z;
  }
  EXPECT_NEAR(s / N, 0.0, 0.01);
  EXPECT_NEAR(s2 / N, 1.0, 0.015);
  EXPECT_NEAR(s4 / N, 3.0, 0.1);
  const Vec v = Rng(Seeded{9}).normal_vector(N, 4.0);
  EXPECT_NEAR(v.squaredNorm() / N, 4.0, 0.06);
}
