#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <numeric>
#include <set>

#include "pmlab/rng.hpp"

using namespace pmlab;

// Known-answer vectors from the Random123 distribution (kat_vectors, philox4x32_10).
TEST(Philox, KnownAnswerZero) {
    const auto out = philox4x32({0, 0, 0, 0}, {0, 0});
    EXPECT_EQ(out[0], 0x6627e8d5u);
    EXPECT_EQ(out[1], 0xe169c58du);
    EXPECT_EQ(out[2], 0xbc57ac4cu);
    EXPECT_EQ(out[3], 0x9b00dbd8u);
}

TEST(Philox, KnownAnswerOnes) {
    const auto out = philox4x32({0xffffffff, 0xffffffff, 0xffffffff, 0xffffffff}, {0xffffffff, 0xffffffff});
    EXPECT_EQ(out[0], 0x408f276du);
    EXPECT_EQ(out[1], 0x41c83b0eu);
    EXPECT_EQ(out[2], 0xa20bc7c6u);
    EXPECT_EQ(out[3], 0x6d5451fdu);
}

TEST(Philox, KnownAnswerPi) {
    const auto out = philox4x32({0x243f6a88, 0x85a308d3, 0x13198a2e, 0x03707344}, {0xa4093822, 0x299f31d0});
    EXPECT_EQ(out[0], 0xd16cfe09u);
    EXPECT_EQ(out[1], 0x94fdccebu);
    EXPECT_EQ(out[2], 0x5001e420u);
    EXPECT_EQ(out[3], 0x24126ea1u);
}

TEST(Streams, SameKeyAndStreamReplay) {
    RandomStream a(42, StreamId::Signals), b(42, StreamId::Signals);
    for (int i = 0; i < 1000; ++i) ASSERT_EQ(a.next_u64(), b.next_u64());
}

TEST(Streams, SubStreamsAreIndependent) {
    RandomStream a(42, StreamId::Signals), b(42, StreamId::Shuffle);
    int equal = 0;
    for (int i = 0; i < 1000; ++i) equal += a.next_u32() == b.next_u32();
    EXPECT_LT(equal, 3);
}

TEST(Streams, DerivedKeysDiffer) {
    std::set<std::uint64_t> keys;
    for (std::uint64_t i = 0; i < 1000; ++i) keys.insert(derive_key(1, i));
    for (std::uint64_t s = 0; s < 1000; ++s) keys.insert(derive_key(s + 2, 0));
    EXPECT_EQ(keys.size(), 2000u);
}

TEST(Distributions, UniformMoments) {
    RandomStream r(9, 1u);
    double sum = 0, sq = 0;
    const int n = 200'000;
    for (int i = 0; i < n; ++i) {
        const double u = r.uniform();
        ASSERT_GE(u, 0.0);
        ASSERT_LT(u, 1.0);
        sum += u;
        sq += u * u;
    }
    EXPECT_NEAR(sum / n, 0.5, 0.003);
    EXPECT_NEAR(sq / n - (sum / n) * (sum / n), 1.0 / 12.0, 0.002);
}

TEST(Distributions, BelowIsUnbiased) {
    RandomStream r(3, 1u);
    std::array<int, 7> counts{};
    const int n = 70'000;
    for (int i = 0; i < n; ++i) ++counts[r.below(7)];
    for (int c : counts) EXPECT_NEAR(c, n / 7.0, 5 * std::sqrt(n / 7.0));
}

TEST(Distributions, NormalMoments) {
    RandomStream r(11, 3u);
    double sum = 0, sq = 0;
    const int n = 200'000;
    for (int i = 0; i < n; ++i) {
        const double z = r.normal();
        sum += z;
        sq += z * z;
    }
    EXPECT_NEAR(sum / n, 0.0, 0.01);
    EXPECT_NEAR(sq / n, 1.0, 0.015);
}

TEST(Distributions, BinomialEdgesAndMean) {
    RandomStream r(5, 1u);
    EXPECT_EQ(r.binomial(200, 0.0), 0);
    EXPECT_EQ(r.binomial(200, 1.0), 200);
    double sum = 0;
    for (int i = 0; i < 5000; ++i) sum += r.binomial(200, 0.05);
    EXPECT_NEAR(sum / 5000, 10.0, 3 * std::sqrt(200 * 0.05 * 0.95 / 5000));
}

TEST(Permutation, IsAPermutationAndCoversOrders) {
    RandomStream r(17, StreamId::Shuffle);
    std::set<std::vector<int>> seen;
    for (int i = 0; i < 2000; ++i) {
        std::vector<int> p = random_permutation(r, 4);
        std::vector<int> sorted = p;
        std::sort(sorted.begin(), sorted.end());
        ASSERT_EQ(sorted, (std::vector<int>{0, 1, 2, 3}));
        seen.insert(p);
    }
    EXPECT_EQ(seen.size(), 24u);
}
