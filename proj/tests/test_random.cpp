#include "dynstack/random.hpp"

#include <gtest/gtest.h>

#include <algorithm>
#include <numeric>
#include <set>
#include <vector>

using namespace dynstack;

TEST(SplitMix, MatchesReferenceOutputForZeroState) {
    // First output of the reference SplitMix64 generator started from state 0.
    EXPECT_EQ(splitmix64(0), 0xE220A8397B1DCDAFULL);
}

TEST(SplitMix, DerivedSeedsAreDistinct) {
    std::set<std::uint64_t> seen;
    for (std::uint64_t m = 0; m < 20; ++m)
        for (std::uint64_t i = 0; i < 50; ++i) seen.insert(derive_seed(m, i));
    EXPECT_EQ(seen.size(), 1000u);
}

TEST(Rng, SameSeedSameStream) {
    Rng a(42), b(42), c(43);
    bool differs = false;
    for (int i = 0; i < 100; ++i) {
        const auto x = a.next();
        EXPECT_EQ(x, b.next());
        differs |= x != c.next();
    }
    EXPECT_TRUE(differs);
}

TEST(Rng, UniformStaysInUnitInterval) {
    Rng r(1);
    double sum = 0.0;
    const int n = 200000;
    for (int i = 0; i < n; ++i) {
        const double u = r.uniform();
        ASSERT_GE(u, 0.0);
        ASSERT_LT(u, 1.0);
        sum += u;
    }
    EXPECT_NEAR(sum / n, 0.5, 0.005);
}

TEST(Rng, BelowCoversRangeEvenly) {
    Rng r(7);
    std::vector<int> counts(6, 0);
    const int n = 60000;
    for (int i = 0; i < n; ++i) {
        const auto k = r.below(6);
        ASSERT_LT(k, 6u);
        ++counts[k];
    }
    // Chi-square with 5 degrees of freedom; 20.5 is the 0.999 quantile.
    double chi2 = 0.0;
    for (int c : counts) chi2 += (c - n / 6.0) * (c - n / 6.0) / (n / 6.0);
    EXPECT_LT(chi2, 20.5);
}

TEST(Rng, NormalMoments) {
    Rng r(3);
    const int n = 200000;
    double s = 0.0, s2 = 0.0;
    for (int i = 0; i < n; ++i) {
        const double z = r.normal();
        s += z;
        s2 += z * z;
    }
    EXPECT_NEAR(s / n, 0.0, 0.01);
    EXPECT_NEAR(s2 / n, 1.0, 0.02);
}

TEST(Rng, ShuffleIsAPermutation) {
    Rng r(9);
    std::vector<int> v(50);
    std::iota(v.begin(), v.end(), 0);
    auto w = v;
    r.shuffle(std::span<int>(w));
    EXPECT_NE(v, w);
    std::sort(w.begin(), w.end());
    EXPECT_EQ(v, w);
}

TEST(Rng, ShuffleFirstPositionIsUniform) {
    std::vector<int> first(4, 0);
    for (std::uint64_t s = 0; s < 8000; ++s) {
        Rng r(s);
        std::vector<int> v{0, 1, 2, 3};
        r.shuffle(std::span<int>(v));
        ++first[static_cast<std::size_t>(v[0])];
    }
    for (int c : first) EXPECT_NEAR(c / 8000.0, 0.25, 0.025);
}
