#include "dynstack/metrics.hpp"
#include "dynstack/random.hpp"

#include <gtest/gtest.h>

#include <cmath>
#include <numbers>
#include <sstream>

using namespace dynstack;

TEST(Accuracy, HandExamples) {
    const std::vector<double> p{0.9, 0.2, 0.6};
    const std::vector<int> y{1, 0, 0};
    EXPECT_DOUBLE_EQ(accuracy(p, y), 2.0 / 3.0);

    // 0.5 is not above the threshold, so every row predicts 0.
    const std::vector<double> half(4, 0.5);
    const std::vector<int> ones(4, 1);
    EXPECT_DOUBLE_EQ(accuracy(half, ones), 0.0);

    EXPECT_THROW(accuracy(std::vector<double>{}, std::vector<int>{}), InvalidArgument);
    EXPECT_THROW(accuracy(p, ones), InvalidArgument);
    EXPECT_DOUBLE_EQ(accuracy_of_labels(std::vector<int>{1, 0}, std::vector<int>{1, 1}), 0.5);
}

TEST(Bins, SingleBinHoldsEverything) {
    const std::vector<double> u{0.1, 5.0, 3.0};
    const std::vector<int> pred{1, 0, 1}, y{1, 1, 1};
    const auto b = binned_accuracy(pred, y, u, BinSpec::equal_width(1));
    ASSERT_EQ(b.bins().size(), 1u);
    EXPECT_EQ(b.bins()[0].count, 3u);
    EXPECT_DOUBLE_EQ(*b.bins()[0].accuracy(), 2.0 / 3.0);
}

TEST(Bins, IntegerBinsForDegree) {
    const std::vector<double> deg{1, 2, 2, 1, 2};
    const std::vector<int> pred{1, 1, 0, 0, 1}, y{1, 1, 1, 1, 1};
    const auto b = binned_accuracy(pred, y, deg, BinSpec::integer());
    ASSERT_EQ(b.bins().size(), 2u);
    EXPECT_EQ(b.bins()[0].lo, 1.0);
    EXPECT_EQ(b.bins()[0].count, 2u);
    EXPECT_EQ(b.bins()[1].count, 3u);
    EXPECT_DOUBLE_EQ(*b.bins()[0].accuracy(), 0.5);
    EXPECT_DOUBLE_EQ(*b.bins()[1].accuracy(), 2.0 / 3.0);
}

TEST(Bins, EdgesBelongToTheRightBinExceptTheLast) {
    auto b = make_bins(BinSpec::equal_width(4, 0.0, 4.0), {});
    b.add(1.0, true);
    b.add(4.0, true);
    b.add(-3.0, false);
    b.add(9.0, false);
    EXPECT_EQ(b.bins()[0].count, 1u);
    EXPECT_EQ(b.bins()[1].count, 1u);
    EXPECT_EQ(b.bins()[3].count, 2u);
    EXPECT_FALSE(b.bins()[2].accuracy());
}

TEST(Bins, WeightedMeanRecoversOverallAccuracy) {
    Rng rng(14);
    std::vector<double> u(500), p(500);
    std::vector<int> y(500);
    for (std::size_t i = 0; i < u.size(); ++i) {
        u[i] = rng.normal();
        p[i] = rng.uniform();
        y[i] = rng.bernoulli(0.5) ? 1 : 0;
    }
    const auto b = binned_accuracy(p, y, u, BinSpec::equal_width(13));
    EXPECT_EQ(b.total(), 500u);
    double weighted = 0.0;
    for (const auto& bin : b.bins())
        if (auto a = bin.accuracy()) weighted += *a * static_cast<double>(bin.count);
    EXPECT_NEAR(weighted / 500.0, accuracy(p, y), 1e-12);
}

TEST(Bins, CsvAndErrors) {
    const std::vector<double> u{0.0, 1.0};
    const std::vector<int> pred{1, 0}, y{1, 1};
    std::ostringstream out;
    write_binned_csv(out, binned_accuracy(pred, y, u, BinSpec::equal_width(2)));
    EXPECT_EQ(out.str(), "bin_lo,bin_hi,count,accuracy\n0,0.5,1,1\n0.5,1,1,0\n");
    EXPECT_THROW(binned_accuracy(pred, y, u, BinSpec::equal_width(0)), InvalidArgument);
    const std::vector<double> bad{0.0, NAN};
    EXPECT_THROW(binned_accuracy(pred, y, bad, BinSpec::equal_width(2)), InvalidArgument);
}

TEST(Paired, IdenticalAndConstantShift) {
    const std::vector<double> a{0.8, 0.7, 0.9, 0.75};
    const auto same = paired_comparison(a, a);
    EXPECT_TRUE(same.zero_variance);
    EXPECT_EQ(same.mean_diff, 0.0);
    EXPECT_EQ(same.p_value, 0.5);

    std::vector<double> b = a;
    for (double& v : b) v -= 0.01;
    const auto shift = paired_comparison(a, b);
    EXPECT_TRUE(shift.zero_variance);
    EXPECT_NEAR(shift.mean_diff, 0.01, 1e-12);
    EXPECT_EQ(shift.p_value, 0.0);
    EXPECT_EQ(paired_comparison(b, a).p_value, 1.0);
}

TEST(Paired, HandComputedStatistic) {
    // Differences (0.01, -0.01, 0.02, 0.00): mean 0.005, sample sd sqrt(0.0005 / 3).
    const std::vector<double> a{0.51, 0.49, 0.52, 0.50}, b{0.50, 0.50, 0.50, 0.50};
    const auto r = paired_comparison(a, b);
    EXPECT_NEAR(r.mean_diff, 0.005, 1e-12);
    const double t = 0.005 / (std::sqrt(0.0005 / 3.0) / 2.0);
    EXPECT_NEAR(r.t_statistic, t, 1e-9);
    // Closed-form t CDF for 3 degrees of freedom.
    const double x = t / std::sqrt(3.0);
    const double cdf = 0.5 + (x / (1 + x * x) + std::atan(x)) / std::numbers::pi;
    EXPECT_NEAR(r.p_value, 1.0 - cdf, 1e-10);

    const auto flipped = paired_comparison(b, a);
    EXPECT_NEAR(flipped.t_statistic, -r.t_statistic, 1e-12);
    EXPECT_NEAR(flipped.p_value, 1.0 - r.p_value, 1e-12);
}

TEST(Paired, Errors) {
    EXPECT_THROW(paired_comparison(std::vector<double>{1.0}, std::vector<double>{1.0}), InvalidArgument);
    EXPECT_THROW(paired_comparison(std::vector<double>{1.0, 2.0}, std::vector<double>{1.0}), InvalidArgument);
}
