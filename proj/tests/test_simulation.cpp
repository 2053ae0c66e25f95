#include "dynstack/simulation.hpp"

#include <gtest/gtest.h>

#include <cmath>
#include <random>

using namespace dynstack;

TEST(Cases, SignalFunctions) {
    EXPECT_DOUBLE_EQ(case_signal(1, 1.0, 1.0, 0.3), 3.0);
    EXPECT_NEAR(sigmoid(case_signal(1, 1.0, 1.0, 0.3)), 0.9526, 5e-5);
    EXPECT_DOUBLE_EQ(case_signal(2, 1.0, 0.0, 0.5), -1.5);
    // sin(0) = 0 switches Z1 off entirely in case 3.
    EXPECT_DOUBLE_EQ(case_signal(3, 1.0, 0.5, 0.0), -1.5);
    EXPECT_NEAR(case_signal(3, 1.0, 0.0, 0.25), -3.0 + 3.0 * std::sin(1.5), 1e-15);
    EXPECT_THROW(case_signal(4, 0, 0, 0), InvalidArgument);
    EXPECT_THROW(generate_case(0, 10, 1), InvalidArgument);
}

TEST(Cases, GenerationIsDeterministicAndInRange) {
    const auto a = generate_case(3, 500, 42);
    const auto b = generate_case(3, 500, 42);
    EXPECT_EQ(a.data.Z, b.data.Z);
    EXPECT_EQ(a.data.u, b.data.u);
    EXPECT_EQ(a.data.y, b.data.y);
    EXPECT_NE(generate_case(3, 500, 43).data.y, a.data.y);
    EXPECT_GE(a.data.Z.minCoeff(), 0.0);
    EXPECT_LT(a.data.Z.maxCoeff(), 1.0);
    EXPECT_NO_THROW(a.data.validate());
}

TEST(Cases, PositiveRateMatchesIndependentMonteCarlo) {
    // Population P(y = 1) for case 2 estimated with an unrelated generator.
    std::mt19937_64 gen(2024);
    std::uniform_real_distribution<double> unif(0.0, 1.0);
    std::normal_distribution<double> noise(0.0, 1.0);
    const int N = 1000000;
    double expected = 0.0;
    for (int i = 0; i < N; ++i) {
        const double z1 = unif(gen), z2 = unif(gen), u = unif(gen);
        const double eta = -3.0 + 3.0 * u * z1 + 3.0 * z2 + noise(gen);
        expected += 1.0 / (1.0 + std::exp(-eta));
    }
    expected /= N;

    const auto d = generate_case(2, static_cast<std::size_t>(N), 5).data;
    double observed = 0.0;
    for (int v : d.y) observed += v;
    observed /= N;
    EXPECT_NEAR(observed, expected, 0.005);
}

TEST(Auc, HandExample) {
    const std::vector<double> s{0.1, 0.4, 0.35, 0.8};
    const std::vector<int> y{0, 0, 1, 1};
    EXPECT_DOUBLE_EQ(auc(s, y), 0.75);
}

TEST(Auc, PerfectTiedAndComplement) {
    const std::vector<double> s{0.1, 0.2, 0.7, 0.9};
    const std::vector<int> y{0, 0, 1, 1};
    EXPECT_DOUBLE_EQ(auc(s, y), 1.0);
    const std::vector<int> flipped{1, 1, 0, 0};
    EXPECT_DOUBLE_EQ(auc(s, flipped), 0.0);
    const std::vector<double> flat(4, 0.5);
    EXPECT_DOUBLE_EQ(auc(flat, y), 0.5);

    Rng rng(6);
    std::vector<double> r(300);
    std::vector<int> l(300), inv(300);
    for (std::size_t i = 0; i < r.size(); ++i) {
        r[i] = std::round(rng.uniform() * 20.0); // plenty of ties
        l[i] = rng.bernoulli(0.4) ? 1 : 0;
        inv[i] = 1 - l[i];
    }
    EXPECT_NEAR(auc(r, l) + auc(r, inv), 1.0, 1e-12);
}

TEST(Auc, MatchesPairCountingAndMonotoneInvariance) {
    Rng rng(10);
    for (int trial = 0; trial < 20; ++trial) {
        std::vector<double> s(80), t(80);
        std::vector<int> y(80);
        for (std::size_t i = 0; i < s.size(); ++i) {
            s[i] = std::round(rng.normal() * 4.0) / 4.0;
            y[i] = rng.bernoulli(0.5) ? 1 : 0;
            t[i] = std::exp(3.0 * s[i]) - 7.0;
        }
        y[0] = 0;
        y[1] = 1;
        double wins = 0.0, pairs = 0.0;
        for (std::size_t i = 0; i < s.size(); ++i)
            for (std::size_t j = 0; j < s.size(); ++j)
                if (y[i] == 1 && y[j] == 0) {
                    pairs += 1.0;
                    wins += s[i] > s[j] ? 1.0 : (s[i] == s[j] ? 0.5 : 0.0);
                }
        EXPECT_NEAR(auc(s, y), wins / pairs, 1e-12);
        EXPECT_NEAR(auc(t, y), auc(s, y), 1e-12);
    }
}

TEST(Auc, RandomScoresNearHalfAndErrors) {
    Rng rng(12);
    std::vector<double> s(20000);
    std::vector<int> y(20000);
    for (std::size_t i = 0; i < s.size(); ++i) {
        s[i] = rng.uniform();
        y[i] = rng.bernoulli(0.3) ? 1 : 0;
    }
    EXPECT_NEAR(auc(s, y), 0.5, 0.015);
    const std::vector<int> ones(3, 1);
    const std::vector<double> three{0.1, 0.2, 0.3};
    EXPECT_THROW(auc(three, ones), InvalidArgument);
    const std::vector<int> two{0, 1};
    EXPECT_THROW(auc(three, two), InvalidArgument);
}

TEST(Simulation, SmallRunIsDeterministicAndComplete) {
    SimConfig cfg;
    cfg.cases = {1, 3};
    cfg.methods = {SimMethod::random, SimMethod::z2_only, SimMethod::ridge1, SimMethod::dynamic};
    cfg.n = 300;
    cfg.reps = 3;
    cfg.seed = 99;
    cfg.fit.lambda_grid = log_grid(1e-2, 1e2, 5);
    cfg.fit.folds = 5;
    const auto a = run_simulation(cfg);
    cfg.threads = 3;
    const auto b = run_simulation(cfg);
    ASSERT_EQ(a.cells.size(), 8u);
    ASSERT_EQ(a.raw.size(), 24u);
    for (std::size_t k = 0; k < a.raw.size(); ++k) {
        EXPECT_EQ(a.raw[k].auc, b.raw[k].auc);
        EXPECT_TRUE(a.raw[k].error.empty()) << a.raw[k].error;
    }
    for (const auto& c : a.cells) {
        EXPECT_TRUE(c.complete);
        EXPECT_EQ(c.n_reps, 3u);
        EXPECT_GT(c.mean_auc, 0.0);
        EXPECT_LT(c.mean_auc, 1.0);
    }
    EXPECT_NO_THROW(a.cell(3, SimMethod::dynamic));
    EXPECT_THROW(a.cell(2, SimMethod::dynamic), InvalidArgument);

    std::ostringstream out;
    write_sim_report(out, a);
    EXPECT_EQ(out.str().substr(0, out.str().find('\n')), "case,method,mean_auc,sd_auc,n_reps");
}

TEST(Simulation, ConfigValidation) {
    SimConfig cfg;
    cfg.cases = {4};
    EXPECT_THROW(run_simulation(cfg), InvalidArgument);
    cfg.cases = {1};
    cfg.reps = 0;
    EXPECT_THROW(run_simulation(cfg), InvalidArgument);
    EXPECT_EQ(parse_sim_method("lasso3"), SimMethod::lasso3);
    EXPECT_THROW(parse_sim_method("lasso4"), InvalidArgument);
}
