#include "dynstack/relational.hpp"

#include <gtest/gtest.h>

#include <algorithm>
#include <sstream>

using namespace dynstack;

namespace {

Graph labelled(const std::string& edges, const std::string& labels) {
    std::istringstream e(edges), l(labels);
    return attach_labels(parse_edge_list(e), read_label_csv(l));
}

ClassDistribution dist(std::vector<double> p) { return ClassDistribution(std::move(p)); }

// Graph on nodes "0".."n-1" with the edges selected by `mask` over the
// upper-triangle pairs in lexicographic order; edge k has weight w(k).
Graph masked_graph(int n, unsigned mask, double (*w)(int)) {
    Graph::Builder b;
    for (int v = 0; v < n; ++v) b.intern(std::to_string(v));
    int k = 0;
    for (int i = 0; i < n; ++i)
        for (int j = i + 1; j < n; ++j, ++k)
            if (mask & (1u << k)) b.add_edge(std::to_string(i), std::to_string(j), w(k));
    return std::move(b).build();
}

double varied_weight(int k) { return 1.0 + 0.5 * (k % 3); }

} // namespace

TEST(Wvrn, HandExamples) {
    Graph::Builder b;
    b.add_edge("x", "a");
    b.add_edge("x", "b");
    const auto g = std::move(b).build();
    std::vector<ClassDistribution> s(3);
    s[*g.find("a")] = ClassDistribution::point_mass(2, 0);
    s[*g.find("b")] = ClassDistribution::point_mass(2, 1);
    const auto even = wvrn_estimate(g, *g.find("x"), s);
    EXPECT_DOUBLE_EQ(even[0], 0.5);
    EXPECT_DOUBLE_EQ(even[1], 0.5);

    Graph::Builder w;
    w.add_edge("x", "a", 3.0);
    w.add_edge("x", "b", 1.0);
    const auto h = std::move(w).build();
    std::vector<ClassDistribution> t(3);
    t[*h.find("a")] = ClassDistribution::point_mass(2, 0);
    t[*h.find("b")] = ClassDistribution::point_mass(2, 1);
    const auto skew = wvrn_estimate(h, *h.find("x"), t);
    EXPECT_DOUBLE_EQ(skew[0], 0.75);
    EXPECT_DOUBLE_EQ(skew[1], 0.25);

    std::vector<ClassDistribution> nulls(3);
    EXPECT_TRUE(wvrn_estimate(h, *h.find("x"), nulls).is_null());
}

TEST(Wvrn, ArgmaxTieGoesToLowestClass) {
    EXPECT_EQ(dist({0.5, 0.5}).argmax(), 0);
    EXPECT_EQ(dist({0.2, 0.4, 0.4}).argmax(), 1);
}

// Every graph on at most 5 nodes (all edge subsets) with every assignment of
// {null, class 0, class 1, soft (0.3, 0.7)} to the nodes, against a direct
// evaluation of the weighted average over a dense weight matrix.
TEST(Wvrn, ExhaustiveSmallGraphsMatchDirectFormula) {
    const std::vector<ClassDistribution> options{ClassDistribution::null(), ClassDistribution::point_mass(2, 0),
                                                 ClassDistribution::point_mass(2, 1), dist({0.3, 0.7})};
    std::size_t checked = 0;
    for (int n = 1; n <= 5; ++n) {
        const int pairs = n * (n - 1) / 2;
        for (unsigned mask = 0; mask < (1u << pairs); ++mask) {
            const auto g = masked_graph(n, mask, varied_weight);
            std::vector<std::vector<double>> W(n, std::vector<double>(n, 0.0));
            int k = 0;
            for (int i = 0; i < n; ++i)
                for (int j = i + 1; j < n; ++j, ++k)
                    if (mask & (1u << k)) W[i][j] = W[j][i] = varied_weight(k);

            int assignments = 1;
            for (int i = 0; i < n; ++i) assignments *= 4;
            for (int a = 0; a < assignments; ++a) {
                std::vector<ClassDistribution> state(static_cast<std::size_t>(n));
                for (int i = 0, code = a; i < n; ++i, code /= 4) state[i] = options[code % 4];
                for (int v = 0; v < n; ++v) {
                    double z = 0.0, p0 = 0.0, p1 = 0.0;
                    for (int j = 0; j < n; ++j) {
                        if (W[v][j] == 0.0 || state[j].is_null()) continue;
                        z += W[v][j];
                        p0 += W[v][j] * state[j][0];
                        p1 += W[v][j] * state[j][1];
                    }
                    const auto got = wvrn_estimate(g, static_cast<NodeId>(v), state);
                    if (z == 0.0) {
                        ASSERT_TRUE(got.is_null());
                    } else {
                        ASSERT_FALSE(got.is_null());
                        ASSERT_NEAR(got[0], p0 / z, 1e-15);
                        ASSERT_NEAR(got[1], p1 / z, 1e-15);
                    }
                    ++checked;
                }
            }
        }
    }
    EXPECT_GT(checked, 1000000u);
}

TEST(Wvrn, ConvexCombinationAndScaleInvariance) {
    Rng rng(21);
    for (int trial = 0; trial < 100; ++trial) {
        const int n = 3 + static_cast<int>(rng.below(6));
        Graph::Builder b, scaled;
        for (int v = 0; v < n; ++v) {
            b.intern(std::to_string(v));
            scaled.intern(std::to_string(v));
        }
        for (int i = 0; i < n; ++i)
            for (int j = i + 1; j < n; ++j)
                if (rng.bernoulli(0.5)) {
                    const double w = rng.uniform(0.1, 3.0);
                    b.add_edge(std::to_string(i), std::to_string(j), w);
                    scaled.add_edge(std::to_string(i), std::to_string(j), 7.5 * w);
                }
        const auto g = std::move(b).build();
        const auto gs = std::move(scaled).build();
        std::vector<ClassDistribution> state(static_cast<std::size_t>(n));
        for (auto& s : state) {
            if (rng.bernoulli(0.3)) continue;
            const double a = rng.uniform(), c = rng.uniform() * (1 - a);
            s = dist({a, c, 1 - a - c});
        }
        for (int v = 0; v < n; ++v) {
            const auto est = wvrn_estimate(g, static_cast<NodeId>(v), state);
            const auto est_scaled = wvrn_estimate(gs, static_cast<NodeId>(v), state);
            ASSERT_EQ(est.is_null(), est_scaled.is_null());
            if (est.is_null()) continue;
            for (std::size_t c = 0; c < 3; ++c) {
                double lo = 1.0, hi = 0.0;
                for (const auto& nb : g.neighbors(static_cast<NodeId>(v)))
                    if (!state[nb.node].is_null()) {
                        lo = std::min(lo, state[nb.node][c]);
                        hi = std::max(hi, state[nb.node][c]);
                    }
                EXPECT_GE(est[c], lo - 1e-12);
                EXPECT_LE(est[c], hi + 1e-12);
                EXPECT_NEAR(est[c], est_scaled[c], 1e-12);
            }
        }
    }
}

TEST(Ica, UnanimousPathAssignedInFirstSweep) {
    const auto g = labelled("t a\na b\n", "a,C0\nb,C0\nt,C1\n");
    const std::vector<NodeId> train{*g.find("a"), *g.find("b")};
    const auto r = ica_run(g, train, {1, 3});
    ASSERT_EQ(r.test, std::vector<NodeId>{*g.find("t")});
    EXPECT_EQ(r.hard[0], 0);
    EXPECT_DOUBLE_EQ(r.soft[0][0], 1.0);
    EXPECT_FALSE(r.was_null[0]);
}

TEST(Ica, IsolatedNodeStaysNullAndReportsUniform) {
    Graph::Builder b;
    b.add_edge("a", "b");
    b.intern("iso");
    std::istringstream l("a,X\nb,Y\niso,X\n");
    const auto g = attach_labels(std::move(b).build(), read_label_csv(l));
    const std::vector<NodeId> train{*g.find("a")};
    const auto r = ica_run(g, train, {10, 1});
    const auto pos = r.position(*g.find("iso"));
    ASSERT_TRUE(pos);
    EXPECT_EQ(r.hard[*pos], -1);
    EXPECT_TRUE(r.was_null[*pos]);
    EXPECT_DOUBLE_EQ(r.soft[*pos][0], 0.5);
    EXPECT_DOUBLE_EQ(r.soft[*pos][1], 0.5);
    EXPECT_EQ(r.hard[*r.position(*g.find("b"))], 0);
}

TEST(Ica, FourCycleDeterministicPerSeed) {
    // a-b-c-d-a; a and c observed with different classes; b and d inferred.
    const auto g = labelled("a b\nb c\nc d\nd a\n", "a,X\nb,X\nc,Y\nd,Y\n");
    const std::vector<NodeId> train{*g.find("a"), *g.find("c")};
    for (std::uint64_t seed = 0; seed < 10; ++seed) {
        const auto r1 = ica_run(g, train, {100, seed});
        const auto r2 = ica_run(g, train, {100, seed});
        EXPECT_EQ(r1.hard, r2.hard);
        EXPECT_EQ(r1.sweeps, r2.sweeps);
        // b and d each see one X and one Y; the tie resolves to class 0.
        EXPECT_EQ(r1.hard, (std::vector<ClassIndex>{0, 0}));
        EXPECT_DOUBLE_EQ(r1.soft[0][0], 0.5);
        EXPECT_TRUE(r1.converged);
    }
}

TEST(Ica, RandomGraphsReachFixedPointOrStopAtLimit) {
    Rng rng(4);
    for (int trial = 0; trial < 50; ++trial) {
        const int n = 8 + static_cast<int>(rng.below(20));
        Graph::Builder b;
        std::string labels;
        for (int v = 0; v < n; ++v) {
            b.intern(std::to_string(v));
            labels += std::to_string(v) + "," + (rng.bernoulli(0.5) ? "X" : "Y") + "\n";
        }
        for (int i = 0; i < n; ++i)
            for (int j = i + 1; j < n; ++j)
                if (rng.bernoulli(0.2)) b.add_edge(std::to_string(i), std::to_string(j), rng.uniform(0.5, 2.0));
        std::istringstream l(labels);
        const auto g = attach_labels(std::move(b).build(), read_label_csv(l));
        std::vector<NodeId> train;
        for (NodeId v = 0; v < g.node_count(); ++v)
            if (rng.bernoulli(0.3)) train.push_back(v);
        if (train.empty()) train.push_back(0);

        const int limit = 1 + static_cast<int>(rng.below(4));
        const auto r = ica_run(g, train, {limit, static_cast<std::uint64_t>(trial)});
        EXPECT_LE(r.sweeps, limit);
        if (!r.converged) continue;
        // At convergence every inferred label is the weighted-vote argmax of
        // its neighbours' final labels.
        std::vector<ClassIndex> hard(g.node_count(), -1);
        for (NodeId v : train) hard[v] = *g.label(v);
        for (std::size_t k = 0; k < r.test.size(); ++k) hard[r.test[k]] = r.hard[k];
        for (std::size_t k = 0; k < r.test.size(); ++k) {
            double w[2] = {0, 0};
            for (const auto& nb : g.neighbors(r.test[k]))
                if (hard[nb.node] >= 0) w[hard[nb.node]] += nb.weight;
            const ClassIndex expect = (w[0] == 0 && w[1] == 0) ? -1 : (w[1] > w[0] ? 1 : 0);
            EXPECT_EQ(r.hard[k], expect);
        }
    }
}

TEST(Ica, UnanimousNeighbourhoodsOnRandomGraphs) {
    // Every test node gets only neighbours from the training set, all of one
    // class per connected star; ICA must assign that class in one sweep.
    Rng rng(8);
    for (int trial = 0; trial < 30; ++trial) {
        Graph::Builder b;
        std::string labels;
        std::vector<std::pair<std::string, int>> expect;
        for (int hub = 0; hub < 4; ++hub) {
            const int cls = static_cast<int>(rng.below(2));
            const std::string t = "t" + std::to_string(hub);
            b.intern(t);
            labels += t + "," + (cls ? "Y" : "X") + "\n";
            expect.emplace_back(t, cls);
            const int leaves = 1 + static_cast<int>(rng.below(4));
            for (int k = 0; k < leaves; ++k) {
                const std::string leaf = "l" + std::to_string(hub) + "_" + std::to_string(k);
                b.add_edge(t, leaf, rng.uniform(0.5, 2.0));
                labels += leaf + "," + (cls ? "Y" : "X") + "\n";
            }
        }
        std::istringstream l(labels);
        const auto g = attach_labels(std::move(b).build(), read_label_csv(l));
        std::vector<NodeId> train;
        for (NodeId v = 0; v < g.node_count(); ++v)
            if (g.id(v)[0] == 'l') train.push_back(v);
        const auto r = ica_run(g, train, {1, static_cast<std::uint64_t>(trial)});
        for (const auto& [id, cls] : expect) {
            const ClassIndex got = r.hard[*r.position(*g.find(id))];
            ASSERT_GE(got, 0);
            EXPECT_EQ(g.class_names()[static_cast<std::size_t>(got)], cls ? "Y" : "X");
        }
    }
}

TEST(Ica, Errors) {
    const auto g = labelled("a b\n", "a,X\n");
    EXPECT_THROW(ica_run(g, std::vector<NodeId>{}, {}), InvalidArgument);
    EXPECT_THROW(ica_run(g, std::vector<NodeId>{*g.find("b")}, {}), InvalidArgument);
}

TEST(Ica, PredictionCsv) {
    const auto g = labelled("t a\n", "a,X\nt,Y\n");
    const auto r = ica_run(g, std::vector<NodeId>{*g.find("a")}, {});
    std::ostringstream out;
    write_ica_predictions(out, g, r);
    EXPECT_EQ(out.str(), "node_id,p_class0,p_class1,hard_label,was_null\nt,1,0,0,0\n");
}
