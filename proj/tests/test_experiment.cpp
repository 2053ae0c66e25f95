#include "dynstack/experiment.hpp"
#include "dynstack/fixtures.hpp"

#include <gtest/gtest.h>

#include <cmath>
#include <set>
#include <sstream>

using namespace dynstack;

namespace {

GraphExperimentConfig small_config() {
    GraphExperimentConfig cfg;
    cfg.positive_prefix = planted_positive_prefix;
    cfg.reps = 3;
    cfg.seed = 17;
    cfg.level1_folds = 5;
    cfg.fit.lambda_grid = log_grid(1e-2, 1e2, 5);
    cfg.fit.folds = 5;
    cfg.bins = 10;
    return cfg;
}

LoadedCorpus small_corpus() {
    PlantedSpec spec;
    spec.nodes = 300;
    spec.seed = 4;
    return load_corpus(make_planted_corpus(spec), true);
}

std::vector<std::string> lines(const std::string& s) {
    std::vector<std::string> out;
    std::istringstream in(s);
    for (std::string l; std::getline(in, l);) out.push_back(l);
    return out;
}

} // namespace

TEST(Binarize, PrefixMapping) {
    std::istringstream e("a b\nb c\n"), l("a,/AI/x\nb,/Sys\nc,/AI/y\n");
    const auto g = attach_labels(parse_edge_list(e), read_label_csv(l));
    const auto b = binarize_labels(g, "/AI");
    EXPECT_EQ(b.class_names(), (std::vector<std::string>{"positive", "negative"}));
    EXPECT_EQ(b.label(*b.find("a")), 0);
    EXPECT_EQ(b.label(*b.find("b")), 1);
    EXPECT_EQ(b.label(*b.find("c")), 0);
    EXPECT_THROW(binarize_labels(g, "/Bio"), InvalidArgument);
    EXPECT_THROW(binarize_labels(g, "/"), InvalidArgument);
    EXPECT_THROW(binarize_labels(g, ""), InvalidArgument);
}

TEST(PlantedCorpus, DeterministicAndWellFormed) {
    PlantedSpec spec;
    spec.nodes = 200;
    const auto a = make_planted_corpus(spec);
    const auto b = make_planted_corpus(spec);
    EXPECT_EQ(a.edges, b.edges);
    EXPECT_EQ(a.features, b.features);
    const auto loaded = load_corpus(a, false);
    EXPECT_EQ(loaded.graph.node_count(), 200u);
    EXPECT_EQ(loaded.graph.class_count(), 5);
    for (NodeId v = 0; v < loaded.graph.node_count(); ++v) EXPECT_TRUE(loaded.graph.label(v));
    const auto lcc = load_corpus(a, true);
    EXPECT_LE(lcc.graph.node_count(), 200u);
    EXPECT_EQ(lcc.features.rows.size(), lcc.graph.node_count());
    EXPECT_THROW(make_planted_corpus(PlantedSpec{.nodes = 5}), InvalidArgument);
}

TEST(GraphExperiment, SmallRunIsConsistent) {
    const auto corpus = small_corpus();
    const auto cfg = small_config();
    const auto r = run_graph_experiment(corpus.graph, corpus.features, cfg);
    ASSERT_EQ(r.reps.size(), 3u);
    const std::size_t methods = graph_methods().size();
    for (const auto& rep : r.reps) {
        ASSERT_EQ(rep.accuracy.size(), methods);
        ASSERT_EQ(rep.correct.size(), methods);
        const std::set<NodeId> unique(rep.test.begin(), rep.test.end());
        EXPECT_EQ(unique.size(), rep.test.size());
        EXPECT_NEAR(static_cast<double>(rep.test.size()), 0.8 * static_cast<double>(r.graph.node_count()), 1.0);
        for (std::size_t m = 0; m < methods; ++m) {
            if (rep.correct[m].empty()) {
                EXPECT_TRUE(std::isnan(rep.accuracy[m]));
                continue;
            }
            double hits = 0;
            for (char c : rep.correct[m]) hits += c;
            EXPECT_NEAR(rep.accuracy[m], hits / static_cast<double>(rep.test.size()), 1e-15);
        }
        EXPECT_GE(rep.lambda, 0.0);
        EXPECT_EQ(rep.model.p, 2u);
    }
    // Dynamic, local and relational never fail.
    for (const char* m : {"dynamic", "local", "relational"})
        EXPECT_EQ(method_accuracies(r, method_index(m)).size(), 3u);
    EXPECT_EQ(r.first_ica.test, r.reps[0].test);

    // Pooled bins count every fitted test prediction once.
    const auto pooled = pooled_binned_accuracy(r, method_index("dynamic"), default_bin_spec(r, 10));
    EXPECT_EQ(pooled.total(), 3 * r.reps[0].test.size());
}

TEST(GraphExperiment, ThreadCountDoesNotChangeResults) {
    const auto corpus = small_corpus();
    auto cfg = small_config();
    cfg.reps = 2;
    const auto a = run_graph_experiment(corpus.graph, corpus.features, cfg);
    cfg.threads = 2;
    const auto b = run_graph_experiment(corpus.graph, corpus.features, cfg);
    std::ostringstream sa, sb;
    write_per_rep(sa, a);
    write_per_rep(sb, b);
    EXPECT_EQ(sa.str(), sb.str());
}

TEST(GraphExperiment, WriterFormats) {
    const auto corpus = small_corpus();
    const auto r = run_graph_experiment(corpus.graph, corpus.features, small_config());
    const std::size_t methods = graph_methods().size();

    std::ostringstream acc, cmp, delta, curves, per_rep;
    write_accuracy_table(acc, r);
    write_comparisons(cmp, r);
    write_binned_deltas(delta, r, BinSpec::equal_width(10));
    write_curves(curves, r.reps[0].model, 7);
    write_per_rep(per_rep, r);

    const auto a = lines(acc.str());
    EXPECT_EQ(a.front(), "method,mean_accuracy,sd_accuracy,n_reps");
    EXPECT_EQ(a.size(), 1 + methods);
    EXPECT_EQ(a[1].rfind("dynamic,", 0), 0u);

    const auto c = lines(cmp.str());
    EXPECT_EQ(c.front(), "method_a,method_b,mean_diff,p_value");
    EXPECT_EQ(c.size(), methods);

    const auto d = lines(delta.str());
    EXPECT_EQ(d.front(), "bin_lo,bin_hi,method_b,mean_correct_diff,ci95_half_width");
    EXPECT_EQ((d.size() - 1) % 10, 0u);

    const auto cu = lines(curves.str());
    EXPECT_EQ(cu.front(), "u,beta_local:positive,beta_relational:positive");
    EXPECT_EQ(cu.size(), 8u);

    EXPECT_EQ(lines(per_rep.str()).size(), 1 + 3 * methods);
}

TEST(GraphExperiment, InputValidation) {
    const auto corpus = small_corpus();
    auto cfg = small_config();
    cfg.reps = 0;
    EXPECT_THROW(run_graph_experiment(corpus.graph, corpus.features, cfg), InvalidArgument);

    cfg = small_config();
    SparseFeatures short_features = corpus.features;
    short_features.rows.pop_back();
    EXPECT_THROW(run_graph_experiment(corpus.graph, short_features, cfg), InvalidArgument);

    // Closeness on a disconnected graph points at the component restriction.
    PlantedSpec spec;
    spec.nodes = 300;
    spec.seed = 4;
    const auto whole = load_corpus(make_planted_corpus(spec), false);
    Graph::Builder b;
    for (NodeId v = 0; v < whole.graph.node_count(); ++v) b.intern(whole.graph.id(v));
    for (NodeId v = 0; v < whole.graph.node_count(); ++v)
        for (const auto& nb : whole.graph.neighbors(v))
            if (nb.node > v) b.add_edge(whole.graph.id(v), whole.graph.id(nb.node), nb.weight);
    b.intern("island");
    std::vector<std::optional<ClassIndex>> labels = whole.graph.labels();
    labels.push_back(ClassIndex{0});
    const auto disconnected = std::move(b).build().with_labels(labels, whole.graph.class_names());
    SparseFeatures f = whole.features;
    f.rows.emplace_back();
    try {
        run_graph_experiment(disconnected, f, cfg);
        FAIL() << "expected an error";
    } catch (const InvalidArgument& e) {
        EXPECT_NE(std::string(e.what()).find("largest connected component"), std::string::npos);
    }
}
