#pragma once

// Synthetic labelled graphs with text, for testing the graph pipeline when no
// real corpus is at hand. Each node has a latent activity a in [0, 1] that
// sets how many edges it initiates and how often it is picked as a target,
// so degree grows with a. Nodes fall into three regimes by activity:
//   quiet (a < quiet_cutoff): links carry no class signal, documents are long;
//   busy  (a > busy_cutoff):  links are strongly within-class, documents short;
//   bulk: in between, both sources are moderately useful.
// The local/relational balance thus shifts at the covariate extremes.

#include "dynstack/graph.hpp"
#include "dynstack/naive_bayes.hpp"
#include "dynstack/random.hpp"

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <sstream>
#include <string>
#include <vector>

namespace dynstack {

struct PlantedSpec {
    std::size_t nodes = 1000;
    std::uint64_t seed = 1;
    int max_out_edges = 12;  ///< edges initiated by the most active node
    double quiet_cutoff = 0.15;
    double busy_cutoff = 0.85;
    /// Probability that an edge is forced within-class; an edge takes the
    /// smaller value of its two endpoints.
    double quiet_homophily = 0.0;
    double bulk_homophily = 0.5;
    double busy_homophily = 0.95;
    int quiet_words = 40;
    int bulk_words = 12;
    int busy_words = 3;
    double informative_share = 0.15; ///< fraction of words drawn from the class vocabulary
    std::size_t class_terms = 40;
    std::size_t shared_terms = 200;
};

/// Topic labels; the first two share the "/AI" prefix.
inline const std::vector<std::string>& planted_topics() {
    static const std::vector<std::string> t{"/AI/Learning", "/AI/Planning", "/Systems/Networks", "/Systems/OS", "/Theory"};
    return t;
}
inline constexpr const char* planted_positive_prefix = "/AI";

/// Corpus as file contents in the ingestion formats.
struct PlantedCorpus {
    std::string edges;    ///< `id1 id2` lines
    std::string labels;   ///< `node_id,label` with header
    std::string features; ///< `node_id term:count ...`
};

inline PlantedCorpus make_planted_corpus(const PlantedSpec& spec) {
    if (spec.nodes < 10) throw InvalidArgument("planted corpus needs at least 10 nodes");
    Rng rng(spec.seed);
    const std::size_t n = spec.nodes;
    const auto& topics = planted_topics();

    std::vector<double> activity(n);
    std::vector<std::size_t> topic(n);
    std::vector<int> positive(n);
    std::vector<int> out_edges(n);
    for (std::size_t i = 0; i < n; ++i) {
        activity[i] = rng.uniform();
        topic[i] = rng.below(topics.size());
        positive[i] = topic[i] < 2 ? 1 : 0;
        out_edges[i] = 1 + static_cast<int>(std::floor(activity[i] * activity[i] * spec.max_out_edges));
    }

    // Targets drawn proportionally to out_edges through a cumulative table.
    std::vector<double> cumulative(n);
    double total = 0.0;
    for (std::size_t i = 0; i < n; ++i) cumulative[i] = total += out_edges[i];
    auto draw_target = [&] {
        const double x = rng.uniform() * total;
        const auto it = std::upper_bound(cumulative.begin(), cumulative.end(), x);
        return static_cast<std::size_t>(std::min<std::ptrdiff_t>(it - cumulative.begin(), static_cast<std::ptrdiff_t>(n) - 1));
    };
    auto node_id = [](std::size_t i) { return "n" + std::to_string(i); };
    auto regime = [&](double a, auto quiet, auto bulk, auto busy) {
        return a < spec.quiet_cutoff ? quiet : a > spec.busy_cutoff ? busy : bulk;
    };
    auto homophily = [&](double a) { return regime(a, spec.quiet_homophily, spec.bulk_homophily, spec.busy_homophily); };

    std::ostringstream edges;
    for (std::size_t i = 0; i < n; ++i) {
        for (int e = 0; e < out_edges[i]; ++e) {
            for (;;) {
                const std::size_t j = draw_target();
                if (j == i) continue;
                const double h = std::min(homophily(activity[i]), homophily(activity[j]));
                if (rng.bernoulli(h) && positive[i] != positive[j]) continue;
                edges << node_id(i) << ' ' << node_id(j) << '\n';
                break;
            }
        }
    }

    std::ostringstream labels;
    labels << "node_id,label\n";
    for (std::size_t i = 0; i < n; ++i) labels << node_id(i) << ',' << topics[topic[i]] << '\n';

    std::ostringstream features;
    for (std::size_t i = 0; i < n; ++i) {
        const int words = regime(activity[i], spec.quiet_words, spec.bulk_words, spec.busy_words);
        std::vector<std::string> bag;
        for (int w = 0; w < words; ++w) {
            if (rng.bernoulli(spec.informative_share))
                bag.push_back((positive[i] ? "p" : "q") + std::to_string(rng.below(spec.class_terms)));
            else
                bag.push_back("s" + std::to_string(rng.below(spec.shared_terms)));
        }
        features << node_id(i);
        for (const auto& b : bag) features << ' ' << b;
        features << '\n';
    }
    return {edges.str(), labels.str(), features.str()};
}

struct LoadedCorpus {
    Graph graph;
    SparseFeatures features;
};

/// Parses corpus text; optionally restricts to the largest connected
/// component before aligning features.
inline LoadedCorpus load_corpus(std::istream& edges, std::istream& labels, std::istream& features, bool largest_component) {
    auto graph = parse_edge_list(edges);
    const auto rows = read_label_csv(labels);
    graph = attach_labels(graph, rows);
    if (largest_component) graph = largest_connected_component(graph);
    auto f = read_feature_file(features, graph);
    return {std::move(graph), std::move(f)};
}

inline LoadedCorpus load_corpus(const PlantedCorpus& corpus, bool largest_component) {
    std::istringstream e(corpus.edges), l(corpus.labels), f(corpus.features);
    return load_corpus(e, l, f, largest_component);
}

} // namespace dynstack
