#pragma once

#include "dynstack/error.hpp"
#include "dynstack/graph.hpp"
#include "dynstack/random.hpp"

#include <algorithm>
#include <cstdint>
#include <numeric>
#include <optional>
#include <ostream>
#include <span>
#include <utility>
#include <vector>

namespace dynstack {

/// Probability vector over C classes, or the in-band "null" (no estimate).
class ClassDistribution {
public:
    ClassDistribution() = default;

    explicit ClassDistribution(std::vector<double> probs) : probs_(std::move(probs)) {}

    static ClassDistribution null() { return {}; }

    static ClassDistribution point_mass(int class_count, ClassIndex c) {
        std::vector<double> p(static_cast<std::size_t>(class_count), 0.0);
        p.at(static_cast<std::size_t>(c)) = 1.0;
        return ClassDistribution(std::move(p));
    }

    static ClassDistribution uniform(int class_count) {
        return ClassDistribution(std::vector<double>(static_cast<std::size_t>(class_count), 1.0 / class_count));
    }

    bool is_null() const noexcept { return probs_.empty(); }
    std::size_t size() const noexcept { return probs_.size(); }
    std::span<const double> probs() const noexcept { return probs_; }
    double operator[](std::size_t c) const { return probs_[c]; }

    /// Most probable class; ties go to the lowest index.
    ClassIndex argmax() const {
        if (is_null()) throw InvalidArgument("argmax of a null distribution");
        return static_cast<ClassIndex>(std::max_element(probs_.begin(), probs_.end()) - probs_.begin());
    }

private:
    std::vector<double> probs_;
};

/// Weighted-vote relational neighbour estimate for `node`: the edge-weighted
/// mean of the non-null neighbour distributions in `state`. Null when no
/// neighbour carries an estimate (or all such edges have zero weight).
inline ClassDistribution wvrn_estimate(const Graph& graph, NodeId node, std::span<const ClassDistribution> state) {
    std::vector<double> acc;
    double z = 0.0;
    for (const Neighbor& n : graph.neighbors(node)) {
        const ClassDistribution& d = state[n.node];
        if (d.is_null()) continue;
        if (acc.empty()) acc.assign(d.size(), 0.0);
        for (std::size_t c = 0; c < d.size(); ++c) acc[c] += n.weight * d[c];
        z += n.weight;
    }
    if (acc.empty() || !(z > 0.0)) return ClassDistribution::null();
    for (double& a : acc) a /= z;
    return ClassDistribution(std::move(acc));
}

struct IcaConfig {
    int max_iterations = 100;
    std::uint64_t order_seed = 0;
};

struct IcaResult {
    std::vector<NodeId> test;              ///< nodes inferred, ascending
    std::vector<ClassDistribution> soft;   ///< final wvRN pass, aligned with `test`
    std::vector<ClassIndex> hard;          ///< terminal ICA label, -1 if still null
    std::vector<bool> was_null;            ///< soft entry is a uniform stand-in
    int sweeps = 0;
    bool converged = false;

    /// Index into the aligned vectors for node `v`, if `v` was inferred.
    std::optional<std::size_t> position(NodeId v) const {
        auto it = std::lower_bound(test.begin(), test.end(), v);
        if (it == test.end() || *it != v) return std::nullopt;
        return static_cast<std::size_t>(it - test.begin());
    }
};

namespace detail {

// wvRN over a state in which every node is either null (-1) or a point mass.
inline ClassIndex vote(const Graph& graph, NodeId node, std::span<const ClassIndex> hard,
                       std::vector<double>& scratch) {
    std::fill(scratch.begin(), scratch.end(), 0.0);
    double z = 0.0;
    for (const Neighbor& n : graph.neighbors(node)) {
        const ClassIndex c = hard[n.node];
        if (c < 0) continue;
        scratch[static_cast<std::size_t>(c)] += n.weight;
        z += n.weight;
    }
    if (!(z > 0.0)) return -1;
    return static_cast<ClassIndex>(std::max_element(scratch.begin(), scratch.end()) - scratch.begin());
}

} // namespace detail

/// Iterative classification with wvRN. Nodes in `train` keep their observed
/// labels; every other node starts null and is revisited in a fresh random
/// order each sweep, taking the argmax of its neighbours' current labels.
/// Stops after a sweep with no change or after `max_iterations` sweeps.
inline IcaResult ica_run(const Graph& graph, std::span<const NodeId> train, const IcaConfig& config) {
    if (config.max_iterations < 1) throw InvalidArgument("ICA max_iterations must be at least 1");
    if (train.empty()) throw InvalidArgument("ICA needs at least one training node");
    const int C = graph.class_count();
    const std::size_t n = graph.node_count();

    std::vector<ClassIndex> hard(n, -1);
    std::vector<bool> is_train(n, false);
    for (NodeId v : train) {
        const auto l = graph.label(v);
        if (!l) throw InvalidArgument("ICA training node '" + graph.id(v) + "' has no label");
        hard.at(v) = *l;
        is_train[v] = true;
    }

    IcaResult result;
    for (NodeId v = 0; v < n; ++v)
        if (!is_train[v]) result.test.push_back(v);

    Rng rng(config.order_seed);
    std::vector<NodeId> order = result.test;
    std::vector<double> scratch(static_cast<std::size_t>(C));
    while (result.sweeps < config.max_iterations) {
        rng.shuffle(std::span<NodeId>(order));
        bool changed = false;
        for (NodeId v : order) {
            const ClassIndex c = detail::vote(graph, v, hard, scratch);
            if (c != hard[v]) {
                hard[v] = c;
                changed = true;
            }
        }
        ++result.sweeps;
        if (!changed) {
            result.converged = true;
            break;
        }
    }

    std::vector<ClassDistribution> state(n);
    for (NodeId v = 0; v < n; ++v)
        if (hard[v] >= 0) state[v] = ClassDistribution::point_mass(C, hard[v]);

    result.soft.reserve(result.test.size());
    for (NodeId v : result.test) {
        auto d = wvrn_estimate(graph, v, state);
        const bool null = d.is_null();
        result.soft.push_back(null ? ClassDistribution::uniform(C) : std::move(d));
        result.hard.push_back(hard[v]);
        result.was_null.push_back(null);
    }
    return result;
}

/// `node_id,p_class0,...,p_class{C-1},hard_label,was_null`
inline void write_ica_predictions(std::ostream& out, const Graph& graph, const IcaResult& result) {
    out << "node_id";
    for (int c = 0; c < graph.class_count(); ++c) out << ",p_class" << c;
    out << ",hard_label,was_null\n";
    const auto old_precision = out.precision(17);
    for (std::size_t k = 0; k < result.test.size(); ++k) {
        out << graph.id(result.test[k]);
        for (double p : result.soft[k].probs()) out << ',' << p;
        out << ',' << result.hard[k] << ',' << (result.was_null[k] ? 1 : 0) << '\n';
    }
    out.precision(old_precision);
}

} // namespace dynstack
