#pragma once

// Graph-aware level-0 classifiers for level-1 construction.

#include "dynstack/graph.hpp"
#include "dynstack/naive_bayes.hpp"
#include "dynstack/relational.hpp"
#include "dynstack/stacking.hpp"

#include <string>
#include <vector>

namespace dynstack {

/// Multinomial naive Bayes on node features; labels come from `graph`.
class LocalNaiveBayes final : public Level0Classifier {
public:
    LocalNaiveBayes(const Graph& graph, const SparseFeatures& features, double alpha = 1.0)
        : graph_(graph), features_(features), alpha_(alpha) {}

    std::string name() const override { return "local"; }
    int class_count() const override { return graph_.class_count(); }
    std::vector<std::string> class_names() const override { return graph_.class_names(); }
    bool needs_every_class() const override { return true; }

    std::vector<ClassDistribution> fit_predict(std::span<const NodeId> train, std::span<const NodeId> targets,
                                               std::uint64_t) const override {
        const auto model = fit_nb(features_, train, graph_.labels(), graph_.class_count(), alpha_);
        std::vector<ClassDistribution> out;
        out.reserve(targets.size());
        for (NodeId v : targets) out.push_back(predict_nb_lenient(model, features_.rows.at(v)));
        return out;
    }

private:
    const Graph& graph_;
    const SparseFeatures& features_;
    double alpha_;
};

/// wvRN under iterative classification; every node outside `train` is
/// treated as unlabelled.
class RelationalIca final : public Level0Classifier {
public:
    RelationalIca(const Graph& graph, int max_iterations = 100) : graph_(graph), max_iterations_(max_iterations) {}

    std::string name() const override { return "relational"; }
    int class_count() const override { return graph_.class_count(); }
    std::vector<std::string> class_names() const override { return graph_.class_names(); }

    std::vector<ClassDistribution> fit_predict(std::span<const NodeId> train, std::span<const NodeId> targets,
                                               std::uint64_t seed) const override {
        const auto result = ica_run(graph_, train, IcaConfig{max_iterations_, seed});
        std::vector<ClassDistribution> out;
        out.reserve(targets.size());
        for (NodeId v : targets) {
            const auto pos = result.position(v);
            if (!pos) throw InvalidArgument("relational target '" + graph_.id(v) + "' is also a training node");
            out.push_back(result.soft[*pos]);
        }
        return out;
    }

    IcaResult run(std::span<const NodeId> train, std::uint64_t seed) const {
        return ica_run(graph_, train, IcaConfig{max_iterations_, seed});
    }

private:
    const Graph& graph_;
    int max_iterations_;
};

} // namespace dynstack
