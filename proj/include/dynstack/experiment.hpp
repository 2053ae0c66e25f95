#pragma once

// Repeated train/test experiments on a labelled graph with node text:
// local naive Bayes and wvRN/ICA as level-0 models, dynamic stacking against
// static stacking baselines, evaluated by test accuracy.

#include "dynstack/error.hpp"
#include "dynstack/graph.hpp"
#include "dynstack/level0.hpp"
#include "dynstack/metrics.hpp"
#include "dynstack/model_io.hpp"
#include "dynstack/naive_bayes.hpp"
#include "dynstack/parallel.hpp"
#include "dynstack/relational.hpp"
#include "dynstack/stacking.hpp"

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <numeric>
#include <ostream>
#include <string>
#include <vector>

namespace dynstack {

struct GraphExperimentConfig {
    CovariateKind covariate = CovariateKind::closeness_centrality;
    double test_fraction = 0.8;
    std::size_t reps = 100;
    std::uint64_t seed = 0;
    std::string positive_prefix;    ///< a class is positive iff its name starts with this
    int level1_folds = 10;
    int ica_max_iterations = 100;
    double nb_alpha = 1.0;
    int interior_knots = 6;
    int degree = 3;
    FitConfig fit{};
    std::size_t bins = 100;         ///< equal-width bins for continuous covariates
    std::size_t curve_points = 200;
    unsigned threads = 1;
};

/// Method names in report order.
inline const std::vector<std::string>& graph_methods() {
    static const std::vector<std::string> names{"dynamic", "logistic1", "lasso1", "ridge1", "logistic2", "lasso2",
                                                "ridge2",  "logistic3", "lasso3", "ridge3", "local",     "relational"};
    return names;
}

struct GraphRepetition {
    std::size_t rep = 0;
    std::vector<NodeId> test;                ///< ascending
    std::vector<double> accuracy;            ///< per method, graph_methods() order; NaN if the fit failed
    std::vector<std::vector<char>> correct;  ///< per method, aligned with `test`; empty if the fit failed
    std::vector<std::string> failures;       ///< `method: reason` for baselines that could not be fitted
    double lambda = 0.0;
    DynamicStackModel model;                 ///< dynamic fit of this repetition
};

struct GraphExperimentResult {
    Graph graph;                 ///< binary-labelled graph the experiment ran on
    NodeCovariate covariate;
    std::vector<GraphRepetition> reps;
    IcaResult first_ica;         ///< relational predictions of repetition 0 on its test set
};

/// Maps every class to positive (index 0) or negative (index 1) by name
/// prefix. Throws when either side is empty.
inline Graph binarize_labels(const Graph& graph, const std::string& positive_prefix) {
    if (positive_prefix.empty()) throw InvalidArgument("a positive label prefix is required");
    std::vector<bool> positive(static_cast<std::size_t>(graph.class_count()));
    bool any_pos = false, any_neg = false;
    for (std::size_t c = 0; c < positive.size(); ++c) {
        positive[c] = graph.class_names()[c].rfind(positive_prefix, 0) == 0;
        (positive[c] ? any_pos : any_neg) = true;
    }
    if (!any_pos) throw InvalidArgument("no label starts with '" + positive_prefix + "'");
    if (!any_neg) throw InvalidArgument("every label starts with '" + positive_prefix + "'; nothing is negative");
    std::vector<std::optional<ClassIndex>> labels(graph.node_count());
    for (NodeId v = 0; v < graph.node_count(); ++v)
        if (auto l = graph.label(v)) labels[v] = positive[static_cast<std::size_t>(*l)] ? 0 : 1;
    return graph.with_labels(std::move(labels), {"positive", "negative"});
}

inline NodeCovariate compute_covariate(const Graph& graph, CovariateKind kind, unsigned threads = 1) {
    return kind == CovariateKind::degree ? degree(graph) : closeness_centrality(graph, threads);
}

namespace detail {

inline GraphRepetition run_graph_repetition(const Graph& binary, const SparseFeatures& features,
                                            const NodeCovariate& covariate, const GraphExperimentConfig& cfg,
                                            std::size_t rep, IcaResult* ica_out) {
    const std::uint64_t rep_seed = derive_seed(cfg.seed, rep);
    const auto split = split_nodes(binary, SplitSpec{cfg.test_fraction, derive_seed(rep_seed, 1)});

    std::vector<int> y(binary.node_count());
    for (NodeId v = 0; v < binary.node_count(); ++v) y[v] = *binary.label(v) == 0 ? 1 : 0;

    LocalNaiveBayes local(split.working, features, cfg.nb_alpha);
    RelationalIca relational(split.working, cfg.ica_max_iterations);
    const std::vector<const Level0Classifier*> suite{&local, &relational};

    const auto train_l1 = build_level1(suite, split.train, y, split.working.labels(), covariate.values, cfg.level1_folds,
                                       derive_seed(rep_seed, 2));
    const auto test_l1 = predict_level1(suite, split.train, split.test, y, covariate.values, derive_seed(rep_seed, 3));
    if (ica_out) *ica_out = relational.run(split.train, derive_seed(rep_seed, 3));

    FitConfig fit = cfg.fit;
    fit.seed = derive_seed(rep_seed, 4);

    GraphRepetition out;
    out.rep = rep;
    out.test = split.test;
    auto record = [&](const Eigen::VectorXd& probs) {
        std::vector<char> ok(test_l1.rows());
        std::size_t hits = 0;
        for (std::size_t i = 0; i < ok.size(); ++i) {
            ok[i] = ((probs(static_cast<Eigen::Index>(i)) > 0.5 ? 1 : 0) == test_l1.y[i]);
            hits += static_cast<std::size_t>(ok[i]);
        }
        out.accuracy.push_back(static_cast<double>(hits) / static_cast<double>(ok.size()));
        out.correct.push_back(std::move(ok));
    };

    const auto basis = basis_for(train_l1, cfg.interior_knots, cfg.degree);
    GridSelection sel;
    out.model = fit_dynamic_cv(train_l1, fit, basis, &sel);
    out.lambda = sel.best;
    record(predict_dynamic(out.model, test_l1));

    // An unpenalised baseline on (quasi-)separable level-1 data has no
    // finite optimum; record it as failed for this repetition.
    for (StaticDesign d : {StaticDesign::m1, StaticDesign::m2, StaticDesign::m3})
        for (Penalty p : {Penalty::none, Penalty::lasso, Penalty::ridge}) {
            try {
                record(predict_static(fit_static_cv(train_l1, d, p, fit), test_l1));
            } catch (const FitError& e) {
                out.failures.push_back(graph_methods()[out.accuracy.size()] + ": " + e.what());
                out.accuracy.push_back(std::numeric_limits<double>::quiet_NaN());
                out.correct.emplace_back();
            }
        }

    record(test_l1.Z.col(0));
    record(test_l1.Z.col(1));
    return out;
}

} // namespace detail

/// Runs `cfg.reps` independent repetitions. `graph` carries the original
/// (multi-class) labels on every node; `features` rows align with its nodes.
inline GraphExperimentResult run_graph_experiment(const Graph& graph, const SparseFeatures& features,
                                                  const GraphExperimentConfig& cfg) {
    if (cfg.reps < 1) throw InvalidArgument("graph experiment needs at least one repetition");
    if (features.rows.size() != graph.node_count()) throw InvalidArgument("feature rows do not match the graph");
    for (NodeId v = 0; v < graph.node_count(); ++v)
        if (!graph.label(v)) throw InvalidArgument("node '" + graph.id(v) + "' has no label; every node needs one");

    GraphExperimentResult result;
    result.graph = binarize_labels(graph, cfg.positive_prefix);
    result.covariate = compute_covariate(result.graph, cfg.covariate, cfg.threads);
    result.reps.resize(cfg.reps);
    parallel_for(cfg.reps, cfg.threads, [&](std::size_t r) {
        result.reps[r] = detail::run_graph_repetition(result.graph, features, result.covariate, cfg, r,
                                                      r == 0 ? &result.first_ica : nullptr);
    });
    return result;
}

inline std::size_t method_index(const std::string& name) {
    const auto& m = graph_methods();
    const auto it = std::find(m.begin(), m.end(), name);
    if (it == m.end()) throw InvalidArgument("unknown method '" + name + "'");
    return static_cast<std::size_t>(it - m.begin());
}

/// Accuracy of `method` in every repetition where it was fitted.
inline std::vector<double> method_accuracies(const GraphExperimentResult& r, std::size_t method) {
    std::vector<double> a;
    for (const auto& rep : r.reps)
        if (!std::isnan(rep.accuracy.at(method))) a.push_back(rep.accuracy[method]);
    return a;
}

/// Paired accuracies of two methods over repetitions where both were fitted.
inline std::pair<std::vector<double>, std::vector<double>> paired_accuracies(const GraphExperimentResult& r, std::size_t a,
                                                                            std::size_t b) {
    std::pair<std::vector<double>, std::vector<double>> out;
    for (const auto& rep : r.reps)
        if (!std::isnan(rep.accuracy.at(a)) && !std::isnan(rep.accuracy.at(b))) {
            out.first.push_back(rep.accuracy[a]);
            out.second.push_back(rep.accuracy[b]);
        }
    return out;
}

inline BinSpec default_bin_spec(const GraphExperimentResult& r, std::size_t bins) {
    return r.covariate.kind == CovariateKind::degree ? BinSpec::integer() : BinSpec::equal_width(bins);
}

/// Per-bin accuracy of one method, pooled over repetitions, with bins laid
/// over the covariate range of the whole graph.
inline BinnedAccuracy pooled_binned_accuracy(const GraphExperimentResult& r, std::size_t method, const BinSpec& spec) {
    auto binned = make_bins(spec, r.covariate.values);
    for (const auto& rep : r.reps) {
        if (rep.correct[method].empty()) continue;
        for (std::size_t i = 0; i < rep.test.size(); ++i) binned.add(r.covariate.values[rep.test[i]], rep.correct[method][i] != 0);
    }
    return binned;
}

/// `method,mean_accuracy,sd_accuracy,n_reps`
inline void write_accuracy_table(std::ostream& out, const GraphExperimentResult& r) {
    out << "method,mean_accuracy,sd_accuracy,n_reps\n";
    for (std::size_t m = 0; m < graph_methods().size(); ++m) {
        const auto a = method_accuracies(r, m);
        if (a.empty()) {
            out << graph_methods()[m] << ",,,0\n";
            continue;
        }
        const double n = static_cast<double>(a.size());
        const double mean = std::accumulate(a.begin(), a.end(), 0.0) / n;
        double ss = 0.0;
        for (double x : a) ss += (x - mean) * (x - mean);
        out << graph_methods()[m] << ',' << format_real(mean) << ',';
        if (a.size() >= 2) out << format_real(std::sqrt(ss / (n - 1.0)));
        out << ',' << a.size() << '\n';
    }
}

/// `method_a,method_b,mean_diff,p_value` for dynamic against every other method.
inline void write_comparisons(std::ostream& out, const GraphExperimentResult& r) {
    out << "method_a,method_b,mean_diff,p_value\n";
    for (std::size_t m = 1; m < graph_methods().size(); ++m) {
        out << "dynamic," << graph_methods()[m] << ',';
        const auto [dyn, other] = paired_accuracies(r, 0, m);
        if (dyn.size() < 2) {
            out << ",\n";
            continue;
        }
        const auto c = paired_comparison(dyn, other);
        out << format_real(c.mean_diff) << ',' << format_real(c.p_value) << '\n';
    }
}

/// `bin_lo,bin_hi,method_b,mean_correct_diff,ci95_half_width`: per-repetition
/// difference in correctly classified test nodes (dynamic minus method_b),
/// over repetitions where method_b was fitted.
inline void write_binned_deltas(std::ostream& out, const GraphExperimentResult& r, const BinSpec& spec) {
    out << "bin_lo,bin_hi,method_b,mean_correct_diff,ci95_half_width\n";
    const auto proto = make_bins(spec, r.covariate.values);
    const std::size_t nb = proto.bins().size();
    for (std::size_t m = 1; m < graph_methods().size(); ++m) {
        std::vector<const GraphRepetition*> used;
        for (const auto& rep : r.reps)
            if (!rep.correct[m].empty()) used.push_back(&rep);
        if (used.empty()) continue;
        const double R = static_cast<double>(used.size());
        std::vector<std::vector<double>> diffs(nb, std::vector<double>(used.size(), 0.0));
        for (std::size_t k = 0; k < used.size(); ++k) {
            const auto& rep = *used[k];
            for (std::size_t i = 0; i < rep.test.size(); ++i) {
                const std::size_t b = proto.index_of(r.covariate.values[rep.test[i]]);
                diffs[b][k] += static_cast<double>(rep.correct[0][i]) - static_cast<double>(rep.correct[m][i]);
            }
        }
        for (std::size_t b = 0; b < nb; ++b) {
            const double mean = std::accumulate(diffs[b].begin(), diffs[b].end(), 0.0) / R;
            double ss = 0.0;
            for (double d : diffs[b]) ss += (d - mean) * (d - mean);
            const double half = R >= 2 ? 1.96 * std::sqrt(ss / (R - 1.0)) / std::sqrt(R) : 0.0;
            out << format_real(proto.bins()[b].lo) << ',' << format_real(proto.bins()[b].hi) << ',' << graph_methods()[m]
                << ',' << format_real(mean) << ',' << format_real(half) << '\n';
        }
    }
}

/// `u,beta_<column>...` from a fitted dynamic model.
inline void write_curves(std::ostream& out, const DynamicStackModel& model, std::size_t points) {
    const auto grid = covariate_grid(model.basis, points);
    const auto curves = coefficient_curves(model, grid);
    out << 'u';
    for (std::size_t j = 0; j < model.p; ++j)
        out << ",beta_" << (j < model.columns.size() ? model.columns[j] : "z_" + std::to_string(j + 1));
    out << '\n';
    for (std::size_t g = 0; g < grid.size(); ++g) {
        out << format_real(grid[g]);
        for (Eigen::Index j = 0; j < curves.cols(); ++j) out << ',' << format_real(curves(static_cast<Eigen::Index>(g), j));
        out << '\n';
    }
}

/// `rep,method,accuracy,lambda`
inline void write_per_rep(std::ostream& out, const GraphExperimentResult& r) {
    out << "rep,method,accuracy,lambda\n";
    for (const auto& rep : r.reps)
        for (std::size_t m = 0; m < graph_methods().size(); ++m)
            out << rep.rep << ',' << graph_methods()[m] << ','
                << (std::isnan(rep.accuracy[m]) ? std::string() : format_real(rep.accuracy[m])) << ','
                << (m == 0 ? format_real(rep.lambda) : std::string()) << '\n';
}

} // namespace dynstack
