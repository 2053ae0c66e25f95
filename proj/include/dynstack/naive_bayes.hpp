#pragma once

#include "dynstack/error.hpp"
#include "dynstack/graph.hpp"
#include "dynstack/relational.hpp"

#include <algorithm>
#include <cmath>
#include <istream>
#include <limits>
#include <optional>
#include <span>
#include <string>
#include <unordered_map>
#include <vector>

namespace dynstack {

struct SparseEntry {
    std::size_t term;
    double weight;
};

using SparseRow = std::vector<SparseEntry>;

/// Bag-of-words rows, one per node, over a shared term vocabulary.
struct SparseFeatures {
    std::vector<SparseRow> rows;
    std::vector<std::string> terms; ///< term strings, indexed by term id

    std::size_t vocabulary_size() const noexcept { return terms.size(); }
};

/// Reads `node_id term:weight term:weight ...` lines and aligns rows with the
/// nodes of `graph`. A bare `term` counts as weight 1. Lines for ids not in the
/// graph are ignored; nodes without a line get an empty row.
inline SparseFeatures read_feature_file(std::istream& in, const Graph& graph) {
    SparseFeatures f;
    f.rows.resize(graph.node_count());
    std::unordered_map<std::string, std::size_t> vocab;
    std::size_t n = 0;
    for (std::string raw; std::getline(in, raw);) {
        ++n;
        const auto line = detail::trim(raw);
        if (line.empty() || line.front() == '#') continue;
        const auto fields = detail::split_ws(line);
        const auto node = graph.find(fields[0]);
        if (!node) continue;
        SparseRow row;
        for (std::size_t k = 1; k < fields.size(); ++k) {
            const auto tok = fields[k];
            const auto colon = tok.rfind(':');
            std::string_view term = tok;
            double w = 1.0;
            if (colon != std::string_view::npos) {
                term = tok.substr(0, colon);
                const auto parsed = detail::parse_double(tok.substr(colon + 1));
                if (!parsed || !std::isfinite(*parsed) || *parsed < 0.0)
                    throw ParseError(n, "bad term weight in '" + std::string(tok) + "'");
                w = *parsed;
            }
            if (term.empty()) throw ParseError(n, "empty term in '" + std::string(tok) + "'");
            auto [it, inserted] = vocab.try_emplace(std::string(term), f.terms.size());
            if (inserted) f.terms.emplace_back(term);
            row.push_back({it->second, w});
        }
        auto& dest = f.rows[*node];
        dest.insert(dest.end(), row.begin(), row.end());
    }
    return f;
}

struct NaiveBayesModel {
    int class_count = 0;
    std::size_t vocabulary_size = 0;
    double alpha = 1.0;
    std::vector<double> log_prior;      ///< per class; -inf for classes absent from training
    std::vector<double> log_likelihood; ///< class-major, class_count x vocabulary_size

    double log_likelihood_at(int c, std::size_t term) const {
        return log_likelihood[static_cast<std::size_t>(c) * vocabulary_size + term];
    }
};

/// Multinomial NB with additive smoothing:
/// P(t | c) = (count(c, t) + alpha) / (count(c, .) + alpha * V).
inline NaiveBayesModel fit_nb(const SparseFeatures& features, std::span<const NodeId> train,
                              std::span<const std::optional<ClassIndex>> labels, int class_count,
                              double alpha = 1.0) {
    if (!(alpha > 0.0)) throw InvalidArgument("naive Bayes smoothing alpha must be positive");
    if (train.empty()) throw InvalidArgument("naive Bayes needs a nonempty training set");
    if (class_count < 1) throw InvalidArgument("naive Bayes needs at least one class");

    const std::size_t V = features.vocabulary_size();
    const auto C = static_cast<std::size_t>(class_count);
    std::vector<double> docs(C, 0.0);
    std::vector<double> counts(C * V, 0.0);
    std::vector<double> totals(C, 0.0);
    for (NodeId v : train) {
        const auto& l = labels[v];
        if (!l || *l < 0 || *l >= class_count) throw InvalidArgument("naive Bayes training node without a valid label");
        const auto c = static_cast<std::size_t>(*l);
        docs[c] += 1.0;
        for (const SparseEntry& e : features.rows.at(v)) {
            if (e.term >= V) throw InvalidArgument("term index out of vocabulary");
            counts[c * V + e.term] += e.weight;
            totals[c] += e.weight;
        }
    }

    NaiveBayesModel m;
    m.class_count = class_count;
    m.vocabulary_size = V;
    m.alpha = alpha;
    m.log_prior.resize(C);
    m.log_likelihood.resize(C * V);
    const double n = static_cast<double>(train.size());
    for (std::size_t c = 0; c < C; ++c) {
        m.log_prior[c] = docs[c] > 0.0 ? std::log(docs[c] / n) : -std::numeric_limits<double>::infinity();
        const double denom = std::log(totals[c] + alpha * static_cast<double>(V));
        for (std::size_t t = 0; t < V; ++t) m.log_likelihood[c * V + t] = std::log(counts[c * V + t] + alpha) - denom;
    }
    return m;
}

namespace detail {

inline ClassDistribution nb_posterior(const NaiveBayesModel& model, std::span<const SparseEntry> doc, bool strict) {
    std::vector<double> score = model.log_prior;
    for (const SparseEntry& e : doc) {
        if (e.term >= model.vocabulary_size) {
            if (strict) throw InvalidArgument("term index " + std::to_string(e.term) + " outside the model vocabulary");
            continue;
        }
        for (int c = 0; c < model.class_count; ++c)
            if (std::isfinite(score[static_cast<std::size_t>(c)])) score[static_cast<std::size_t>(c)] += e.weight * model.log_likelihood_at(c, e.term);
    }
    const double top = *std::max_element(score.begin(), score.end());
    double z = 0.0;
    for (double& s : score) {
        s = std::isfinite(s) ? std::exp(s - top) : 0.0;
        z += s;
    }
    for (double& s : score) s /= z;
    return ClassDistribution(std::move(score));
}

} // namespace detail

/// Posterior class distribution of one document. Throws on terms outside the
/// model vocabulary.
inline ClassDistribution predict_nb(const NaiveBayesModel& model, std::span<const SparseEntry> doc) {
    return detail::nb_posterior(model, doc, true);
}

/// As predict_nb, but out-of-vocabulary terms are dropped.
inline ClassDistribution predict_nb_lenient(const NaiveBayesModel& model, std::span<const SparseEntry> doc) {
    return detail::nb_posterior(model, doc, false);
}

} // namespace dynstack
