#pragma once

#include "dynstack/error.hpp"

#include <boost/math/distributions/students_t.hpp>

#include <algorithm>
#include <cmath>
#include <optional>
#include <ostream>
#include <span>
#include <vector>

namespace dynstack {

/// Fraction of rows with 1[prob > threshold] == label.
inline double accuracy(std::span<const double> probs, std::span<const int> labels, double threshold = 0.5) {
    if (probs.size() != labels.size()) throw InvalidArgument("accuracy: length mismatch");
    if (probs.empty()) throw InvalidArgument("accuracy: empty input");
    std::size_t correct = 0;
    for (std::size_t i = 0; i < probs.size(); ++i) correct += ((probs[i] > threshold ? 1 : 0) == labels[i]);
    return static_cast<double>(correct) / static_cast<double>(probs.size());
}

inline double accuracy_of_labels(std::span<const int> predicted, std::span<const int> labels) {
    if (predicted.size() != labels.size()) throw InvalidArgument("accuracy: length mismatch");
    if (predicted.empty()) throw InvalidArgument("accuracy: empty input");
    std::size_t correct = 0;
    for (std::size_t i = 0; i < predicted.size(); ++i) correct += (predicted[i] == labels[i]);
    return static_cast<double>(correct) / static_cast<double>(predicted.size());
}

/// Equal-width bins over [lo, hi], or one unit-width bin per integer value.
struct BinSpec {
    enum class Kind { equal_width, integer } kind = Kind::equal_width;
    std::size_t bins = 100;
    std::optional<double> lo, hi; ///< default: range of the covariate

    static BinSpec equal_width(std::size_t bins, std::optional<double> lo = {}, std::optional<double> hi = {}) {
        return {Kind::equal_width, bins, lo, hi};
    }
    static BinSpec integer(std::optional<double> lo = {}, std::optional<double> hi = {}) {
        return {Kind::integer, 0, lo, hi};
    }
};

struct Bin {
    double lo = 0.0, hi = 0.0;
    std::size_t count = 0;
    std::size_t correct = 0;
    std::optional<double> accuracy() const {
        if (count == 0) return std::nullopt;
        return static_cast<double>(correct) / static_cast<double>(count);
    }
};

/// Bins are half-open [lo, hi) except the last, which is closed. Values
/// outside the range fall into the nearest end bin.
class BinnedAccuracy {
public:
    BinnedAccuracy(std::vector<double> edges) : edges_(std::move(edges)), bins_(edges_.size() - 1) {
        for (std::size_t b = 0; b < bins_.size(); ++b) bins_[b].lo = edges_[b], bins_[b].hi = edges_[b + 1];
    }

    std::size_t index_of(double x) const {
        const auto it = std::upper_bound(edges_.begin(), edges_.end(), x);
        const auto raw = static_cast<std::ptrdiff_t>(it - edges_.begin()) - 1;
        return static_cast<std::size_t>(std::clamp<std::ptrdiff_t>(raw, 0, static_cast<std::ptrdiff_t>(bins_.size()) - 1));
    }

    void add(double covariate, bool correct) {
        Bin& b = bins_[index_of(covariate)];
        ++b.count;
        b.correct += correct ? 1 : 0;
    }

    const std::vector<Bin>& bins() const noexcept { return bins_; }
    const std::vector<double>& edges() const noexcept { return edges_; }

    std::size_t total() const {
        std::size_t n = 0;
        for (const auto& b : bins_) n += b.count;
        return n;
    }

private:
    std::vector<double> edges_;
    std::vector<Bin> bins_;
};

inline BinnedAccuracy make_bins(const BinSpec& spec, std::span<const double> covariate) {
    double lo = spec.lo.value_or(covariate.empty() ? 0.0 : *std::min_element(covariate.begin(), covariate.end()));
    double hi = spec.hi.value_or(covariate.empty() ? 1.0 : *std::max_element(covariate.begin(), covariate.end()));
    std::vector<double> edges;
    if (spec.kind == BinSpec::Kind::integer) {
        lo = std::floor(lo);
        hi = std::floor(hi);
        for (double v = lo; v <= hi + 1.0; v += 1.0) edges.push_back(v);
    } else {
        if (spec.bins == 0) throw InvalidArgument("binned accuracy needs at least one bin");
        if (!(hi > lo)) hi = lo + 1.0;
        for (std::size_t b = 0; b <= spec.bins; ++b)
            edges.push_back(b == spec.bins ? hi : lo + (hi - lo) * static_cast<double>(b) / static_cast<double>(spec.bins));
    }
    return BinnedAccuracy(std::move(edges));
}

inline BinnedAccuracy binned_accuracy(std::span<const int> predicted, std::span<const int> labels,
                                      std::span<const double> covariate, const BinSpec& spec) {
    if (predicted.size() != labels.size() || labels.size() != covariate.size())
        throw InvalidArgument("binned accuracy: length mismatch");
    if (spec.kind == BinSpec::Kind::equal_width && spec.bins == 0) throw InvalidArgument("binned accuracy needs at least one bin");
    auto binned = make_bins(spec, covariate);
    for (std::size_t i = 0; i < labels.size(); ++i) {
        if (!std::isfinite(covariate[i])) throw InvalidArgument("binned accuracy: non-finite covariate");
        binned.add(covariate[i], predicted[i] == labels[i]);
    }
    return binned;
}

/// Probabilistic predictions are thresholded strictly above 0.5.
inline BinnedAccuracy binned_accuracy(std::span<const double> probs, std::span<const int> labels,
                                      std::span<const double> covariate, const BinSpec& spec) {
    std::vector<int> predicted(probs.size());
    for (std::size_t i = 0; i < probs.size(); ++i) predicted[i] = probs[i] > 0.5 ? 1 : 0;
    return binned_accuracy(predicted, labels, covariate, spec);
}

/// `bin_lo,bin_hi,count,accuracy`; empty bins leave accuracy blank.
inline void write_binned_csv(std::ostream& out, const BinnedAccuracy& binned) {
    out << "bin_lo,bin_hi,count,accuracy\n";
    const auto old = out.precision(17);
    for (const auto& b : binned.bins()) {
        out << b.lo << ',' << b.hi << ',' << b.count << ',';
        if (auto a = b.accuracy()) out << *a;
        out << '\n';
    }
    out.precision(old);
}

struct PairedComparison {
    double mean_diff = 0.0;  ///< mean of a - b
    double t_statistic = 0.0;
    double p_value = 0.5;    ///< one-sided, H0: a is no more accurate than b
    bool zero_variance = false;
    std::size_t n = 0;
};

/// Paired one-sided t-test on per-repetition differences a - b.
inline PairedComparison paired_comparison(std::span<const double> a, std::span<const double> b) {
    if (a.size() != b.size()) throw InvalidArgument("paired comparison: length mismatch");
    if (a.size() < 2) throw InvalidArgument("paired comparison needs at least two repetitions");
    const std::size_t n = a.size();
    PairedComparison r;
    r.n = n;
    double mean = 0.0;
    for (std::size_t i = 0; i < n; ++i) mean += a[i] - b[i];
    mean /= static_cast<double>(n);
    double ss = 0.0;
    for (std::size_t i = 0; i < n; ++i) ss += (a[i] - b[i] - mean) * (a[i] - b[i] - mean);
    const double sd = std::sqrt(ss / static_cast<double>(n - 1));
    r.mean_diff = mean;
    const double scale = 1e-12 * std::max(1.0, std::abs(mean));
    if (sd <= scale) {
        r.zero_variance = true;
        if (std::abs(mean) <= scale) {
            r.t_statistic = 0.0;
            r.p_value = 0.5;
        } else {
            r.t_statistic = mean > 0 ? HUGE_VAL : -HUGE_VAL;
            r.p_value = mean > 0 ? 0.0 : 1.0;
        }
        return r;
    }
    r.t_statistic = mean / (sd / std::sqrt(static_cast<double>(n)));
    boost::math::students_t dist(static_cast<double>(n - 1));
    r.p_value = boost::math::cdf(boost::math::complement(dist, r.t_statistic));
    return r;
}

} // namespace dynstack
