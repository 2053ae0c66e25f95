#pragma once

#include "dynstack/error.hpp"
#include "dynstack/parallel.hpp"
#include "dynstack/random.hpp"
#include "dynstack/stacking.hpp"

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <numeric>
#include <ostream>
#include <span>
#include <string>
#include <vector>

namespace dynstack {

/// Rows (y, Z1, Z2, u) from one of the three generative cases:
///   1: logit = -3 + 3 Z1         + 3 Z2 + w
///   2: logit = -3 + 3 u Z1       + 3 Z2 + w
///   3: logit = -3 + 3 sin(6u) Z1 + 3 Z2 + w
/// with Z1, Z2, u ~ U[0, 1] and w ~ N(0, 1).
struct SimDataset {
    int case_id = 1;
    std::uint64_t seed = 0;
    Level1Dataset data;
};

inline double case_signal(int case_id, double z1, double z2, double u) {
    switch (case_id) {
    case 1: return -3.0 + 3.0 * z1 + 3.0 * z2;
    case 2: return -3.0 + 3.0 * u * z1 + 3.0 * z2;
    case 3: return -3.0 + 3.0 * std::sin(6.0 * u) * z1 + 3.0 * z2;
    default: throw InvalidArgument("simulation case must be 1, 2 or 3");
    }
}

inline SimDataset generate_case(int case_id, std::size_t n, std::uint64_t seed) {
    if (case_id < 1 || case_id > 3) throw InvalidArgument("simulation case must be 1, 2 or 3");
    if (n < 1) throw InvalidArgument("simulation needs at least one row");
    SimDataset s{case_id, seed, {}};
    auto& d = s.data;
    d.columns = {"Z1", "Z2"};
    d.Z.resize(static_cast<Eigen::Index>(n), 2);
    d.u.resize(static_cast<Eigen::Index>(n));
    d.y.resize(n);
    Rng rng(seed);
    for (std::size_t i = 0; i < n; ++i) {
        const auto r = static_cast<Eigen::Index>(i);
        const double z1 = rng.uniform(), z2 = rng.uniform(), u = rng.uniform();
        const double w = rng.normal();
        const double prob = sigmoid(case_signal(case_id, z1, z2, u) + w);
        d.Z(r, 0) = z1;
        d.Z(r, 1) = z2;
        d.u(r) = u;
        d.y[i] = rng.bernoulli(prob) ? 1 : 0;
    }
    return s;
}

/// Area under the ROC curve via the Mann-Whitney rank sum, ties at midranks.
inline double auc(std::span<const double> scores, std::span<const int> labels) {
    if (scores.size() != labels.size()) throw InvalidArgument("auc: length mismatch");
    const std::size_t n = scores.size();
    std::vector<std::size_t> order(n);
    std::iota(order.begin(), order.end(), std::size_t{0});
    std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return scores[a] < scores[b]; });
    double rank_sum = 0.0;
    std::size_t positives = 0;
    for (std::size_t i = 0; i < n;) {
        std::size_t j = i;
        while (j + 1 < n && scores[order[j + 1]] == scores[order[i]]) ++j;
        const double midrank = 0.5 * static_cast<double>(i + j) + 1.0;
        for (std::size_t k = i; k <= j; ++k) {
            if (labels[order[k]] == 1) {
                rank_sum += midrank;
                ++positives;
            } else if (labels[order[k]] != 0) {
                throw InvalidArgument("auc: labels must be 0/1");
            }
        }
        i = j + 1;
    }
    const std::size_t negatives = n - positives;
    if (positives == 0 || negatives == 0) throw InvalidArgument("auc needs both classes");
    const double np = static_cast<double>(positives);
    return (rank_sum - np * (np + 1.0) / 2.0) / (np * static_cast<double>(negatives));
}

enum class SimMethod {
    random,
    z1_only,
    z2_only,
    logistic1,
    lasso1,
    ridge1,
    logistic2,
    lasso2,
    ridge2,
    logistic3,
    lasso3,
    ridge3,
    dynamic
};

inline const std::vector<SimMethod>& all_sim_methods() {
    static const std::vector<SimMethod> methods{
        SimMethod::random,    SimMethod::z1_only, SimMethod::z2_only, SimMethod::logistic1, SimMethod::lasso1,
        SimMethod::ridge1,    SimMethod::logistic2, SimMethod::lasso2, SimMethod::ridge2,  SimMethod::logistic3,
        SimMethod::lasso3,    SimMethod::ridge3,  SimMethod::dynamic};
    return methods;
}

inline std::string_view to_string(SimMethod m) {
    switch (m) {
    case SimMethod::random: return "random";
    case SimMethod::z1_only: return "z1_only";
    case SimMethod::z2_only: return "z2_only";
    case SimMethod::logistic1: return "logistic1";
    case SimMethod::lasso1: return "lasso1";
    case SimMethod::ridge1: return "ridge1";
    case SimMethod::logistic2: return "logistic2";
    case SimMethod::lasso2: return "lasso2";
    case SimMethod::ridge2: return "ridge2";
    case SimMethod::logistic3: return "logistic3";
    case SimMethod::lasso3: return "lasso3";
    case SimMethod::ridge3: return "ridge3";
    case SimMethod::dynamic: return "dynamic";
    }
    return "?";
}

inline SimMethod parse_sim_method(std::string_view s) {
    for (SimMethod m : all_sim_methods())
        if (to_string(m) == s) return m;
    throw InvalidArgument("unknown simulation method '" + std::string(s) + "'");
}

struct SimConfig {
    std::vector<int> cases{1, 2, 3};
    std::vector<SimMethod> methods = all_sim_methods();
    std::size_t n = 2000;
    std::size_t reps = 50;
    std::uint64_t seed = 0;
    unsigned threads = 1;
    int interior_knots = 6;
    int degree = 3;
    FitConfig fit{};
};

struct SimRaw {
    int case_id;
    std::size_t rep;
    SimMethod method;
    double auc; ///< NaN when the fit failed
    std::string error;
};

struct SimCell {
    int case_id;
    SimMethod method;
    double mean_auc;
    double sd_auc; ///< sample standard deviation; NaN if fewer than 2 reps
    std::size_t n_reps;
    bool complete; ///< every repetition produced an AUC
};

struct SimReport {
    std::vector<SimCell> cells; ///< case-major, methods in config order
    std::vector<SimRaw> raw;

    const SimCell& cell(int case_id, SimMethod m) const {
        for (const auto& c : cells)
            if (c.case_id == case_id && c.method == m) return c;
        throw InvalidArgument("no report cell for case " + std::to_string(case_id) + " / " + std::string(to_string(m)));
    }
};

/// Seed of repetition `rep` under `master`; all methods of a repetition share
/// the dataset it generates.
inline std::uint64_t repetition_seed(std::uint64_t master, std::size_t rep) { return derive_seed(master, rep); }

namespace detail {

inline double method_score_auc(SimMethod m, const Level1Dataset& train, const Level1Dataset& test, const SimConfig& cfg,
                               std::uint64_t seed) {
    std::vector<double> scores(test.rows());
    auto from_vector = [&](const Eigen::VectorXd& v) {
        for (std::size_t i = 0; i < scores.size(); ++i) scores[i] = v(static_cast<Eigen::Index>(i));
    };
    auto static_fit = [&](StaticDesign d, Penalty p) { from_vector(predict_static(fit_static_cv(train, d, p, cfg.fit), test)); };
    switch (m) {
    case SimMethod::random: {
        Rng rng(derive_seed(seed, 1));
        for (double& s : scores) s = rng.uniform();
        break;
    }
    case SimMethod::z1_only: from_vector(test.Z.col(0)); break;
    case SimMethod::z2_only: from_vector(test.Z.col(1)); break;
    case SimMethod::logistic1: static_fit(StaticDesign::m1, Penalty::none); break;
    case SimMethod::lasso1: static_fit(StaticDesign::m1, Penalty::lasso); break;
    case SimMethod::ridge1: static_fit(StaticDesign::m1, Penalty::ridge); break;
    case SimMethod::logistic2: static_fit(StaticDesign::m2, Penalty::none); break;
    case SimMethod::lasso2: static_fit(StaticDesign::m2, Penalty::lasso); break;
    case SimMethod::ridge2: static_fit(StaticDesign::m2, Penalty::ridge); break;
    case SimMethod::logistic3: static_fit(StaticDesign::m3, Penalty::none); break;
    case SimMethod::lasso3: static_fit(StaticDesign::m3, Penalty::lasso); break;
    case SimMethod::ridge3: static_fit(StaticDesign::m3, Penalty::ridge); break;
    case SimMethod::dynamic: {
        const auto basis = basis_for(train, cfg.interior_knots, cfg.degree);
        from_vector(predict_dynamic(fit_dynamic_cv(train, cfg.fit, basis), test));
        break;
    }
    }
    return auc(scores, test.y);
}

} // namespace detail

/// One repetition of one case: fresh data, first half train / second half
/// test, CV-tuned fits on train, AUC on test.
inline std::vector<SimRaw> run_repetition(int case_id, std::size_t rep, const SimConfig& cfg) {
    const std::uint64_t rep_seed = repetition_seed(cfg.seed, rep);
    const std::uint64_t data_seed = derive_seed(rep_seed, static_cast<std::uint64_t>(case_id));
    const auto sim = generate_case(case_id, cfg.n, data_seed);
    const std::size_t half = cfg.n / 2;
    std::vector<std::size_t> tr(half), te(cfg.n - half);
    std::iota(tr.begin(), tr.end(), std::size_t{0});
    std::iota(te.begin(), te.end(), half);
    const auto train = sim.data.subset(tr);
    const auto test = sim.data.subset(te);

    SimConfig local = cfg;
    local.fit.seed = derive_seed(data_seed, 2);
    std::vector<SimRaw> out;
    for (SimMethod m : cfg.methods) {
        SimRaw r{case_id, rep, m, std::numeric_limits<double>::quiet_NaN(), {}};
        try {
            r.auc = detail::method_score_auc(m, train, test, local, data_seed);
        } catch (const Error& e) {
            r.error = e.what();
        }
        out.push_back(std::move(r));
    }
    return out;
}

inline SimReport run_simulation(const SimConfig& cfg) {
    for (int c : cfg.cases)
        if (c < 1 || c > 3) throw InvalidArgument("simulation case must be 1, 2 or 3");
    if (cfg.n < 4) throw InvalidArgument("simulation needs at least 4 rows");
    if (cfg.reps < 1) throw InvalidArgument("simulation needs at least one repetition");

    const std::size_t jobs = cfg.cases.size() * cfg.reps;
    std::vector<std::vector<SimRaw>> results(jobs);
    parallel_for(jobs, cfg.threads, [&](std::size_t job) {
        results[job] = run_repetition(cfg.cases[job / cfg.reps], job % cfg.reps, cfg);
    });

    SimReport report;
    for (auto& r : results) report.raw.insert(report.raw.end(), r.begin(), r.end());
    for (int c : cfg.cases) {
        for (SimMethod m : cfg.methods) {
            std::vector<double> values;
            bool complete = true;
            for (const auto& r : report.raw) {
                if (r.case_id != c || r.method != m) continue;
                if (std::isfinite(r.auc)) values.push_back(r.auc);
                else complete = false;
            }
            const double nv = static_cast<double>(values.size());
            const double mean = values.empty() ? std::numeric_limits<double>::quiet_NaN()
                                               : std::accumulate(values.begin(), values.end(), 0.0) / nv;
            double sd = std::numeric_limits<double>::quiet_NaN();
            if (values.size() >= 2) {
                double ss = 0.0;
                for (double v : values) ss += (v - mean) * (v - mean);
                sd = std::sqrt(ss / (nv - 1.0));
            }
            report.cells.push_back({c, m, mean, sd, values.size(), complete});
        }
    }
    return report;
}

/// `case,method,mean_auc,sd_auc,n_reps`
inline void write_sim_report(std::ostream& out, const SimReport& report) {
    out << "case,method,mean_auc,sd_auc,n_reps\n";
    const auto old = out.precision(6);
    for (const auto& c : report.cells)
        out << c.case_id << ',' << to_string(c.method) << ',' << std::fixed << c.mean_auc << ',' << c.sd_auc << ','
            << std::defaultfloat << c.n_reps << '\n';
    out.precision(old);
}

/// `case,rep,method,auc,error`
inline void write_sim_raw(std::ostream& out, const SimReport& report) {
    out << "case,rep,method,auc,error\n";
    const auto old = out.precision(17);
    for (const auto& r : report.raw) {
        out << r.case_id << ',' << r.rep << ',' << to_string(r.method) << ',';
        if (std::isfinite(r.auc)) out << r.auc;
        std::string msg = r.error;
        std::replace(msg.begin(), msg.end(), ',', ';');
        out << ',' << msg << '\n';
    }
    out.precision(old);
}

} // namespace dynstack
