#pragma once

#include "dynstack/error.hpp"
#include "dynstack/graph.hpp"
#include "dynstack/logistic.hpp"
#include "dynstack/random.hpp"
#include "dynstack/relational.hpp"
#include "dynstack/spline.hpp"

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <numeric>
#include <optional>
#include <span>
#include <string>
#include <utility>
#include <vector>

namespace dynstack {

// ---------------------------------------------------------------------------
// Level-1 data

/// Rows (y, Z, u): binary label, held-out level-0 class probabilities with the
/// last class of every classifier dropped, and the scalar covariate.
struct Level1Dataset {
    std::vector<int> y;
    Eigen::MatrixXd Z; ///< rows x p
    Eigen::VectorXd u;
    std::vector<std::string> columns; ///< provenance of each Z column

    std::size_t rows() const noexcept { return y.size(); }
    std::size_t p() const noexcept { return static_cast<std::size_t>(Z.cols()); }

    Eigen::VectorXd response() const {
        Eigen::VectorXd r(static_cast<Eigen::Index>(y.size()));
        for (std::size_t i = 0; i < y.size(); ++i) r(static_cast<Eigen::Index>(i)) = y[i];
        return r;
    }

    Level1Dataset subset(std::span<const std::size_t> idx) const {
        Level1Dataset s;
        s.columns = columns;
        s.Z.resize(static_cast<Eigen::Index>(idx.size()), Z.cols());
        s.u.resize(static_cast<Eigen::Index>(idx.size()));
        for (std::size_t k = 0; k < idx.size(); ++k) {
            const auto i = static_cast<Eigen::Index>(idx[k]);
            s.y.push_back(y.at(idx[k]));
            s.Z.row(static_cast<Eigen::Index>(k)) = Z.row(i);
            s.u(static_cast<Eigen::Index>(k)) = u(i);
        }
        return s;
    }

    void validate() const {
        const auto n = static_cast<Eigen::Index>(y.size());
        if (Z.rows() != n || u.size() != n) throw InvalidArgument("level-1 dataset columns have inconsistent lengths");
        if (!columns.empty() && columns.size() != p()) throw InvalidArgument("level-1 provenance does not match p");
        for (int v : y)
            if (v != 0 && v != 1) throw InvalidArgument("level-1 labels must be 0/1");
        if (!Z.allFinite() || !u.allFinite()) throw InvalidArgument("level-1 dataset contains non-finite values");
        if (n > 0 && (Z.minCoeff() < 0.0 || Z.maxCoeff() > 1.0)) throw InvalidArgument("level-1 Z entries must lie in [0, 1]");
    }
};

/// A level-0 model that can be trained on a subset of nodes and asked for
/// class distributions on others.
class Level0Classifier {
public:
    virtual ~Level0Classifier() = default;
    virtual std::string name() const = 0;
    virtual int class_count() const = 0;
    /// Class names, used for column provenance.
    virtual std::vector<std::string> class_names() const = 0;
    /// Every class must appear among the training nodes of each fold.
    virtual bool needs_every_class() const { return false; }
    virtual std::vector<ClassDistribution> fit_predict(std::span<const NodeId> train, std::span<const NodeId> targets,
                                                       std::uint64_t seed) const = 0;
};

/// Seeded shuffle of 0..n-1 cut into `folds` contiguous blocks; entry i is
/// the fold of row i.
inline std::vector<int> make_folds(std::size_t n, int folds, std::uint64_t seed) {
    if (folds < 2) throw InvalidArgument("cross-validation needs at least 2 folds");
    if (n < static_cast<std::size_t>(folds)) throw InvalidArgument("fewer rows than cross-validation folds");
    std::vector<std::size_t> order(n);
    std::iota(order.begin(), order.end(), std::size_t{0});
    Rng rng(seed);
    rng.shuffle(std::span<std::size_t>(order));
    std::vector<int> fold(n);
    for (int k = 0; k < folds; ++k) {
        const std::size_t b = n * static_cast<std::size_t>(k) / static_cast<std::size_t>(folds);
        const std::size_t e = n * static_cast<std::size_t>(k + 1) / static_cast<std::size_t>(folds);
        for (std::size_t i = b; i < e; ++i) fold[order[i]] = k;
    }
    return fold;
}

namespace detail {

inline std::vector<std::string> level1_columns(std::span<const Level0Classifier* const> suite) {
    std::vector<std::string> cols;
    for (const auto* c : suite) {
        const auto names = c->class_names();
        for (int k = 0; k + 1 < c->class_count(); ++k) cols.push_back(c->name() + ":" + names.at(static_cast<std::size_t>(k)));
    }
    return cols;
}

inline void fill_level1_row(Eigen::MatrixXd& Z, Eigen::Index row, std::span<const Level0Classifier* const> suite,
                            const std::vector<std::vector<ClassDistribution>>& preds, std::size_t target) {
    Eigen::Index col = 0;
    for (std::size_t k = 0; k < suite.size(); ++k) {
        const auto& d = preds[k][target];
        const int C = suite[k]->class_count();
        if (d.is_null() || static_cast<int>(d.size()) != C)
            throw Error("level-0 classifier '" + suite[k]->name() + "' returned a malformed distribution");
        for (int c = 0; c + 1 < C; ++c) Z(row, col++) = std::clamp(d[static_cast<std::size_t>(c)], 0.0, 1.0);
    }
}

} // namespace detail

/// Level-1 rows for `train` by J-fold cross-validation: every classifier is
/// retrained without fold j and predicts fold j. `y` and `u` are indexed by
/// node; `labels` (by node) is only consulted for the class-coverage check.
inline Level1Dataset build_level1(std::span<const Level0Classifier* const> suite, std::span<const NodeId> train,
                                  std::span<const int> y, std::span<const std::optional<ClassIndex>> labels,
                                  std::span<const double> u, int folds, std::uint64_t seed) {
    if (suite.empty()) throw InvalidArgument("level-1 construction needs at least one level-0 classifier");
    const auto fold = make_folds(train.size(), folds, seed);
    const auto columns = detail::level1_columns(suite);

    Level1Dataset data;
    data.columns = columns;
    data.Z.resize(static_cast<Eigen::Index>(train.size()), static_cast<Eigen::Index>(columns.size()));
    data.u.resize(static_cast<Eigen::Index>(train.size()));
    data.y.resize(train.size());
    for (std::size_t i = 0; i < train.size(); ++i) {
        data.y[i] = y[train[i]];
        data.u(static_cast<Eigen::Index>(i)) = u[train[i]];
    }

    int max_classes = 0;
    for (const auto* c : suite) max_classes = std::max(max_classes, c->class_count());
    std::vector<bool> present_all(static_cast<std::size_t>(max_classes), false);
    for (NodeId v : train)
        if (labels[v] && *labels[v] >= 0 && *labels[v] < max_classes) present_all[static_cast<std::size_t>(*labels[v])] = true;

    for (int j = 0; j < folds; ++j) {
        std::vector<NodeId> fit_nodes, held_nodes;
        std::vector<std::size_t> held_rows;
        for (std::size_t i = 0; i < train.size(); ++i) {
            if (fold[i] == j) {
                held_nodes.push_back(train[i]);
                held_rows.push_back(i);
            } else {
                fit_nodes.push_back(train[i]);
            }
        }
        std::vector<bool> present(present_all.size(), false);
        for (NodeId v : fit_nodes)
            if (labels[v] && *labels[v] >= 0 && *labels[v] < max_classes) present[static_cast<std::size_t>(*labels[v])] = true;
        std::vector<std::vector<ClassDistribution>> preds;
        for (const auto* c : suite) {
            if (c->needs_every_class() && present != present_all)
                throw InvalidArgument("fold " + std::to_string(j) + " lacks a class for '" + c->name() +
                                      "'; use fewer folds or a larger training set");
            preds.push_back(c->fit_predict(fit_nodes, held_nodes, derive_seed(seed, static_cast<std::uint64_t>(j))));
        }
        for (std::size_t k = 0; k < held_rows.size(); ++k)
            detail::fill_level1_row(data.Z, static_cast<Eigen::Index>(held_rows[k]), suite, preds, k);
    }
    return data;
}

/// Level-1 rows for `targets` from classifiers trained on all of `train`.
inline Level1Dataset predict_level1(std::span<const Level0Classifier* const> suite, std::span<const NodeId> train,
                                    std::span<const NodeId> targets, std::span<const int> y, std::span<const double> u,
                                    std::uint64_t seed) {
    Level1Dataset data;
    data.columns = detail::level1_columns(suite);
    data.Z.resize(static_cast<Eigen::Index>(targets.size()), static_cast<Eigen::Index>(data.columns.size()));
    data.u.resize(static_cast<Eigen::Index>(targets.size()));
    for (std::size_t i = 0; i < targets.size(); ++i) {
        data.y.push_back(y[targets[i]]);
        data.u(static_cast<Eigen::Index>(i)) = u[targets[i]];
    }
    std::vector<std::vector<ClassDistribution>> preds;
    for (const auto* c : suite) preds.push_back(c->fit_predict(train, targets, seed));
    for (std::size_t i = 0; i < targets.size(); ++i)
        detail::fill_level1_row(data.Z, static_cast<Eigen::Index>(i), suite, preds, i);
    return data;
}

// ---------------------------------------------------------------------------
// Cross-validation configuration

inline std::vector<double> log_grid(double lo, double hi, int points) {
    if (points < 1 || !(lo > 0.0) || !(hi >= lo)) throw InvalidArgument("invalid log grid");
    std::vector<double> g;
    for (int i = 0; i < points; ++i) {
        const double t = points == 1 ? 0.0 : static_cast<double>(i) / (points - 1);
        g.push_back(std::pow(10.0, std::log10(lo) + t * (std::log10(hi) - std::log10(lo))));
    }
    return g;
}

struct FitConfig {
    /// For dynamic fits the grid refers to the covariate rescaled to [0, 1]
    /// when `unit_scale_grid` is set; see lambda_in_u_units.
    std::vector<double> lambda_grid = log_grid(1e-4, 1e4, 21);
    bool unit_scale_grid = true;
    int folds = 10;
    NewtonOptions newton{};
    std::uint64_t seed = 0; ///< fold assignment
};

struct GridScore {
    double value;
    double score; ///< summed held-out negative log-likelihood; +inf if a fold failed
};

struct GridSelection {
    double best = 0.0;
    std::vector<GridScore> scores; ///< in grid order
};

namespace detail {

inline constexpr double tie_tolerance = 1e-9;

inline double heldout_nll(const Eigen::MatrixXd& X, const Eigen::VectorXd& y, const Eigen::VectorXd& coef) {
    return logistic_nll(X, y, coef);
}

// Minimizer of score; near-ties (relative 1e-9) resolve to the larger value.
inline double pick_best(const std::vector<GridScore>& scores) {
    double best_score = std::numeric_limits<double>::infinity();
    for (const auto& s : scores) best_score = std::min(best_score, s.score);
    if (!std::isfinite(best_score)) throw FitError("every grid point failed during cross-validation");
    double best = -std::numeric_limits<double>::infinity();
    for (const auto& s : scores)
        if (s.score <= best_score + tie_tolerance * std::max(1.0, std::abs(best_score))) best = std::max(best, s.value);
    return best;
}

template <class Fit, class Score>
GridSelection cross_validate(std::size_t n, const std::vector<int>& y, const std::vector<double>& grid, const FitConfig& cfg,
                             Fit&& fit_fold, Score&& score_fold) {
    if (grid.empty()) throw InvalidArgument("cross-validation grid is empty");
    const auto fold = make_folds(n, cfg.folds, cfg.seed);
    std::vector<std::vector<std::size_t>> train_idx(static_cast<std::size_t>(cfg.folds)), test_idx(static_cast<std::size_t>(cfg.folds));
    for (std::size_t i = 0; i < n; ++i)
        for (int k = 0; k < cfg.folds; ++k) (fold[i] == k ? test_idx : train_idx)[static_cast<std::size_t>(k)].push_back(i);
    for (const auto& idx : train_idx) {
        bool pos = false, neg = false;
        for (std::size_t i : idx) (y[i] ? pos : neg) = true;
        if (!pos || !neg) throw InvalidArgument("a cross-validation training fold contains a single class");
    }

    // Largest value first so each fold warm-starts from a smoother neighbour.
    std::vector<std::size_t> order(grid.size());
    std::iota(order.begin(), order.end(), std::size_t{0});
    std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return grid[a] > grid[b]; });

    GridSelection sel;
    sel.scores.resize(grid.size());
    std::vector<std::optional<Eigen::VectorXd>> warm(static_cast<std::size_t>(cfg.folds));
    for (std::size_t gi : order) {
        double total = 0.0;
        for (int k = 0; k < cfg.folds && std::isfinite(total); ++k) {
            try {
                Eigen::VectorXd coef = fit_fold(train_idx[static_cast<std::size_t>(k)], grid[gi], warm[static_cast<std::size_t>(k)]);
                total += score_fold(test_idx[static_cast<std::size_t>(k)], coef);
                warm[static_cast<std::size_t>(k)] = std::move(coef);
            } catch (const FitError&) {
                total = std::numeric_limits<double>::infinity();
            }
        }
        sel.scores[gi] = {grid[gi], total};
    }
    sel.best = pick_best(sel.scores);
    return sel;
}

} // namespace detail

// ---------------------------------------------------------------------------
// Dynamic (varying-coefficient) stacking

/// logit P(y = 1) = beta_0 + sum_j Z_j beta_j(u), beta_j(u) = sum_k eta_jk B_k(u).
struct DynamicStackModel {
    SplineBasis basis;
    double lambda = 0.0;
    std::size_t p = 0;
    Eigen::VectorXd coef; ///< (beta_0, eta_11, ..., eta_1K, ..., eta_pK)
    std::vector<std::string> columns;
    NewtonTrace trace;            ///< not serialized
    std::vector<std::string> warnings;

    double intercept() const { return coef(0); }
    std::size_t basis_size() const { return basis.size(); }

    Eigen::VectorXd eta(std::size_t j) const {
        const auto K = static_cast<Eigen::Index>(basis.size());
        return coef.segment(1 + static_cast<Eigen::Index>(j) * K, K);
    }
};

/// Design row (1, Z_1 B(u), ..., Z_p B(u)).
inline Eigen::VectorXd dynamic_design_row(const SplineBasis& basis, std::span<const double> z, double u) {
    const auto K = static_cast<Eigen::Index>(basis.size());
    const Eigen::VectorXd b = eval_basis(basis, u);
    Eigen::VectorXd x(1 + static_cast<Eigen::Index>(z.size()) * K);
    x(0) = 1.0;
    for (std::size_t j = 0; j < z.size(); ++j) x.segment(1 + static_cast<Eigen::Index>(j) * K, K) = z[j] * b;
    return x;
}

inline Eigen::MatrixXd dynamic_design(const Level1Dataset& data, const SplineBasis& basis) {
    const auto K = static_cast<Eigen::Index>(basis.size());
    const auto p = static_cast<Eigen::Index>(data.p());
    Eigen::MatrixXd X(static_cast<Eigen::Index>(data.rows()), 1 + p * K);
    for (Eigen::Index i = 0; i < X.rows(); ++i) {
        const Eigen::VectorXd b = eval_basis(basis, data.u(i));
        X(i, 0) = 1.0;
        for (Eigen::Index j = 0; j < p; ++j) X.block(i, 1 + j * K, 1, K) = data.Z(i, j) * b.transpose();
    }
    return X;
}

/// Roughness matrix H of the dynamic objective (curvature in u units).
inline Eigen::MatrixXd dynamic_roughness(const SplineBasis& basis, std::size_t p) {
    return assemble_block_penalty(curvature_penalty(basis), p);
}

/// Converts a grid value given for the covariate rescaled to [0, 1] into a
/// lambda in u units. The curvature integral in u units is width^-3 times the
/// one on [0, 1], so the same penalty needs lambda * width^3.
inline double lambda_in_u_units(const SplineBasis& basis, double unit_lambda) {
    const double width = basis.hi() - basis.lo();
    return unit_lambda * width * width * width;
}

/// Penalty matrix P = lambda * H for the dynamic objective.
inline Eigen::MatrixXd dynamic_penalty(const SplineBasis& basis, std::size_t p, double lambda) {
    return lambda * dynamic_roughness(basis, p);
}

/// Basis spanning the covariate range of `data` (uniform interior knots).
inline SplineBasis basis_for(const Level1Dataset& data, int interior_knots = 6, int degree = 3) {
    if (data.rows() == 0) throw InvalidArgument("cannot place knots on an empty dataset");
    double lo = data.u.minCoeff(), hi = data.u.maxCoeff();
    if (!(hi > lo)) hi = lo + 1.0;
    return make_basis(lo, hi, interior_knots, degree);
}

namespace detail {

inline DynamicStackModel fit_dynamic_design(const Eigen::MatrixXd& X, const Eigen::VectorXd& y, const Eigen::MatrixXd& H,
                                            double lambda, const SplineBasis& basis, const Level1Dataset& data,
                                            const NewtonOptions& opt, std::optional<Eigen::VectorXd> start) {
    if (!(lambda >= 0.0) || !std::isfinite(lambda)) throw InvalidArgument("lambda must be finite and nonnegative");
    DynamicStackModel m;
    m.basis = basis;
    m.lambda = lambda;
    m.p = data.p();
    m.columns = data.columns;
    if (data.rows() < static_cast<std::size_t>(X.cols()))
        m.warnings.push_back("fewer observations (" + std::to_string(data.rows()) + ") than coefficients (" +
                             std::to_string(X.cols()) + ")");
    auto fit = fit_quadratic_logistic(X, y, lambda * H, opt, std::move(start));
    if (!fit.coef.allFinite()) throw FitError("non-finite dynamic stacking coefficients");
    m.coef = std::move(fit.coef);
    m.trace = std::move(fit.trace);
    return m;
}

} // namespace detail

/// Minimizes -loglik(eta*) + lambda eta*' H eta* by damped Newton.
inline DynamicStackModel fit_dynamic(const Level1Dataset& data, double lambda, const SplineBasis& basis,
                                     const NewtonOptions& opt = {}, std::optional<Eigen::VectorXd> start = std::nullopt) {
    data.validate();
    if (data.p() == 0) throw InvalidArgument("dynamic stacking needs at least one level-1 column");
    const double slack = 1e-12 * std::max(1.0, basis.hi() - basis.lo());
    if (data.rows() > 0 && (data.u.minCoeff() < basis.lo() - slack || data.u.maxCoeff() > basis.hi() + slack))
        throw InvalidArgument("spline domain does not cover the training covariate range");
    const Eigen::MatrixXd X = dynamic_design(data, basis);
    const Eigen::MatrixXd H = dynamic_roughness(basis, data.p());
    return detail::fit_dynamic_design(X, data.response(), H, lambda, basis, data, opt, std::move(start));
}

inline double predict_dynamic(const DynamicStackModel& model, std::span<const double> z, double u) {
    if (z.size() != model.p)
        throw InvalidArgument("expected " + std::to_string(model.p) + " level-1 inputs, got " + std::to_string(z.size()));
    return sigmoid(dynamic_design_row(model.basis, z, u).dot(model.coef));
}

inline Eigen::VectorXd predict_dynamic(const DynamicStackModel& model, const Level1Dataset& data) {
    if (data.p() != model.p) throw InvalidArgument("level-1 width does not match the model");
    const Eigen::VectorXd eta = dynamic_design(data, model.basis) * model.coef;
    return eta.unaryExpr([](double x) { return sigmoid(x); });
}

/// beta_j(u) on `grid`: rows are grid points, columns are j = 1..p.
inline Eigen::MatrixXd coefficient_curves(const DynamicStackModel& model, std::span<const double> grid) {
    Eigen::MatrixXd out(static_cast<Eigen::Index>(grid.size()), static_cast<Eigen::Index>(model.p));
    for (std::size_t g = 0; g < grid.size(); ++g) {
        const Eigen::VectorXd b = eval_basis(model.basis, grid[g]);
        for (std::size_t j = 0; j < model.p; ++j) out(static_cast<Eigen::Index>(g), static_cast<Eigen::Index>(j)) = b.dot(model.eta(j));
    }
    return out;
}

/// Evenly spaced grid over the model's covariate domain.
inline std::vector<double> covariate_grid(const SplineBasis& basis, std::size_t points) {
    std::vector<double> g;
    for (std::size_t i = 0; i < points; ++i)
        g.push_back(points == 1 ? basis.lo() : basis.lo() + (basis.hi() - basis.lo()) * static_cast<double>(i) / static_cast<double>(points - 1));
    return g;
}

/// J-fold CV over `cfg.lambda_grid`; score is the summed held-out negative
/// log-likelihood. Near-ties go to the larger lambda. Reported values are in
/// u units.
inline GridSelection select_lambda(const Level1Dataset& data, const FitConfig& cfg, const SplineBasis& basis) {
    data.validate();
    if (cfg.lambda_grid.empty()) throw InvalidArgument("lambda grid is empty");
    std::vector<double> grid = cfg.lambda_grid;
    if (cfg.unit_scale_grid)
        for (double& l : grid) l = lambda_in_u_units(basis, l);
    if (grid.size() == 1) return {grid.front(), {{grid.front(), std::numeric_limits<double>::quiet_NaN()}}};
    const Eigen::MatrixXd X = dynamic_design(data, basis);
    const Eigen::VectorXd y = data.response();
    const Eigen::MatrixXd H = dynamic_roughness(basis, data.p());
    auto rows_of = [](const Eigen::MatrixXd& M, const std::vector<std::size_t>& idx) {
        Eigen::MatrixXd S(static_cast<Eigen::Index>(idx.size()), M.cols());
        for (std::size_t k = 0; k < idx.size(); ++k) S.row(static_cast<Eigen::Index>(k)) = M.row(static_cast<Eigen::Index>(idx[k]));
        return S;
    };
    auto elems_of = [](const Eigen::VectorXd& v, const std::vector<std::size_t>& idx) {
        Eigen::VectorXd s(static_cast<Eigen::Index>(idx.size()));
        for (std::size_t k = 0; k < idx.size(); ++k) s(static_cast<Eigen::Index>(k)) = v(static_cast<Eigen::Index>(idx[k]));
        return s;
    };
    return detail::cross_validate(
        data.rows(), data.y, grid, cfg,
        [&](const std::vector<std::size_t>& idx, double lambda, const std::optional<Eigen::VectorXd>& warm) {
            return fit_quadratic_logistic(rows_of(X, idx), elems_of(y, idx), lambda * H, cfg.newton, warm).coef;
        },
        [&](const std::vector<std::size_t>& idx, const Eigen::VectorXd& coef) {
            return detail::heldout_nll(rows_of(X, idx), elems_of(y, idx), coef);
        });
}

/// select_lambda followed by a refit on all of `data` at the chosen lambda.
inline DynamicStackModel fit_dynamic_cv(const Level1Dataset& data, const FitConfig& cfg, const SplineBasis& basis,
                                        GridSelection* report = nullptr) {
    auto sel = select_lambda(data, cfg, basis);
    auto model = fit_dynamic(data, sel.best, basis, cfg.newton);
    if (report) *report = std::move(sel);
    return model;
}

// ---------------------------------------------------------------------------
// Static stacking baselines

/// m1: (1, Z); m2: (1, Z, u); m3: (1, Z, u, Z u).
enum class StaticDesign { m1, m2, m3 };
enum class Penalty { none, ridge, lasso };

inline std::string_view to_string(StaticDesign d) {
    switch (d) {
    case StaticDesign::m1: return "m1";
    case StaticDesign::m2: return "m2";
    case StaticDesign::m3: return "m3";
    }
    return "?";
}

inline std::string_view to_string(Penalty p) {
    switch (p) {
    case Penalty::none: return "none";
    case Penalty::ridge: return "ridge";
    case Penalty::lasso: return "lasso";
    }
    return "?";
}

inline StaticDesign parse_static_design(std::string_view s) {
    if (s == "m1") return StaticDesign::m1;
    if (s == "m2") return StaticDesign::m2;
    if (s == "m3") return StaticDesign::m3;
    throw InvalidArgument("unknown static design '" + std::string(s) + "'");
}

inline Penalty parse_penalty(std::string_view s) {
    if (s == "none" || s == "logistic") return Penalty::none;
    if (s == "ridge") return Penalty::ridge;
    if (s == "lasso") return Penalty::lasso;
    throw InvalidArgument("unknown penalty '" + std::string(s) + "'");
}

struct StaticStackModel {
    StaticDesign design = StaticDesign::m1;
    Penalty penalty = Penalty::none;
    double strength = 0.0;
    std::size_t p = 0;
    Eigen::VectorXd coef;
    std::vector<std::string> columns;
};

inline std::size_t static_width(StaticDesign d, std::size_t p) {
    switch (d) {
    case StaticDesign::m1: return 1 + p;
    case StaticDesign::m2: return 2 + p;
    case StaticDesign::m3: return 2 + 2 * p;
    }
    return 0;
}

inline Eigen::VectorXd static_design_row(StaticDesign d, std::span<const double> z, double u) {
    const std::size_t p = z.size();
    Eigen::VectorXd x(static_cast<Eigen::Index>(static_width(d, p)));
    x(0) = 1.0;
    for (std::size_t j = 0; j < p; ++j) x(static_cast<Eigen::Index>(1 + j)) = z[j];
    if (d != StaticDesign::m1) x(static_cast<Eigen::Index>(1 + p)) = u;
    if (d == StaticDesign::m3)
        for (std::size_t j = 0; j < p; ++j) x(static_cast<Eigen::Index>(2 + p + j)) = z[j] * u;
    return x;
}

inline Eigen::MatrixXd static_design(const Level1Dataset& data, StaticDesign d) {
    const std::size_t p = data.p();
    Eigen::MatrixXd X(static_cast<Eigen::Index>(data.rows()), static_cast<Eigen::Index>(static_width(d, p)));
    std::vector<double> z(p);
    for (Eigen::Index i = 0; i < X.rows(); ++i) {
        for (std::size_t j = 0; j < p; ++j) z[j] = data.Z(i, static_cast<Eigen::Index>(j));
        X.row(i) = static_design_row(d, z, data.u(i)).transpose();
    }
    return X;
}

namespace detail {

inline Eigen::MatrixXd ridge_matrix(Eigen::Index width, double strength) {
    Eigen::MatrixXd P = Eigen::MatrixXd::Zero(width, width);
    P.diagonal().tail(width - 1).setConstant(strength);
    return P;
}

inline Eigen::VectorXd fit_static_design(const Eigen::MatrixXd& X, const Eigen::VectorXd& y, Penalty penalty, double strength,
                                         const NewtonOptions& opt, std::optional<Eigen::VectorXd> start) {
    switch (penalty) {
    case Penalty::none:
        return fit_quadratic_logistic(X, y, Eigen::MatrixXd::Zero(X.cols(), X.cols()), opt, std::move(start)).coef;
    case Penalty::ridge:
        return fit_quadratic_logistic(X, y, ridge_matrix(X.cols(), strength), opt, std::move(start)).coef;
    case Penalty::lasso:
        return fit_lasso_logistic(X, y, strength, opt, std::move(start)).coef;
    }
    throw InvalidArgument("unknown penalty");
}

} // namespace detail

/// Static logistic stacking at a fixed strength; ridge adds
/// strength * |coef_{1:}|^2 and lasso strength * |coef_{1:}|_1.
inline StaticStackModel fit_static(const Level1Dataset& data, StaticDesign design, Penalty penalty, double strength,
                                   const NewtonOptions& opt = {}) {
    data.validate();
    if (!(strength >= 0.0) || !std::isfinite(strength)) throw InvalidArgument("penalty strength must be finite and nonnegative");
    StaticStackModel m;
    m.design = design;
    m.penalty = penalty;
    m.strength = penalty == Penalty::none ? 0.0 : strength;
    m.p = data.p();
    m.columns = data.columns;
    m.coef = detail::fit_static_design(static_design(data, design), data.response(), penalty, m.strength, opt, std::nullopt);
    return m;
}

/// As fit_static with the strength chosen by CV over `cfg.lambda_grid`
/// (penalty none ignores the grid).
inline StaticStackModel fit_static_cv(const Level1Dataset& data, StaticDesign design, Penalty penalty, const FitConfig& cfg,
                                      GridSelection* report = nullptr) {
    if (penalty == Penalty::none) return fit_static(data, design, penalty, 0.0, cfg.newton);
    data.validate();
    const Eigen::MatrixXd X = static_design(data, design);
    const Eigen::VectorXd y = data.response();
    auto rows_of = [&](const std::vector<std::size_t>& idx) {
        Eigen::MatrixXd S(static_cast<Eigen::Index>(idx.size()), X.cols());
        Eigen::VectorXd t(static_cast<Eigen::Index>(idx.size()));
        for (std::size_t k = 0; k < idx.size(); ++k) {
            S.row(static_cast<Eigen::Index>(k)) = X.row(static_cast<Eigen::Index>(idx[k]));
            t(static_cast<Eigen::Index>(k)) = y(static_cast<Eigen::Index>(idx[k]));
        }
        return std::pair{S, t};
    };
    auto sel = detail::cross_validate(
        data.rows(), data.y, cfg.lambda_grid, cfg,
        [&](const std::vector<std::size_t>& idx, double s, const std::optional<Eigen::VectorXd>& warm) {
            auto [S, t] = rows_of(idx);
            return detail::fit_static_design(S, t, penalty, s, cfg.newton, warm);
        },
        [&](const std::vector<std::size_t>& idx, const Eigen::VectorXd& coef) {
            auto [S, t] = rows_of(idx);
            return detail::heldout_nll(S, t, coef);
        });
    auto model = fit_static(data, design, penalty, sel.best, cfg.newton);
    if (report) *report = std::move(sel);
    return model;
}

inline double predict_static(const StaticStackModel& model, std::span<const double> z, double u) {
    if (z.size() != model.p)
        throw InvalidArgument("expected " + std::to_string(model.p) + " level-1 inputs, got " + std::to_string(z.size()));
    return sigmoid(static_design_row(model.design, z, u).dot(model.coef));
}

/// Rejects a query whose design differs from the model's.
inline double predict_static(const StaticStackModel& model, StaticDesign query_design, std::span<const double> z, double u) {
    if (query_design != model.design)
        throw InvalidArgument("design mismatch: model is " + std::string(to_string(model.design)) + ", query is " +
                              std::string(to_string(query_design)));
    return predict_static(model, z, u);
}

inline Eigen::VectorXd predict_static(const StaticStackModel& model, const Level1Dataset& data) {
    if (data.p() != model.p) throw InvalidArgument("level-1 width does not match the model");
    const Eigen::VectorXd eta = static_design(data, model.design) * model.coef;
    return eta.unaryExpr([](double x) { return sigmoid(x); });
}

} // namespace dynstack
