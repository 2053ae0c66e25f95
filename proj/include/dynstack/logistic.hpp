#pragma once

// Penalized logistic regression on a dense design. The objective is the
// negative Bernoulli log-likelihood (summed, not averaged) plus either a
// quadratic form theta' P theta or an L1 norm on every coefficient except
// the first (the intercept column).

#include "dynstack/error.hpp"

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <limits>
#include <optional>
#include <string>
#include <vector>

namespace dynstack {

struct NewtonOptions {
    double tolerance = 1e-8; ///< relative objective change
    int max_iterations = 100;
    double jitter = 1e-10;   ///< added to the Hessian diagonal before solving
    double gradient_tolerance = 1e-6; ///< on |grad|_inf / (1 + |objective|)
};

struct NewtonTrace {
    std::vector<double> objective; ///< value at the start and after every accepted step
    int iterations = 0;
    double gradient_inf_norm = 0.0;
    bool stalled = false; ///< stopped because no step could decrease the objective
};

struct LogisticFit {
    Eigen::VectorXd coef;
    NewtonTrace trace;
};

inline double sigmoid(double x) {
    if (x >= 0.0) return 1.0 / (1.0 + std::exp(-x));
    const double e = std::exp(x);
    return e / (1.0 + e);
}

/// log(1 + exp(x)) without overflow.
inline double softplus(double x) { return std::max(x, 0.0) + std::log1p(std::exp(-std::abs(x))); }

/// Negative log-likelihood: sum_i softplus(x_i theta) - y_i x_i theta.
inline double logistic_nll(const Eigen::MatrixXd& X, const Eigen::VectorXd& y, const Eigen::VectorXd& theta) {
    const Eigen::VectorXd eta = X * theta;
    double s = 0.0;
    for (Eigen::Index i = 0; i < eta.size(); ++i) s += softplus(eta(i)) - y(i) * eta(i);
    return s;
}

inline double quadratic_objective(const Eigen::MatrixXd& X, const Eigen::VectorXd& y, const Eigen::MatrixXd& P,
                                  const Eigen::VectorXd& theta) {
    return logistic_nll(X, y, theta) + theta.dot(P * theta);
}

inline Eigen::VectorXd quadratic_gradient(const Eigen::MatrixXd& X, const Eigen::VectorXd& y, const Eigen::MatrixXd& P,
                                          const Eigen::VectorXd& theta) {
    const Eigen::VectorXd eta = X * theta;
    Eigen::VectorXd resid(eta.size());
    for (Eigen::Index i = 0; i < eta.size(); ++i) resid(i) = sigmoid(eta(i)) - y(i);
    return X.transpose() * resid + 2.0 * (P * theta);
}

namespace detail {

inline void require_shapes(const Eigen::MatrixXd& X, const Eigen::VectorXd& y) {
    if (X.rows() != y.size()) throw InvalidArgument("design and response lengths differ");
    if (X.rows() == 0) throw InvalidArgument("cannot fit on an empty dataset");
    for (Eigen::Index i = 0; i < y.size(); ++i)
        if (y(i) != 0.0 && y(i) != 1.0) throw InvalidArgument("response must be 0/1");
}

// X' diag(w) X, exploiting symmetry.
inline Eigen::MatrixXd weighted_gram(const Eigen::MatrixXd& X, const Eigen::VectorXd& w) {
    const Eigen::MatrixXd Xw = X.array().colwise() * w.array().sqrt();
    Eigen::MatrixXd G = Eigen::MatrixXd::Zero(X.cols(), X.cols());
    G.selfadjointView<Eigen::Lower>().rankUpdate(Xw.transpose());
    return G.selfadjointView<Eigen::Lower>();
}

inline constexpr double divergence_limit = 1e8;

} // namespace detail

/// Minimizes -loglik(theta) + theta' P theta by damped Newton. Each step
/// solves (X'WX + 2P + jitter I) d = -grad and is halved until the objective
/// does not increase, so the recorded objective sequence is non-increasing.
inline LogisticFit fit_quadratic_logistic(const Eigen::MatrixXd& X, const Eigen::VectorXd& y, const Eigen::MatrixXd& P,
                                          const NewtonOptions& opt = {},
                                          std::optional<Eigen::VectorXd> start = std::nullopt) {
    detail::require_shapes(X, y);
    const Eigen::Index q = X.cols();
    if (P.rows() != q || P.cols() != q) throw InvalidArgument("penalty matrix has the wrong shape");

    LogisticFit fit;
    fit.coef = (start && start->size() == q) ? *start : Eigen::VectorXd::Zero(q);
    double f = quadratic_objective(X, y, P, fit.coef);
    if (!std::isfinite(f)) throw FitError("non-finite objective at the starting point");
    fit.trace.objective.push_back(f);

    Eigen::VectorXd mu(X.rows()), w(X.rows());
    for (int it = 0; it < opt.max_iterations; ++it) {
        const Eigen::VectorXd eta = X * fit.coef;
        for (Eigen::Index i = 0; i < eta.size(); ++i) {
            mu(i) = sigmoid(eta(i));
            w(i) = mu(i) * (1.0 - mu(i));
        }
        const Eigen::VectorXd grad = X.transpose() * (mu - y) + 2.0 * (P * fit.coef);
        fit.trace.gradient_inf_norm = grad.lpNorm<Eigen::Infinity>();
        if (fit.trace.gradient_inf_norm == 0.0) return fit;

        Eigen::MatrixXd hess = detail::weighted_gram(X, w) + 2.0 * P;
        hess.diagonal().array() += opt.jitter;
        Eigen::LDLT<Eigen::MatrixXd> ldlt(hess);
        Eigen::VectorXd step = -ldlt.solve(grad);
        if (ldlt.info() != Eigen::Success || !step.allFinite()) {
            hess.diagonal().array() += 1e-6 * (1.0 + hess.diagonal().cwiseAbs().maxCoeff());
            step = -hess.ldlt().solve(grad);
            if (!step.allFinite()) throw FitError("Newton system could not be solved");
        }

        double t = 1.0;
        double f_new = std::numeric_limits<double>::infinity();
        Eigen::VectorXd trial;
        for (int halvings = 0; halvings < 60; ++halvings, t *= 0.5) {
            trial = fit.coef + t * step;
            f_new = quadratic_objective(X, y, P, trial);
            if (std::isfinite(f_new) && f_new <= f) break;
        }
        ++fit.trace.iterations;
        if (!std::isfinite(f_new)) throw FitError("non-finite objective during line search");
        if (f_new > f) {
            fit.trace.stalled = true;
            return fit;
        }
        fit.coef = trial;
        const double rel = std::abs(f - f_new) / std::max(std::abs(f), std::numeric_limits<double>::min());
        f = f_new;
        fit.trace.objective.push_back(f);

        if (fit.coef.lpNorm<Eigen::Infinity>() > detail::divergence_limit)
            throw FitError("coefficients diverge; the data may be separable (use a ridge penalty)");
        if (rel < opt.tolerance) {
            fit.trace.gradient_inf_norm = quadratic_gradient(X, y, P, fit.coef).lpNorm<Eigen::Infinity>();
            if (fit.trace.gradient_inf_norm <= opt.gradient_tolerance * (1.0 + std::abs(f)) || rel == 0.0) return fit;
        }
    }
    throw FitError("Newton iteration did not converge in " + std::to_string(opt.max_iterations) +
                   " iterations; the data may be separable (use a ridge penalty)");
}

/// -loglik(theta) + strength * sum_{j>=1} |theta_j|
inline double lasso_objective(const Eigen::MatrixXd& X, const Eigen::VectorXd& y, double strength,
                              const Eigen::VectorXd& theta) {
    return logistic_nll(X, y, theta) + strength * theta.tail(theta.size() - 1).lpNorm<1>();
}

inline double soft_threshold(double x, double t) {
    if (x > t) return x - t;
    if (x < -t) return x + t;
    return 0.0;
}

/// Largest violation of the lasso optimality conditions at theta: the
/// intercept gradient, |g_j + strength sign(theta_j)| on active coordinates
/// and max(|g_j| - strength, 0) on zero ones.
inline double lasso_kkt_violation(const Eigen::VectorXd& grad, const Eigen::VectorXd& theta, double strength) {
    double v = std::abs(grad(0));
    for (Eigen::Index j = 1; j < theta.size(); ++j) {
        if (theta(j) != 0.0) v = std::max(v, std::abs(grad(j) + strength * (theta(j) > 0 ? 1.0 : -1.0)));
        else v = std::max(v, std::abs(grad(j)) - strength);
    }
    return v;
}

/// L1-penalized logistic regression by proximal Newton: each outer step
/// minimizes the local quadratic model plus the L1 term by cyclic coordinate
/// descent, then backtracks on the true objective. Converged when the KKT
/// violation drops below 1e-8 (or stops improving below 1e-6).
inline LogisticFit fit_lasso_logistic(const Eigen::MatrixXd& X, const Eigen::VectorXd& y, double strength,
                                      const NewtonOptions& opt = {},
                                      std::optional<Eigen::VectorXd> start = std::nullopt) {
    detail::require_shapes(X, y);
    if (!(strength >= 0.0)) throw InvalidArgument("lasso strength must be nonnegative");
    const Eigen::Index q = X.cols();
    constexpr double kkt_tolerance = 1e-8;
    constexpr double kkt_fallback = 1e-6;

    LogisticFit fit;
    fit.coef = (start && start->size() == q) ? *start : Eigen::VectorXd::Zero(q);
    double f = lasso_objective(X, y, strength, fit.coef);
    fit.trace.objective.push_back(f);

    Eigen::VectorXd mu(X.rows()), w(X.rows());
    const int max_outer = std::max(opt.max_iterations, 200);
    double kkt = std::numeric_limits<double>::infinity();
    for (int it = 0; it < max_outer; ++it) {
        const Eigen::VectorXd eta = X * fit.coef;
        for (Eigen::Index i = 0; i < eta.size(); ++i) {
            mu(i) = sigmoid(eta(i));
            w(i) = mu(i) * (1.0 - mu(i));
        }
        const Eigen::VectorXd grad = X.transpose() * (mu - y);
        kkt = lasso_kkt_violation(grad, fit.coef, strength);
        fit.trace.gradient_inf_norm = kkt;
        if (kkt <= kkt_tolerance) return fit;

        Eigen::MatrixXd hess = detail::weighted_gram(X, w);
        hess.diagonal().array() += opt.jitter;

        // Coordinate descent on g'(b - theta) + (b - theta)' H (b - theta) / 2 + strength |b_{1:}|_1.
        Eigen::VectorXd b = fit.coef;
        Eigen::VectorXd hd = Eigen::VectorXd::Zero(q); // H (b - theta)
        for (int sweep = 0; sweep < 10000; ++sweep) {
            double max_change = 0.0;
            for (Eigen::Index j = 0; j < q; ++j) {
                const double a = hess(j, j);
                const double partial = grad(j) + hd(j);
                const double bj = b(j);
                const double nb = (j == 0) ? bj - partial / a : soft_threshold(a * bj - partial, strength) / a;
                const double delta = nb - bj;
                if (delta != 0.0) {
                    b(j) = nb;
                    hd += delta * hess.col(j);
                    max_change = std::max(max_change, std::abs(delta) * a);
                }
            }
            if (max_change < 1e-3 * kkt_tolerance) break;
        }

        const Eigen::VectorXd step = b - fit.coef;
        ++fit.trace.iterations;
        double t = 1.0;
        double f_new = std::numeric_limits<double>::infinity();
        Eigen::VectorXd trial;
        // Near the optimum objective changes fall below rounding; such steps
        // still reduce the KKT violation and are accepted.
        const double noise = 8.0 * std::numeric_limits<double>::epsilon() * std::abs(f);
        for (int halvings = 0; halvings < 60; ++halvings, t *= 0.5) {
            trial = fit.coef + t * step;
            f_new = lasso_objective(X, y, strength, trial);
            if (std::isfinite(f_new) && f_new <= f + noise) break;
        }
        if (!std::isfinite(f_new)) throw FitError("non-finite objective during lasso line search");
        if (f_new > f && f_new <= f + noise) f_new = f;
        if (f_new > f || trial == fit.coef) {
            fit.trace.stalled = true;
            if (kkt <= kkt_fallback) return fit;
            break;
        }
        fit.coef = trial;
        f = f_new;
        fit.trace.objective.push_back(f);
        if (fit.coef.lpNorm<Eigen::Infinity>() > detail::divergence_limit)
            throw FitError("coefficients diverge; the data may be separable (use a ridge penalty)");
    }
    if (kkt <= kkt_fallback) return fit;
    throw FitError("lasso proximal Newton did not converge (KKT violation " + std::to_string(kkt) + ")");
}

} // namespace dynstack
