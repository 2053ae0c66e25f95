#pragma once

#include "dynstack/error.hpp"

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <numbers>
#include <span>
#include <utility>
#include <vector>

namespace dynstack {

/// Clamped B-spline basis on [lo, hi]: boundary knots repeated degree + 1
/// times, K = interior knots + degree + 1 functions.
class SplineBasis {
public:
    SplineBasis() = default;

    /// Validates a full knot vector. Interior knots must lie strictly inside
    /// (front, back) and be nondecreasing.
    SplineBasis(int degree, std::vector<double> knots) : degree_(degree), knots_(std::move(knots)) {
        if (degree_ < 0) throw InvalidArgument("spline degree must be nonnegative");
        const auto d = static_cast<std::size_t>(degree_);
        if (knots_.size() < 2 * (d + 1)) throw InvalidArgument("knot vector too short for the degree");
        if (!std::is_sorted(knots_.begin(), knots_.end())) throw InvalidArgument("knots must be nondecreasing");
        for (double k : knots_)
            if (!std::isfinite(k)) throw InvalidArgument("knots must be finite");
        if (!(lo() < hi())) throw InvalidArgument("spline domain must satisfy lo < hi");
        for (std::size_t i = 0; i <= d; ++i) {
            if (knots_[i] != lo() || knots_[knots_.size() - 1 - i] != hi())
                throw InvalidArgument("knot vector is not clamped");
        }
        for (std::size_t i = d + 1; i + d + 1 < knots_.size(); ++i) {
            if (!(knots_[i] > lo() && knots_[i] < hi())) throw InvalidArgument("interior knot outside the open domain");
        }
    }

    int degree() const noexcept { return degree_; }
    const std::vector<double>& knots() const noexcept { return knots_; }
    double lo() const { return knots_.front(); }
    double hi() const { return knots_.back(); }
    std::size_t size() const noexcept { return knots_.size() - static_cast<std::size_t>(degree_) - 1; }
    std::size_t interior_knot_count() const noexcept { return size() - static_cast<std::size_t>(degree_) - 1; }

    double clamp(double u) const { return std::clamp(u, lo(), hi()); }

    /// Knot span s with knots[s] <= u < knots[s+1] (last nonempty span at hi).
    std::size_t span_index(double u) const {
        const std::size_t K = size();
        if (u >= knots_[K]) {
            std::size_t s = K - 1;
            while (s > 0 && knots_[s] == knots_[s + 1]) --s;
            return s;
        }
        const auto it = std::upper_bound(knots_.begin(), knots_.end(), u);
        return static_cast<std::size_t>(it - knots_.begin()) - 1;
    }

    bool operator==(const SplineBasis&) const = default;

private:
    int degree_ = 0;
    std::vector<double> knots_;
};

/// Uniform interior knots over [lo, hi].
inline SplineBasis make_basis(double lo, double hi, int interior_knots, int degree = 3) {
    if (!(lo < hi) || !std::isfinite(lo) || !std::isfinite(hi)) throw InvalidArgument("spline domain must satisfy lo < hi");
    if (interior_knots < 0) throw InvalidArgument("interior knot count must be nonnegative");
    if (degree < 0) throw InvalidArgument("spline degree must be nonnegative");
    std::vector<double> knots(static_cast<std::size_t>(degree + 1), lo);
    for (int i = 1; i <= interior_knots; ++i)
        knots.push_back(lo + (hi - lo) * static_cast<double>(i) / static_cast<double>(interior_knots + 1));
    knots.insert(knots.end(), static_cast<std::size_t>(degree + 1), hi);
    return SplineBasis(degree, std::move(knots));
}

/// Interior knots at empirical quantiles of `u`; coincident quantiles are
/// merged, so the basis may have fewer than `interior_knots` interior knots.
inline SplineBasis make_quantile_basis(std::span<const double> u, int interior_knots, int degree = 3) {
    if (u.empty()) throw InvalidArgument("quantile knots need covariate values");
    if (interior_knots < 0) throw InvalidArgument("interior knot count must be nonnegative");
    std::vector<double> sorted(u.begin(), u.end());
    std::sort(sorted.begin(), sorted.end());
    const double lo = sorted.front();
    const double hi = sorted.back();
    if (!(lo < hi)) throw InvalidArgument("spline domain must satisfy lo < hi");
    std::vector<double> knots(static_cast<std::size_t>(degree + 1), lo);
    for (int i = 1; i <= interior_knots; ++i) {
        const double pos = static_cast<double>(i) / (interior_knots + 1) * static_cast<double>(sorted.size() - 1);
        const auto k = static_cast<std::size_t>(pos);
        const double frac = pos - static_cast<double>(k);
        const double q = k + 1 < sorted.size() ? sorted[k] * (1 - frac) + sorted[k + 1] * frac : sorted[k];
        if (q > lo && q < hi && q > knots.back()) knots.push_back(q);
    }
    knots.insert(knots.end(), static_cast<std::size_t>(degree + 1), hi);
    return SplineBasis(degree, std::move(knots));
}

/// Nonzero basis functions and their derivatives at u (after clamping).
/// Row r holds the r-th derivative of B_{first}, ..., B_{first+degree}.
struct LocalBasis {
    std::size_t first = 0;
    Eigen::MatrixXd values;
};

/// Cox-de Boor triangle with derivatives up to `order`.
inline LocalBasis eval_local(const SplineBasis& basis, double u, int order = 0) {
    const int p = basis.degree();
    const auto& U = basis.knots();
    u = basis.clamp(u);
    const std::size_t s = basis.span_index(u);
    const auto P = static_cast<std::size_t>(p);

    Eigen::MatrixXd ndu(P + 1, P + 1);
    std::vector<double> left(P + 1), right(P + 1);
    ndu(0, 0) = 1.0;
    for (std::size_t j = 1; j <= P; ++j) {
        left[j] = u - U[s + 1 - j];
        right[j] = U[s + j] - u;
        double saved = 0.0;
        for (std::size_t r = 0; r < j; ++r) {
            ndu(j, r) = right[r + 1] + left[j - r];
            const double temp = ndu(r, j - 1) / ndu(j, r);
            ndu(r, j) = saved + right[r + 1] * temp;
            saved = left[j - r] * temp;
        }
        ndu(j, j) = saved;
    }

    const int n = std::max(0, order);
    LocalBasis out;
    out.first = s - P;
    out.values = Eigen::MatrixXd::Zero(n + 1, p + 1);
    for (int j = 0; j <= p; ++j) out.values(0, j) = ndu(j, p);

    Eigen::MatrixXd a(2, p + 1);
    for (int r = 0; r <= p; ++r) {
        int s1 = 0, s2 = 1;
        a.setZero();
        a(0, 0) = 1.0;
        for (int k = 1; k <= std::min(n, p); ++k) {
            double d = 0.0;
            const int rk = r - k, pk = p - k;
            if (r >= k) {
                a(s2, 0) = a(s1, 0) / ndu(pk + 1, rk);
                d = a(s2, 0) * ndu(rk, pk);
            }
            const int j1 = rk >= -1 ? 1 : -rk;
            const int j2 = (r - 1 <= pk) ? k - 1 : p - r;
            for (int j = j1; j <= j2; ++j) {
                a(s2, j) = (a(s1, j) - a(s1, j - 1)) / ndu(pk + 1, rk + j);
                d += a(s2, j) * ndu(rk + j, pk);
            }
            if (r <= pk) {
                a(s2, k) = -a(s1, k - 1) / ndu(pk + 1, r);
                d += a(s2, k) * ndu(r, pk);
            }
            out.values(k, r) = d;
            std::swap(s1, s2);
        }
    }
    double factor = p;
    for (int k = 1; k <= std::min(n, p); ++k) {
        out.values.row(k) *= factor;
        factor *= (p - k);
    }
    return out;
}

/// Row (B_1(u), ..., B_K(u)); u outside the domain is clamped to it.
inline Eigen::VectorXd eval_basis(const SplineBasis& basis, double u) {
    Eigen::VectorXd row = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(basis.size()));
    const auto local = eval_local(basis, u, 0);
    for (Eigen::Index j = 0; j < local.values.cols(); ++j) row(static_cast<Eigen::Index>(local.first) + j) = local.values(0, j);
    return row;
}

/// `order`-th derivative of every basis function at u (clamped).
inline Eigen::VectorXd eval_basis_derivative(const SplineBasis& basis, double u, int order) {
    Eigen::VectorXd row = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(basis.size()));
    if (order > basis.degree()) return row;
    const auto local = eval_local(basis, u, order);
    for (Eigen::Index j = 0; j < local.values.cols(); ++j)
        row(static_cast<Eigen::Index>(local.first) + j) = local.values(order, j);
    return row;
}

/// Gauss-Legendre nodes and weights on [-1, 1].
inline std::pair<std::vector<double>, std::vector<double>> gauss_legendre(int n) {
    if (n < 1) throw InvalidArgument("quadrature order must be positive");
    std::vector<double> x(static_cast<std::size_t>(n)), w(static_cast<std::size_t>(n));
    for (int i = 0; i < (n + 1) / 2; ++i) {
        double z = std::cos(std::numbers::pi * (i + 0.75) / (n + 0.5));
        double dp = 0.0;
        for (int iter = 0; iter < 100; ++iter) {
            double p0 = 1.0, p1 = 0.0;
            for (int k = 1; k <= n; ++k) {
                const double p2 = p1;
                p1 = p0;
                p0 = ((2.0 * k - 1.0) * z * p1 - (k - 1.0) * p2) / k;
            }
            dp = n * (z * p0 - p1) / (z * z - 1.0);
            const double dz = p0 / dp;
            z -= dz;
            if (std::abs(dz) < 1e-15) break;
        }
        const auto lo = static_cast<std::size_t>(i), hi = static_cast<std::size_t>(n - 1 - i);
        x[lo] = -z;
        x[hi] = z;
        w[lo] = w[hi] = 2.0 / ((1.0 - z * z) * dp * dp);
    }
    return {x, w};
}

/// Curvature penalty H(m, n) = integral of B_m''(x) B_n''(x) over the domain,
/// exact via Gauss-Legendre on each knot interval.
inline Eigen::MatrixXd curvature_penalty(const SplineBasis& basis) {
    const auto K = static_cast<Eigen::Index>(basis.size());
    Eigen::MatrixXd H = Eigen::MatrixXd::Zero(K, K);
    const int p = basis.degree();
    if (p < 2) return H;
    // B'' has degree p-2, so the integrand has degree 2p-4.
    const auto [nodes, weights] = gauss_legendre(std::max(1, p - 1));
    const auto& U = basis.knots();
    for (std::size_t i = 0; i + 1 < U.size(); ++i) {
        const double a = U[i], b = U[i + 1];
        if (!(b > a)) continue;
        const double half = 0.5 * (b - a), mid = 0.5 * (a + b);
        for (std::size_t q = 0; q < nodes.size(); ++q) {
            const auto local = eval_local(basis, mid + half * nodes[q], 2);
            const Eigen::VectorXd d2 = local.values.row(2).transpose();
            const auto f = static_cast<Eigen::Index>(local.first);
            H.block(f, f, p + 1, p + 1).noalias() += (weights[q] * half) * d2 * d2.transpose();
        }
    }
    return 0.5 * (H + H.transpose());
}

/// Block-diagonal penalty for (beta_0, eta_1, ..., eta_p): a zero scalar block
/// for the intercept followed by p copies of `block`.
inline Eigen::MatrixXd assemble_block_penalty(const Eigen::MatrixXd& block, std::size_t p) {
    if (p < 1) throw InvalidArgument("assembled penalty needs p >= 1");
    const Eigen::Index K = block.rows();
    const Eigen::Index n = 1 + static_cast<Eigen::Index>(p) * K;
    Eigen::MatrixXd H = Eigen::MatrixXd::Zero(n, n);
    for (std::size_t j = 0; j < p; ++j) {
        const Eigen::Index off = 1 + static_cast<Eigen::Index>(j) * K;
        H.block(off, off, K, K) = block;
    }
    return H;
}

} // namespace dynstack
