#pragma once

#include "fastbcd/types.hpp"

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <limits>

namespace fastbcd {

/// Median of three.
template <typename Scalar>
constexpr Scalar mid3(Scalar a, Scalar b, Scalar c) {
    return std::max(std::min(a, b), std::min(std::max(a, b), c));
}

/// Proximal map of kappa*|.|: u -> sign(u)*max(|u| - kappa, 0).
template <typename Scalar>
Scalar soft_threshold(Scalar u, Scalar kappa) {
    const Scalar t = std::abs(u) - kappa;
    return t > Scalar(0) ? std::copysign(t, u) : Scalar(0);
}

/// Scaled optimality violation of coordinate i:
///   -mid{(g - tau)/H_ii, x, (g + tau)/H_ii}.
/// Zero exactly at coordinates satisfying the optimality conditions.
template <typename Scalar>
Scalar phi_violation(Scalar x, Scalar g, Scalar h_ii, Scalar tau) {
    if (!(h_ii > Scalar(0)))
        throw AssumptionError("phi_violation: H_ii must be positive");
    return -mid3((g - tau) / h_ii, x, (g + tau) / h_ii);
}

/// First-order-only violation measure:
///   |g + tau| if x > 0, |g - tau| if x < 0,
///   max{0, -(g + tau), g - tau} if x = 0.
template <typename Scalar>
Scalar first_order_violation(Scalar x, Scalar g, Scalar tau) {
    if (x > Scalar(0)) return std::abs(g + tau);
    if (x < Scalar(0)) return std::abs(g - tau);
    return std::max({Scalar(0), -(g + tau), g - tau});
}

/// Residual of the optimality conditions at coordinate i:
///   |g + tau| if x > 0, |g - tau| if x < 0, max{0, |g| - tau} if x = 0.
template <typename Scalar>
Scalar kkt_violation(Scalar x, Scalar g, Scalar tau) {
    if (x > Scalar(0)) return std::abs(g + tau);
    if (x < Scalar(0)) return std::abs(g - tau);
    return std::max(Scalar(0), std::abs(g) - tau);
}

/// max_i kkt_violation; zero iff x is optimal. g must be the gradient at x.
inline double kkt_max_violation(const Vec& x, const Vec& g, double tau) {
    if (x.size() != g.size())
        throw std::invalid_argument("kkt_max_violation: size mismatch");
    double worst = 0.0;
    for (Index i = 0; i < x.size(); ++i)
        worst = std::max(worst, kkt_violation(x[i], g[i], tau));
    return worst;
}

/// Exact minimizer of g*(w - y) + 0.5*H*(w - y)^2 + tau*|w| over scalar w.
template <typename Scalar>
Scalar solve_block_1d(Scalar y, Scalar g, Scalar h, Scalar tau) {
    if (!(h > Scalar(0)))
        throw AssumptionError("solve_block_1d: H must be positive");
    return soft_threshold(y - g / h, tau / h);
}

namespace detail {

/// One alternating-minimization sweep pair; fallback path for the 2D solver.
template <typename Scalar>
Eigen::Matrix<Scalar, 2, 1>
solve_block_2d_alternating(const Eigen::Matrix<Scalar, 2, 1>& y,
                           const Eigen::Matrix<Scalar, 2, 1>& g,
                           const Eigen::Matrix<Scalar, 2, 2>& H, Scalar tau,
                           int max_sweeps) {
    Eigen::Matrix<Scalar, 2, 1> w = y;
    for (int sweep = 0; sweep < max_sweeps; ++sweep) {
        Scalar change = Scalar(0);
        for (int i = 0; i < 2; ++i) {
            const int j = 1 - i;
            // Effective 1D model at the current w_j.
            const Scalar gi = g[i] + H(i, j) * (w[j] - y[j]);
            const Scalar wi = solve_block_1d(y[i], gi, H(i, i), tau);
            change += std::abs(wi - w[i]);
            w[i] = wi;
        }
        if (change == Scalar(0)) break;
    }
    return w;
}

} // namespace detail

/// Exact minimizer of g^T(w - y) + 0.5*(w - y)^T H (w - y) + tau*|w|_1 over
/// w in R^2, by enumerating the 9 sign patterns of w and accepting the first
/// whose restricted stationarity system has a sign-consistent solution with
/// feasible subgradients on the zero coordinates. Throws AssumptionError when
/// H is not positive definite (lambda_min <= 1e-12 * trace).
template <typename Scalar>
Eigen::Matrix<Scalar, 2, 1>
solve_block_2d(const Eigen::Matrix<Scalar, 2, 1>& y,
               const Eigen::Matrix<Scalar, 2, 1>& g,
               const Eigen::Matrix<Scalar, 2, 2>& H, Scalar tau) {
    using Vec2 = Eigen::Matrix<Scalar, 2, 1>;
    const Scalar trace = H(0, 0) + H(1, 1);
    const Scalar off = (H(0, 1) + H(1, 0)) / Scalar(2);
    const Scalar gap = (H(0, 0) - H(1, 1)) / Scalar(2);
    const Scalar disc = std::sqrt(gap * gap + off * off);
    const Scalar lambda_min = trace / Scalar(2) - disc;
    if (!(lambda_min > Scalar(1e-12) * trace))
        throw AssumptionError("solve_block_2d: block Hessian is not positive "
                              "definite (coordinate-regularity fails)");

    static constexpr int kPatterns[9][2] = {{0, 0},  {1, 0},  {-1, 0},
                                            {0, 1},  {0, -1}, {1, 1},
                                            {1, -1}, {-1, 1}, {-1, -1}};
    const Scalar det = H(0, 0) * H(1, 1) - off * off;
    const Scalar dual_slack =
        Scalar(64) * std::numeric_limits<Scalar>::epsilon() *
        (tau + g.template lpNorm<Eigen::Infinity>() +
         trace * (Scalar(1) + y.template lpNorm<Eigen::Infinity>()));

    for (const auto& p : kPatterns) {
        const Scalar s0 = Scalar(p[0]);
        const Scalar s1 = Scalar(p[1]);
        Vec2 d; // w - y
        if (p[0] != 0 && p[1] != 0) {
            const Vec2 rhs(-g[0] - tau * s0, -g[1] - tau * s1);
            d[0] = (H(1, 1) * rhs[0] - off * rhs[1]) / det;
            d[1] = (H(0, 0) * rhs[1] - off * rhs[0]) / det;
        } else if (p[0] != 0) {
            d[1] = -y[1];
            d[0] = (-g[0] - tau * s0 - off * d[1]) / H(0, 0);
        } else if (p[1] != 0) {
            d[0] = -y[0];
            d[1] = (-g[1] - tau * s1 - off * d[0]) / H(1, 1);
        } else {
            d = -y;
        }
        const Vec2 w = y + d;
        bool ok = true;
        for (int i = 0; i < 2 && ok; ++i) {
            if (p[i] != 0) {
                ok = w[i] * Scalar(p[i]) >= Scalar(0);
            } else {
                const Scalar grad_i = g[i] + H(i, 0) * d[0] + H(i, 1) * d[1];
                ok = std::abs(grad_i) <= tau + dual_slack;
            }
        }
        if (ok) {
            // Zero coordinates exactly under a zero pattern entry.
            Vec2 out = w;
            if (p[0] == 0) out[0] = Scalar(0);
            if (p[1] == 0) out[1] = Scalar(0);
            return out;
        }
    }
    // Unreachable in exact arithmetic; extreme roundoff can reject every
    // pattern, in which case alternating minimization settles the point.
    return detail::solve_block_2d_alternating(y, g, H, tau, 10000);
}

} // namespace fastbcd
