#pragma once

// Shared helpers and independent oracles for the test suites. Everything here
// deliberately avoids the library's computation paths: plain loops, dense
// eigendecompositions, finite differences, and grid search.

#include "fastbcd/instance.hpp"
#include "fastbcd/rng.hpp"

#include <Eigen/Dense>

#include <cmath>

namespace testutil {

using fastbcd::Index;
using fastbcd::Instance;
using fastbcd::Mat;
using fastbcd::Vec;
using fastbcd::Xoshiro256ss;

inline Instance make_random_instance(Index m, Index n, Xoshiro256ss& rng,
                                     bool unit_columns = false) {
    Instance inst;
    inst.A.resize(m, n);
    for (Index j = 0; j < n; ++j) {
        for (Index i = 0; i < m; ++i) inst.A(i, j) = rng.normal();
        if (unit_columns) inst.A.col(j).normalize();
    }
    inst.b.resize(m);
    for (Index i = 0; i < m; ++i) inst.b[i] = rng.normal();
    inst.tau =
        0.1 * (inst.A.transpose() * inst.b).lpNorm<Eigen::Infinity>();
    if (!(inst.tau > 0.0)) inst.tau = 0.1;
    return inst;
}

inline Vec random_vec(Index n, Xoshiro256ss& rng, double scale = 1.0) {
    Vec v(n);
    for (Index i = 0; i < n; ++i) v[i] = scale * rng.normal();
    return v;
}

/// Plain-loop objective, no Eigen reductions.
inline double naive_objective(const Instance& inst, const Vec& x) {
    double quad = 0.0;
    for (Index i = 0; i < inst.m(); ++i) {
        double row = -inst.b[i];
        for (Index j = 0; j < inst.n(); ++j) row += inst.A(i, j) * x[j];
        quad += row * row;
    }
    double l1 = 0.0;
    for (Index j = 0; j < inst.n(); ++j) l1 += std::abs(x[j]);
    return 0.5 * quad + inst.tau * l1;
}

/// Central finite differences of the smooth part q(x) = 0.5|Ax-b|^2.
inline Vec fd_gradient(const Instance& inst, const Vec& x) {
    auto q = [&](const Vec& z) {
        return 0.5 * (inst.A * z - inst.b).squaredNorm();
    };
    Vec g(inst.n());
    for (Index i = 0; i < inst.n(); ++i) {
        const double h = 1e-6 * (1.0 + std::abs(x[i]));
        Vec xp = x, xm = x;
        xp[i] += h;
        xm[i] -= h;
        g[i] = (q(xp) - q(xm)) / (2.0 * h);
    }
    return g;
}

inline double lambda_max_dense(const Mat& A) {
    Eigen::SelfAdjointEigenSolver<Mat> es(A.transpose() * A);
    return es.eigenvalues().maxCoeff();
}

inline double lambda_min_dense(const Mat& H) {
    Eigen::SelfAdjointEigenSolver<Mat> es(H);
    return es.eigenvalues().minCoeff();
}

/// Block model value g^T(w-y) + 0.5 (w-y)^T H (w-y) + tau |w|_1.
inline double block_model(const Eigen::Vector2d& w, const Eigen::Vector2d& y,
                          const Eigen::Vector2d& g, const Eigen::Matrix2d& H,
                          double tau) {
    const Eigen::Vector2d d = w - y;
    return g.dot(d) + 0.5 * d.dot(H * d) + tau * w.lpNorm<1>();
}

/// Optimality residual of the block model at w (componentwise, max).
inline double block_kkt_residual(const Eigen::Vector2d& w,
                                 const Eigen::Vector2d& y,
                                 const Eigen::Vector2d& g,
                                 const Eigen::Matrix2d& H, double tau) {
    const Eigen::Vector2d grad = g + H * (w - y);
    double worst = 0.0;
    for (int i = 0; i < 2; ++i) {
        double v;
        if (w[i] > 0.0) v = std::abs(grad[i] + tau);
        else if (w[i] < 0.0) v = std::abs(grad[i] - tau);
        else v = std::max(0.0, std::abs(grad[i]) - tau);
        worst = std::max(worst, v);
    }
    return worst;
}

/// Brute-force minimizer of the block model: full grid scan followed by
/// repeated local zooming around the incumbent.
inline Eigen::Vector2d grid_min_2d(const Eigen::Vector2d& y,
                                   const Eigen::Vector2d& g,
                                   const Eigen::Matrix2d& H, double tau,
                                   double lo = -3.0, double hi = 3.0,
                                   int coarse = 2001) {
    Eigen::Vector2d best(0, 0);
    double best_val = std::numeric_limits<double>::infinity();
    const double step = (hi - lo) / (coarse - 1);
    for (int i = 0; i < coarse; ++i) {
        const double w0 = lo + i * step;
        for (int j = 0; j < coarse; ++j) {
            const Eigen::Vector2d w(w0, lo + j * step);
            const double v = block_model(w, y, g, H, tau);
            if (v < best_val) {
                best_val = v;
                best = w;
            }
        }
    }
    // Local refinement; the model is convex so zooming cannot get trapped.
    double span = step;
    for (int round = 0; round < 40; ++round) {
        const int fine = 21;
        const double h = 2.0 * span / (fine - 1);
        Eigen::Vector2d center = best;
        for (int i = 0; i < fine; ++i)
            for (int j = 0; j < fine; ++j) {
                const Eigen::Vector2d w(center[0] - span + i * h,
                                        center[1] - span + j * h);
                const double v = block_model(w, y, g, H, tau);
                if (v < best_val) {
                    best_val = v;
                    best = w;
                }
            }
        span *= 0.5;
    }
    return best;
}

} // namespace testutil
