#pragma once

#include "fastbcd/instance.hpp"
#include "fastbcd/solver.hpp"

#include <optional>

namespace fastbcd {

struct ProxConfig {
    double step_coeff = 0.0; // quadratic coefficient L of the proximal step;
                             // 0 means lambda_max(A^T A) via power iteration
    double tol = 1e-9;       // stop when kkt_max_violation <= tol
    int max_iter = 100000;
};

/// lambda_max(A^T A) by power iteration (relative tol on the eigenvalue).
/// Throws AssumptionError when the cap is hit before convergence.
double lambda_max_power(const Mat& A, double tol = 1e-10, int max_iter = 10000,
                        std::uint64_t seed = 0x9E3779B97F4A7C15ULL);

/// One proximal-gradient step: componentwise soft threshold of x - g/L at
/// tau/L. g must be the gradient at x.
Vec ista_step(const Instance& inst, const Vec& x, const Vec& g, double L);

std::pair<Solution, RunTrace>
ista_solve(const Instance& inst, const ProxConfig& cfg,
           std::optional<double> f_target = std::nullopt);

/// Accelerated proximal gradient with the t_{k+1} = (1+sqrt(1+4t_k^2))/2
/// momentum sequence, no restarts. The f sequence is not monotone.
std::pair<Solution, RunTrace>
fista_solve(const Instance& inst, const ProxConfig& cfg,
            std::optional<double> f_target = std::nullopt);

} // namespace fastbcd
