#pragma once

#include "fastbcd/instance.hpp"

#include <span>
#include <utility>

namespace fastbcd {

enum class EstimateStrategy { Ours, Byrd, Yuan, Ista };

struct EstimateParams {
    double epsilon = 1e-4; // estimate threshold; must be < 1/lambda_max(A^T A)
                           // for the guaranteed decrease when zeroing
    double theta = 0.5;    // shrink factor of the adaptive search, in (0,1)
    double eps_bar = 1e-2; // adaptive search starting value
    double gamma = 1e-6;   // required decrease coefficient, > 0
    int h_max = 60;        // adaptive search cap; beyond it zeroing is a no-op
    EstimateStrategy strategy = EstimateStrategy::Ours;
};

/// Partition of {0..n-1} into estimated active (zero at the optimum) and
/// non-active indices, both sorted ascending.
struct EstimateResult {
    IndexList active;
    IndexList nonactive;
    double epsilon_used = 0.0;
};

/// Multiplier functions lambda_i = g_i + tau, mu_i = tau - g_i.
std::pair<Vec, Vec> multiplier_values(const Vec& g, double tau);

/// Non-active set {i : max(0, x_i) > eps*(tau + g_i)} u
///                {i : max(0, -x_i) > eps*(tau - g_i)}; active = complement.
EstimateResult estimate_active_set(const Vec& x, const Vec& g, double tau,
                                   double epsilon);

/// Competing active-set rules, for study and tests:
///   Byrd: {x=0, g in (-tau,tau)} u {x<0, g=-tau} u {x>0, g=tau},
///         equalities tested with tol 1e-10*(1+tau);
///   Yuan: {x=0, g in (-tau+M, tau-M)}, aux = M >= 0;
///   Ista: {eps*(g-tau) <= x <= eps*(g+tau)}, aux = eps;
///   Ours: same as estimate_active_set, aux = eps.
EstimateResult estimate_comparison(const Vec& x, const Vec& g, double tau,
                                   EstimateStrategy strategy, double aux);

/// M value for the Yuan rule: min(tau/2, max_i |phi_i(x)|).
double default_yuan_m(const Vec& x, const Vec& g, const Vec& h_diag,
                      double tau);

/// Zero the listed coordinates, maintaining residual and f incrementally.
void set_active_to_zero(const Instance& inst, SolverState& state,
                        std::span<const Index> active);

struct LinesearchResult {
    EstimateResult estimate;
    int h = 0; // accepted exponent: epsilon = theta^h * eps_bar
};

/// Adaptive-epsilon rule: find the smallest h in {0..h_max} such that
/// zeroing the estimated active set at epsilon = theta^h * eps_bar gives
/// f(y) <= f(x) - gamma*|y - x|^2, and commit that zeroing to `state`.
/// g must be the gradient at state.x.
LinesearchResult epsilon_linesearch(const Instance& inst, SolverState& state,
                                    const Vec& g, const EstimateParams& params);

/// Split a non-active set by gradient sign: ({g_i <= 0}, {g_i > 0}).
std::pair<IndexList, IndexList>
split_nonactive_by_sign(const Vec& g, std::span<const Index> nonactive);

} // namespace fastbcd
