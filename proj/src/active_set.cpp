#include "fastbcd/active_set.hpp"

#include "fastbcd/block_solve.hpp"

#include <cmath>

namespace fastbcd {

std::pair<Vec, Vec> multiplier_values(const Vec& g, double tau) {
    return {Vec(g.array() + tau), Vec(tau - g.array())};
}

EstimateResult estimate_active_set(const Vec& x, const Vec& g, double tau,
                                   double epsilon) {
    if (x.size() != g.size())
        throw std::invalid_argument("estimate_active_set: size mismatch");
    if (!(epsilon > 0.0))
        throw std::invalid_argument("estimate_active_set: epsilon must be > 0");
    EstimateResult r;
    r.epsilon_used = epsilon;
    for (Index i = 0; i < x.size(); ++i) {
        const bool nonactive = std::max(0.0, x[i]) > epsilon * (tau + g[i]) ||
                               std::max(0.0, -x[i]) > epsilon * (tau - g[i]);
        (nonactive ? r.nonactive : r.active).push_back(i);
    }
    return r;
}

EstimateResult estimate_comparison(const Vec& x, const Vec& g, double tau,
                                   EstimateStrategy strategy, double aux) {
    if (x.size() != g.size())
        throw std::invalid_argument("estimate_comparison: size mismatch");
    if (strategy == EstimateStrategy::Ours || strategy == EstimateStrategy::Ista) {
        if (!(aux > 0.0))
            throw std::invalid_argument("estimate_comparison: epsilon must be > 0");
    }
    if (strategy == EstimateStrategy::Ours)
        return estimate_active_set(x, g, tau, aux);

    EstimateResult r;
    r.epsilon_used = strategy == EstimateStrategy::Ista ? aux : 0.0;
    const double tol_eq = 1e-10 * (1.0 + tau);
    switch (strategy) {
        case EstimateStrategy::Byrd:
            for (Index i = 0; i < x.size(); ++i) {
                const bool active =
                    (x[i] == 0.0 && -tau < g[i] && g[i] < tau) ||
                    (x[i] < 0.0 && std::abs(g[i] + tau) <= tol_eq) ||
                    (x[i] > 0.0 && std::abs(g[i] - tau) <= tol_eq);
                (active ? r.active : r.nonactive).push_back(i);
            }
            break;
        case EstimateStrategy::Yuan: {
            if (aux < 0.0)
                throw std::invalid_argument("estimate_comparison: M must be >= 0");
            const double m = aux;
            for (Index i = 0; i < x.size(); ++i) {
                const bool active =
                    x[i] == 0.0 && -tau + m < g[i] && g[i] < tau - m;
                (active ? r.active : r.nonactive).push_back(i);
            }
            break;
        }
        case EstimateStrategy::Ista:
            for (Index i = 0; i < x.size(); ++i) {
                const bool active =
                    aux * (g[i] - tau) <= x[i] && x[i] <= aux * (g[i] + tau);
                (active ? r.active : r.nonactive).push_back(i);
            }
            break;
        default:
            throw std::invalid_argument("estimate_comparison: unknown strategy");
    }
    return r;
}

double default_yuan_m(const Vec& x, const Vec& g, const Vec& h_diag,
                      double tau) {
    double worst = 0.0;
    for (Index i = 0; i < x.size(); ++i)
        worst = std::max(worst, std::abs(phi_violation(x[i], g[i], h_diag[i], tau)));
    return std::min(0.5 * tau, worst);
}

void set_active_to_zero(const Instance& inst, SolverState& state,
                        std::span<const Index> active) {
    for (Index i : active)
        if (state.x[i] != 0.0) apply_coordinate_delta(inst, state, i, -state.x[i]);
}

LinesearchResult epsilon_linesearch(const Instance& inst, SolverState& state,
                                    const Vec& g, const EstimateParams& params) {
    if (!(params.theta > 0.0 && params.theta < 1.0))
        throw std::invalid_argument("epsilon_linesearch: theta must be in (0,1)");
    if (!(params.eps_bar > 0.0) || !(params.gamma > 0.0))
        throw std::invalid_argument("epsilon_linesearch: eps_bar and gamma must be > 0");

    const double f_x = state.f_value;
    double epsilon = params.eps_bar;
    for (int h = 0;; ++h, epsilon *= params.theta) {
        EstimateResult est = estimate_active_set(state.x, g, inst.tau, epsilon);
        SolverState trial = state;
        double step_sq = 0.0;
        for (Index i : est.active) step_sq += trial.x[i] * trial.x[i];
        set_active_to_zero(inst, trial, est.active);
        if (trial.f_value <= f_x - params.gamma * step_sq || h >= params.h_max) {
            if (h >= params.h_max && trial.f_value > f_x - params.gamma * step_sq) {
                // Degenerate cap: keep y = x, which satisfies the decrease
                // condition with equality.
                return {std::move(est), h};
            }
            state = std::move(trial);
            return {std::move(est), h};
        }
    }
}

std::pair<IndexList, IndexList>
split_nonactive_by_sign(const Vec& g, std::span<const Index> nonactive) {
    std::pair<IndexList, IndexList> out;
    for (Index i : nonactive)
        (g[i] <= 0.0 ? out.first : out.second).push_back(i);
    return out;
}

} // namespace fastbcd
