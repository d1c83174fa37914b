#include "fastbcd/solver.hpp"

#include "fastbcd/block_solve.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <ostream>

namespace fastbcd {

const char* to_string(SolveStatus s) {
    switch (s) {
        case SolveStatus::Optimal: return "optimal";
        case SolveStatus::MaxIter: return "max_iter";
        case SolveStatus::TargetReached: return "target_reached";
    }
    return "max_iter";
}

const char* to_string(Measure m) {
    return m == Measure::Phi ? "phi" : "first-order";
}

SolverConfig make_config(int r, bool adaptive_eps, bool enhanced) {
    if (r != 1 && r != 2)
        throw std::invalid_argument("make_config: r must be 1 or 2");
    SolverConfig cfg;
    cfg.r = r;
    cfg.s_fraction = r == 1 ? 0.8 : 0.65;
    cfg.estimate.epsilon = r == 1 ? 1e-4 : 1e-5;
    cfg.adaptive_eps = adaptive_eps;
    cfg.enhanced = enhanced;
    return cfg;
}

namespace {

Index working_set_size(const Instance& inst, const SolverConfig& cfg,
                       Index n_nonactive) {
    Index s;
    if (cfg.s_absolute > 0) {
        s = cfg.s_absolute;
    } else if (inst.x_true) {
        const Index support =
            (inst.x_true->array() != 0.0).count();
        s = static_cast<Index>(std::llround(cfg.s_fraction * double(support)));
    } else {
        s = static_cast<Index>(std::llround(cfg.s_fraction * double(n_nonactive)));
    }
    return std::max<Index>(s, cfg.r);
}

double coordinate_measure(const SolverConfig& cfg, double x, double g,
                          double h_ii, double tau) {
    return cfg.measure == Measure::Phi ? phi_violation(x, g, h_ii, tau)
                                       : first_order_violation(x, g, tau);
}

struct ZeroStepOutcome {
    EstimateResult est;
    double epsilon = 0.0;
};

ZeroStepOutcome estimate_and_zero(const Instance& inst, SolverState& state,
                                  const Vec& g, const SolverConfig& cfg) {
    if (cfg.adaptive_eps) {
        LinesearchResult ls = epsilon_linesearch(inst, state, g, cfg.estimate);
        const double eps = ls.estimate.epsilon_used;
        return {std::move(ls.estimate), eps};
    }
    EstimateResult est =
        estimate_active_set(state.x, g, inst.tau, cfg.estimate.epsilon);
    set_active_to_zero(inst, state, est.active);
    const double eps = est.epsilon_used;
    return {std::move(est), eps};
}

/// Steps 5-8: exact block minimizations at the running point.
void block_pass(const Instance& inst, SolverState& state,
                const BlockPlan& plan) {
    const double tau = inst.tau;
    for (const IndexList& block : plan.blocks) {
        if (block.size() == 1) {
            const Index i = block[0];
            const double gi = inst.A.col(i).dot(state.residual);
            const double w =
                solve_block_1d(state.x[i], gi, state.col_norms_sq[i], tau);
            apply_coordinate_delta(inst, state, i, w - state.x[i]);
        } else {
            const Index i = block[0], j = block[1];
            Eigen::Vector2d y(state.x[i], state.x[j]);
            Eigen::Vector2d g_blk(inst.A.col(i).dot(state.residual),
                                  inst.A.col(j).dot(state.residual));
            Eigen::Matrix2d H;
            H(0, 0) = state.col_norms_sq[i];
            H(1, 1) = state.col_norms_sq[j];
            H(0, 1) = H(1, 0) = inst.A.col(i).dot(inst.A.col(j));
            const Eigen::Vector2d w = solve_block_2d(y, g_blk, H, tau);
            apply_coordinate_delta(inst, state, i, w[0] - y[0]);
            apply_coordinate_delta(inst, state, j, w[1] - y[1]);
        }
    }
}

double relative_error(const Instance& inst, const Vec& x) {
    if (!inst.x_true) return std::numeric_limits<double>::quiet_NaN();
    const double denom = inst.x_true->norm();
    if (denom == 0.0) return std::numeric_limits<double>::quiet_NaN();
    return (x - *inst.x_true).norm() / denom;
}

} // namespace

BlockPlan build_block_plan(const Instance& inst, const SolverState& state,
                           const Vec& g, std::span<const Index> nonactive,
                           const SolverConfig& cfg) {
    BlockPlan plan;
    if (nonactive.empty()) return plan;

    plan.ordered.assign(nonactive.begin(), nonactive.end());
    std::vector<double> score(static_cast<std::size_t>(inst.n()), 0.0);
    for (Index i : nonactive)
        score[static_cast<std::size_t>(i)] = std::abs(coordinate_measure(
            cfg, state.x[i], g[i], state.col_norms_sq[i], inst.tau));
    std::sort(plan.ordered.begin(), plan.ordered.end(), [&](Index a, Index b) {
        const double sa = score[static_cast<std::size_t>(a)];
        const double sb = score[static_cast<std::size_t>(b)];
        return sa != sb ? sa > sb : a < b;
    });

    const Index s = working_set_size(inst, cfg, static_cast<Index>(nonactive.size()));
    const Index keep = std::min<Index>(s, static_cast<Index>(plan.ordered.size()));
    plan.selected.assign(plan.ordered.begin(), plan.ordered.begin() + keep);

    for (Index start = 0; start < keep; start += cfg.r) {
        const Index stop = std::min<Index>(start + cfg.r, keep);
        plan.blocks.emplace_back(plan.selected.begin() + start,
                                 plan.selected.begin() + stop);
    }
    return plan;
}

TraceRecord outer_iteration(const Instance& inst, SolverState& state,
                            const SolverConfig& cfg) {
    const Vec g = gradient(inst, state.residual);
    TraceRecord rec;
    rec.iter = state.outer_iter;
    rec.f = state.f_value;
    rec.kkt_violation = kkt_max_violation(state.x, g, inst.tau);
    rec.rel_error = relative_error(inst, state.x);

    ZeroStepOutcome step = estimate_and_zero(inst, state, g, cfg);
    rec.n_nonactive = static_cast<Index>(step.est.nonactive.size());
    rec.n_active = static_cast<Index>(step.est.active.size());
    rec.epsilon = step.epsilon;

    const BlockPlan plan =
        build_block_plan(inst, state, g, step.est.nonactive, cfg);
    block_pass(inst, state, plan);
    refresh_objective(inst, state);
    ++state.outer_iter;
    return rec;
}

bool enhanced_trigger(const RunTrace& trace, Index n, double xi_fraction) {
    const auto& r = trace.records;
    if (r.size() < 3) return false;
    const Index c0 = r[r.size() - 3].n_nonactive;
    const Index c1 = r[r.size() - 2].n_nonactive;
    const Index c2 = r[r.size() - 1].n_nonactive;
    return c0 == c1 && c1 == c2 &&
           static_cast<double>(c2) <= xi_fraction * static_cast<double>(n);
}

ReducedSolveResult solve_reduced_smooth(const Instance& inst,
                                        std::span<const Index> nonactive,
                                        const Vec& signs, double cg_tol,
                                        int cg_max_iter) {
    const Index k = static_cast<Index>(nonactive.size());
    if (signs.size() != k)
        throw std::invalid_argument("solve_reduced_smooth: signs size mismatch");
    ReducedSolveResult res;
    res.x = Vec::Zero(inst.n());
    if (k == 0) {
        res.converged = true;
        return res;
    }
    Mat An(inst.m(), k);
    for (Index c = 0; c < k; ++c) An.col(c) = inst.A.col(nonactive[c]);

    const Vec rhs = An.transpose() * inst.b - inst.tau * signs;
    const double rhs_norm = rhs.norm();
    Vec xn = Vec::Zero(k);
    if (rhs_norm == 0.0) {
        res.converged = true;
        return res;
    }
    if (cg_max_iter <= 0) cg_max_iter = static_cast<int>(4 * k + 50);

    Vec r = rhs;
    Vec p = r;
    double rr = r.squaredNorm();
    for (int it = 0; it < cg_max_iter; ++it) {
        const Vec ap = An.transpose() * (An * p);
        const double pap = p.dot(ap);
        if (!(pap > 0.0)) break; // A_N rank-deficient along p
        const double alpha = rr / pap;
        xn += alpha * p;
        r -= alpha * ap;
        const double rr_new = r.squaredNorm();
        if (std::sqrt(rr_new) <= cg_tol * rhs_norm) {
            res.converged = true;
            break;
        }
        p = r + (rr_new / rr) * p;
        rr = rr_new;
    }
    for (Index c = 0; c < k; ++c) res.x[nonactive[c]] = xn[c];
    return res;
}

namespace {

std::pair<Solution, RunTrace> solve_impl(const Instance& inst,
                                         const SolverConfig& cfg,
                                         std::optional<double> f_target,
                                         const Vec* x0) {
    if (cfg.r != 1 && cfg.r != 2)
        throw std::invalid_argument("solve: block size r must be 1 or 2");
    if (!(cfg.tol > 0.0))
        throw std::invalid_argument("solve: tol must be positive");

    const auto t0 = std::chrono::steady_clock::now();
    auto elapsed = [&t0] {
        return std::chrono::duration<double>(std::chrono::steady_clock::now() -
                                             t0)
            .count();
    };

    SolverState state = make_state(inst, x0);
    RunTrace trace;
    Solution sol;
    Index last_enhanced_card = -1;

    auto make_record = [&](const Vec& g, double viol) {
        TraceRecord rec;
        rec.iter = state.outer_iter;
        rec.f = state.f_value;
        rec.elapsed_s = elapsed();
        rec.kkt_violation = viol;
        rec.rel_error = relative_error(inst, state.x);
        const double eps =
            cfg.adaptive_eps ? cfg.estimate.eps_bar : cfg.estimate.epsilon;
        EstimateResult est = estimate_active_set(state.x, g, inst.tau, eps);
        rec.n_nonactive = static_cast<Index>(est.nonactive.size());
        rec.n_active = static_cast<Index>(est.active.size());
        rec.epsilon = eps;
        return rec;
    };

    for (;;) {
        const Vec g = gradient(inst, state.residual);
        const double viol = kkt_max_violation(state.x, g, inst.tau);

        if (f_target && state.f_value <= *f_target) {
            trace.records.push_back(make_record(g, viol));
            sol.status = SolveStatus::TargetReached;
            break;
        }
        if (!f_target && viol <= cfg.tol) {
            trace.records.push_back(make_record(g, viol));
            sol.status = SolveStatus::Optimal;
            break;
        }
        if (state.outer_iter >= cfg.max_outer) {
            trace.records.push_back(make_record(g, viol));
            sol.status = SolveStatus::MaxIter;
            break;
        }

        TraceRecord rec;
        rec.iter = state.outer_iter;
        rec.f = state.f_value;
        rec.kkt_violation = viol;
        rec.rel_error = relative_error(inst, state.x);

        const Vec x_before = state.x;

        ZeroStepOutcome step = estimate_and_zero(inst, state, g, cfg);
        rec.n_nonactive = static_cast<Index>(step.est.nonactive.size());
        rec.n_active = static_cast<Index>(step.est.active.size());
        rec.epsilon = step.epsilon;
        rec.elapsed_s = elapsed();
        trace.records.push_back(rec);

        bool spliced = false;
        if (cfg.enhanced && enhanced_trigger(trace, inst.n(), cfg.xi_fraction) &&
            rec.n_nonactive != last_enhanced_card) {
            const IndexList& nonactive = step.est.nonactive;
            bool signs_defined = true;
            Vec signs(static_cast<Index>(nonactive.size()));
            for (std::size_t c = 0; c < nonactive.size(); ++c) {
                const double xv = state.x[nonactive[c]];
                if (xv == 0.0) {
                    signs_defined = false;
                    break;
                }
                signs[static_cast<Index>(c)] = xv > 0.0 ? 1.0 : -1.0;
            }
            if (signs_defined) {
                last_enhanced_card = rec.n_nonactive;
                ReducedSolveResult red = solve_reduced_smooth(
                    inst, nonactive, signs, cfg.cg_tol, cfg.cg_max_iter);
                bool sign_ok = true;
                for (std::size_t c = 0; c < nonactive.size() && sign_ok; ++c)
                    sign_ok = red.x[nonactive[c]] * signs[static_cast<Index>(c)] > 0.0;
                if (sign_ok) {
                    const double f_new = objective(inst, red.x);
                    if (f_new < state.f_value) {
                        state.x = red.x;
                        state.residual = inst.A * state.x - inst.b;
                        state.f_value = f_new;
                        trace.records.back().enhanced = true;
                        spliced = true;
                    }
                }
            }
        }

        if (!spliced) {
            try {
                const BlockPlan plan =
                    build_block_plan(inst, state, g, step.est.nonactive, cfg);
                block_pass(inst, state, plan);
            } catch (const AssumptionError& e) {
                throw SolveInterrupted(e.what(), std::move(trace));
            }
            refresh_objective(inst, state);
        }
        ++state.outer_iter;

        // In target mode a stationary update means the target is unreachable.
        if (f_target && (state.x.array() == x_before.array()).all()) {
            const Vec g2 = gradient(inst, state.residual);
            trace.records.push_back(
                make_record(g2, kkt_max_violation(state.x, g2, inst.tau)));
            sol.status = SolveStatus::MaxIter;
            break;
        }
    }

    sol.x = state.x;
    sol.f = state.f_value;
    sol.outer_iters = state.outer_iter;
    return {std::move(sol), std::move(trace)};
}

} // namespace

std::pair<Solution, RunTrace> solve(const Instance& inst,
                                    const SolverConfig& cfg, const Vec* x0) {
    return solve_impl(inst, cfg, std::nullopt, x0);
}

std::pair<Solution, RunTrace> solve_to_target(const Instance& inst,
                                              const SolverConfig& cfg,
                                              double f_target, const Vec* x0) {
    if (!std::isfinite(f_target))
        throw std::invalid_argument("solve_to_target: target must be finite");
    return solve_impl(inst, cfg, f_target, x0);
}

void write_trace_csv(const RunTrace& trace, std::ostream& out) {
    out << "iter,f,elapsed_s,n_nonactive,kkt_violation,epsilon,enhanced\n";
    char buf[512];
    for (const TraceRecord& r : trace.records) {
        std::snprintf(buf, sizeof(buf), "%d,%.17g,%.9f,%lld,%.17g,%.17g,%d\n",
                      r.iter, r.f, r.elapsed_s,
                      static_cast<long long>(r.n_nonactive), r.kkt_violation,
                      r.epsilon, r.enhanced ? 1 : 0);
        out << buf;
    }
}

} // namespace fastbcd
