#pragma once

#include "fastbcd/active_set.hpp"
#include "fastbcd/instance.hpp"

#include <iosfwd>
#include <optional>

namespace fastbcd {

enum class Measure { Phi, FirstOrder };
enum class SolveStatus { Optimal, MaxIter, TargetReached };

const char* to_string(SolveStatus s);
const char* to_string(Measure m);

struct SolverConfig {
    int r = 2;                 // block size, 1 or 2
    int s_absolute = 0;        // > 0: fixed number of working indices
    double s_fraction = 0.65;  // else s = round(s_fraction * T) with T the
                               // planted support size, falling back to
                               // round(s_fraction * |N^k|) when unknown
    Measure measure = Measure::Phi;
    EstimateParams estimate;   // epsilon defaults depend on r, see make_config
    bool adaptive_eps = false;
    bool enhanced = false;
    double xi_fraction = 0.05; // enhanced trigger threshold xi = xi_fraction*n
    double tol = 1e-6;         // stop when kkt_max_violation <= tol
    int max_outer = 1000;
    double cg_tol = 1e-12;     // enhanced-stage linear solver
    int cg_max_iter = 0;       // 0: 4*|N| + 50
};

/// Config with the tuned defaults for the given block size
/// (r=1: eps=1e-4, s_fraction=0.8; r=2: eps=1e-5, s_fraction=0.65).
SolverConfig make_config(int r, bool adaptive_eps = false,
                         bool enhanced = false);

/// Working set of one outer iteration: the non-active indices sorted by
/// decreasing violation, the first min(s, |N|) of them, and their greedy
/// partition into blocks of size <= r.
struct BlockPlan {
    IndexList ordered;
    IndexList selected;
    std::vector<IndexList> blocks;
};

BlockPlan build_block_plan(const Instance& inst, const SolverState& state,
                           const Vec& g, std::span<const Index> nonactive,
                           const SolverConfig& cfg);

struct TraceRecord {
    int iter = 0;
    double f = 0.0;
    double elapsed_s = 0.0;
    Index n_nonactive = 0;
    Index n_active = 0;
    double kkt_violation = 0.0;
    double epsilon = 0.0;
    bool enhanced = false;
    double rel_error = std::numeric_limits<double>::quiet_NaN();
};

struct RunTrace {
    std::vector<TraceRecord> records;
};

struct Solution {
    Vec x;
    double f = 0.0;
    SolveStatus status = SolveStatus::MaxIter;
    int outer_iters = 0;
};

/// Thrown when an iteration fails (e.g. a singular block Hessian); carries
/// the records accumulated up to the failing iteration.
struct SolveInterrupted : AssumptionError {
    SolveInterrupted(const std::string& what, RunTrace trace)
        : AssumptionError(what), partial_trace(std::move(trace)) {}
    RunTrace partial_trace;
};

/// One pass of the outer iteration at the current point: estimate the active
/// set (adaptive epsilon if configured), zero it, then exactly minimize over
/// the planned blocks in order. Returns the entry-point record; the state
/// holds the updated iterate afterwards.
TraceRecord outer_iteration(const Instance& inst, SolverState& state,
                            const SolverConfig& cfg);

/// Run from x0 (default 0) until kkt_max_violation <= tol or max_outer.
std::pair<Solution, RunTrace> solve(const Instance& inst,
                                    const SolverConfig& cfg,
                                    const Vec* x0 = nullptr);

/// Like solve, but stops as soon as f(x^k) <= f_target (TargetReached).
/// Not reaching the target within max_outer reports MaxIter.
std::pair<Solution, RunTrace> solve_to_target(const Instance& inst,
                                              const SolverConfig& cfg,
                                              double f_target,
                                              const Vec* x0 = nullptr);

/// Trigger for the reduced-space stage: at least three records, the last
/// three |N^k| values equal, and |N^k| <= xi_fraction * n.
bool enhanced_trigger(const RunTrace& trace, Index n, double xi_fraction);

struct ReducedSolveResult {
    Vec x;                  // full length, zeros off the non-active set
    bool converged = false; // false when the iteration cap degraded accuracy
};

/// Solve min 0.5*|Ax-b|^2 + tau*signs^T x_N subject to x_A = 0, i.e. the
/// normal equations (A_N^T A_N) x_N = A_N^T b - tau*signs, by conjugate
/// gradients to relative residual cg_tol.
ReducedSolveResult solve_reduced_smooth(const Instance& inst,
                                        std::span<const Index> nonactive,
                                        const Vec& signs, double cg_tol,
                                        int cg_max_iter);

/// CSV with header iter,f,elapsed_s,n_nonactive,kkt_violation,epsilon,enhanced
/// and f printed with 17 significant digits.
void write_trace_csv(const RunTrace& trace, std::ostream& out);

} // namespace fastbcd
