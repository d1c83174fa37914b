#pragma once

#include "fastbcd/baselines.hpp"
#include "fastbcd/instance.hpp"
#include "fastbcd/solver.hpp"

#include <filesystem>
#include <iosfwd>

namespace fastbcd {

enum class SolverFamily { Fast, Ista, Fista };

struct SolverSpec {
    std::string name;
    SolverFamily family = SolverFamily::Fast;
    SolverConfig fast;
    ProxConfig prox;
};

/// Named presets: FAST-1CDA, FAST-2CDA, FAST-1CDA-E, FAST-2CDA-E,
/// FAST-1CDA-EPS, FAST-2CDA-EPS, ISTA, FISTA.
SolverSpec solver_preset(const std::string& name);

/// Grid of synthetic cells; every (kind, n, rho, seed) cell is generated
/// with m = n/4, the first solver sets the objective target and the others
/// run until they reach it.
struct ExperimentSpec {
    std::vector<GenKind> kinds{GenKind::P1, GenKind::P2};
    std::vector<Index> sizes{1 << 10, 1 << 12};
    std::vector<double> rhos{0.01, 0.05, 0.1};
    int seeds_per_cell = 5;
    std::uint64_t base_seed = 1;
    double density = 0.5;
    double noise_var = 1e-3;
    int max_outer = 1000;
    double tol = 1e-6;
    std::vector<SolverSpec> solvers;
};

/// The default desk-scale experiment (all FAST variants plus ISTA/FISTA).
ExperimentSpec desk_scale_spec();

/// The large-scale grid: n in {2^14..2^17}, rho in {0.01,...,0.1}, ten seeds
/// per cell (400 instances). Needs tens of gigabytes for the largest sizes;
/// selectable, never a default.
ExperimentSpec full_scale_spec();

ExperimentSpec parse_spec_json(std::istream& in);
ExperimentSpec parse_spec_json(const std::filesystem::path& path);

struct ResultRow {
    std::string kind;
    Index n = 0;
    Index m = 0;
    double rho = 0.0;
    std::uint64_t seed = 0;
    std::string solver;
    double time_s = 0.0;
    int iters = 0;
    double final_f = 0.0;
    bool reached = false;
};

/// Runs the whole grid; writes results.csv, error_curves.csv and
/// error_avg.csv under out_dir. Per-run failures become rows with
/// reached=false, they never abort the sweep.
std::vector<ResultRow> run_experiment(const ExperimentSpec& spec,
                                      const std::filesystem::path& out_dir,
                                      int workers = 1);

void write_results_csv(const std::vector<ResultRow>& rows, std::ostream& out);
std::vector<ResultRow> read_results_csv(std::istream& in);

/// Dolan-More profile of one solver: nondecreasing step function of the
/// per-problem time ratio against the best solver.
struct ProfileCurve {
    std::string solver;
    std::vector<double> ratios;    // sorted breakpoints
    std::vector<double> fractions; // fraction of problems with ratio <= T
};

/// failure_penalty <= 0 selects twice the largest finite ratio observed.
std::vector<ProfileCurve>
performance_profile(const std::vector<ResultRow>& rows,
                    double failure_penalty = 0.0);

/// Columns solver,ratio,log2_ratio,fraction.
void write_profile_csv(const std::vector<ProfileCurve>& curves,
                       std::ostream& out);

/// (elapsed seconds, |x^k - x_true| / |x_true|) pairs of a recorded run.
/// Throws std::invalid_argument when the trace carries no error data.
std::vector<std::pair<double, double>>
relative_error_series(const RunTrace& trace);

/// Average several series on a fixed log-spaced time grid with last-value
/// interpolation.
std::vector<std::pair<double, double>> average_series_log_grid(
    const std::vector<std::vector<std::pair<double, double>>>& series,
    int points = 200);

} // namespace fastbcd
