#include "fastbcd/bench.hpp"
#include "fastbcd/block_solve.hpp"
#include "fastbcd/instance_io.hpp"

#include <CLI11.hpp>

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>

namespace {

using namespace fastbcd;

int cmd_generate(const std::string& kind, long long n, long long m, double rho,
                 double density, double noise_var, std::uint64_t seed,
                 const std::string& out) {
    const Instance inst = generate_instance(gen_kind_from_string(kind), n, m,
                                            rho, density, noise_var, seed);
    save_instance(inst, std::filesystem::path(out));
    std::printf("wrote %s (kind=%s n=%lld m=%lld tau=%.17g spikes=%lld)\n",
                out.c_str(), kind.c_str(), n, m, inst.tau,
                static_cast<long long>((inst.x_true->array() != 0.0).count()));
    return 0;
}

struct SolveArgs {
    std::string instance_path;
    int r = 2;
    double eps = 0.0; // 0: default for r
    bool adaptive = false;
    bool enhanced = false;
    std::string measure = "phi";
    double tol = 1e-6;
    int max_outer = 1000;
    int s_absolute = 0;
    double s_fraction = 0.0; // 0: default for r
    std::string trace_out;
};

int cmd_solve(const SolveArgs& a) {
    const Instance inst = load_instance(std::filesystem::path(a.instance_path));
    SolverConfig cfg = make_config(a.r, a.adaptive, a.enhanced);
    if (a.eps > 0.0) cfg.estimate.epsilon = a.eps;
    if (a.s_fraction > 0.0) cfg.s_fraction = a.s_fraction;
    if (a.s_absolute > 0) cfg.s_absolute = a.s_absolute;
    if (a.measure == "phi") cfg.measure = Measure::Phi;
    else if (a.measure == "first-order") cfg.measure = Measure::FirstOrder;
    else throw std::invalid_argument("--measure must be phi or first-order");
    cfg.tol = a.tol;
    cfg.max_outer = a.max_outer;

    const auto [sol, trace] = solve(inst, cfg);
    if (!a.trace_out.empty()) {
        std::ofstream f(a.trace_out);
        if (!f) throw FormatError("cannot write trace: " + a.trace_out);
        write_trace_csv(trace, f);
    }
    const Vec g = gradient(inst, inst.A * sol.x - inst.b);
    std::printf("status: %s\n", to_string(sol.status));
    std::printf("f: %.17g\n", sol.f);
    std::printf("kkt_violation: %.17g\n", kkt_max_violation(sol.x, g, inst.tau));
    std::printf("outer_iters: %d\n", sol.outer_iters);
    std::printf("nonzeros: %lld\n",
                static_cast<long long>((sol.x.array() != 0.0).count()));
    std::printf("elapsed_s: %.6f\n", trace.records.back().elapsed_s);
    return 0;
}

int cmd_bench(const std::string& spec_path, const std::string& preset,
              const std::string& out_dir, int workers) {
    ExperimentSpec spec;
    if (!spec_path.empty())
        spec = parse_spec_json(std::filesystem::path(spec_path));
    else if (preset == "desk")
        spec = desk_scale_spec();
    else if (preset == "full")
        spec = full_scale_spec();
    else
        throw std::invalid_argument("--preset must be desk or full");
    const auto rows = run_experiment(spec, out_dir, workers);
    std::size_t failures = 0;
    for (const auto& r : rows) failures += r.reached ? 0 : 1;
    std::printf("bench: %zu runs, %zu failures, results in %s\n", rows.size(),
                failures, out_dir.c_str());
    return 0;
}

int cmd_profile(const std::string& results_path, const std::string& out,
                double failure_penalty) {
    std::ifstream in(results_path);
    if (!in) throw FormatError("cannot open results: " + results_path);
    const auto rows = read_results_csv(in);
    const auto curves = performance_profile(rows, failure_penalty);
    std::ofstream f(out);
    if (!f) throw FormatError("cannot write profile: " + out);
    write_profile_csv(curves, f);
    std::printf("wrote %s (%zu solvers, %zu breakpoints)\n", out.c_str(),
                curves.size(), curves.empty() ? 0 : curves[0].ratios.size());
    return 0;
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"l1-regularized least squares: active-set block coordinate "
                 "descent solvers and benchmark harness"};
    app.require_subcommand(1);

    auto* gen = app.add_subcommand("generate", "generate a synthetic instance");
    std::string g_kind = "P1", g_out;
    long long g_n = 1024, g_m = 256;
    double g_rho = 0.05, g_density = 0.5, g_noise = 1e-3;
    std::uint64_t g_seed = 1;
    gen->add_option("--kind", g_kind, "P1 or P2")->required();
    gen->add_option("--n", g_n, "number of variables")->required();
    gen->add_option("--m", g_m, "number of observations")->required();
    gen->add_option("--rho", g_rho, "spike fraction, T = round(rho*m)")->required();
    gen->add_option("--density", g_density, "P2 sparsity density");
    gen->add_option("--noise-var", g_noise, "observation noise variance");
    gen->add_option("--seed", g_seed, "generator seed")->required();
    gen->add_option("--out", g_out, "output instance file")->required();

    auto* slv = app.add_subcommand("solve", "solve one instance file");
    SolveArgs sa;
    slv->add_option("--instance", sa.instance_path, "instance file")->required();
    slv->add_option("--r", sa.r, "block size (1 or 2)");
    slv->add_option("--eps", sa.eps, "active-set estimate epsilon");
    slv->add_flag("--adaptive-eps", sa.adaptive, "adaptive epsilon rule");
    slv->add_flag("--enhanced", sa.enhanced, "reduced-space second stage");
    slv->add_option("--measure", sa.measure, "ordering measure: phi or first-order");
    slv->add_option("--tol", sa.tol, "kkt violation tolerance");
    slv->add_option("--max-outer", sa.max_outer, "outer iteration cap");
    slv->add_option("--s", sa.s_absolute, "fixed working-set size");
    slv->add_option("--s-fraction", sa.s_fraction, "working-set fraction");
    slv->add_option("--trace-out", sa.trace_out, "write per-iteration CSV");

    auto* ben = app.add_subcommand("bench", "run an experiment grid");
    std::string b_spec, b_out, b_preset;
    int b_workers = 1;
    auto* spec_opt = ben->add_option("--spec", b_spec, "experiment spec JSON");
    ben->add_option("--preset", b_preset,
                    "built-in grid: desk (default sizes) or full (n up to "
                    "2^17, very large)")
        ->excludes(spec_opt);
    ben->add_option("--out-dir", b_out, "output directory")->required();
    ben->add_option("--workers", b_workers, "concurrent cells");

    auto* prf = app.add_subcommand("profile", "performance profile from results");
    std::string p_results, p_out;
    double p_penalty = 0.0;
    prf->add_option("--results", p_results, "results CSV")->required();
    prf->add_option("--out", p_out, "profile CSV")->required();
    prf->add_option("--failure-penalty", p_penalty,
                    "ratio assigned to failed runs (default: 2x max)");

    try {
        app.parse(argc, argv);
        if (gen->parsed())
            return cmd_generate(g_kind, g_n, g_m, g_rho, g_density, g_noise,
                                g_seed, g_out);
        if (slv->parsed()) return cmd_solve(sa);
        if (ben->parsed()) {
            if (b_spec.empty() && b_preset.empty())
                throw std::invalid_argument("bench needs --spec or --preset");
            return cmd_bench(b_spec, b_preset, b_out, b_workers);
        }
        if (prf->parsed()) return cmd_profile(p_results, p_out, p_penalty);
        return 1;
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? 0 : 1;
    } catch (const fastbcd::FormatError& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return 3;
    } catch (const std::filesystem::filesystem_error& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return 3;
    } catch (const std::invalid_argument& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return 1;
    } catch (const std::exception& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return 2;
    }
}
