#include "fastbcd/bench.hpp"

#include <json.hpp>

#include <atomic>
#include <chrono>
#include <cmath>
#include <fstream>
#include <mutex>
#include <sstream>
#include <thread>

namespace fastbcd {

using nlohmann::json;

SolverSpec solver_preset(const std::string& name) {
    SolverSpec spec;
    spec.name = name;
    if (name == "ISTA") {
        spec.family = SolverFamily::Ista;
        return spec;
    }
    if (name == "FISTA") {
        spec.family = SolverFamily::Fista;
        return spec;
    }
    if (name == "FAST-1CDA") spec.fast = make_config(1);
    else if (name == "FAST-2CDA") spec.fast = make_config(2);
    else if (name == "FAST-1CDA-E") spec.fast = make_config(1, false, true);
    else if (name == "FAST-2CDA-E") spec.fast = make_config(2, false, true);
    else if (name == "FAST-1CDA-EPS") spec.fast = make_config(1, true);
    else if (name == "FAST-2CDA-EPS") spec.fast = make_config(2, true);
    else throw std::invalid_argument("unknown solver preset: " + name);
    return spec;
}

ExperimentSpec desk_scale_spec() {
    ExperimentSpec spec;
    for (const char* name : {"FAST-2CDA", "FAST-1CDA", "FAST-1CDA-E",
                             "FAST-2CDA-E", "ISTA", "FISTA"})
        spec.solvers.push_back(solver_preset(name));
    return spec;
}

ExperimentSpec full_scale_spec() {
    ExperimentSpec spec = desk_scale_spec();
    spec.sizes = {1 << 14, 1 << 15, 1 << 16, 1 << 17};
    spec.rhos = {0.01, 0.03, 0.05, 0.07, 0.1};
    spec.seeds_per_cell = 10;
    return spec;
}

namespace {

SolverSpec parse_solver_entry(const json& j) {
    if (!j.contains("name"))
        throw std::invalid_argument("solver entry needs a name");
    SolverSpec spec;
    if (j.contains("family")) {
        const std::string fam = j.at("family").get<std::string>();
        spec.name = j.at("name").get<std::string>();
        if (fam == "fast") spec.family = SolverFamily::Fast;
        else if (fam == "ista") spec.family = SolverFamily::Ista;
        else if (fam == "fista") spec.family = SolverFamily::Fista;
        else throw std::invalid_argument("unknown solver family: " + fam);
        if (spec.family == SolverFamily::Fast)
            spec.fast = make_config(j.value("r", 2));
    } else {
        spec = solver_preset(j.at("name").get<std::string>());
    }
    if (spec.family == SolverFamily::Fast) {
        if (j.contains("r")) spec.fast = make_config(j.at("r").get<int>(),
                                                     spec.fast.adaptive_eps,
                                                     spec.fast.enhanced);
        if (j.contains("eps")) spec.fast.estimate.epsilon = j.at("eps").get<double>();
        if (j.contains("adaptive_eps")) spec.fast.adaptive_eps = j.at("adaptive_eps").get<bool>();
        if (j.contains("enhanced")) spec.fast.enhanced = j.at("enhanced").get<bool>();
        if (j.contains("s_fraction")) spec.fast.s_fraction = j.at("s_fraction").get<double>();
        if (j.contains("s")) spec.fast.s_absolute = j.at("s").get<int>();
        if (j.contains("xi_fraction")) spec.fast.xi_fraction = j.at("xi_fraction").get<double>();
        if (j.contains("measure")) {
            const std::string m = j.at("measure").get<std::string>();
            if (m == "phi") spec.fast.measure = Measure::Phi;
            else if (m == "first-order") spec.fast.measure = Measure::FirstOrder;
            else throw std::invalid_argument("unknown measure: " + m);
        }
    }
    return spec;
}

} // namespace

ExperimentSpec parse_spec_json(std::istream& in) {
    json j;
    try {
        j = json::parse(in);
    } catch (const json::parse_error& e) {
        throw FormatError(std::string("bad experiment spec: ") + e.what());
    }
    ExperimentSpec spec;
    if (j.contains("kinds")) {
        spec.kinds.clear();
        for (const auto& k : j.at("kinds"))
            spec.kinds.push_back(gen_kind_from_string(k.get<std::string>()));
    }
    if (j.contains("sizes")) {
        spec.sizes.clear();
        for (const auto& s : j.at("sizes")) spec.sizes.push_back(s.get<Index>());
    }
    if (j.contains("rhos")) {
        spec.rhos.clear();
        for (const auto& r : j.at("rhos")) spec.rhos.push_back(r.get<double>());
    }
    spec.seeds_per_cell = j.value("seeds_per_cell", spec.seeds_per_cell);
    spec.base_seed = j.value("base_seed", spec.base_seed);
    spec.density = j.value("density", spec.density);
    spec.noise_var = j.value("noise_var", spec.noise_var);
    spec.max_outer = j.value("max_outer", spec.max_outer);
    spec.tol = j.value("tol", spec.tol);
    if (j.contains("solvers")) {
        for (const auto& s : j.at("solvers"))
            spec.solvers.push_back(parse_solver_entry(s));
    } else {
        spec.solvers = desk_scale_spec().solvers;
    }
    if (spec.solvers.empty())
        throw std::invalid_argument("experiment spec has no solvers");
    if (spec.seeds_per_cell < 1)
        throw std::invalid_argument("seeds_per_cell must be >= 1");
    for (Index n : spec.sizes)
        if (n % 4 != 0)
            throw std::invalid_argument("all sizes must be divisible by 4");
    return spec;
}

ExperimentSpec parse_spec_json(const std::filesystem::path& path) {
    std::ifstream f(path);
    if (!f) throw FormatError("cannot open spec file: " + path.string());
    return parse_spec_json(f);
}

namespace {

struct Cell {
    GenKind kind;
    Index n, m;
    double rho;
    std::uint64_t seed;
};

struct RunData {
    ResultRow row;
    std::vector<std::pair<double, double>> error_series; // (time, rel_error)
    std::vector<int> error_iters;
};

std::pair<Solution, RunTrace> run_solver(const Instance& inst,
                                         const SolverSpec& spec,
                                         const ExperimentSpec& exp,
                                         std::optional<double> f_target,
                                         double lambda_max) {
    switch (spec.family) {
        case SolverFamily::Fast: {
            SolverConfig cfg = spec.fast;
            cfg.max_outer = exp.max_outer;
            cfg.tol = exp.tol;
            return f_target ? solve_to_target(inst, cfg, *f_target)
                            : solve(inst, cfg);
        }
        case SolverFamily::Ista:
        case SolverFamily::Fista: {
            ProxConfig cfg = spec.prox;
            cfg.max_iter = exp.max_outer;
            cfg.tol = exp.tol;
            if (cfg.step_coeff <= 0.0) cfg.step_coeff = lambda_max;
            return spec.family == SolverFamily::Ista
                       ? ista_solve(inst, cfg, f_target)
                       : fista_solve(inst, cfg, f_target);
        }
    }
    throw std::logic_error("unreachable solver family");
}

std::vector<RunData> run_cell(const Cell& cell, const ExperimentSpec& spec) {
    const Instance inst = generate_instance(
        cell.kind, cell.n, cell.m, cell.rho, spec.density, spec.noise_var,
        cell.seed);

    bool need_lambda = false;
    for (const SolverSpec& s : spec.solvers)
        need_lambda = need_lambda || s.family != SolverFamily::Fast;
    const double lambda_max = need_lambda ? lambda_max_power(inst.A) : 0.0;

    std::vector<RunData> out;
    std::optional<double> f_target;
    for (std::size_t si = 0; si < spec.solvers.size(); ++si) {
        const SolverSpec& sv = spec.solvers[si];
        RunData data;
        data.row.kind = to_string(cell.kind);
        data.row.n = cell.n;
        data.row.m = cell.m;
        data.row.rho = cell.rho;
        data.row.seed = cell.seed;
        data.row.solver = sv.name;

        const auto t0 = std::chrono::steady_clock::now();
        try {
            auto [sol, trace] = run_solver(
                inst, sv, spec, si == 0 ? std::optional<double>{} : f_target,
                lambda_max);
            data.row.time_s =
                std::chrono::duration<double>(std::chrono::steady_clock::now() - t0)
                    .count();
            data.row.iters = sol.outer_iters;
            data.row.final_f = sol.f;
            data.row.reached =
                si == 0 || sol.status == SolveStatus::TargetReached;
            if (si == 0) f_target = sol.f;
            for (const TraceRecord& r : trace.records) {
                if (!std::isnan(r.rel_error)) {
                    data.error_series.emplace_back(r.elapsed_s, r.rel_error);
                    data.error_iters.push_back(r.iter);
                }
            }
        } catch (const std::exception&) {
            data.row.time_s =
                std::chrono::duration<double>(std::chrono::steady_clock::now() - t0)
                    .count();
            data.row.reached = false;
            data.row.iters = 0;
            data.row.final_f = std::numeric_limits<double>::quiet_NaN();
            if (si == 0) f_target = std::nullopt;
        }
        out.push_back(std::move(data));
        // Without a target the remaining solvers run to their own stop.
    }
    return out;
}

std::string format_g17(double v) {
    char buf[32];
    std::snprintf(buf, sizeof(buf), "%.17g", v);
    return buf;
}

} // namespace

std::vector<ResultRow> run_experiment(const ExperimentSpec& spec,
                                      const std::filesystem::path& out_dir,
                                      int workers) {
    if (spec.solvers.empty())
        throw std::invalid_argument("run_experiment: no solvers");
    for (Index n : spec.sizes)
        if (n % 4 != 0)
            throw std::invalid_argument(
                "run_experiment: sizes must be divisible by 4 (m = n/4)");
    std::filesystem::create_directories(out_dir);

    std::vector<Cell> cells;
    std::uint64_t counter = 0;
    for (GenKind kind : spec.kinds)
        for (Index n : spec.sizes)
            for (double rho : spec.rhos)
                for (int s = 0; s < spec.seeds_per_cell; ++s)
                    cells.push_back(Cell{kind, n, n / 4, rho,
                                         spec.base_seed + counter++});

    std::vector<std::vector<RunData>> per_cell(cells.size());
    if (workers < 1) workers = 1;
    if (workers == 1) {
        for (std::size_t c = 0; c < cells.size(); ++c)
            per_cell[c] = run_cell(cells[c], spec);
    } else {
        std::atomic<std::size_t> next{0};
        auto worker = [&] {
            for (;;) {
                const std::size_t c = next.fetch_add(1);
                if (c >= cells.size()) return;
                per_cell[c] = run_cell(cells[c], spec);
            }
        };
        std::vector<std::thread> pool;
        for (int w = 0; w < workers; ++w) pool.emplace_back(worker);
        for (auto& t : pool) t.join();
    }

    std::vector<ResultRow> rows;
    for (const auto& cell_runs : per_cell)
        for (const RunData& d : cell_runs) rows.push_back(d.row);

    {
        std::ofstream f(out_dir / "results.csv");
        if (!f) throw FormatError("cannot write results.csv");
        write_results_csv(rows, f);
    }

    {
        std::ofstream f(out_dir / "error_curves.csv");
        if (!f) throw FormatError("cannot write error_curves.csv");
        f << "kind,n,m,rho,seed,solver,iter,time_s,rel_error\n";
        for (const auto& cell_runs : per_cell)
            for (const RunData& d : cell_runs)
                for (std::size_t i = 0; i < d.error_series.size(); ++i)
                    f << d.row.kind << ',' << d.row.n << ',' << d.row.m << ','
                      << format_g17(d.row.rho) << ',' << d.row.seed << ','
                      << d.row.solver << ',' << d.error_iters[i] << ','
                      << format_g17(d.error_series[i].first) << ','
                      << format_g17(d.error_series[i].second) << '\n';
    }

    {
        // Seed-averaged curves per (kind, n, rho, solver) on a log time grid.
        std::ofstream f(out_dir / "error_avg.csv");
        if (!f) throw FormatError("cannot write error_avg.csv");
        f << "kind,n,rho,solver,time_s,rel_error\n";
        for (GenKind kind : spec.kinds)
            for (Index n : spec.sizes)
                for (double rho : spec.rhos)
                    for (const SolverSpec& sv : spec.solvers) {
                        std::vector<std::vector<std::pair<double, double>>> group;
                        for (std::size_t c = 0; c < cells.size(); ++c) {
                            if (cells[c].kind != kind || cells[c].n != n ||
                                cells[c].rho != rho)
                                continue;
                            for (const RunData& d : per_cell[c])
                                if (d.row.solver == sv.name &&
                                    !d.error_series.empty())
                                    group.push_back(d.error_series);
                        }
                        if (group.empty()) continue;
                        for (const auto& [t, e] :
                             average_series_log_grid(group))
                            f << to_string(kind) << ',' << n << ','
                              << format_g17(rho) << ',' << sv.name << ','
                              << format_g17(t) << ',' << format_g17(e) << '\n';
                    }
    }

    return rows;
}

void write_results_csv(const std::vector<ResultRow>& rows, std::ostream& out) {
    out << "kind,n,m,rho,seed,solver,time_s,iters,final_f,reached\n";
    for (const ResultRow& r : rows)
        out << r.kind << ',' << r.n << ',' << r.m << ',' << format_g17(r.rho)
            << ',' << r.seed << ',' << r.solver << ',' << format_g17(r.time_s)
            << ',' << r.iters << ',' << format_g17(r.final_f) << ','
            << (r.reached ? 1 : 0) << '\n';
}

std::vector<ResultRow> read_results_csv(std::istream& in) {
    std::string line;
    if (!std::getline(in, line))
        throw FormatError("results CSV is empty");
    if (line != "kind,n,m,rho,seed,solver,time_s,iters,final_f,reached")
        throw FormatError("results CSV has an unexpected header");
    std::vector<ResultRow> rows;
    while (std::getline(in, line)) {
        if (line.empty()) continue;
        std::istringstream ls(line);
        std::string field;
        ResultRow r;
        auto next_field = [&]() -> std::string {
            if (!std::getline(ls, field, ','))
                throw FormatError("results CSV row is short: " + line);
            return field;
        };
        r.kind = next_field();
        r.n = std::stoll(next_field());
        r.m = std::stoll(next_field());
        r.rho = std::stod(next_field());
        r.seed = std::stoull(next_field());
        r.solver = next_field();
        r.time_s = std::stod(next_field());
        r.iters = std::stoi(next_field());
        r.final_f = std::stod(next_field());
        r.reached = std::stoi(next_field()) != 0;
        rows.push_back(std::move(r));
    }
    return rows;
}

std::vector<ProfileCurve>
performance_profile(const std::vector<ResultRow>& rows,
                    double failure_penalty) {
    if (rows.empty()) throw std::invalid_argument("performance_profile: no rows");

    auto problem_key = [](const ResultRow& r) {
        std::ostringstream k;
        k << r.kind << '|' << r.n << '|' << r.m << '|' << r.rho << '|' << r.seed;
        return k.str();
    };

    std::vector<std::string> problems;
    std::vector<std::string> solvers;
    auto index_of = [](std::vector<std::string>& v, const std::string& s) {
        for (std::size_t i = 0; i < v.size(); ++i)
            if (v[i] == s) return i;
        v.push_back(s);
        return v.size() - 1;
    };

    struct Entry { double time; bool reached; };
    std::vector<std::vector<Entry>> table; // [problem][solver]
    for (const ResultRow& r : rows) {
        const std::size_t p = index_of(problems, problem_key(r));
        const std::size_t s = index_of(solvers, r.solver);
        if (table.size() < problems.size())
            table.resize(problems.size());
        for (auto& trow : table)
            if (trow.size() < solvers.size())
                trow.resize(solvers.size(), Entry{0.0, false});
        table[p][s] = Entry{r.time_s, r.reached};
    }
    if (solvers.size() < 2)
        throw std::invalid_argument("performance_profile: need >= 2 solvers");

    const std::size_t np = problems.size();
    const std::size_t ns = solvers.size();
    std::vector<std::vector<double>> ratio(np, std::vector<double>(ns, 0.0));
    std::vector<std::vector<bool>> solved(np, std::vector<bool>(ns, false));
    double max_finite = 1.0;
    for (std::size_t p = 0; p < np; ++p) {
        double best = std::numeric_limits<double>::infinity();
        for (std::size_t s = 0; s < ns; ++s)
            if (table[p][s].reached) best = std::min(best, table[p][s].time);
        for (std::size_t s = 0; s < ns; ++s) {
            if (table[p][s].reached && std::isfinite(best) && best > 0.0) {
                ratio[p][s] = table[p][s].time / best;
                solved[p][s] = true;
                max_finite = std::max(max_finite, ratio[p][s]);
            } else if (table[p][s].reached && best == 0.0) {
                ratio[p][s] = 1.0; // degenerate timer resolution
                solved[p][s] = true;
            }
        }
    }
    if (failure_penalty <= 0.0) failure_penalty = 2.0 * max_finite;
    for (std::size_t p = 0; p < np; ++p)
        for (std::size_t s = 0; s < ns; ++s)
            if (!solved[p][s]) ratio[p][s] = failure_penalty;

    std::vector<double> breakpoints;
    for (std::size_t p = 0; p < np; ++p)
        for (std::size_t s = 0; s < ns; ++s)
            if (solved[p][s]) breakpoints.push_back(ratio[p][s]);
    std::sort(breakpoints.begin(), breakpoints.end());
    breakpoints.erase(std::unique(breakpoints.begin(), breakpoints.end()),
                      breakpoints.end());

    std::vector<ProfileCurve> curves(ns);
    for (std::size_t s = 0; s < ns; ++s) {
        curves[s].solver = solvers[s];
        curves[s].ratios = breakpoints;
        curves[s].fractions.reserve(breakpoints.size());
        for (double t : breakpoints) {
            std::size_t count = 0;
            for (std::size_t p = 0; p < np; ++p)
                if (ratio[p][s] <= t) ++count;
            curves[s].fractions.push_back(double(count) / double(np));
        }
    }
    return curves;
}

void write_profile_csv(const std::vector<ProfileCurve>& curves,
                       std::ostream& out) {
    out << "solver,ratio,log2_ratio,fraction\n";
    for (const ProfileCurve& c : curves)
        for (std::size_t i = 0; i < c.ratios.size(); ++i)
            out << c.solver << ',' << format_g17(c.ratios[i]) << ','
                << format_g17(std::log2(c.ratios[i])) << ','
                << format_g17(c.fractions[i]) << '\n';
}

std::vector<std::pair<double, double>>
relative_error_series(const RunTrace& trace) {
    std::vector<std::pair<double, double>> out;
    for (const TraceRecord& r : trace.records)
        if (!std::isnan(r.rel_error)) out.emplace_back(r.elapsed_s, r.rel_error);
    if (out.empty())
        throw std::invalid_argument(
            "relative_error_series: trace has no error data (no x_true)");
    return out;
}

std::vector<std::pair<double, double>> average_series_log_grid(
    const std::vector<std::vector<std::pair<double, double>>>& series,
    int points) {
    if (series.empty() || points < 2)
        throw std::invalid_argument("average_series_log_grid: bad input");
    double t_lo = std::numeric_limits<double>::infinity();
    double t_hi = 0.0;
    for (const auto& s : series) {
        if (s.empty())
            throw std::invalid_argument("average_series_log_grid: empty series");
        for (const auto& [t, e] : s) {
            if (t > 0.0) t_lo = std::min(t_lo, t);
            t_hi = std::max(t_hi, t);
        }
    }
    if (!std::isfinite(t_lo)) t_lo = 1e-9;
    if (t_hi <= t_lo) t_hi = t_lo * 10.0;

    std::vector<std::pair<double, double>> out;
    out.reserve(static_cast<std::size_t>(points));
    const double log_lo = std::log(t_lo);
    const double step = (std::log(t_hi) - log_lo) / (points - 1);
    for (int k = 0; k < points; ++k) {
        const double t = std::exp(log_lo + step * k);
        double sum = 0.0;
        for (const auto& s : series) {
            // Last sample at or before t; the first sample before it starts.
            double v = s.front().second;
            for (const auto& [ts, e] : s) {
                if (ts <= t) v = e;
                else break;
            }
            sum += v;
        }
        out.emplace_back(t, sum / double(series.size()));
    }
    return out;
}

} // namespace fastbcd
