#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "fastbcd/bench.hpp"

#include <Eigen/Dense>

#include <fstream>
#include <sstream>

using namespace fastbcd;

namespace {

ResultRow row(const std::string& solver, const std::string& kind,
              std::uint64_t seed, double time_s, bool reached) {
    ResultRow r;
    r.kind = kind;
    r.n = 64;
    r.m = 16;
    r.rho = 0.2;
    r.seed = seed;
    r.solver = solver;
    r.time_s = time_s;
    r.iters = 10;
    r.final_f = 1.0;
    r.reached = reached;
    return r;
}

std::vector<std::string> read_lines(const std::filesystem::path& p) {
    std::ifstream f(p);
    REQUIRE(f.good());
    std::vector<std::string> lines;
    for (std::string line; std::getline(f, line);) lines.push_back(line);
    return lines;
}

/// Split a CSV line and blank the given columns (timing columns).
std::string blank_columns(const std::string& line,
                          std::initializer_list<int> cols) {
    std::vector<std::string> fields;
    std::string field;
    std::istringstream ls(line);
    while (std::getline(ls, field, ',')) fields.push_back(field);
    for (int c : cols)
        if (c < static_cast<int>(fields.size())) fields[c] = "_";
    std::string out;
    for (std::size_t i = 0; i < fields.size(); ++i)
        out += (i ? "," : "") + fields[i];
    return out;
}

} // namespace

TEST_CASE("profile of the worked two-by-two example") {
    std::vector<ResultRow> rows;
    rows.push_back(row("A", "P1", 1, 1.0, true));
    rows.push_back(row("B", "P1", 1, 2.0, true));
    rows.push_back(row("A", "P1", 2, 4.0, true));
    rows.push_back(row("B", "P1", 2, 2.0, true));

    const auto curves = performance_profile(rows);
    REQUIRE(curves.size() == 2);
    for (const auto& c : curves) {
        REQUIRE(c.ratios == std::vector<double>{1.0, 2.0});
        CHECK(c.fractions == std::vector<double>{0.5, 1.0});
    }
}

TEST_CASE("profile when one solver dominates") {
    std::vector<ResultRow> rows;
    for (std::uint64_t s = 1; s <= 5; ++s) {
        rows.push_back(row("fast", "P1", s, 1.0, true));
        rows.push_back(row("slow", "P1", s, 3.0, true));
    }
    const auto curves = performance_profile(rows);
    REQUIRE(curves[0].solver == "fast");
    CHECK(curves[0].fractions.front() == 1.0); // rho(1) = 1
    CHECK(curves[1].fractions.front() == 0.0);
    CHECK(curves[1].fractions.back() == 1.0);
}

TEST_CASE("profile with failures") {
    std::vector<ResultRow> rows;
    rows.push_back(row("A", "P1", 1, 1.0, true));
    rows.push_back(row("B", "P1", 1, 2.0, true));
    // problem 2: everyone fails; contributes to no curve
    rows.push_back(row("A", "P1", 2, 4.0, false));
    rows.push_back(row("B", "P1", 2, 2.0, false));
    // problem 3: only A succeeds
    rows.push_back(row("A", "P1", 3, 1.0, true));
    rows.push_back(row("B", "P1", 3, 1.0, false));

    const auto curves = performance_profile(rows);
    const auto& a = curves[0];
    const auto& b = curves[1];
    CHECK(a.fractions.back() == doctest::Approx(2.0 / 3.0));
    CHECK(b.fractions.back() == doctest::Approx(1.0 / 3.0));
    for (const auto& c : curves) {
        for (std::size_t k = 1; k < c.fractions.size(); ++k)
            CHECK(c.fractions[k] >= c.fractions[k - 1]);
        for (double f : c.fractions) {
            CHECK(f >= 0.0);
            CHECK(f <= 1.0);
        }
    }
    CHECK_THROWS_AS(performance_profile({}), std::invalid_argument);
}

TEST_CASE("results csv round trip") {
    std::vector<ResultRow> rows;
    rows.push_back(row("A", "P1", 1, 0.25, true));
    rows.push_back(row("B", "P2", 9, 1.5, false));
    std::ostringstream os;
    write_results_csv(rows, os);
    std::istringstream is(os.str());
    const auto back = read_results_csv(is);
    REQUIRE(back.size() == 2);
    CHECK(back[0].solver == "A");
    CHECK(back[0].time_s == 0.25);
    CHECK(back[1].kind == "P2");
    CHECK(back[1].reached == false);

    std::istringstream bad("nonsense\n1,2,3\n");
    CHECK_THROWS_AS(read_results_csv(bad), FormatError);
}

TEST_CASE("relative error series") {
    const Instance inst =
        generate_instance(GenKind::P1, 64, 16, 0.25, 0.5, 1e-3, 17);
    const auto [sol, trace] = solve(inst, make_config(2));
    const auto series = relative_error_series(trace);
    REQUIRE_FALSE(series.empty());
    CHECK(series.front().second == 1.0); // |0 - x_true| / |x_true|
    CHECK(series.back().second < 0.5);

    RunTrace empty_trace;
    TraceRecord rec;
    empty_trace.records.push_back(rec); // rel_error stays NaN
    CHECK_THROWS_AS(relative_error_series(empty_trace), std::invalid_argument);
}

TEST_CASE("noiseless instance with tiny tau is recovered to 1e-3") {
    Instance inst = generate_instance(GenKind::P1, 64, 32, 0.1, 0.5, 0.0, 23);
    inst.tau = 1e-6 * (inst.A.transpose() * inst.b).lpNorm<Eigen::Infinity>();

    SolverConfig cfg = make_config(1);
    cfg.tol = 1e-9;
    cfg.max_outer = 20000;
    const auto [sol, trace] = solve(inst, cfg);
    REQUIRE(sol.status == SolveStatus::Optimal);

    const auto series = relative_error_series(trace);
    CHECK(series.front().second == 1.0);
    CHECK(series.back().second <= 1e-3);

    // direct least squares on the true support reproduces the planted signal
    IndexList support;
    for (Index i = 0; i < inst.n(); ++i)
        if ((*inst.x_true)[i] != 0.0) support.push_back(i);
    Mat As(inst.m(), static_cast<Index>(support.size()));
    for (std::size_t k = 0; k < support.size(); ++k)
        As.col(static_cast<Index>(k)) = inst.A.col(support[k]);
    const Vec ls = As.colPivHouseholderQr().solve(inst.b);
    for (std::size_t k = 0; k < support.size(); ++k) {
        CHECK(std::abs(ls[static_cast<Index>(k)] -
                       (*inst.x_true)[support[k]]) <= 1e-10);
        CHECK(std::abs(sol.x[support[k]] - (*inst.x_true)[support[k]]) <= 1e-3);
    }
}

TEST_CASE("averaging on the log grid uses last-value interpolation") {
    std::vector<std::vector<std::pair<double, double>>> series;
    series.push_back({{0.0, 1.0}, {1.0, 0.5}});
    series.push_back({{0.0, 1.0}, {2.0, 0.0}});
    const auto avg = average_series_log_grid(series, 5);
    REQUIRE(avg.size() == 5);
    CHECK(avg.front().first == doctest::Approx(1.0)); // smallest positive time
    CHECK(avg.front().second == doctest::Approx(0.75));
    CHECK(avg.back().first == doctest::Approx(2.0));
    CHECK(avg.back().second == doctest::Approx(0.25));
}

TEST_CASE("experiment spec json") {
    std::istringstream spec_json(R"({
        "kinds": ["P1"],
        "sizes": [64],
        "rhos": [0.2],
        "seeds_per_cell": 2,
        "base_seed": 5,
        "max_outer": 300,
        "solvers": [
            {"name": "FAST-2CDA"},
            {"name": "FAST-1CDA", "s_fraction": 0.8},
            {"name": "custom", "family": "fast", "r": 1, "eps": 1e-3},
            {"name": "ISTA"}
        ]
    })");
    const ExperimentSpec spec = parse_spec_json(spec_json);
    CHECK(spec.kinds.size() == 1);
    CHECK(spec.sizes == std::vector<Index>{64});
    CHECK(spec.seeds_per_cell == 2);
    CHECK(spec.solvers.size() == 4);
    CHECK(spec.solvers[0].fast.r == 2);
    CHECK(spec.solvers[2].fast.estimate.epsilon == 1e-3);
    CHECK(spec.solvers[3].family == SolverFamily::Ista);

    std::istringstream bad_size(R"({"sizes": [65]})");
    CHECK_THROWS_AS(parse_spec_json(bad_size), std::invalid_argument);
    std::istringstream bad_solver(R"({"solvers": [{"name": "nope"}]})");
    CHECK_THROWS_AS(parse_spec_json(bad_solver), std::invalid_argument);
    std::istringstream bad_json("{");
    CHECK_THROWS_AS(parse_spec_json(bad_json), FormatError);
}

TEST_CASE("run_experiment produces one row per (cell, solver)") {
    ExperimentSpec spec;
    spec.kinds = {GenKind::P1};
    spec.sizes = {64};
    spec.rhos = {0.2};
    spec.seeds_per_cell = 1;
    spec.base_seed = 3;
    spec.max_outer = 300;
    spec.solvers = {solver_preset("FAST-2CDA"), solver_preset("FAST-1CDA")};

    const auto dir = std::filesystem::temp_directory_path() / "fastbcd_bench_test";
    std::filesystem::remove_all(dir);
    const auto rows = run_experiment(spec, dir, 1);
    REQUIRE(rows.size() == 2);
    CHECK(rows[0].solver == "FAST-2CDA");
    CHECK(rows[0].reached); // the target setter reaches its own target
    CHECK(rows[1].reached); // same optimum, target reachable
    CHECK(rows[0].n == 64);
    CHECK(rows[0].m == 16);

    const auto lines1 = read_lines(dir / "results.csv");
    REQUIRE(lines1.size() == 3);
    CHECK(lines1[0] == "kind,n,m,rho,seed,solver,time_s,iters,final_f,reached");

    const auto err1 = read_lines(dir / "error_curves.csv");
    CHECK(err1.size() > 2);
    CHECK(read_lines(dir / "error_avg.csv").size() > 2);

    SUBCASE("rerun is identical except the timing columns") {
        const auto dir2 =
            std::filesystem::temp_directory_path() / "fastbcd_bench_test2";
        std::filesystem::remove_all(dir2);
        run_experiment(spec, dir2, 1);
        const auto lines2 = read_lines(dir2 / "results.csv");
        REQUIRE(lines1.size() == lines2.size());
        for (std::size_t i = 0; i < lines1.size(); ++i)
            CHECK(blank_columns(lines1[i], {6}) == blank_columns(lines2[i], {6}));

        const auto err2 = read_lines(dir2 / "error_curves.csv");
        REQUIRE(err1.size() == err2.size());
        for (std::size_t i = 0; i < err1.size(); ++i)
            CHECK(blank_columns(err1[i], {7}) == blank_columns(err2[i], {7}));
        std::filesystem::remove_all(dir2);
    }
    std::filesystem::remove_all(dir);
}

TEST_CASE("built-in grids") {
    const ExperimentSpec desk = desk_scale_spec();
    CHECK(desk.sizes == std::vector<Index>{1024, 4096});
    CHECK(desk.rhos.size() == 3);
    CHECK(desk.seeds_per_cell == 5);
    CHECK(desk.solvers.size() == 6);
    CHECK(desk.solvers[0].name == "FAST-2CDA"); // the target setter

    const ExperimentSpec full = full_scale_spec();
    CHECK(full.sizes == std::vector<Index>{16384, 32768, 65536, 131072});
    CHECK(full.rhos.size() == 5);
    // 2 kinds x 4 sizes x 5 rhos x 10 seeds = 400 instances
    CHECK(full.kinds.size() * full.sizes.size() * full.rhos.size() *
              full.seeds_per_cell ==
          400);

    ExperimentSpec bad = desk;
    bad.sizes = {65};
    CHECK_THROWS_AS(run_experiment(bad, std::filesystem::temp_directory_path() /
                                            "fastbcd_bad"),
                    std::invalid_argument);
}

TEST_CASE("worker pool merges results in deterministic order") {
    ExperimentSpec spec;
    spec.kinds = {GenKind::P1};
    spec.sizes = {64};
    spec.rhos = {0.2, 0.4};
    spec.seeds_per_cell = 2;
    spec.base_seed = 21;
    spec.max_outer = 300;
    spec.solvers = {solver_preset("FAST-2CDA"), solver_preset("FAST-1CDA")};

    const auto d1 = std::filesystem::temp_directory_path() / "fastbcd_w1";
    const auto d2 = std::filesystem::temp_directory_path() / "fastbcd_w2";
    std::filesystem::remove_all(d1);
    std::filesystem::remove_all(d2);
    const auto rows1 = run_experiment(spec, d1, 1);
    const auto rows2 = run_experiment(spec, d2, 3);
    REQUIRE(rows1.size() == rows2.size());
    for (std::size_t i = 0; i < rows1.size(); ++i) {
        CHECK(rows1[i].solver == rows2[i].solver);
        CHECK(rows1[i].seed == rows2[i].seed);
        CHECK(rows1[i].final_f == rows2[i].final_f);
        CHECK(rows1[i].iters == rows2[i].iters);
        CHECK(rows1[i].reached == rows2[i].reached);
    }
    std::filesystem::remove_all(d1);
    std::filesystem::remove_all(d2);
}

TEST_CASE("profile from an experiment is monotone and complete") {
    ExperimentSpec spec;
    spec.kinds = {GenKind::P1, GenKind::P2};
    spec.sizes = {64};
    spec.rhos = {0.2};
    spec.seeds_per_cell = 2;
    spec.base_seed = 11;
    spec.max_outer = 300;
    spec.solvers = {solver_preset("FAST-2CDA"), solver_preset("FAST-1CDA"),
                    solver_preset("FISTA")};

    const auto dir = std::filesystem::temp_directory_path() / "fastbcd_bench_test3";
    std::filesystem::remove_all(dir);
    const auto rows = run_experiment(spec, dir, 1);
    CHECK(rows.size() == 12);
    std::size_t setter_rows = 0;
    for (const auto& r : rows)
        if (r.solver == "FAST-2CDA") {
            CHECK(r.reached);
            ++setter_rows;
        }
    CHECK(setter_rows == 4);

    const auto curves = performance_profile(rows);
    REQUIRE(curves.size() == 3);
    for (const auto& c : curves) {
        for (std::size_t k = 1; k < c.fractions.size(); ++k)
            CHECK(c.fractions[k] >= c.fractions[k - 1]);
        CHECK(c.fractions.back() <= 1.0);
    }
    std::filesystem::remove_all(dir);
}
