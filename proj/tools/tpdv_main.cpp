// Command-line driver for the TPDv solver library: synthetic quadratic
// saddles with exact oracles, the Darcy-Forchheimer benchmark, and the
// continuous-flow verification runs. Exit status is 0 iff every requested
// run converged (flow runs: clean, violation-free decay report).

#include "tpdv/darcy.hpp"
#include "tpdv/errors.hpp"
#include "tpdv/runner.hpp"

#include <CLI11.hpp>

#include <cstdio>
#include <iostream>
#include <string>
#include <vector>

int main(int argc, char** argv) {
    CLI::App app{"Transformed primal-dual solver with variable preconditioners"};

    std::string problem = "quadratic";
    std::string algo = "tpdv";
    std::string param_mode = "practical";
    tpdv::RunConfig config;
    double alpha = -1.0;
    double gamma = -1.0;
    std::vector<int> bench_meshes;

    app.add_option("--problem", problem, "quadratic | darcy | flow")
        ->check(CLI::IsMember({"quadratic", "darcy", "flow"}));
    app.add_option("--algo", algo, "tpdv | tpdv-imex | uzawa")
        ->check(CLI::IsMember({"tpdv", "tpdv-imex", "uzawa"}));
    app.add_option("--param-mode", param_mode, "practical | theoretical")
        ->check(CLI::IsMember({"practical", "theoretical"}));
    app.add_option("--n", config.mesh_inv_h, "darcy mesh size as 1/h (e.g. 64 for h=1/64)");
    app.add_option("--dim", config.dim, "primal dimension for quadratic/flow problems");
    app.add_option("--mdim", config.mdim, "dual dimension for quadratic/flow problems");
    app.add_option("--cond", config.cond, "target condition number of the quadratic Hessian");
    app.add_option("--alpha", alpha, "step size (defaults depend on the problem/algo)");
    app.add_option("--gamma", gamma, "preconditioner rate (defaults depend on the problem/algo)");
    app.add_option("--tol", config.tol, "relative residual tolerance in (0,1)");
    app.add_option("--max-iter", config.max_iter, "iteration cap");
    app.add_option("--mg-cycles", config.mg_cycles, "V-cycles per dual solve (darcy)");
    app.add_option("--seed", config.seed, "generator seed for catalog problems");
    app.add_option("--output", config.output_path,
                   "output CSV path (default: derived under $TPDV_OUTPUT_DIR)");
    app.add_option("--flow-tend", config.flow_tend, "flow integration end time");
    app.add_option("--flow-dt", config.flow_dt, "flow integration step");
    app.add_option("--flow-dump", config.flow_dump_times,
                   "times at which to dump full flow states");
    app.add_option("--bench-meshes", bench_meshes,
                   "darcy benchmark sweep over 1/h values (writes a benchmark table)");

    CLI11_PARSE(app, argc, argv);

    try {
        config.problem = tpdv::problem_from_string(problem);
        config.algo = tpdv::mode_from_string(algo);
        config.param_mode = tpdv::param_mode_from_string(param_mode);
        if (alpha > 0.0) config.alpha = alpha;
        if (gamma > 0.0) config.gamma = gamma;
        config.validate();

        if (!bench_meshes.empty()) {
            if (config.problem != tpdv::ProblemKind::darcy)
                throw tpdv::InvalidArgument("--bench-meshes requires --problem darcy");
            tpdv::TpdvParams params;
            params.alpha = config.resolved_alpha();
            params.gamma = config.resolved_gamma();
            params.mode = config.algo;
            tpdv::DarcyCoeffs coeffs;
            tpdv::BenchmarkTable table =
                tpdv::run_benchmark(config.algo, bench_meshes, coeffs, params, config.tol,
                                    config.max_iter, config.mg_cycles);
            const std::string path = config.output_path.empty()
                                         ? "tpdv_darcy_benchmark_" + algo + ".csv"
                                         : config.output_path;
            table.write_csv(path);
            table.write_text(std::cout);
            std::printf("benchmark table written to %s\n", path.c_str());
            for (const auto& row : table.rows)
                if (row.status != tpdv::Status::converged) return 1;
            return 0;
        }

        tpdv::RunResult result = tpdv::run(config);
        std::printf("%s\n", result.summary.c_str());
        for (const auto& artifact : result.artifacts)
            std::printf("wrote %s\n", artifact.c_str());
        return result.ok ? 0 : 1;
    } catch (const tpdv::InvalidArgument& e) {
        std::fprintf(stderr, "usage error: %s\n", e.what());
        return 2;
    } catch (const std::exception& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return 1;
    }
}
