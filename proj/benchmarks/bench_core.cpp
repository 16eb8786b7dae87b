#include "tpdv/darcy.hpp"
#include "tpdv/fem.hpp"
#include "tpdv/multigrid.hpp"
#include "tpdv/quadratic.hpp"
#include "tpdv/rng.hpp"

#include <benchmark/benchmark.h>

namespace {

using namespace tpdv;

void bench_csr_matvec(benchmark::State& state) {
    Mesh mesh = build_structured_mesh(static_cast<int>(state.range(0)));
    SparseMatrix a =
        assemble_variable_laplacian(mesh, std::vector<double>(mesh.n_triangles(), 1.0));
    Rng rng(7);
    Vector x = rng.normal_vector(a.cols());
    for (auto _ : state) benchmark::DoNotOptimize(a.apply(x));
}

void bench_assemble_laplacian(benchmark::State& state) {
    Mesh mesh = build_structured_mesh(static_cast<int>(state.range(0)));
    Rng rng(11);
    std::vector<double> sigma(mesh.n_triangles());
    for (auto& s : sigma) s = rng.uniform(0.5, 50.0);
    for (auto _ : state)
        benchmark::DoNotOptimize(assemble_variable_laplacian(mesh, sigma));
}

void bench_vcycle(benchmark::State& state) {
    const int levels = static_cast<int>(state.range(0));
    auto chain = refinement_chain(4, levels);
    const Mesh& mesh = chain.back();
    Rng rng(13);
    std::vector<double> sigma(mesh.n_triangles());
    for (auto& s : sigma) s = rng.uniform(1.0, 100.0);
    MgHierarchy h = MgHierarchy::build(chain, assemble_variable_laplacian(mesh, sigma));
    Vector rhs = rng.normal_vector(mesh.n_vertices());
    rhs.array() -= rhs.mean();
    Vector x0 = Vector::Zero(mesh.n_vertices());
    for (auto _ : state) benchmark::DoNotOptimize(h.vcycle(rhs, x0));
}

void bench_darcy_iteration(benchmark::State& state) {
    DarcyCoeffs coeffs;
    DarcyProblem prob = make_manufactured_problem(static_cast<int>(state.range(0)), coeffs);
    TpdvParams params;
    params.alpha = 0.7;
    params.gamma = 1.4;
    for (auto _ : state) {
        // a short fixed burst of outer iterations
        benchmark::DoNotOptimize(solve_darcy(prob, Mode::explicit_scheme, params, 1e-1, 8));
    }
}

void bench_quadratic_step(benchmark::State& state) {
    QuadraticSaddleSpec spec;
    spec.n = static_cast<int>(state.range(0));
    spec.m = spec.n / 4;
    spec.cond_a = 10.0;
    spec.seed = 5;
    QuadraticSaddle qs = make_quadratic_saddle(spec);
    TpdvParams params;
    params.alpha = 0.5;
    params.gamma = 0.5;
    PrimalDualState s = default_initial_state(qs.problem);
    for (auto _ : state) {
        s = tpdv_step(s, qs.problem, params);
        benchmark::DoNotOptimize(s);
    }
}

}  // namespace

BENCHMARK(bench_csr_matvec)->Arg(64);
BENCHMARK(bench_assemble_laplacian)->Arg(64);
BENCHMARK(bench_vcycle)->Arg(4)->Arg(5);
BENCHMARK(bench_darcy_iteration)->Arg(32);
BENCHMARK(bench_quadratic_step)->Arg(32);

BENCHMARK_MAIN();
