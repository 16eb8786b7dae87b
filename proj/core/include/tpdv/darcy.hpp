#pragma once

#include "tpdv/fem.hpp"
#include "tpdv/mesh.hpp"
#include "tpdv/multigrid.hpp"
#include "tpdv/solver.hpp"

#include <functional>
#include <iosfwd>
#include <optional>
#include <vector>

namespace tpdv {

/// Coefficients of the nonlinear momentum law sigma(u) u + grad p = f with
/// sigma(u) = (mu K^{-1} + beta |u| I) / rho.
struct DarcyCoeffs {
    double mu = 1.0;
    double rho = 1.0;
    double beta_f = 30.0;
    double k_scalar = 1.0;
    TensorField k_tensor;  // optional tensor permeability

    bool scalar_permeability() const { return !k_tensor; }
    void validate() const;
};

struct DarcyProblem {
    std::vector<Mesh> chain;  // refinement lineage; the run lives on chain.back()
    DarcyCoeffs coeffs;
    FemOperators fem;
    Vector fu;
    Vector gp;
    int mg_cycles = 1;

    // manufactured reference fields, when available
    VectorField u_exact;
    ScalarField p_exact;

    const Mesh& mesh() const { return chain.back(); }
    int dofs() const { return 2 * mesh().n_triangles() + mesh().n_vertices(); }
};

/// Per-element sigma for scalar permeability.
std::vector<double> sigma_of_u(const Vector& u, const DarcyCoeffs& coeffs);
/// Tensor permeability: built from the element averages of K^{-1}.
std::vector<Eigen::Matrix2d> sigma_of_u(const Vector& u, const DarcyCoeffs& coeffs,
                                        const SparseMatrix& kinv);

/// ru = fu - M0^{sigma(u)} u - B^T p, rp = gp - B u (algebraic dual form).
std::pair<Vector, Vector> darcy_residual(const PrimalDualState& state, const DarcyProblem& prob);

/// Closed-form solution of the element-wise implicit relation
///   (sigma_k/alpha) u' + (beta/rho)|u'| u' = v,
///   v = (sigma_k/alpha) u_k - (mu/rho) K^{-1} u_k - grad p_next + f.
/// Scalar permeability only. When max_defect is given, records the largest
/// relative residual of the magnitude equation.
Vector imex_velocity_update(const Vector& u_k, const Vector& p_next, double alpha,
                            const std::vector<double>& sigma_k, const DarcyCoeffs& coeffs,
                            const Vector& fu, const Mesh& mesh, const SparseMatrix& grad,
                            double* max_defect = nullptr);

/// Manufactured data on the n-subdivision mesh:
///   u = (sin(pi x) cos(pi y) + 2, cos(pi x) sin(pi y)),  p = x^3 + y^3
/// (already zero-mean), with f, g = div u and g_N = u.n computed exactly.
DarcyProblem make_manufactured_problem(int n, const DarcyCoeffs& coeffs, int mg_cycles = 1);

struct DarcySolveResult {
    ConvergenceRecord record;
    Vector u;
    Vector p;
    double max_imex_defect = 0.0;     // magnitude-equation residual across the run
    double max_pressure_mean = 0.0;   // |int p| / |p|_inf after each dual update
};

/// Runs the solver with I_V = M0^{sigma_k} and the dual metric evolved as a
/// convex combination of the variable-coefficient Laplacians, inverted by
/// mg_cycles V-cycles per dual solve.
DarcySolveResult solve_darcy(const DarcyProblem& prob, Mode mode, const TpdvParams& params,
                             double tol, int max_iter);

struct BenchmarkRow {
    double h = 0.0;
    int dofs = 0;
    int iterations = 0;
    long vcycles = 0;
    double seconds = 0.0;
    Status status = Status::max_iter;
};

struct BenchmarkTable {
    std::vector<BenchmarkRow> rows;

    /// CSV with header h,dofs,iterations,vcycles,seconds,status.
    void write_csv(std::ostream& os) const;
    void write_csv(const std::string& path) const;
    /// Aligned text in the same column order.
    void write_text(std::ostream& os) const;
};

/// Mesh sweep at h = 1/inv_h for each entry of inv_h_list (so inv_h = 64
/// runs the 128-subdivision mesh of the unit-square-of-side-2 domain).
BenchmarkTable run_benchmark(Mode mode, const std::vector<int>& inv_h_list,
                             const DarcyCoeffs& coeffs, const TpdvParams& params, double tol,
                             int max_iter, int mg_cycles = 1);

}  // namespace tpdv
