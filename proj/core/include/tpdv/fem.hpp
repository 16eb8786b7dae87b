#pragma once

#include "tpdv/mesh.hpp"
#include "tpdv/sparse.hpp"

#include <functional>
#include <vector>

namespace tpdv {

/// Discrete operators of the lowest-order mixed pair: piecewise-constant
/// vector velocities (two interleaved components per triangle) and nodal
/// linear pressures.
struct FemOperators {
    SparseMatrix m0;     // P0-vector mass, diagonal with the element areas
    SparseMatrix grad;   // nodal values -> per-element constant gradients
    SparseMatrix b_mat;  // grad^T m0: the discrete (u, grad q) pairing
    SparseMatrix kinv;   // block-diagonal element averages of K^{-1}
};

using ScalarField = std::function<double(double, double)>;
using VectorField = std::function<Eigen::Vector2d(double, double)>;
using TensorField = std::function<Eigen::Matrix2d(double, double)>;
/// Boundary data sampled at a point with the outward unit normal.
using BoundaryField = std::function<double(const Eigen::Vector2d&, const Eigen::Vector2d&)>;

/// Weighted P0-vector mass: per-element blocks sigma_T |T| (scalar weights
/// give two equal diagonal entries per element).
SparseMatrix assemble_weighted_p0_mass(const Mesh& mesh, const std::vector<double>& sigma);
SparseMatrix assemble_weighted_p0_mass(const Mesh& mesh,
                                       const std::vector<Eigen::Matrix2d>& sigma);

/// Per-element constant gradient of a nodal function; exact for affine
/// functions, and rows sum to zero exactly (the third gradient is formed as
/// minus the other two).
SparseMatrix assemble_gradient(const Mesh& mesh);

FemOperators assemble_fem_operators(const Mesh& mesh, const TensorField& k_inv);
FemOperators assemble_fem_operators(const Mesh& mesh, double k_scalar = 1.0);

/// grad^T m0 (m0^sigma)^{-1} m0 grad: the variable-coefficient Neumann
/// stiffness in product form. Symmetric positive semidefinite with the
/// constants as nullspace.
SparseMatrix assemble_variable_laplacian(const Mesh& mesh, const std::vector<double>& sigma);

double p1_integral(const Vector& p, const Mesh& mesh);

/// Subtracts the mass-weighted mean so the nodal function integrates to zero.
Vector apply_zero_mean(const Vector& p, const Mesh& mesh);

struct Loads {
    Vector fu;  // P0-vector load, midpoint quadrature
    Vector gp;  // nodal load -(g, q) + (g_N, q)_boundary
    double compatibility_defect = 0.0;
};

/// Element loads by midpoint (P0) and three-point (P1) quadrature, boundary
/// terms by two-point Gauss per edge. Warns on stderr when the integral
/// compatibility between g and g_N is violated beyond 1e-8.
Loads assemble_rhs(const Mesh& mesh, const VectorField& f_exact, const ScalarField& g_exact,
                   const BoundaryField& gn_exact);

}  // namespace tpdv
