#pragma once

#include "tpdv/mesh.hpp"
#include "tpdv/sparse.hpp"
#include "tpdv/spd_operator.hpp"

#include <Eigen/Cholesky>

#include <memory>
#include <vector>

namespace tpdv {

struct VcycleDiagnostics {
    std::vector<double> pre_residual;   // per level, before descending
    std::vector<double> post_residual;  // per level, after ascending
};

/// Geometric V-cycle for the singular (pure-Neumann) variable-coefficient
/// nodal Laplacian. Prolongations are the P1 interpolation of the mesh
/// refinement chain, coarse operators are Galerkin products, damped-Jacobi
/// smoothing (2/3), constant-mode projection after every transfer, and a
/// rank-one-regularized direct solve on the coarsest level.
///
/// The hierarchy is immutable; with_fine_matrix() rebuilds the Galerkin
/// chain for a new fine operator while sharing the prolongations.
class MgHierarchy {
public:
    MgHierarchy() = default;  // empty; assign from build()

    static MgHierarchy build(const std::vector<Mesh>& chain, const SparseMatrix& fine_matrix);

    MgHierarchy with_fine_matrix(const SparseMatrix& fine_matrix) const;

    int n_levels() const { return static_cast<int>(matrices_.size()); }
    int dim() const { return matrices_.front().rows(); }
    const SparseMatrix& matrix(int level) const { return matrices_[level]; }
    /// Interpolation from level+1 (coarser) to level.
    const SparseMatrix& prolongation(int level) const { return (*prolongations_)[level]; }

    /// One V-cycle; rhs is projected to zero mean on entry and the output is
    /// zero-mean. Defaults to two pre- and two post-smoothing sweeps.
    Vector vcycle(const Vector& rhs, const Vector& x0, int pre_smooth = 2, int post_smooth = 2,
                  VcycleDiagnostics* diag = nullptr) const;

private:
    void assemble_from_fine(const SparseMatrix& fine_matrix);
    void descend(int level, const Vector& rhs, Vector& x, int pre, int post,
                 VcycleDiagnostics* diag) const;

    std::shared_ptr<const std::vector<SparseMatrix>> prolongations_;  // [l]: level l+1 -> l
    std::vector<SparseMatrix> matrices_;                              // [0] is finest
    std::vector<Vector> inv_diag_;
    std::shared_ptr<const Eigen::LDLT<Eigen::MatrixXd>> coarse_solver_;  // regularized
};

MgHierarchy build_hierarchy(const std::vector<Mesh>& chain, const SparseMatrix& matrix);

/// m V-cycles from a zero initial guess wrapped as a fixed linear SPD
/// operator action (an approximation of the pseudo-inverse of the fine
/// operator on the zero-mean subspace).
SpdOperator mg_inverse(std::shared_ptr<const MgHierarchy> hierarchy, int m);

/// Asymptotic energy-norm error contraction of the V-cycle, measured by
/// driving the error propagation operator with a seeded probe.
double measure_vcycle_contraction(const MgHierarchy& hierarchy, int sweeps = 12);

}  // namespace tpdv
