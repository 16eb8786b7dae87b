#pragma once

#include "tpdv/sparse.hpp"

#include <functional>
#include <memory>
#include <optional>

namespace tpdv {

/// Symmetric-positive-definite linear map with optional (approximate)
/// inverse action and optional sparse materialization. Immutable after
/// construction; the wrapped callables must be reentrant.
///
/// Either the forward or the inverse action may be absent: multigrid-backed
/// dual metrics expose only the inverse action, since the forward operator
/// is defined as the inverse of the V-cycle map and is never formed.
class SpdOperator {
public:
    using Action = std::function<Vector(const Vector&)>;
    using Materialize = std::function<SparseMatrix()>;

    SpdOperator() = default;
    SpdOperator(int dim, Action apply, Action inv_apply = nullptr, Materialize materialize = nullptr);

    int dim() const { return dim_; }

    bool has_apply() const { return static_cast<bool>(apply_); }
    bool has_inv_apply() const { return static_cast<bool>(inv_apply_); }
    bool has_materialize() const { return static_cast<bool>(materialize_); }

    Vector apply(const Vector& x) const;
    Vector inv_apply(const Vector& x) const;
    SparseMatrix materialize() const;

    static SpdOperator identity(int n);
    static SpdOperator scaled_identity(int n, double s);
    static SpdOperator diagonal(const Vector& d);

    /// Dense-backed operator; inverse through a Cholesky factorization.
    static SpdOperator from_dense(const Eigen::MatrixXd& m);

    /// Sparse-backed operator. When with_inverse is set, the inverse action
    /// goes through a dense Cholesky factorization (desk scale only).
    static SpdOperator from_sparse(const SparseMatrix& m, bool with_inverse = false);

private:
    int dim_ = 0;
    Action apply_;
    Action inv_apply_;
    Materialize materialize_;
};

}  // namespace tpdv
