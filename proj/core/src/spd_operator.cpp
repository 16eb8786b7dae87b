#include "tpdv/spd_operator.hpp"

#include "tpdv/errors.hpp"

#include <Eigen/Cholesky>

#include <utility>

namespace tpdv {

SpdOperator::SpdOperator(int dim, Action apply, Action inv_apply, Materialize materialize)
    : dim_(dim), apply_(std::move(apply)), inv_apply_(std::move(inv_apply)), materialize_(std::move(materialize)) {
    if (dim_ < 0) throw InvalidArgument("SpdOperator: negative dimension");
    if (!apply_ && !inv_apply_) throw InvalidArgument("SpdOperator: needs at least one action");
}

Vector SpdOperator::apply(const Vector& x) const {
    if (!apply_) throw UnsupportedError("SpdOperator: forward action not available");
    if (x.size() != dim_) throw DimensionError("SpdOperator apply: vector length mismatch");
    return apply_(x);
}

Vector SpdOperator::inv_apply(const Vector& x) const {
    if (!inv_apply_) throw UnsupportedError("SpdOperator: inverse action not available");
    if (x.size() != dim_) throw DimensionError("SpdOperator inv_apply: vector length mismatch");
    return inv_apply_(x);
}

SparseMatrix SpdOperator::materialize() const {
    if (!materialize_) throw UnsupportedError("SpdOperator: materialization not available");
    return materialize_();
}

SpdOperator SpdOperator::identity(int n) {
    return SpdOperator(
        n, [](const Vector& x) { return x; }, [](const Vector& x) { return x; },
        [n]() { return SparseMatrix::identity(n); });
}

SpdOperator SpdOperator::scaled_identity(int n, double s) {
    if (s <= 0.0) throw InvalidArgument("scaled_identity: scale must be positive");
    return SpdOperator(
        n, [s](const Vector& x) { return Vector(s * x); },
        [s](const Vector& x) { return Vector(x / s); },
        [n, s]() { return SparseMatrix::diagonal(Vector::Constant(n, s)); });
}

SpdOperator SpdOperator::diagonal(const Vector& d) {
    for (int i = 0; i < d.size(); ++i)
        if (d[i] <= 0.0) throw InvalidArgument("diagonal operator: entries must be positive");
    const int n = static_cast<int>(d.size());
    auto dd = std::make_shared<Vector>(d);
    return SpdOperator(
        n, [dd](const Vector& x) { return Vector(dd->cwiseProduct(x)); },
        [dd](const Vector& x) { return Vector(x.cwiseQuotient(*dd)); },
        [dd]() { return SparseMatrix::diagonal(*dd); });
}

SpdOperator SpdOperator::from_dense(const Eigen::MatrixXd& m) {
    if (m.rows() != m.cols()) throw InvalidArgument("from_dense: matrix must be square");
    auto mat = std::make_shared<Eigen::MatrixXd>(m);
    auto llt = std::make_shared<Eigen::LLT<Eigen::MatrixXd>>(m);
    if (llt->info() != Eigen::Success) throw InvalidArgument("from_dense: matrix is not SPD");
    return SpdOperator(
        static_cast<int>(m.rows()), [mat](const Vector& x) { return Vector(*mat * x); },
        [llt](const Vector& x) { return Vector(llt->solve(x)); },
        [mat]() { return SparseMatrix::from_dense(*mat); });
}

SpdOperator SpdOperator::from_sparse(const SparseMatrix& m, bool with_inverse) {
    if (m.rows() != m.cols()) throw InvalidArgument("from_sparse: matrix must be square");
    auto mat = std::make_shared<SparseMatrix>(m);
    Action inv;
    if (with_inverse) {
        auto llt = std::make_shared<Eigen::LLT<Eigen::MatrixXd>>(m.to_dense());
        if (llt->info() != Eigen::Success) throw InvalidArgument("from_sparse: matrix is not SPD");
        inv = [llt](const Vector& x) { return Vector(llt->solve(x)); };
    }
    return SpdOperator(
        m.rows(), [mat](const Vector& x) { return mat->apply(x); }, std::move(inv),
        [mat]() { return *mat; });
}

}  // namespace tpdv
