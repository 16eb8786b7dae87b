#include "tpdv/multigrid.hpp"

#include "tpdv/errors.hpp"
#include "tpdv/rng.hpp"

#include <cmath>

namespace tpdv {

namespace {

void project_constants(Vector& v) {
    v.array() -= v.mean();
}

SparseMatrix p1_prolongation(const Mesh& fine, int coarse_vertices) {
    if (fine.parent_vertices.empty())
        throw InvalidArgument("prolongation: fine mesh carries no refinement lineage");
    std::vector<Triplet> t;
    t.reserve(fine.parent_vertices.size() * 2);
    for (int i = 0; i < fine.n_vertices(); ++i) {
        const auto& [a, b] = fine.parent_vertices[i];
        if (a == b)
            t.push_back({i, a, 1.0});
        else {
            t.push_back({i, a, 0.5});
            t.push_back({i, b, 0.5});
        }
    }
    return SparseMatrix::from_triplets(fine.n_vertices(), coarse_vertices, t);
}

}  // namespace

MgHierarchy MgHierarchy::build(const std::vector<Mesh>& chain, const SparseMatrix& fine_matrix) {
    if (chain.empty()) throw InvalidArgument("hierarchy: empty mesh chain");
    const Mesh& fine = chain.back();
    if (fine_matrix.rows() != fine.n_vertices() || fine_matrix.cols() != fine.n_vertices())
        throw DimensionError("hierarchy: matrix size does not match the fine mesh");

    auto prolongations = std::make_shared<std::vector<SparseMatrix>>();
    for (std::size_t l = chain.size(); l-- > 1;)
        prolongations->push_back(p1_prolongation(chain[l], chain[l - 1].n_vertices()));

    MgHierarchy h;
    h.prolongations_ = std::move(prolongations);
    h.assemble_from_fine(fine_matrix);
    return h;
}

MgHierarchy MgHierarchy::with_fine_matrix(const SparseMatrix& fine_matrix) const {
    if (fine_matrix.rows() != dim())
        throw DimensionError("with_fine_matrix: size does not match the hierarchy");
    MgHierarchy h;
    h.prolongations_ = prolongations_;
    h.assemble_from_fine(fine_matrix);
    return h;
}

void MgHierarchy::assemble_from_fine(const SparseMatrix& fine_matrix) {
    matrices_.clear();
    inv_diag_.clear();
    matrices_.push_back(fine_matrix);
    for (const SparseMatrix& p : *prolongations_) {
        const SparseMatrix& a = matrices_.back();
        matrices_.push_back(p.transpose().multiply(a.multiply(p)));
    }
    for (const SparseMatrix& a : matrices_) {
        Vector d = a.diag();
        for (int i = 0; i < d.size(); ++i) {
            if (!(d[i] > 0.0)) throw SolveError("hierarchy: nonpositive smoother diagonal");
            d[i] = 1.0 / d[i];
        }
        inv_diag_.push_back(std::move(d));
    }
    // rank-one shift spans the constant nullspace; the solve is exact on the
    // zero-mean subspace
    const SparseMatrix& ac = matrices_.back();
    Eigen::MatrixXd dense = ac.to_dense();
    const double shift = dense.trace() / dense.rows();
    dense.array() += shift;
    coarse_solver_ = std::make_shared<Eigen::LDLT<Eigen::MatrixXd>>(dense);
    if (coarse_solver_->info() != Eigen::Success)
        throw SolveError("hierarchy: coarsest-level factorization failed");
}

void MgHierarchy::descend(int level, const Vector& rhs, Vector& x, int pre, int post,
                          VcycleDiagnostics* diag) const {
    const SparseMatrix& a = matrices_[level];
    if (level == n_levels() - 1) {
        x = coarse_solver_->solve(rhs);
        project_constants(x);
        if (diag) {
            const double r = (rhs - a.apply(x)).norm();
            diag->pre_residual.push_back(r);
            diag->post_residual.push_back(r);
        }
        return;
    }

    const Vector& dinv = inv_diag_[level];
    constexpr double kDamping = 2.0 / 3.0;
    for (int s = 0; s < pre; ++s)
        x += kDamping * dinv.cwiseProduct(rhs - a.apply(x));

    Vector r = rhs - a.apply(x);
    if (diag) diag->pre_residual.push_back(r.norm());

    Vector rc = prolongation(level).apply_transpose(r);
    project_constants(rc);
    Vector ec = Vector::Zero(rc.size());
    descend(level + 1, rc, ec, pre, post, diag);

    x += prolongation(level).apply(ec);
    project_constants(x);

    for (int s = 0; s < post; ++s)
        x += kDamping * dinv.cwiseProduct(rhs - a.apply(x));
    project_constants(x);

    if (diag) diag->post_residual.push_back((rhs - a.apply(x)).norm());
}

Vector MgHierarchy::vcycle(const Vector& rhs, const Vector& x0, int pre_smooth, int post_smooth,
                           VcycleDiagnostics* diag) const {
    if (rhs.size() != dim() || x0.size() != dim()) throw DimensionError("vcycle: length mismatch");
    if (pre_smooth < 0 || post_smooth < 0) throw InvalidArgument("vcycle: negative sweep count");
    Vector r = rhs;
    project_constants(r);
    Vector x = x0;
    descend(0, r, x, pre_smooth, post_smooth, diag);
    return x;
}

MgHierarchy build_hierarchy(const std::vector<Mesh>& chain, const SparseMatrix& matrix) {
    return MgHierarchy::build(chain, matrix);
}

SpdOperator mg_inverse(std::shared_ptr<const MgHierarchy> hierarchy, int m) {
    if (!hierarchy) throw InvalidArgument("mg_inverse: null hierarchy");
    if (m < 1) throw InvalidArgument("mg_inverse: need at least one cycle");
    const int n = hierarchy->dim();
    return SpdOperator(n, [hierarchy, m](const Vector& rhs) {
        Vector x = Vector::Zero(rhs.size());
        for (int j = 0; j < m; ++j) x = hierarchy->vcycle(rhs, x);
        return x;
    });
}

double measure_vcycle_contraction(const MgHierarchy& hierarchy, int sweeps) {
    Rng rng(0x5eedULL);
    Vector e = rng.normal_vector(hierarchy.dim());
    e.array() -= e.mean();
    const SparseMatrix& a = hierarchy.matrix(0);
    auto energy = [&](const Vector& v) { return std::sqrt(std::max(0.0, a.apply(v).dot(v))); };
    double rate = 0.0;
    for (int s = 0; s < sweeps; ++s) {
        const double before = energy(e);
        Vector corr = hierarchy.vcycle(a.apply(e), Vector::Zero(hierarchy.dim()));
        e -= corr;
        e.array() -= e.mean();
        const double after = energy(e);
        if (before == 0.0) return 0.0;
        rate = after / before;
        if (after < 1e-300) return 0.0;
        e /= after;  // keep the probe scaled
    }
    return rate;
}

}  // namespace tpdv
