#include "tpdv/quadratic.hpp"

#include "tpdv/errors.hpp"
#include "tpdv/rng.hpp"

#include <Eigen/Dense>

#include <cmath>
#include <memory>

namespace tpdv {

namespace {

// Dense KKT solve [A B^T; B 0][u;p] = [c;b] with one step of iterative
// refinement; the pair must satisfy the system to 1e-11 relative.
std::pair<Vector, Vector> kkt_solve(const Eigen::MatrixXd& a, const Eigen::MatrixXd& b_op,
                                    const Vector& c, const Vector& b_rhs) {
    const int n = static_cast<int>(a.rows());
    const int m = static_cast<int>(b_op.rows());
    Eigen::MatrixXd kkt = Eigen::MatrixXd::Zero(n + m, n + m);
    kkt.topLeftCorner(n, n) = a;
    kkt.topRightCorner(n, m) = b_op.transpose();
    kkt.bottomLeftCorner(m, n) = b_op;
    Vector rhs(n + m);
    rhs.head(n) = c;
    rhs.tail(m) = b_rhs;

    Eigen::PartialPivLU<Eigen::MatrixXd> lu(kkt);
    Vector x = lu.solve(rhs);
    x += lu.solve(rhs - kkt * x);

    const double rel = (kkt * x - rhs).cwiseAbs().maxCoeff() /
                       std::max(rhs.cwiseAbs().maxCoeff(), 1.0);
    if (rel > 1e-11) throw SolveError("KKT reference solve residual above 1e-11");
    return {x.head(n), x.tail(m)};
}

}  // namespace

QuadraticSaddle make_quadratic_saddle_from(const Eigen::MatrixXd& a, const Eigen::MatrixXd& b_op,
                                           const Vector& c, const Vector& b_rhs,
                                           ScaleMode scale_mode) {
    const int n = static_cast<int>(a.rows());
    const int m = static_cast<int>(b_op.rows());
    if (a.cols() != n || b_op.cols() != n || c.size() != n || b_rhs.size() != m)
        throw DimensionError("quadratic saddle: shape mismatch");
    if (m >= n) throw InvalidArgument("quadratic saddle: need m < n");

    QuadraticSaddle qs;
    qs.a = a;
    qs.c = c;
    qs.b_op = b_op;
    qs.b_rhs = b_rhs;

    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(a, Eigen::EigenvaluesOnly);
    if (es.info() != Eigen::Success || es.eigenvalues()[0] <= 0.0)
        throw InvalidArgument("quadratic saddle: A must be SPD");
    const double lmin = es.eigenvalues()[0];
    const double lmax = es.eigenvalues()[n - 1];

    qs.iv_scale = scale_mode == ScaleMode::unit_mu ? lmin : 1.0;
    qs.mu_f = lmin / qs.iv_scale;
    qs.l_f = lmax / qs.iv_scale;

    auto iv = std::make_shared<SpdOperator>(SpdOperator::scaled_identity(n, qs.iv_scale));
    qs.problem.f = make_quadratic_oracle(a, c, iv);
    qs.problem.f.mu_bound = qs.mu_f;  // exact from the spectrum of A / iv_scale
    qs.problem.f.lip_bound = qs.l_f;

    qs.problem.B = SparseMatrix::from_dense(b_op);
    qs.problem.b = b_rhs;
    qs.problem.iv_factory = [iv](const Vector&, int) { return *iv; };

    qs.schur = b_op * b_op.transpose() / qs.iv_scale;
    auto schur_sparse = std::make_shared<SparseMatrix>(SparseMatrix::from_dense(qs.schur));
    auto schur_op = std::make_shared<SpdOperator>(SpdOperator::from_sparse(*schur_sparse, true));
    qs.problem.stilde_factory = [schur_op](const Vector&, int) { return *schur_op; };

    auto ad = std::make_shared<Eigen::MatrixXd>(a);
    auto cv = std::make_shared<Vector>(c);
    auto bt = std::make_shared<Eigen::MatrixXd>(b_op.transpose());
    const double s = qs.iv_scale;
    qs.problem.implicit_substep = [ad, cv, bt, s](const Vector& u, const Vector& p_next,
                                                  double alpha, const SpdOperator&) {
        // (I_V + alpha A) u_next = I_V u + alpha (c - B^T p_next)
        Eigen::MatrixXd lhs = *ad * alpha;
        lhs.diagonal().array() += s;
        Vector rhs = s * u + alpha * (*cv - *bt * p_next);
        return Vector(Eigen::LLT<Eigen::MatrixXd>(lhs).solve(rhs));
    };

    auto [ustar, pstar] = kkt_solve(a, b_op, c, b_rhs);
    qs.ustar = ustar;
    qs.pstar = pstar;
    qs.problem.ustar = ustar;
    qs.problem.pstar = pstar;

    qs.problem.validate();
    return qs;
}

QuadraticSaddle make_quadratic_saddle(const QuadraticSaddleSpec& spec) {
    if (spec.n < 2 || spec.m < 1 || spec.m >= spec.n)
        throw InvalidArgument("quadratic saddle spec: need n >= 2 and 1 <= m < n");
    if (spec.cond_a < 1.0) throw InvalidArgument("quadratic saddle spec: cond_a must be >= 1");

    for (int attempt = 0; attempt < 10; ++attempt) {
        Rng rng(spec.seed + static_cast<std::uint64_t>(attempt));
        Eigen::MatrixXd a = random_spd(rng, spec.n, spec.cond_a);
        Vector c = rng.normal_vector(spec.n);
        Eigen::MatrixXd b_op = rng.normal_matrix(spec.m, spec.n);
        Vector u_feas = rng.normal_vector(spec.n);

        Eigen::ColPivHouseholderQR<Eigen::MatrixXd> qr(b_op);
        if (qr.rank() < spec.m) continue;

        Vector b_rhs = b_op * u_feas;
        return make_quadratic_saddle_from(a, b_op, c, b_rhs, spec.scale_mode);
    }
    throw SolveError("quadratic saddle generation: no full-rank constraint after 10 attempts");
}

}  // namespace tpdv
