#include "tpdv/numerics.hpp"

#include "tpdv/errors.hpp"
#include "tpdv/rng.hpp"

#include <Eigen/Eigenvalues>

#include <cmath>

namespace tpdv {

Eigen::MatrixXd random_spd(Rng& rng, int n, double cond) {
    if (n < 1 || cond < 1.0) throw InvalidArgument("random_spd: need n >= 1 and cond >= 1");
    Eigen::MatrixXd g = rng.normal_matrix(n, n);
    Eigen::HouseholderQR<Eigen::MatrixXd> qr(g);
    Eigen::MatrixXd q = qr.householderQ();
    Vector lambda(n);
    for (int i = 0; i < n; ++i)
        lambda[i] = (n == 1) ? 1.0 : std::pow(cond, static_cast<double>(i) / (n - 1));
    Eigen::MatrixXd a = q * lambda.asDiagonal() * q.transpose();
    return 0.5 * (a + a.transpose());
}

GradientOracle make_quadratic_oracle(const Eigen::MatrixXd& a, const Vector& c,
                                     std::shared_ptr<const SpdOperator> metric) {
    if (a.rows() != a.cols() || a.rows() != c.size())
        throw DimensionError("quadratic oracle: shape mismatch");
    auto am = std::make_shared<Eigen::MatrixXd>(a);
    auto cv = std::make_shared<Vector>(c);
    GradientOracle f;
    f.dim = static_cast<int>(a.rows());
    f.eval = [am, cv](const Vector& u) { return 0.5 * u.dot(*am * u) - cv->dot(u); };
    f.grad = [am, cv](const Vector& u) { return Vector(*am * u - *cv); };
    if (metric) {
        f.reference_metric = metric;
        EigPair e = estimate_extreme_eigs(SpdOperator::from_dense(a), *metric, EigMode::dense);
        f.mu_bound = e.lambda_min;
        f.lip_bound = e.lambda_max;
    }
    return f;
}

double weighted_inner(const SpdOperator& m, const Vector& x, const Vector& y) {
    if (x.size() != m.dim() || y.size() != m.dim())
        throw DimensionError("weighted_inner: dimension mismatch");
    return m.apply(x).dot(y);
}

double weighted_norm_sq(const SpdOperator& m, const Vector& x) { return weighted_inner(m, x, x); }

double bregman_divergence(const GradientOracle& f, const Vector& u, const Vector& v) {
    if (!f.has_eval()) throw UnsupportedError("bregman_divergence: oracle has no value function");
    if (u.size() != f.dim || v.size() != f.dim)
        throw DimensionError("bregman_divergence: dimension mismatch");
    return f.eval(u) - f.eval(v) - f.grad(v).dot(u - v);
}

Vector e_map(const SpdOperator& m, const std::function<Vector(const Vector&)>& conj_grad,
             const Vector& xi) {
    if (xi.size() != m.dim()) throw DimensionError("e_map: dimension mismatch");
    Vector g = conj_grad(xi);
    if (g.size() != xi.size()) throw DimensionError("e_map: conjugate gradient length mismatch");
    return xi - m.apply(g);
}

namespace {

EigPair dense_extreme_eigs(const SpdOperator& a, const SpdOperator& d) {
    Eigen::MatrixXd ad = a.materialize().to_dense();
    Eigen::MatrixXd dd = d.materialize().to_dense();
    Eigen::GeneralizedSelfAdjointEigenSolver<Eigen::MatrixXd> es(ad, dd, Eigen::EigenvaluesOnly);
    if (es.info() != Eigen::Success) throw SolveError("dense generalized eigensolve failed");
    const auto& ev = es.eigenvalues();
    return {ev[0], ev[ev.size() - 1]};
}

// Power iteration on D^{-1}A in the D-inner product; Rayleigh quotient
// <Ax,x>/<Dx,x> converges to lambda_max. lambda_min via the same iteration
// on A^{-1}D (eigenvalues reciprocal).
double power_iterate(const std::function<Vector(const Vector&)>& op,
                     const std::function<Vector(const Vector&)>& metric_apply, int n, double tol,
                     int max_iter, bool& converged) {
    Rng rng(0x9e3779b97f4a7c15ULL);
    Vector x = rng.normal_vector(n);
    x /= x.norm();
    double rayleigh = 0.0;
    converged = false;
    for (int it = 0; it < max_iter; ++it) {
        Vector y = op(x);
        const double denom = metric_apply(x).dot(x);
        const double num = metric_apply(y).dot(x);
        const double next = num / denom;  // <x, op x>_D / <x, x>_D
        const double ynorm = std::sqrt(metric_apply(y).dot(y));
        if (ynorm == 0.0) throw SolveError("power iteration: operator annihilated the probe");
        x = y / ynorm;
        if (it > 0 && std::abs(next - rayleigh) <= tol * std::abs(next)) {
            rayleigh = next;
            converged = true;
            break;
        }
        rayleigh = next;
    }
    return rayleigh;
}

EigPair iterative_extreme_eigs(const SpdOperator& a, const SpdOperator& d) {
    constexpr double kTol = 1e-3;
    constexpr int kMaxIter = 500;
    const int n = a.dim();
    auto dinv_a = [&](const Vector& x) { return d.inv_apply(a.apply(x)); };
    auto d_apply = [&](const Vector& x) { return d.apply(x); };
    bool conv_max = false;
    const double lmax = power_iterate(dinv_a, d_apply, n, kTol, kMaxIter, conv_max);

    if (!a.has_inv_apply())
        throw UnsupportedError("iterative eigenvalue estimation needs inv_apply on A for lambda_min");
    auto ainv_d = [&](const Vector& x) { return a.inv_apply(d.apply(x)); };
    bool conv_min = false;
    const double inv_lmin = power_iterate(ainv_d, d_apply, n, kTol, kMaxIter, conv_min);
    const double lmin = 1.0 / inv_lmin;

    if (!conv_max || !conv_min)
        throw EigError("power iteration did not converge within 500 sweeps", EigPair{lmin, lmax});
    return {lmin, lmax};
}

}  // namespace

EigPair estimate_extreme_eigs(const SpdOperator& a, const SpdOperator& d, EigMode mode) {
    if (a.dim() != d.dim()) throw DimensionError("estimate_extreme_eigs: dimension mismatch");
    if (mode == EigMode::dense) {
        if (!a.has_materialize() || !d.has_materialize())
            throw UnsupportedError("dense eigenvalue mode requires materializable operators");
        return dense_extreme_eigs(a, d);
    }
    return iterative_extreme_eigs(a, d);
}

std::pair<double, double> contraction_defect(const GradientOracle& f, const SpdOperator& m,
                                             const Vector& u1, const Vector& u2) {
    if (u1.size() != f.dim || u2.size() != f.dim || m.dim() != f.dim)
        throw DimensionError("contraction_defect: dimension mismatch");
    if (!f.mu_bound)
        throw NotApplicableError("contraction_defect: oracle carries no convexity bound");
    if (*f.mu_bound <= 0.5)
        throw NotApplicableError(
            "contraction_defect: bound requires mu > 1/2; the map is not contractive otherwise");
    Vector gdiff = f.grad(u1) - f.grad(u2);
    Vector defect = gdiff - m.apply(u1 - u2);
    const double lhs = m.inv_apply(defect).dot(defect);
    const double rhs = m.inv_apply(gdiff).dot(gdiff);
    return {lhs, rhs};
}

}  // namespace tpdv
