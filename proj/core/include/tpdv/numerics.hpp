#pragma once

#include "tpdv/errors.hpp"
#include "tpdv/spd_operator.hpp"

#include <functional>
#include <memory>
#include <optional>
#include <utility>

namespace tpdv {

/// First-order oracle for a convex objective: gradient always, value and
/// convexity/Lipschitz bounds (relative to reference_metric) when known.
struct GradientOracle {
    int dim = 0;
    std::function<double(const Vector&)> eval;  // optional
    std::function<Vector(const Vector&)> grad;  // required
    std::optional<double> mu_bound;             // convexity modulus in the reference metric
    std::optional<double> lip_bound;            // Lipschitz modulus in the reference metric
    std::shared_ptr<const SpdOperator> reference_metric;  // optional

    bool has_eval() const { return static_cast<bool>(eval); }
};

/// f(u) = 1/2 u^T A u - c^T u with exact bounds relative to `metric`
/// (dense generalized eigensolve of the (A, metric) pencil).
GradientOracle make_quadratic_oracle(const Eigen::MatrixXd& a, const Vector& c,
                                     std::shared_ptr<const SpdOperator> metric = nullptr);

struct EigPair {
    double lambda_min = 0.0;
    double lambda_max = 0.0;
};

enum class EigMode { dense, iterative };

/// Iterative eigenvalue estimation failed to settle; partial carries the
/// best estimates at abort.
class EigError : public SolveError {
public:
    EigError(const std::string& what, EigPair partial) : SolveError(what), partial(partial) {}
    EigPair partial;
};

double weighted_inner(const SpdOperator& m, const Vector& x, const Vector& y);
double weighted_norm_sq(const SpdOperator& m, const Vector& x);

/// D_f(u, v) = f(u) - f(v) - <grad f(v), u - v>.
double bregman_divergence(const GradientOracle& f, const Vector& u, const Vector& v);

/// xi - M grad f*(xi): one gradient-descent step of the conjugate at xi.
Vector e_map(const SpdOperator& m, const std::function<Vector(const Vector&)>& conj_grad,
             const Vector& xi);

/// Extreme eigenvalues of D^{-1} A for SPD A, D. Dense mode is exact
/// (generalized symmetric eigensolve); iterative mode runs power/inverse
/// iteration in the D-inner product to 1e-3 relative, max 500 sweeps.
EigPair estimate_extreme_eigs(const SpdOperator& a, const SpdOperator& d, EigMode mode);

/// lhs = |grad f(u1) - grad f(u2) - M (u1-u2)|^2_{M^-1},
/// rhs_factor = |grad f(u1) - grad f(u2)|^2_{M^-1}.
/// Callers check lhs <= L_e * rhs_factor with L_e = 1 - (2 mu - 1)/(mu L).
/// Requires bounds with mu > 1/2; the contraction characterization fails
/// otherwise and the call is rejected.
std::pair<double, double> contraction_defect(const GradientOracle& f, const SpdOperator& m,
                                             const Vector& u1, const Vector& u2);

}  // namespace tpdv
