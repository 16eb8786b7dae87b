#pragma once

#include "tpdv/solver.hpp"

#include <cstdint>

namespace tpdv {

enum class ScaleMode {
    raw,      // I_V = identity
    unit_mu,  // I_V = lambda_min(A) * identity, so the convexity modulus is 1
};

struct QuadraticSaddleSpec {
    int n = 16;
    int m = 4;
    double cond_a = 4.0;
    std::uint64_t seed = 1;
    ScaleMode scale_mode = ScaleMode::unit_mu;
};

/// Seeded synthetic instance of min 1/2 u^T A u - c^T u s.t. B u = b with a
/// dense KKT reference solution; the exact Schur complement doubles as the
/// dual-metric surrogate, so theoretical-mode guarantees are checkable.
struct QuadraticSaddle {
    SaddleProblem problem;
    Vector ustar;
    Vector pstar;

    Eigen::MatrixXd a;
    Vector c;
    Eigen::MatrixXd b_op;      // constraint matrix, dense form
    Vector b_rhs;
    Eigen::MatrixXd schur;     // B I_V^{-1} B^T
    double iv_scale = 1.0;     // I_V = iv_scale * identity
    double mu_f = 1.0;         // bounds of f in the I_V metric
    double l_f = 1.0;
};

QuadraticSaddle make_quadratic_saddle(const QuadraticSaddleSpec& spec);

/// Same wiring from explicit data (hand-checkable fixtures).
QuadraticSaddle make_quadratic_saddle_from(const Eigen::MatrixXd& a, const Eigen::MatrixXd& b_op,
                                           const Vector& c, const Vector& b_rhs,
                                           ScaleMode scale_mode = ScaleMode::unit_mu);

}  // namespace tpdv
