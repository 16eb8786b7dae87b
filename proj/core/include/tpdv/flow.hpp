#pragma once

#include "tpdv/numerics.hpp"
#include "tpdv/quadratic.hpp"
#include "tpdv/sparse.hpp"

#include <functional>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

namespace tpdv {

/// Continuous-time state: primal, dual, and the dense dual metric I_Q(t).
/// Flow problems are verification fixtures, small enough for dense storage.
struct FlowState {
    Vector u;
    Vector p;
    Eigen::MatrixXd iq;
    double t = 0.0;
};

struct FlowBounds {
    double mu_f = 0.0;   // convexity of f in the I_V(t) metric
    double l_f = 0.0;    // Lipschitz bound in the I_V(t) metric
    double mu_sst = 0.0; // lambda_min of stilde^{-1} S
};

struct FlowProblem {
    GradientOracle f;
    SparseMatrix B;
    Vector b;
    std::function<SpdOperator(double)> iv_of_t;
    std::function<Eigen::MatrixXd(double)> stilde_of_t;
    std::function<double(double)> gamma_of_t;
    std::function<FlowBounds(double)> bounds_of_t;  // optional, needed for decay checks
    std::optional<Vector> ustar;
    std::optional<Vector> pstar;
};

struct FlowRhs {
    Vector du;
    Vector dp;
    Eigen::MatrixXd diq;
};

/// Right-hand side of the coupled flow:
///   u'   = I_V^{-1} (-grad f(u) - B^T p)
///   p'   = I_Q^{-1} (B u - b - B I_V^{-1}(grad f(u) + B^T p))
///   I_Q' = gamma (stilde - I_Q)
FlowRhs flow_rhs(const FlowState& state, const FlowProblem& prob);

struct Trajectory {
    std::vector<FlowState> samples;  // t = 0, dt, 2dt, ...
    bool spd_ok = true;
    std::string diagnostic;
};

/// Classical fourth-order one-step integration with samples at every step;
/// aborts (keeping the last valid state) if I_Q stops being SPD.
Trajectory integrate(const FlowProblem& prob, FlowState init, double t_end, double dt);

struct DecaySample {
    double t = 0.0;
    double energy = 0.0;
    double bound = 0.0;
    double margin = 0.0;  // bound*(1+tol) - energy; negative flags a violation
};

struct DecayReport {
    std::vector<DecaySample> samples;
    bool hypothesis_met = true;  // mu_f > 1/2 at all sample times
    int violations = 0;
    double tol = 0.0;

    /// CSV with header t,E,bound,margin.
    void write_csv(std::ostream& os) const;
    void write_csv(const std::string& path) const;
};

/// Compares sampled energies against exp(-int mu_tilde) E(0) with
/// mu_tilde = beta * min(mu_f, mu_sst), beta = (mu_f - 1/2)/(mu_f l_f);
/// the integral is accumulated by the trapezoid rule on the sample grid.
/// When mu_f <= 1/2 somewhere the hypothesis fails and nothing is asserted.
DecayReport check_decay(const Trajectory& traj, const Vector& ustar, const Vector& pstar,
                        const FlowProblem& prob, double tol = 1e-6);

/// Plain-text dump of the full states nearest to the requested times.
void dump_states(const Trajectory& traj, const std::vector<double>& times, std::ostream& os);

/// Flow fixture for a quadratic saddle instance: constant I_V and exact
/// constant Schur surrogate, gamma = beta * mu_sst as the stability theory
/// prescribes.
FlowProblem to_flow_problem(const QuadraticSaddle& qs);

}  // namespace tpdv
