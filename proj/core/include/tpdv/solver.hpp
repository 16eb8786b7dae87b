#pragma once

#include "tpdv/numerics.hpp"
#include "tpdv/sparse.hpp"
#include "tpdv/spd_operator.hpp"

#include <functional>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

namespace tpdv {

enum class Mode { explicit_scheme, imex, uzawa };
enum class ParamMode { practical, theoretical };
enum class Status { converged, max_iter, diverged };

std::string to_string(Mode m);
std::string to_string(Status s);

struct TpdvParams {
    double alpha = 0.7;
    double gamma = 1.4;
    std::optional<double> beta;  // informational in theoretical mode
    Mode mode = Mode::explicit_scheme;
    ParamMode param_mode = ParamMode::practical;

    /// Checks positivity; uzawa runs lines 2-4 with unit relaxation, so the
    /// step size is forced to 1 there.
    void validate();
};

/// Current iterate: primal u, dual p, evolving dual metric I_Q, counter k.
/// For multigrid-backed metrics only the inverse action of iq is available.
struct PrimalDualState {
    Vector u;
    Vector p;
    SpdOperator iq;
    int k = 0;
};

using ImplicitSubstep =
    std::function<Vector(const Vector& u, const Vector& p_next, double alpha, const SpdOperator& iv)>;

/// min f(u) s.t. B u = b, plus the preconditioner wiring.
///
/// iv_factory yields I_{V,k} for the current iterate; stilde_factory yields
/// the Schur-complement surrogate used in the dual-metric update. When
/// dual_update is set it replaces the default convex-combination update
/// (multigrid-backed metrics go through it); such a hook may carry per-solve
/// mutable state, so build one problem instance per concurrent run.
struct SaddleProblem {
    GradientOracle f;
    SparseMatrix B;  // m x n, full row rank
    Vector b;

    std::function<SpdOperator(const Vector& u, int k)> iv_factory;
    std::function<SpdOperator(const Vector& u, int k)> stilde_factory;
    std::function<SpdOperator(const SpdOperator& iq, const Vector& u, int k, double alpha, double gamma)>
        dual_update;

    ImplicitSubstep implicit_substep;
    // gradient entering the implicit relation; defaults to f.grad(u_next)
    std::function<Vector(const Vector& u_next, const Vector& u_prev)> imex_grad;

    std::function<void(Vector& p)> dual_postprocess;

    std::optional<Vector> ustar;  // reference saddle, oracle problems only
    std::optional<Vector> pstar;

    int vcycles_per_dual_solve = 0;  // cost accounting for the records

    /// Shape checks; for desk-scale problems (n <= 2000) also verifies that
    /// B has full row rank via a dense rank-revealing factorization.
    void validate() const;
};

struct IterationRow {
    int k = 0;
    double residual_inf = 0.0;
    double residual_u_inf = 0.0;
    double residual_p_inf = 0.0;
    std::optional<double> lyapunov;
    double alpha_used = 0.0;
    double gamma_used = 0.0;
    int vcycles_used = 0;
    // filled in theoretical mode: certified contraction factor of this step
    std::optional<double> rate_bound;
};

struct ConvergenceRecord {
    std::vector<IterationRow> rows;
    Status status = Status::max_iter;
    double initial_residual = 0.0;

    // report metadata, not serialized in the per-iteration CSV
    std::string label;
    int dofs = 0;
    double wall_seconds = 0.0;

    int iterations() const { return rows.empty() ? 0 : rows.back().k; }
    double final_residual() const { return rows.empty() ? 0.0 : rows.back().residual_inf; }
    long total_vcycles() const;
    /// Empirical per-iteration contraction (E_K/E_0)^(1/K), when Lyapunov
    /// data is present and K >= 1.
    std::optional<double> empirical_rate() const;

    /// CSV with header k,residual_inf,residual_u_inf,residual_p_inf,lyapunov,alpha,gamma,vcycles.
    void write_csv(std::ostream& os) const;
    void write_csv(const std::string& path) const;
};

/// Dual-metric update: (iq + alpha*gamma*stilde) / (1 + alpha*gamma).
/// Bit-exact fixed point when stilde materializes identically to iq.
SpdOperator update_iq(const SpdOperator& iq, const SpdOperator& stilde, double alpha, double gamma);

struct TheoremParams {
    double beta = 0.0;
    double gamma = 0.0;
    double alpha = 0.0;
    double rate = 0.0;  // certified contraction factor per step
};

/// Conservative step parameters for the unit-convexity scaling
/// (mu_{f,I_V} = 1): beta = 1/(2 L_f), gamma = beta*mu_s,
/// alpha = beta/(4(L_f+L_s)) * min(mu_s/L_s, 1), and the certified rate
/// 1 - min(alpha*gamma/(1+alpha*gamma), alpha*beta)/2.
TheoremParams compute_theorem_params(double l_f, double mu_s, double l_s);

/// E = D_f(u, u*) + 1/2 |p - p*|^2_{I_Q}; needs f.eval and the forward
/// action of the dual metric.
double lyapunov(const PrimalDualState& state, const Vector& ustar, const Vector& pstar,
                const GradientOracle& f);

/// One explicit step (lines 2-5): half step, dual-metric update, dual ascent
/// with the half-step velocity, primal averaging.
PrimalDualState tpdv_step(const PrimalDualState& state, const SaddleProblem& prob,
                          const TpdvParams& params);

/// IMEX step: explicit half step and dual update, then the implicit primal
/// solve against p_{k+1}; the implicit relation is verified by
/// back-substitution to 1e-10 relative.
PrimalDualState tpdv_imex_step(const PrimalDualState& state, const SaddleProblem& prob,
                               const TpdvParams& params);

/// Default start: u = 0, p = 0, I_Q = the initial dual-metric surrogate.
PrimalDualState default_initial_state(const SaddleProblem& prob);

/// Outer loop; stops when the combined infinity-norm residual
/// max(|grad f(u)+B^T p|_inf, |Bu-b|_inf) drops below tol times its initial
/// value, diverges past 1e6 times it, or max_iter steps elapse.
ConvergenceRecord solve(const SaddleProblem& prob, const TpdvParams& params, double tol,
                        int max_iter, PrimalDualState init);

// ---------------------------------------------------------------------------
// Inexact-preconditioner sandwich verification

struct SandwichRow {
    double hyp1_radius = 0.0;
    bool hyp1_ok = false;
    bool hyp2_ok = false;
    bool hypotheses_met = false;
    double lambda_min = 0.0;  // spectrum of stilde relative to s
    double lambda_max = 0.0;
    bool violation = false;
};

struct SandwichReport {
    std::vector<SandwichRow> rows;
    double delta = 0.0;
    bool any_violation() const;
};

/// For each k checks rho(I - I_Q^{-1} I_Q*) <= delta/(1+delta) (at k and
/// k+1, which the conclusion rests on) and 2 delta w/(1-w) I_Q* <= S/2,
/// then reports the generalized spectrum of (stilde, s); a violation is
/// flagged only when the hypotheses hold and the spectrum escapes
/// [1/2-delta, 3/2+delta]. The metric sequences carry K+1 entries for K
/// surrogate entries.
SandwichReport verify_sandwich(const std::vector<SpdOperator>& iqstar_seq,
                               const std::vector<SpdOperator>& iq_seq,
                               const std::vector<SpdOperator>& stilde_seq,
                               const std::vector<SpdOperator>& s_seq,
                               const std::vector<double>& omega_seq, double delta);

}  // namespace tpdv
