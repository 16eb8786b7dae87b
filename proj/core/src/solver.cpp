#include "tpdv/solver.hpp"

#include "tpdv/errors.hpp"
#include "tpdv/rng.hpp"

#include <Eigen/Dense>
#include <Eigen/Eigenvalues>

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <ostream>

namespace tpdv {

namespace {

double linf(const Vector& v) { return v.size() == 0 ? 0.0 : v.cwiseAbs().maxCoeff(); }

constexpr double kDivergenceFactor = 1e6;

std::pair<double, double> pencil_extremes(const Eigen::MatrixXd& a, const Eigen::MatrixXd& d) {
    Eigen::GeneralizedSelfAdjointEigenSolver<Eigen::MatrixXd> es(0.5 * (a + a.transpose()),
                                                                 0.5 * (d + d.transpose()),
                                                                 Eigen::EigenvaluesOnly);
    if (es.info() != Eigen::Success) throw SolveError("generalized eigensolve failed");
    const auto& ev = es.eigenvalues();
    return {ev[0], ev[ev.size() - 1]};
}

}  // namespace

std::string to_string(Mode m) {
    switch (m) {
        case Mode::explicit_scheme: return "tpdv";
        case Mode::imex: return "tpdv-imex";
        case Mode::uzawa: return "uzawa";
    }
    return "?";
}

std::string to_string(Status s) {
    switch (s) {
        case Status::converged: return "converged";
        case Status::max_iter: return "max_iter";
        case Status::diverged: return "diverged";
    }
    return "?";
}

void TpdvParams::validate() {
    if (!(alpha > 0.0)) throw InvalidArgument("alpha must be positive");
    if (!(gamma > 0.0)) throw InvalidArgument("gamma must be positive");
    if (mode == Mode::uzawa) alpha = 1.0;
}

void SaddleProblem::validate() const {
    if (!f.grad) throw InvalidArgument("problem: gradient oracle missing");
    if (B.cols() != f.dim) throw DimensionError("problem: B column count != primal dimension");
    if (b.size() != B.rows()) throw DimensionError("problem: b length != B row count");
    if (!iv_factory) throw InvalidArgument("problem: iv_factory missing");
    if (!stilde_factory && !dual_update)
        throw InvalidArgument("problem: need stilde_factory or dual_update");
    if (B.cols() <= 2000) {
        Eigen::ColPivHouseholderQR<Eigen::MatrixXd> qr(B.to_dense());
        if (qr.rank() < B.rows()) throw InvalidArgument("problem: B is not of full row rank");
    }
}

long ConvergenceRecord::total_vcycles() const {
    long n = 0;
    for (const auto& r : rows) n += r.vcycles_used;
    return n;
}

std::optional<double> ConvergenceRecord::empirical_rate() const {
    if (rows.size() < 2) return std::nullopt;
    const auto& first = rows.front();
    const auto& last = rows.back();
    if (!first.lyapunov || !last.lyapunov) return std::nullopt;
    if (*first.lyapunov <= 0.0 || last.k <= first.k) return std::nullopt;
    if (*last.lyapunov <= 0.0) return 0.0;
    return std::pow(*last.lyapunov / *first.lyapunov, 1.0 / (last.k - first.k));
}

void ConvergenceRecord::write_csv(std::ostream& os) const {
    os << "k,residual_inf,residual_u_inf,residual_p_inf,lyapunov,alpha,gamma,vcycles\n";
    char buf[320];
    for (const auto& r : rows) {
        char lyap[40] = "";
        if (r.lyapunov) std::snprintf(lyap, sizeof(lyap), "%.17g", *r.lyapunov);
        std::snprintf(buf, sizeof(buf), "%d,%.17g,%.17g,%.17g,%s,%.17g,%.17g,%d\n", r.k,
                      r.residual_inf, r.residual_u_inf, r.residual_p_inf, lyap, r.alpha_used,
                      r.gamma_used, r.vcycles_used);
        os << buf;
    }
}

void ConvergenceRecord::write_csv(const std::string& path) const {
    std::ofstream os(path, std::ios::binary);
    if (!os) throw IoError("cannot open for writing: " + path);
    write_csv(os);
    if (!os) throw IoError("write failed: " + path);
}

SpdOperator update_iq(const SpdOperator& iq, const SpdOperator& stilde, double alpha, double gamma) {
    if (iq.dim() != stilde.dim()) throw DimensionError("update_iq: dimension mismatch");
    const double ag = alpha * gamma;
    if (ag < 0.0) throw InvalidArgument("update_iq: alpha*gamma must be nonnegative");
    if (ag == 0.0) return iq;
    if (!iq.has_materialize() || !stilde.has_materialize())
        throw UnsupportedError(
            "update_iq: operators must be materializable; wire a dual_update hook instead");
    SparseMatrix mi = iq.materialize();
    SparseMatrix ms = stilde.materialize();
    if (mi == ms) return iq;  // fixed point of the metric flow
    const double w = 1.0 / (1.0 + ag);
    return SpdOperator::from_sparse(SparseMatrix::add(w, mi, 1.0 - w, ms), true);
}

TheoremParams compute_theorem_params(double l_f, double mu_s, double l_s) {
    if (!(l_f > 0.0) || !(mu_s > 0.0) || !(l_s > 0.0))
        throw InvalidArgument("compute_theorem_params: inputs must be positive");
    TheoremParams p;
    p.beta = 1.0 / (2.0 * l_f);
    p.gamma = p.beta * mu_s;
    p.alpha = p.beta / (4.0 * (l_f + l_s)) * std::min(mu_s / l_s, 1.0);
    const double ag = p.alpha * p.gamma;
    p.rate = 1.0 - 0.5 * std::min(ag / (1.0 + ag), p.alpha * p.beta);
    return p;
}

double lyapunov(const PrimalDualState& state, const Vector& ustar, const Vector& pstar,
                const GradientOracle& f) {
    if (!f.has_eval()) throw UnsupportedError("lyapunov: oracle has no value function");
    const double breg = bregman_divergence(f, state.u, ustar);
    Vector dp = state.p - pstar;
    return breg + 0.5 * weighted_norm_sq(state.iq, dp);
}

namespace {

PrimalDualState do_step(const PrimalDualState& state, const SaddleProblem& prob, double alpha,
                        double gamma, Mode mode, const SpdOperator* iq_next_hint) {
    const SpdOperator iv = prob.iv_factory(state.u, state.k);
    Vector ru = prob.f.grad(state.u) + prob.B.apply_transpose(state.p);
    Vector u_half = state.u - iv.inv_apply(ru);

    SpdOperator iq_next =
        iq_next_hint ? *iq_next_hint
        : prob.dual_update
            ? prob.dual_update(state.iq, state.u, state.k, alpha, gamma)
            : update_iq(state.iq, prob.stilde_factory(state.u, state.k), alpha, gamma);

    Vector rp_half = prob.B.apply(u_half) - prob.b;
    Vector z = iq_next.inv_apply(rp_half);
    if (rp_half.dot(z) < 0.0)
        throw SolveError("dual metric lost positivity at iteration " + std::to_string(state.k));
    Vector p_next = state.p + alpha * z;
    if (prob.dual_postprocess) prob.dual_postprocess(p_next);

    Vector u_next;
    if (mode == Mode::imex) {
        if (!prob.implicit_substep)
            throw UnsupportedError("imex step requires an implicit_substep on the problem");
        u_next = prob.implicit_substep(state.u, p_next, alpha, iv);
        Vector g = prob.imex_grad ? prob.imex_grad(u_next, state.u) : prob.f.grad(u_next);
        Vector back = u_next - state.u + alpha * iv.inv_apply(g + prob.B.apply_transpose(p_next));
        const double scale =
            std::max({linf(u_next), linf(state.u), alpha * linf(iv.inv_apply(ru)), 1e-30});
        if (linf(back) > 1e-10 * scale)
            throw SolveError("implicit substep residual " + std::to_string(linf(back)) +
                             " exceeds tolerance at iteration " + std::to_string(state.k));
    } else {
        u_next = (1.0 - alpha) * state.u + alpha * u_half;
    }
    return {std::move(u_next), std::move(p_next), std::move(iq_next), state.k + 1};
}

// Dense Schur complement B I_V^{-1} B^T for desk-scale theoretical runs.
Eigen::MatrixXd dense_schur(const SaddleProblem& prob, const SpdOperator& iv) {
    const Eigen::MatrixXd bd = prob.B.to_dense();
    Eigen::MatrixXd x(bd.cols(), bd.rows());
    for (int j = 0; j < bd.rows(); ++j) x.col(j) = iv.inv_apply(bd.row(j).transpose());
    Eigen::MatrixXd s = bd * x;
    return 0.5 * (s + s.transpose());
}

struct TheoreticalStep {
    double alpha = 0.0;
    double gamma = 0.0;
    double beta = 0.0;
    double rate = 0.0;
    SpdOperator iq_next;
};

// Per-iteration parameter selection. The step bound depends on the updated
// dual metric, which itself depends on alpha; resolved by fixed-point
// iteration seeded with the previous step size, then a final halving loop so
// the accepted alpha satisfies the bound evaluated with its own metric.
TheoreticalStep resolve_theoretical(const SaddleProblem& prob, const PrimalDualState& state,
                                    const SpdOperator& iv, double alpha_seed) {
    if (prob.dual_update)
        throw UnsupportedError("theoretical parameter mode needs materializable metric updates");
    if (!prob.f.lip_bound)
        throw UnsupportedError("theoretical parameter mode requires a Lipschitz bound on f");
    const double l_f = *prob.f.lip_bound;
    const double beta = 1.0 / (2.0 * l_f);

    SpdOperator stilde = prob.stilde_factory(state.u, state.k);
    Eigen::MatrixXd s = dense_schur(prob, iv);
    Eigen::MatrixXd st = stilde.materialize().to_dense();
    const double mu_s = pencil_extremes(s, st).first;
    const double gamma = beta * mu_s;

    auto l_schur = [&](double a) {
        SpdOperator iq_next = update_iq(state.iq, stilde, a, gamma);
        return std::pair{pencil_extremes(s, iq_next.materialize().to_dense()).second,
                         std::move(iq_next)};
    };

    double alpha = alpha_seed;
    SpdOperator iq_next;
    for (int pass = 0; pass < 8; ++pass) {
        auto [l_s, iq] = l_schur(alpha);
        const double target = beta / (4.0 * (l_f + l_s)) * std::min(mu_s / l_s, 1.0);
        iq_next = std::move(iq);
        if (std::abs(target - alpha) <= 1e-6 * target) {
            alpha = target;
            break;
        }
        alpha = target;
    }
    for (int guard = 0; guard < 60; ++guard) {
        auto [l_s, iq] = l_schur(alpha);
        const double bound = beta / (2.0 * (l_f + l_s)) * std::min(mu_s / l_s, 1.0);
        iq_next = std::move(iq);
        if (alpha <= bound) break;
        alpha *= 0.5;
    }

    TheoreticalStep ts;
    ts.alpha = alpha;
    ts.gamma = gamma;
    ts.beta = beta;
    const double ag = alpha * gamma;
    ts.rate = 1.0 - 0.5 * std::min(ag / (1.0 + ag), alpha * beta);
    ts.iq_next = std::move(iq_next);
    return ts;
}

void warn_if_not_unit_convexity(const SaddleProblem& prob, const SpdOperator& iv) {
    if (!prob.f.has_eval()) return;
    Rng rng(42);
    double worst = std::numeric_limits<double>::infinity();
    for (int s = 0; s < 8; ++s) {
        Vector u = rng.normal_vector(prob.f.dim);
        Vector v = rng.normal_vector(prob.f.dim);
        Vector d = u - v;
        const double denom = 0.5 * iv.apply(d).dot(d);
        if (denom <= 0.0) continue;
        worst = std::min(worst, bregman_divergence(prob.f, u, v) / denom);
    }
    if (worst < 1.0 - 1e-6)
        std::fprintf(stderr,
                     "warning: sampled convexity modulus %.6g < 1; theoretical parameters assume "
                     "the unit-convexity scaling\n",
                     worst);
}

}  // namespace

PrimalDualState tpdv_step(const PrimalDualState& state, const SaddleProblem& prob,
                          const TpdvParams& params) {
    if (params.mode == Mode::imex) throw InvalidArgument("tpdv_step: use tpdv_imex_step for imex");
    const double alpha = params.mode == Mode::uzawa ? 1.0 : params.alpha;
    if (alpha < 0.0 || params.gamma < 0.0)
        throw InvalidArgument("tpdv_step: alpha and gamma must be nonnegative");
    return do_step(state, prob, alpha, params.gamma, params.mode, nullptr);
}

PrimalDualState tpdv_imex_step(const PrimalDualState& state, const SaddleProblem& prob,
                               const TpdvParams& params) {
    if (params.mode != Mode::imex) throw InvalidArgument("tpdv_imex_step: params.mode must be imex");
    if (!prob.implicit_substep)
        throw UnsupportedError("tpdv_imex_step: problem carries no implicit_substep");
    if (!(params.alpha > 0.0) || params.gamma < 0.0)
        throw InvalidArgument("tpdv_imex_step: need alpha > 0 and gamma >= 0");
    return do_step(state, prob, params.alpha, params.gamma, Mode::imex, nullptr);
}

PrimalDualState default_initial_state(const SaddleProblem& prob) {
    PrimalDualState s;
    s.u = Vector::Zero(prob.f.dim);
    s.p = Vector::Zero(prob.b.size());
    if (prob.stilde_factory) {
        SpdOperator st = prob.stilde_factory(s.u, 0);
        s.iq = st.has_materialize() ? SpdOperator::from_sparse(st.materialize(), true) : st;
    }
    s.k = 0;
    return s;
}

ConvergenceRecord solve(const SaddleProblem& prob, const TpdvParams& params0, double tol,
                        int max_iter, PrimalDualState state) {
    TpdvParams params = params0;
    params.validate();
    if (!(tol > 0.0 && tol < 1.0)) throw InvalidArgument("solve: tol must lie in (0,1)");
    if (max_iter < 0) throw InvalidArgument("solve: max_iter must be nonnegative");
    if (params.mode == Mode::imex && !prob.implicit_substep)
        throw UnsupportedError("solve: imex mode requires implicit_substep");

    const bool track_lyapunov = prob.ustar && prob.pstar && prob.f.has_eval();

    auto residuals = [&](const Vector& u, const Vector& p) {
        Vector ru = prob.f.grad(u) + prob.B.apply_transpose(p);
        Vector rp = prob.B.apply(u) - prob.b;
        return std::pair{linf(ru), linf(rp)};
    };

    ConvergenceRecord rec;
    {
        auto [ru, rp] = residuals(state.u, state.p);
        rec.initial_residual = std::max(ru, rp);
    }

    if (params.param_mode == ParamMode::theoretical)
        warn_if_not_unit_convexity(prob, prob.iv_factory(state.u, state.k));

    double last_alpha = params.alpha;
    double last_gamma = params.gamma;
    double alpha_seed = 0.0;

    for (int iter = 0;; ++iter) {
        auto [ru, rp] = residuals(state.u, state.p);
        const double res = std::max(ru, rp);

        IterationRow row;
        row.k = state.k;
        row.residual_inf = res;
        row.residual_u_inf = ru;
        row.residual_p_inf = rp;
        row.alpha_used = last_alpha;
        row.gamma_used = last_gamma;
        if (track_lyapunov && state.iq.has_apply())
            row.lyapunov = lyapunov(state, *prob.ustar, *prob.pstar, prob.f);

        if (res <= tol * rec.initial_residual) {
            rec.rows.push_back(row);
            rec.status = Status::converged;
            break;
        }
        if (rec.initial_residual > 0.0 && res > kDivergenceFactor * rec.initial_residual) {
            rec.rows.push_back(row);
            rec.status = Status::diverged;
            break;
        }
        if (iter >= max_iter) {
            rec.rows.push_back(row);
            rec.status = Status::max_iter;
            break;
        }

        const SpdOperator iv = prob.iv_factory(state.u, state.k);
        double alpha = params.alpha;
        double gamma = params.gamma;
        const SpdOperator* hint = nullptr;
        SpdOperator iq_next;
        if (params.param_mode == ParamMode::theoretical) {
            TheoreticalStep ts = resolve_theoretical(prob, state, iv, alpha_seed);
            alpha = ts.alpha;
            gamma = ts.gamma;
            row.rate_bound = ts.rate;
            iq_next = std::move(ts.iq_next);
            hint = &iq_next;
            alpha_seed = alpha;
        }
        row.alpha_used = alpha;
        row.gamma_used = gamma;
        row.vcycles_used = prob.vcycles_per_dual_solve;
        rec.rows.push_back(row);

        state = do_step(state, prob, alpha, gamma, params.mode, hint);
        last_alpha = alpha;
        last_gamma = gamma;
    }
    return rec;
}

bool SandwichReport::any_violation() const {
    return std::any_of(rows.begin(), rows.end(), [](const SandwichRow& r) { return r.violation; });
}

SandwichReport verify_sandwich(const std::vector<SpdOperator>& iqstar_seq,
                               const std::vector<SpdOperator>& iq_seq,
                               const std::vector<SpdOperator>& stilde_seq,
                               const std::vector<SpdOperator>& s_seq,
                               const std::vector<double>& omega_seq, double delta) {
    const std::size_t n = stilde_seq.size();
    // the conclusion at step k rests on the metric approximation quality at
    // both k and k+1, so the metric sequences run one element longer
    if (iqstar_seq.size() != n + 1 || iq_seq.size() != n + 1 || s_seq.size() != n ||
        omega_seq.size() != n)
        throw DimensionError(
            "verify_sandwich: need K surrogate entries and K+1 metric entries, index-aligned");
    if (delta < 0.0 || delta >= 1.0) throw InvalidArgument("verify_sandwich: delta must be in [0,1)");

    constexpr double kTol = 1e-9;
    SandwichReport report;
    report.delta = delta;
    report.rows.reserve(n);

    auto radius_at = [&](std::size_t k) {
        Eigen::MatrixXd iqs = iqstar_seq[k].materialize().to_dense();
        Eigen::MatrixXd iq = iq_seq[k].materialize().to_dense();
        Eigen::MatrixXd m = Eigen::MatrixXd::Identity(iq.rows(), iq.cols()) - iq.ldlt().solve(iqs);
        return m.eigenvalues().cwiseAbs().maxCoeff();
    };

    for (std::size_t k = 0; k < n; ++k) {
        const double w = omega_seq[k];
        if (!(w > 0.0 && w < 1.0)) throw InvalidArgument("verify_sandwich: omega must be in (0,1)");
        for (const SpdOperator* op :
             {&iqstar_seq[k], &iqstar_seq[k + 1], &iq_seq[k], &iq_seq[k + 1], &stilde_seq[k],
              &s_seq[k]})
            if (!op->has_materialize())
                throw UnsupportedError("verify_sandwich: all operators must be materializable");

        Eigen::MatrixXd iqs = iqstar_seq[k].materialize().to_dense();
        Eigen::MatrixXd st = stilde_seq[k].materialize().to_dense();
        Eigen::MatrixXd s = s_seq[k].materialize().to_dense();

        SandwichRow row;
        row.hyp1_radius = std::max(radius_at(k), radius_at(k + 1));
        row.hyp1_ok = row.hyp1_radius <= delta / (1.0 + delta) + kTol;

        if (delta == 0.0) {
            row.hyp2_ok = true;  // the semidefinite condition degenerates to 0 <= S/2
        } else {
            const double lmax = pencil_extremes(iqs, s).second;
            row.hyp2_ok = lmax <= (1.0 - w) / (4.0 * delta * w) * (1.0 + kTol);
        }
        row.hypotheses_met = row.hyp1_ok && row.hyp2_ok;

        auto [lmin, lmax] = pencil_extremes(st, s);
        row.lambda_min = lmin;
        row.lambda_max = lmax;
        const bool within = lmin >= 0.5 - delta - kTol && lmax <= 1.5 + delta + kTol;
        row.violation = row.hypotheses_met && !within;
        report.rows.push_back(row);
    }
    return report;
}

}  // namespace tpdv
