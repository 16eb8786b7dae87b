#include "tpdv/flow.hpp"

#include "tpdv/errors.hpp"

#include <Eigen/Cholesky>

#include <cmath>
#include <cstdio>
#include <fstream>
#include <ostream>

namespace tpdv {

namespace {

bool spd_check(const Eigen::MatrixXd& m) {
    if (m.rows() != m.cols()) return false;
    const double scale = std::max(m.cwiseAbs().maxCoeff(), 1e-300);
    if ((m - m.transpose()).cwiseAbs().maxCoeff() > 1e-12 * scale) return false;
    Eigen::LLT<Eigen::MatrixXd> llt(0.5 * (m + m.transpose()));
    return llt.info() == Eigen::Success;
}

}  // namespace

FlowRhs flow_rhs(const FlowState& state, const FlowProblem& prob) {
    if (state.u.size() != prob.f.dim || state.p.size() != prob.B.rows() ||
        state.iq.rows() != prob.B.rows())
        throw DimensionError("flow_rhs: state dimensions inconsistent with the problem");

    const SpdOperator iv = prob.iv_of_t(state.t);
    Vector grad = prob.f.grad(state.u);
    Vector gu = -grad - prob.B.apply_transpose(state.p);
    Vector du = iv.inv_apply(gu);
    Vector gp = prob.B.apply(state.u) - prob.b + prob.B.apply(du);

    Eigen::LLT<Eigen::MatrixXd> llt(0.5 * (state.iq + state.iq.transpose()));
    if (llt.info() != Eigen::Success) throw SolveError("flow_rhs: dual metric is singular");
    Vector dp = llt.solve(gp);

    const double gamma = prob.gamma_of_t(state.t);
    if (!(gamma > 0.0)) throw InvalidArgument("flow_rhs: gamma(t) must be positive");
    Eigen::MatrixXd diq = gamma * (prob.stilde_of_t(state.t) - state.iq);
    return {std::move(du), std::move(dp), std::move(diq)};
}

Trajectory integrate(const FlowProblem& prob, FlowState init, double t_end, double dt) {
    if (!(dt > 0.0)) throw InvalidArgument("integrate: dt must be positive");
    if (t_end < 0.0) throw InvalidArgument("integrate: t_end must be nonnegative");

    Trajectory traj;
    if (!spd_check(init.iq)) {
        traj.spd_ok = false;
        traj.diagnostic = "initial dual metric is not SPD";
        return traj;
    }
    traj.samples.push_back(init);

    const long steps = std::lround(t_end / dt);
    FlowState s = std::move(init);
    for (long step = 0; step < steps; ++step) {
        auto stage = [&](const FlowState& base, const FlowRhs& k, double h) {
            FlowState out;
            out.u = base.u + h * k.du;
            out.p = base.p + h * k.dp;
            out.iq = base.iq + h * k.diq;
            out.t = base.t + h;
            return out;
        };
        FlowState next;
        try {
            FlowRhs k1 = flow_rhs(s, prob);
            FlowRhs k2 = flow_rhs(stage(s, k1, 0.5 * dt), prob);
            FlowRhs k3 = flow_rhs(stage(s, k2, 0.5 * dt), prob);
            FlowRhs k4 = flow_rhs(stage(s, k3, dt), prob);
            next.u = s.u + dt / 6.0 * (k1.du + 2.0 * k2.du + 2.0 * k3.du + k4.du);
            next.p = s.p + dt / 6.0 * (k1.dp + 2.0 * k2.dp + 2.0 * k3.dp + k4.dp);
            next.iq = s.iq + dt / 6.0 * (k1.diq + 2.0 * k2.diq + 2.0 * k3.diq + k4.diq);
            next.t = (step + 1) * dt;
        } catch (const SolveError& e) {
            // a stage hit an indefinite metric; keep the last valid sample
            traj.spd_ok = false;
            traj.diagnostic = std::string("dual metric lost positive definiteness at t = ") +
                              std::to_string(s.t) + ": " + e.what();
            return traj;
        }

        if (!spd_check(next.iq)) {
            traj.spd_ok = false;
            traj.diagnostic = "dual metric lost positive definiteness at t = " +
                              std::to_string(next.t) + "; last valid state kept";
            return traj;
        }
        traj.samples.push_back(next);
        s = std::move(next);
    }
    return traj;
}

void DecayReport::write_csv(std::ostream& os) const {
    os << "t,E,bound,margin\n";
    char buf[160];
    for (const auto& r : samples) {
        std::snprintf(buf, sizeof(buf), "%.17g,%.17g,%.17g,%.17g\n", r.t, r.energy, r.bound,
                      r.margin);
        os << buf;
    }
}

void DecayReport::write_csv(const std::string& path) const {
    std::ofstream os(path, std::ios::binary);
    if (!os) throw IoError("cannot open for writing: " + path);
    write_csv(os);
    if (!os) throw IoError("write failed: " + path);
}

DecayReport check_decay(const Trajectory& traj, const Vector& ustar, const Vector& pstar,
                        const FlowProblem& prob, double tol) {
    if (!prob.bounds_of_t) throw UnsupportedError("check_decay: problem supplies no bounds");
    if (!prob.f.has_eval()) throw UnsupportedError("check_decay: oracle has no value function");

    DecayReport report;
    report.tol = tol;
    if (traj.samples.empty()) return report;

    auto energy = [&](const FlowState& s) {
        Vector dp = s.p - pstar;
        return bregman_divergence(prob.f, s.u, ustar) + 0.5 * dp.dot(s.iq * dp);
    };

    const double e0 = energy(traj.samples.front());
    double integral = 0.0;
    double prev_mu = 0.0;
    double prev_t = traj.samples.front().t;

    for (std::size_t i = 0; i < traj.samples.size(); ++i) {
        const FlowState& s = traj.samples[i];
        const FlowBounds bounds = prob.bounds_of_t(s.t);
        if (bounds.mu_f <= 0.5) {
            report.hypothesis_met = false;
            report.violations = 0;
            return report;
        }
        const double beta = (bounds.mu_f - 0.5) / (bounds.mu_f * bounds.l_f);
        const double mu_tilde = beta * std::min(bounds.mu_f, bounds.mu_sst);
        if (i > 0) integral += 0.5 * (prev_mu + mu_tilde) * (s.t - prev_t);
        prev_mu = mu_tilde;
        prev_t = s.t;

        DecaySample sample;
        sample.t = s.t;
        sample.energy = energy(s);
        sample.bound = std::exp(-integral) * e0;
        sample.margin = sample.bound * (1.0 + tol) - sample.energy;
        if (sample.margin < 0.0) ++report.violations;
        report.samples.push_back(sample);
    }
    return report;
}

void dump_states(const Trajectory& traj, const std::vector<double>& times, std::ostream& os) {
    char buf[64];
    for (double t : times) {
        std::size_t best = 0;
        for (std::size_t i = 1; i < traj.samples.size(); ++i)
            if (std::abs(traj.samples[i].t - t) < std::abs(traj.samples[best].t - t)) best = i;
        if (traj.samples.empty()) continue;
        const FlowState& s = traj.samples[best];
        std::snprintf(buf, sizeof(buf), "t %.17g\n", s.t);
        os << buf;
        os << "u";
        for (int i = 0; i < s.u.size(); ++i) {
            std::snprintf(buf, sizeof(buf), " %.17g", s.u[i]);
            os << buf;
        }
        os << "\np";
        for (int i = 0; i < s.p.size(); ++i) {
            std::snprintf(buf, sizeof(buf), " %.17g", s.p[i]);
            os << buf;
        }
        os << "\niq";
        for (int i = 0; i < s.iq.rows(); ++i)
            for (int j = 0; j < s.iq.cols(); ++j) {
                std::snprintf(buf, sizeof(buf), " %.17g", s.iq(i, j));
                os << buf;
            }
        os << "\n";
    }
}

FlowProblem to_flow_problem(const QuadraticSaddle& qs) {
    FlowProblem fp;
    fp.f = qs.problem.f;
    fp.B = qs.problem.B;
    fp.b = qs.problem.b;
    const int n = static_cast<int>(qs.a.rows());
    const double scale = qs.iv_scale;
    fp.iv_of_t = [n, scale](double) { return SpdOperator::scaled_identity(n, scale); };
    auto schur = std::make_shared<Eigen::MatrixXd>(qs.schur);
    fp.stilde_of_t = [schur](double) { return *schur; };
    const double mu_f = qs.mu_f;
    const double l_f = qs.l_f;
    const double beta = (mu_f - 0.5) / (mu_f * l_f);
    fp.gamma_of_t = [beta](double) { return beta; };  // mu_sst = 1 for the exact surrogate
    fp.bounds_of_t = [mu_f, l_f](double) { return FlowBounds{mu_f, l_f, 1.0}; };
    fp.ustar = qs.ustar;
    fp.pstar = qs.pstar;
    return fp;
}

}  // namespace tpdv
