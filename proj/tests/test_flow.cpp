#include "tpdv/errors.hpp"
#include "tpdv/flow.hpp"
#include "tpdv/quadratic.hpp"
#include "tpdv/rng.hpp"

#include <doctest.h>

#include "oracles.hpp"

#include <cmath>

using namespace tpdv;

namespace {

QuadraticSaddle fixture(std::uint64_t seed, int n = 6, int m = 2, double cond = 4.0) {
    QuadraticSaddleSpec spec;
    spec.n = n;
    spec.m = m;
    spec.cond_a = cond;
    spec.seed = seed;
    return make_quadratic_saddle(spec);
}

FlowState zero_start(const QuadraticSaddle& qs) {
    FlowState s;
    s.u = Vector::Zero(qs.a.rows());
    s.p = Vector::Zero(qs.b_op.rows());
    s.iq = qs.schur;
    s.t = 0.0;
    return s;
}

double flow_energy(const FlowState& s, const QuadraticSaddle& qs) {
    Vector du = s.u - qs.ustar;
    Vector dp = s.p - qs.pstar;
    return 0.5 * du.dot(qs.a * du) + 0.5 * dp.dot(s.iq * dp);
}

}  // namespace

TEST_CASE("flow_rhs") {
    QuadraticSaddle qs = fixture(2);
    FlowProblem fp = to_flow_problem(qs);

    SUBCASE("equilibrium with matched metric is static") {
        FlowState s;
        s.u = qs.ustar;
        s.p = qs.pstar;
        s.iq = qs.schur;  // stilde equals the Schur complement here
        FlowRhs rhs = flow_rhs(s, fp);
        CHECK(oracle::linf(rhs.du) < 1e-12);
        CHECK(oracle::linf(rhs.dp) < 1e-12);
        CHECK(rhs.diq.cwiseAbs().maxCoeff() < 1e-12);
    }
    SUBCASE("only the metric flows at the saddle") {
        FlowState s;
        s.u = qs.ustar;
        s.p = qs.pstar;
        s.iq = 2.0 * qs.schur;
        FlowRhs rhs = flow_rhs(s, fp);
        CHECK(oracle::linf(rhs.du) < 1e-12);
        CHECK(oracle::linf(rhs.dp) < 1e-12);
        Eigen::MatrixXd expected = fp.gamma_of_t(0.0) * (qs.schur - s.iq);
        CHECK((rhs.diq - expected).cwiseAbs().maxCoeff() < 1e-13);
    }
    SUBCASE("matches a term-by-term dense transcription at a random point") {
        Rng rng(5);
        FlowState s;
        s.u = rng.normal_vector(6);
        s.p = rng.normal_vector(2);
        s.iq = random_spd(rng, 2, 3.0);
        s.t = 0.3;
        FlowRhs rhs = flow_rhs(s, fp);

        Eigen::MatrixXd iv = qs.iv_scale * Eigen::MatrixXd::Identity(6, 6);
        Vector grad = qs.a * s.u - qs.c;
        Vector gu = -grad - qs.b_op.transpose() * s.p;
        Vector du_ref = iv.ldlt().solve(gu);
        Vector gp_ref = qs.b_op * s.u - qs.b_rhs -
                        qs.b_op * iv.ldlt().solve(grad + qs.b_op.transpose() * s.p);
        Vector dp_ref = s.iq.ldlt().solve(gp_ref);
        Eigen::MatrixXd diq_ref = fp.gamma_of_t(s.t) * (qs.schur - s.iq);

        CHECK(oracle::linf(rhs.du - du_ref) < 1e-12 * (1.0 + oracle::linf(du_ref)));
        CHECK(oracle::linf(rhs.dp - dp_ref) < 1e-12 * (1.0 + oracle::linf(dp_ref)));
        CHECK((rhs.diq - diq_ref).cwiseAbs().maxCoeff() < 1e-12);
    }
    SUBCASE("singular metric is rejected") {
        FlowState s = zero_start(qs);
        s.iq = Eigen::MatrixXd::Zero(2, 2);
        CHECK_THROWS_AS((void)flow_rhs(s, fp), SolveError);
    }
}

TEST_CASE("integrate") {
    QuadraticSaddle qs = fixture(7);
    FlowProblem fp = to_flow_problem(qs);

    SUBCASE("zero horizon returns the initial sample only") {
        Trajectory traj = integrate(fp, zero_start(qs), 0.0, 1e-2);
        REQUIRE(traj.samples.size() == 1);
        CHECK(traj.samples[0].t == 0.0);
        CHECK(traj.spd_ok);
    }
    SUBCASE("energy decays monotonically on the well-conditioned instance") {
        Trajectory traj = integrate(fp, zero_start(qs), 2.0, 1e-3);
        REQUIRE(traj.spd_ok);
        double prev = flow_energy(traj.samples.front(), qs);
        for (std::size_t i = 1; i < traj.samples.size(); i += 50) {
            const double cur = flow_energy(traj.samples[i], qs);
            CHECK(cur <= prev * (1.0 + 1e-9));
            prev = cur;
        }
        CHECK(flow_energy(traj.samples.back(), qs) >= 0.0);
    }
    SUBCASE("halving dt shrinks the endpoint error fourth order") {
        // self-convergence: |x(dt) - x(dt/2)| drops ~16x per halving
        const double t_end = 0.5;
        auto endpoint = [&](double dt) {
            Trajectory traj = integrate(fp, zero_start(qs), t_end, dt);
            REQUIRE(traj.spd_ok);
            return traj.samples.back();
        };
        FlowState a = endpoint(0.02);
        FlowState b = endpoint(0.01);
        FlowState c = endpoint(0.005);
        const double d1 = oracle::linf(a.u - b.u) + oracle::linf(a.p - b.p);
        const double d2 = oracle::linf(b.u - c.u) + oracle::linf(b.p - c.p);
        REQUIRE(d2 > 0.0);
        const double order = std::log2(d1 / d2);
        CHECK(order > 3.5);
        CHECK(order < 4.5);
    }
    SUBCASE("metric flow follows the exact exponential with constant surrogate") {
        FlowState s = zero_start(qs);
        s.iq = 3.0 * qs.schur;  // start away from the target
        const double t_end = 1.0;
        const double dt = 1e-3;
        Trajectory traj = integrate(fp, s, t_end, dt);
        REQUIRE(traj.spd_ok);
        const double gamma = fp.gamma_of_t(0.0);
        const double f0 = (s.iq - qs.schur).norm();
        for (std::size_t i = 0; i < traj.samples.size(); i += 100) {
            const double t = traj.samples[i].t;
            const double reached = (traj.samples[i].iq - qs.schur).norm();
            CHECK(reached <= std::exp(-gamma * t) * f0 * (1.0 + 1e-6) + 1e-12);
            CHECK(reached >= std::exp(-gamma * t) * f0 * (1.0 - 1e-6) - 1e-12);
        }
    }
    SUBCASE("losing positive definiteness aborts with the last valid state") {
        FlowProblem bad = fp;
        // a surrogate that is not SPD drags the metric indefinite
        bad.stilde_of_t = [&](double) {
            Eigen::MatrixXd m = -5.0 * Eigen::MatrixXd::Identity(2, 2);
            return m;
        };
        bad.gamma_of_t = [](double) { return 4.0; };
        Trajectory traj = integrate(bad, zero_start(qs), 5.0, 1e-2);
        CHECK(!traj.spd_ok);
        CHECK(!traj.diagnostic.empty());
        CHECK(!traj.samples.empty());  // last valid state kept
        Eigen::LLT<Eigen::MatrixXd> llt(traj.samples.back().iq);
        CHECK(llt.info() == Eigen::Success);
    }
}

TEST_CASE("check_decay") {
    QuadraticSaddle qs = fixture(11, 8, 3, 6.0);
    FlowProblem fp = to_flow_problem(qs);

    SUBCASE("saddle start keeps zero energy") {
        FlowState s;
        s.u = qs.ustar;
        s.p = qs.pstar;
        s.iq = qs.schur;
        Trajectory traj = integrate(fp, s, 0.5, 1e-3);
        DecayReport rep = check_decay(traj, qs.ustar, qs.pstar, fp);
        CHECK(rep.hypothesis_met);
        CHECK(rep.violations == 0);
        for (std::size_t i = 0; i < rep.samples.size(); i += 100)
            CHECK(std::abs(rep.samples[i].energy) < 1e-12);
    }
    SUBCASE("quadratic instance satisfies the exponential bound") {
        Trajectory traj = integrate(fp, zero_start(qs), 3.0, 1e-3);
        DecayReport rep = check_decay(traj, qs.ustar, qs.pstar, fp, 1e-6);
        CHECK(rep.hypothesis_met);
        CHECK(rep.violations == 0);
        CHECK(rep.samples.size() == traj.samples.size());
        for (const auto& s : rep.samples) CHECK(s.energy >= 0.0);
    }
    SUBCASE("time-varying metric keeps the bound with time-dependent rates") {
        // I_V(t) interpolates two SPD matrices; bounds recomputed per time
        Rng rng(23);
        const int n = static_cast<int>(qs.a.rows());
        Eigen::MatrixXd m0 = qs.iv_scale * Eigen::MatrixXd::Identity(n, n);
        Eigen::MatrixXd m1 = random_spd(rng, n, 3.0) * qs.iv_scale;
        const double t_end = 2.0;
        auto iv_dense = [m0, m1, t_end](double t) {
            const double w = std::min(1.0, std::max(0.0, t / t_end));
            return Eigen::MatrixXd((1.0 - w) * m0 + w * m1);
        };
        FlowProblem fp2 = fp;
        fp2.iv_of_t = [iv_dense](double t) { return SpdOperator::from_dense(iv_dense(t)); };
        auto schur_of_t = [&](double t) {
            return Eigen::MatrixXd(qs.b_op * iv_dense(t).ldlt().solve(qs.b_op.transpose()));
        };
        fp2.stilde_of_t = schur_of_t;  // exact surrogate at all times
        auto bounds_of_t = [&, aop = qs.a](double t) {
            Eigen::GeneralizedSelfAdjointEigenSolver<Eigen::MatrixXd> es(aop, iv_dense(t),
                                                                         Eigen::EigenvaluesOnly);
            FlowBounds b;
            b.mu_f = es.eigenvalues()[0];
            b.l_f = es.eigenvalues()[es.eigenvalues().size() - 1];
            b.mu_sst = 1.0;
            return b;
        };
        fp2.bounds_of_t = bounds_of_t;
        fp2.gamma_of_t = [bounds_of_t](double t) {
            const FlowBounds b = bounds_of_t(t);
            return (b.mu_f - 0.5) / (b.mu_f * b.l_f) * b.mu_sst;
        };
        // hypothesis needs mu_f > 1/2 along the whole path
        bool ok = true;
        for (double t = 0.0; t <= t_end; t += 0.05) ok = ok && bounds_of_t(t).mu_f > 0.5;
        REQUIRE(ok);

        FlowState s = zero_start(qs);
        Trajectory traj = integrate(fp2, s, t_end, 1e-3);
        REQUIRE(traj.spd_ok);
        DecayReport rep = check_decay(traj, qs.ustar, qs.pstar, fp2, 1e-5);
        CHECK(rep.hypothesis_met);
        CHECK(rep.violations == 0);
    }
    SUBCASE("weak convexity reports hypothesis not met") {
        FlowProblem fp2 = fp;
        fp2.bounds_of_t = [](double) { return FlowBounds{0.4, 2.0, 1.0}; };
        Trajectory traj = integrate(fp, zero_start(qs), 0.1, 1e-3);
        DecayReport rep = check_decay(traj, qs.ustar, qs.pstar, fp2);
        CHECK(!rep.hypothesis_met);
        CHECK(rep.violations == 0);
        CHECK(rep.samples.empty());
    }
}

TEST_CASE("strong Lyapunov derivative estimate sharpens under dt refinement") {
    QuadraticSaddle qs = fixture(29, 6, 2, 5.0);
    FlowProblem fp = to_flow_problem(qs);
    const FlowBounds b = fp.bounds_of_t(0.0);
    const double beta = (b.mu_f - 0.5) / (b.mu_f * b.l_f);
    const double mu_tilde = beta * std::min(b.mu_f, b.mu_sst);

    auto worst_margin = [&](double dt) {
        Trajectory traj = integrate(fp, zero_start(qs), 0.5, dt);
        REQUIRE(traj.spd_ok);
        double worst = -1e300;
        for (std::size_t i = 0; i + 1 < traj.samples.size(); ++i) {
            const double e0 = flow_energy(traj.samples[i], qs);
            const double e1 = flow_energy(traj.samples[i + 1], qs);
            const double derivative = (e1 - e0) / dt;
            worst = std::max(worst, derivative + mu_tilde * e0);
        }
        return worst;
    };
    const double m1 = worst_margin(2e-3);
    const double m2 = worst_margin(1e-3);
    // any positive overshoot is a discretization artifact and shrinks with dt
    if (m1 > 0.0) CHECK(m2 <= 0.75 * m1 + 1e-12);
    CHECK(m2 < 0.1);
}

TEST_CASE("decay report serializes to csv") {
    DecayReport rep;
    rep.samples.push_back({0.0, 1.0, 1.0, 1e-6});
    rep.samples.push_back({0.5, 0.25, 0.5, 0.2500005});
    std::ostringstream os;
    rep.write_csv(os);
    CHECK(os.str() ==
          "t,E,bound,margin\n"
          "0,1,1,9.9999999999999995e-07\n"
          "0.5,0.25,0.5,0.25000050000000001\n");
}

TEST_CASE("state dump contains the requested samples") {
    QuadraticSaddle qs = fixture(3, 4, 1, 2.0);
    FlowProblem fp = to_flow_problem(qs);
    Trajectory traj = integrate(fp, zero_start(qs), 0.1, 0.01);
    std::ostringstream os;
    dump_states(traj, {0.0, 0.05}, os);
    CHECK(os.str().find("t 0\n") != std::string::npos);
    CHECK(os.str().find("t 0.05") != std::string::npos);
    CHECK(os.str().find("iq") != std::string::npos);
}
