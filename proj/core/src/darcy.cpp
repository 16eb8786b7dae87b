#include "tpdv/darcy.hpp"

#include "tpdv/errors.hpp"

#include <chrono>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <memory>
#include <ostream>

namespace tpdv {

namespace {

constexpr double kPi = 3.14159265358979323846264338327950288;

std::vector<Eigen::Matrix2d> kinv_blocks(const SparseMatrix& kinv) {
    const int n = kinv.rows() / 2;
    Eigen::MatrixXd dense = kinv.to_dense();
    std::vector<Eigen::Matrix2d> blocks(n);
    for (int t = 0; t < n; ++t) blocks[t] = dense.block<2, 2>(2 * t, 2 * t);
    return blocks;
}

SpdOperator p0_mass_operator(const Mesh& mesh, const std::vector<double>& sigma) {
    Vector d(2 * mesh.n_triangles());
    for (int t = 0; t < mesh.n_triangles(); ++t) {
        d[2 * t] = sigma[t] * mesh.areas[t];
        d[2 * t + 1] = d[2 * t];
    }
    return SpdOperator::diagonal(d);
}

SpdOperator p0_mass_operator(const Mesh& mesh, const std::vector<Eigen::Matrix2d>& sigma) {
    auto blocks = std::make_shared<std::vector<Eigen::Matrix2d>>();
    auto inv_blocks = std::make_shared<std::vector<Eigen::Matrix2d>>();
    blocks->reserve(sigma.size());
    inv_blocks->reserve(sigma.size());
    for (int t = 0; t < mesh.n_triangles(); ++t) {
        Eigen::Matrix2d b = sigma[t] * mesh.areas[t];
        blocks->push_back(b);
        inv_blocks->push_back(b.inverse());
    }
    const int n = 2 * mesh.n_triangles();
    auto blockwise = [](const std::shared_ptr<std::vector<Eigen::Matrix2d>>& bs) {
        return [bs](const Vector& x) {
            Vector y(x.size());
            for (std::size_t t = 0; t < bs->size(); ++t)
                y.segment<2>(2 * t) = (*bs)[t] * x.segment<2>(2 * t);
            return y;
        };
    };
    return SpdOperator(n, blockwise(blocks), blockwise(inv_blocks), [blocks, n]() {
        std::vector<Triplet> tr;
        for (std::size_t t = 0; t < blocks->size(); ++t)
            for (int i = 0; i < 2; ++i)
                for (int j = 0; j < 2; ++j)
                    tr.push_back({static_cast<int>(2 * t) + i, static_cast<int>(2 * t) + j,
                                  (*blocks)[t](i, j)});
        return SparseMatrix::from_triplets(n, n, tr);
    });
}

}  // namespace

void DarcyCoeffs::validate() const {
    if (!(mu > 0.0) || !(rho > 0.0)) throw InvalidArgument("darcy: mu and rho must be positive");
    if (beta_f < 0.0) throw InvalidArgument("darcy: Forchheimer number must be nonnegative");
    if (scalar_permeability() && !(k_scalar > 0.0))
        throw InvalidArgument("darcy: permeability must be positive");
}

std::vector<double> sigma_of_u(const Vector& u, const DarcyCoeffs& coeffs) {
    coeffs.validate();
    if (!coeffs.scalar_permeability())
        throw UnsupportedError("sigma_of_u: tensor permeability needs the kinv overload");
    const int n = static_cast<int>(u.size()) / 2;
    std::vector<double> sigma(n);
    for (int t = 0; t < n; ++t) {
        const double speed = u.segment<2>(2 * t).norm();
        sigma[t] = (coeffs.mu / coeffs.k_scalar + coeffs.beta_f * speed) / coeffs.rho;
    }
    return sigma;
}

std::vector<Eigen::Matrix2d> sigma_of_u(const Vector& u, const DarcyCoeffs& coeffs,
                                        const SparseMatrix& kinv) {
    coeffs.validate();
    const int n = static_cast<int>(u.size()) / 2;
    auto blocks = kinv_blocks(kinv);
    std::vector<Eigen::Matrix2d> sigma(n);
    for (int t = 0; t < n; ++t) {
        const double speed = u.segment<2>(2 * t).norm();
        sigma[t] = (coeffs.mu * blocks[t] +
                    coeffs.beta_f * speed * Eigen::Matrix2d::Identity()) /
                   coeffs.rho;
    }
    return sigma;
}

std::pair<Vector, Vector> darcy_residual(const PrimalDualState& state, const DarcyProblem& prob) {
    const Mesh& mesh = prob.mesh();
    if (state.u.size() != 2 * mesh.n_triangles() || state.p.size() != mesh.n_vertices())
        throw DimensionError("darcy_residual: state size mismatch");
    Vector btp = prob.fem.b_mat.apply_transpose(state.p);
    Vector ru = prob.fu - btp;
    if (prob.coeffs.scalar_permeability()) {
        auto sigma = sigma_of_u(state.u, prob.coeffs);
        for (int t = 0; t < mesh.n_triangles(); ++t)
            ru.segment<2>(2 * t) -= sigma[t] * mesh.areas[t] * state.u.segment<2>(2 * t);
    } else {
        auto sigma = sigma_of_u(state.u, prob.coeffs, prob.fem.kinv);
        for (int t = 0; t < mesh.n_triangles(); ++t)
            ru.segment<2>(2 * t) -= mesh.areas[t] * (sigma[t] * state.u.segment<2>(2 * t));
    }
    Vector rp = prob.gp - prob.fem.b_mat.apply(state.u);
    return {std::move(ru), std::move(rp)};
}

Vector imex_velocity_update(const Vector& u_k, const Vector& p_next, double alpha,
                            const std::vector<double>& sigma_k, const DarcyCoeffs& coeffs,
                            const Vector& fu, const Mesh& mesh, const SparseMatrix& grad,
                            double* max_defect) {
    coeffs.validate();
    if (!coeffs.scalar_permeability())
        throw UnsupportedError("imex velocity update: tensor permeability is out of scope");
    if (!(alpha > 0.0)) throw InvalidArgument("imex velocity update: alpha must be positive");
    const int nt = mesh.n_triangles();
    if (u_k.size() != 2 * nt || static_cast<int>(sigma_k.size()) != nt)
        throw DimensionError("imex velocity update: size mismatch");

    const double mu_over_rho_k = coeffs.mu / (coeffs.rho * coeffs.k_scalar);
    const double beta_over_rho = coeffs.beta_f / coeffs.rho;
    Vector grad_p = grad.apply(p_next);
    Vector u_next(2 * nt);
    double worst = 0.0;
    for (int t = 0; t < nt; ++t) {
        const Eigen::Vector2d ut = u_k.segment<2>(2 * t);
        const Eigen::Vector2d f_elem = fu.segment<2>(2 * t) / mesh.areas[t];
        const double s_over_a = sigma_k[t] / alpha;
        const Eigen::Vector2d v =
            s_over_a * ut - mu_over_rho_k * ut - grad_p.segment<2>(2 * t) + f_elem;
        const double vn = v.norm();
        const double eta = 0.5 * s_over_a + 0.5 * std::sqrt(s_over_a * s_over_a + 4.0 * beta_over_rho * vn);
        const Eigen::Vector2d un = v / eta;
        u_next.segment<2>(2 * t) = un;
        const double defect =
            std::abs((s_over_a + beta_over_rho * un.norm()) * un.norm() - vn) / std::max(vn, 1e-300);
        worst = std::max(worst, vn == 0.0 ? 0.0 : defect);
    }
    if (max_defect) *max_defect = std::max(*max_defect, worst);
    if (worst > 1e-12)
        throw SolveError("imex velocity update: element magnitude equation residual " +
                         std::to_string(worst));
    return u_next;
}

DarcyProblem make_manufactured_problem(int n, const DarcyCoeffs& coeffs, int mg_cycles) {
    if (n < 2) throw InvalidArgument("manufactured problem: need n >= 2");
    coeffs.validate();

    DarcyProblem prob;
    prob.coeffs = coeffs;
    prob.mg_cycles = mg_cycles;

    int coarse = n;
    int levels = 0;
    while (coarse % 2 == 0 && coarse / 2 >= 4) {
        coarse /= 2;
        ++levels;
    }
    prob.chain = refinement_chain(coarse, levels);
    const Mesh& mesh = prob.chain.back();

    if (coeffs.scalar_permeability())
        prob.fem = assemble_fem_operators(mesh, coeffs.k_scalar);
    else
        prob.fem = assemble_fem_operators(mesh, coeffs.k_tensor);

    auto u_exact = [](double x, double y) {
        return Eigen::Vector2d(std::sin(kPi * x) * std::cos(kPi * y) + 2.0,
                               std::cos(kPi * x) * std::sin(kPi * y));
    };
    auto grad_p = [](double x, double y) { return Eigen::Vector2d(3.0 * x * x, 3.0 * y * y); };
    const DarcyCoeffs cf = coeffs;
    auto f_exact = [u_exact, grad_p, cf](double x, double y) {
        const Eigen::Vector2d u = u_exact(x, y);
        Eigen::Vector2d momentum;
        if (cf.scalar_permeability())
            momentum = (cf.mu / cf.k_scalar) * u;
        else
            momentum = cf.mu * (cf.k_tensor(x, y) * u);
        momentum += cf.beta_f * u.norm() * u;
        return Eigen::Vector2d(momentum / cf.rho + grad_p(x, y));
    };
    auto g_exact = [](double x, double y) {
        return 2.0 * kPi * std::cos(kPi * x) * std::cos(kPi * y);
    };
    auto gn_exact = [u_exact](const Eigen::Vector2d& x, const Eigen::Vector2d& normal) {
        return u_exact(x.x(), x.y()).dot(normal);
    };

    Loads loads = assemble_rhs(mesh, f_exact, g_exact, gn_exact);
    prob.fu = std::move(loads.fu);
    prob.gp = std::move(loads.gp);
    prob.u_exact = u_exact;
    prob.p_exact = [](double x, double y) { return x * x * x + y * y * y; };  // zero mean
    return prob;
}

namespace {

// Mutable per-solve wiring shared by the closures handed to the solver.
struct DarcySolveState {
    SparseMatrix istar;
    MgHierarchy base;
    int mg_cycles = 1;
    double max_imex_defect = 0.0;
    double max_pressure_mean = 0.0;
};

SpdOperator mg_metric(const std::shared_ptr<DarcySolveState>& st) {
    auto hier = std::make_shared<const MgHierarchy>(st->base.with_fine_matrix(st->istar));
    const int cycles = st->mg_cycles;
    SpdOperator cycles_op = mg_inverse(hier, cycles);
    return SpdOperator(hier->dim(), nullptr,
                       [cycles_op](const Vector& r) { return cycles_op.apply(r); });
}

SparseMatrix darcy_schur(const DarcyProblem& prob, const Vector& u) {
    const Mesh& mesh = prob.mesh();
    if (prob.coeffs.scalar_permeability())
        return assemble_variable_laplacian(mesh, sigma_of_u(u, prob.coeffs));
    // block-diagonal middle: B (M0^sigma)^{-1} B^T through sparse products
    auto sigma = sigma_of_u(u, prob.coeffs, prob.fem.kinv);
    std::vector<Triplet> tr;
    tr.reserve(sigma.size() * 4);
    for (std::size_t t = 0; t < sigma.size(); ++t) {
        Eigen::Matrix2d inv = (sigma[t] * mesh.areas[t]).inverse();
        for (int i = 0; i < 2; ++i)
            for (int j = 0; j < 2; ++j)
                tr.push_back({static_cast<int>(2 * t) + i, static_cast<int>(2 * t) + j, inv(i, j)});
    }
    SparseMatrix minv = SparseMatrix::from_triplets(2 * mesh.n_triangles(), 2 * mesh.n_triangles(), tr);
    return prob.fem.b_mat.multiply(minv.multiply(prob.fem.b_mat.transpose()));
}

}  // namespace

DarcySolveResult solve_darcy(const DarcyProblem& prob, Mode mode, const TpdvParams& params,
                             double tol, int max_iter) {
    const Mesh& mesh = prob.mesh();
    const int nt = mesh.n_triangles();
    prob.coeffs.validate();
    if (mode == Mode::imex && !prob.coeffs.scalar_permeability())
        throw UnsupportedError("solve_darcy: imex requires scalar permeability");

    auto blocks = std::make_shared<std::vector<Eigen::Matrix2d>>(kinv_blocks(prob.fem.kinv));
    const DarcyCoeffs cf = prob.coeffs;
    auto fu = std::make_shared<Vector>(prob.fu);
    auto areas = std::make_shared<std::vector<double>>(mesh.areas);

    SaddleProblem sp;
    sp.f.dim = 2 * nt;
    sp.f.grad = [blocks, fu, areas, cf](const Vector& u) {
        Vector g(u.size());
        for (std::size_t t = 0; t < areas->size(); ++t) {
            const Eigen::Vector2d ut = u.segment<2>(2 * t);
            Eigen::Vector2d m = cf.mu * ((*blocks)[t] * ut) + cf.beta_f * ut.norm() * ut;
            g.segment<2>(2 * t) = (*areas)[t] / cf.rho * m;
        }
        return Vector(g - *fu);
    };
    sp.f.eval = [blocks, fu, areas, cf](const Vector& u) {
        double e = 0.0;
        for (std::size_t t = 0; t < areas->size(); ++t) {
            const Eigen::Vector2d ut = u.segment<2>(2 * t);
            e += (*areas)[t] / cf.rho *
                 (0.5 * cf.mu * ut.dot((*blocks)[t] * ut) +
                  cf.beta_f / 3.0 * std::pow(ut.norm(), 3));
        }
        return e - fu->dot(u);
    };
    sp.B = prob.fem.b_mat;
    sp.b = prob.gp;
    sp.vcycles_per_dual_solve = prob.mg_cycles;

    const DarcyProblem* pp = &prob;
    sp.iv_factory = [pp](const Vector& u, int) {
        if (pp->coeffs.scalar_permeability())
            return p0_mass_operator(pp->mesh(), sigma_of_u(u, pp->coeffs));
        return p0_mass_operator(pp->mesh(), sigma_of_u(u, pp->coeffs, pp->fem.kinv));
    };

    auto st = std::make_shared<DarcySolveState>();
    st->mg_cycles = prob.mg_cycles;
    {
        Vector u0 = Vector::Zero(2 * nt);
        st->istar = darcy_schur(prob, u0);
        st->base = MgHierarchy::build(prob.chain, st->istar);
    }
    sp.dual_update = [pp, st](const SpdOperator&, const Vector& u, int, double alpha,
                              double gamma) {
        SparseMatrix s_k = darcy_schur(*pp, u);
        const double ag = alpha * gamma;
        const double w = 1.0 / (1.0 + ag);
        st->istar = SparseMatrix::add(w, st->istar, 1.0 - w, s_k);
        st->base = st->base.with_fine_matrix(st->istar);
        return mg_metric(st);
    };

    const Mesh* mp = &mesh;
    sp.dual_postprocess = [mp, st](Vector& p) {
        p = apply_zero_mean(p, *mp);
        const double scale = p.cwiseAbs().maxCoeff();
        if (scale > 0.0)
            st->max_pressure_mean =
                std::max(st->max_pressure_mean, std::abs(p1_integral(p, *mp)) / scale);
    };

    if (mode == Mode::imex) {
        const SparseMatrix* grad_mat = &prob.fem.grad;
        sp.implicit_substep = [pp, st, grad_mat](const Vector& u, const Vector& p_next,
                                                 double alpha, const SpdOperator&) {
            auto sigma = sigma_of_u(u, pp->coeffs);
            return imex_velocity_update(u, p_next, alpha, sigma, pp->coeffs, pp->fu, pp->mesh(),
                                        *grad_mat, &st->max_imex_defect);
        };
        sp.imex_grad = [blocks, fu, areas, cf](const Vector& u_next, const Vector& u_prev) {
            Vector g(u_next.size());
            for (std::size_t t = 0; t < areas->size(); ++t) {
                const Eigen::Vector2d up = u_prev.segment<2>(2 * t);
                const Eigen::Vector2d un = u_next.segment<2>(2 * t);
                Eigen::Vector2d m = cf.mu * ((*blocks)[t] * up) + cf.beta_f * un.norm() * un;
                g.segment<2>(2 * t) = (*areas)[t] / cf.rho * m;
            }
            return Vector(g - *fu);
        };
    }

    PrimalDualState init;
    init.u = Vector::Zero(2 * nt);
    init.p = Vector::Zero(mesh.n_vertices());
    init.iq = mg_metric(st);
    init.k = 0;

    TpdvParams p = params;
    p.mode = mode;
    DarcySolveResult result;
    result.record = solve(sp, p, tol, max_iter, std::move(init));
    result.max_imex_defect = st->max_imex_defect;
    result.max_pressure_mean = st->max_pressure_mean;
    return result;
}

void BenchmarkTable::write_csv(std::ostream& os) const {
    os << "h,dofs,iterations,vcycles,seconds,status\n";
    char buf[160];
    for (const auto& r : rows) {
        std::snprintf(buf, sizeof(buf), "%.17g,%d,%d,%ld,%.3f,%s\n", r.h, r.dofs, r.iterations,
                      r.vcycles, r.seconds, to_string(r.status).c_str());
        os << buf;
    }
}

void BenchmarkTable::write_csv(const std::string& path) const {
    std::ofstream os(path, std::ios::binary);
    if (!os) throw IoError("cannot open for writing: " + path);
    write_csv(os);
    if (!os) throw IoError("write failed: " + path);
}

void BenchmarkTable::write_text(std::ostream& os) const {
    char buf[200];
    std::snprintf(buf, sizeof(buf), "%-12s %-10s %-11s %-9s %-9s %s\n", "h", "dofs", "iterations",
                  "vcycles", "seconds", "status");
    os << buf;
    for (const auto& r : rows) {
        std::snprintf(buf, sizeof(buf), "%-12.6g %-10d %-11d %-9ld %-9.3f %s\n", r.h, r.dofs,
                      r.iterations, r.vcycles, r.seconds, to_string(r.status).c_str());
        os << buf;
    }
}

BenchmarkTable run_benchmark(Mode mode, const std::vector<int>& inv_h_list,
                             const DarcyCoeffs& coeffs, const TpdvParams& params, double tol,
                             int max_iter, int mg_cycles) {
    BenchmarkTable table;
    for (int inv_h : inv_h_list) {
        if (inv_h < 2) throw InvalidArgument("run_benchmark: need 1/h >= 2");
        DarcyProblem prob = make_manufactured_problem(2 * inv_h, coeffs, mg_cycles);
        const auto start = std::chrono::steady_clock::now();
        DarcySolveResult result = solve_darcy(prob, mode, params, tol, max_iter);
        const auto stop = std::chrono::steady_clock::now();
        BenchmarkRow row;
        row.h = 1.0 / inv_h;
        row.dofs = prob.dofs();
        row.iterations = result.record.iterations();
        row.vcycles = result.record.total_vcycles();
        row.seconds = std::chrono::duration<double>(stop - start).count();
        row.status = result.record.status;
        table.rows.push_back(row);
    }
    return table;
}

}  // namespace tpdv
