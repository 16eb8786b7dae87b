#include "tpdv/fem.hpp"

#include "tpdv/errors.hpp"

#include <cmath>
#include <cstdio>

namespace tpdv {

namespace {

constexpr double kGauss = 0.57735026918962576450914878050196;  // 1/sqrt(3)

// barycentric coordinates of the three edge midpoints (degree-2 exact rule)
constexpr double kMidBary[3][3] = {{0.5, 0.5, 0.0}, {0.0, 0.5, 0.5}, {0.5, 0.0, 0.5}};

}  // namespace

SparseMatrix assemble_weighted_p0_mass(const Mesh& mesh, const std::vector<double>& sigma) {
    if (static_cast<int>(sigma.size()) != mesh.n_triangles())
        throw DimensionError("weighted mass: sigma length != element count");
    std::vector<Triplet> t;
    t.reserve(sigma.size() * 2);
    for (int e = 0; e < mesh.n_triangles(); ++e) {
        if (!(sigma[e] > 0.0)) throw InvalidArgument("weighted mass: nonpositive weight");
        const double v = sigma[e] * mesh.areas[e];
        t.push_back({2 * e, 2 * e, v});
        t.push_back({2 * e + 1, 2 * e + 1, v});
    }
    return SparseMatrix::from_triplets(2 * mesh.n_triangles(), 2 * mesh.n_triangles(), t);
}

SparseMatrix assemble_weighted_p0_mass(const Mesh& mesh,
                                       const std::vector<Eigen::Matrix2d>& sigma) {
    if (static_cast<int>(sigma.size()) != mesh.n_triangles())
        throw DimensionError("weighted mass: sigma length != element count");
    std::vector<Triplet> t;
    t.reserve(sigma.size() * 4);
    for (int e = 0; e < mesh.n_triangles(); ++e) {
        const Eigen::Matrix2d& s = sigma[e];
        if (!(s(0, 0) > 0.0) || !(s.determinant() > 0.0) ||
            std::abs(s(0, 1) - s(1, 0)) > 1e-12 * s.cwiseAbs().maxCoeff())
            throw InvalidArgument("weighted mass: block weight is not SPD");
        const double a = mesh.areas[e];
        for (int i = 0; i < 2; ++i)
            for (int j = 0; j < 2; ++j) t.push_back({2 * e + i, 2 * e + j, s(i, j) * a});
    }
    return SparseMatrix::from_triplets(2 * mesh.n_triangles(), 2 * mesh.n_triangles(), t);
}

SparseMatrix assemble_gradient(const Mesh& mesh) {
    std::vector<Triplet> t;
    t.reserve(static_cast<std::size_t>(mesh.n_triangles()) * 6);
    for (int e = 0; e < mesh.n_triangles(); ++e) {
        const auto& tri = mesh.triangles[e];
        const Eigen::Vector2d& p0 = mesh.vertices[tri[0]];
        const Eigen::Vector2d& p1 = mesh.vertices[tri[1]];
        const Eigen::Vector2d& p2 = mesh.vertices[tri[2]];
        const double inv2a = 1.0 / (2.0 * mesh.areas[e]);
        auto rot = [](const Eigen::Vector2d& d) { return Eigen::Vector2d(-d.y(), d.x()); };
        Eigen::Vector2d g0 = rot(p2 - p1) * inv2a;
        Eigen::Vector2d g1 = rot(p0 - p2) * inv2a;
        Eigen::Vector2d g2 = -g0 - g1;  // rows sum to zero exactly
        const Eigen::Vector2d g[3] = {g0, g1, g2};
        for (int j = 0; j < 3; ++j) {
            t.push_back({2 * e, tri[j], g[j].x()});
            t.push_back({2 * e + 1, tri[j], g[j].y()});
        }
    }
    return SparseMatrix::from_triplets(2 * mesh.n_triangles(), mesh.n_vertices(), t);
}

FemOperators assemble_fem_operators(const Mesh& mesh, const TensorField& k_inv) {
    FemOperators ops;
    ops.m0 = assemble_weighted_p0_mass(mesh, std::vector<double>(mesh.n_triangles(), 1.0));
    ops.grad = assemble_gradient(mesh);
    ops.b_mat = ops.grad.transpose().multiply(ops.m0);

    std::vector<Triplet> t;
    t.reserve(static_cast<std::size_t>(mesh.n_triangles()) * 4);
    for (int e = 0; e < mesh.n_triangles(); ++e) {
        const auto& tri = mesh.triangles[e];
        Eigen::Matrix2d avg = Eigen::Matrix2d::Zero();
        for (const auto& bary : kMidBary) {
            Eigen::Vector2d x = bary[0] * mesh.vertices[tri[0]] + bary[1] * mesh.vertices[tri[1]] +
                                bary[2] * mesh.vertices[tri[2]];
            avg += k_inv(x.x(), x.y());
        }
        avg /= 3.0;
        for (int i = 0; i < 2; ++i)
            for (int j = 0; j < 2; ++j)
                if (avg(i, j) != 0.0) t.push_back({2 * e + i, 2 * e + j, avg(i, j)});
    }
    ops.kinv = SparseMatrix::from_triplets(2 * mesh.n_triangles(), 2 * mesh.n_triangles(), t);
    return ops;
}

FemOperators assemble_fem_operators(const Mesh& mesh, double k_scalar) {
    if (!(k_scalar > 0.0)) throw InvalidArgument("fem operators: permeability must be positive");
    const double ki = 1.0 / k_scalar;
    return assemble_fem_operators(
        mesh, [ki](double, double) { return Eigen::Matrix2d(ki * Eigen::Matrix2d::Identity()); });
}

SparseMatrix assemble_variable_laplacian(const Mesh& mesh, const std::vector<double>& sigma) {
    if (static_cast<int>(sigma.size()) != mesh.n_triangles())
        throw DimensionError("variable laplacian: sigma length != element count");
    SparseMatrix grad = assemble_gradient(mesh);
    Vector d(2 * mesh.n_triangles());
    for (int e = 0; e < mesh.n_triangles(); ++e) {
        if (!(sigma[e] > 0.0)) throw InvalidArgument("variable laplacian: nonpositive sigma");
        const double a = mesh.areas[e];
        const double w = (a * a) / (sigma[e] * a);  // m0 (m0^sigma)^{-1} m0, per component
        d[2 * e] = w;
        d[2 * e + 1] = w;
    }
    return SparseMatrix::scaled_gram(grad, d);
}

double p1_integral(const Vector& p, const Mesh& mesh) {
    if (p.size() != mesh.n_vertices()) throw DimensionError("p1_integral: length mismatch");
    double s = 0.0;
    for (int e = 0; e < mesh.n_triangles(); ++e) {
        const auto& tri = mesh.triangles[e];
        s += mesh.areas[e] / 3.0 * (p[tri[0]] + p[tri[1]] + p[tri[2]]);
    }
    return s;
}

Vector apply_zero_mean(const Vector& p, const Mesh& mesh) {
    const double mean = p1_integral(p, mesh) / mesh.total_area();
    return p.array() - mean;
}

Loads assemble_rhs(const Mesh& mesh, const VectorField& f_exact, const ScalarField& g_exact,
                   const BoundaryField& gn_exact) {
    Loads loads;
    loads.fu = Vector::Zero(2 * mesh.n_triangles());
    loads.gp = Vector::Zero(mesh.n_vertices());

    double int_g = 0.0;
    for (int e = 0; e < mesh.n_triangles(); ++e) {
        const Eigen::Vector2d c = mesh.centroid(e);
        const Eigen::Vector2d fv = f_exact(c.x(), c.y());
        loads.fu[2 * e] = mesh.areas[e] * fv.x();
        loads.fu[2 * e + 1] = mesh.areas[e] * fv.y();

        const auto& tri = mesh.triangles[e];
        const double w = mesh.areas[e] / 3.0;
        for (const auto& bary : kMidBary) {
            Eigen::Vector2d x = bary[0] * mesh.vertices[tri[0]] + bary[1] * mesh.vertices[tri[1]] +
                                bary[2] * mesh.vertices[tri[2]];
            const double gv = g_exact(x.x(), x.y());
            int_g += w * gv;
            for (int j = 0; j < 3; ++j) loads.gp[tri[j]] -= w * gv * bary[j];
        }
    }

    double int_gn = 0.0;
    for (const auto& edge : mesh.boundary_edges) {
        const Eigen::Vector2d& a = mesh.vertices[edge.a];
        const Eigen::Vector2d& b = mesh.vertices[edge.b];
        const double len = (b - a).norm();
        const Eigen::Vector2d mid = 0.5 * (a + b);
        const Eigen::Vector2d half = 0.5 * (b - a);
        for (double s : {-kGauss, kGauss}) {
            const Eigen::Vector2d x = mid + s * half;
            const double w = 0.5 * len;
            const double gv = gn_exact(x, edge.normal);
            int_gn += w * gv;
            loads.gp[edge.a] += w * gv * 0.5 * (1.0 - s);
            loads.gp[edge.b] += w * gv * 0.5 * (1.0 + s);
        }
    }

    loads.compatibility_defect = std::abs(int_g - int_gn);
    if (loads.compatibility_defect > 1e-8 * std::max(1.0, std::abs(int_g)))
        std::fprintf(stderr,
                     "warning: load compatibility defect %.3e; the Neumann problem data are "
                     "inconsistent\n",
                     loads.compatibility_defect);
    return loads;
}

}  // namespace tpdv
