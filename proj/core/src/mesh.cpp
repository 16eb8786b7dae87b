#include "tpdv/mesh.hpp"

#include "tpdv/errors.hpp"

#include <algorithm>
#include <cstdio>
#include <map>
#include <ostream>

namespace tpdv {

namespace {

double signed_area(const Eigen::Vector2d& a, const Eigen::Vector2d& b, const Eigen::Vector2d& c) {
    return 0.5 * ((b.x() - a.x()) * (c.y() - a.y()) - (b.y() - a.y()) * (c.x() - a.x()));
}

// Directed edges occurring exactly once, in triangle traversal order; the
// outward normal of a CCW triangle's boundary edge points to its right.
std::vector<BoundaryEdge> collect_boundary(const std::vector<Eigen::Vector2d>& vertices,
                                           const std::vector<std::array<int, 3>>& triangles) {
    std::map<std::pair<int, int>, int> count;
    for (const auto& t : triangles)
        for (int e = 0; e < 3; ++e) {
            int a = t[e], b = t[(e + 1) % 3];
            count[{std::min(a, b), std::max(a, b)}] += 1;
        }
    std::vector<BoundaryEdge> edges;
    for (const auto& t : triangles)
        for (int e = 0; e < 3; ++e) {
            int a = t[e], b = t[(e + 1) % 3];
            if (count[{std::min(a, b), std::max(a, b)}] == 1) {
                Eigen::Vector2d d = vertices[b] - vertices[a];
                edges.push_back({a, b, Eigen::Vector2d(d.y(), -d.x()).normalized()});
            }
        }
    return edges;
}

}  // namespace

double Mesh::total_area() const {
    double s = 0.0;
    for (double a : areas) s += a;
    return s;
}

Eigen::Vector2d Mesh::centroid(int t) const {
    const auto& tri = triangles[t];
    return (vertices[tri[0]] + vertices[tri[1]] + vertices[tri[2]]) / 3.0;
}

void Mesh::write_text(std::ostream& os) const {
    char buf[96];
    os << "nodes " << n_vertices() << "\n";
    for (int i = 0; i < n_vertices(); ++i) {
        std::snprintf(buf, sizeof(buf), "%d %.17g %.17g\n", i, vertices[i].x(), vertices[i].y());
        os << buf;
    }
    os << "elements " << n_triangles() << "\n";
    for (int t = 0; t < n_triangles(); ++t) {
        std::snprintf(buf, sizeof(buf), "%d %d %d %d\n", t, triangles[t][0], triangles[t][1],
                      triangles[t][2]);
        os << buf;
    }
}

Mesh build_structured_mesh(int n) {
    if (n < 1) throw InvalidArgument("build_structured_mesh: n must be >= 1");
    Mesh m;
    m.level = 0;
    m.vertices.reserve(static_cast<std::size_t>(n + 1) * (n + 1));
    for (int iy = 0; iy <= n; ++iy)
        for (int ix = 0; ix <= n; ++ix)
            m.vertices.emplace_back(-1.0 + 2.0 * ix / n, -1.0 + 2.0 * iy / n);

    m.triangles.reserve(static_cast<std::size_t>(2) * n * n);
    for (int iy = 0; iy < n; ++iy)
        for (int ix = 0; ix < n; ++ix) {
            const int v00 = iy * (n + 1) + ix;
            const int v10 = v00 + 1;
            const int v01 = v00 + (n + 1);
            const int v11 = v01 + 1;
            m.triangles.push_back({v00, v10, v11});
            m.triangles.push_back({v00, v11, v01});
        }

    m.areas.reserve(m.triangles.size());
    for (const auto& t : m.triangles) {
        const double a = signed_area(m.vertices[t[0]], m.vertices[t[1]], m.vertices[t[2]]);
        if (a <= 0.0) throw SolveError("build_structured_mesh: non-positive triangle area");
        m.areas.push_back(a);
    }
    m.boundary_edges = collect_boundary(m.vertices, m.triangles);
    return m;
}

Mesh refine(const Mesh& mesh) {
    Mesh fine;
    fine.level = mesh.level + 1;
    fine.vertices = mesh.vertices;
    fine.parent_vertices.reserve(mesh.vertices.size() * 2);
    for (int i = 0; i < mesh.n_vertices(); ++i) fine.parent_vertices.push_back({i, i});

    // midpoint per undirected edge, created in sorted edge order
    std::map<std::pair<int, int>, int> midpoint;
    for (const auto& t : mesh.triangles)
        for (int e = 0; e < 3; ++e) {
            int a = t[e], b = t[(e + 1) % 3];
            midpoint[{std::min(a, b), std::max(a, b)}] = -1;
        }
    for (auto& [edge, id] : midpoint) {
        id = fine.n_vertices();
        fine.vertices.push_back(0.5 * (mesh.vertices[edge.first] + mesh.vertices[edge.second]));
        fine.parent_vertices.push_back({edge.first, edge.second});
    }

    fine.triangles.reserve(mesh.triangles.size() * 4);
    fine.areas.reserve(mesh.triangles.size() * 4);
    for (int t = 0; t < mesh.n_triangles(); ++t) {
        const auto& tri = mesh.triangles[t];
        auto mid = [&](int a, int b) { return midpoint[{std::min(a, b), std::max(a, b)}]; };
        const int m01 = mid(tri[0], tri[1]);
        const int m12 = mid(tri[1], tri[2]);
        const int m20 = mid(tri[2], tri[0]);
        fine.triangles.push_back({tri[0], m01, m20});
        fine.triangles.push_back({tri[1], m12, m01});
        fine.triangles.push_back({tri[2], m20, m12});
        fine.triangles.push_back({m01, m12, m20});
        const double child = mesh.areas[t] / 4.0;  // exact by similarity
        for (int c = 0; c < 4; ++c) fine.areas.push_back(child);
    }
    fine.boundary_edges = collect_boundary(fine.vertices, fine.triangles);
    return fine;
}

std::vector<Mesh> refinement_chain(int coarse_n, int levels) {
    if (levels < 0) throw InvalidArgument("refinement_chain: levels must be nonnegative");
    std::vector<Mesh> chain;
    chain.push_back(build_structured_mesh(coarse_n));
    for (int l = 0; l < levels; ++l) chain.push_back(refine(chain.back()));
    return chain;
}

}  // namespace tpdv
