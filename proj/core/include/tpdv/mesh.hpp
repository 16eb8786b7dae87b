#pragma once

#include <Eigen/Dense>

#include <array>
#include <iosfwd>
#include <vector>

namespace tpdv {

struct BoundaryEdge {
    int a = 0;
    int b = 0;
    Eigen::Vector2d normal = Eigen::Vector2d::Zero();  // unit outward
};

/// Structured triangulation of (-1,1)^2. Triangles are counterclockwise;
/// vertex and triangle ordering is deterministic so assembled matrices are
/// bit-reproducible.
struct Mesh {
    std::vector<Eigen::Vector2d> vertices;
    std::vector<std::array<int, 3>> triangles;
    std::vector<BoundaryEdge> boundary_edges;
    std::vector<double> areas;
    int level = 0;

    /// For meshes produced by refine(): the one or two coarse vertices each
    /// fine vertex interpolates (equal entries for inherited vertices).
    /// Drives the multigrid prolongation.
    std::vector<std::array<int, 2>> parent_vertices;

    int n_vertices() const { return static_cast<int>(vertices.size()); }
    int n_triangles() const { return static_cast<int>(triangles.size()); }
    double total_area() const;

    Eigen::Vector2d centroid(int t) const;

    /// Plain-text node and element lists.
    void write_text(std::ostream& os) const;
};

/// Uniform n x n grid, each cell split by the bottom-left-to-top-right
/// diagonal; h = 2/n, (n+1)^2 vertices, 2 n^2 triangles, row-major ordering.
Mesh build_structured_mesh(int n);

/// Regular (red) refinement into four similar children per triangle; child
/// areas are exactly a quarter of the parent's and the parent-child vertex
/// map is recorded.
Mesh refine(const Mesh& mesh);

/// Nested meshes from build_structured_mesh(coarse_n) through `levels`
/// refinements; element [0] is coarsest, element [levels] is finest.
std::vector<Mesh> refinement_chain(int coarse_n, int levels);

}  // namespace tpdv
