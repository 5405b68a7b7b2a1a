#pragma once

#include <array>
#include <cstdint>
#include <string>
#include <vector>

#include "qvi/geom.hpp"

namespace qvi {

/// Edge of a triangulation, endpoints stored sorted (a < b).
/// Interior edges carry a Crouzeix-Raviart dof index, boundary edges dof = -1.
struct Edge {
    int a = -1;
    int b = -1;
    Vec2 midpoint;
    int tri[2] = {-1, -1}; // adjacent triangles; tri[1] = -1 on the boundary
    bool boundary = false;
    int dof = -1;
};

/// Conforming triangulation with full edge connectivity and per-triangle
/// geometry. Immutable after construction; safe for concurrent reads.
class TriMesh {
  public:
    std::vector<Vec2> vertices;
    std::vector<std::array<int, 3>> triangles; // CCW vertex indices
    std::vector<Edge> edges;                   // sorted lexicographically by (a,b)
    /// tri_edges[t][i] = index of the edge opposite local vertex i.
    std::vector<std::array<int, 3>> tri_edges;

    std::vector<double> area;     // |sigma| > 0
    std::vector<Vec2> centroid;   // x_sigma
    std::vector<double> diameter; // h_sigma
    std::vector<bool> vertex_on_boundary;
    double h_max = 0.0;
    int n_interior_edges = 0;

    int n_vertices() const { return static_cast<int>(vertices.size()); }
    int n_triangles() const { return static_cast<int>(triangles.size()); }
    int n_edges() const { return static_cast<int>(edges.size()); }

    Triangle triangle_coords(int t) const {
        const auto& tv = triangles[t];
        return {vertices[tv[0]], vertices[tv[1]], vertices[tv[2]]};
    }

    double total_area() const;

    /// Edge connectivity, per-triangle geometry, CCW enforcement and dof
    /// numbering. Called by the generators; call it yourself after filling
    /// vertices/triangles by hand.
    void finalize();

    /// FNV-1a over the canonical byte stream (counts, coordinates, indices).
    std::uint64_t content_hash() const;
};

enum class SquarePattern {
    Crossed, // 4 triangles per cell, split at the cell centre
    Diagonal // 2 triangles per cell, SW-NE diagonal
};

TriMesh generate_square_mesh(Vec2 lo, Vec2 hi, int n, SquarePattern pattern = SquarePattern::Crossed);

/// Concentric-ring disc mesh; all boundary vertices lie on the circle.
/// Guarantees h_max <= 1.5 * target_h.
TriMesh generate_disc_mesh(double radius, double target_h);

/// Plain-text format: "V T" header, V lines "x y", T lines "i j k".
void write_mesh_text(const TriMesh& mesh, const std::string& path);
TriMesh read_mesh_text(const std::string& path);

} // namespace qvi
