#pragma once

#include <Eigen/Dense>
#include <Eigen/Sparse>
#include <functional>
#include <string>

#include "qvi/mesh.hpp"
#include "qvi/quadrature.hpp"

namespace qvi {

using SpMat = Eigen::SparseMatrix<double>;

/// Nonconforming P1 (Crouzeix-Raviart) function in N^h_0: one value per
/// interior edge midpoint, boundary midpoints implicitly zero.
struct CRField {
    const TriMesh* mesh = nullptr;
    Eigen::VectorXd values;

    CRField() = default;
    explicit CRField(const TriMesh& m) : mesh(&m), values(Eigen::VectorXd::Zero(m.n_interior_edges)) {}

    /// Value of the local affine representation on triangle t at x.
    double eval_on(int t, const Vec2& x) const;
    /// Dof value of edge e (0 for boundary edges).
    double edge_value(int e) const {
        const int d = mesh->edges[e].dof;
        return d < 0 ? 0.0 : values[d];
    }
};

/// Piecewise constant scalar (S^h).
struct CellField {
    const TriMesh* mesh = nullptr;
    Eigen::VectorXd values;

    CellField() = default;
    explicit CellField(const TriMesh& m, double fill = 0.0)
        : mesh(&m), values(Eigen::VectorXd::Constant(m.n_triangles(), fill)) {}
};

/// Piecewise constant 2-vector (bold S^h).
struct CellVecField {
    const TriMesh* mesh = nullptr;
    Eigen::MatrixX2d values;

    CellVecField() = default;
    explicit CellVecField(const TriMesh& m) : mesh(&m), values(Eigen::MatrixX2d::Zero(m.n_triangles(), 2)) {}

    Vec2 at(int t) const { return {values(t, 0), values(t, 1)}; }
    void set(int t, Vec2 v) {
        values(t, 0) = v.x;
        values(t, 1) = v.y;
    }
    double norm_at(int t) const { return at(t).norm(); }
};

/// Conforming P1 function in U^h_0: vertex values, zero on boundary vertices.
struct P1Field {
    const TriMesh* mesh = nullptr;
    Eigen::VectorXd values; // size n_vertices, boundary entries kept at 0

    P1Field() = default;
    explicit P1Field(const TriMesh& m) : mesh(&m), values(Eigen::VectorXd::Zero(m.n_vertices())) {}
};

/// Gradients of the three barycentric coordinates of triangle t.
std::array<Vec2, 3> barycentric_gradients(const TriMesh& mesh, int t);

/// Elementwise gradient of the CR representation (exact, no quadrature).
CellVecField broken_gradient(const CRField& w);

/// P^h: per-triangle mean. For a CR field this is the centroid value.
CellField project_P0(const CRField& w);
CellField project_P0(const TriMesh& mesh, const std::function<double(Vec2)>& f, int quad_degree = 2);
CellVecField project_P0_vec(const TriMesh& mesh, const std::function<Vec2(Vec2)>& f, int quad_degree = 2);

/// pi^h_N: edge-midpoint interpolation, boundary midpoints dropped.
CRField interpolate_CR(const TriMesh& mesh, const std::function<double(Vec2)>& f);
/// pi^h_U on U^h_0: vertex interpolation, zero forced on boundary vertices.
P1Field interpolate_P1(const TriMesh& mesh, const std::function<double(Vec2)>& f);

/// Diagonal of the CR mass matrix: D_e = sum of |sigma|/3 over adjacent triangles.
Eigen::VectorXd cr_lumped_mass(const TriMesh& mesh);

/// Exact L2 inner product of two CR fields (the CR mass matrix is diagonal).
double cr_mass_apply(const CRField& u, const CRField& v);

/// | pi^h_N |u| |_{0,1}: exact L1 norm of the interpolant of |u|.
double cr_l1_of_abs(const CRField& u);

/// L1 norm of a piecewise-constant vector field.
double cell_l1_norm(const CellVecField& q);

/// Stiffness matrix (coef grad_h u, grad_h v) over interior-edge dofs.
/// Requires coef > 0 elementwise.
SpMat weighted_stiffness_assemble(const CellField& coef);

/// Load vector (f, phi_e) for piecewise-constant f: entry = sum f_sigma |sigma|/3.
Eigen::VectorXd load_vector(const CellField& f);

/// Conforming lift: the U^h_0 field whose gradient L2-matches grad_h w.
P1Field conforming_lift(const CRField& w);

/// Per-triangle gradient of a P1 field.
CellVecField p1_gradient(const P1Field& u);

/// J = curl w = (dw/dx2, -dw/dx1) per triangle.
CellVecField curl_of_lift(const P1Field& w);
CellVecField curl_broken(const CRField& w);

/// CSV writers (index, coordinates, value(s)), 17 significant digits.
void write_csv(const CRField& f, const std::string& path);
void write_csv(const CellField& f, const std::string& path);
void write_csv(const CellVecField& f, const std::string& path);

} // namespace qvi
