#include "qvi/fem.hpp"

#include <Eigen/SparseCholesky>
#include <fstream>

#include "qvi/csv.hpp"
#include "qvi/errors.hpp"

namespace qvi {

std::array<Vec2, 3> barycentric_gradients(const TriMesh& mesh, int t) {
    const Triangle tc = mesh.triangle_coords(t);
    const double inv2a = 1.0 / (2.0 * mesh.area[t]);
    std::array<Vec2, 3> g;
    for (int i = 0; i < 3; ++i) {
        const Vec2 e = tc[(i + 2) % 3] - tc[(i + 1) % 3]; // edge opposite vertex i, CCW
        g[i] = e.perp() * inv2a;
    }
    return g;
}

double CRField::eval_on(int t, const Vec2& x) const {
    // phi_i = 1 - 2 lambda_i attached to the edge opposite vertex i.
    const Triangle tc = mesh->triangle_coords(t);
    const double a = mesh->area[t];
    const double l0 = signed_area(x, tc[1], tc[2]) / a;
    const double l1 = signed_area(tc[0], x, tc[2]) / a;
    const double l2 = 1.0 - l0 - l1;
    const double lam[3] = {l0, l1, l2};
    double s = 0.0;
    for (int i = 0; i < 3; ++i) s += edge_value(mesh->tri_edges[t][i]) * (1.0 - 2.0 * lam[i]);
    return s;
}

CellVecField broken_gradient(const CRField& w) {
    const TriMesh& mesh = *w.mesh;
    CellVecField g(mesh);
    for (int t = 0; t < mesh.n_triangles(); ++t) {
        const auto bg = barycentric_gradients(mesh, t);
        Vec2 v{0.0, 0.0};
        for (int i = 0; i < 3; ++i) v += w.edge_value(mesh.tri_edges[t][i]) * (-2.0) * bg[i];
        g.set(t, v);
    }
    return g;
}

CellField project_P0(const CRField& w) {
    const TriMesh& mesh = *w.mesh;
    CellField out(mesh);
    for (int t = 0; t < mesh.n_triangles(); ++t) {
        // mean of an affine function = centroid value = mean of midpoint values
        double s = 0.0;
        for (int i = 0; i < 3; ++i) s += w.edge_value(mesh.tri_edges[t][i]);
        out.values[t] = s / 3.0;
    }
    return out;
}

CellField project_P0(const TriMesh& mesh, const std::function<double(Vec2)>& f, int quad_degree) {
    const TriQuadRule& rule = tri_rule_by_degree(quad_degree);
    CellField out(mesh);
    for (int t = 0; t < mesh.n_triangles(); ++t) {
        const Triangle tc = mesh.triangle_coords(t);
        double s = 0.0;
        for (int q = 0; q < rule.size(); ++q) s += rule.weights[q] * f(rule.map(tc, q));
        out.values[t] = s;
    }
    return out;
}

CellVecField project_P0_vec(const TriMesh& mesh, const std::function<Vec2(Vec2)>& f, int quad_degree) {
    const TriQuadRule& rule = tri_rule_by_degree(quad_degree);
    CellVecField out(mesh);
    for (int t = 0; t < mesh.n_triangles(); ++t) {
        const Triangle tc = mesh.triangle_coords(t);
        Vec2 s{0.0, 0.0};
        for (int q = 0; q < rule.size(); ++q) s += rule.weights[q] * f(rule.map(tc, q));
        out.set(t, s);
    }
    return out;
}

CRField interpolate_CR(const TriMesh& mesh, const std::function<double(Vec2)>& f) {
    CRField out(mesh);
    for (const auto& e : mesh.edges)
        if (e.dof >= 0) out.values[e.dof] = f(e.midpoint);
    return out;
}

P1Field interpolate_P1(const TriMesh& mesh, const std::function<double(Vec2)>& f) {
    P1Field out(mesh);
    for (int v = 0; v < mesh.n_vertices(); ++v)
        if (!mesh.vertex_on_boundary[v]) out.values[v] = f(mesh.vertices[v]);
    return out;
}

Eigen::VectorXd cr_lumped_mass(const TriMesh& mesh) {
    Eigen::VectorXd d = Eigen::VectorXd::Zero(mesh.n_interior_edges);
    for (int t = 0; t < mesh.n_triangles(); ++t)
        for (int i = 0; i < 3; ++i) {
            const int dof = mesh.edges[mesh.tri_edges[t][i]].dof;
            if (dof >= 0) d[dof] += mesh.area[t] / 3.0;
        }
    return d;
}

double cr_mass_apply(const CRField& u, const CRField& v) {
    if (u.mesh != v.mesh) throw Error("cr_mass_apply: fields live on different meshes");
    const Eigen::VectorXd d = cr_lumped_mass(*u.mesh);
    return u.values.dot(d.cwiseProduct(v.values));
}

double cr_l1_of_abs(const CRField& u) {
    const Eigen::VectorXd d = cr_lumped_mass(*u.mesh);
    return d.dot(u.values.cwiseAbs());
}

double cell_l1_norm(const CellVecField& q) {
    const TriMesh& mesh = *q.mesh;
    double s = 0.0;
    for (int t = 0; t < mesh.n_triangles(); ++t) s += mesh.area[t] * q.norm_at(t);
    return s;
}

SpMat weighted_stiffness_assemble(const CellField& coef) {
    const TriMesh& mesh = *coef.mesh;
    const int n = mesh.n_interior_edges;
    std::vector<Eigen::Triplet<double>> trips;
    trips.reserve(9 * mesh.n_triangles());
    for (int t = 0; t < mesh.n_triangles(); ++t) {
        const double c = coef.values[t];
        if (!(c > 0.0)) throw AssemblyError("weighted_stiffness: nonpositive coefficient on triangle " +
                                            std::to_string(t));
        const auto bg = barycentric_gradients(mesh, t);
        int dof[3];
        Vec2 grad[3];
        for (int i = 0; i < 3; ++i) {
            dof[i] = mesh.edges[mesh.tri_edges[t][i]].dof;
            grad[i] = bg[i] * (-2.0);
        }
        const double w = c * mesh.area[t];
        for (int i = 0; i < 3; ++i)
            for (int j = 0; j < 3; ++j)
                if (dof[i] >= 0 && dof[j] >= 0) trips.emplace_back(dof[i], dof[j], w * grad[i].dot(grad[j]));
    }
    SpMat K(n, n);
    K.setFromTriplets(trips.begin(), trips.end());
    return K;
}

Eigen::VectorXd load_vector(const CellField& f) {
    const TriMesh& mesh = *f.mesh;
    Eigen::VectorXd rhs = Eigen::VectorXd::Zero(mesh.n_interior_edges);
    for (int t = 0; t < mesh.n_triangles(); ++t)
        for (int i = 0; i < 3; ++i) {
            const int dof = mesh.edges[mesh.tri_edges[t][i]].dof;
            if (dof >= 0) rhs[dof] += f.values[t] * mesh.area[t] / 3.0;
        }
    return rhs;
}

P1Field conforming_lift(const CRField& w) {
    const TriMesh& mesh = *w.mesh;
    // Interior-vertex numbering.
    std::vector<int> vdof(mesh.n_vertices(), -1);
    int nv = 0;
    for (int v = 0; v < mesh.n_vertices(); ++v)
        if (!mesh.vertex_on_boundary[v]) vdof[v] = nv++;

    const CellVecField gh = broken_gradient(w);
    std::vector<Eigen::Triplet<double>> trips;
    Eigen::VectorXd rhs = Eigen::VectorXd::Zero(nv);
    for (int t = 0; t < mesh.n_triangles(); ++t) {
        const auto bg = barycentric_gradients(mesh, t);
        const auto& tv = mesh.triangles[t];
        const double a = mesh.area[t];
        for (int i = 0; i < 3; ++i) {
            const int di = vdof[tv[i]];
            if (di < 0) continue;
            rhs[di] += a * gh.at(t).dot(bg[i]);
            for (int j = 0; j < 3; ++j) {
                const int dj = vdof[tv[j]];
                if (dj >= 0) trips.emplace_back(di, dj, a * bg[i].dot(bg[j]));
            }
        }
    }
    SpMat A(nv, nv);
    A.setFromTriplets(trips.begin(), trips.end());
    Eigen::SimplicialLLT<SpMat> llt(A);
    if (llt.info() != Eigen::Success) throw Error("conforming_lift: singular P1 system");
    const Eigen::VectorXd x = llt.solve(rhs);

    P1Field out(mesh);
    for (int v = 0; v < mesh.n_vertices(); ++v)
        if (vdof[v] >= 0) out.values[v] = x[vdof[v]];
    return out;
}

CellVecField p1_gradient(const P1Field& u) {
    const TriMesh& mesh = *u.mesh;
    CellVecField g(mesh);
    for (int t = 0; t < mesh.n_triangles(); ++t) {
        const auto bg = barycentric_gradients(mesh, t);
        const auto& tv = mesh.triangles[t];
        Vec2 v{0.0, 0.0};
        for (int i = 0; i < 3; ++i) v += u.values[tv[i]] * bg[i];
        g.set(t, v);
    }
    return g;
}

namespace {
CellVecField rotate_to_curl(const CellVecField& grad) {
    CellVecField j(*grad.mesh);
    for (int t = 0; t < grad.mesh->n_triangles(); ++t) {
        const Vec2 g = grad.at(t);
        j.set(t, {g.y, -g.x});
    }
    return j;
}
} // namespace

CellVecField curl_of_lift(const P1Field& w) { return rotate_to_curl(p1_gradient(w)); }

CellVecField curl_broken(const CRField& w) { return rotate_to_curl(broken_gradient(w)); }

void write_csv(const CRField& f, const std::string& path) {
    std::ofstream os(path);
    if (!os) throw IoError("cannot open " + path);
    os << "dof,x,y,value\n";
    for (const auto& e : f.mesh->edges)
        if (e.dof >= 0)
            os << e.dof << "," << format_g17(e.midpoint.x) << "," << format_g17(e.midpoint.y) << ","
               << format_g17(f.values[e.dof]) << "\n";
}

void write_csv(const CellField& f, const std::string& path) {
    std::ofstream os(path);
    if (!os) throw IoError("cannot open " + path);
    os << "tri,x,y,value\n";
    for (int t = 0; t < f.mesh->n_triangles(); ++t)
        os << t << "," << format_g17(f.mesh->centroid[t].x) << "," << format_g17(f.mesh->centroid[t].y) << ","
           << format_g17(f.values[t]) << "\n";
}

void write_csv(const CellVecField& f, const std::string& path) {
    std::ofstream os(path);
    if (!os) throw IoError("cannot open " + path);
    os << "tri,x,y,vx,vy\n";
    for (int t = 0; t < f.mesh->n_triangles(); ++t)
        os << t << "," << format_g17(f.mesh->centroid[t].x) << "," << format_g17(f.mesh->centroid[t].y) << ","
           << format_g17(f.values(t, 0)) << "," << format_g17(f.values(t, 1)) << "\n";
}

} // namespace qvi
