#include "qvi/biot_savart.hpp"

#include <cmath>
#include <cstring>
#include <fstream>
#include <thread>

#include "qvi/errors.hpp"
#include "qvi/quadrature.hpp"

namespace qvi {

namespace {

struct EdgeFrame {
    Vec2 tangent; // unit, along the CCW edge
    Vec2 normal;  // outward unit normal of the CCW triangle
    double h;     // signed normal distance from x to the edge line
    double t0, t1;
};

EdgeFrame edge_frame(const Vec2& a, const Vec2& b, const Vec2& x) {
    EdgeFrame f;
    const Vec2 d = b - a;
    const double len = d.norm();
    f.tangent = d / len;
    f.normal = {d.y / len, -d.x / len}; // outward for CCW orientation
    f.h = f.normal.dot(a - x);
    f.t0 = f.tangent.dot(a - x);
    f.t1 = f.tangent.dot(b - x);
    return f;
}

// int_{t0}^{t1} dt / sqrt(h^2 + t^2), written to stay accurate for t0,t1 < 0
double edge_log_term(double h, double t0, double t1) {
    const double r0 = std::hypot(h, t0), r1 = std::hypot(h, t1);
    if (t0 + r0 <= 0.0 || t1 + r1 <= 0.0) return std::log((r0 - t0) / (r1 - t1));
    return std::log((t1 + r1) / (t0 + r0));
}

} // namespace

double newtonian_potential_of_triangle(const Triangle& tri, Vec2 x) {
    if (!(signed_area(tri[0], tri[1], tri[2]) > 0.0))
        throw GeometryError("newtonian_potential: degenerate or CW triangle");
    double s = 0.0;
    for (int i = 0; i < 3; ++i) {
        const EdgeFrame f = edge_frame(tri[i], tri[(i + 1) % 3], x);
        if (f.h == 0.0) continue; // x on the edge line: zero contribution in the limit
        s += f.h * edge_log_term(f.h, f.t0, f.t1);
    }
    return s;
}

Vec2 newtonian_potential_gradient(const Triangle& tri, Vec2 x) {
    if (!(signed_area(tri[0], tri[1], tri[2]) > 0.0))
        throw GeometryError("newtonian_potential_gradient: degenerate or CW triangle");
    Vec2 g{0.0, 0.0};
    for (int i = 0; i < 3; ++i) {
        const EdgeFrame f = edge_frame(tri[i], tri[(i + 1) % 3], x);
        const double r0 = std::hypot(f.h, f.t0), r1 = std::hypot(f.h, f.t1);
        if (r0 == 0.0 || r1 == 0.0) throw EvaluationError("newtonian_potential_gradient: x on a vertex");
        if (f.h == 0.0 && f.t0 < 0.0 && f.t1 > 0.0)
            throw EvaluationError("newtonian_potential_gradient: x on a triangle edge");
        const double br_t = f.t1 / r1 - f.t0 / r0;
        const double br_r = 1.0 / r0 - 1.0 / r1;
        const double L = edge_log_term(f.h, f.t0, f.t1);
        g += f.normal * (br_t - L) + f.tangent * (f.h * br_r);
    }
    return g;
}

namespace {

double pair_integral(const Triangle& outer, const Triangle& inner, const TriQuadRule& rule, int subdivide_levels) {
    if (subdivide_levels <= 0) {
        const double a = signed_area(outer[0], outer[1], outer[2]);
        double s = 0.0;
        for (int q = 0; q < rule.size(); ++q)
            s += rule.weights[q] * newtonian_potential_of_triangle(inner, rule.map(outer, q));
        return s * a;
    }
    const Vec2 m01 = (outer[0] + outer[1]) * 0.5;
    const Vec2 m12 = (outer[1] + outer[2]) * 0.5;
    const Vec2 m20 = (outer[2] + outer[0]) * 0.5;
    double s = 0.0;
    s += pair_integral({outer[0], m01, m20}, inner, rule, subdivide_levels - 1);
    s += pair_integral({m01, outer[1], m12}, inner, rule, subdivide_levels - 1);
    s += pair_integral({m20, m12, outer[2]}, inner, rule, subdivide_levels - 1);
    s += pair_integral({m01, m12, m20}, inner, rule, subdivide_levels - 1);
    return s;
}

// Self term: the outer integrand has log-singular derivatives on the triangle
// boundary. Split at the centroid and grade quadratically toward each edge;
// n = 16 Gauss points per direction resolve the self integral to ~1e-8.
double self_integral(const Triangle& tri) {
    static std::vector<double> gx, gw;
    if (gx.empty()) gauss_legendre_01(16, gx, gw);
    const Vec2 c = (tri[0] + tri[1] + tri[2]) / 3.0;
    const int n = static_cast<int>(gx.size());
    double s = 0.0;
    for (int e = 0; e < 3; ++e) {
        const Vec2 v1 = tri[e], v2 = tri[(e + 1) % 3];
        const double jac = 2.0 * signed_area(c, v1, v2);
        for (int i = 0; i < n; ++i) {
            const double u = 1.0 - (1.0 - gx[i]) * (1.0 - gx[i]); // clusters toward the edge
            const double du = 2.0 * (1.0 - gx[i]);
            for (int j = 0; j < n; ++j) {
                const Vec2 x = c + ((v1 - c) * (1.0 - gx[j]) + (v2 - c) * gx[j]) * u;
                s += gw[i] * gw[j] * du * u * jac * newtonian_potential_of_triangle(tri, x);
            }
        }
    }
    return s;
}

} // namespace

PairwisePotential assemble_pairwise(const TriMesh& mesh, int quad_order, int n_threads) {
    PairwisePotential P(mesh, quad_order);
    const TriQuadRule& rule = tri_rule_by_degree(quad_order);
    const int nt = mesh.n_triangles();

    auto work = [&](int row_begin, int row_end) {
        for (int i = row_begin; i < row_end; ++i) {
            const Triangle ti = mesh.triangle_coords(i);
            for (int j = 0; j <= i; ++j) {
                const Triangle tj = mesh.triangle_coords(j);
                if (i == j) {
                    P.at(i, j) = self_integral(ti);
                    continue;
                }
                const bool near = (mesh.centroid[i] - mesh.centroid[j]).norm() <
                                  2.0 * std::max(mesh.diameter[i], mesh.diameter[j]);
                P.at(i, j) = pair_integral(ti, tj, rule, near ? 1 : 0);
            }
        }
    };

    if (n_threads <= 1) {
        work(0, nt);
    } else {
        // row blocks sized so each holds ~equal pair counts; writes are disjoint
        std::vector<int> splits{0};
        for (int k = 1; k < n_threads; ++k)
            splits.push_back(static_cast<int>(std::sqrt(k / double(n_threads)) * nt));
        splits.push_back(nt);
        std::vector<std::thread> pool;
        for (int k = 0; k < n_threads; ++k) pool.emplace_back(work, splits[k], splits[k + 1]);
        for (auto& th : pool) th.join();
    }
    return P;
}

NonlocalMatrix assemble_nonlocal_form(const TriMesh& mesh, const PairwisePotential& P) {
    if (&P.mesh() != &mesh) throw AssemblyError("assemble_nonlocal_form: pairwise table from a different mesh");
    const int n = mesh.n_interior_edges;
    const int nt = mesh.n_triangles();

    std::vector<std::array<int, 3>> dofs(nt);
    std::vector<std::array<Vec2, 3>> grads(nt);
    for (int t = 0; t < nt; ++t) {
        const auto bg = barycentric_gradients(mesh, t);
        for (int i = 0; i < 3; ++i) {
            dofs[t][i] = mesh.edges[mesh.tri_edges[t][i]].dof;
            grads[t][i] = bg[i] * (-2.0);
        }
    }

    NonlocalMatrix M;
    M.C = Eigen::MatrixXd::Zero(n, n);
    M.mesh_hash = mesh.content_hash();
    M.quad_order = P.quad_order();
    const double inv4pi = 1.0 / (4.0 * M_PI);
    for (int s = 0; s < nt; ++s)
        for (int t = 0; t < nt; ++t) {
            const double I = P(s, t) * inv4pi;
            for (int i = 0; i < 3; ++i) {
                const int di = dofs[s][i];
                if (di < 0) continue;
                for (int j = 0; j < 3; ++j) {
                    const int dj = dofs[t][j];
                    if (dj >= 0) M.C(di, dj) += grads[s][i].dot(grads[t][j]) * I;
                }
            }
        }
    // kill accumulation-order asymmetry
    M.C = 0.5 * (M.C + M.C.transpose()).eval();
    return M;
}

std::vector<double> biot_savart_field(const CellVecField& J, const std::vector<Vec2>& points, double b_e) {
    const TriMesh& mesh = *J.mesh;
    std::vector<double> out(points.size(), b_e);
    const double inv4pi = 1.0 / (4.0 * M_PI);
    for (std::size_t p = 0; p < points.size(); ++p) {
        double s = 0.0;
        for (int t = 0; t < mesh.n_triangles(); ++t) {
            const Vec2 g = newtonian_potential_gradient(mesh.triangle_coords(t), points[p]);
            s += J.values(t, 1) * g.x - J.values(t, 0) * g.y; // curl components
        }
        out[p] += inv4pi * s;
    }
    return out;
}

bool load_pairwise_cache(const std::string& path, const TriMesh& mesh, int quad_order, PairwisePotential& out) {
    std::ifstream is(path, std::ios::binary);
    if (!is) return false;
    char magic[8];
    if (!is.read(magic, 8) || std::memcmp(magic, "QVIPAIR1", 8) != 0) return false;
    std::uint32_t qo = 0;
    std::uint64_t hash = 0, nt = 0;
    is.read(reinterpret_cast<char*>(&qo), 4);
    is.read(reinterpret_cast<char*>(&hash), 8);
    is.read(reinterpret_cast<char*>(&nt), 8);
    if (!is || qo != static_cast<std::uint32_t>(quad_order) || hash != mesh.content_hash() ||
        nt != static_cast<std::uint64_t>(mesh.n_triangles()))
        return false;
    out = PairwisePotential(mesh, quad_order);
    is.read(reinterpret_cast<char*>(out.raw().data()), std::streamsize(out.raw().size() * 8));
    return bool(is);
}

void store_pairwise_cache(const std::string& path, const PairwisePotential& P) {
    std::ofstream os(path, std::ios::binary);
    if (!os) throw IoError("cannot open cache file " + path);
    os.write("QVIPAIR1", 8);
    const std::uint32_t qo = static_cast<std::uint32_t>(P.quad_order());
    const std::uint64_t hash = P.mesh().content_hash();
    const std::uint64_t nt = static_cast<std::uint64_t>(P.mesh().n_triangles());
    os.write(reinterpret_cast<const char*>(&qo), 4);
    os.write(reinterpret_cast<const char*>(&hash), 8);
    os.write(reinterpret_cast<const char*>(&nt), 8);
    os.write(reinterpret_cast<const char*>(P.raw().data()), std::streamsize(P.raw().size() * 8));
    if (!os) throw IoError("cache write failed: " + path);
}

} // namespace qvi
