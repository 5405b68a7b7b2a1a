#include "qvi/models.hpp"

#include <algorithm>
#include <cmath>

#include "qvi/errors.hpp"

namespace qvi {

ProblemCase make_builtin_case(const std::string& name) {
    ProblemCase pc;
    pc.name = name;
    if (name == "sandpile_cone") {
        pc.kind = CaseKind::Sandpile;
        pc.k0 = 0.4;
        pc.epsilon = 0.01;
        pc.w0 = [](Vec2 p) { return std::max(0.4 - p.norm(), 0.0); };
        pc.source_center = {0.0, 0.0};
        pc.source_radius = 0.2;
        pc.source_total = 1.0;
    } else if (name == "cylinder_kim") {
        pc.kind = CaseKind::CylinderKim;
        pc.B0 = 0.05;
        pc.be_rate = 1.0;
        pc.w0 = [](Vec2) { return 0.0; };
    } else if (name == "thinfilm_disc") {
        pc.kind = CaseKind::ThinFilmBean;
        pc.be_rate = 1.0;
        pc.w0 = [](Vec2) { return 0.0; };
    } else {
        throw ConfigError("unknown case '" + name + "'");
    }
    return pc;
}

TimePartition TimePartition::from_steps(const std::vector<double>& taus) {
    if (taus.empty()) throw ConfigError("time partition needs at least one step");
    TimePartition tp;
    tp.t.push_back(0.0);
    for (double tau : taus) {
        if (!(tau > 0.0)) throw ConfigError("time steps must be positive");
        tp.t.push_back(tp.t.back() + tau);
    }
    return tp;
}

SandpileAux sandpile_M_init(const TriMesh& mesh, const ProblemCase& pc) {
    if (pc.kind != CaseKind::Sandpile) throw ConfigError("sandpile_M_init called on a non-sandpile case");
    const CRField w0n = interpolate_CR(mesh, pc.w0);
    SandpileAux aux;
    aux.w0h = project_P0(w0n);
    aux.k1 = CellField(mesh, pc.k0);
    const CellVecField g = broken_gradient(w0n);
    for (int t = 0; t < mesh.n_triangles(); ++t) aux.k1.values[t] = std::max(pc.k0, g.norm_at(t));
    return aux;
}

CellField discrete_M(const ProblemCase& pc, double t_n, const CellField& PhW, const SandpileAux* aux) {
    const TriMesh& mesh = *PhW.mesh;
    CellField out(mesh);
    switch (pc.kind) {
    case CaseKind::Sandpile: {
        if (aux == nullptr) throw ConfigError("discrete_M: sandpile case needs the M_init aux data");
        for (int t = 0; t < mesh.n_triangles(); ++t) {
            const double eta = PhW.values[t];
            const double w0 = aux->w0h.values[t];
            const double k1 = aux->k1.values[t];
            if (eta >= w0 + pc.epsilon)
                out.values[t] = pc.k0;
            else if (eta <= w0)
                out.values[t] = k1;
            else
                out.values[t] = k1 + (pc.k0 - k1) * (eta - w0) / pc.epsilon;
        }
        break;
    }
    case CaseKind::CylinderKim: {
        const double be = pc.b_e(t_n);
        for (int t = 0; t < mesh.n_triangles(); ++t) {
            const double b = PhW.values[t] + be;
            out.values[t] = pc.k(mesh.centroid[t]) / (1.0 + std::abs(b) / pc.B0);
        }
        break;
    }
    case CaseKind::ThinFilmBean: {
        for (int t = 0; t < mesh.n_triangles(); ++t) out.values[t] = pc.k(mesh.centroid[t]);
        break;
    }
    }
    return out;
}

namespace {

// Green's theorem contribution of one directed polygon edge clipped against a
// disc centered at the origin: straight part inside the disc, circular sector
// for the parts outside.
double edge_disc_term(Vec2 A, Vec2 B, double r) {
    auto sector = [r](const Vec2& U, const Vec2& V) {
        return 0.5 * r * r * std::atan2(U.cross(V), U.dot(V));
    };
    const Vec2 d = B - A;
    const double a = d.squared_norm();
    if (a == 0.0) return 0.0;
    const double b = 2.0 * A.dot(d);
    const double c = A.squared_norm() - r * r;
    const double disc = b * b - 4.0 * a * c;
    if (disc <= 0.0) return sector(A, B); // segment entirely outside
    const double sq = std::sqrt(disc);
    const double u0 = std::max(0.0, (-b - sq) / (2.0 * a));
    const double u1 = std::min(1.0, (-b + sq) / (2.0 * a));
    if (u0 >= u1) return sector(A, B);
    const Vec2 P0 = A + d * u0;
    const Vec2 P1 = A + d * u1;
    return sector(A, P0) + 0.5 * P0.cross(P1) + sector(P1, B);
}

} // namespace

double disc_triangle_overlap_area(const Triangle& tri, Vec2 center, double radius) {
    if (!(radius > 0.0)) return 0.0;
    double area = 0.0;
    for (int i = 0; i < 3; ++i) area += edge_disc_term(tri[i] - center, tri[(i + 1) % 3] - center, radius);
    return std::max(area, 0.0);
}

CellField forcing(const ProblemCase& pc, const TriMesh& mesh, const TimePartition& tp, int n) {
    if (n < 1 || n > tp.n_steps()) throw ConfigError("forcing: step index out of range");
    CellField f(mesh);
    if (pc.kind == CaseKind::Sandpile) {
        const double density = pc.source_total / (M_PI * pc.source_radius * pc.source_radius);
        for (int t = 0; t < mesh.n_triangles(); ++t) {
            const double ov = disc_triangle_overlap_area(mesh.triangle_coords(t), pc.source_center, pc.source_radius);
            f.values[t] = density * ov / mesh.area[t];
        }
    } else {
        // F = -db_e/dt averaged over (t_{n-1}, t_n): exact for linear b_e
        const double dbe = pc.b_e(tp.t[n]) - pc.b_e(tp.t[n - 1]);
        f.values.setConstant(-dbe / tp.tau(n));
    }
    return f;
}

CRField initial_W(const ProblemCase& pc, const TriMesh& mesh) { return interpolate_CR(mesh, pc.w0); }

} // namespace qvi
