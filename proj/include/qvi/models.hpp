#pragma once

#include <functional>
#include <string>
#include <vector>

#include "qvi/fem.hpp"
#include "qvi/mesh.hpp"

namespace qvi {

enum class CaseKind { Sandpile, CylinderKim, ThinFilmBean };

/// Tagged definition of one of the three model problems.
struct ProblemCase {
    CaseKind kind = CaseKind::Sandpile;
    std::string name;

    // case (i): growing sandpile
    double k0 = 0.4;      // internal friction (critical slope)
    double epsilon = 0.01; // regularization height
    std::function<double(Vec2)> w0;       // support surface, Lipschitz, zero on the boundary
    Vec2 source_center{0.0, 0.0};
    double source_radius = 0.2;
    double source_total = 1.0; // integral of f over the domain, f uniform on the disc

    // cases (ii)/(iii): superconductors, b_e(t) = be_rate * t
    double B0 = 0.05;   // Kim scale; M_hat(b) = 1/(1+|b|/B0)
    double be_rate = 1.0;
    std::function<double(Vec2)> k = [](Vec2) { return 1.0; }; // critical current coefficient

    double b_e(double t) const { return be_rate * t; }
};

/// Built-in cases: sandpile_cone, cylinder_kim, thinfilm_disc.
ProblemCase make_builtin_case(const std::string& name);

struct TimePartition {
    std::vector<double> t; // t_0 = 0 < t_1 < ... < t_N = T

    static TimePartition from_steps(const std::vector<double>& taus);
    int n_steps() const { return static_cast<int>(t.size()) - 1; }
    double tau(int n) const { return t[n] - t[n - 1]; } // n in [1, N]
    double T() const { return t.back(); }
};

/// Per-triangle data fixed once per sandpile run: w_0^h = P^h[pi^h_N w_0]
/// and the slope bound k_1 = max(k0, |grad_h pi^h_N w_0|).
struct SandpileAux {
    CellField w0h;
    CellField k1;
};

SandpileAux sandpile_M_init(const TriMesh& mesh, const ProblemCase& pc);

/// Discrete coefficient field M^{h,n}(eta) per triangle, eta = P^h W iterate.
/// Cases: (i) regularized sandpile law, (ii) k(x_s) * M_hat(eta + b_e(t_n)),
/// (iii) k(x_s).
CellField discrete_M(const ProblemCase& pc, double t_n, const CellField& PhW, const SandpileAux* aux);

/// Exact area of triangle cut by a disc (polygon clipping with circular segments).
double disc_triangle_overlap_area(const Triangle& tri, Vec2 center, double radius);

/// F^n as a cell field: case (i) exact area-fraction projection of the disc
/// source (time-constant); cases (ii)/(iii) the constant -(b_e(t_n)-b_e(t_{n-1}))/tau_n.
CellField forcing(const ProblemCase& pc, const TriMesh& mesh, const TimePartition& tp, int n);

/// W^0 = pi^h_N w^0.
CRField initial_W(const ProblemCase& pc, const TriMesh& mesh);

} // namespace qvi
