#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <Eigen/Cholesky>
#include <cmath>
#include <cstdio>
#include <functional>

#include "qvi/biot_savart.hpp"
#include "qvi/errors.hpp"
#include "qvi/fem.hpp"
#include "qvi/mesh.hpp"
#include "qvi/quadrature.hpp"

using namespace qvi;

namespace {

namespace duffy_detail {

double adaptive_simpson(const std::function<double(double)>& f, double a, double b, double fa, double fm, double fb,
                        double tol, int depth) {
    const double m = 0.5 * (a + b);
    const double lm = 0.5 * (a + m), rm = 0.5 * (m + b);
    const double flm = f(lm), frm = f(rm);
    const double whole = (b - a) / 6.0 * (fa + 4 * fm + fb);
    const double left = (m - a) / 6.0 * (fa + 4 * flm + fm);
    const double right = (b - m) / 6.0 * (fm + 4 * frm + fb);
    if (depth <= 0 || std::abs(left + right - whole) < 15.0 * tol) return left + right + (left + right - whole) / 15.0;
    return adaptive_simpson(f, a, m, fa, flm, fm, 0.5 * tol, depth - 1) +
           adaptive_simpson(f, m, b, fm, frm, fb, 0.5 * tol, depth - 1);
}

} // namespace duffy_detail

// Oracle independent of the edge-decomposition closed form: split the triangle
// at x into three signed sub-triangles; the Duffy transform cancels the
// 1/|x-y| singularity exactly and collapses to a 1D integral, evaluated
// adaptively to absolute tolerance 1e-12.
double potential_duffy(const Triangle& tri, Vec2 x) {
    double total = 0.0;
    for (int i = 0; i < 3; ++i) {
        const Vec2 A = tri[i], B = tri[(i + 1) % 3];
        const double a2 = 2.0 * signed_area(x, A, B);
        if (a2 == 0.0) continue;
        auto f = [&](double v) { return std::abs(a2) / ((A - x) + (B - A) * v).norm(); };
        const double val =
            duffy_detail::adaptive_simpson(f, 0.0, 1.0, f(0.0), f(0.5), f(1.0), 1e-13, 48);
        total += (a2 > 0.0 ? val : -val);
    }
    return total;
}

// Outer integration of the Duffy-based inner potential on uniformly refined
// panels; the boundary-layer error shrinks by 4 per level, so two levels give
// a Richardson-extrapolated value accurate to ~1e-9.
double self_oracle_level(const Triangle& tri, int levels) {
    const TriQuadRule& rule = tri_rule_by_degree(10);
    std::vector<Triangle> tris{tri};
    for (int level = 0; level < levels; ++level) {
        std::vector<Triangle> next;
        for (const auto& T : tris) {
            const Vec2 m01 = (T[0] + T[1]) * 0.5, m12 = (T[1] + T[2]) * 0.5, m20 = (T[2] + T[0]) * 0.5;
            next.push_back({T[0], m01, m20});
            next.push_back({m01, T[1], m12});
            next.push_back({m20, m12, T[2]});
            next.push_back({m01, m12, m20});
        }
        tris.swap(next);
    }
    double s = 0.0;
    for (const auto& T : tris) {
        const double a = signed_area(T[0], T[1], T[2]);
        for (int q = 0; q < rule.size(); ++q) s += a * rule.weights[q] * potential_duffy(tri, rule.map(T, q));
    }
    return s;
}

double self_term_oracle(const Triangle& tri) {
    const double i4 = self_oracle_level(tri, 4);
    const double i5 = self_oracle_level(tri, 5);
    return i5 + (i5 - i4) / 3.0;
}

} // namespace

TEST_CASE("triangle Newtonian potential: far field, centroid oracle, rigid motion") {
    // unit-area equilateral triangle
    const double side = std::sqrt(4.0 / std::sqrt(3.0));
    const Triangle eq = {Vec2{0, 0}, Vec2{side, 0}, Vec2{side / 2, side * std::sqrt(3.0) / 2}};
    const double diam = side;
    const double R = 100.0 * diam;
    const Vec2 far{R, 0.3 * R};
    const double dist = (far - (eq[0] + eq[1] + eq[2]) / 3.0).norm();
    const double got = newtonian_potential_of_triangle(eq, far);
    CHECK(std::abs(got - 1.0 / dist) <= 1e-4 / dist);

    // centroid of the reference triangle vs adaptive/Duffy oracle
    const Triangle ref = {Vec2{0, 0}, Vec2{1, 0}, Vec2{0, 1}};
    const Vec2 cen{1.0 / 3.0, 1.0 / 3.0};
    const double v = newtonian_potential_of_triangle(ref, cen);
    const double oracle = potential_duffy(ref, cen);
    CHECK(v == doctest::Approx(oracle).epsilon(1e-10));

    // interior (non-centroid), exterior and near-edge points
    for (Vec2 x : {Vec2{0.2, 0.3}, Vec2{1.5, -0.7}, Vec2{0.5, 1e-4}, Vec2{0.5, -1e-4}}) {
        CHECK(newtonian_potential_of_triangle(ref, x) == doctest::Approx(potential_duffy(ref, x)).epsilon(1e-9));
    }

    // translation + rotation invariance
    const double c = std::cos(0.7), s = std::sin(0.7);
    auto rot = [&](Vec2 p) { return Vec2{c * p.x - s * p.y + 2.5, s * p.x + c * p.y - 1.25}; };
    const Triangle refr = {rot(ref[0]), rot(ref[1]), rot(ref[2])};
    for (Vec2 x : {Vec2{0.2, 0.3}, Vec2{2.0, 0.9}}) {
        const double a = newtonian_potential_of_triangle(ref, x);
        const double b = newtonian_potential_of_triangle(refr, rot(x));
        CHECK(std::abs(a - b) <= 1e-13 * std::max(1.0, std::abs(a)));
    }

    const Triangle degen = {Vec2{0, 0}, Vec2{1, 0}, Vec2{2, 0}};
    CHECK_THROWS_AS(newtonian_potential_of_triangle(degen, Vec2{0, 1}), GeometryError);
}

TEST_CASE("potential gradient matches finite differences off the edges") {
    const Triangle ref = {Vec2{0, 0}, Vec2{1, 0}, Vec2{0, 1}};
    const double h = 1e-6;
    for (Vec2 x : {Vec2{0.21, 0.33}, Vec2{1.4, 0.8}, Vec2{-0.3, 0.5}, Vec2{0.4, 0.05}}) {
        const Vec2 g = newtonian_potential_gradient(ref, x);
        const double fx = (newtonian_potential_of_triangle(ref, {x.x + h, x.y}) -
                           newtonian_potential_of_triangle(ref, {x.x - h, x.y})) /
                          (2 * h);
        const double fy = (newtonian_potential_of_triangle(ref, {x.x, x.y + h}) -
                           newtonian_potential_of_triangle(ref, {x.x, x.y - h})) /
                          (2 * h);
        CHECK(g.x == doctest::Approx(fx).epsilon(5e-5));
        CHECK(g.y == doctest::Approx(fy).epsilon(5e-5));
    }
    CHECK_THROWS_AS(newtonian_potential_gradient(ref, Vec2{0.5, 0.0}), EvaluationError);
}

TEST_CASE("pairwise potential: far field, self-term oracle, scaling, monotonicity") {
    TriMesh m = generate_disc_mesh(1.0, 0.45);
    PairwisePotential P = assemble_pairwise(m, 6, 2);

    // far-field: two separate unit-size triangles at distance 1000
    {
        TriMesh two;
        two.vertices = {{0, 0}, {1, 0}, {0, 1}, {1000, 0}, {1001, 0}, {1000, 1}};
        two.triangles = {{0, 1, 2}, {3, 4, 5}};
        two.finalize();
        PairwisePotential P2 = assemble_pairwise(two, 6, 1);
        const double expect = two.area[0] * two.area[1] / (two.centroid[0] - two.centroid[1]).norm();
        CHECK(P2(0, 1) == doctest::Approx(expect).epsilon(1e-6));
        CHECK(P2(0, 1) == P2(1, 0)); // shared storage: exact symmetry
    }

    // self term on the reference triangle vs the Duffy oracle
    {
        TriMesh one;
        one.vertices = {{0, 0}, {1, 0}, {0, 1}};
        one.triangles = {{0, 1, 2}};
        one.finalize();
        PairwisePotential P1 = assemble_pairwise(one, 6, 1);
        const double oracle = self_term_oracle(one.triangle_coords(0));
        CHECK(P1(0, 0) == doctest::Approx(oracle).epsilon(1e-6));
    }

    // positivity and same-shape monotonicity on the disc mesh
    for (int i = 0; i < m.n_triangles(); ++i) CHECK(P(i, i) > 0.0);
    // I scales like length^3 under uniform scaling
    {
        TriMesh small;
        const double s = 0.37;
        small.vertices = m.vertices;
        for (auto& v : small.vertices) v = v * s;
        small.triangles = m.triangles;
        small.finalize();
        PairwisePotential Ps = assemble_pairwise(small, 6, 1);
        CHECK(Ps(3, 7) == doctest::Approx(s * s * s * P(3, 7)).epsilon(1e-10));
        CHECK(Ps(0, 0) == doctest::Approx(s * s * s * P(0, 0)).epsilon(1e-10));
    }

    // kernel monotone in distance: congruent copies of one triangle, self beats pair
    {
        TriMesh pairm;
        pairm.vertices = {{0, 0}, {1, 0}, {0.2, 0.9}, {5, 0}, {6, 0}, {5.2, 0.9}};
        pairm.triangles = {{0, 1, 2}, {3, 4, 5}};
        pairm.finalize();
        PairwisePotential Pp = assemble_pairwise(pairm, 6, 1);
        CHECK(Pp(0, 0) > Pp(0, 1));
    }
}

TEST_CASE("nonlocal matrix: symmetric, SPD, quadrature convergence, scaling") {
    TriMesh m = generate_disc_mesh(1.0, 0.25);
    PairwisePotential P3 = assemble_pairwise(m, 3, 2);
    PairwisePotential P6 = assemble_pairwise(m, 6, 2);
    PairwisePotential P12 = assemble_pairwise(m, 12, 2);
    NonlocalMatrix C3 = assemble_nonlocal_form(m, P3);
    NonlocalMatrix C6 = assemble_nonlocal_form(m, P6);
    NonlocalMatrix C12 = assemble_nonlocal_form(m, P12);

    CHECK((C6.C - C6.C.transpose()).norm() <= 1e-12 * C6.C.norm());
    Eigen::LLT<Eigen::MatrixXd> llt(C6.C);
    CHECK(llt.info() == Eigen::Success);

    // quadratic form Cauchy-converges over quad_order {3, 6, 12}
    CRField w = interpolate_CR(m, [](Vec2 p) {
        const double r2 = p.squared_norm();
        return r2 < 1.0 ? std::exp(-1.0 / (1.0 - r2)) : 0.0; // smooth bump
    });
    const double q3 = w.values.dot(C3.C * w.values);
    const double q6 = w.values.dot(C6.C * w.values);
    const double q12 = w.values.dot(C12.C * w.values);
    CHECK(std::abs(q6 - q3) <= 0.10 * std::abs(q6));
    CHECK(std::abs(q12 - q6) <= 1e-3 * std::abs(q12));

    // entries scale like s under uniform mesh scaling
    {
        TriMesh small;
        const double s = 0.5;
        small.vertices = m.vertices;
        for (auto& v : small.vertices) v = v * s;
        small.triangles = m.triangles;
        small.finalize();
        PairwisePotential Ps = assemble_pairwise(small, 6, 2);
        NonlocalMatrix Cs = assemble_nonlocal_form(small, Ps);
        CHECK(Cs.C(0, 0) == doctest::Approx(s * C6.C(0, 0)).epsilon(1e-10));
        const double qs = w.values.dot(Cs.C * w.values);
        CHECK(qs == doctest::Approx(s * q6).epsilon(1e-10));
    }
}

TEST_CASE("biot_savart_field: uniform limit, dipole decay, mirror antisymmetry") {
    TriMesh m = generate_square_mesh({-1, -1}, {1, 1}, 8, SquarePattern::Crossed);

    CellVecField zero(m);
    auto b0 = biot_savart_field(zero, {{0.1, 0.2}, {3.0, 4.0}}, 0.7);
    for (double b : b0) CHECK(b == 0.7);

    // J = curl of a P1 hat: a small loop; far field decays like a dipole
    P1Field hat(m);
    int vc = -1;
    for (int v = 0; v < m.n_vertices(); ++v)
        if ((m.vertices[v] - Vec2{0, 0}).norm() < 1e-12) vc = v;
    REQUIRE(vc >= 0);
    hat.values[vc] = 1.0;
    CellVecField J = curl_of_lift(hat);
    const double R = 40.0, R2 = 80.0;
    const double b1 = biot_savart_field(J, {{R, 0}}, 0.0)[0];
    const double b2 = biot_savart_field(J, {{R2, 0}}, 0.0)[0];
    CHECK(std::abs(b1 / b2) > 8.0 * 0.85);
    CHECK(std::abs(b1 / b2) < 8.0 * 1.15);

    // reflecting J across the x1 axis ((J1,J2)(y) -> (J1,-J2)(My)) mirrors the
    // induced field with a sign flip
    CellVecField Jm(m);
    for (int t = 0; t < m.n_triangles(); ++t) {
        const Vec2 c = m.centroid[t];
        for (int t2 = 0; t2 < m.n_triangles(); ++t2)
            if ((m.centroid[t2] - Vec2{c.x, -c.y}).norm() < 1e-12) {
                Jm.values(t2, 0) = J.values(t, 0);
                Jm.values(t2, 1) = -J.values(t, 1);
            }
    }
    const Vec2 p{0.37, 0.21};
    const double bj = biot_savart_field(J, {p}, 0.0)[0];
    const double bm = biot_savart_field(Jm, {{p.x, -p.y}}, 0.0)[0];
    CHECK(bj == doctest::Approx(-bm).epsilon(1e-11));

    // evaluation on an edge is rejected
    CHECK_THROWS_AS(biot_savart_field(J, {{0.125, 0.0}}, 0.0), EvaluationError);
}

TEST_CASE("pairwise cache round-trips and rejects mismatches") {
    TriMesh m = generate_disc_mesh(1.0, 0.4);
    PairwisePotential P = assemble_pairwise(m, 6, 1);
    const char* path = "pairwise_cache.bin";
    store_pairwise_cache(path, P);
    PairwisePotential Q;
    REQUIRE(load_pairwise_cache(path, m, 6, Q));
    CHECK(Q.raw() == P.raw());
    PairwisePotential R;
    CHECK_FALSE(load_pairwise_cache(path, m, 12, R)); // wrong order
    TriMesh m2 = generate_disc_mesh(1.0, 0.45);
    CHECK_FALSE(load_pairwise_cache(path, m2, 6, R)); // wrong mesh
    std::remove(path);
}
