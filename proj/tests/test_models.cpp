#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>

#include "qvi/errors.hpp"
#include "qvi/models.hpp"

using namespace qvi;

TEST_CASE("disc-triangle overlap: exact configurations") {
    const Vec2 c{0, 0};
    // triangle far away
    CHECK(disc_triangle_overlap_area({Vec2{10, 10}, Vec2{11, 10}, Vec2{10, 11}}, c, 1.0) == 0.0);
    // triangle entirely inside the disc
    const Triangle tin = {Vec2{-0.1, -0.1}, Vec2{0.1, -0.1}, Vec2{0.0, 0.1}};
    CHECK(disc_triangle_overlap_area(tin, c, 1.0) == doctest::Approx(0.02).epsilon(1e-13));
    // disc entirely inside a big triangle
    const Triangle tbig = {Vec2{-10, -10}, Vec2{10, -10}, Vec2{0, 10}};
    CHECK(disc_triangle_overlap_area(tbig, c, 0.5) == doctest::Approx(M_PI * 0.25).epsilon(1e-13));
    // half-plane cut: right triangle covering the right half of the disc
    const Triangle thalf = {Vec2{0, -5}, Vec2{5, -5}, Vec2{0, 5}};
    // region x>0 within the triangle covers a half disc for r small enough
    CHECK(disc_triangle_overlap_area(thalf, c, 0.3) == doctest::Approx(0.5 * M_PI * 0.09).epsilon(1e-12));
    // quarter disc
    const Triangle tq = {Vec2{0, 0}, Vec2{5, 0}, Vec2{0, 5}};
    CHECK(disc_triangle_overlap_area(tq, c, 0.3) == doctest::Approx(0.25 * M_PI * 0.09).epsilon(1e-12));
}

TEST_CASE("sandpile source integrates to the poured total") {
    ProblemCase pc = make_builtin_case("sandpile_cone");
    TimePartition tp = TimePartition::from_steps({0.19, 0.01});
    for (int n : {50, 37}) {
        TriMesh m = generate_square_mesh({-1, -1}, {1, 1}, n, SquarePattern::Crossed);
        CellField f = forcing(pc, m, tp, 1);
        double total = 0.0;
        for (int t = 0; t < m.n_triangles(); ++t) total += f.values[t] * m.area[t];
        CHECK(std::abs(total - 1.0) <= 1e-10);
        for (int t = 0; t < m.n_triangles(); ++t) CHECK(f.values[t] >= 0.0);
        // density on fully covered triangles
        const double density = 1.0 / (M_PI * 0.04);
        for (int t = 0; t < m.n_triangles(); ++t)
            if ((m.centroid[t]).norm() < 0.2 - m.diameter[t]) CHECK(f.values[t] == doctest::Approx(density).epsilon(1e-12));
    }
}

TEST_CASE("forcing for superconductor cases is -db_e/dt") {
    ProblemCase pc = make_builtin_case("cylinder_kim");
    TriMesh m = generate_square_mesh({0, 0}, {1, 1}, 4, SquarePattern::Crossed);
    TimePartition tp = TimePartition::from_steps({0.09, 0.01});
    for (int n : {1, 2}) {
        CellField f = forcing(pc, m, tp, n);
        for (int t = 0; t < m.n_triangles(); ++t) CHECK(f.values[t] == doctest::Approx(-1.0).epsilon(1e-14));
    }
    ProblemCase tf = make_builtin_case("thinfilm_disc");
    TimePartition tp3 = TimePartition::from_steps({0.6, 0.05});
    CellField f3 = forcing(tf, m, tp3, 1);
    CHECK(f3.values[0] == doctest::Approx(-1.0).epsilon(1e-14));
    CHECK_THROWS_AS(forcing(tf, m, tp3, 3), ConfigError);
}

TEST_CASE("sandpile M_init: flat support, cone support, refinement limit") {
    ProblemCase pc = make_builtin_case("sandpile_cone");

    // w0 == 0 -> w0h = 0, k1 = k0
    ProblemCase flat = pc;
    flat.w0 = [](Vec2) { return 0.0; };
    TriMesh m = generate_square_mesh({-1, -1}, {1, 1}, 10, SquarePattern::Crossed);
    SandpileAux aux0 = sandpile_M_init(m, flat);
    CHECK(aux0.w0h.values.norm() == 0.0);
    for (int t = 0; t < m.n_triangles(); ++t) CHECK(aux0.k1.values[t] == doctest::Approx(0.4).epsilon(1e-15));

    // cone of slope 1: k1 ~ 1 (the interpolated cone carries an O(h)
    // curvature error) strictly inside the support, exactly k0 outside
    TriMesh m2 = generate_square_mesh({-1, -1}, {1, 1}, 50, SquarePattern::Crossed);
    SandpileAux aux = sandpile_M_init(m2, pc);
    for (int t = 0; t < m2.n_triangles(); ++t) {
        const double rho = m2.centroid[t].norm();
        if (rho > 0.1 && rho < 0.4 - 2.0 * m2.h_max)
            CHECK(aux.k1.values[t] == doctest::Approx(1.0).epsilon(0.05));
        if (rho > 0.4 + 2.0 * m2.h_max) CHECK(aux.k1.values[t] == doctest::Approx(0.4).epsilon(1e-12));
    }

    // refinement: k1 -> max(k0, |grad w0|) = 1 at a probe triangle inside the cone
    const Vec2 probe{0.2, 0.1}; // |probe| ~ 0.224
    std::vector<double> errs;
    for (int n : {25, 50, 100}) {
        TriMesh mm = generate_square_mesh({-1, -1}, {1, 1}, n, SquarePattern::Crossed);
        SandpileAux a = sandpile_M_init(mm, pc);
        int best = 0;
        for (int t = 1; t < mm.n_triangles(); ++t)
            if ((mm.centroid[t] - probe).norm() < (mm.centroid[best] - probe).norm()) best = t;
        errs.push_back(std::abs(a.k1.values[best] - 1.0));
    }
    REQUIRE(errs.size() == 3);
    CHECK(errs[2] <= errs[0] + 1e-12);
    CHECK(errs[2] <= 0.02);
}

TEST_CASE("discrete_M branches for the sandpile law") {
    ProblemCase pc = make_builtin_case("sandpile_cone");
    TriMesh m = generate_square_mesh({-1, -1}, {1, 1}, 50, SquarePattern::Crossed);
    SandpileAux aux = sandpile_M_init(m, pc);

    // pick a triangle inside the cone (k1 close to the unit cone slope)
    int pick = -1;
    for (int t = 0; t < m.n_triangles(); ++t) {
        const double rho = m.centroid[t].norm();
        if (rho > 0.1 && rho < 0.3 && aux.k1.values[t] > 0.9) {
            pick = t;
            break;
        }
    }
    REQUIRE(pick >= 0);
    const double k1 = aux.k1.values[pick];

    CellField eta(m);
    // above the band -> k0
    eta.values = aux.w0h.values.array() + pc.epsilon;
    CellField Ma = discrete_M(pc, 0.2, eta, &aux);
    CHECK(Ma.values[pick] == doctest::Approx(pc.k0).epsilon(1e-14));
    // below -> k1
    eta.values = aux.w0h.values.array() - 0.001;
    CellField Mb = discrete_M(pc, 0.2, eta, &aux);
    CHECK(Mb.values[pick] == doctest::Approx(k1).epsilon(1e-14));
    // midpoint of the band -> midpoint of (k1, k0)
    eta.values = aux.w0h.values.array() + 0.5 * pc.epsilon;
    CellField Mc = discrete_M(pc, 0.2, eta, &aux);
    CHECK(Mc.values[pick] == doctest::Approx(0.5 * (k1 + pc.k0)).epsilon(1e-12));

    // monotone non-increasing in eta on a fixed triangle
    double prev = 1e9;
    for (double de = -0.02; de <= 0.02; de += 0.001) {
        eta.values = aux.w0h.values;
        eta.values[pick] += de;
        CellField Mv = discrete_M(pc, 0.2, eta, &aux);
        CHECK(Mv.values[pick] <= prev + 1e-14);
        prev = Mv.values[pick];
    }

    // bounds
    eta.values.setRandom();
    CellField Mr = discrete_M(pc, 0.2, eta, &aux);
    for (int t = 0; t < m.n_triangles(); ++t) {
        CHECK(Mr.values[t] >= pc.k0 - 1e-14);
        CHECK(Mr.values[t] <= aux.k1.values[t] + 1e-14);
    }
}

TEST_CASE("discrete_M for the Kim cylinder and the Bean film") {
    ProblemCase pc = make_builtin_case("cylinder_kim");
    TriMesh m = generate_square_mesh({0, 0}, {1, 1}, 4, SquarePattern::Crossed);
    CellField eta(m);

    // eta + b_e = 0 -> 1 ; eta + b_e = B0 -> 1/2
    eta.values.setConstant(0.0);
    CellField M0 = discrete_M(pc, 0.0, eta, nullptr);
    for (int t = 0; t < m.n_triangles(); ++t) CHECK(M0.values[t] == doctest::Approx(1.0).epsilon(1e-14));
    eta.values.setConstant(pc.B0 - 0.3); // with t_n = 0.3: eta + b_e = B0
    CellField Mh = discrete_M(pc, 0.3, eta, nullptr);
    for (int t = 0; t < m.n_triangles(); ++t) CHECK(Mh.values[t] == doctest::Approx(0.5).epsilon(1e-14));

    ProblemCase tf = make_builtin_case("thinfilm_disc");
    eta.values.setRandom();
    CellField Mt = discrete_M(tf, 0.65, eta, nullptr);
    for (int t = 0; t < m.n_triangles(); ++t) CHECK(Mt.values[t] == doctest::Approx(1.0).epsilon(1e-15));
}

TEST_CASE("initial_W per case") {
    TriMesh m = generate_square_mesh({-1, -1}, {1, 1}, 20, SquarePattern::Crossed);
    ProblemCase sp = make_builtin_case("sandpile_cone");
    CRField w = initial_W(sp, m);
    for (const auto& e : m.edges)
        if (e.dof >= 0)
            CHECK(w.values[e.dof] == doctest::Approx(std::max(0.4 - e.midpoint.norm(), 0.0)).epsilon(1e-14));

    ProblemCase cyl = make_builtin_case("cylinder_kim");
    CRField wc = initial_W(cyl, m);
    CHECK(wc.values.norm() == 0.0);
}

TEST_CASE("time partition") {
    TimePartition tp = TimePartition::from_steps({0.19, 0.01});
    CHECK(tp.n_steps() == 2);
    CHECK(tp.T() == doctest::Approx(0.2).epsilon(1e-15));
    CHECK(tp.tau(1) == doctest::Approx(0.19).epsilon(1e-15));
    CHECK(tp.tau(2) == doctest::Approx(0.01).epsilon(1e-15));
    CHECK_THROWS_AS(TimePartition::from_steps({0.1, -0.1}), ConfigError);
    CHECK_THROWS_AS(TimePartition::from_steps({}), ConfigError);
}
