#pragma once

#include <array>
#include <vector>

#include "qvi/geom.hpp"

namespace qvi {

/// Quadrature rule on the reference triangle in barycentric coordinates;
/// weights sum to 1 (multiply by |sigma| for physical integrals).
struct TriQuadRule {
    std::vector<std::array<double, 3>> points;
    std::vector<double> weights;
    int degree = 0;

    int size() const { return static_cast<int>(points.size()); }
    Vec2 map(const Triangle& tri, int q) const {
        const auto& b = points[q];
        return tri[0] * b[0] + tri[1] * b[1] + tri[2] * b[2];
    }
};

/// Edge-midpoint rule, exact for quadratics.
const TriQuadRule& tri_rule_midpoint3();
/// 6-point rule, degree 4.
const TriQuadRule& tri_rule_6pt();
/// 7-point rule, degree 5.
const TriQuadRule& tri_rule_7pt();
/// 12-point rule, degree 6.
const TriQuadRule& tri_rule_12pt();

/// Smallest available rule integrating polynomials of the given degree
/// exactly; falls back to a conical-product Gauss rule for degree > 6.
const TriQuadRule& tri_rule_by_degree(int degree);

/// Gauss-Legendre nodes/weights on [0,1] (weights sum to 1).
void gauss_legendre_01(int n, std::vector<double>& x, std::vector<double>& w);

template <class F> double integrate_over(const Triangle& tri, const TriQuadRule& rule, F&& f) {
    const double a = signed_area(tri[0], tri[1], tri[2]);
    double s = 0.0;
    for (int q = 0; q < rule.size(); ++q) s += rule.weights[q] * f(rule.map(tri, q));
    return s * a;
}

} // namespace qvi
