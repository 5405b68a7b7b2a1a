#include "qvi/quadrature.hpp"

#include <Eigen/Dense>
#include <map>
#include <mutex>

#include "qvi/errors.hpp"

namespace qvi {

namespace {

void push_point(TriQuadRule& r, double l0, double l1, double l2, double w) {
    r.points.push_back({l0, l1, l2});
    r.weights.push_back(w);
}

// All permutations of a barycentric orbit.
void push_orbit3(TriQuadRule& r, double a, double w) {
    const double b = 1.0 - 2.0 * a;
    push_point(r, b, a, a, w);
    push_point(r, a, b, a, w);
    push_point(r, a, a, b, w);
}

void push_orbit6(TriQuadRule& r, double a, double b, double w) {
    const double c = 1.0 - a - b;
    push_point(r, a, b, c, w);
    push_point(r, a, c, b, w);
    push_point(r, b, a, c, w);
    push_point(r, b, c, a, w);
    push_point(r, c, a, b, w);
    push_point(r, c, b, a, w);
}

// Golub-Welsch from three-term recurrence coefficients.
void golub_welsch(const std::vector<double>& alpha, const std::vector<double>& beta, double mu0,
                  std::vector<double>& x, std::vector<double>& w) {
    const int n = static_cast<int>(alpha.size());
    Eigen::MatrixXd J = Eigen::MatrixXd::Zero(n, n);
    for (int i = 0; i < n; ++i) {
        J(i, i) = alpha[i];
        if (i + 1 < n) J(i, i + 1) = J(i + 1, i) = std::sqrt(beta[i + 1]);
    }
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(J);
    x.resize(n);
    w.resize(n);
    for (int i = 0; i < n; ++i) {
        x[i] = es.eigenvalues()(i);
        const double v0 = es.eigenvectors()(0, i);
        w[i] = mu0 * v0 * v0;
    }
}

} // namespace

void gauss_legendre_01(int n, std::vector<double>& x, std::vector<double>& w) {
    // Legendre on [-1,1]: alpha_k = 0, beta_k = k^2/(4k^2-1), mu0 = 2.
    std::vector<double> alpha(n, 0.0), beta(n, 0.0);
    for (int k = 1; k < n; ++k) beta[k] = k * k / (4.0 * k * k - 1.0);
    golub_welsch(alpha, beta, 2.0, x, w);
    for (int i = 0; i < n; ++i) {
        x[i] = 0.5 * (x[i] + 1.0);
        w[i] *= 0.5;
    }
}

namespace {

// Gauss-Jacobi with weight (1-x) on [0,1], needed for the conical product rule.
void gauss_jacobi10_01(int n, std::vector<double>& x, std::vector<double>& w) {
    // Jacobi(1,0) on [-1,1]: alpha_k = -1/((2k+1)(2k+3)),
    // beta_k = 4k^2(k+1)^2 / ((2k)^2 ((2k)^2-1)) with the usual convention; mu0 = 2.
    std::vector<double> alpha(n), beta(n, 0.0);
    for (int k = 0; k < n; ++k) {
        const double a = 1.0, b = 0.0;
        const double den = (2.0 * k + a + b) * (2.0 * k + a + b + 2.0);
        alpha[k] = (b * b - a * a) / (den == 0.0 ? 1.0 : den);
        if (k == 0) alpha[k] = (b - a) / (a + b + 2.0);
        if (k > 0) {
            const double num = 4.0 * k * (k + a) * (k + b) * (k + a + b);
            const double d2 = (2.0 * k + a + b);
            beta[k] = num / (d2 * d2 * (d2 + 1.0) * (d2 - 1.0));
        }
    }
    golub_welsch(alpha, beta, 2.0, x, w); // mu0 = int_{-1}^1 (1-x) dx = 2
    for (int i = 0; i < n; ++i) {
        x[i] = 0.5 * (x[i] + 1.0);
        w[i] *= 0.25; // mass of (1-x) on [0,1] is 1/2; GW carries mu0=2 -> scale 1/4
    }
}

// Conical product rule of degree 2n-1 with n^2 points.
TriQuadRule make_conical(int n) {
    std::vector<double> xl, wl, xj, wj;
    gauss_legendre_01(n, xl, wl);
    gauss_jacobi10_01(n, xj, wj);
    TriQuadRule r;
    r.degree = 2 * n - 1;
    // x = xj (toward vertex 0), y = xl*(1-xj); weight includes the (1-x) Jacobian.
    double total = 0.0;
    for (int i = 0; i < n; ++i)
        for (int j = 0; j < n; ++j) {
            const double x = xj[i], y = xl[j] * (1.0 - xj[i]);
            push_point(r, 1.0 - x - y, x, y, 2.0 * wj[i] * wl[j]);
            total += r.weights.back();
        }
    // normalize away accumulated roundoff; weights must sum to exactly 1
    for (auto& w : r.weights) w /= total;
    return r;
}

} // namespace

const TriQuadRule& tri_rule_midpoint3() {
    static const TriQuadRule r = [] {
        TriQuadRule q;
        q.degree = 2;
        push_orbit3(q, 0.5, 1.0 / 3.0);
        return q;
    }();
    return r;
}

const TriQuadRule& tri_rule_6pt() {
    static const TriQuadRule r = [] {
        TriQuadRule q;
        q.degree = 4;
        push_orbit3(q, 0.445948490915965, 0.223381589678011);
        push_orbit3(q, 0.091576213509771, 0.109951743655322);
        return q;
    }();
    return r;
}

const TriQuadRule& tri_rule_7pt() {
    static const TriQuadRule r = [] {
        TriQuadRule q;
        q.degree = 5;
        push_point(q, 1.0 / 3.0, 1.0 / 3.0, 1.0 / 3.0, 0.225);
        push_orbit3(q, 0.470142064105115, 0.132394152788506);
        push_orbit3(q, 0.101286507323456, 0.125939180544827);
        return q;
    }();
    return r;
}

const TriQuadRule& tri_rule_12pt() {
    static const TriQuadRule r = [] {
        TriQuadRule q;
        q.degree = 6;
        push_orbit3(q, 0.249286745170910, 0.116786275726379);
        push_orbit3(q, 0.063089014491502, 0.050844906370207);
        push_orbit6(q, 0.310352451033785, 0.636502499121399, 0.082851075618374);
        return q;
    }();
    return r;
}

const TriQuadRule& tri_rule_by_degree(int degree) {
    if (degree <= 2) return tri_rule_midpoint3();
    if (degree <= 4) return tri_rule_6pt();
    if (degree <= 5) return tri_rule_7pt();
    if (degree <= 6) return tri_rule_12pt();
    static std::map<int, TriQuadRule> cache;
    static std::mutex mu;
    std::lock_guard<std::mutex> lock(mu);
    const int n = (degree + 2) / 2;
    auto it = cache.find(n);
    if (it == cache.end()) it = cache.emplace(n, make_conical(n)).first;
    return it->second;
}

} // namespace qvi
