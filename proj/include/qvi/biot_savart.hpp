#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <string>
#include <vector>

#include "qvi/fem.hpp"
#include "qvi/mesh.hpp"

namespace qvi {

/// Newtonian potential of a flat triangle evaluated in its plane:
/// int_tri |x - y|^{-1} dy, via signed edge decomposition. Finite for any x,
/// including inside and on the triangle.
double newtonian_potential_of_triangle(const Triangle& tri, Vec2 x);

/// In-plane gradient of the triangle Newtonian potential (principal value).
/// Diverges on the triangle edges themselves.
Vec2 newtonian_potential_gradient(const Triangle& tri, Vec2 x);

/// I(sigma, sigma') = int int |x-y|^{-1}, all triangle pairs, symmetric storage.
class PairwisePotential {
  public:
    PairwisePotential() = default;
    PairwisePotential(const TriMesh& mesh, int quad_order) : mesh_(&mesh), quad_order_(quad_order) {
        const std::size_t n = mesh.n_triangles();
        data_.assign(n * (n + 1) / 2, 0.0);
    }

    double operator()(int i, int j) const {
        if (i < j) std::swap(i, j);
        return data_[std::size_t(i) * (i + 1) / 2 + j];
    }
    double& at(int i, int j) {
        if (i < j) std::swap(i, j);
        return data_[std::size_t(i) * (i + 1) / 2 + j];
    }

    const TriMesh& mesh() const { return *mesh_; }
    int quad_order() const { return quad_order_; }
    const std::vector<double>& raw() const { return data_; }
    std::vector<double>& raw() { return data_; }

  private:
    const TriMesh* mesh_ = nullptr;
    int quad_order_ = 0;
    std::vector<double> data_;
};

/// Outer Gauss quadrature of the analytic inner potential; 4-fold outer
/// subdivision for pairs with dist(centroids) < 2 max(h_i, h_j), two levels
/// for the self term.
PairwisePotential assemble_pairwise(const TriMesh& mesh, int quad_order, int n_threads = 1);

/// Dense symmetric matrix of c(grad_h phi_e, grad_h phi_f) over interior edges.
struct NonlocalMatrix {
    Eigen::MatrixXd C;
    std::uint64_t mesh_hash = 0;
    int quad_order = 0;
    double near_field_threshold = 2.0;
};

NonlocalMatrix assemble_nonlocal_form(const TriMesh& mesh, const PairwisePotential& P);

/// b3 at the given points: b_e + (1/4pi) curl of the single-layer potential of J.
/// Points must not lie on triangle edges.
std::vector<double> biot_savart_field(const CellVecField& J, const std::vector<Vec2>& points, double b_e);

/// Binary cache (little-endian doubles) keyed by mesh hash and quad order.
/// Header: magic "QVIPAIR1", u32 quad_order, u64 mesh_hash, u64 n_triangles.
bool load_pairwise_cache(const std::string& path, const TriMesh& mesh, int quad_order, PairwisePotential& out);
void store_pairwise_cache(const std::string& path, const PairwisePotential& P);

} // namespace qvi
