#pragma once

#include <optional>
#include <string>
#include <vector>

#include "qvi/mesh.hpp"
#include "qvi/solver.hpp"

namespace qvi {

struct MeshSpec {
    enum class Kind { Square, Disc, File };
    Kind kind = Kind::Square;
    Vec2 lo{0.0, 0.0}, hi{1.0, 1.0};
    int n = 16;
    SquarePattern pattern = SquarePattern::Crossed;
    double radius = 1.0;
    double target_h = 0.1;
    std::string path;

    TriMesh build() const;
    double nominal_h() const;
};

/// Schema-validated run configuration (TOML, schema_version = 1).
struct RunConfig {
    std::string case_name;
    MeshSpec mesh;
    std::vector<double> time_steps;
    SolverParams solver;
    std::string out_dir = "out";
    bool trace = false;
    bool emit_vtk = false;
    bool j_from_lift = false; // case (iii): current from the conforming lift
    int nonlocal_quad_order = 6;
    bool nonlocal_cache = true;

    static RunConfig from_file(const std::string& path);
    static RunConfig from_toml_text(const std::string& text, const std::string& origin);
};

} // namespace qvi
