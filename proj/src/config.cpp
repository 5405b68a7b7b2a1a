#include "qvi/config.hpp"

#include <algorithm>
#include <filesystem>
#include <fstream>
#include <set>
#include <sstream>

#include "qvi/errors.hpp"
#include "qvi/toml.hpp"

namespace qvi {

TriMesh MeshSpec::build() const {
    switch (kind) {
    case Kind::Square:
        return generate_square_mesh(lo, hi, n, pattern);
    case Kind::Disc:
        return generate_disc_mesh(radius, target_h);
    case Kind::File:
        return read_mesh_text(path);
    }
    throw ConfigError("mesh: unknown kind");
}

double MeshSpec::nominal_h() const {
    switch (kind) {
    case Kind::Square:
        return (hi.x - lo.x) / n;
    case Kind::Disc:
        return target_h;
    case Kind::File:
        return 0.0;
    }
    return 0.0;
}

namespace {

const std::set<std::string> kKnownKeys = {
    "schema_version",
    "case.name",
    "mesh.kind", "mesh.lo", "mesh.hi", "mesh.n", "mesh.pattern", "mesh.radius", "mesh.target_h", "mesh.path",
    "time.steps",
    "solver.r", "solver.delta", "solver.alpha", "solver.tol_w", "solver.tol_q", "solver.max_iters",
    "solver.linear_solve", "solver.flush_factor",
    "output.dir", "output.trace", "output.emit_vtk",
    "nonlocal.quad_order", "nonlocal.cache", "thinfilm.j_from_lift",
};

LinearStrategy parse_strategy(const std::string& s) {
    if (s == "auto") return LinearStrategy::Auto;
    if (s == "sparse-llt") return LinearStrategy::SparseLLT;
    if (s == "dense-llt") return LinearStrategy::DenseLLT;
    if (s == "dense-pcg") return LinearStrategy::DensePCG;
    throw ConfigError("solver.linear_solve: unknown strategy '" + s + "'");
}

} // namespace

RunConfig RunConfig::from_toml_text(const std::string& text, const std::string& origin) {
    const TomlTable t = TomlTable::parse_string(text, origin);
    for (const auto& k : t.keys())
        if (!kKnownKeys.count(k)) throw ConfigError(origin + ": unknown config key '" + k + "'");
    if (t.get_int("schema_version", -1) != 1) throw ConfigError(origin + ": schema_version must be 1");

    RunConfig cfg;
    cfg.case_name = t.get_string("case.name");

    const std::string kind = t.has("mesh.kind") ? t.get_string("mesh.kind") : "square";
    if (kind == "square") {
        cfg.mesh.kind = MeshSpec::Kind::Square;
        auto lo = t.has("mesh.lo") ? t.get_double_array("mesh.lo") : std::vector<double>{0.0, 0.0};
        auto hi = t.has("mesh.hi") ? t.get_double_array("mesh.hi") : std::vector<double>{1.0, 1.0};
        if (lo.size() != 2 || hi.size() != 2) throw ConfigError(origin + ": mesh.lo/hi must be [x, y]");
        cfg.mesh.lo = {lo[0], lo[1]};
        cfg.mesh.hi = {hi[0], hi[1]};
        cfg.mesh.n = static_cast<int>(t.get_int("mesh.n", 16));
        if (cfg.mesh.n < 1) throw ConfigError(origin + ": mesh.n must be >= 1");
        const std::string pat = t.has("mesh.pattern") ? t.get_string("mesh.pattern") : "crossed";
        if (pat == "crossed")
            cfg.mesh.pattern = SquarePattern::Crossed;
        else if (pat == "diagonal")
            cfg.mesh.pattern = SquarePattern::Diagonal;
        else
            throw ConfigError(origin + ": mesh.pattern must be 'crossed' or 'diagonal'");
    } else if (kind == "disc") {
        cfg.mesh.kind = MeshSpec::Kind::Disc;
        cfg.mesh.radius = t.get_double("mesh.radius", 1.0);
        cfg.mesh.target_h = t.get_double("mesh.target_h", 0.1);
        if (!(cfg.mesh.target_h > 0.0)) throw ConfigError(origin + ": mesh.target_h must be positive");
    } else if (kind == "file") {
        cfg.mesh.kind = MeshSpec::Kind::File;
        cfg.mesh.path = t.get_string("mesh.path");
        if (!std::filesystem::exists(cfg.mesh.path))
            throw ConfigError(origin + ": mesh file does not exist: " + cfg.mesh.path);
    } else {
        throw ConfigError(origin + ": mesh.kind must be square, disc or file");
    }

    cfg.time_steps = t.get_double_array("time.steps");
    for (double tau : cfg.time_steps)
        if (!(tau > 0.0)) throw ConfigError(origin + ": time.steps must be positive");

    cfg.solver.r = t.get_double("solver.r", 1.0 + 1e-9);
    cfg.solver.delta = t.get_double("solver.delta", 1e-10);
    cfg.solver.alpha = t.get_double("solver.alpha", 1.0);
    cfg.solver.tol_w = t.get_double("solver.tol_w", 1e-6);
    cfg.solver.tol_q = t.get_double("solver.tol_q", 2e-5);
    cfg.solver.max_iters = static_cast<int>(t.get_int("solver.max_iters", 10000));
    cfg.solver.flush_factor = t.get_double("solver.flush_factor", 3.0);
    cfg.solver.strategy = parse_strategy(t.has("solver.linear_solve") ? t.get_string("solver.linear_solve") : "auto");
    cfg.solver.validate();

    if (t.has("output.dir")) cfg.out_dir = t.get_string("output.dir");
    cfg.trace = t.get_bool("output.trace", false);
    cfg.emit_vtk = t.get_bool("output.emit_vtk", false);
    cfg.j_from_lift = t.get_bool("thinfilm.j_from_lift", false);
    cfg.nonlocal_quad_order = static_cast<int>(t.get_int("nonlocal.quad_order", 6));
    cfg.nonlocal_cache = t.get_bool("nonlocal.cache", true);
    return cfg;
}

RunConfig RunConfig::from_file(const std::string& path) {
    if (!std::filesystem::exists(path)) throw ConfigError("config file does not exist: " + path);
    TomlTable t = TomlTable::parse_file(path); // parse first for line-accurate errors
    (void)t;
    std::ifstream is(path);
    std::ostringstream ss;
    ss << is.rdbuf();
    return from_toml_text(ss.str(), path);
}

} // namespace qvi
