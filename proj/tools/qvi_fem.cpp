#include <CLI11.hpp>
#include <filesystem>
#include <fstream>
#include <iostream>

#include "qvi/errors.hpp"
#include "qvi/runner.hpp"

using namespace qvi;

int main(int argc, char** argv) {
    CLI::App app{"Nonconforming FE solver for critical-state quasi-variational inequality models"};
    app.require_subcommand(1);

    std::string config_path, out_dir, mesh_out, mesh_file, mesh_kind = "square", pattern = "crossed";
    int threads = 1, n = 16;
    bool trace = false, emit_vtk = false;
    double radius = 1.0, target_h = 0.1, fine_h = 0.04;
    std::vector<double> lo{0.0, 0.0}, hi{1.0, 1.0}, h_list;

    auto* run = app.add_subcommand("run", "run one experiment from a TOML config");
    run->add_option("--config", config_path, "config file")->required();
    run->add_option("--out", out_dir, "output directory (overrides config)");
    run->add_flag("--trace", trace, "emit trace.jsonl with one record per iteration");
    run->add_flag("--emit-vtk", emit_vtk, "also write a legacy VTK file");
    run->add_option("--threads", threads, "assembly threads");

    auto* study = app.add_subcommand("study", "convergence study over a list of mesh sizes");
    study->add_option("--config", config_path, "base config file")->required();
    study->add_option("--h", h_list, "mesh sizes, e.g. --h 0.04 0.02")->required()->expected(-1);
    study->add_option("--out", out_dir, "output directory");
    study->add_option("--threads", threads, "assembly threads");

    auto* mesh = app.add_subcommand("mesh", "generate or inspect meshes");
    auto* gen = mesh->add_subcommand("generate", "write a mesh in the plain-text format");
    gen->add_option("--kind", mesh_kind, "square | disc");
    gen->add_option("--n", n, "subdivisions per side (square)");
    gen->add_option("--lo", lo, "lower corner")->expected(2);
    gen->add_option("--hi", hi, "upper corner")->expected(2);
    gen->add_option("--pattern", pattern, "crossed | diagonal");
    gen->add_option("--radius", radius, "disc radius");
    gen->add_option("--target-h", target_h, "disc target mesh size");
    gen->add_option("--out", mesh_out, "output file")->required();
    auto* inspect = mesh->add_subcommand("inspect", "print mesh statistics");
    inspect->add_option("--file", mesh_file, "mesh file")->required();

    auto* validate = app.add_subcommand("validate-refs", "run the analytic-reference cross-checks");
    validate->add_option("--fine-h", fine_h, "thin-film cross-check mesh size (default 0.04)");
    validate->add_option("--threads", threads, "assembly threads");
    validate->add_option("--out", out_dir, "where to write validation.json");

    CLI11_PARSE(app, argc, argv);

    try {
        if (*run) {
            RunConfig cfg = RunConfig::from_file(config_path);
            if (!out_dir.empty()) cfg.out_dir = out_dir;
            cfg.trace = cfg.trace || trace;
            cfg.emit_vtk = cfg.emit_vtk || emit_vtk;
            RunResult res = run_experiment(cfg, threads);
            write_artifacts(res, cfg, cfg.out_dir);
            std::cout << res.summary.dump(2) << "\n";
        } else if (*study) {
            RunConfig cfg = RunConfig::from_file(config_path);
            if (out_dir.empty()) out_dir = cfg.out_dir;
            convergence_study(cfg, h_list, threads, out_dir, std::cout);
        } else if (*mesh) {
            if (*gen) {
                TriMesh m;
                if (mesh_kind == "square")
                    m = generate_square_mesh({lo[0], lo[1]}, {hi[0], hi[1]}, n,
                                             pattern == "diagonal" ? SquarePattern::Diagonal
                                                                   : SquarePattern::Crossed);
                else if (mesh_kind == "disc")
                    m = generate_disc_mesh(radius, target_h);
                else
                    throw ConfigError("mesh generate: kind must be square or disc");
                write_mesh_text(m, mesh_out);
                std::cout << "wrote " << mesh_out << ": " << m.n_vertices() << " vertices, " << m.n_triangles()
                          << " triangles, h_max = " << m.h_max << "\n";
            } else if (*inspect) {
                TriMesh m = read_mesh_text(mesh_file);
                int nb = 0;
                for (const auto& e : m.edges)
                    if (e.boundary) ++nb;
                std::cout << "vertices " << m.n_vertices() << "\ntriangles " << m.n_triangles() << "\nedges "
                          << m.n_edges() << " (boundary " << nb << ")\ninterior dofs " << m.n_interior_edges
                          << "\nh_max " << m.h_max << "\narea " << m.total_area() << "\nhash " << std::hex
                          << m.content_hash() << std::dec << "\n";
            } else {
                std::cerr << "mesh: need a generate or inspect subcommand\n";
                return 2;
            }
        } else if (*validate) {
            nlohmann::json report = validate_references(fine_h, threads, std::cout);
            if (!out_dir.empty()) {
                std::filesystem::create_directories(out_dir);
                std::ofstream os(std::filesystem::path(out_dir) / "validation.json");
                os << report.dump(2) << "\n";
            }
            std::cout << "all reference checks passed\n";
        }
    } catch (const ConfigError& e) {
        std::cerr << "configuration error: " << e.what() << "\n";
        return 2;
    } catch (const NonConvergenceError& e) {
        std::cerr << "solver did not converge: " << e.what() << "\n";
        const std::size_t k = e.residuals_w.size();
        for (std::size_t i = (k > 5 ? k - 5 : 0); i < k; ++i)
            std::cerr << "  m=" << i + 1 << " res_w=" << e.residuals_w[i] << " res_q=" << e.residuals_q[i] << "\n";
        return 3;
    } catch (const Error& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
    return 0;
}
