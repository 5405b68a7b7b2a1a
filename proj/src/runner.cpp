#include "qvi/runner.hpp"

#include <chrono>
#include <cstdlib>
#include <filesystem>
#include <fstream>

#include "qvi/analytic.hpp"
#include "qvi/csv.hpp"
#include "qvi/errors.hpp"
#include "qvi/vtk.hpp"

namespace qvi {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

double now_minus(const std::chrono::steady_clock::time_point& t0) {
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

std::optional<std::string> cache_path_for(const TriMesh& mesh, int quad_order) {
    const char* dir = std::getenv("QVI_CACHE_DIR");
    if (!dir || !*dir) return std::nullopt;
    char name[96];
    std::snprintf(name, sizeof(name), "pairwise_%016llx_q%d.bin",
                  static_cast<unsigned long long>(mesh.content_hash()), quad_order);
    return (fs::path(dir) / name).string();
}

json energy_json(const EnergyLedger& e) {
    return json{{"norm2_W", e.norm2_W},         {"norm2_dW", e.norm2_dW}, {"norm2_W_prev", e.norm2_Wprev},
                {"dissipation", e.dissipation}, {"work", e.work},         {"defect_rel", e.defect_rel}};
}

} // namespace

RunResult run_experiment(const RunConfig& cfg, int threads) {
    const auto t0 = std::chrono::steady_clock::now();
    RunResult out;
    out.mesh = std::make_shared<TriMesh>(cfg.mesh.build());
    const TriMesh& mesh = *out.mesh;
    const ProblemCase pc = make_builtin_case(cfg.case_name);
    const TimePartition tp = TimePartition::from_steps(cfg.time_steps);

    // A^h: diagonal CR mass, or the dense Biot-Savart form for the thin film
    AhOperator Ah;
    NonlocalMatrix nonlocal;
    if (pc.kind == CaseKind::ThinFilmBean) {
        const auto ta = std::chrono::steady_clock::now();
        PairwisePotential P;
        const auto cache = cache_path_for(mesh, cfg.nonlocal_quad_order);
        bool loaded = false;
        if (cfg.nonlocal_cache && cache) loaded = load_pairwise_cache(*cache, mesh, cfg.nonlocal_quad_order, P);
        if (!loaded) {
            P = assemble_pairwise(mesh, cfg.nonlocal_quad_order, threads);
            if (cfg.nonlocal_cache && cache) {
                fs::create_directories(fs::path(*cache).parent_path());
                store_pairwise_cache(*cache, P);
            }
        }
        nonlocal = assemble_nonlocal_form(mesh, P);
        Ah = AhOperator::dense(&nonlocal.C);
        out.assembly_seconds = now_minus(ta);
    } else {
        Ah = AhOperator::diagonal(cr_lumped_mass(mesh));
    }

    std::optional<SandpileAux> aux;
    if (pc.kind == CaseKind::Sandpile) aux = sandpile_M_init(mesh, pc);

    CRField W = initial_W(pc, mesh);
    CellVecField Q(mesh);
    const auto ts = std::chrono::steady_clock::now();
    for (int n = 1; n <= tp.n_steps(); ++n) {
        StepProblem prob;
        prob.mesh = &mesh;
        prob.Ah = &Ah;
        prob.tau = tp.tau(n);
        prob.Fload = load_vector(forcing(pc, mesh, tp, n));
        const double t_n = tp.t[n];
        const SandpileAux* auxp = aux ? &*aux : nullptr;
        prob.M_of = [&pc, t_n, auxp](const CellField& PhW) { return discrete_M(pc, t_n, PhW, auxp); };
        StepResult res = step(prob, W, Q, cfg.solver, &out.trace, n);
        W = res.W;
        Q = res.Q;
        out.steps.push_back(std::move(res));
    }
    out.solve_seconds = now_minus(ts);

    out.W = W;
    out.Q = Q;
    out.PhW = project_P0(W);
    out.lift = conforming_lift(W);
    out.J = cfg.j_from_lift ? curl_of_lift(out.lift) : curl_broken(W);
    const double T = tp.T();
    out.q_time = T - 0.5 * tp.tau(tp.n_steps());

    // reference errors for the built-in experiments
    if (pc.kind == CaseKind::CylinderKim) {
        out.delta_w = relative_l1_error(out.PhW, [&](Vec2 x) { return cylinder_wstar(x, T, pc.B0, pc.be_rate); });
        out.delta_q = relative_l1_error(
            out.Q, [&](Vec2 x) { return cylinder_qstar(x, out.q_time, pc.B0, pc.be_rate, mesh.h_max); });
    } else if (pc.kind == CaseKind::Sandpile) {
        SandpileRadialOracle::Config ocfg;
        ocfg.k0 = pc.k0;
        ocfg.source_radius = pc.source_radius;
        ocfg.source_total = pc.source_total;
        const SandpileRadialOracle oracle(ocfg, T, out.q_time);
        out.delta_w = relative_l1_error(out.PhW, [&](Vec2 x) { return oracle.w_at(x.norm()); });
        out.delta_q = relative_l1_error(out.Q, [&](Vec2 x) {
            const double rho = x.norm();
            if (rho == 0.0) return Vec2{0.0, 0.0};
            return x * (oracle.q_at(rho) / rho);
        });
    } else {
        out.delta_j = relative_l1_error(out.J, [&](Vec2 x) { return thinfilm_jstar(x, T); });
        out.delta_q = relative_l1_error(out.Q, [&](Vec2 x) { return thinfilm_qstar(x, out.q_time); });
    }

    // summary
    json steps = json::array();
    for (std::size_t i = 0; i < out.steps.size(); ++i) {
        const StepResult& s = out.steps[i];
        steps.push_back({{"step", i + 1},
                         {"iterations", s.iterations},
                         {"res_w", s.res_w_history.back()},
                         {"res_q", s.res_q_history.back()},
                         {"seconds", s.seconds},
                         {"preconditioner_builds", s.preconditioner_builds},
                         {"energy", energy_json(s.energy)}});
    }
    json errors;
    if (out.delta_w) errors["delta_w"] = *out.delta_w;
    if (out.delta_q) errors["delta_q"] = *out.delta_q;
    if (out.delta_j) errors["delta_j"] = *out.delta_j;
    out.summary = json{{"schema_version", 1},
                       {"case", cfg.case_name},
                       {"mesh",
                        {{"vertices", mesh.n_vertices()},
                         {"triangles", mesh.n_triangles()},
                         {"interior_edges", mesh.n_interior_edges},
                         {"h_max", mesh.h_max},
                         {"nominal_h", cfg.mesh.nominal_h()}}},
                       {"params",
                        {{"r", cfg.solver.r},
                         {"delta", cfg.solver.delta},
                         {"alpha", cfg.solver.alpha},
                         {"tol_w", cfg.solver.tol_w},
                         {"tol_q", cfg.solver.tol_q},
                         {"time_steps", cfg.time_steps}}},
                       {"q_time", out.q_time},
                       {"steps", steps},
                       {"errors", errors},
                       {"timings",
                        {{"assembly_nonlocal_s", out.assembly_seconds},
                         {"solve_s", out.solve_seconds},
                         {"total_s", now_minus(t0)}}}};
    return out;
}

void write_artifacts(const RunResult& result, const RunConfig& cfg, const std::string& out_dir) {
    fs::create_directories(out_dir);
    const fs::path dir(out_dir);
    write_csv(result.W, (dir / "fields_w.csv").string());
    write_csv(result.PhW, (dir / "fields_w_cell.csv").string());
    write_csv(result.Q, (dir / "fields_q.csv").string());

    const TriMesh& mesh = *result.mesh;
    const ProblemCase pc = make_builtin_case(cfg.case_name);
    const double T = TimePartition::from_steps(cfg.time_steps).T();
    if (pc.kind == CaseKind::ThinFilmBean) {
        write_csv(result.J, (dir / "fields_j.csv").string());
        CellVecField jref(mesh);
        CellVecField qref(mesh);
        for (int t = 0; t < mesh.n_triangles(); ++t) {
            jref.set(t, thinfilm_jstar(mesh.centroid[t], T));
            qref.set(t, thinfilm_qstar(mesh.centroid[t], result.q_time));
        }
        write_csv(jref, (dir / "ref_j.csv").string());
        write_csv(qref, (dir / "ref_q.csv").string());
    } else if (pc.kind == CaseKind::CylinderKim) {
        CellField wref(mesh);
        CellVecField qref(mesh);
        for (int t = 0; t < mesh.n_triangles(); ++t) {
            wref.values[t] = cylinder_wstar(mesh.centroid[t], T, pc.B0, pc.be_rate);
            qref.set(t, cylinder_qstar(mesh.centroid[t], result.q_time, pc.B0, pc.be_rate, mesh.h_max));
        }
        write_csv(wref, (dir / "ref_w.csv").string());
        write_csv(qref, (dir / "ref_q.csv").string());
    } else {
        SandpileRadialOracle::Config ocfg;
        ocfg.k0 = pc.k0;
        ocfg.source_radius = pc.source_radius;
        ocfg.source_total = pc.source_total;
        const SandpileRadialOracle oracle(ocfg, T, result.q_time);
        CellField wref(mesh);
        CellVecField qref(mesh);
        for (int t = 0; t < mesh.n_triangles(); ++t) {
            const Vec2 x = mesh.centroid[t];
            wref.values[t] = oracle.w_at(x.norm());
            qref.set(t, x.norm() > 0 ? x * (oracle.q_at(x.norm()) / x.norm()) : Vec2{});
        }
        write_csv(wref, (dir / "ref_w.csv").string());
        write_csv(qref, (dir / "ref_q.csv").string());
    }

    if (cfg.trace) {
        std::ofstream os(dir / "trace.jsonl");
        for (const auto& rec : result.trace) {
            os << json{{"step", rec.step}, {"m", rec.m}, {"res_w", rec.res_w}, {"res_q", rec.res_q},
                       {"pcg_iters", rec.pcg_iters}}
                      .dump()
               << "\n";
        }
    }
    if (cfg.emit_vtk) {
        std::vector<std::pair<std::string, const CellField*>> scalars{{"w", &result.PhW}};
        std::vector<std::pair<std::string, const CellVecField*>> vectors{{"q", &result.Q}};
        if (pc.kind == CaseKind::ThinFilmBean) vectors.push_back({"j", &result.J});
        write_vtk((dir / "fields.vtk").string(), mesh, scalars, vectors);
    }
    std::ofstream os(dir / "summary.json");
    os << result.summary.dump(2) << "\n";
    if (!os) throw IoError("cannot write summary.json");
}

nlohmann::json convergence_study(const RunConfig& base, const std::vector<double>& h_list, int threads,
                                 const std::string& out_dir, std::ostream& log) {
    json rows = json::array();
    fs::create_directories(out_dir);
    std::ofstream csv(fs::path(out_dir) / "study.csv");
    csv << "h,delta_w,delta_q,delta_j,iterations,solve_s,assembly_s\n";
    for (double h : h_list) {
        RunConfig cfg = base;
        if (cfg.mesh.kind == MeshSpec::Kind::Square) {
            const double side = cfg.mesh.hi.x - cfg.mesh.lo.x;
            cfg.mesh.n = std::max(1, static_cast<int>(std::llround(side / h)));
        } else if (cfg.mesh.kind == MeshSpec::Kind::Disc) {
            cfg.mesh.target_h = h;
        } else {
            throw ConfigError("convergence_study: file meshes have no resolution parameter");
        }
        RunResult res = run_experiment(cfg, threads);
        int iters = 0;
        for (const auto& s : res.steps) iters += s.iterations;
        json row{{"h", h},
                 {"iterations", iters},
                 {"solve_s", res.solve_seconds},
                 {"assembly_s", res.assembly_seconds}};
        auto fmt = [](std::optional<double> v) { return v ? json(*v) : json(); };
        row["delta_w"] = fmt(res.delta_w);
        row["delta_q"] = fmt(res.delta_q);
        row["delta_j"] = fmt(res.delta_j);
        rows.push_back(row);
        csv << h << "," << (res.delta_w ? format_g17(*res.delta_w) : "") << ","
            << (res.delta_q ? format_g17(*res.delta_q) : "") << ","
            << (res.delta_j ? format_g17(*res.delta_j) : "") << "," << iters << "," << res.solve_seconds << ","
            << res.assembly_seconds << "\n";
        log << "h=" << h << "  delta_w=" << (res.delta_w ? std::to_string(100 * *res.delta_w) + "%" : "-")
            << "  delta_q=" << (res.delta_q ? std::to_string(100 * *res.delta_q) + "%" : "-")
            << "  delta_j=" << (res.delta_j ? std::to_string(100 * *res.delta_j) + "%" : "-") << "  iters=" << iters
            << "\n";
    }
    std::ofstream js(fs::path(out_dir) / "study.json");
    js << rows.dump(2) << "\n";
    return rows;
}

nlohmann::json validate_references(double thinfilm_fine_h, int threads, std::ostream& log) {
    json report;

    // sandpile oracle self-convergence
    {
        SandpileRadialOracle::Config cfg;
        const SandpileOracleCheck chk = sandpile_oracle_self_convergence(cfg, 0.2, 0.195);
        report["sandpile_self_convergence"] = {{"dw_rel", chk.dw_rel}, {"dq_rel", chk.dq_rel}};
        log << "sandpile oracle self-convergence: dw=" << chk.dw_rel << " dq=" << chk.dq_rel << "\n";
        if (chk.dw_rel > 2e-4 || chk.dq_rel > 2e-4)
            throw ReferenceValidationError("sandpile oracle self-convergence above 0.02%");
    }

    // cylinder e-field from Faraday's law by finite differences
    {
        const double res1 = cylinder_faraday_residual(0.095, 0.05, 1.0);
        const double res2 = cylinder_faraday_residual(0.05, 0.05, 1.0);
        report["cylinder_faraday_residual"] = {{"t_0095", res1}, {"t_005", res2}};
        log << "cylinder Faraday residual: " << res1 << ", " << res2 << "\n";
        if (res1 > 1e-6 || res2 > 1e-6)
            throw ReferenceValidationError("cylinder e-field violates Faraday's law beyond 1e-6");
    }

    // thin film: shielded-core leak of the closed-form e, then the fine-mesh
    // solver cross-check of both reference fields
    {
        const double leak = thinfilm_core_leak(0.625);
        report["thinfilm_core_leak"] = leak;
        log << "thin-film core e leak: " << leak << "\n";
        if (leak > 1e-4) throw ReferenceValidationError("thin-film reference leaks electric field into the core");

        RunConfig cfg;
        cfg.case_name = "thinfilm_disc";
        cfg.mesh.kind = MeshSpec::Kind::Disc;
        cfg.mesh.radius = 1.0;
        cfg.mesh.target_h = thinfilm_fine_h;
        cfg.time_steps = {0.6, 0.05};
        cfg.solver.alpha = 1.8;
        cfg.solver.strategy = LinearStrategy::DensePCG;
        RunResult res = run_experiment(cfg, threads);
        report["thinfilm_fine_mesh"] = {{"h", thinfilm_fine_h}, {"delta_j", *res.delta_j}, {"delta_q", *res.delta_q}};
        log << "thin-film fine-mesh cross-check (h=" << thinfilm_fine_h << "): delta_j=" << *res.delta_j
            << " delta_q=" << *res.delta_q << "\n";
        if (*res.delta_j > 5e-3 || *res.delta_q > 5e-3)
            throw ReferenceValidationError("thin-film reference disagrees with the fine-mesh run beyond 0.5%");
    }
    report["status"] = "ok";
    return report;
}

} // namespace qvi
