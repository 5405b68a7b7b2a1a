#pragma once

#include <json.hpp>
#include <memory>
#include <optional>
#include <ostream>
#include <string>
#include <vector>

#include "qvi/biot_savart.hpp"
#include "qvi/config.hpp"
#include "qvi/models.hpp"
#include "qvi/solver.hpp"

namespace qvi {

struct RunResult {
    std::shared_ptr<TriMesh> mesh;
    CRField W;
    CellField PhW;
    CellVecField Q;
    P1Field lift;
    CellVecField J; // case (iii) current density
    std::vector<StepResult> steps;
    std::vector<IterationRecord> trace;
    double q_time = 0.0; // Q approximates q(., T - tau_N/2)
    double assembly_seconds = 0.0;
    double solve_seconds = 0.0;
    std::optional<double> delta_w, delta_q, delta_j;
    nlohmann::json summary;
};

/// Execute one experiment: mesh, assemble, time-step, post-process, compute
/// reference errors for the built-in cases.
RunResult run_experiment(const RunConfig& cfg, int threads);

/// Write fields_*.csv, ref_*.csv, trace.jsonl, summary.json (and VTK when
/// enabled) under out_dir.
void write_artifacts(const RunResult& result, const RunConfig& cfg, const std::string& out_dir);

/// Re-run a base config across mesh resolutions; returns one summary row per h
/// and writes study.csv under out_dir.
nlohmann::json convergence_study(const RunConfig& base, const std::vector<double>& h_list, int threads,
                                 const std::string& out_dir, std::ostream& log);

/// Oracle and reference cross-checks: sandpile self-convergence, cylinder
/// Faraday residual, thin-film core leak plus the fine-mesh solver cross-check.
/// Throws ReferenceValidationError on failure.
nlohmann::json validate_references(double thinfilm_fine_h, int threads, std::ostream& log);

} // namespace qvi
