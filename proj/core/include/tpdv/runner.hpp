#pragma once

#include "tpdv/solver.hpp"

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

namespace tpdv {

enum class ProblemKind { quadratic, darcy, flow };

std::string to_string(ProblemKind p);
ProblemKind problem_from_string(const std::string& s);
Mode mode_from_string(const std::string& s);
ParamMode param_mode_from_string(const std::string& s);

/// One experiment: a problem from the catalog plus solver/flow settings.
/// Round-trips losslessly through JSON.
struct RunConfig {
    ProblemKind problem = ProblemKind::quadratic;
    Mode algo = Mode::explicit_scheme;
    ParamMode param_mode = ParamMode::practical;

    int mesh_inv_h = 64;  // darcy meshes: h = 1/mesh_inv_h
    int dim = 16;         // quadratic/flow primal dimension
    int mdim = 4;         // quadratic/flow dual dimension
    double cond = 4.0;

    std::optional<double> alpha;  // unset: algorithm-dependent defaults
    std::optional<double> gamma;
    double tol = 1e-6;
    int max_iter = 100000;
    int mg_cycles = 1;
    std::uint64_t seed = 1;

    std::string output_path;  // unset: derived under $TPDV_OUTPUT_DIR or .

    double flow_tend = 10.0;
    double flow_dt = 1e-3;
    std::vector<double> flow_dump_times;

    void validate() const;
    double resolved_alpha() const;
    double resolved_gamma() const;
    std::string resolved_output_path() const;

    std::string to_json() const;
    static RunConfig from_json(const std::string& text);
};

struct RunResult {
    bool ok = false;
    Status status = Status::max_iter;
    int iterations = 0;
    double final_residual = 0.0;
    std::string summary;
    std::vector<std::string> artifacts;
    std::optional<ConvergenceRecord> record;
};

/// Executes the experiment, writes its CSV artifacts, and returns the
/// one-line summary; ok mirrors the process exit contract (convergence for
/// solver runs, a clean violation-free decay report for flow runs).
RunResult run(const RunConfig& config);

/// Aligned text table over the records, sorted by dofs ascending; the
/// empirical contraction column stays empty without Lyapunov data.
std::string report(const std::vector<ConvergenceRecord>& records);

}  // namespace tpdv
