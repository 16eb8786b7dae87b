#include "tpdv/runner.hpp"

#include "tpdv/darcy.hpp"
#include "tpdv/errors.hpp"
#include "tpdv/flow.hpp"
#include "tpdv/quadratic.hpp"

#include <json.hpp>

#include <algorithm>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <sstream>

namespace tpdv {

std::string to_string(ProblemKind p) {
    switch (p) {
        case ProblemKind::quadratic: return "quadratic";
        case ProblemKind::darcy: return "darcy";
        case ProblemKind::flow: return "flow";
    }
    return "?";
}

ProblemKind problem_from_string(const std::string& s) {
    if (s == "quadratic") return ProblemKind::quadratic;
    if (s == "darcy") return ProblemKind::darcy;
    if (s == "flow") return ProblemKind::flow;
    throw InvalidArgument("unknown problem: " + s);
}

Mode mode_from_string(const std::string& s) {
    if (s == "tpdv") return Mode::explicit_scheme;
    if (s == "tpdv-imex") return Mode::imex;
    if (s == "uzawa") return Mode::uzawa;
    throw InvalidArgument("unknown algo: " + s);
}

ParamMode param_mode_from_string(const std::string& s) {
    if (s == "practical") return ParamMode::practical;
    if (s == "theoretical") return ParamMode::theoretical;
    throw InvalidArgument("unknown param-mode: " + s);
}

void RunConfig::validate() const {
    if (alpha && !(*alpha > 0.0)) throw InvalidArgument("config: alpha must be positive");
    if (gamma && !(*gamma > 0.0)) throw InvalidArgument("config: gamma must be positive");
    if (!(tol > 0.0 && tol < 1.0)) throw InvalidArgument("config: tol must lie in (0,1)");
    if (max_iter < 0) throw InvalidArgument("config: max_iter must be nonnegative");
    if (mg_cycles < 1) throw InvalidArgument("config: mg_cycles must be at least 1");
    if (problem == ProblemKind::darcy && mesh_inv_h < 2)
        throw InvalidArgument("config: mesh 1/h must be at least 2");
    if (problem != ProblemKind::darcy) {
        if (dim < 2 || mdim < 1 || mdim >= dim)
            throw InvalidArgument("config: need dim >= 2 and 1 <= mdim < dim");
        if (cond < 1.0) throw InvalidArgument("config: cond must be >= 1");
    }
    if (problem == ProblemKind::flow && (!(flow_dt > 0.0) || flow_tend < 0.0))
        throw InvalidArgument("config: flow needs dt > 0 and tend >= 0");
}

double RunConfig::resolved_alpha() const {
    if (alpha) return *alpha;
    if (problem == ProblemKind::darcy) return algo == Mode::imex ? 1.5 : 0.7;
    return 0.5;
}

double RunConfig::resolved_gamma() const {
    if (gamma) return *gamma;
    if (problem == ProblemKind::darcy) return algo == Mode::imex ? 0.9 : 1.4;
    return 0.5;
}

std::string RunConfig::resolved_output_path() const {
    if (!output_path.empty()) return output_path;
    const char* dir = std::getenv("TPDV_OUTPUT_DIR");
    std::string base = dir ? std::string(dir) : std::string(".");
    std::ostringstream name;
    name << base << "/tpdv_" << to_string(problem) << "_" << to_string(algo);
    if (problem == ProblemKind::darcy)
        name << "_h" << mesh_inv_h;
    else
        name << "_n" << dim << "_m" << mdim;
    name << "_seed" << seed << ".csv";
    return name.str();
}

std::string RunConfig::to_json() const {
    nlohmann::json j;
    j["problem"] = to_string(problem);
    j["algo"] = to_string(algo);
    j["param_mode"] = param_mode == ParamMode::practical ? "practical" : "theoretical";
    j["mesh_inv_h"] = mesh_inv_h;
    j["dim"] = dim;
    j["mdim"] = mdim;
    j["cond"] = cond;
    if (alpha) j["alpha"] = *alpha;
    if (gamma) j["gamma"] = *gamma;
    j["tol"] = tol;
    j["max_iter"] = max_iter;
    j["mg_cycles"] = mg_cycles;
    j["seed"] = seed;
    j["output_path"] = output_path;
    j["flow_tend"] = flow_tend;
    j["flow_dt"] = flow_dt;
    j["flow_dump_times"] = flow_dump_times;
    return j.dump(2);
}

RunConfig RunConfig::from_json(const std::string& text) {
    nlohmann::json j = nlohmann::json::parse(text);
    RunConfig c;
    c.problem = problem_from_string(j.at("problem").get<std::string>());
    c.algo = mode_from_string(j.at("algo").get<std::string>());
    c.param_mode = param_mode_from_string(j.at("param_mode").get<std::string>());
    c.mesh_inv_h = j.at("mesh_inv_h").get<int>();
    c.dim = j.at("dim").get<int>();
    c.mdim = j.at("mdim").get<int>();
    c.cond = j.at("cond").get<double>();
    if (j.contains("alpha")) c.alpha = j.at("alpha").get<double>();
    if (j.contains("gamma")) c.gamma = j.at("gamma").get<double>();
    c.tol = j.at("tol").get<double>();
    c.max_iter = j.at("max_iter").get<int>();
    c.mg_cycles = j.at("mg_cycles").get<int>();
    c.seed = j.at("seed").get<std::uint64_t>();
    c.output_path = j.at("output_path").get<std::string>();
    c.flow_tend = j.at("flow_tend").get<double>();
    c.flow_dt = j.at("flow_dt").get<double>();
    c.flow_dump_times = j.at("flow_dump_times").get<std::vector<double>>();
    return c;
}

namespace {

std::string summary_line(const std::string& what, Status status, int iterations,
                         double final_residual, double initial_residual) {
    char buf[256];
    std::snprintf(buf, sizeof(buf), "%s status=%s iterations=%d final_residual=%.6g relative=%.6g",
                  what.c_str(), to_string(status).c_str(), iterations, final_residual,
                  initial_residual > 0.0 ? final_residual / initial_residual : 0.0);
    return buf;
}

RunResult run_solver_problem(const RunConfig& config) {
    TpdvParams params;
    params.alpha = config.resolved_alpha();
    params.gamma = config.resolved_gamma();
    params.mode = config.algo;
    params.param_mode = config.param_mode;

    ConvergenceRecord rec;
    if (config.problem == ProblemKind::darcy) {
        DarcyCoeffs coeffs;  // mu = rho = 1, beta = 30, K = I
        DarcyProblem prob =
            make_manufactured_problem(2 * config.mesh_inv_h, coeffs, config.mg_cycles);
        DarcySolveResult res = solve_darcy(prob, config.algo, params, config.tol, config.max_iter);
        rec = std::move(res.record);
        rec.dofs = prob.dofs();
        rec.label = "darcy_h" + std::to_string(config.mesh_inv_h);
    } else {
        QuadraticSaddleSpec spec;
        spec.n = config.dim;
        spec.m = config.mdim;
        spec.cond_a = config.cond;
        spec.seed = config.seed;
        spec.scale_mode = ScaleMode::unit_mu;
        QuadraticSaddle qs = make_quadratic_saddle(spec);
        rec = solve(qs.problem, params, config.tol, config.max_iter,
                    default_initial_state(qs.problem));
        rec.dofs = config.dim + config.mdim;
        rec.label = "quadratic_n" + std::to_string(config.dim);
    }

    RunResult result;
    result.status = rec.status;
    result.iterations = rec.iterations();
    result.final_residual = rec.final_residual();
    result.ok = rec.status == Status::converged;
    const std::string path = config.resolved_output_path();
    rec.write_csv(path);
    result.artifacts.push_back(path);
    result.summary = summary_line(rec.label, rec.status, rec.iterations(), rec.final_residual(),
                                  rec.initial_residual);
    result.record = std::move(rec);
    return result;
}

RunResult run_flow_problem(const RunConfig& config) {
    QuadraticSaddleSpec spec;
    spec.n = config.dim;
    spec.m = config.mdim;
    spec.cond_a = config.cond;
    spec.seed = config.seed;
    spec.scale_mode = ScaleMode::unit_mu;
    QuadraticSaddle qs = make_quadratic_saddle(spec);
    FlowProblem fp = to_flow_problem(qs);

    FlowState init;
    init.u = Vector::Zero(config.dim);
    init.p = Vector::Zero(config.mdim);
    init.iq = qs.schur;
    init.t = 0.0;

    Trajectory traj = integrate(fp, init, config.flow_tend, config.flow_dt);
    DecayReport report = check_decay(traj, qs.ustar, qs.pstar, fp);

    RunResult result;
    result.ok = traj.spd_ok && report.hypothesis_met && report.violations == 0;
    result.status = result.ok ? Status::converged : Status::diverged;
    result.iterations = static_cast<int>(traj.samples.size()) - 1;

    const std::string path = config.resolved_output_path();
    report.write_csv(path);
    result.artifacts.push_back(path);
    if (!config.flow_dump_times.empty()) {
        const std::string dump_path = path + ".states.txt";
        std::ofstream os(dump_path, std::ios::binary);
        if (!os) throw IoError("cannot open for writing: " + dump_path);
        dump_states(traj, config.flow_dump_times, os);
        result.artifacts.push_back(dump_path);
    }

    char buf[256];
    std::snprintf(buf, sizeof(buf),
                  "flow_n%d status=%s samples=%zu violations=%d hypothesis_met=%d spd_ok=%d",
                  config.dim, result.ok ? "ok" : "failed", traj.samples.size(), report.violations,
                  report.hypothesis_met ? 1 : 0, traj.spd_ok ? 1 : 0);
    result.summary = buf;
    if (!traj.spd_ok) result.summary += " (" + traj.diagnostic + ")";
    return result;
}

}  // namespace

RunResult run(const RunConfig& config) {
    config.validate();
    if (config.problem == ProblemKind::flow) return run_flow_problem(config);
    return run_solver_problem(config);
}

std::string report(const std::vector<ConvergenceRecord>& records) {
    if (records.empty()) throw InvalidArgument("report: no records");
    std::vector<const ConvergenceRecord*> sorted;
    sorted.reserve(records.size());
    for (const auto& r : records) sorted.push_back(&r);
    std::stable_sort(sorted.begin(), sorted.end(),
                     [](const ConvergenceRecord* a, const ConvergenceRecord* b) {
                         return a->dofs < b->dofs;
                     });

    std::ostringstream os;
    char buf[256];
    std::snprintf(buf, sizeof(buf), "%-20s %-10s %-11s %-9s %-10s %-12s %s\n", "label", "dofs",
                  "iterations", "vcycles", "seconds", "rate", "status");
    os << buf;
    for (const ConvergenceRecord* r : sorted) {
        char rate[32] = "";
        if (auto rho = r->empirical_rate()) std::snprintf(rate, sizeof(rate), "%.6f", *rho);
        std::snprintf(buf, sizeof(buf), "%-20s %-10d %-11d %-9ld %-10.3f %-12s %s\n",
                      r->label.c_str(), r->dofs, r->iterations(), r->total_vcycles(),
                      r->wall_seconds, rate, to_string(r->status).c_str());
        os << buf;
    }
    return os.str();
}

}  // namespace tpdv
