#include <algorithm>
#include <cstdio>
#include <exception>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "lvoc/checks.hpp"
#include "lvoc/experiment.hpp"

using namespace lvoc;

namespace {

enum Exit { Ok = 0, Usage = 1, Failure = 2, NotPassed = 3 };

struct Common {
    std::string preset = "A";
    std::string config;
    std::vector<int> n;
    std::string out;
    std::uint64_t seed = 1;
    bool full_adjoint = false;
    std::string line_search;
    bool no_restart = false;
};

void add_common(CLI::App* cmd, Common& c, bool with_n_list) {
    cmd->add_option("--preset", c.preset, "A, B, D, E1, E2 or custom")->capture_default_str();
    cmd->add_option("--config", c.config, "INI file applied on top of the preset")->check(CLI::ExistingFile);
    if (with_n_list) {
        cmd->add_option("--n", c.n, "mesh subdivisions (several allowed)")->delimiter(',');
    } else {
        cmd->add_option("--n", c.n, "mesh subdivisions")->expected(1);
    }
    cmd->add_option("--seed", c.seed, "seed of every randomized check")->capture_default_str();
    cmd->add_flag("--full-adjoint", c.full_adjoint, "use the complete transposed linearization in the adjoint");
    cmd->add_option("--line-search", c.line_search, "scaled or bracketing")->check(CLI::IsMember({"scaled", "bracketing"}));
    cmd->add_flag("--no-restart", c.no_restart, "keep conjugacy when the active set changes");
}

ExperimentPreset resolve(const Common& c) {
    ExperimentPreset p = make_preset(c.preset);
    if (!c.config.empty()) p = load_config(c.config, p);
    if (c.full_adjoint) p.optimizer.adjoint = AdjointMode::Full;
    if (c.line_search == "bracketing") p.optimizer.line_search = LineSearchKind::Bracketing;
    if (c.line_search == "scaled") p.optimizer.line_search = LineSearchKind::Scaled;
    if (c.no_restart) p.optimizer.restart_on_active_change = false;
    if (!c.n.empty()) p.mesh_sizes = c.n;
    p.validate();
    return p;
}

std::string describe(const std::exception& e) {
    std::string what = e.what();
    try {
        std::rethrow_if_nested(e);
    } catch (const std::exception& inner) {
        what += ": " + describe(inner);
    }
    return what;
}

int cmd_run(const Common& c) {
    const ExperimentPreset preset = resolve(c);
    const int n = preset.mesh_sizes.front();
    const Discretization disc = discretize(preset, n);
    std::printf("preset %s  n=%d  h=%.5f  intervals=%d  dofs=%d\n", preset.name.c_str(), n, disc.mesh->h,
                disc.grid->intervals(), disc.space->dof_count());
    std::printf("%4s %18s %12s %12s %8s %6s %s\n", "it", "J", "|grad_r|", "step", "beta", "trials", "restart");
    OptRun run = optimize(*disc.problem, preset.optimizer, std::nullopt, [](const IterationRecord& r) {
        std::printf("%4d %18.10e %12.4e %12.4e %8.4f %6d %s\n", r.iteration, r.J, r.grad_norm, r.step, r.beta, r.trials,
                    r.restarted ? "yes" : "no");
        std::fflush(stdout);
    });
    const Evaluation& f = run.final;
    std::printf("termination %s after %d iterations (%d state, %d adjoint solves)\n", to_string(run.termination).c_str(),
                run.iterations, run.state_solves, run.adjoint_solves);
    if (!run.message.empty()) std::printf("  %s\n", run.message.c_str());
    std::printf("J %.10e  |y1-y1d| %.10e  |y2-y2d| %.10e  |g1| %.6e  |g2| %.6e\n", f.J, f.parts.distance[0],
                f.parts.distance[1], f.parts.control_norm[0], f.parts.control_norm[1]);
    if (preset.model.g_lo && preset.model.g_hi) {
        std::printf("vi residual %.3e\n", vi_residual(*disc.problem, f.controls, *f.grad, c.seed));
    }
    if (!c.out.empty()) {
        std::ostringstream text;
        text << "iteration,J,grad_norm,step,beta,trials,restarted,control_min,control_max\n";
        char buf[256];
        std::snprintf(buf, sizeof buf, "0,%.10e,,,,,,,\n", run.J_history.front());
        text << buf;
        for (const IterationRecord& r : run.records) {
            std::snprintf(buf, sizeof buf, "%d,%.10e,%.10e,%.10e,%.10e,%d,%d,%.10e,%.10e\n", r.iteration, r.J,
                          r.grad_norm, r.step, r.beta, r.trials, r.restarted ? 1 : 0, r.control_min, r.control_max);
            text << buf;
        }
        std::filesystem::create_directories(c.out);
        std::ofstream(std::filesystem::path(c.out) / "iterations.csv") << text.str();
        std::printf("wrote %s\n", (std::filesystem::path(c.out) / "iterations.csv").c_str());
    }
    return run.termination == Termination::LineSearchFailure ? NotPassed : Ok;
}

int cmd_study(const Common& c) {
    const ExperimentPreset preset = resolve(c);
    std::printf("%4s %10s %16s %16s %16s %5s %8s  %s\n", "n", "h", "|y1-y1d|", "|y2-y2d|", "J", "iter", "time[s]", "termination");
    const std::vector<ResultRow> rows = run_convergence_study(preset, c.out, [](const ResultRow& r) {
        std::printf("%4d %10.5f %16.8e %16.8e %16.8e %5d %8.1f  %s %s\n", r.n, r.h, r.distance1, r.distance2, r.J,
                    r.iterations, r.wall_seconds, r.termination.c_str(), r.error.c_str());
        std::fflush(stdout);
    });
    std::printf("wrote %s and %s.timing.csv\n", c.out.c_str(), c.out.c_str());
    const bool failed = std::any_of(rows.begin(), rows.end(), [](const ResultRow& r) { return !r.error.empty(); });
    return failed ? Failure : Ok;
}

int cmd_dynamics(const std::string& config, const std::vector<std::string>& controls, const std::string& out) {
    KineticsParams k;
    if (!config.empty()) {
        const ExperimentPreset p = load_config(config, make_preset("custom"));
        k.a = p.model.a;
        k.b = p.model.b;
        k.c = p.model.c;
        k.d = p.model.d;
    }
    std::vector<std::pair<double, double>> pairs;
    for (const std::string& s : controls) {
        const auto comma = s.find(',');
        if (comma == std::string::npos) throw std::invalid_argument("--control expects g1,g2");
        pairs.emplace_back(std::stod(s.substr(0, comma)), std::stod(s.substr(comma + 1)));
    }
    if (pairs.empty()) pairs = {{0, 0}, {1, 1}, {2, 2}, {4, 4}};
    for (const auto& [g1, g2] : pairs) {
        KineticsParams p = k;
        p.g1 = g1;
        p.g2 = g2;
        for (const FixedPointReport& r : fixed_points(p)) {
            std::printf("g=(%g,%g)  fixed point (%.4f, %.4f)  T=%.4e  det=%.4e  D=%.4e  %s\n", g1, g2, r.location[0],
                        r.location[1], r.trace, r.determinant, r.discriminant, to_string(r.cls).c_str());
        }
    }
    for (const std::string& f : run_dynamics_report(k, pairs, out)) std::printf("wrote %s\n", f.c_str());
    return Ok;
}

int cmd_export(const Common& c, std::vector<double> times, bool vtk, bool optimized) {
    const ExperimentPreset preset = resolve(c);
    const Discretization disc = discretize(preset, preset.mesh_sizes.front());
    const Problem& problem = *disc.problem;
    Evaluation e;
    if (optimized) {
        e = optimize(problem, preset.optimizer).final;
    } else {
        ReducedObjective objective(problem, preset.optimizer.adjoint, preset.optimizer.newton);
        e = objective.evaluate(project(problem, problem.constant_control(preset.optimizer.g0)), true);
    }
    if (times.empty()) times = {0.0, 0.5 * preset.final_time, preset.final_time};
    for (const std::string& f : export_fields(problem, e.state, &*e.adjoint, &e.controls, times, c.out, vtk)) {
        std::printf("wrote %s\n", f.c_str());
    }
    return Ok;
}

int cmd_check(const Common& c, bool second_order, int directions) {
    const ExperimentPreset preset = resolve(c);
    const int n = c.n.empty() ? 4 : preset.mesh_sizes.front();
    const Discretization disc = discretize(preset, n);
    CheckOptions opt;
    opt.directions = directions;
    opt.seed = c.seed;
    if (second_order) {
        opt.step = 1e-3;
        opt.threshold = 1e-3;
    }
    bool full_pass = false;
    for (AdjointMode mode : {AdjointMode::Diagonal, AdjointMode::Full}) {
        const CheckResult r = second_order ? second_order_check(*disc.problem, mode, opt) : gradient_check(*disc.problem, mode, opt);
        const bool full = mode == AdjointMode::Full;
        std::printf("%s %s check (preset %s, n=%d, %d directions): max rel error %.3e, threshold %.0e -> %s%s\n",
                    full ? "full-adjoint" : "diagonal-adjoint", second_order ? "second-order" : "gradient", c.preset.c_str(),
                    n, directions, r.max_error, r.threshold, r.pass ? "PASS" : "FAIL", full ? "" : " (reported)");
        if (full) full_pass = r.pass;
    }
    return full_pass ? Ok : NotPassed;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Optimal control of a Lotka-Volterra reaction-diffusion system"};
    app.require_subcommand(1);

    Common run_opts, study_opts, export_opts, grad_opts, second_opts;
    CLI::App* run = app.add_subcommand("run", "optimize on one mesh and print per-iteration diagnostics");
    add_common(run, run_opts, false);
    run->add_option("--out", run_opts.out, "directory for iterations.csv");

    CLI::App* study = app.add_subcommand("study", "convergence study over the preset's mesh sizes");
    add_common(study, study_opts, true);
    study->add_option("--out", study_opts.out, "CSV path")->required();

    std::string dyn_config, dyn_out;
    std::vector<std::string> dyn_controls;
    CLI::App* dyn = app.add_subcommand("dynamics", "fixed points, nullclines and orbits of the local kinetics");
    dyn->add_option("--config", dyn_config, "INI file; only [model] a, b, c, d are used")->check(CLI::ExistingFile);
    dyn->add_option("--control", dyn_controls, "constant control pair g1,g2 (repeatable)");
    dyn->add_option("--out", dyn_out, "output directory")->required();

    std::vector<double> times;
    bool vtk = false, optimized = false;
    CLI::App* exp = app.add_subcommand("export", "write field snapshots as node tables and legacy VTK");
    add_common(exp, export_opts, false);
    exp->add_option("--out", export_opts.out, "output directory")->required();
    exp->add_option("--times", times, "snapshot times (default 0, T/2, T)")->delimiter(',');
    exp->add_flag("--vtk", vtk, "also write legacy VTK files");
    exp->add_flag("--optimized", optimized, "export the optimized fields instead of those of the initial control");

    int directions = 10;
    CLI::App* grad = app.add_subcommand("gradient-check", "adjoint gradient against central differences");
    add_common(grad, grad_opts, false);
    grad->add_option("--directions", directions)->capture_default_str();
    CLI::App* second = app.add_subcommand("second-order-check", "second directional derivative against second differences");
    add_common(second, second_opts, false);
    second->add_option("--directions", directions)->capture_default_str();

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? Ok : Usage;
    }
    try {
        if (*run) return cmd_run(run_opts);
        if (*study) return cmd_study(study_opts);
        if (*dyn) return cmd_dynamics(dyn_config, dyn_controls, dyn_out);
        if (*exp) return cmd_export(export_opts, times, vtk, optimized);
        if (*grad) return cmd_check(grad_opts, false, directions);
        if (*second) return cmd_check(second_opts, true, directions);
    } catch (const std::invalid_argument& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return Usage;
    } catch (const std::exception& e) {
        std::fprintf(stderr, "error: %s\n", describe(e).c_str());
        return Failure;
    }
    return Usage;
}
