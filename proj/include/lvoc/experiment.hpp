#pragma once

#include <functional>
#include <memory>
#include <string>
#include <utility>
#include <vector>

#include "lvoc/adjoint_solver.hpp"
#include "lvoc/dynamics.hpp"
#include "lvoc/mesh.hpp"
#include "lvoc/optimizer.hpp"

namespace lvoc {

enum class InitialData { Smooth, Rough, Constant };

struct ExperimentPreset {
    /// A, B, D, E1, E2 or custom.
    std::string name = "custom";
    int k = 0;
    int ell = 1;
    std::vector<int> mesh_sizes{6, 10, 24, 48};
    /// tau = tau_factor * h^2
    double tau_factor = 0.125;
    InitialData initial = InitialData::Smooth;
    /// Values used by InitialData::Constant.
    double y10 = 1.0, y20 = 1.0;
    bool forcing = true;
    /// Targets equal to the initial data instead of the constants below.
    bool targets_from_initial = false;
    double target1 = 0.0, target2 = 20.0;
    double final_time = 0.1;
    /// Control kind, bounds and constants.
    ModelParams model;
    NcgConfig optimizer;

    /// Throws std::invalid_argument when a named preset's defining fields were changed.
    void validate() const;
};

/// Named preset; throws std::invalid_argument for an unknown name.
ExperimentPreset make_preset(const std::string& name);

/// Applies an INI file with sections [model], [discretization], [optimizer]
/// and [experiment] on top of `base`. Unknown keys are rejected.
ExperimentPreset load_config(const std::string& path, ExperimentPreset base);

struct Discretization {
    std::shared_ptr<const Triangulation> mesh;
    std::shared_ptr<const FeSpace> space;
    std::shared_ptr<const TimeGrid> grid;
    std::unique_ptr<Problem> problem;
};

ProblemData make_data(const ExperimentPreset& preset);
Discretization discretize(const ExperimentPreset& preset, int n);

struct ResultRow {
    int n = 0;
    double h = 0.0;
    double distance1 = 0.0, distance2 = 0.0;
    double J = 0.0;
    int iterations = 0;
    double wall_seconds = 0.0;
    std::string termination;
    /// Empty on success, otherwise the failure message.
    std::string error;
};

/// Optimizes on one mesh. Solver failures land in `error`.
ResultRow run_row(const ExperimentPreset& preset, int n, OptRun* run = nullptr);

/// One row per mesh size in increasing n. Writes `out_path` (deterministic
/// columns) and `out_path` + ".timing.csv" (wall times) when out_path is non-empty.
/// `on_row` sees each row as soon as it is done.
std::vector<ResultRow> run_convergence_study(const ExperimentPreset& preset, const std::string& out_path,
                                             const std::function<void(const ResultRow&)>& on_row = {});

std::string study_csv(const std::vector<ResultRow>& rows);
std::string timing_csv(const std::vector<ResultRow>& rows);

struct DynamicsOptions {
    Box box{0.0, 60.0, 0.0, 45.0};
    Eigen::Vector2d start{16.125, 24.0};
    double t_end = 100.0;
    double dt_out = 0.1;
    int nullcline_samples = 400;
};

/// Fixed points, classification, nullclines and one orbit per control pair;
/// an empty list analyzes g = (0, 0) only. Returns the written file paths.
std::vector<std::string> run_dynamics_report(const KineticsParams& params,
                                             std::vector<std::pair<double, double>> controls,
                                             const std::string& out_dir, const DynamicsOptions& options = {});

/// Node tables (x1, x2, value) per field and time, and optionally legacy VTK
/// files with all fields of one time. t = 0 exports the initial state and the
/// first-interval start values of the other fields. Returns the written paths.
std::vector<std::string> export_fields(const Problem& problem, const StatePair& state, const AdjointPair* adjoint,
                                       const ControlPair* controls, const std::vector<double>& times,
                                       const std::string& out_dir, bool vtk);

}  // namespace lvoc
