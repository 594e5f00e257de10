#include "lvoc/experiment.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <stdexcept>

#include <boost/property_tree/ini_parser.hpp>
#include <boost/property_tree/ptree.hpp>

namespace lvoc {

namespace {

std::string fmt(double v) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.10e", v);
    return buf;
}

std::string csv_safe(std::string s) {
    for (char& ch : s) {
        if (ch == ',' || ch == '\n' || ch == '\r') ch = ';';
    }
    return s;
}

void require(bool ok, const std::string& preset, const std::string& what) {
    if (!ok) throw std::invalid_argument("preset " + preset + " requires " + what);
}

}  // namespace

void ExperimentPreset::validate() const {
    model.validate();
    optimizer.validate();
    if (k < 0 || k > 1) throw std::invalid_argument("preset: time degree k must be 0 or 1");
    if (ell < 1 || ell > 2) throw std::invalid_argument("preset: space degree must be 1 or 2");
    if (!(tau_factor > 0.0)) throw std::invalid_argument("preset: tau_factor must be positive");
    if (!(final_time > 0.0)) throw std::invalid_argument("preset: final_time must be positive");
    for (int n : mesh_sizes) {
        if (n < 1) throw std::invalid_argument("preset: mesh sizes must be positive");
    }

    const bool distributed = model.kind == ControlKind::Distributed;
    if (name == "A") {
        require(k == 0 && ell == 1, name, "k = 0 and l = 1");
        require(model.g_lo == 0.0 && model.g_hi == 0.1, name, "bounds [0, 0.1]");
        require(distributed && initial == InitialData::Smooth && tau_factor == 0.125, name,
                "distributed control, smooth data and tau = h^2/8");
    } else if (name == "B") {
        require(k == 1 && ell == 2 && !model.bounded(), name, "k = 1, l = 2 and no bounds");
        require(distributed && initial == InitialData::Smooth, name, "distributed control and smooth data");
    } else if (name == "D") {
        require(k == 0 && ell == 1, name, "k = 0 and l = 1");
        require(!distributed && initial == InitialData::Rough && tau_factor == 0.5, name,
                "Robin control, rough data and tau = h^2/2");
    } else if (name == "E1" || name == "E2") {
        require(k == 1 && ell == (name == "E1" ? 1 : 2), name, name == "E1" ? "k = 1 and l = 1" : "k = 1 and l = 2");
        require(!distributed && initial == InitialData::Smooth, name, "Robin control and smooth data");
    } else if (name != "custom") {
        throw std::invalid_argument("unknown preset " + name);
    }
}

ExperimentPreset make_preset(const std::string& name) {
    ExperimentPreset p;
    p.name = name;
    if (name == "A") {
        p.model.g_lo = 0.0;
        p.model.g_hi = 0.1;
    } else if (name == "B") {
        p.k = 1;
        p.ell = 2;
    } else if (name == "D") {
        p.model.kind = ControlKind::Robin;
        p.initial = InitialData::Rough;
        p.tau_factor = 0.5;
    } else if (name == "E1" || name == "E2") {
        p.model.kind = ControlKind::Robin;
        p.k = 1;
        p.ell = name == "E1" ? 1 : 2;
        p.tau_factor = 0.5;
    } else if (name != "custom") {
        throw std::invalid_argument("unknown preset " + name + " (expected A, B, D, E1, E2 or custom)");
    }
    p.validate();
    return p;
}

namespace {

using boost::property_tree::ptree;

double to_double(const std::string& key, const std::string& v) {
    std::size_t used = 0;
    double out = 0.0;
    try {
        out = std::stod(v, &used);
    } catch (const std::exception&) {
        used = 0;
    }
    if (used == 0 || used != v.size()) throw std::invalid_argument("config: " + key + " expects a number, got '" + v + "'");
    return out;
}

int to_int(const std::string& key, const std::string& v) {
    const double d = to_double(key, v);
    if (d != std::floor(d)) throw std::invalid_argument("config: " + key + " expects an integer");
    return static_cast<int>(d);
}

bool to_bool(const std::string& key, const std::string& v) {
    if (v == "true" || v == "1" || v == "yes") return true;
    if (v == "false" || v == "0" || v == "no") return false;
    throw std::invalid_argument("config: " + key + " expects true or false");
}

std::optional<double> to_bound(const std::string& key, const std::string& v) {
    if (v.empty() || v == "none") return std::nullopt;
    return to_double(key, v);
}

std::vector<int> to_int_list(const std::string& key, const std::string& v) {
    std::vector<int> out;
    std::stringstream ss(v);
    std::string item;
    while (std::getline(ss, item, ',')) {
        const auto b = item.find_first_not_of(' '), e = item.find_last_not_of(' ');
        if (b == std::string::npos) continue;
        out.push_back(to_int(key, item.substr(b, e - b + 1)));
    }
    if (out.empty()) throw std::invalid_argument("config: " + key + " expects a comma separated list");
    return out;
}

}  // namespace

ExperimentPreset load_config(const std::string& path, ExperimentPreset base) {
    ptree tree;
    try {
        boost::property_tree::ini_parser::read_ini(path, tree);
    } catch (const boost::property_tree::ini_parser_error& e) {
        throw std::invalid_argument("config: " + std::string(e.what()));
    }
    ExperimentPreset& p = base;
    ModelParams& m = p.model;
    NcgConfig& o = p.optimizer;

    for (const auto& [section, entries] : tree) {
        if (!entries.data().empty()) throw std::invalid_argument("config: key '" + section + "' outside a section");
        for (const auto& [key, node] : entries) {
            const std::string full = section + "." + key;
            const std::string v = node.get_value<std::string>();
            bool known = true;
            if (section == "model") {
                if (key == "a") m.a = to_double(full, v);
                else if (key == "b") m.b = to_double(full, v);
                else if (key == "c") m.c = to_double(full, v);
                else if (key == "d") m.d = to_double(full, v);
                else if (key == "eps1") m.eps1 = to_double(full, v);
                else if (key == "eps2") m.eps2 = to_double(full, v);
                else if (key == "lambda1") m.lambda1 = to_double(full, v);
                else if (key == "lambda2") m.lambda2 = to_double(full, v);
                else if (key == "gamma1") m.gamma1 = to_double(full, v);
                else if (key == "gamma2") m.gamma2 = to_double(full, v);
                else if (key == "g_lo") m.g_lo = to_bound(full, v);
                else if (key == "g_hi") m.g_hi = to_bound(full, v);
                else if (key == "control") {
                    if (v == "distributed") m.kind = ControlKind::Distributed;
                    else if (v == "robin") m.kind = ControlKind::Robin;
                    else throw std::invalid_argument("config: model.control expects distributed or robin");
                } else known = false;
            } else if (section == "discretization") {
                if (key == "k") p.k = to_int(full, v);
                else if (key == "ell") p.ell = to_int(full, v);
                else if (key == "tau_factor") p.tau_factor = to_double(full, v);
                else if (key == "mesh_sizes") p.mesh_sizes = to_int_list(full, v);
                else known = false;
            } else if (section == "optimizer") {
                if (key == "sigma") o.sigma = to_double(full, v);
                else if (key == "rho") o.rho = to_double(full, v);
                else if (key == "tol") o.tol = to_double(full, v);
                else if (key == "eps0") o.eps0 = to_double(full, v);
                else if (key == "step_shrink") o.step_shrink = to_double(full, v);
                else if (key == "step_grow") o.step_grow = to_double(full, v);
                else if (key == "g0") o.g0 = to_double(full, v);
                else if (key == "max_outer") o.max_outer = to_int(full, v);
                else if (key == "max_line") o.max_line = to_int(full, v);
                else if (key == "restart_on_active_change") o.restart_on_active_change = to_bool(full, v);
                else if (key == "newton_tol") o.newton.tol = to_double(full, v);
                else if (key == "newton_max_iterations") o.newton.max_iterations = to_int(full, v);
                else if (key == "line_search") {
                    if (v == "scaled") o.line_search = LineSearchKind::Scaled;
                    else if (v == "bracketing") o.line_search = LineSearchKind::Bracketing;
                    else throw std::invalid_argument("config: optimizer.line_search expects scaled or bracketing");
                } else if (key == "adjoint") {
                    if (v == "diagonal") o.adjoint = AdjointMode::Diagonal;
                    else if (v == "full") o.adjoint = AdjointMode::Full;
                    else throw std::invalid_argument("config: optimizer.adjoint expects diagonal or full");
                } else known = false;
            } else if (section == "experiment") {
                if (key == "preset") {
                    if (v != p.name) throw std::invalid_argument("config: experiment.preset '" + v + "' differs from the selected preset '" + p.name + "'");
                } else if (key == "initial") {
                    if (v == "smooth") p.initial = InitialData::Smooth;
                    else if (v == "rough") p.initial = InitialData::Rough;
                    else if (v == "constant") p.initial = InitialData::Constant;
                    else throw std::invalid_argument("config: experiment.initial expects smooth, rough or constant");
                } else if (key == "y10") p.y10 = to_double(full, v);
                else if (key == "y20") p.y20 = to_double(full, v);
                else if (key == "forcing") p.forcing = to_bool(full, v);
                else if (key == "targets") {
                    if (v == "initial") p.targets_from_initial = true;
                    else if (v == "constant") p.targets_from_initial = false;
                    else throw std::invalid_argument("config: experiment.targets expects constant or initial");
                } else if (key == "target1") p.target1 = to_double(full, v);
                else if (key == "target2") p.target2 = to_double(full, v);
                else if (key == "final_time") p.final_time = to_double(full, v);
                else known = false;
            } else {
                throw std::invalid_argument("config: unknown section [" + section + "]");
            }
            if (!known) throw std::invalid_argument("config: unknown key " + full);
        }
    }
    p.validate();
    return p;
}

ProblemData make_data(const ExperimentPreset& preset) {
    ProblemData data = standard_data(preset.model, preset.initial == InitialData::Rough ? InitialKind::Rough
                                                                                        : InitialKind::Smooth);
    if (!preset.forcing) {
        data.f1 = nullptr;
        data.f2 = nullptr;
    }
    if (preset.initial == InitialData::Constant) {
        data.y10 = [v = preset.y10](double, double) { return v; };
        data.y20 = [v = preset.y20](double, double) { return v; };
    }
    if (preset.targets_from_initial) {
        data.y1d = [f = data.y10](double, double x1, double x2) { return f(x1, x2); };
        data.y2d = [f = data.y20](double, double x1, double x2) { return f(x1, x2); };
    } else {
        data.y1d = [v = preset.target1](double, double, double) { return v; };
        data.y2d = [v = preset.target2](double, double, double) { return v; };
    }
    data.final_time = preset.final_time;
    return data;
}

Discretization discretize(const ExperimentPreset& preset, int n) {
    preset.validate();
    Discretization out;
    out.mesh = std::make_shared<const Triangulation>(build_structured(n));
    const bool robin = preset.model.kind == ControlKind::Robin;
    out.space = std::make_shared<const FeSpace>(out.mesh, preset.ell, robin ? BcKind::Free : BcKind::DirichletZero);
    const double h = out.mesh->h;
    out.grid = std::make_shared<const TimeGrid>(TimeGrid::with_max_step(preset.final_time, preset.tau_factor * h * h));
    out.problem = std::make_unique<Problem>(preset.model, make_data(preset), out.space, out.grid, preset.k);
    return out;
}

ResultRow run_row(const ExperimentPreset& preset, int n, OptRun* run) {
    ResultRow row;
    row.n = n;
    const auto start = std::chrono::steady_clock::now();
    try {
        const Discretization disc = discretize(preset, n);
        row.h = disc.mesh->h;
        OptRun result = optimize(*disc.problem, preset.optimizer);
        row.distance1 = result.final.parts.distance[0];
        row.distance2 = result.final.parts.distance[1];
        row.J = result.final.J;
        row.iterations = result.iterations;
        row.termination = to_string(result.termination);
        if (run) *run = std::move(result);
    } catch (const std::exception& e) {
        row.distance1 = row.distance2 = row.J = std::nan("");
        row.termination = "error";
        std::string what = e.what();
        try {
            std::rethrow_if_nested(e);
        } catch (const std::exception& inner) {
            what += ": " + std::string(inner.what());
        }
        row.error = what;
    }
    row.wall_seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    return row;
}

std::string study_csv(const std::vector<ResultRow>& rows) {
    std::string out = "n,h,dist_y1,dist_y2,J,iterations,termination,error\n";
    for (const ResultRow& r : rows) {
        out += std::to_string(r.n) + "," + fmt(r.h) + "," + fmt(r.distance1) + "," + fmt(r.distance2) + "," +
               fmt(r.J) + "," + std::to_string(r.iterations) + "," + r.termination + "," + csv_safe(r.error) + "\n";
    }
    return out;
}

std::string timing_csv(const std::vector<ResultRow>& rows) {
    std::string out = "n,wall_seconds\n";
    for (const ResultRow& r : rows) {
        char buf[32];
        std::snprintf(buf, sizeof buf, "%.3f", r.wall_seconds);
        out += std::to_string(r.n) + "," + buf + "\n";
    }
    return out;
}

namespace {

void write_file(const std::string& path, const std::string& text) {
    const std::filesystem::path p(path);
    if (p.has_parent_path()) std::filesystem::create_directories(p.parent_path());
    std::ofstream out(path, std::ios::binary);
    if (!out) throw std::runtime_error("cannot open " + path + " for writing");
    out << text;
    if (!out) throw std::runtime_error("write to " + path + " failed");
}

}  // namespace

std::vector<ResultRow> run_convergence_study(const ExperimentPreset& preset, const std::string& out_path,
                                             const std::function<void(const ResultRow&)>& on_row) {
    preset.validate();
    std::vector<int> sizes(preset.mesh_sizes);
    std::sort(sizes.begin(), sizes.end());
    sizes.erase(std::unique(sizes.begin(), sizes.end()), sizes.end());
    std::vector<ResultRow> rows;
    for (int n : sizes) {
        rows.push_back(run_row(preset, n));
        if (on_row) on_row(rows.back());
        if (!out_path.empty()) {
            write_file(out_path, study_csv(rows));
            write_file(out_path + ".timing.csv", timing_csv(rows));
        }
    }
    return rows;
}

std::vector<std::string> run_dynamics_report(const KineticsParams& params,
                                             std::vector<std::pair<double, double>> controls,
                                             const std::string& out_dir, const DynamicsOptions& options) {
    if (controls.empty()) controls.emplace_back(0.0, 0.0);
    std::vector<std::string> files;
    std::string fixed = "control,g1,g2,y1,y2,trace,determinant,discriminant,class,j11,j12,j21,j22,note\n";
    for (std::size_t i = 0; i < controls.size(); ++i) {
        KineticsParams p = params;
        p.g1 = controls[i].first;
        p.g2 = controls[i].second;
        for (const FixedPointReport& r : fixed_points(p)) {
            fixed += std::to_string(i) + "," + fmt(p.g1) + "," + fmt(p.g2) + "," + fmt(r.location[0]) + "," +
                     fmt(r.location[1]) + "," + fmt(r.trace) + "," + fmt(r.determinant) + "," + fmt(r.discriminant) +
                     "," + to_string(r.cls) + "," + fmt(r.jacobian(0, 0)) + "," + fmt(r.jacobian(0, 1)) + "," +
                     fmt(r.jacobian(1, 0)) + "," + fmt(r.jacobian(1, 1)) + "," + csv_safe(r.note) + "\n";
        }

        std::string curves = "curve_id,y1,y2\n";
        for (const Polyline& line : nullclines(p, options.box, options.nullcline_samples)) {
            for (const Eigen::Vector2d& y : line.points) curves += line.id + "," + fmt(y[0]) + "," + fmt(y[1]) + "\n";
        }
        const std::string curve_path = (std::filesystem::path(out_dir) / ("nullclines_" + std::to_string(i) + ".csv")).string();
        write_file(curve_path, curves);
        files.push_back(curve_path);

        std::string orbit = "t,y1,y2\n";
        for (const OrbitSample& s : phase_trajectory(p, options.start, options.t_end, options.dt_out)) {
            orbit += fmt(s.t) + "," + fmt(s.y[0]) + "," + fmt(s.y[1]) + "\n";
        }
        const std::string orbit_path = (std::filesystem::path(out_dir) / ("orbit_" + std::to_string(i) + ".csv")).string();
        write_file(orbit_path, orbit);
        files.push_back(orbit_path);
    }
    const std::string fixed_path = (std::filesystem::path(out_dir) / "fixed_points.csv").string();
    write_file(fixed_path, fixed);
    files.insert(files.begin(), fixed_path);
    return files;
}

namespace {

/// Values of a field at time t; t = 0 gives the start value of the first interval.
FemVector field_at(const SpaceTimeField& f, double t) { return t == 0.0 ? f.right_limit(0) : f.eval(t); }

struct NodeField {
    std::string name;
    std::vector<int> vertices;  // mesh vertex per row
    std::vector<double> values;
};

NodeField volume_field(const std::string& name, const FemVector& coeffs, int vertex_count) {
    NodeField f{name, {}, {}};
    for (int v = 0; v < vertex_count; ++v) {
        f.vertices.push_back(v);
        f.values.push_back(coeffs[v]);
    }
    return f;
}

}  // namespace

std::vector<std::string> export_fields(const Problem& problem, const StatePair& state, const AdjointPair* adjoint,
                                       const ControlPair* controls, const std::vector<double>& times,
                                       const std::string& out_dir, bool vtk) {
    const Triangulation& mesh = problem.space().mesh();
    const int nv = mesh.vertex_count();
    const double T = problem.grid().final_time();
    const bool robin = problem.kind() == ControlKind::Robin;
    std::vector<std::string> files;
    std::string index = "index,t\n";

    for (std::size_t ti = 0; ti < times.size(); ++ti) {
        const double t = times[ti];
        if (!(t >= 0.0 && t <= T)) throw std::invalid_argument("export_fields: time outside [0, T]");
        index += std::to_string(ti) + "," + fmt(t) + "\n";

        std::vector<NodeField> fields;
        for (int s = 0; s < 2; ++s) {
            const FemVector y = t == 0.0 ? problem.initial(s) : state[s].eval(t);
            fields.push_back(volume_field(s == 0 ? "y1" : "y2", y, nv));
        }
        if (adjoint) {
            for (int s = 0; s < 2; ++s) fields.push_back(volume_field(s == 0 ? "mu1" : "mu2", field_at((*adjoint)[s], t), nv));
        }
        if (controls) {
            for (int s = 0; s < 2; ++s) {
                const FemVector g = field_at((*controls)[s], t);
                const std::string name = s == 0 ? "g1" : "g2";
                if (!robin) {
                    fields.push_back(volume_field(name, g, nv));
                } else {
                    NodeField f{name, {}, {}};
                    const auto& trace = problem.trace_map();
                    for (std::size_t m = 0; m < trace.size(); ++m) {
                        if (trace[m] < nv) {
                            f.vertices.push_back(trace[m]);
                            f.values.push_back(g[static_cast<Eigen::Index>(m)]);
                        }
                    }
                    fields.push_back(std::move(f));
                }
            }
        }

        for (const NodeField& f : fields) {
            std::string text = "x1,x2,value\n";
            for (std::size_t r = 0; r < f.vertices.size(); ++r) {
                const Point2& x = mesh.vertices[f.vertices[r]];
                text += fmt(x[0]) + "," + fmt(x[1]) + "," + fmt(f.values[r]) + "\n";
            }
            const std::string path = (std::filesystem::path(out_dir) / (f.name + "_t" + std::to_string(ti) + ".csv")).string();
            write_file(path, text);
            files.push_back(path);
        }

        if (vtk) {
            std::ostringstream out;
            out.precision(12);
            out << "# vtk DataFile Version 3.0\n"
                << "Lotka-Volterra fields at t=" << t << "\n"
                << "ASCII\nDATASET UNSTRUCTURED_GRID\n"
                << "POINTS " << nv << " double\n";
            for (const Point2& x : mesh.vertices) out << x[0] << " " << x[1] << " 0\n";
            const int nt = mesh.triangle_count();
            out << "CELLS " << nt << " " << 4 * nt << "\n";
            for (const auto& tri : mesh.triangles) out << "3 " << tri[0] << " " << tri[1] << " " << tri[2] << "\n";
            out << "CELL_TYPES " << nt << "\n";
            for (int c = 0; c < nt; ++c) out << "5\n";
            out << "POINT_DATA " << nv << "\n";
            for (const NodeField& f : fields) {
                if (static_cast<int>(f.values.size()) != nv) continue;  // boundary-only control
                out << "SCALARS " << f.name << " double 1\nLOOKUP_TABLE default\n";
                for (double v : f.values) out << v << "\n";
            }
            const std::string path = (std::filesystem::path(out_dir) / ("fields_t" + std::to_string(ti) + ".vtk")).string();
            write_file(path, out.str());
            files.push_back(path);
        }
    }
    const std::string index_path = (std::filesystem::path(out_dir) / "times.csv").string();
    write_file(index_path, index);
    files.push_back(index_path);
    return files;
}

}  // namespace lvoc
