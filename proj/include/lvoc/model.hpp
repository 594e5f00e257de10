#pragma once

#include <functional>
#include <memory>
#include <optional>
#include <vector>

#include "lvoc/fem.hpp"
#include "lvoc/timestepping.hpp"

namespace lvoc {

enum class ControlKind { Distributed, Robin };

/// Reaction, diffusion, Robin and penalty constants. Defaults are the
/// hare-lynx values used throughout the experiments.
struct ModelParams {
    double a = 0.47;
    double b = 0.024;
    double c = 0.023;
    double d = 0.76;
    double eps1 = 0.1;
    double eps2 = 0.01;
    double lambda1 = 1.0;
    double lambda2 = 1.0;
    double gamma1 = 0.01;
    double gamma2 = 0.01;
    std::optional<double> g_lo;
    std::optional<double> g_hi;
    ControlKind kind = ControlKind::Distributed;

    bool bounded() const { return g_lo.has_value() || g_hi.has_value(); }
    double gamma(int species) const { return species == 0 ? gamma1 : gamma2; }
    double lambda(int species) const { return species == 0 ? lambda1 : lambda2; }
    /// Throws std::invalid_argument on eps <= 0, gamma <= 0 or g_lo >= g_hi.
    void validate() const;
};

using SpaceFn = std::function<double(double x1, double x2)>;
using SpaceTimeFn = std::function<double(double t, double x1, double x2)>;

struct ProblemData {
    SpaceTimeFn f1, f2;  // empty means zero
    SpaceFn y10, y20;
    SpaceTimeFn y1d, y2d;
    double final_time = 0.1;
    /// Optional nodal targets on the state discretization; override y1d/y2d.
    std::optional<SpaceTimeField> y1d_field, y2d_field;
    /// Optional initial coefficient vectors; override y10/y20.
    std::optional<FemVector> y10_vector, y20_vector;
};

enum class InitialKind { Smooth, Rough };

/// Forcing pair with the printed coefficients taken literally (x = x1, y = x2).
double forcing_prey(const ModelParams& p, double t, double x, double y);
double forcing_predator(const ModelParams& p, double t, double x, double y);

double smooth_prey_initial(double x1, double x2);
double smooth_predator_initial(double x1, double x2);
/// 10 inside the closed disc of radius 1/4 about the centre, 1 elsewhere.
double rough_prey_initial(double x1, double x2);
/// 10 outside the open disc of radius 1/2 about the centre, 1 inside.
double rough_predator_initial(double x1, double x2);

/// Forcing, initial data of the given kind, targets (0, 20), T = 0.1.
ProblemData standard_data(const ModelParams& params, InitialKind initial);

struct ControlPair {
    SpaceTimeField g1, g2;
    SpaceTimeField& operator[](int i) { return i == 0 ? g1 : g2; }
    const SpaceTimeField& operator[](int i) const { return i == 0 ? g1 : g2; }
};

/// A fully discretized optimal control problem: parameters, data and every
/// operator that does not depend on the state. Immutable once built.
class Problem {
public:
    Problem(ModelParams params, ProblemData data, std::shared_ptr<const FeSpace> space,
            std::shared_ptr<const TimeGrid> grid, int k);

    const ModelParams& params() const { return params_; }
    const ProblemData& data() const { return data_; }
    const FeSpace& space() const { return *space_; }
    const std::shared_ptr<const FeSpace>& space_ptr() const { return space_; }
    const TimeGrid& grid() const { return *grid_; }
    const std::shared_ptr<const TimeGrid>& grid_ptr() const { return grid_; }
    const DgBasis& basis() const { return basis_; }
    int k() const { return basis_.degree(); }
    int ndof() const { return space_->dof_count(); }
    ControlKind kind() const { return params_.kind; }

    const SparseMatrix& mass() const { return mass_; }
    const SparseMatrix& stiffness() const { return stiffness_; }
    /// Zero matrix for distributed control.
    const SparseMatrix& boundary_mass() const { return boundary_mass_; }
    const ElementPattern& pattern() const { return *pattern_; }
    const TrilinearForm& trilinear() const { return *trilinear_; }
    /// Pattern-layout values of mass, and of eps K + lambda B (+/-) reaction shift per species:
    /// prey: eps1 K + lambda1 B - a M, predator: eps2 K + lambda2 B + d M.
    const std::vector<double>& mass_values() const { return mass_values_; }
    const std::vector<double>& linear_values(int species) const { return linear_values_[species]; }
    const SparseMatrix& linear_operator(int species) const { return linear_[species]; }

    const FemVector& initial(int species) const { return initial_[species]; }
    /// Per interval and temporal node: int_I phi_j(t) (f(t), v_m) dt.
    const SpaceTimeField& forcing_load(int species) const { return forcing_[species]; }
    /// Target values at the temporal nodes of every interval.
    const SpaceTimeField& target(int species) const { return target_[species]; }

    /// Length of a control coefficient vector: dof count (distributed) or
    /// number of boundary dofs (Robin).
    int control_dim() const { return control_dim_; }
    /// Gram matrix of the control space, L2(Omega) restricted to free dofs or L2(Gamma).
    const SparseMatrix& control_mass() const { return control_mass_; }
    /// Maps control coefficients to the state load: M (distributed) or lambda_i B E (Robin).
    const SparseMatrix& control_load(int species) const { return control_load_[species]; }
    /// Control dofs that are pinned to zero (Dirichlet dofs of a distributed control).
    const std::vector<char>& control_fixed() const { return control_fixed_; }
    /// For Robin control: volume dof of each control dof.
    const std::vector<int>& trace_map() const { return space_->boundary_dofs(); }

    SpaceTimeField state_field() const;
    SpaceTimeField control_field() const;
    /// Control with the value `v` at every free dof and node.
    ControlPair constant_control(double v) const;

    /// (u, w) in L2(0,T; L2(S)) for control-shaped fields.
    double control_inner(const SpaceTimeField& u, const SpaceTimeField& w) const;
    /// (u, w) in L2(0,T; L2(Omega)) for state-shaped fields.
    double state_inner(const SpaceTimeField& u, const SpaceTimeField& w) const;

private:
    ModelParams params_;
    ProblemData data_;
    std::shared_ptr<const FeSpace> space_;
    std::shared_ptr<const TimeGrid> grid_;
    DgBasis basis_;

    SparseMatrix mass_, stiffness_, boundary_mass_;
    std::shared_ptr<const ElementPattern> pattern_;
    std::shared_ptr<const TrilinearForm> trilinear_;
    std::vector<double> mass_values_;
    std::vector<double> linear_values_[2];
    SparseMatrix linear_[2];

    FemVector initial_[2];
    SpaceTimeField forcing_[2];
    SpaceTimeField target_[2];

    int control_dim_ = 0;
    SparseMatrix control_mass_;
    SparseMatrix control_load_[2];
    std::vector<char> control_fixed_;
};

/// Space-time inner product sum_n tau_n sum_ij m_ij u_{n,i}^T G w_{n,j}.
double spacetime_inner(const DgBasis& basis, const SparseMatrix& gram, const SpaceTimeField& u,
                       const SpaceTimeField& w);

}  // namespace lvoc
