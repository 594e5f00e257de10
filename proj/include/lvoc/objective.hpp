#pragma once

#include <cstdint>
#include <optional>

#include "lvoc/adjoint_solver.hpp"
#include "lvoc/model.hpp"
#include "lvoc/state_solver.hpp"

namespace lvoc {

struct ObjectiveParts {
    /// ||y_i - y_id|| in L2(0,T; L2(Omega)).
    double distance[2] = {0.0, 0.0};
    /// ||g_i|| in L2(0,T; L2(S)).
    double control_norm[2] = {0.0, 0.0};
    double value = 0.0;
};

ObjectiveParts objective_parts(const Problem& problem, const StatePair& state, const ControlPair& controls);
double evaluate_J(const Problem& problem, const StatePair& state, const ControlPair& controls);

/// Riesz representative of J' in the control inner product:
/// gamma_i g_i + mu_i (distributed) or gamma_i g_i + lambda_i mu_i|Gamma (Robin).
ControlPair gradient(const Problem& problem, const AdjointPair& adjoint, const ControlPair& controls);

/// Coefficientwise clamp to [g_lo, g_hi]; pinned dofs stay zero.
ControlPair project(const Problem& problem, const ControlPair& controls);

/// max over probe controls u of max(0, -(grad, u - g)). Probes: both bound
/// constants, their midpoint and 8 random admissible fields from `seed`.
/// Requires both bounds.
double vi_residual(const Problem& problem, const ControlPair& controls, const ControlPair& grad,
                   std::uint64_t seed = 1);

/// ||z_v||^2 + gamma ||v||^2. With an adjoint, adds the curvature of the
/// reaction terms weighted by the adjoint, which makes it the exact second
/// derivative of the discrete reduced functional when `tangent` and
/// `adjoint` were computed in full mode.
double second_directional(const Problem& problem, const StatePair& tangent, const ControlPair& v,
                          const AdjointPair* adjoint = nullptr);

// Control-space arithmetic.
double inner(const Problem& problem, const ControlPair& u, const ControlPair& w);
double norm(const Problem& problem, const ControlPair& u);
/// u + alpha * w
ControlPair axpy(const ControlPair& u, double alpha, const ControlPair& w);
ControlPair scale(const ControlPair& u, double alpha);

struct Evaluation {
    ControlPair controls;
    StatePair state;
    ObjectiveParts parts;
    double J = 0.0;
    std::optional<AdjointPair> adjoint;
    std::optional<ControlPair> grad;
};

/// g -> J(y(g), g) with optional gradient.
class ReducedObjective {
public:
    ReducedObjective(const Problem& problem, AdjointMode mode, NewtonOptions newton = {});

    Evaluation evaluate(const ControlPair& g, bool with_gradient) const;
    /// Adds adjoint and gradient to an evaluation made without them.
    void complete(Evaluation& e) const;

    const Problem& problem() const { return *problem_; }
    AdjointMode mode() const { return mode_; }
    const NewtonOptions& newton() const { return newton_; }
    int state_solves() const { return state_solves_; }
    int adjoint_solves() const { return adjoint_solves_; }

private:
    const Problem* problem_;
    AdjointMode mode_;
    NewtonOptions newton_;
    mutable int state_solves_ = 0;
    mutable int adjoint_solves_ = 0;
};

}  // namespace lvoc
