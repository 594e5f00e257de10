#pragma once

#include "lvoc/model.hpp"
#include "lvoc/state_solver.hpp"

namespace lvoc {

/// `Diagonal` keeps only the diagonal reaction couplings (a - b y2) mu1 and
/// (c y1 - d) mu2; `Full` is the complete transposed linearization.
enum class AdjointMode { Diagonal, Full };

struct AdjointPair {
    SpaceTimeField mu1, mu2;
    /// Terminal condition mu(T+) = 0 is built into the sweep.
    bool terminal_zero = true;

    SpaceTimeField& operator[](int i) { return i == 0 ? mu1 : mu2; }
    const SpaceTimeField& operator[](int i) const { return i == 0 ? mu1 : mu2; }
};

/// Backward sweep of the discrete adjoint, sourced by y - y_d.
/// Entries at Dirichlet dofs are zero.
AdjointPair solve_adjoint(const Problem& problem, const StatePair& state, AdjointMode mode);

/// Linearized state in the control direction v, zero initial value.
StatePair solve_tangent(const Problem& problem, const StatePair& state, const ControlPair& v, AdjointMode mode);

}  // namespace lvoc
