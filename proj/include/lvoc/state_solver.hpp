#pragma once

#include <vector>

#include "lvoc/model.hpp"

namespace lvoc {

struct NewtonOptions {
    double tol = 1e-10;  // l2 norm of the interval residual
    int max_iterations = 25;
    double blowup = 1e6;
};

struct StatePair {
    SpaceTimeField y1, y2;
    /// Newton iterations spent on each interval (0 for linear sweeps).
    std::vector<int> newton_iterations;
    /// Largest final interval residual.
    double max_residual = 0.0;

    SpaceTimeField& operator[](int i) { return i == 0 ? y1 : y2; }
    const SpaceTimeField& operator[](int i) const { return i == 0 ? y1 : y2; }
};

/// Forward sweep of the fully discrete state equations for the given controls.
///
/// Per interval a damped Newton iteration on the stacked (y1, y2) node
/// values, started from the previous end value. Throws
/// NonlinearSolverFailure when the residual stays above `tol` after
/// `max_iterations`, BlowUpDetected when |y|_inf exceeds `blowup`.
StatePair solve_state(const Problem& problem, const ControlPair& controls, const NewtonOptions& options = {});

}  // namespace lvoc
