#pragma once

#include <cstdint>
#include <vector>

#include "lvoc/objective.hpp"

namespace lvoc {

struct CheckResult {
    /// Per-direction relative errors.
    std::vector<double> errors;
    double max_error = 0.0;
    double threshold = 0.0;
    bool pass = false;
};

struct CheckOptions {
    int directions = 10;
    std::uint64_t seed = 1;
    double threshold = 1e-4;
    /// Finite-difference step along unit directions.
    double step = 1e-5;
    /// Base control value; bounds are ignored.
    double base = 1.0;
    NewtonOptions newton{1e-13, 25, 1e6};
};

/// Adjoint gradient against central differences of J along random unit
/// directions. Error per direction: |fd - (grad, v)| / max(|fd|, 1e-3 ||grad||).
CheckResult gradient_check(const Problem& problem, AdjointMode mode, const CheckOptions& options = {});

/// second_directional (with the adjoint curvature term in full mode) against
/// (J(g + h v) - 2 J(g) + J(g - h v)) / h^2. Use step ~ 1e-3 and threshold 1e-3.
CheckResult second_order_check(const Problem& problem, AdjointMode mode, const CheckOptions& options);

/// Seeded standard normal control with pinned dofs zeroed, scaled to unit norm.
ControlPair random_direction(const Problem& problem, std::uint64_t seed);

}  // namespace lvoc
