#include "lvoc/checks.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <random>

namespace lvoc {

ControlPair random_direction(const Problem& problem, std::uint64_t seed) {
    std::mt19937_64 rng(seed);
    std::normal_distribution<double> normal;
    const auto& fixed = problem.control_fixed();
    const int dim = problem.control_dim();
    ControlPair v{problem.control_field(), problem.control_field()};
    for (int s = 0; s < 2; ++s) {
        auto& x = v[s].data();
        for (Eigen::Index q = 0; q < x.size(); ++q) x[q] = fixed[q % dim] ? 0.0 : normal(rng);
    }
    return scale(v, 1.0 / norm(problem, v));
}

namespace {

CheckResult finish(std::vector<double> errors, double threshold) {
    CheckResult r;
    r.errors = std::move(errors);
    r.threshold = threshold;
    for (double e : r.errors) r.max_error = std::max(r.max_error, std::isfinite(e) ? e : std::numeric_limits<double>::infinity());
    r.pass = !r.errors.empty() && r.max_error <= threshold;
    return r;
}

}  // namespace

CheckResult gradient_check(const Problem& problem, AdjointMode mode, const CheckOptions& options) {
    ReducedObjective objective(problem, mode, options.newton);
    const ControlPair g = problem.constant_control(options.base);
    Evaluation e = objective.evaluate(g, true);
    const double gnorm = norm(problem, *e.grad);
    std::vector<double> errors;
    for (int i = 0; i < options.directions; ++i) {
        const ControlPair v = random_direction(problem, options.seed + static_cast<std::uint64_t>(i));
        const double h = options.step;
        const double fd = (objective.evaluate(axpy(g, h, v), false).J - objective.evaluate(axpy(g, -h, v), false).J) / (2 * h);
        const double an = inner(problem, *e.grad, v);
        errors.push_back(std::abs(fd - an) / std::max(std::abs(fd), 1e-3 * gnorm));
    }
    return finish(std::move(errors), options.threshold);
}

CheckResult second_order_check(const Problem& problem, AdjointMode mode, const CheckOptions& options) {
    ReducedObjective objective(problem, mode, options.newton);
    const ControlPair g = problem.constant_control(options.base);
    Evaluation e = objective.evaluate(g, true);
    std::vector<double> errors;
    for (int i = 0; i < options.directions; ++i) {
        const ControlPair v = random_direction(problem, options.seed + static_cast<std::uint64_t>(i));
        const double h = options.step;
        const double fd2 = (objective.evaluate(axpy(g, h, v), false).J - 2.0 * e.J +
                            objective.evaluate(axpy(g, -h, v), false).J) / (h * h);
        const StatePair z = solve_tangent(problem, e.state, v, mode);
        const double an = second_directional(problem, z, v, mode == AdjointMode::Full ? &*e.adjoint : nullptr);
        errors.push_back(std::abs(fd2 - an) / std::abs(fd2));
    }
    return finish(std::move(errors), options.threshold);
}

}  // namespace lvoc
