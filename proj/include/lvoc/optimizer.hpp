#pragma once

#include <functional>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "lvoc/objective.hpp"

namespace lvoc {

/// `Scaled` walks the step with multiplicative shrink/grow factors until both
/// strong Wolfe tests hold; `Bracketing` is the usual bracket-then-zoom search.
enum class LineSearchKind { Scaled, Bracketing };

struct NcgConfig {
    double sigma = 0.1;  ///< Armijo constant
    double rho = 0.9;    ///< curvature constant
    double tol = 1e-5;   ///< relative J decrease that stops the loop
    double eps0 = 1.0;
    double step_shrink = 0.5;
    double step_grow = 1.5;
    double g0 = 1.0;
    int max_outer = 200;
    int max_line = 40;
    LineSearchKind line_search = LineSearchKind::Scaled;
    /// Restart with steepest descent whenever projection changes the active set.
    bool restart_on_active_change = true;
    AdjointMode adjoint = AdjointMode::Diagonal;
    NewtonOptions newton;

    void validate() const;
};

enum class Termination { Converged, MaxIterations, LineSearchFailure };
std::string to_string(Termination t);

struct IterationRecord {
    int iteration = 0;
    double J = 0.0;
    double grad_norm = 0.0;
    double step = 0.0;
    double beta = 0.0;
    int trials = 0;
    bool restarted = false;
    /// Extreme control coefficients of the accepted iterate.
    double control_min = 0.0;
    double control_max = 0.0;
};

struct OptRun {
    int iterations = 0;
    /// J of the initial control followed by J of every accepted iterate.
    std::vector<double> J_history;
    std::vector<double> betas;
    std::vector<double> steps;
    std::vector<IterationRecord> records;
    Termination termination = Termination::MaxIterations;
    /// Best iterate, with adjoint and gradient.
    Evaluation final;
    int state_solves = 0;
    int adjoint_solves = 0;
    /// Set when a line search failed.
    std::string message;
};

/// phi(alpha) along a search direction. `slope` is only called at an alpha
/// whose `value` was just requested.
struct LineFunction {
    std::function<double(double)> value;
    std::function<double(double)> slope;
};

struct LineSearchResult {
    double alpha = 0.0;
    double value = 0.0;
    double slope = 0.0;
    int trials = 0;
};

/// Strong Wolfe step: phi(a) <= phi0 + sigma a dphi0 and |phi'(a)| <= -rho dphi0.
/// Throws std::invalid_argument unless dphi0 < 0, LineSearchFailure after
/// cfg.max_line trials.
LineSearchResult wolfe_search(const LineFunction& phi, double phi0, double dphi0, double alpha0, const NcgConfig& cfg);

/// -grad_now + beta dir_prev with beta = |grad_now|^2 / |grad_prev|^2, or
/// steepest descent when `restart` is set, grad_prev vanishes or the result
/// is not a descent direction.
struct Direction {
    ControlPair d;
    double beta = 0.0;
    bool restarted = false;
};
Direction fr_direction(const Problem& problem, const ControlPair& grad_now, const ControlPair* grad_prev,
                       const ControlPair* dir_prev, bool restart);

/// Gradient with coefficients zeroed where a bound is active and the
/// gradient pushes outward. Equals the gradient without bounds.
ControlPair reduced_gradient(const Problem& problem, const ControlPair& controls, const ControlPair& grad);

/// A solver failure inside the optimization loop; the original error is nested.
class OptimizerFailure : public std::runtime_error {
public:
    OptimizerFailure(int iteration, const std::string& what)
        : std::runtime_error("optimizer iteration " + std::to_string(iteration) + ": " + what),
          iteration_(iteration) {}
    int iteration() const noexcept { return iteration_; }

private:
    int iteration_;
};

using IterationCallback = std::function<void(const IterationRecord&)>;

/// Projected Fletcher-Reeves NCG from the constant control cfg.g0 (projected),
/// or from `start` when given.
OptRun optimize(const Problem& problem, const NcgConfig& cfg, const std::optional<ControlPair>& start = std::nullopt,
                const IterationCallback& on_iteration = {});

}  // namespace lvoc
