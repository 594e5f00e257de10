#include "lvoc/state_solver.hpp"

#include <algorithm>
#include <stdexcept>

#include "lvoc/errors.hpp"
#include "lvoc/step_system.hpp"

namespace lvoc {

namespace {

void check_controls(const Problem& problem, const ControlPair& g) {
    for (int i = 0; i < 2; ++i) {
        if (g[i].dim() != problem.control_dim() || g[i].degree() != problem.k() ||
            g[i].grid().knots() != problem.grid().knots()) {
            throw std::invalid_argument("solve_state: control field does not match the discretization");
        }
    }
}

}  // namespace

StatePair solve_state(const Problem& problem, const ControlPair& controls, const NewtonOptions& options) {
    check_controls(problem, controls);
    StepSystem step(problem);
    const int nd = problem.ndof();
    const int nodes = problem.basis().size();
    const auto& outflow = problem.basis().outflow();

    StatePair out{problem.state_field(), problem.state_field(), {}, 0.0};
    out.newton_iterations.reserve(problem.grid().intervals());
    FemVector prev1 = problem.initial(0), prev2 = problem.initial(1);

    Eigen::VectorXd x(step.size());
    for (int n = 0; n < problem.grid().intervals(); ++n) {
        for (int j = 0; j < nodes; ++j) {
            x.segment(j * nd, nd) = prev1;
            x.segment((nodes + j) * nd, nd) = prev2;
        }
        step.zero_constrained(x);
        const Eigen::VectorXd rhs = step.rhs(n, prev1, prev2, controls);
        Eigen::VectorXd r = step.residual(n, x, rhs);
        double rnorm = r.norm();
        int it = 0;
        while (rnorm > options.tol) {
            if (it == options.max_iterations) throw NonlinearSolverFailure(n, rnorm);
            step.linearize(n, x, Coupling::Full);
            const Eigen::VectorXd dx = step.solve(-r);
            double lambda = 1.0;
            Eigen::VectorXd trial;
            Eigen::VectorXd rtrial;
            for (;;) {
                trial = x + lambda * dx;
                rtrial = step.residual(n, trial, rhs);
                if (rtrial.norm() < rnorm || lambda < 1.0 / 1024) break;
                lambda *= 0.5;
            }
            x = std::move(trial);
            r = std::move(rtrial);
            rnorm = r.norm();
            ++it;
            const double peak = x.lpNorm<Eigen::Infinity>();
            if (!(peak <= options.blowup)) throw BlowUpDetected(n, peak);
        }
        out.newton_iterations.push_back(it);
        out.max_residual = std::max(out.max_residual, rnorm);
        step.scatter(x, out.y1, out.y2, n);
        prev1.setZero();
        prev2.setZero();
        for (int j = 0; j < nodes; ++j) {
            prev1 += outflow[j] * x.segment(j * nd, nd);
            prev2 += outflow[j] * x.segment((nodes + j) * nd, nd);
        }
    }
    return out;
}

}  // namespace lvoc
