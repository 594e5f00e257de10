#include "lvoc/adjoint_solver.hpp"

#include <stdexcept>

#include "lvoc/step_system.hpp"

namespace lvoc {

namespace {

Coupling coupling_of(AdjointMode mode) { return mode == AdjointMode::Full ? Coupling::Full : Coupling::Diagonal; }

void check_state(const Problem& problem, const StatePair& state) {
    for (int i = 0; i < 2; ++i) {
        if (state[i].dim() != problem.ndof() || state[i].degree() != problem.k() ||
            state[i].grid().knots() != problem.grid().knots()) {
            throw std::invalid_argument("state does not match the discretization");
        }
    }
}

}  // namespace

AdjointPair solve_adjoint(const Problem& problem, const StatePair& state, AdjointMode mode) {
    check_state(problem, state);
    StepSystem step(problem);
    const int nd = problem.ndof();
    const DgBasis& basis = problem.basis();
    const int nodes = basis.size();
    const int intervals = problem.grid().intervals();

    AdjointPair out{problem.state_field(), problem.state_field()};
    Eigen::VectorXd rhs(step.size());
    Eigen::VectorXd lambda_next;  // adjoint of interval n + 1
    FemVector e(nd), inflow(nd);

    for (int n = intervals - 1; n >= 0; --n) {
        const double tau = problem.grid().tau(n);
        rhs.setZero();
        for (int s = 0; s < 2; ++s) {
            for (int j = 0; j < nodes; ++j) {
                e.noalias() = problem.mass() * (state[s].node(n, j) - problem.target(s).node(n, j));
                for (int i = 0; i < nodes; ++i) rhs.segment((s * nodes + i) * nd, nd) += (tau * basis.mass()(i, j)) * e;
            }
            if (n + 1 < intervals) {
                // the next interval reads this one's end value through phi_i(0) M
                inflow.setZero();
                for (int i = 0; i < nodes; ++i) inflow += basis.inflow()[i] * lambda_next.segment((s * nodes + i) * nd, nd);
                inflow = problem.mass() * inflow;
                for (int j = 0; j < nodes; ++j) rhs.segment((s * nodes + j) * nd, nd) += basis.outflow()[j] * inflow;
            }
        }
        step.zero_constrained(rhs);
        step.linearize(n, step.gather(state.y1, state.y2, n), coupling_of(mode));
        lambda_next = step.solve_transpose(rhs);
        step.zero_constrained(lambda_next);
        step.scatter(lambda_next, out.mu1, out.mu2, n);
    }
    return out;
}

StatePair solve_tangent(const Problem& problem, const StatePair& state, const ControlPair& v, AdjointMode mode) {
    check_state(problem, state);
    StepSystem step(problem);
    const int nd = problem.ndof();
    const int nodes = problem.basis().size();
    const auto& outflow = problem.basis().outflow();

    StatePair out{problem.state_field(), problem.state_field(), {}, 0.0};
    FemVector prev1 = FemVector::Zero(nd), prev2 = FemVector::Zero(nd);
    for (int n = 0; n < problem.grid().intervals(); ++n) {
        const Eigen::VectorXd rhs = step.rhs(n, prev1, prev2, v, false);
        step.linearize(n, step.gather(state.y1, state.y2, n), coupling_of(mode));
        const Eigen::VectorXd z = step.solve(rhs);
        step.scatter(z, out.y1, out.y2, n);
        out.newton_iterations.push_back(0);
        prev1.setZero();
        prev2.setZero();
        for (int j = 0; j < nodes; ++j) {
            prev1 += outflow[j] * z.segment(j * nd, nd);
            prev2 += outflow[j] * z.segment((nodes + j) * nd, nd);
        }
    }
    return out;
}

}  // namespace lvoc
