#include "lvoc/objective.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <random>
#include <stdexcept>

namespace lvoc {

ObjectiveParts objective_parts(const Problem& problem, const StatePair& state, const ControlPair& controls) {
    ObjectiveParts parts;
    for (int s = 0; s < 2; ++s) {
        SpaceTimeField e = state[s];
        e.data() -= problem.target(s).data();
        const double de = problem.state_inner(e, e);
        const double gg = problem.control_inner(controls[s], controls[s]);
        parts.distance[s] = std::sqrt(std::max(de, 0.0));
        parts.control_norm[s] = std::sqrt(std::max(gg, 0.0));
        parts.value += 0.5 * de + 0.5 * problem.params().gamma(s) * gg;
    }
    return parts;
}

double evaluate_J(const Problem& problem, const StatePair& state, const ControlPair& controls) {
    return objective_parts(problem, state, controls).value;
}

ControlPair gradient(const Problem& problem, const AdjointPair& adjoint, const ControlPair& controls) {
    ControlPair g{problem.control_field(), problem.control_field()};
    const auto& fixed = problem.control_fixed();
    for (int s = 0; s < 2; ++s) {
        const double gamma = problem.params().gamma(s);
        g[s].data() = gamma * controls[s].data();
        if (problem.kind() == ControlKind::Distributed) {
            g[s].data() += adjoint[s].data();
        } else {
            const auto& trace = problem.trace_map();
            const double lambda = problem.params().lambda(s);
            for (int n = 0; n < problem.grid().intervals(); ++n) {
                for (int j = 0; j < problem.basis().size(); ++j) {
                    auto gn = g[s].node(n, j);
                    const auto mu = adjoint[s].node(n, j);
                    for (int m = 0; m < problem.control_dim(); ++m) gn[m] += lambda * mu[trace[m]];
                }
            }
        }
        const int dim = problem.control_dim();
        for (Eigen::Index q = 0; q < g[s].data().size(); ++q) {
            if (fixed[q % dim]) g[s].data()[q] = 0.0;
        }
    }
    return g;
}

ControlPair project(const Problem& problem, const ControlPair& controls) {
    const ModelParams& p = problem.params();
    const double lo = p.g_lo.value_or(-std::numeric_limits<double>::infinity());
    const double hi = p.g_hi.value_or(std::numeric_limits<double>::infinity());
    const auto& fixed = problem.control_fixed();
    const int dim = problem.control_dim();
    ControlPair out = controls;
    for (int s = 0; s < 2; ++s) {
        auto& v = out[s].data();
        for (Eigen::Index q = 0; q < v.size(); ++q) v[q] = fixed[q % dim] ? 0.0 : std::clamp(v[q], lo, hi);
    }
    return out;
}

double vi_residual(const Problem& problem, const ControlPair& controls, const ControlPair& grad, std::uint64_t seed) {
    const ModelParams& p = problem.params();
    if (!p.g_lo || !p.g_hi) throw std::invalid_argument("vi_residual: both control bounds are required");
    const double lo = *p.g_lo, hi = *p.g_hi;
    const double base = inner(problem, grad, controls);
    double worst = 0.0;
    auto probe = [&](const ControlPair& u) { worst = std::max(worst, -(inner(problem, grad, u) - base)); };
    for (double v : {lo, hi, 0.5 * (lo + hi)}) probe(problem.constant_control(v));

    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> dist(lo, hi);
    const auto& fixed = problem.control_fixed();
    const int dim = problem.control_dim();
    for (int r = 0; r < 8; ++r) {
        ControlPair u{problem.control_field(), problem.control_field()};
        for (int s = 0; s < 2; ++s) {
            auto& v = u[s].data();
            for (Eigen::Index q = 0; q < v.size(); ++q) v[q] = fixed[q % dim] ? 0.0 : dist(rng);
        }
        probe(u);
    }
    return worst;
}

double second_directional(const Problem& problem, const StatePair& tangent, const ControlPair& v,
                          const AdjointPair* adjoint) {
    double value = 0.0;
    for (int s = 0; s < 2; ++s) {
        value += problem.state_inner(tangent[s], tangent[s]);
        value += problem.params().gamma(s) * problem.control_inner(v[s], v[s]);
    }
    if (!adjoint) return value;

    // -sum_n Lambda_n^T R_n''[z, z], with R'' = (2b S, -2c S)
    const ModelParams& p = problem.params();
    const DgBasis& basis = problem.basis();
    const int nd = problem.ndof();
    FemVector prod(nd), sum(nd);
    for (int n = 0; n < problem.grid().intervals(); ++n) {
        const double tau = problem.grid().tau(n);
        for (int i = 0; i < basis.size(); ++i) {
            sum.setZero();
            for (int j = 0; j < basis.size(); ++j) {
                for (int l = 0; l < basis.size(); ++l) {
                    prod.setZero();
                    problem.trilinear().add_product(tangent.y1.node(n, j), tangent.y2.node(n, l), 1.0, prod);
                    sum += (tau * basis.triple(i, j, l)) * prod;
                }
            }
            value -= 2.0 * p.b * adjoint->mu1.node(n, i).dot(sum);
            value += 2.0 * p.c * adjoint->mu2.node(n, i).dot(sum);
        }
    }
    return value;
}

double inner(const Problem& problem, const ControlPair& u, const ControlPair& w) {
    return problem.control_inner(u.g1, w.g1) + problem.control_inner(u.g2, w.g2);
}

double norm(const Problem& problem, const ControlPair& u) { return std::sqrt(std::max(inner(problem, u, u), 0.0)); }

ControlPair axpy(const ControlPair& u, double alpha, const ControlPair& w) {
    ControlPair out = u;
    out.g1.data() += alpha * w.g1.data();
    out.g2.data() += alpha * w.g2.data();
    return out;
}

ControlPair scale(const ControlPair& u, double alpha) {
    ControlPair out = u;
    out.g1.data() *= alpha;
    out.g2.data() *= alpha;
    return out;
}

ReducedObjective::ReducedObjective(const Problem& problem, AdjointMode mode, NewtonOptions newton)
    : problem_(&problem), mode_(mode), newton_(newton) {}

Evaluation ReducedObjective::evaluate(const ControlPair& g, bool with_gradient) const {
    Evaluation e;
    e.controls = g;
    e.state = solve_state(*problem_, g, newton_);
    ++state_solves_;
    e.parts = objective_parts(*problem_, e.state, g);
    e.J = e.parts.value;
    if (with_gradient) complete(e);
    return e;
}

void ReducedObjective::complete(Evaluation& e) const {
    if (e.grad) return;
    e.adjoint = solve_adjoint(*problem_, e.state, mode_);
    ++adjoint_solves_;
    e.grad = gradient(*problem_, *e.adjoint, e.controls);
}

}  // namespace lvoc
