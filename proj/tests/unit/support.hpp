#pragma once

#include <array>
#include <memory>
#include <vector>

#include <Eigen/Dense>

#include "lvoc/fem.hpp"
#include "lvoc/mesh.hpp"
#include "lvoc/model.hpp"

namespace lvoc::fixture {

struct Setup {
    std::shared_ptr<const FeSpace> space;
    std::shared_ptr<const TimeGrid> grid;
    std::unique_ptr<Problem> problem;
};

inline Setup make_setup(const ModelParams& params, const ProblemData& data, int n, int ell, int k, int intervals) {
    Setup s;
    auto mesh = std::make_shared<const Triangulation>(build_structured(n));
    const BcKind bc = params.kind == ControlKind::Robin ? BcKind::Free : BcKind::DirichletZero;
    s.space = std::make_shared<const FeSpace>(mesh, ell, bc);
    s.grid = std::make_shared<const TimeGrid>(TimeGrid::uniform(data.final_time, intervals));
    s.problem = std::make_unique<Problem>(params, data, s.space, s.grid, k);
    return s;
}

/// Zero reaction constants, no forcing, constant initial data.
inline ProblemData constant_data(double y10, double y20, double y1d, double y2d, double final_time = 0.1) {
    ProblemData d;
    d.y10 = [y10](double, double) { return y10; };
    d.y20 = [y20](double, double) { return y20; };
    d.y1d = [y1d](double, double, double) { return y1d; };
    d.y2d = [y2d](double, double, double) { return y2d; };
    d.final_time = final_time;
    return d;
}

/// Dense matrix int_Omega w phi_j phi_i by element quadrature, w a finite element function.
inline Eigen::MatrixXd weighted_mass(const FeSpace& space, const Eigen::VectorXd& w) {
    const int nd = space.dof_count();
    Eigen::MatrixXd out = Eigen::MatrixXd::Zero(nd, nd);
    const TriangleRule& rule = triangle_rule(6);
    std::array<double, 6> phi{};
    for (int t = 0; t < space.mesh().triangle_count(); ++t) {
        const auto dofs = space.element_dofs(t);
        const int nl = space.local_dof_count();
        const double det = std::abs(space.jacobian_det(t));
        for (std::size_t q = 0; q < rule.points.size(); ++q) {
            space.reference_values(rule.points[q], phi);
            double wq = 0.0;
            for (int a = 0; a < nl; ++a) wq += w[dofs[a]] * phi[a];
            const double f = rule.weights[q] * det * wq;
            for (int a = 0; a < nl; ++a) {
                for (int b = 0; b < nl; ++b) out(dofs[a], dofs[b]) += f * phi[a] * phi[b];
            }
        }
    }
    return out;
}

/// Independent nonlinear implicit-Euler stepper for the k = 0 state
/// equations with dense matrices. Returns the end value of every step as
/// (y1, y2) stacked over all dofs; constrained dofs stay zero.
inline std::vector<Eigen::VectorXd> implicit_euler(const Problem& pb, const ControlPair& g, double tol = 1e-12) {
    const FeSpace& space = pb.space();
    const ModelParams& p = pb.params();
    const int nd = space.dof_count();
    const Eigen::MatrixXd m = Eigen::MatrixXd(assemble_mass(space));
    const Eigen::MatrixXd k = Eigen::MatrixXd(assemble_stiffness(space));
    const bool robin = p.kind == ControlKind::Robin;
    const Eigen::MatrixXd bnd = robin ? Eigen::MatrixXd(assemble_boundary_mass(space)) : Eigen::MatrixXd::Zero(nd, nd);
    std::vector<int> freed;
    for (int i = 0; i < nd; ++i) {
        if (robin || !space.is_dirichlet(i)) freed.push_back(i);
    }
    const int nf = static_cast<int>(freed.size());
    const Eigen::MatrixXd l1 = p.eps1 * k + p.lambda1 * bnd - p.a * m;
    const Eigen::MatrixXd l2 = p.eps2 * k + p.lambda2 * bnd + p.d * m;

    auto control_volume = [&](int s, int n) {
        Eigen::VectorXd v = Eigen::VectorXd::Zero(nd);
        const auto node = g[s].node(n, 0);
        if (robin) {
            for (int q = 0; q < node.size(); ++q) v[pb.trace_map()[q]] = node[q];
            return Eigen::VectorXd(p.lambda(s) * (bnd * v));
        }
        for (int q = 0; q < node.size(); ++q) v[q] = space.is_dirichlet(q) ? 0.0 : node[q];
        return Eigen::VectorXd(m * v);
    };

    std::vector<Eigen::VectorXd> out;
    Eigen::VectorXd y1 = pb.initial(0), y2 = pb.initial(1);
    for (int n = 0; n < pb.grid().intervals(); ++n) {
        const double tau = pb.grid().tau(n);
        const Eigen::VectorXd b1 = m * y1 + pb.forcing_load(0).node(n, 0) + tau * control_volume(0, n);
        const Eigen::VectorXd b2 = m * y2 + pb.forcing_load(1).node(n, 0) + tau * control_volume(1, n);
        Eigen::VectorXd x1 = y1, x2 = y2;
        for (int i = 0; i < nd; ++i) {
            if (!robin && space.is_dirichlet(i)) x1[i] = x2[i] = 0.0;
        }
        for (int it = 0;; ++it) {
            const Eigen::MatrixXd w1 = weighted_mass(space, x1), w2 = weighted_mass(space, x2);
            const Eigen::VectorXd prod = w2 * x1;
            const Eigen::VectorXd r1 = m * x1 + tau * (l1 * x1) + tau * p.b * prod - b1;
            const Eigen::VectorXd r2 = m * x2 + tau * (l2 * x2) - tau * p.c * prod - b2;
            Eigen::VectorXd r(2 * nf);
            Eigen::MatrixXd jac(2 * nf, 2 * nf);
            const Eigen::MatrixXd j11 = m + tau * l1 + tau * p.b * w2, j12 = tau * p.b * w1;
            const Eigen::MatrixXd j21 = -tau * p.c * w2, j22 = m + tau * l2 - tau * p.c * w1;
            for (int i = 0; i < nf; ++i) {
                r[i] = r1[freed[i]];
                r[nf + i] = r2[freed[i]];
                for (int j = 0; j < nf; ++j) {
                    jac(i, j) = j11(freed[i], freed[j]);
                    jac(i, nf + j) = j12(freed[i], freed[j]);
                    jac(nf + i, j) = j21(freed[i], freed[j]);
                    jac(nf + i, nf + j) = j22(freed[i], freed[j]);
                }
            }
            if (r.norm() <= tol || it == 30) break;
            const Eigen::VectorXd dx = jac.partialPivLu().solve(-r);
            for (int i = 0; i < nf; ++i) {
                x1[freed[i]] += dx[i];
                x2[freed[i]] += dx[nf + i];
            }
        }
        y1 = x1;
        y2 = x2;
        Eigen::VectorXd both(2 * nd);
        both << y1, y2;
        out.push_back(both);
    }
    return out;
}

}  // namespace lvoc::fixture
