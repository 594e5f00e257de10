#include <gtest/gtest.h>

#include <cmath>

#include "lvoc/checks.hpp"
#include "lvoc/objective.hpp"
#include "support.hpp"

using namespace lvoc;

namespace {

ModelParams bounded_params() {
    ModelParams p;
    p.g_lo = 0.0;
    p.g_hi = 0.1;
    return p;
}

}  // namespace

TEST(Objective, ZeroWhenOnTargetWithoutControl) {
    ModelParams p;
    p.kind = ControlKind::Robin;
    auto s = fixture::make_setup(p, fixture::constant_data(3.0, 4.0, 3.0, 4.0), 3, 2, 1, 4);
    const Problem& pb = *s.problem;
    StatePair st{pb.state_field(), pb.state_field(), {}, 0.0};
    st.y1.data().setConstant(3.0);
    st.y2.data().setConstant(4.0);
    EXPECT_NEAR(evaluate_J(pb, st, pb.constant_control(0.0)), 0.0, 1e-15);
}

TEST(Objective, UnitMismatchGivesHalfTimesTimeTimesSpecies) {
    ModelParams p;
    p.kind = ControlKind::Robin;
    for (int k : {0, 1}) {
        auto s = fixture::make_setup(p, fixture::constant_data(0.0, 0.0, 0.0, 0.0), 4, 1, k, 7);
        const Problem& pb = *s.problem;
        StatePair st{pb.state_field(), pb.state_field(), {}, 0.0};
        st.y1.data().setConstant(1.0);
        st.y2.data().setConstant(-1.0);
        const ObjectiveParts parts = objective_parts(pb, st, pb.constant_control(0.0));
        EXPECT_NEAR(parts.value, 0.1, 1e-13);
        EXPECT_NEAR(parts.distance[0], std::sqrt(0.1), 1e-13);
        EXPECT_NEAR(parts.distance[1], std::sqrt(0.1), 1e-13);
    }
}

TEST(Objective, ControlPenaltyOnDomainAndBoundary) {
    for (ControlKind kind : {ControlKind::Distributed, ControlKind::Robin}) {
        ModelParams p;
        p.kind = kind;
        p.gamma1 = 0.5;
        p.gamma2 = 2.0;
        auto s = fixture::make_setup(p, fixture::constant_data(0.0, 0.0, 0.0, 0.0), 6, 2, 0, 3);
        const Problem& pb = *s.problem;
        StatePair st{pb.state_field(), pb.state_field(), {}, 0.0};
        const ControlPair g = pb.constant_control(1.0);
        const ObjectiveParts parts = objective_parts(pb, st, g);
        const double measure = std::pow(parts.control_norm[0], 2) / 0.1;
        if (kind == ControlKind::Robin) {
            EXPECT_NEAR(measure, 4.0, 1e-12);  // perimeter
        } else {
            // free dofs only: the constant with a zero boundary layer
            EXPECT_GT(measure, 0.5);
            EXPECT_LT(measure, 1.0);
        }
        EXPECT_NEAR(parts.value, 0.5 * (0.5 + 2.0) * 0.1 * measure, 1e-12);
    }
}

TEST(Objective, GradientWithoutAdjointIsGammaTimesControl) {
    ModelParams p;
    p.gamma1 = 0.3;
    p.gamma2 = 0.7;
    auto s = fixture::make_setup(p, standard_data(p, InitialKind::Smooth), 3, 1, 1, 3);
    const Problem& pb = *s.problem;
    const AdjointPair zero{pb.state_field(), pb.state_field()};
    const ControlPair g = random_direction(pb, 5);
    const ControlPair grad = gradient(pb, zero, g);
    EXPECT_LT((grad.g1.data() - 0.3 * g.g1.data()).norm(), 1e-15);
    EXPECT_LT((grad.g2.data() - 0.7 * g.g2.data()).norm(), 1e-15);
}

TEST(Objective, GradientIsJointlyLinear) {
    for (ControlKind kind : {ControlKind::Distributed, ControlKind::Robin}) {
        ModelParams p;
        p.kind = kind;
        auto s = fixture::make_setup(p, standard_data(p, InitialKind::Smooth), 3, 1, 0, 3);
        const Problem& pb = *s.problem;
        AdjointPair m1{pb.state_field(), pb.state_field()}, m2 = m1, sum = m1;
        for (int sp = 0; sp < 2; ++sp) {
            m1[sp].data().setRandom();
            m2[sp].data().setRandom();
            for (int dof : s.space->dirichlet_dofs()) {
                m1[sp].data()[dof] = 0.0;
                m2[sp].data()[dof] = 0.0;
            }
            sum[sp].data() = m1[sp].data() + 2.0 * m2[sp].data();
        }
        const ControlPair g1 = random_direction(pb, 1), g2 = random_direction(pb, 2);
        const ControlPair lhs = gradient(pb, sum, axpy(g1, 2.0, g2));
        const ControlPair rhs = axpy(gradient(pb, m1, g1), 2.0, gradient(pb, m2, g2));
        for (int sp = 0; sp < 2; ++sp) EXPECT_LT((lhs[sp].data() - rhs[sp].data()).norm(), 1e-13);
    }
}

TEST(Objective, ProjectionExamples) {
    auto s = fixture::make_setup(bounded_params(), standard_data(bounded_params(), InitialKind::Smooth), 3, 1, 0, 2);
    const Problem& pb = *s.problem;
    const int free_dof = [&] {
        for (int i = 0; i < pb.ndof(); ++i) {
            if (!pb.control_fixed()[i]) return i;
        }
        return -1;
    }();
    ASSERT_GE(free_dof, 0);
    ControlPair g = pb.constant_control(0.0);
    g.g1.node(0, 0)[free_dof] = 0.5;
    g.g1.node(1, 0)[free_dof] = -3.0;
    g.g2.node(0, 0)[free_dof] = 0.05;
    const ControlPair q = project(pb, g);
    EXPECT_DOUBLE_EQ(q.g1.node(0, 0)[free_dof], 0.1);
    EXPECT_DOUBLE_EQ(q.g1.node(1, 0)[free_dof], 0.0);
    EXPECT_DOUBLE_EQ(q.g2.node(0, 0)[free_dof], 0.05);
    const ControlPair qq = project(pb, q);
    EXPECT_EQ(qq.g1.data(), q.g1.data());
    EXPECT_EQ(qq.g2.data(), q.g2.data());
}

TEST(Objective, ProjectionIsNonExpansiveAndKeepsPinnedDofs) {
    auto s = fixture::make_setup(bounded_params(), standard_data(bounded_params(), InitialKind::Smooth), 4, 2, 1, 3);
    const Problem& pb = *s.problem;
    for (std::uint64_t seed = 1; seed <= 5; ++seed) {
        const ControlPair u = scale(random_direction(pb, seed), 3.0);
        const ControlPair w = scale(random_direction(pb, seed + 100), 3.0);
        const ControlPair pu = project(pb, u), pw = project(pb, w);
        for (int sp = 0; sp < 2; ++sp) {
            EXPECT_LE((pu[sp].data() - pw[sp].data()).lpNorm<Eigen::Infinity>(),
                      (u[sp].data() - w[sp].data()).lpNorm<Eigen::Infinity>() + 1e-15);
            EXPECT_GE(pu[sp].data().minCoeff(), 0.0);
            EXPECT_LE(pu[sp].data().maxCoeff(), 0.1);
            const int dim = pb.control_dim();
            for (Eigen::Index q = 0; q < pu[sp].data().size(); ++q) {
                if (pb.control_fixed()[q % dim]) {
                    EXPECT_EQ(pu[sp].data()[q], 0.0);
                }
            }
        }
    }
}

TEST(Objective, ViResidualSignCases) {
    auto s = fixture::make_setup(bounded_params(), standard_data(bounded_params(), InitialKind::Smooth), 3, 1, 0, 3);
    const Problem& pb = *s.problem;
    // at the lower bound with a positive gradient: optimal
    EXPECT_LE(vi_residual(pb, pb.constant_control(0.0), pb.constant_control(1.0)), 0.0);
    // at the upper bound with a negative gradient: optimal
    EXPECT_LE(vi_residual(pb, pb.constant_control(0.1), pb.constant_control(-1.0)), 0.0);
    // interior with zero gradient
    EXPECT_LE(vi_residual(pb, pb.constant_control(0.05), pb.constant_control(0.0)), 1e-6);
    // interior with a nonzero gradient is not optimal; probe u = 0 gives (grad, g)
    const double r = vi_residual(pb, pb.constant_control(0.05), pb.constant_control(1.0));
    EXPECT_NEAR(r, inner(pb, pb.constant_control(1.0), pb.constant_control(0.05)), 1e-14);
    EXPECT_GT(r, 0.0);
}

TEST(Objective, SecondDirectionalValue) {
    ModelParams p;
    p.kind = ControlKind::Robin;
    auto s = fixture::make_setup(p, standard_data(p, InitialKind::Smooth), 3, 1, 0, 4);
    const Problem& pb = *s.problem;
    const StatePair st = solve_state(pb, pb.constant_control(1.0));
    const ControlPair zero = pb.constant_control(0.0);
    EXPECT_EQ(second_directional(pb, solve_tangent(pb, st, zero, AdjointMode::Diagonal), zero), 0.0);
    const ControlPair v = random_direction(pb, 9);
    const double value = second_directional(pb, solve_tangent(pb, st, v, AdjointMode::Diagonal), v);
    EXPECT_GE(value, std::min(p.gamma1, p.gamma2) * std::pow(norm(pb, v), 2));
}

TEST(Objective, GradientMatchesCentralDifferencesInFullMode) {
    for (ControlKind kind : {ControlKind::Distributed, ControlKind::Robin}) {
        ModelParams p;
        p.kind = kind;
        auto s = fixture::make_setup(p, standard_data(p, InitialKind::Smooth), 3, 1, 0, 6);
        CheckOptions opt;
        opt.directions = 4;
        const CheckResult r = gradient_check(*s.problem, AdjointMode::Full, opt);
        EXPECT_TRUE(r.pass) << r.max_error;
        EXPECT_EQ(r.errors.size(), 4u);
    }
}

TEST(Objective, SecondDifferenceMatchesInFullMode) {
    for (ControlKind kind : {ControlKind::Distributed, ControlKind::Robin}) {
        ModelParams p;
        p.kind = kind;
        auto s = fixture::make_setup(p, standard_data(p, InitialKind::Smooth), 3, 1, 1, 4);
        CheckOptions opt;
        opt.directions = 3;
        opt.step = 1e-3;
        opt.threshold = 1e-3;
        const CheckResult r = second_order_check(*s.problem, AdjointMode::Full, opt);
        EXPECT_TRUE(r.pass) << r.max_error;
    }
}

TEST(Objective, ReducedObjectiveCountsSolves) {
    ModelParams p;
    auto s = fixture::make_setup(p, standard_data(p, InitialKind::Smooth), 3, 1, 0, 3);
    ReducedObjective f(*s.problem, AdjointMode::Diagonal);
    Evaluation e = f.evaluate(s.problem->constant_control(1.0), false);
    EXPECT_FALSE(e.grad.has_value());
    f.complete(e);
    ASSERT_TRUE(e.grad.has_value());
    EXPECT_EQ(f.state_solves(), 1);
    EXPECT_EQ(f.adjoint_solves(), 1);
    const Evaluation direct = f.evaluate(s.problem->constant_control(1.0), true);
    EXPECT_EQ(direct.J, e.J);
    EXPECT_EQ(direct.grad->g1.data(), e.grad->g1.data());
}
