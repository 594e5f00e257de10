#include <gtest/gtest.h>

#include <cmath>

#include "lvoc/checks.hpp"
#include "lvoc/errors.hpp"
#include "lvoc/optimizer.hpp"
#include "support.hpp"

using namespace lvoc;

namespace {

LineFunction quadratic() {
    return {[](double a) { return a * a - 2.0 * a; }, [](double a) { return 2.0 * a - 2.0; }};
}

// Targets equal to the uncontrolled trajectory: J = gamma/2 |g|^2 + O(|g|^2)
// with minimizer g = 0.
fixture::Setup surrogate(ControlKind kind, int k) {
    ModelParams p;
    p.kind = kind;
    ProblemData data = standard_data(p, InitialKind::Smooth);
    auto s = fixture::make_setup(p, data, 3, 1, k, 4);
    const StatePair free_run = solve_state(*s.problem, s.problem->constant_control(0.0));
    data.y1d_field = free_run.y1;
    data.y2d_field = free_run.y2;
    s.problem = std::make_unique<Problem>(p, data, s.space, s.grid, k);
    return s;
}

bool non_increasing(const std::vector<double>& v) {
    for (std::size_t i = 1; i < v.size(); ++i) {
        if (v[i] > v[i - 1]) return false;
    }
    return true;
}

}  // namespace

TEST(WolfeSearch, UnitStepOnParabola) {
    NcgConfig cfg;
    for (LineSearchKind kind : {LineSearchKind::Scaled, LineSearchKind::Bracketing}) {
        cfg.line_search = kind;
        const LineSearchResult r = wolfe_search(quadratic(), 0.0, -2.0, 1.0, cfg);
        EXPECT_DOUBLE_EQ(r.alpha, 1.0);
        EXPECT_DOUBLE_EQ(r.value, -1.0);
        EXPECT_EQ(r.trials, 1);
    }
}

TEST(WolfeSearch, ScaledScheduleShrinksAndGrows) {
    NcgConfig cfg;
    // from 4: phi(4) = 8 fails Armijo, 2 gives phi = 0 > -0.4 fails, 1 accepted
    const LineSearchResult big = wolfe_search(quadratic(), 0.0, -2.0, 4.0, cfg);
    EXPECT_DOUBLE_EQ(big.alpha, 1.0);
    EXPECT_EQ(big.trials, 3);
    // from 0.01 the slope stays below -rho * 2 until the step grows past 0.1
    const LineSearchResult small = wolfe_search(quadratic(), 0.0, -2.0, 0.01, cfg);
    EXPECT_GE(small.alpha, 0.1);
    EXPECT_LE(std::abs(2.0 * small.alpha - 2.0), 0.9 * 2.0);
    EXPECT_GT(small.trials, 1);
}

TEST(WolfeSearch, LinearDecreaseExhaustsTheBudget) {
    NcgConfig cfg;
    cfg.max_line = 12;
    const LineFunction linear{[](double a) { return -a; }, [](double) { return -1.0; }};
    for (LineSearchKind kind : {LineSearchKind::Scaled, LineSearchKind::Bracketing}) {
        cfg.line_search = kind;
        try {
            wolfe_search(linear, 0.0, -1.0, 1.0, cfg);
            FAIL() << "expected LineSearchFailure";
        } catch (const LineSearchFailure& e) {
            EXPECT_EQ(e.trials(), 12);
            EXPECT_GT(e.last_step(), 1.0);
        }
    }
}

TEST(WolfeSearch, RejectsAscentDirections) {
    const LineFunction up{[](double a) { return a; }, [](double) { return 1.0; }};
    EXPECT_THROW(wolfe_search(up, 0.0, 1.0, 1.0, NcgConfig{}), std::invalid_argument);
    EXPECT_THROW(wolfe_search(up, 0.0, 0.0, 1.0, NcgConfig{}), std::invalid_argument);
}

TEST(WolfeSearch, BracketingHandlesSteepValley) {
    NcgConfig cfg;
    cfg.line_search = LineSearchKind::Bracketing;
    // minimum at 1e-3
    const LineFunction f{[](double a) { return (a - 1e-3) * (a - 1e-3); }, [](double a) { return 2.0 * (a - 1e-3); }};
    const LineSearchResult r = wolfe_search(f, 1e-6, -2e-3, 1.0, cfg);
    EXPECT_LE(r.value, 1e-6 + 0.1 * r.alpha * -2e-3);
    EXPECT_LE(std::abs(r.slope), 0.9 * 2e-3);
}

TEST(NcgConfig, Validation) {
    NcgConfig cfg;
    EXPECT_NO_THROW(cfg.validate());
    cfg.sigma = 0.95;
    EXPECT_THROW(cfg.validate(), std::invalid_argument);
    cfg = {};
    cfg.tol = 0.0;
    EXPECT_THROW(cfg.validate(), std::invalid_argument);
    cfg = {};
    cfg.step_grow = 1.0;
    EXPECT_THROW(cfg.validate(), std::invalid_argument);
    cfg = {};
    cfg.max_line = 0;
    EXPECT_THROW(cfg.validate(), std::invalid_argument);
    EXPECT_EQ(to_string(Termination::Converged), "converged");
    EXPECT_EQ(to_string(Termination::MaxIterations), "max-iter");
    EXPECT_EQ(to_string(Termination::LineSearchFailure), "line-search-failure");
}

TEST(FletcherReeves, FirstIterationIsSteepestDescent) {
    auto s = surrogate(ControlKind::Robin, 0);
    const Problem& pb = *s.problem;
    const ControlPair g = random_direction(pb, 1);
    const Direction d = fr_direction(pb, g, nullptr, nullptr, false);
    EXPECT_TRUE(d.restarted);
    EXPECT_EQ(d.beta, 0.0);
    EXPECT_EQ(d.d.g1.data(), (-g.g1.data()).eval());
}

TEST(FletcherReeves, EqualGradientsGiveBetaOne) {
    auto s = surrogate(ControlKind::Robin, 0);
    const Problem& pb = *s.problem;
    const ControlPair g = random_direction(pb, 1);
    const ControlPair prev_dir = scale(g, -1.0);
    const Direction d = fr_direction(pb, g, &g, &prev_dir, false);
    EXPECT_FALSE(d.restarted);
    EXPECT_NEAR(d.beta, 1.0, 1e-15);
    EXPECT_LT((d.d.g1.data() + 2.0 * g.g1.data()).norm(), 1e-15);
    EXPECT_LT((d.d.g2.data() + 2.0 * g.g2.data()).norm(), 1e-15);
}

TEST(FletcherReeves, RestartsOnRequestAndOnAscent) {
    auto s = surrogate(ControlKind::Robin, 0);
    const Problem& pb = *s.problem;
    const ControlPair g = random_direction(pb, 1);
    const ControlPair prev_dir = scale(g, -1.0);
    const Direction forced = fr_direction(pb, g, &g, &prev_dir, true);
    EXPECT_TRUE(forced.restarted);
    EXPECT_EQ(forced.beta, 0.0);
    // previous direction pointing uphill strongly enough to spoil descent
    const ControlPair uphill = scale(g, 5.0);
    const Direction spoiled = fr_direction(pb, g, &g, &uphill, false);
    EXPECT_TRUE(spoiled.restarted);
    EXPECT_EQ(spoiled.beta, 0.0);
    const ControlPair zero = pb.constant_control(0.0);
    EXPECT_TRUE(fr_direction(pb, g, &zero, &prev_dir, false).restarted);
}

TEST(ReducedGradient, ZeroesOutwardComponentsAtBounds) {
    ModelParams p;
    p.g_lo = 0.0;
    p.g_hi = 0.1;
    auto s = fixture::make_setup(p, standard_data(p, InitialKind::Smooth), 3, 1, 0, 2);
    const Problem& pb = *s.problem;
    ControlPair g = pb.constant_control(0.0);
    g.g2 = pb.constant_control(0.1).g2;
    const ControlPair plus = pb.constant_control(1.0), minus = pb.constant_control(-1.0);
    const ControlPair r1 = reduced_gradient(pb, g, plus);
    EXPECT_EQ(r1.g1.data().norm(), 0.0);       // at lower bound, pushes outward
    EXPECT_EQ(r1.g2.data(), plus.g2.data());  // at upper bound, pushes inward
    const ControlPair r2 = reduced_gradient(pb, g, minus);
    EXPECT_EQ(r2.g1.data(), minus.g1.data());
    EXPECT_EQ(r2.g2.data().norm(), 0.0);
}

void expect_surrogate_solved(ControlKind kind, const NcgConfig& base) {
    auto s = surrogate(kind, 0);
    NcgConfig cfg = base;
    cfg.adjoint = AdjointMode::Full;
    cfg.max_outer = 20;
    const OptRun run = optimize(*s.problem, cfg);
    EXPECT_LE(run.iterations, 20);
    EXPECT_LE(norm(*s.problem, run.final.controls), 1e-4) << to_string(run.termination);
    EXPECT_TRUE(non_increasing(run.J_history));
    for (double beta : run.betas) EXPECT_GE(beta, 0.0);
}

TEST(Optimizer, QuadraticSurrogateDistributed) { expect_surrogate_solved(ControlKind::Distributed, NcgConfig{}); }

TEST(Optimizer, QuadraticSurrogateRobin) { expect_surrogate_solved(ControlKind::Robin, NcgConfig{}); }

// Fletcher-Reeves keeps its descent guarantee for a curvature constant below 1/2.
TEST(Optimizer, QuadraticSurrogateTightCurvature) {
    NcgConfig cfg;
    cfg.rho = 0.1;
    for (LineSearchKind kind : {LineSearchKind::Scaled, LineSearchKind::Bracketing}) {
        cfg.line_search = kind;
        expect_surrogate_solved(ControlKind::Distributed, cfg);
        expect_surrogate_solved(ControlKind::Robin, cfg);
    }
}

TEST(Optimizer, StationaryStartStopsImmediately) {
    auto s = surrogate(ControlKind::Robin, 1);
    NcgConfig cfg;
    cfg.adjoint = AdjointMode::Full;
    const OptRun run = optimize(*s.problem, cfg, s.problem->constant_control(0.0));
    EXPECT_EQ(run.termination, Termination::Converged);
    EXPECT_LE(run.iterations, 2);
    EXPECT_NEAR(run.final.J, 0.0, 1e-20);
}

TEST(Optimizer, RestartFromConvergedConstrainedRun) {
    ModelParams p;
    p.g_lo = 0.0;
    p.g_hi = 0.1;
    auto s = fixture::make_setup(p, standard_data(p, InitialKind::Smooth), 3, 1, 0, 4);
    NcgConfig cfg;
    const OptRun first = optimize(*s.problem, cfg);
    ASSERT_EQ(first.termination, Termination::Converged);
    const OptRun again = optimize(*s.problem, cfg, first.final.controls);
    EXPECT_EQ(again.termination, Termination::Converged);
    EXPECT_LE(again.iterations, 2);
}

TEST(Optimizer, IteratesRespectTheBounds) {
    ModelParams p;
    p.g_lo = 0.0;
    p.g_hi = 0.1;
    auto s = fixture::make_setup(p, standard_data(p, InitialKind::Smooth), 4, 1, 0, 6);
    for (LineSearchKind kind : {LineSearchKind::Scaled, LineSearchKind::Bracketing}) {
        NcgConfig cfg;
        cfg.line_search = kind;
        int seen = 0;
        const OptRun run = optimize(*s.problem, cfg, std::nullopt, [&](const IterationRecord& r) {
            ++seen;
            EXPECT_GE(r.control_min, 0.0);
            EXPECT_LE(r.control_max, 0.1);
        });
        EXPECT_EQ(seen, static_cast<int>(run.records.size()));
        EXPECT_GE(run.final.controls.g1.data().minCoeff(), 0.0);
        EXPECT_LE(run.final.controls.g2.data().maxCoeff(), 0.1);
        EXPECT_TRUE(non_increasing(run.J_history));
    }
}

TEST(Optimizer, IsDeterministic) {
    ModelParams p;
    p.kind = ControlKind::Robin;
    auto s = fixture::make_setup(p, standard_data(p, InitialKind::Rough), 3, 1, 0, 4);
    const OptRun a = optimize(*s.problem, NcgConfig{});
    const OptRun b = optimize(*s.problem, NcgConfig{});
    EXPECT_EQ(a.J_history, b.J_history);
    EXPECT_EQ(a.steps, b.steps);
}

TEST(Optimizer, WrapsSolverFailuresWithTheIteration) {
    ModelParams p;
    auto s = fixture::make_setup(p, standard_data(p, InitialKind::Smooth), 3, 1, 0, 4);
    NcgConfig cfg;
    cfg.newton.max_iterations = 0;
    try {
        optimize(*s.problem, cfg);
        FAIL() << "expected OptimizerFailure";
    } catch (const OptimizerFailure& e) {
        EXPECT_EQ(e.iteration(), 0);
        EXPECT_THROW(std::rethrow_if_nested(e), NonlinearSolverFailure);
    }
}
