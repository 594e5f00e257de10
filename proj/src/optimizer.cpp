#include "lvoc/optimizer.hpp"

#include <algorithm>
#include <cmath>
#include <exception>
#include <limits>

#include "lvoc/errors.hpp"

namespace lvoc {

void NcgConfig::validate() const {
    if (!(sigma > 0.0 && sigma <= rho && rho < 1.0)) throw std::invalid_argument("NcgConfig: need 0 < sigma <= rho < 1");
    if (!(tol > 0.0)) throw std::invalid_argument("NcgConfig: tol must be positive");
    if (!(eps0 > 0.0)) throw std::invalid_argument("NcgConfig: eps0 must be positive");
    if (!(step_shrink > 0.0 && step_shrink < 1.0)) throw std::invalid_argument("NcgConfig: step_shrink must lie in (0, 1)");
    if (!(step_grow > 1.0)) throw std::invalid_argument("NcgConfig: step_grow must exceed 1");
    if (max_outer < 1 || max_line < 1) throw std::invalid_argument("NcgConfig: iteration caps must be positive");
}

std::string to_string(Termination t) {
    switch (t) {
    case Termination::Converged: return "converged";
    case Termination::MaxIterations: return "max-iter";
    case Termination::LineSearchFailure: return "line-search-failure";
    }
    return "unknown";
}

namespace {

bool armijo(double v, double phi0, double dphi0, double alpha, double sigma) {
    return std::isfinite(v) && v <= phi0 + sigma * alpha * dphi0;
}

LineSearchResult scaled_search(const LineFunction& phi, double phi0, double dphi0, double alpha0, const NcgConfig& cfg) {
    double alpha = alpha0;
    for (int trials = 1; trials <= cfg.max_line; ++trials) {
        const double v = phi.value(alpha);
        if (!armijo(v, phi0, dphi0, alpha, cfg.sigma)) {
            alpha *= cfg.step_shrink;
            continue;
        }
        const double s = phi.slope(alpha);
        if (std::abs(s) <= -cfg.rho * dphi0) return {alpha, v, s, trials};
        alpha *= s < 0.0 ? cfg.step_grow : cfg.step_shrink;
    }
    throw LineSearchFailure(cfg.max_line, alpha);
}

LineSearchResult bracketing_search(const LineFunction& phi, double phi0, double dphi0, double alpha0,
                                   const NcgConfig& cfg) {
    int trials = 0;
    double lo = 0.0, f_lo = phi0, d_lo = dphi0;
    double hi = 0.0, f_hi = 0.0;
    bool bracketed = false;
    double alpha = alpha0;

    while (!bracketed) {
        if (trials == cfg.max_line) throw LineSearchFailure(trials, alpha);
        ++trials;
        const double v = phi.value(alpha);
        if (!armijo(v, phi0, dphi0, alpha, cfg.sigma) || (trials > 1 && v >= f_lo)) {
            hi = alpha;
            f_hi = v;
            bracketed = true;
            break;
        }
        const double s = phi.slope(alpha);
        if (std::abs(s) <= -cfg.rho * dphi0) return {alpha, v, s, trials};
        if (s >= 0.0) {
            hi = lo;
            f_hi = f_lo;
            lo = alpha;
            f_lo = v;
            d_lo = s;
            bracketed = true;
            break;
        }
        lo = alpha;
        f_lo = v;
        d_lo = s;
        alpha *= 2.0;
    }

    // zoom: lo satisfies Armijo with the lowest value seen, hi bounds the step
    for (;;) {
        if (trials == cfg.max_line) throw LineSearchFailure(trials, alpha);
        ++trials;
        const double width = hi - lo;
        double trial = lo + 0.5 * width;
        if (std::isfinite(f_hi)) {
            // minimizer of the quadratic through (lo, f_lo, d_lo) and (hi, f_hi)
            const double denom = 2.0 * (f_hi - f_lo - d_lo * width);
            if (denom > 0.0) trial = lo - d_lo * width * width / denom;
        }
        const double a = std::min(lo, hi), b = std::max(lo, hi);
        const double margin = 0.1 * (b - a);
        if (!(trial >= a + margin && trial <= b - margin)) trial = 0.5 * (lo + hi);
        alpha = trial;

        const double v = phi.value(alpha);
        if (!armijo(v, phi0, dphi0, alpha, cfg.sigma) || v >= f_lo) {
            hi = alpha;
            f_hi = v;
            continue;
        }
        const double s = phi.slope(alpha);
        if (std::abs(s) <= -cfg.rho * dphi0) return {alpha, v, s, trials};
        if (s * (hi - lo) >= 0.0) {
            hi = lo;
            f_hi = f_lo;
        }
        lo = alpha;
        f_lo = v;
        d_lo = s;
    }
}

double lower_bound(const ModelParams& p) { return p.g_lo.value_or(-std::numeric_limits<double>::infinity()); }
double upper_bound(const ModelParams& p) { return p.g_hi.value_or(std::numeric_limits<double>::infinity()); }

/// Coefficients of P(g + alpha d) that move with alpha; alpha = 0 means 0+.
ControlPair free_part(const Problem& problem, const ControlPair& g, const ControlPair& d, double alpha) {
    const double lo = lower_bound(problem.params()), hi = upper_bound(problem.params());
    ControlPair out = d;
    for (int s = 0; s < 2; ++s) {
        const auto& gv = g[s].data();
        auto& dv = out[s].data();
        for (Eigen::Index q = 0; q < dv.size(); ++q) {
            bool moving;
            if (alpha > 0.0) {
                const double x = gv[q] + alpha * dv[q];
                moving = x > lo && x < hi;
            } else {
                moving = (gv[q] > lo || dv[q] > 0.0) && (gv[q] < hi || dv[q] < 0.0);
            }
            if (!moving) dv[q] = 0.0;
        }
    }
    return out;
}

std::vector<char> active_set(const Problem& problem, const ControlPair& g) {
    const double lo = lower_bound(problem.params()), hi = upper_bound(problem.params());
    std::vector<char> out;
    for (int s = 0; s < 2; ++s) {
        for (double v : g[s].data()) out.push_back(v <= lo || v >= hi);
    }
    return out;
}

IterationRecord record(int iteration, const Evaluation& e, double grad_norm, double step, double beta, int trials,
                       bool restarted) {
    IterationRecord r{iteration, e.J, grad_norm, step, beta, trials, restarted};
    r.control_min = std::min(e.controls.g1.data().minCoeff(), e.controls.g2.data().minCoeff());
    r.control_max = std::max(e.controls.g1.data().maxCoeff(), e.controls.g2.data().maxCoeff());
    return r;
}

}  // namespace

LineSearchResult wolfe_search(const LineFunction& phi, double phi0, double dphi0, double alpha0, const NcgConfig& cfg) {
    if (!(dphi0 < 0.0)) throw std::invalid_argument("wolfe_search: phi'(0) must be negative");
    if (!(alpha0 > 0.0)) throw std::invalid_argument("wolfe_search: initial step must be positive");
    LineSearchResult r = cfg.line_search == LineSearchKind::Scaled ? scaled_search(phi, phi0, dphi0, alpha0, cfg)
                                                                   : bracketing_search(phi, phi0, dphi0, alpha0, cfg);
    if (!(r.value <= phi0 + cfg.sigma * r.alpha * dphi0) || !(std::abs(r.slope) <= -cfg.rho * dphi0)) {
        throw std::logic_error("wolfe_search: accepted step violates the strong Wolfe conditions");
    }
    return r;
}

ControlPair reduced_gradient(const Problem& problem, const ControlPair& controls, const ControlPair& grad) {
    const double lo = lower_bound(problem.params()), hi = upper_bound(problem.params());
    ControlPair out = grad;
    for (int s = 0; s < 2; ++s) {
        const auto& g = controls[s].data();
        auto& r = out[s].data();
        for (Eigen::Index q = 0; q < r.size(); ++q) {
            if ((g[q] <= lo && r[q] > 0.0) || (g[q] >= hi && r[q] < 0.0)) r[q] = 0.0;
        }
    }
    return out;
}

Direction fr_direction(const Problem& problem, const ControlPair& grad_now, const ControlPair* grad_prev,
                       const ControlPair* dir_prev, bool restart) {
    Direction out{scale(grad_now, -1.0), 0.0, true};
    if (restart || !grad_prev || !dir_prev) return out;
    const double prev = inner(problem, *grad_prev, *grad_prev);
    if (!(prev > 0.0)) return out;
    const double beta = inner(problem, grad_now, grad_now) / prev;
    ControlPair d = axpy(out.d, beta, *dir_prev);
    if (inner(problem, d, grad_now) >= 0.0) return out;
    return {std::move(d), beta, false};
}

OptRun optimize(const Problem& problem, const NcgConfig& cfg, const std::optional<ControlPair>& start,
                const IterationCallback& on_iteration) {
    cfg.validate();
    ReducedObjective objective(problem, cfg.adjoint, cfg.newton);
    OptRun run;
    int iteration = 0;

    auto guarded = [&](auto&& fn) {
        try {
            return fn();
        } catch (const std::exception& e) {
            std::throw_with_nested(OptimizerFailure(iteration, e.what()));
        }
    };

    const ControlPair g0 = project(problem, start ? *start : problem.constant_control(cfg.g0));
    Evaluation current = guarded([&] { return objective.evaluate(g0, true); });
    run.J_history.push_back(current.J);

    ControlPair reduced = reduced_gradient(problem, current.controls, *current.grad);
    std::optional<ControlPair> reduced_prev, dir_prev;
    bool restart = true;
    double eps = cfg.eps0;

    auto finish = [&](Termination t) {
        run.termination = t;
        run.final = std::move(current);
        run.state_solves = objective.state_solves();
        run.adjoint_solves = objective.adjoint_solves();
        return std::move(run);
    };

    for (iteration = 1; iteration <= cfg.max_outer; ++iteration) {
        Direction dir = fr_direction(problem, reduced, reduced_prev ? &*reduced_prev : nullptr,
                                     dir_prev ? &*dir_prev : nullptr, restart);
        double dphi0 = inner(problem, *current.grad, free_part(problem, current.controls, dir.d, 0.0));
        if (!(dphi0 < 0.0) && !dir.restarted) {
            dir = fr_direction(problem, reduced, nullptr, nullptr, true);
            dphi0 = inner(problem, *current.grad, free_part(problem, current.controls, dir.d, 0.0));
        }
        if (!(dphi0 < 0.0)) {
            // projected gradient vanishes: no step changes J
            run.J_history.push_back(current.J);
            run.records.push_back(record(iteration, current, norm(problem, reduced), 0.0, 0.0, 0, dir.restarted));
            if (on_iteration) on_iteration(run.records.back());
            run.iterations = iteration;
            return finish(Termination::Converged);
        }

        Evaluation trial;
        double trial_alpha = -1.0;
        LineFunction phi;
        phi.value = [&](double alpha) {
            trial = guarded([&] { return objective.evaluate(project(problem, axpy(current.controls, alpha, dir.d)), false); });
            trial_alpha = alpha;
            return trial.J;
        };
        phi.slope = [&](double alpha) {
            if (alpha != trial_alpha) throw std::logic_error("line search slope requested before its value");
            guarded([&] {
                objective.complete(trial);
                return 0;
            });
            return inner(problem, *trial.grad, free_part(problem, current.controls, dir.d, alpha));
        };

        LineSearchResult step;
        int spent = 0;
        for (;;) {
            try {
                step = wolfe_search(phi, current.J, dphi0, eps, cfg);
                step.trials += spent;
                break;
            } catch (const LineSearchFailure& e) {
                if (dir.restarted) {
                    run.message = e.what();
                    run.iterations = iteration - 1;
                    return finish(Termination::LineSearchFailure);
                }
                // a conjugate direction failed; retry once along steepest descent
                spent += e.trials();
                dir = fr_direction(problem, reduced, nullptr, nullptr, true);
                dphi0 = inner(problem, *current.grad, free_part(problem, current.controls, dir.d, 0.0));
                if (!(dphi0 < 0.0)) {
                    run.message = e.what();
                    run.iterations = iteration - 1;
                    return finish(Termination::LineSearchFailure);
                }
            }
        }

        const double J_old = current.J;
        const bool active_changed = active_set(problem, current.controls) != active_set(problem, trial.controls);
        restart = cfg.restart_on_active_change && active_changed;
        reduced_prev = std::move(reduced);
        dir_prev = std::move(dir.d);
        current = std::move(trial);
        reduced = reduced_gradient(problem, current.controls, *current.grad);
        eps = cfg.step_grow * step.alpha;

        run.J_history.push_back(current.J);
        run.betas.push_back(dir.beta);
        run.steps.push_back(step.alpha);
        run.records.push_back(
            record(iteration, current, norm(problem, reduced), step.alpha, dir.beta, step.trials, dir.restarted));
        if (on_iteration) on_iteration(run.records.back());
        run.iterations = iteration;

        const double change = std::abs(current.J - J_old);
        if (change == 0.0 || change <= cfg.tol * std::abs(current.J)) return finish(Termination::Converged);
    }
    run.iterations = cfg.max_outer;
    return finish(Termination::MaxIterations);
}

}  // namespace lvoc
