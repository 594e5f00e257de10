#include "lvoc/dynamics.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "lvoc/errors.hpp"

namespace lvoc {

void KineticsParams::validate() const {
    for (double v : {a, b, c, d, g1, g2}) {
        if (!std::isfinite(v)) throw std::invalid_argument("KineticsParams: non-finite parameter");
    }
    if (b == 0.0 || c == 0.0) throw std::invalid_argument("KineticsParams: b and c must be nonzero");
}

Eigen::Vector2d KineticsParams::rhs(const Eigen::Vector2d& y) const {
    return {(a - b * y[1]) * y[0] + g1, (c * y[0] - d) * y[1] + g2};
}

Eigen::Matrix2d KineticsParams::jacobian(const Eigen::Vector2d& y) const {
    Eigen::Matrix2d j;
    j << a - b * y[1], -b * y[0], c * y[1], c * y[0] - d;
    return j;
}

std::string to_string(FixedPointClass c) {
    switch (c) {
    case FixedPointClass::Saddle: return "saddle";
    case FixedPointClass::StableNode: return "stable-node";
    case FixedPointClass::UnstableNode: return "unstable-node";
    case FixedPointClass::StableSpiral: return "stable-spiral";
    case FixedPointClass::UnstableSpiral: return "unstable-spiral";
    case FixedPointClass::CenterBorderline: return "center-borderline";
    }
    return "unknown";
}

FixedPointReport classify(const KineticsParams& p, const Eigen::Vector2d& point) {
    if (!point.allFinite()) throw std::invalid_argument("classify: non-finite point");
    FixedPointReport r;
    r.location = point;
    r.jacobian = p.jacobian(point);
    r.trace = r.jacobian.trace();
    r.determinant = r.jacobian(0, 0) * r.jacobian(1, 1) - r.jacobian(0, 1) * r.jacobian(1, 0);
    r.discriminant = r.trace * r.trace - 4.0 * r.determinant;
    const double band = 1e-12 * std::max(r.jacobian.cwiseAbs().maxCoeff(), 1e-300);

    if (r.determinant < 0.0) {
        r.cls = FixedPointClass::Saddle;
    } else if (r.determinant == 0.0) {
        r.cls = FixedPointClass::CenterBorderline;
        r.note = "zero determinant: non-isolated equilibrium";
    } else if (std::abs(r.trace) <= band) {
        r.cls = FixedPointClass::CenterBorderline;
        r.note = "trace within round-off of zero: linear center with stability set by higher order terms";
    } else if (r.discriminant < 0.0) {
        r.cls = r.trace < 0.0 ? FixedPointClass::StableSpiral : FixedPointClass::UnstableSpiral;
    } else {
        r.cls = r.trace < 0.0 ? FixedPointClass::StableNode : FixedPointClass::UnstableNode;
    }
    return r;
}

namespace {

bool newton_root(const KineticsParams& p, Eigen::Vector2d& y) {
    for (int it = 0; it < 100; ++it) {
        const Eigen::Vector2d f = p.rhs(y);
        if (f.lpNorm<Eigen::Infinity>() <= 1e-12 * std::max(1.0, y.lpNorm<Eigen::Infinity>())) return true;
        const Eigen::Matrix2d j = p.jacobian(y);
        const double det = j.determinant();
        if (det == 0.0 || !std::isfinite(det)) return false;
        y -= j.partialPivLu().solve(f);
        if (!y.allFinite()) return false;
    }
    return p.rhs(y).lpNorm<Eigen::Infinity>() <= 1e-10;
}

}  // namespace

std::vector<FixedPointReport> fixed_points(const KineticsParams& p) {
    p.validate();
    std::vector<FixedPointReport> out;
    if (p.g1 == 0.0 && p.g2 == 0.0) {
        out.push_back(classify(p, Eigen::Vector2d(0.0, 0.0)));
        out.push_back(classify(p, Eigen::Vector2d(p.d / p.c, p.a / p.b)));
        return out;
    }

    // y2 = (a + g1 / y1) / b turns the system into c a y1^2 + (c g1 - d a + b g2) y1 - d g1 = 0
    std::vector<Eigen::Vector2d> seeds{{p.d / p.c, p.a / p.b}};
    const double qa = p.c * p.a, qb = p.c * p.g1 - p.d * p.a + p.b * p.g2, qc = -p.d * p.g1;
    if (qa != 0.0) {
        const double disc = qb * qb - 4.0 * qa * qc;
        if (disc >= 0.0) {
            const double q = -0.5 * (qb + std::copysign(std::sqrt(disc), qb));
            for (double y1 : {q / qa, q != 0.0 ? qc / q : 0.0}) {
                if (y1 != 0.0) seeds.emplace_back(y1, (p.a + p.g1 / y1) / p.b);
            }
        }
    }

    bool any = false;
    for (Eigen::Vector2d y : seeds) {
        if (!y.allFinite() || !newton_root(p, y)) continue;
        any = true;
        if (!(y[0] > 0.0 && y[1] > 0.0)) continue;
        const bool seen = std::any_of(out.begin(), out.end(), [&](const FixedPointReport& r) {
            return (r.location - y).norm() <= 1e-8 * std::max(1.0, y.norm());
        });
        if (!seen) out.push_back(classify(p, y));
    }
    if (!any) throw RootFindFailure("fixed_points: Newton did not converge from any seed");
    return out;
}

std::vector<Polyline> nullclines(const KineticsParams& p, const Box& box, int samples) {
    p.validate();
    if (samples < 2) throw std::invalid_argument("nullclines: need at least two samples");
    auto inside = [&](const Eigen::Vector2d& y) {
        return y[0] >= box.y1_min && y[0] <= box.y1_max && y[1] >= box.y2_min && y[1] <= box.y2_max;
    };
    auto sweep = [&](double lo, double hi, auto&& point, const std::string& id, std::vector<Polyline>& out) {
        if (!(hi > lo)) return;
        Polyline line{id, {}};
        for (int i = 0; i < samples; ++i) {
            const double s = lo + (hi - lo) * i / (samples - 1);
            const Eigen::Vector2d y = point(s);
            if (y.allFinite() && inside(y)) line.points.push_back(y);
        }
        if (!line.points.empty()) out.push_back(std::move(line));
    };
    // parameter ranges that exclude the pole at zero
    auto positive_part = [](double lo, double hi) { return std::pair{std::max(lo, 0.0), hi}; };
    auto negative_part = [](double lo, double hi) { return std::pair{lo, std::min(hi, 0.0)}; };
    auto open_sweep = [&](std::pair<double, double> range, auto&& point, const std::string& id,
                          std::vector<Polyline>& out) {
        double lo = range.first, hi = range.second;
        const double pad = 1e-9 * std::max(1.0, hi - lo);
        if (lo == 0.0) lo += pad;
        if (hi == 0.0) hi -= pad;
        sweep(lo, hi, point, id, out);
    };

    std::vector<Polyline> out;
    if (p.g1 == 0.0) {
        sweep(box.y2_min, box.y2_max, [](double s) { return Eigen::Vector2d(0.0, s); }, "phi1_axis", out);
        sweep(box.y1_min, box.y1_max, [&](double s) { return Eigen::Vector2d(s, p.a / p.b); }, "phi1_line", out);
    } else {
        auto branch = [&](double y1) { return Eigen::Vector2d(y1, (p.a + p.g1 / y1) / p.b); };
        open_sweep(positive_part(box.y1_min, box.y1_max), branch, "phi1_pos", out);
        open_sweep(negative_part(box.y1_min, box.y1_max), branch, "phi1_neg", out);
    }
    if (p.g2 == 0.0) {
        sweep(box.y1_min, box.y1_max, [](double s) { return Eigen::Vector2d(s, 0.0); }, "phi2_axis", out);
        sweep(box.y2_min, box.y2_max, [&](double s) { return Eigen::Vector2d(p.d / p.c, s); }, "phi2_line", out);
    } else {
        auto branch = [&](double y2) { return Eigen::Vector2d((p.d - p.g2 / y2) / p.c, y2); };
        open_sweep(positive_part(box.y2_min, box.y2_max), branch, "phi2_pos", out);
        open_sweep(negative_part(box.y2_min, box.y2_max), branch, "phi2_neg", out);
    }
    return out;
}

std::vector<OrbitSample> phase_trajectory(const KineticsParams& p, const Eigen::Vector2d& start, double t_end,
                                          double dt_out, const OrbitOptions& options) {
    p.validate();
    if (!(start[0] > 0.0 && start[1] > 0.0)) throw std::invalid_argument("phase_trajectory: start must be positive");
    if (!(t_end > 0.0) || !(dt_out > 0.0)) throw std::invalid_argument("phase_trajectory: need t_end, dt_out > 0");

    // Dormand-Prince tableau
    static constexpr double a21 = 1.0 / 5;
    static constexpr double a31 = 3.0 / 40, a32 = 9.0 / 40;
    static constexpr double a41 = 44.0 / 45, a42 = -56.0 / 15, a43 = 32.0 / 9;
    static constexpr double a51 = 19372.0 / 6561, a52 = -25360.0 / 2187, a53 = 64448.0 / 6561, a54 = -212.0 / 729;
    static constexpr double a61 = 9017.0 / 3168, a62 = -355.0 / 33, a63 = 46732.0 / 5247, a64 = 49.0 / 176,
                            a65 = -5103.0 / 18656;
    static constexpr double b1 = 35.0 / 384, b3 = 500.0 / 1113, b4 = 125.0 / 192, b5 = -2187.0 / 6784, b6 = 11.0 / 84;
    static constexpr double e1 = 71.0 / 57600, e3 = -71.0 / 16695, e4 = 71.0 / 1920, e5 = -17253.0 / 339200,
                            e6 = 22.0 / 525, e7 = -1.0 / 40;

    std::vector<OrbitSample> out{{0.0, start}};
    Eigen::Vector2d y = start;
    Eigen::Vector2d k1 = p.rhs(y);
    double t = 0.0;
    double h = std::min(dt_out, 1e-3);
    long steps = 0;
    int next = 1;
    const int count = static_cast<int>(std::floor(t_end / dt_out * (1.0 + 1e-12)));

    while (next <= count) {
        const double target = std::min(next * dt_out, t_end);
        const bool lands = t + h >= target;
        const double step = lands ? target - t : h;
        const Eigen::Vector2d k2 = p.rhs(y + step * a21 * k1);
        const Eigen::Vector2d k3 = p.rhs(y + step * (a31 * k1 + a32 * k2));
        const Eigen::Vector2d k4 = p.rhs(y + step * (a41 * k1 + a42 * k2 + a43 * k3));
        const Eigen::Vector2d k5 = p.rhs(y + step * (a51 * k1 + a52 * k2 + a53 * k3 + a54 * k4));
        const Eigen::Vector2d k6 = p.rhs(y + step * (a61 * k1 + a62 * k2 + a63 * k3 + a64 * k4 + a65 * k5));
        const Eigen::Vector2d y5 = y + step * (b1 * k1 + b3 * k3 + b4 * k4 + b5 * k5 + b6 * k6);
        const Eigen::Vector2d k7 = p.rhs(y5);
        const Eigen::Vector2d err = step * (e1 * k1 + e3 * k3 + e4 * k4 + e5 * k5 + e6 * k6 + e7 * k7);

        double ratio = 0.0;
        for (int i = 0; i < 2; ++i) {
            const double scale = options.tol * (1.0 + std::max(std::abs(y[i]), std::abs(y5[i])));
            ratio = std::max(ratio, std::abs(err[i]) / scale);
        }
        if (++steps > options.max_steps) throw std::runtime_error("phase_trajectory: step limit reached");

        if (ratio <= 1.0 && y5.allFinite()) {
            t = lands ? target : t + step;
            y = y5;
            k1 = k7;
            if (y.lpNorm<Eigen::Infinity>() > options.blowup) {
                throw BlowUpDetected(static_cast<std::size_t>(steps), y.lpNorm<Eigen::Infinity>());
            }
            if (lands) {
                out.push_back({t, y});
                ++next;
            }
        }
        const double factor = ratio > 0.0 ? 0.9 * std::pow(ratio, -0.2) : 5.0;
        const double grown = step * std::clamp(factor, 0.2, 5.0);
        // a step shortened to hit an output time says nothing about the usable step size
        h = lands && ratio <= 1.0 ? std::max(h, grown) : grown;
        if (!(h > 1e-14 * std::max(1.0, t))) throw BlowUpDetected(static_cast<std::size_t>(steps), y.lpNorm<Eigen::Infinity>());
    }
    return out;
}

double first_integral(const KineticsParams& p, const Eigen::Vector2d& y) {
    return p.c * y[0] - p.d * std::log(y[0]) + p.b * y[1] - p.a * std::log(y[1]);
}

}  // namespace lvoc
