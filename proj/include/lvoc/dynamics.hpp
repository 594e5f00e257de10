#pragma once

#include <array>
#include <string>
#include <vector>

#include <Eigen/Dense>

namespace lvoc {

/// Local kinetics y1' = (a - b y2) y1 + g1, y2' = (c y1 - d) y2 + g2.
struct KineticsParams {
    double a = 0.47, b = 0.024, c = 0.023, d = 0.76;
    double g1 = 0.0, g2 = 0.0;

    void validate() const;
    Eigen::Vector2d rhs(const Eigen::Vector2d& y) const;
    Eigen::Matrix2d jacobian(const Eigen::Vector2d& y) const;
};

enum class FixedPointClass { Saddle, StableNode, UnstableNode, StableSpiral, UnstableSpiral, CenterBorderline };
std::string to_string(FixedPointClass c);

struct FixedPointReport {
    Eigen::Vector2d location;
    Eigen::Matrix2d jacobian;
    double trace = 0.0;
    double determinant = 0.0;
    /// trace^2 - 4 determinant
    double discriminant = 0.0;
    FixedPointClass cls = FixedPointClass::CenterBorderline;
    std::string note;
};

/// Classification by the signs of (determinant, trace, discriminant). A
/// trace within 1e-12 times the largest Jacobian entry counts as zero.
FixedPointReport classify(const KineticsParams& p, const Eigen::Vector2d& point);

/// g = 0: (0, 0) and (d/c, a/b). Otherwise every root with positive
/// coordinates, found by 2-D Newton from (d/c, a/b) and from the roots of the
/// scalar quadratic the system reduces to. Throws RootFindFailure when none converges.
std::vector<FixedPointReport> fixed_points(const KineticsParams& p);

struct Box {
    double y1_min, y1_max, y2_min, y2_max;
};

struct Polyline {
    /// "phi1" or "phi2" plus a branch suffix.
    std::string id;
    std::vector<Eigen::Vector2d> points;
};

/// Zero sets of the two kinetics components clipped to `box`, each branch
/// sampled at `samples` parameter values before clipping.
std::vector<Polyline> nullclines(const KineticsParams& p, const Box& box, int samples = 400);

struct OrbitSample {
    double t;
    Eigen::Vector2d y;
};

struct OrbitOptions {
    double tol = 1e-10;
    double blowup = 1e8;
    long max_steps = 10'000'000;
};

/// Adaptive Dormand-Prince 5(4) orbit from `start`, sampled at 0, dt_out, ... up to t_end.
std::vector<OrbitSample> phase_trajectory(const KineticsParams& p, const Eigen::Vector2d& start, double t_end,
                                          double dt_out, const OrbitOptions& options = {});

/// c y1 - d ln y1 + b y2 - a ln y2, conserved when g = 0.
double first_integral(const KineticsParams& p, const Eigen::Vector2d& y);

}  // namespace lvoc
