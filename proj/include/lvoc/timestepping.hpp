#pragma once

#include <functional>
#include <memory>
#include <vector>

#include <Eigen/Dense>

namespace lvoc {

/// Partition 0 = t_0 < t_1 < ... < t_N = T. Interval n (0-based) is (t_n, t_{n+1}].
class TimeGrid {
public:
    explicit TimeGrid(std::vector<double> knots);
    /// N equal intervals on [0, T].
    static TimeGrid uniform(double final_time, int intervals);
    /// Smallest uniform grid whose step does not exceed `max_step`.
    static TimeGrid with_max_step(double final_time, double max_step);

    int intervals() const { return static_cast<int>(tau_.size()); }
    double final_time() const { return knots_.back(); }
    const std::vector<double>& knots() const { return knots_; }
    double knot(int i) const { return knots_[i]; }
    double tau(int n) const { return tau_[n]; }
    double max_tau() const;
    /// min tau / max tau.
    double quasi_uniformity() const;
    /// Interval containing t, left-continuous at knots. Throws std::out_of_range outside (0, T].
    int interval_of(double t) const;

private:
    std::vector<double> knots_;
    std::vector<double> tau_;
};

/// Nodal dG(k) basis on the reference interval [0,1], k in {0,1}.
///
/// k = 0: one constant function (its node sits at the midpoint).
/// k = 1: the left and right endpoint Lagrange functions.
class DgBasis {
public:
    explicit DgBasis(int k);

    int degree() const { return k_; }
    int size() const { return k_ + 1; }
    /// Reference node positions.
    const std::vector<double>& nodes() const { return nodes_; }
    double value(int i, double s) const;
    double derivative(int i, double s) const;

    /// Time-derivative plus jump coupling, unit-free:
    /// A(i,j) = phi_j(1) phi_i(1) - int_0^1 phi_j phi_i' ds.
    const Eigen::MatrixXd& transport() const { return transport_; }
    /// phi_i(0), the weight of the incoming left limit.
    const Eigen::VectorXd& inflow() const { return inflow_; }
    /// int_0^1 phi_i phi_j ds (multiply by tau for the interval mass).
    const Eigen::MatrixXd& mass() const { return mass_; }
    /// int_0^1 phi_i phi_j phi_l ds, index (i * size + j) * size + l.
    const std::vector<double>& triple() const { return triple_; }
    double triple(int i, int j, int l) const { return triple_[(i * size() + j) * size() + l]; }
    /// Value at the right end of the interval, per basis function.
    const Eigen::VectorXd& outflow() const { return outflow_; }

private:
    int k_;
    std::vector<double> nodes_;
    Eigen::MatrixXd transport_;
    Eigen::VectorXd inflow_;
    Eigen::VectorXd outflow_;
    Eigen::MatrixXd mass_;
    std::vector<double> triple_;
};

/// Two-point Gauss rule on [a, b]; exact for cubics.
double time_quadrature(const std::function<double(double)>& f, double a, double b);

/// Piecewise degree-k (in time) vector field on a time grid: per interval,
/// k + 1 nodal coefficient vectors of length `dim`. Storage is one
/// contiguous vector ordered (interval, node, component).
class SpaceTimeField {
public:
    SpaceTimeField() = default;
    SpaceTimeField(std::shared_ptr<const TimeGrid> grid, int k, int dim);

    const TimeGrid& grid() const { return *grid_; }
    const std::shared_ptr<const TimeGrid>& grid_ptr() const { return grid_; }
    int degree() const { return k_; }
    int nodes_per_interval() const { return k_ + 1; }
    int dim() const { return dim_; }
    int intervals() const { return grid_ ? grid_->intervals() : 0; }

    Eigen::VectorXd& data() { return data_; }
    const Eigen::VectorXd& data() const { return data_; }

    Eigen::Map<Eigen::VectorXd> node(int interval, int j);
    Eigen::Map<const Eigen::VectorXd> node(int interval, int j) const;
    /// All k + 1 node vectors of an interval, stacked.
    Eigen::Map<Eigen::VectorXd> interval(int n);
    Eigen::Map<const Eigen::VectorXd> interval(int n) const;

    /// Value at t in (0, T], left-continuous at knots.
    Eigen::VectorXd eval(double t) const;
    /// Left limit at knot i >= 1 (end value of interval i - 1).
    Eigen::VectorXd left_limit(int knot) const;
    /// Right limit at knot i <= N - 1 (start value of interval i).
    Eigen::VectorXd right_limit(int knot) const;
    /// Jump y(t_i+) - y(t_i-) at an interior knot.
    Eigen::VectorXd jump(int knot) const;

    bool same_layout(const SpaceTimeField& other) const;

private:
    std::shared_ptr<const TimeGrid> grid_;
    int k_ = 0;
    int dim_ = 0;
    Eigen::VectorXd data_;
};

}  // namespace lvoc
