#include "lvoc/timestepping.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <string>

#include "lvoc/fem.hpp"

namespace lvoc {

TimeGrid::TimeGrid(std::vector<double> knots) : knots_(std::move(knots)) {
    if (knots_.size() < 2 || knots_.front() != 0.0) {
        throw std::invalid_argument("TimeGrid: need at least two knots starting at 0");
    }
    for (std::size_t i = 1; i < knots_.size(); ++i) {
        if (!(knots_[i] > knots_[i - 1])) throw std::invalid_argument("TimeGrid: knots must increase strictly");
        tau_.push_back(knots_[i] - knots_[i - 1]);
    }
}

TimeGrid TimeGrid::uniform(double final_time, int intervals) {
    if (intervals < 1 || !(final_time > 0.0)) throw std::invalid_argument("TimeGrid::uniform: bad arguments");
    std::vector<double> knots(intervals + 1);
    for (int i = 0; i <= intervals; ++i) knots[i] = final_time * i / intervals;
    knots.back() = final_time;
    return TimeGrid(std::move(knots));
}

TimeGrid TimeGrid::with_max_step(double final_time, double max_step) {
    if (!(max_step > 0.0)) throw std::invalid_argument("TimeGrid::with_max_step: step must be positive");
    const int n = static_cast<int>(std::ceil(final_time / max_step * (1.0 - 1e-12)));
    return uniform(final_time, std::max(n, 1));
}

double TimeGrid::max_tau() const { return *std::max_element(tau_.begin(), tau_.end()); }

double TimeGrid::quasi_uniformity() const {
    return *std::min_element(tau_.begin(), tau_.end()) / max_tau();
}

int TimeGrid::interval_of(double t) const {
    if (!(t > 0.0) || t > knots_.back()) {
        throw std::out_of_range("TimeGrid: time " + std::to_string(t) + " outside (0, T]");
    }
    const auto it = std::lower_bound(knots_.begin(), knots_.end(), t);
    return static_cast<int>(it - knots_.begin()) - 1;
}

DgBasis::DgBasis(int k) : k_(k) {
    if (k != 0 && k != 1) throw std::invalid_argument("DgBasis: degree must be 0 or 1");
    nodes_ = k == 0 ? std::vector<double>{0.5} : std::vector<double>{0.0, 1.0};
    const int m = size();
    const LineRule& rule = gauss_unit(3);  // exact to degree 5

    transport_.setZero(m, m);
    mass_.setZero(m, m);
    inflow_.resize(m);
    outflow_.resize(m);
    triple_.assign(m * m * m, 0.0);
    for (int i = 0; i < m; ++i) {
        inflow_[i] = value(i, 0.0);
        outflow_[i] = value(i, 1.0);
    }
    for (std::size_t q = 0; q < rule.points.size(); ++q) {
        const double s = rule.points[q], w = rule.weights[q];
        for (int i = 0; i < m; ++i) {
            for (int j = 0; j < m; ++j) {
                transport_(i, j) -= w * value(j, s) * derivative(i, s);
                mass_(i, j) += w * value(i, s) * value(j, s);
                for (int l = 0; l < m; ++l) triple_[(i * m + j) * m + l] += w * value(i, s) * value(j, s) * value(l, s);
            }
        }
    }
    transport_ += outflow_ * outflow_.transpose();
}

double DgBasis::value(int i, double s) const {
    if (k_ == 0) return 1.0;
    return i == 0 ? 1.0 - s : s;
}

double DgBasis::derivative(int i, double) const {
    if (k_ == 0) return 0.0;
    return i == 0 ? -1.0 : 1.0;
}

double time_quadrature(const std::function<double(double)>& f, double a, double b) {
    const LineRule& rule = gauss_unit(2);
    double s = 0.0;
    for (std::size_t q = 0; q < rule.points.size(); ++q) s += rule.weights[q] * f(a + (b - a) * rule.points[q]);
    return (b - a) * s;
}

SpaceTimeField::SpaceTimeField(std::shared_ptr<const TimeGrid> grid, int k, int dim)
    : grid_(std::move(grid)), k_(k), dim_(dim) {
    if (!grid_) throw std::invalid_argument("SpaceTimeField: null grid");
    if (k != 0 && k != 1) throw std::invalid_argument("SpaceTimeField: degree must be 0 or 1");
    data_.setZero(static_cast<Eigen::Index>(grid_->intervals()) * (k + 1) * dim);
}

Eigen::Map<Eigen::VectorXd> SpaceTimeField::node(int n, int j) {
    return {data_.data() + (static_cast<Eigen::Index>(n) * (k_ + 1) + j) * dim_, dim_};
}

Eigen::Map<const Eigen::VectorXd> SpaceTimeField::node(int n, int j) const {
    return {data_.data() + (static_cast<Eigen::Index>(n) * (k_ + 1) + j) * dim_, dim_};
}

Eigen::Map<Eigen::VectorXd> SpaceTimeField::interval(int n) {
    return {data_.data() + static_cast<Eigen::Index>(n) * (k_ + 1) * dim_, (k_ + 1) * dim_};
}

Eigen::Map<const Eigen::VectorXd> SpaceTimeField::interval(int n) const {
    return {data_.data() + static_cast<Eigen::Index>(n) * (k_ + 1) * dim_, (k_ + 1) * dim_};
}

Eigen::VectorXd SpaceTimeField::eval(double t) const {
    const int n = grid_->interval_of(t);
    if (k_ == 0) return node(n, 0);
    const double s = (t - grid_->knot(n)) / grid_->tau(n);
    return (1.0 - s) * node(n, 0) + s * node(n, 1);
}

Eigen::VectorXd SpaceTimeField::left_limit(int knot) const {
    if (knot < 1 || knot > intervals()) throw std::out_of_range("SpaceTimeField::left_limit: knot out of range");
    return node(knot - 1, k_);
}

Eigen::VectorXd SpaceTimeField::right_limit(int knot) const {
    if (knot < 0 || knot >= intervals()) throw std::out_of_range("SpaceTimeField::right_limit: knot out of range");
    return node(knot, 0);
}

Eigen::VectorXd SpaceTimeField::jump(int knot) const { return right_limit(knot) - left_limit(knot); }

bool SpaceTimeField::same_layout(const SpaceTimeField& other) const {
    return k_ == other.k_ && dim_ == other.dim_ && grid_ && other.grid_ &&
           grid_->knots() == other.grid_->knots();
}

}  // namespace lvoc
