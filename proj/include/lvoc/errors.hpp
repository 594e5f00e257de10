#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace lvoc {

/// Raised when an object is used in a state that does not support the call
/// (e.g. boundary mass requested on a Dirichlet space).
class InvalidState : public std::logic_error {
public:
    using std::logic_error::logic_error;
};

/// Non-finite or otherwise unusable input data.
class InvalidData : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Sparse factorization failed or the solve missed its residual target.
class SolverFailure : public std::runtime_error {
public:
    SolverFailure(const std::string& what, double condition_estimate)
        : std::runtime_error(what), condition_estimate_(condition_estimate) {}

    /// Lower bound ||A||_1 ||x||_1 / ||b||_1 on the 1-norm condition number,
    /// or +inf when the factorization itself broke down.
    double condition_estimate() const noexcept { return condition_estimate_; }

private:
    double condition_estimate_;
};

class NonlinearSolverFailure : public std::runtime_error {
public:
    NonlinearSolverFailure(std::size_t interval, double residual)
        : std::runtime_error("Newton iteration did not converge on interval " +
                             std::to_string(interval) +
                             " (residual " + std::to_string(residual) + ")"),
          interval_(interval), residual_(residual) {}

    std::size_t interval() const noexcept { return interval_; }
    double residual() const noexcept { return residual_; }

private:
    std::size_t interval_;
    double residual_;
};

class BlowUpDetected : public std::runtime_error {
public:
    BlowUpDetected(std::size_t interval, double max_abs)
        : std::runtime_error("solution blow-up on interval " + std::to_string(interval)),
          interval_(interval), max_abs_(max_abs) {}

    std::size_t interval() const noexcept { return interval_; }
    double max_abs() const noexcept { return max_abs_; }

private:
    std::size_t interval_;
    double max_abs_;
};

class LineSearchFailure : public std::runtime_error {
public:
    LineSearchFailure(int trials, double last_step)
        : std::runtime_error("line search found no step satisfying the strong Wolfe conditions after " +
                             std::to_string(trials) + " trials"),
          trials_(trials), last_step_(last_step) {}

    int trials() const noexcept { return trials_; }
    double last_step() const noexcept { return last_step_; }

private:
    int trials_;
    double last_step_;
};

class RootFindFailure : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

}  // namespace lvoc
