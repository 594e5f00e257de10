#pragma once

#include <vector>

#include <Eigen/IterativeLinearSolvers>
#include <Eigen/SparseLU>

#include "lvoc/model.hpp"

namespace lvoc {

/// Inverts the blocks x blocks coupling of each spatial dof across species and
/// temporal nodes. Entries are filled by StepSystem; `compute` is a no-op.
class PointBlockJacobi {
public:
    using StorageIndex = int;
    enum { ColsAtCompileTime = Eigen::Dynamic, MaxColsAtCompileTime = Eigen::Dynamic };

    void setup(int nd, int blocks, const std::vector<double>* inverses, bool transposed) {
        nd_ = nd;
        blocks_ = blocks;
        inverses_ = inverses;
        transposed_ = transposed;
    }
    template <typename M> PointBlockJacobi& analyzePattern(const M&) { return *this; }
    template <typename M> PointBlockJacobi& factorize(const M&) { return *this; }
    template <typename M> PointBlockJacobi& compute(const M&) { return *this; }
    Eigen::ComputationInfo info() const { return Eigen::Success; }
    Eigen::Index rows() const { return static_cast<Eigen::Index>(nd_) * blocks_; }
    Eigen::Index cols() const { return rows(); }

    template <typename V> Eigen::VectorXd solve(const Eigen::MatrixBase<V>& b) const {
        Eigen::VectorXd x(b.size());
        const int bb = blocks_ * blocks_;
        for (int r = 0; r < nd_; ++r) {
            const double* inv = inverses_->data() + static_cast<std::size_t>(r) * bb;
            for (int p = 0; p < blocks_; ++p) {
                double acc = 0.0;
                for (int q = 0; q < blocks_; ++q) {
                    acc += (transposed_ ? inv[q * blocks_ + p] : inv[p * blocks_ + q]) * b(q * nd_ + r);
                }
                x(p * nd_ + r) = acc;
            }
        }
        return x;
    }

private:
    int nd_ = 0;
    int blocks_ = 0;
    const std::vector<double>* inverses_ = nullptr;
    bool transposed_ = false;
};

/// Which species couplings the linearized step operator keeps. `Diagonal`
/// drops the cross-species blocks (+b y1 in the prey row for y2, -c y2 in
/// the predator row for y1).
enum class Coupling { Full, Diagonal };

/// The algebraic system of one time interval.
///
/// Unknowns are stacked by (species, temporal node): block s * (k + 1) + i
/// holds the coefficients of species s at node i. Rows and columns of
/// Dirichlet dofs are replaced by the identity in every diagonal block.
class StepSystem {
public:
    explicit StepSystem(const Problem& problem);

    int size() const { return blocks_ * nd_; }
    int blocks() const { return blocks_; }

    /// Stacked unknowns of interval n from two state fields.
    Eigen::VectorXd gather(const SpaceTimeField& y1, const SpaceTimeField& y2, int n) const;
    void scatter(const Eigen::VectorXd& x, SpaceTimeField& y1, SpaceTimeField& y2, int n) const;

    /// phi_i(0) M prev + forcing + control load, Dirichlet entries zero.
    Eigen::VectorXd rhs(int n, const FemVector& prev1, const FemVector& prev2, const ControlPair& g,
                        bool with_forcing = true) const;
    /// Nonlinear residual; Dirichlet rows read x_D.
    Eigen::VectorXd residual(int n, const Eigen::VectorXd& x, const Eigen::VectorXd& rhs) const;
    /// Sum over i of S_i = sum_jl tau T_ijl int z1_j z2_l phi, stacked like a single species.
    Eigen::VectorXd bilinear_term(int n, const Eigen::VectorXd& z) const;

    /// Jacobian of `residual` at x (with the chosen couplings), then set up the
    /// preconditioner. Solves use BiCGSTAB and fall back to sparse LU.
    void linearize(int n, const Eigen::VectorXd& x, Coupling coupling);
    Eigen::VectorXd solve(const Eigen::VectorXd& b) const;
    Eigen::VectorXd solve_transpose(const Eigen::VectorXd& b) const;
    const SparseMatrix& matrix() const { return matrix_; }

    void zero_constrained(Eigen::VectorXd& v) const;

private:
    void write_block(int bp, int bq, const std::vector<double>& values);
    void build_block_inverses();
    Eigen::VectorXd direct_solve(const Eigen::VectorXd& b, bool transposed) const;
    void check_solution(const Eigen::VectorXd& ax, const Eigen::VectorXd& x, const Eigen::VectorXd& b) const;

    const Problem* problem_;
    int nd_;
    int nodes_;
    int blocks_;
    SparseMatrix matrix_;
    std::vector<int> column_start_;  // start slot of (block column, spatial column)
    std::vector<char> kill_;         // spatial slot touches a Dirichlet dof
    std::vector<char> unit_;         // spatial slot is a Dirichlet diagonal
    std::vector<int> constrained_;
    std::vector<int> diag_offset_;   // offset of the (r, r) slot within column r
    std::vector<double> inverses_;   // row-major blocks x blocks inverse per spatial dof
    int generation_ = 0;             // bumped by every linearize
    mutable Eigen::SparseLU<SparseMatrix, Eigen::COLAMDOrdering<int>> lu_;
    mutable bool lu_analyzed_ = false;
    mutable int lu_generation_ = -1;
    bool linearized_ = false;
};

}  // namespace lvoc
