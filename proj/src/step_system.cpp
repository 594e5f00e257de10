#include "lvoc/step_system.hpp"

#include <cmath>
#include <limits>
#include <stdexcept>
#include <string>

#include "lvoc/errors.hpp"

namespace lvoc {

StepSystem::StepSystem(const Problem& problem)
    : problem_(&problem), nd_(problem.ndof()), nodes_(problem.basis().size()), blocks_(2 * nodes_) {
    const SparseMatrix& s = problem.pattern().structure();
    const int nnz = static_cast<int>(s.nonZeros());
    const int* outer = s.outerIndexPtr();
    const int* inner = s.innerIndexPtr();
    const int big = blocks_ * nd_;

    matrix_.resize(big, big);
    matrix_.resizeNonZeros(static_cast<Eigen::Index>(blocks_) * blocks_ * nnz);
    int* bouter = matrix_.outerIndexPtr();
    int* binner = matrix_.innerIndexPtr();
    column_start_.resize(static_cast<std::size_t>(blocks_) * nd_);
    for (int bq = 0; bq < blocks_; ++bq) {
        for (int c = 0; c < nd_; ++c) {
            const int start = bq * blocks_ * nnz + blocks_ * outer[c];
            const int len = outer[c + 1] - outer[c];
            column_start_[bq * nd_ + c] = start;
            bouter[bq * nd_ + c] = start;
            for (int bp = 0; bp < blocks_; ++bp) {
                for (int p = 0; p < len; ++p) binner[start + bp * len + p] = inner[outer[c] + p] + bp * nd_;
            }
        }
    }
    bouter[big] = blocks_ * blocks_ * nnz;
    std::fill(matrix_.valuePtr(), matrix_.valuePtr() + matrix_.nonZeros(), 0.0);

    const FeSpace& space = problem.space();
    kill_.assign(nnz, 0);
    unit_.assign(nnz, 0);
    for (int c = 0; c < nd_; ++c) {
        for (int p = outer[c]; p < outer[c + 1]; ++p) {
            const int r = inner[p];
            if (space.is_dirichlet(r) || space.is_dirichlet(c)) {
                kill_[p] = 1;
                unit_[p] = r == c;
            }
        }
    }
    for (int b = 0; b < blocks_; ++b) {
        for (int dof : space.dirichlet_dofs()) constrained_.push_back(b * nd_ + dof);
    }

    diag_offset_.assign(nd_, -1);
    for (int c = 0; c < nd_; ++c) {
        for (int p = outer[c]; p < outer[c + 1]; ++p) {
            if (inner[p] == c) diag_offset_[c] = p - outer[c];
        }
        if (diag_offset_[c] < 0) throw InvalidState("StepSystem: sparsity pattern lacks a diagonal entry");
    }
}

Eigen::VectorXd StepSystem::gather(const SpaceTimeField& y1, const SpaceTimeField& y2, int n) const {
    Eigen::VectorXd x(size());
    x.head(nodes_ * nd_) = y1.interval(n);
    x.tail(nodes_ * nd_) = y2.interval(n);
    return x;
}

void StepSystem::scatter(const Eigen::VectorXd& x, SpaceTimeField& y1, SpaceTimeField& y2, int n) const {
    y1.interval(n) = x.head(nodes_ * nd_);
    y2.interval(n) = x.tail(nodes_ * nd_);
}

void StepSystem::zero_constrained(Eigen::VectorXd& v) const {
    for (int i : constrained_) v[i] = 0.0;
}

Eigen::VectorXd StepSystem::rhs(int n, const FemVector& prev1, const FemVector& prev2, const ControlPair& g,
                                bool with_forcing) const {
    const Problem& pb = *problem_;
    const DgBasis& basis = pb.basis();
    const double tau = pb.grid().tau(n);
    Eigen::VectorXd out(size());
    const FemVector* prev[2] = {&prev1, &prev2};
    FemVector mprev, load;
    for (int s = 0; s < 2; ++s) {
        mprev.noalias() = pb.mass() * *prev[s];
        for (int i = 0; i < nodes_; ++i) {
            auto block = out.segment((s * nodes_ + i) * nd_, nd_);
            block = basis.inflow()[i] * mprev;
            if (with_forcing) block += pb.forcing_load(s).node(n, i);
        }
        for (int l = 0; l < nodes_; ++l) {
            load.noalias() = pb.control_load(s) * g[s].node(n, l);
            for (int i = 0; i < nodes_; ++i) {
                out.segment((s * nodes_ + i) * nd_, nd_) += (tau * basis.mass()(i, l)) * load;
            }
        }
    }
    zero_constrained(out);
    return out;
}

Eigen::VectorXd StepSystem::bilinear_term(int n, const Eigen::VectorXd& z) const {
    const Problem& pb = *problem_;
    const DgBasis& basis = pb.basis();
    const double tau = pb.grid().tau(n);
    Eigen::VectorXd out = Eigen::VectorXd::Zero(nodes_ * nd_);
    FemVector prod(nd_);
    for (int j = 0; j < nodes_; ++j) {
        for (int l = 0; l < nodes_; ++l) {
            prod.setZero();
            pb.trilinear().add_product(z.segment(j * nd_, nd_), z.segment((nodes_ + l) * nd_, nd_), 1.0, prod);
            for (int i = 0; i < nodes_; ++i) out.segment(i * nd_, nd_) += (tau * basis.triple(i, j, l)) * prod;
        }
    }
    return out;
}

Eigen::VectorXd StepSystem::residual(int n, const Eigen::VectorXd& x, const Eigen::VectorXd& rhs) const {
    const Problem& pb = *problem_;
    const ModelParams& p = pb.params();
    const DgBasis& basis = pb.basis();
    const double tau = pb.grid().tau(n);
    Eigen::VectorXd out = -rhs;
    FemVector mx(nd_), lx(nd_);
    for (int s = 0; s < 2; ++s) {
        for (int j = 0; j < nodes_; ++j) {
            const auto xj = x.segment((s * nodes_ + j) * nd_, nd_);
            mx.noalias() = pb.mass() * xj;
            lx.noalias() = pb.linear_operator(s) * xj;
            for (int i = 0; i < nodes_; ++i) {
                out.segment((s * nodes_ + i) * nd_, nd_) +=
                    basis.transport()(i, j) * mx + (tau * basis.mass()(i, j)) * lx;
            }
        }
    }
    const Eigen::VectorXd nl = bilinear_term(n, x);
    out.head(nodes_ * nd_) += p.b * nl;
    out.tail(nodes_ * nd_) -= p.c * nl;
    for (int i : constrained_) out[i] = x[i];
    return out;
}

void StepSystem::write_block(int bp, int bq, const std::vector<double>& values) {
    const SparseMatrix& s = problem_->pattern().structure();
    const int* outer = s.outerIndexPtr();
    double* dst = matrix_.valuePtr();
    const bool diagonal = bp == bq;
    for (int c = 0; c < nd_; ++c) {
        const int len = outer[c + 1] - outer[c];
        double* d = dst + column_start_[bq * nd_ + c] + bp * len;
        for (int p = 0; p < len; ++p) {
            const int slot = outer[c] + p;
            d[p] = kill_[slot] ? (diagonal && unit_[slot] ? 1.0 : 0.0) : values[slot];
        }
    }
}

void StepSystem::linearize(int n, const Eigen::VectorXd& x, Coupling coupling) {
    const Problem& pb = *problem_;
    const ModelParams& p = pb.params();
    const DgBasis& basis = pb.basis();
    const double tau = pb.grid().tau(n);
    const int nnz = pb.pattern().nonzeros();
    const auto& mv = pb.mass_values();
    std::vector<double> values(nnz);
    FemVector w(nd_);
    auto y = [&](int s, int j) { return x.segment((s * nodes_ + j) * nd_, nd_); };

    for (int i = 0; i < nodes_; ++i) {
        for (int j = 0; j < nodes_; ++j) {
            // diagonal species blocks
            for (int s = 0; s < 2; ++s) {
                const auto& lv = pb.linear_values(s);
                const double at = basis.transport()(i, j), tm = tau * basis.mass()(i, j);
                for (int q = 0; q < nnz; ++q) values[q] = at * mv[q] + tm * lv[q];
                w.setZero();
                for (int l = 0; l < nodes_; ++l) {
                    // prey row: d/dY1_j of b T_ijl Y1_j Y2_l;  predator row: d/dY2_j of -c T_ilj Y1_l Y2_j
                    w += (tau * basis.triple(i, j, l)) * (s == 0 ? y(1, l) : y(0, l));
                }
                pb.trilinear().add_weighted(pb.pattern(), w, s == 0 ? p.b : -p.c, values);
                write_block(s * nodes_ + i, s * nodes_ + j, values);
            }
            // cross-species blocks
            for (int s = 0; s < 2; ++s) {
                std::fill(values.begin(), values.end(), 0.0);
                if (coupling == Coupling::Full) {
                    w.setZero();
                    for (int l = 0; l < nodes_; ++l) {
                        // prey row, column Y2_j: b T_ilj Y1_l;  predator row, column Y1_j: -c T_ijl Y2_l
                        w += (tau * basis.triple(i, l, j)) * (s == 0 ? y(0, l) : y(1, l));
                    }
                    pb.trilinear().add_weighted(pb.pattern(), w, s == 0 ? p.b : -p.c, values);
                }
                write_block(s * nodes_ + i, (1 - s) * nodes_ + j, values);
            }
        }
    }

    build_block_inverses();
    linearized_ = true;
    ++generation_;
}

void StepSystem::build_block_inverses() {
    const int bb = blocks_ * blocks_;
    const int* outer = problem_->pattern().structure().outerIndexPtr();
    const double* values = matrix_.valuePtr();
    inverses_.resize(static_cast<std::size_t>(nd_) * bb);
    Eigen::MatrixXd block(blocks_, blocks_);
    for (int r = 0; r < nd_; ++r) {
        const int len = outer[r + 1] - outer[r];
        for (int bq = 0; bq < blocks_; ++bq) {
            const int start = column_start_[bq * nd_ + r] + diag_offset_[r];
            for (int bp = 0; bp < blocks_; ++bp) block(bp, bq) = values[start + bp * len];
        }
        Eigen::PartialPivLU<Eigen::MatrixXd> lu(block);
        Eigen::Map<Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>>(
            inverses_.data() + static_cast<std::size_t>(r) * bb, blocks_, blocks_) = lu.inverse();
    }
}

Eigen::VectorXd StepSystem::direct_solve(const Eigen::VectorXd& b, bool transposed) const {
    if (!lu_analyzed_) {
        lu_.analyzePattern(matrix_);
        lu_analyzed_ = true;
    }
    if (lu_generation_ != generation_) {
        lu_.factorize(matrix_);
        if (lu_.info() != Eigen::Success) {
            throw SolverFailure("step matrix factorization failed (" + lu_.lastErrorMessage() + ")",
                                std::numeric_limits<double>::infinity());
        }
        lu_generation_ = generation_;
    }
    return transposed ? Eigen::VectorXd(lu_.transpose().solve(b)) : Eigen::VectorXd(lu_.solve(b));
}

void StepSystem::check_solution(const Eigen::VectorXd& ax, const Eigen::VectorXd& x, const Eigen::VectorXd& b) const {
    const double bnorm = b.norm();
    if (bnorm == 0.0) return;
    const double rel = (ax - b).norm() / bnorm;
    if (!x.allFinite() || rel > 1e-10) {
        double anorm = 0.0;
        for (int j = 0; j < matrix_.outerSize(); ++j) {
            double col = 0.0;
            for (SparseMatrix::InnerIterator it(matrix_, j); it; ++it) col += std::abs(it.value());
            anorm = std::max(anorm, col);
        }
        throw SolverFailure("step solve: relative residual " + std::to_string(rel) + " exceeds 1e-10",
                            anorm * x.lpNorm<1>() / b.lpNorm<1>());
    }
}

namespace {

constexpr double kKrylovTolerance = 1e-13;
constexpr int kKrylovMaxIterations = 400;

}  // namespace

Eigen::VectorXd StepSystem::solve(const Eigen::VectorXd& b) const {
    if (!linearized_) throw InvalidState("StepSystem::solve before linearize");
    Eigen::BiCGSTAB<SparseMatrix, PointBlockJacobi> krylov;
    krylov.preconditioner().setup(nd_, blocks_, &inverses_, false);
    krylov.setTolerance(kKrylovTolerance);
    krylov.setMaxIterations(kKrylovMaxIterations);
    krylov.compute(matrix_);
    Eigen::VectorXd x = krylov.solve(b);
    if (krylov.info() != Eigen::Success || !x.allFinite()) x = direct_solve(b, false);
    check_solution(matrix_ * x, x, b);
    return x;
}

Eigen::VectorXd StepSystem::solve_transpose(const Eigen::VectorXd& b) const {
    if (!linearized_) throw InvalidState("StepSystem::solve_transpose before linearize");
    const SparseMatrix at = matrix_.transpose();
    Eigen::BiCGSTAB<SparseMatrix, PointBlockJacobi> krylov;
    krylov.preconditioner().setup(nd_, blocks_, &inverses_, true);
    krylov.setTolerance(kKrylovTolerance);
    krylov.setMaxIterations(kKrylovMaxIterations);
    krylov.compute(at);
    Eigen::VectorXd x = krylov.solve(b);
    if (krylov.info() != Eigen::Success || !x.allFinite()) x = direct_solve(b, true);
    check_solution(at * x, x, b);
    return x;
}

}  // namespace lvoc
