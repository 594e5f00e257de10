#pragma once

#include <array>
#include <functional>
#include <memory>
#include <span>
#include <vector>

#include <Eigen/Sparse>
#include <Eigen/SparseLU>

#include "lvoc/mesh.hpp"

namespace lvoc {

using SparseMatrix = Eigen::SparseMatrix<double>;
using FemVector = Eigen::VectorXd;

enum class BcKind { DirichletZero, Free };

/// Quadrature on the reference triangle {xi, eta >= 0, xi + eta <= 1}.
/// Weights sum to 1/2 (the reference area).
struct TriangleRule {
    std::vector<Point2> points;
    std::vector<double> weights;
    int exact_degree = 0;
};

/// Dunavant rules: 6 points exact to degree 4, 12 points exact to degree 6.
/// Requests for degree <= 4 get the 6-point rule.
const TriangleRule& triangle_rule(int exact_degree);

/// Gauss-Legendre rule with `points` nodes mapped to [0,1] (weights sum to 1).
struct LineRule {
    std::vector<double> points;
    std::vector<double> weights;
};
const LineRule& gauss_unit(int points);

/// Scalar continuous Lagrange space of degree 1 or 2.
///
/// Degrees of freedom: mesh vertices first, then (degree 2) one per edge in
/// edge order. A Dirichlet-zero space keeps the boundary dofs in its
/// numbering and flags them; the operators in this module never drop them,
/// elimination happens in the solvers.
class FeSpace {
public:
    FeSpace(std::shared_ptr<const Triangulation> mesh, int degree, BcKind bc);

    const Triangulation& mesh() const { return *mesh_; }
    std::shared_ptr<const Triangulation> mesh_ptr() const { return mesh_; }
    int degree() const { return degree_; }
    BcKind bc() const { return bc_; }
    int dof_count() const { return dof_count_; }
    int local_dof_count() const { return degree_ == 1 ? 3 : 6; }

    std::span<const int> element_dofs(int triangle) const;
    const std::vector<Point2>& dof_points() const { return dof_points_; }

    /// Volume dof for each boundary dof, ordered along the boundary.
    const std::vector<int>& boundary_dofs() const { return boundary_dofs_; }
    /// Empty for a free space.
    const std::vector<int>& dirichlet_dofs() const { return dirichlet_dofs_; }
    bool is_dirichlet(int dof) const { return is_dirichlet_[dof] != 0; }

    /// Rule used for every volume integral on this space: exact for
    /// polynomials of degree 3 * degree (trilinear reaction terms).
    const TriangleRule& volume_rule() const;

    /// Reference basis values / gradients at an arbitrary reference point.
    void reference_values(const Point2& ref, std::span<double> out) const;
    void reference_gradients(const Point2& ref, std::span<std::array<double, 2>> out) const;

    /// Physical point of a reference point in a triangle.
    Point2 map_point(int triangle, const Point2& ref) const;
    /// |det| of the affine map (twice the triangle area).
    double jacobian_det(int triangle) const;

private:
    std::shared_ptr<const Triangulation> mesh_;
    int degree_;
    BcKind bc_;
    int dof_count_ = 0;
    std::vector<int> element_dofs_;
    std::vector<Point2> dof_points_;
    std::vector<int> boundary_dofs_;
    std::vector<int> dirichlet_dofs_;
    std::vector<char> is_dirichlet_;
};

/// Full (non-eliminated) L2(Omega) Gram matrix.
SparseMatrix assemble_mass(const FeSpace& space);
/// Dirichlet energy matrix (grad u, grad v).
SparseMatrix assemble_stiffness(const FeSpace& space);
/// L2(Gamma) Gram matrix on a free space. Throws InvalidState on a Dirichlet space.
SparseMatrix assemble_boundary_mass(const FeSpace& space);
/// Entries  int (shift + w_h) phi_i phi_j dx.
SparseMatrix assemble_weighted_reaction(const FeSpace& space, const FemVector& w, double shift);

/// Sparse LU solve with a relative residual check of 1e-10.
FemVector solve_sparse(const SparseMatrix& a, const FemVector& b);

/// Nodal interpolation. Throws InvalidData on a non-finite value.
FemVector interpolate(const FeSpace& space, const std::function<double(double, double)>& f);

/// Zero rows and columns of Dirichlet dofs, unit diagonal.
void eliminate_dirichlet(const FeSpace& space, SparseMatrix& a);

/// Compressed sparsity of the element couplings of a space plus an element
/// local-entry -> value-slot table, so matrices can be refilled in place.
class ElementPattern {
public:
    explicit ElementPattern(const FeSpace& space);

    const SparseMatrix& structure() const { return structure_; }
    int nonzeros() const { return static_cast<int>(structure_.nonZeros()); }
    /// Value slot of local entry (row a, column b) of a triangle.
    int slot(int triangle, int a, int b) const {
        return slots_[(static_cast<std::size_t>(triangle) * nloc_ + a) * nloc_ + b];
    }
    /// Sparse matrix view over an external value array laid out like `structure()`.
    Eigen::Map<const SparseMatrix> view(std::span<const double> values) const;

private:
    SparseMatrix structure_;
    int nloc_;
    std::vector<int> slots_;
};

/// Exact element integrals of products of three basis functions,
/// int phi_a phi_b phi_c, used for the semilinear couplings.
class TrilinearForm {
public:
    explicit TrilinearForm(const FeSpace& space);

    /// Adds alpha * R(w) to `values` (laid out by `pattern`), where
    /// R(w)_ij = int w_h phi_i phi_j dx.
    void add_weighted(const ElementPattern& pattern, const FemVector& w, double alpha,
                      std::span<double> values) const;
    /// out_i += alpha * int u_h w_h phi_i dx.
    void add_product(const FemVector& u, const FemVector& w, double alpha, FemVector& out) const;
    /// int u_h w_h z_h dx.
    double integral(const FemVector& u, const FemVector& w, const FemVector& z) const;

private:
    const FeSpace* space_;
    int nloc_;
    std::vector<double> reference_;  // nloc^3, reference-element integrals
    std::vector<double> det_;
};

/// Scatter a constant-coefficient element operator (mass/stiffness/boundary
/// mass) into pattern-layout values.
std::vector<double> pattern_values(const ElementPattern& pattern, const SparseMatrix& m);

}  // namespace lvoc
