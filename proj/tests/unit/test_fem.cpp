#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <numbers>
#include <random>

#include "lvoc/errors.hpp"
#include "lvoc/fem.hpp"

using namespace lvoc;

namespace {

std::shared_ptr<const Triangulation> square(int n) {
    return std::make_shared<const Triangulation>(build_structured(n));
}

double max_abs_diff(const SparseMatrix& a, const SparseMatrix& b) {
    return Eigen::MatrixXd(a - b).cwiseAbs().maxCoeff();
}

double asymmetry(const SparseMatrix& a) {
    return Eigen::MatrixXd(a - SparseMatrix(a.transpose())).norm() / Eigen::MatrixXd(a).norm();
}

// Dense LU with partial pivoting.
Eigen::VectorXd dense_lu_solve(Eigen::MatrixXd a, Eigen::VectorXd b) {
    const int n = static_cast<int>(a.rows());
    for (int k = 0; k < n; ++k) {
        int p = k;
        for (int i = k + 1; i < n; ++i) {
            if (std::abs(a(i, k)) > std::abs(a(p, k))) p = i;
        }
        a.row(k).swap(a.row(p));
        std::swap(b[k], b[p]);
        for (int i = k + 1; i < n; ++i) {
            const double f = a(i, k) / a(k, k);
            for (int j = k; j < n; ++j) a(i, j) -= f * a(k, j);
            b[i] -= f * b[k];
        }
    }
    Eigen::VectorXd x(n);
    for (int i = n - 1; i >= 0; --i) {
        double s = b[i];
        for (int j = i + 1; j < n; ++j) s -= a(i, j) * x[j];
        x[i] = s / a(i, i);
    }
    return x;
}

// Integral of a function against every basis function, high order rule.
FemVector load_vector(const FeSpace& space, const std::function<double(double, double)>& f) {
    FemVector out = FemVector::Zero(space.dof_count());
    const TriangleRule& rule = triangle_rule(6);
    std::array<double, 6> phi{};
    for (int t = 0; t < space.mesh().triangle_count(); ++t) {
        const auto dofs = space.element_dofs(t);
        for (std::size_t q = 0; q < rule.points.size(); ++q) {
            space.reference_values(rule.points[q], phi);
            const Point2 x = space.map_point(t, rule.points[q]);
            const double w = rule.weights[q] * space.jacobian_det(t) * f(x[0], x[1]);
            for (int a = 0; a < space.local_dof_count(); ++a) out[dofs[a]] += w * phi[a];
        }
    }
    return out;
}

double l2_error(const FeSpace& space, const FemVector& u, const std::function<double(double, double)>& f) {
    const TriangleRule& rule = triangle_rule(6);
    std::array<double, 6> phi{};
    double s = 0.0;
    for (int t = 0; t < space.mesh().triangle_count(); ++t) {
        const auto dofs = space.element_dofs(t);
        for (std::size_t q = 0; q < rule.points.size(); ++q) {
            space.reference_values(rule.points[q], phi);
            const Point2 x = space.map_point(t, rule.points[q]);
            double uh = 0.0;
            for (int a = 0; a < space.local_dof_count(); ++a) uh += u[dofs[a]] * phi[a];
            const double e = uh - f(x[0], x[1]);
            s += rule.weights[q] * space.jacobian_det(t) * e * e;
        }
    }
    return std::sqrt(s);
}

}  // namespace

TEST(Quadrature, TriangleRulesExact) {
    // int_ref xi^p eta^q = p! q! / (p+q+2)!
    auto exact = [](int p, int q) {
        return std::tgamma(p + 1) * std::tgamma(q + 1) / std::tgamma(p + q + 3);
    };
    for (int degree : {4, 6}) {
        const TriangleRule& r = triangle_rule(degree);
        EXPECT_EQ(r.exact_degree, degree);
        for (int p = 0; p <= degree; ++p) {
            for (int q = 0; p + q <= degree; ++q) {
                double s = 0.0;
                for (std::size_t i = 0; i < r.points.size(); ++i) {
                    s += r.weights[i] * std::pow(r.points[i][0], p) * std::pow(r.points[i][1], q);
                }
                EXPECT_NEAR(s, exact(p, q), 1e-14) << p << "," << q;
            }
        }
    }
    EXPECT_EQ(triangle_rule(3).points.size(), 6u);
    EXPECT_EQ(triangle_rule(6).points.size(), 12u);
}

TEST(FeSpace, DofCounts) {
    const auto m = square(4);
    EXPECT_EQ(FeSpace(m, 1, BcKind::Free).dof_count(), 25);
    EXPECT_EQ(FeSpace(m, 2, BcKind::Free).dof_count(), 25 + m->edge_count());
    EXPECT_THROW(FeSpace(m, 3, BcKind::Free), std::invalid_argument);
}

TEST(FeSpace, DirichletDofsAreBoundaryDofs) {
    const auto m = square(5);
    for (int degree : {1, 2}) {
        const FeSpace d(m, degree, BcKind::DirichletZero);
        const FeSpace f(m, degree, BcKind::Free);
        EXPECT_TRUE(f.dirichlet_dofs().empty());
        auto b = d.boundary_dofs();
        std::sort(b.begin(), b.end());
        EXPECT_EQ(d.dirichlet_dofs(), b);
        for (int i = 0; i < d.dof_count(); ++i) {
            const auto& p = d.dof_points()[i];
            const bool geometric = p[0] == 0.0 || p[0] == 1.0 || p[1] == 0.0 || p[1] == 1.0;
            EXPECT_EQ(d.is_dirichlet(i), geometric);
        }
    }
}

TEST(Assembly, MassTotalIsArea) {
    for (int degree : {1, 2}) {
        const FeSpace s(square(1), degree, BcKind::Free);
        const SparseMatrix m = assemble_mass(s);
        EXPECT_NEAR(Eigen::MatrixXd(m).sum(), 1.0, 1e-14);
    }
}

TEST(Assembly, MassIsSpd) {
    const FeSpace s(square(6), 1, BcKind::Free);
    const SparseMatrix m = assemble_mass(s);
    EXPECT_LT(asymmetry(m), 1e-12);
    std::mt19937 rng(7);
    std::normal_distribution<double> nd;
    for (int trial = 0; trial < 100; ++trial) {
        FemVector x(s.dof_count());
        for (auto& v : x) v = nd(rng);
        EXPECT_GT(x.dot(m * x), 0.0);
    }
}

TEST(Assembly, MassRowSumsAreLumpedAreas) {
    const auto mesh = square(2);
    const FeSpace s(mesh, 1, BcKind::Free);
    FemVector lumped = FemVector::Zero(s.dof_count());
    for (int t = 0; t < mesh->triangle_count(); ++t) {
        for (int v : mesh->triangles[t]) lumped[v] += signed_area(*mesh, t) / 3.0;
    }
    const FemVector rows = assemble_mass(s) * FemVector::Ones(s.dof_count());
    EXPECT_LT((rows - lumped).cwiseAbs().maxCoeff(), 1e-15);
}

TEST(Assembly, StiffnessEnergies) {
    for (int degree : {1, 2}) {
        const FeSpace s(square(5), degree, BcKind::Free);
        const SparseMatrix k = assemble_stiffness(s);
        EXPECT_LT(asymmetry(k), 1e-12);
        EXPECT_LT((k * FemVector::Ones(s.dof_count())).cwiseAbs().maxCoeff(), 1e-12);
        const FemVector x = interpolate(s, [](double x, double) { return x; });
        const FemVector xy = interpolate(s, [](double x, double y) { return x + y; });
        EXPECT_NEAR(x.dot(k * x), 1.0, 1e-12);
        EXPECT_NEAR(xy.dot(k * xy), 2.0, 1e-12);
    }
}

TEST(Assembly, StiffnessQuadraticEnergy) {
    // P2 reproduces x^2 exactly: int |2x|^2 = 4/3
    const FeSpace s(square(3), 2, BcKind::Free);
    const FemVector u = interpolate(s, [](double x, double) { return x * x; });
    EXPECT_NEAR(u.dot(assemble_stiffness(s) * u), 4.0 / 3.0, 1e-12);
}

TEST(Assembly, BoundaryMass) {
    for (int degree : {1, 2}) {
        const FeSpace s(square(4), degree, BcKind::Free);
        const SparseMatrix b = assemble_boundary_mass(s);
        EXPECT_LT(asymmetry(b), 1e-12);
        const FemVector one = FemVector::Ones(s.dof_count());
        EXPECT_NEAR(one.dot(b * one), 4.0, 1e-13);
        const Eigen::MatrixXd dense(b);
        const auto& bd = s.boundary_dofs();
        for (int i = 0; i < s.dof_count(); ++i) {
            if (std::find(bd.begin(), bd.end(), i) == bd.end()) {
                EXPECT_EQ(dense.row(i).cwiseAbs().sum(), 0.0);
            }
        }
        const FemVector x = interpolate(s, [](double x, double) { return x; });
        // per-edge oracle: bottom and top contribute 1/3, right 1, left 0
        EXPECT_NEAR(x.dot(b * x), 5.0 / 3.0, 1e-13);
    }
    const FeSpace d(square(2), 1, BcKind::DirichletZero);
    EXPECT_THROW(assemble_boundary_mass(d), InvalidState);
}

TEST(Assembly, WeightedReaction) {
    for (int degree : {1, 2}) {
        const FeSpace s(square(4), degree, BcKind::Free);
        const SparseMatrix m = assemble_mass(s);
        const FemVector zero = FemVector::Zero(s.dof_count());
        const FemVector one = FemVector::Ones(s.dof_count());
        EXPECT_LT(max_abs_diff(assemble_weighted_reaction(s, zero, 1.0), m), 1e-15);
        EXPECT_LT(max_abs_diff(assemble_weighted_reaction(s, one, 0.0), m), 1e-15);
        const FemVector x = interpolate(s, [](double x, double) { return x; });
        EXPECT_NEAR(Eigen::MatrixXd(assemble_weighted_reaction(s, x, 0.0)).sum(), 0.5, 1e-13);

        // linear in (shift, w)
        const FemVector y = interpolate(s, [](double x, double y) { return std::sin(x + 2 * y); });
        const SparseMatrix lhs = assemble_weighted_reaction(s, 2.0 * x - 3.0 * y, 0.5);
        const SparseMatrix rhs = 2.0 * assemble_weighted_reaction(s, x, 0.25) -
                                 3.0 * assemble_weighted_reaction(s, y, 0.0);
        EXPECT_LT(max_abs_diff(lhs, rhs), 1e-14);
        EXPECT_THROW(assemble_weighted_reaction(s, FemVector::Zero(3), 0.0), std::invalid_argument);
    }
}

TEST(Assembly, WeightedReactionExactForCubicIntegrands) {
    // P2: int x^2 * x * y over the square = 1/4 * 1/2 = 1/8
    const FeSpace s(square(2), 2, BcKind::Free);
    const FemVector w = interpolate(s, [](double x, double) { return x * x; });
    const FemVector u = interpolate(s, [](double x, double) { return x; });
    const FemVector v = interpolate(s, [](double, double y) { return y; });
    EXPECT_NEAR(u.dot(assemble_weighted_reaction(s, w, 0.0) * v), 0.125, 1e-14);
    // int x^2 * x^2 * y^2 = 1/5 * 1/3 (degree 6)
    const FemVector v2 = interpolate(s, [](double, double y) { return y * y; });
    EXPECT_NEAR(w.dot(assemble_weighted_reaction(s, v2, 0.0) * w), 1.0 / 15.0, 1e-14);
}

TEST(Assembly, OrderingIndependent) {
    const auto base = build_structured(4);
    auto shuffled = base;
    std::reverse(shuffled.triangles.begin(), shuffled.triangles.end());
    for (auto& t : shuffled.triangles) std::rotate(t.begin(), t.begin() + 1, t.end());
    rebuild_topology(shuffled);
    const auto a = std::make_shared<const Triangulation>(base);
    const auto b = std::make_shared<const Triangulation>(shuffled);
    for (int degree : {1, 2}) {
        const FeSpace sa(a, degree, BcKind::Free), sb(b, degree, BcKind::Free);
        EXPECT_LT(max_abs_diff(assemble_mass(sa), assemble_mass(sb)), 1e-15);
        EXPECT_LT(max_abs_diff(assemble_stiffness(sa), assemble_stiffness(sb)), 1e-13);
        EXPECT_LT(max_abs_diff(assemble_boundary_mass(sa), assemble_boundary_mass(sb)), 1e-15);
    }
}

TEST(Assembly, ProjectionConvergenceRate) {
    const auto f = [](double x, double y) { return std::sin(std::numbers::pi * x) * std::sin(std::numbers::pi * y); };
    for (int degree : {1, 2}) {
        std::vector<double> errors;
        for (int n : {4, 8, 16}) {
            const FeSpace s(square(n), degree, BcKind::Free);
            const FemVector u = solve_sparse(assemble_mass(s), load_vector(s, f));
            errors.push_back(l2_error(s, u, f));
        }
        for (std::size_t i = 1; i < errors.size(); ++i) {
            EXPECT_GE(std::log2(errors[i - 1] / errors[i]), degree + 0.8);
        }
    }
}

TEST(Solve, Identity) {
    SparseMatrix id(5, 5);
    id.setIdentity();
    FemVector b(5);
    b << 1, -2, 3, 0.5, 7;
    EXPECT_LT((solve_sparse(id, b) - b).norm(), 1e-15);
}

TEST(Solve, MassConsistency) {
    const FeSpace s(square(6), 2, BcKind::Free);
    const SparseMatrix m = assemble_mass(s);
    const FemVector one = FemVector::Ones(s.dof_count());
    EXPECT_LT((solve_sparse(m, m * one) - one).cwiseAbs().maxCoeff(), 1e-10);
}

TEST(Solve, MatchesDenseLu) {
    std::mt19937 rng(11);
    std::uniform_real_distribution<double> u(-1.0, 1.0);
    Eigen::MatrixXd g(50, 50);
    for (int i = 0; i < 50; ++i) {
        for (int j = 0; j < 50; ++j) g(i, j) = u(rng);
    }
    const Eigen::MatrixXd a = g * g.transpose() + 50.0 * Eigen::MatrixXd::Identity(50, 50);
    Eigen::VectorXd b(50);
    for (auto& v : b) v = u(rng);
    const SparseMatrix sa = a.sparseView();
    EXPECT_LT((solve_sparse(sa, b) - dense_lu_solve(a, b)).norm(), 1e-9);
}

TEST(Solve, SingularReportsFailure) {
    SparseMatrix z(3, 3);
    z.insert(0, 0) = 1.0;
    z.insert(1, 1) = 1.0;
    z.insert(2, 0) = 1.0;
    z.makeCompressed();
    try {
        solve_sparse(z, FemVector::Ones(3));
        FAIL() << "expected SolverFailure";
    } catch (const SolverFailure& e) {
        EXPECT_GT(e.condition_estimate(), 1e10);
    }
}

TEST(Interpolate, PointValues) {
    const auto mesh = square(4);
    for (int degree : {1, 2}) {
        const FeSpace s(mesh, degree, BcKind::Free);
        const FemVector c = interpolate(s, [](double, double) { return 25.0; });
        EXPECT_TRUE((c.array() == 25.0).all());
        const FemVector y1 = interpolate(s, [](double x, double y) { return 16.0 + 0.25 * (x * x + y * y); });
        const int corner = mesh->vertex_count() - 1;  // (1,1)
        EXPECT_DOUBLE_EQ(y1[corner], 16.5);
        const auto rough = [](double x, double y) {
            return (x - 0.5) * (x - 0.5) + (y - 0.5) * (y - 0.5) <= 1.0 / 16.0 ? 10.0 : 1.0;
        };
        const FemVector r = interpolate(s, rough);
        EXPECT_DOUBLE_EQ(r[12], 10.0);  // (0.5,0.5)
        EXPECT_DOUBLE_EQ(r[0], 1.0);
        EXPECT_THROW(interpolate(s, [](double, double) { return std::nan(""); }), InvalidData);
    }
}

TEST(Dirichlet, EliminationKeepsSymmetry) {
    const FeSpace s(square(4), 2, BcKind::DirichletZero);
    SparseMatrix k = assemble_stiffness(s);
    eliminate_dirichlet(s, k);
    EXPECT_LT(asymmetry(k), 1e-12);
    const Eigen::MatrixXd dense(k);
    for (int d : s.dirichlet_dofs()) {
        EXPECT_EQ(dense(d, d), 1.0);
        EXPECT_EQ(dense.row(d).cwiseAbs().sum(), 1.0);
        EXPECT_EQ(dense.col(d).cwiseAbs().sum(), 1.0);
    }
}

TEST(Pattern, TrilinearMatchesQuadratureAssembly) {
    for (int degree : {1, 2}) {
        const FeSpace s(square(3), degree, BcKind::Free);
        const ElementPattern pattern(s);
        const TrilinearForm tri(s);
        const FemVector w = interpolate(s, [](double x, double y) { return 1.0 + x * y - y * y; });
        std::vector<double> values = pattern_values(pattern, assemble_mass(s));
        tri.add_weighted(pattern, w, -2.0, values);
        const SparseMatrix expected = assemble_mass(s) - 2.0 * assemble_weighted_reaction(s, w, 0.0);
        EXPECT_LT(max_abs_diff(SparseMatrix(pattern.view(values)), expected), 1e-14);

        const FemVector u = interpolate(s, [](double x, double) { return std::cos(x); });
        const FemVector z = interpolate(s, [](double, double y) { return y; });
        FemVector prod = FemVector::Zero(s.dof_count());
        tri.add_product(u, w, 1.0, prod);
        EXPECT_LT((prod - assemble_weighted_reaction(s, w, 0.0) * u).cwiseAbs().maxCoeff(), 1e-15);
        EXPECT_NEAR(tri.integral(u, w, z), z.dot(assemble_weighted_reaction(s, w, 0.0) * u), 1e-14);

        const FemVector one = FemVector::Ones(s.dof_count());
        EXPECT_NEAR(tri.integral(one, one, one), 1.0, 1e-14);
    }
}

TEST(Pattern, BoundaryMassFitsPattern) {
    const FeSpace s(square(3), 2, BcKind::Free);
    const ElementPattern pattern(s);
    const SparseMatrix b = assemble_boundary_mass(s);
    const auto values = pattern_values(pattern, b);
    EXPECT_LT(max_abs_diff(SparseMatrix(pattern.view(values)), b), 1e-16);
}
