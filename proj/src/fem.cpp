#include "lvoc/fem.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>
#include <string>

#include "lvoc/errors.hpp"

namespace lvoc {

namespace {

TriangleRule make_rule6() {
    TriangleRule r;
    r.exact_degree = 4;
    const double a1 = 0.445948490915965, w1 = 0.223381589678011;
    const double a2 = 0.091576213509771, w2 = 0.109951743655322;
    for (auto [a, w] : {std::pair{a1, w1}, std::pair{a2, w2}}) {
        const double b = 1.0 - 2.0 * a;
        r.points.push_back({a, a});
        r.points.push_back({a, b});
        r.points.push_back({b, a});
        for (int i = 0; i < 3; ++i) r.weights.push_back(0.5 * w);
    }
    return r;
}

TriangleRule make_rule12() {
    TriangleRule r;
    r.exact_degree = 6;
    const double a1 = 0.249286745170910, w1 = 0.116786275726379;
    const double a2 = 0.063089014491502, w2 = 0.050844906370207;
    for (auto [a, w] : {std::pair{a1, w1}, std::pair{a2, w2}}) {
        const double b = 1.0 - 2.0 * a;
        r.points.push_back({a, a});
        r.points.push_back({a, b});
        r.points.push_back({b, a});
        for (int i = 0; i < 3; ++i) r.weights.push_back(0.5 * w);
    }
    const double p = 0.053145049844817, q = 0.310352451033784, w3 = 0.082851075618374;
    const double s = 1.0 - p - q;
    for (const Point2& pt : {Point2{p, q}, Point2{q, p}, Point2{p, s}, Point2{s, p}, Point2{q, s},
                             Point2{s, q}}) {
        r.points.push_back(pt);
        r.weights.push_back(0.5 * w3);
    }
    return r;
}

LineRule make_gauss(int n) {
    LineRule r;
    std::vector<std::pair<double, double>> ref;  // nodes/weights on [-1,1]
    switch (n) {
        case 1: ref = {{0.0, 2.0}}; break;
        case 2: {
            const double x = 1.0 / std::sqrt(3.0);
            ref = {{-x, 1.0}, {x, 1.0}};
            break;
        }
        case 3: {
            const double x = std::sqrt(0.6);
            ref = {{-x, 5.0 / 9.0}, {0.0, 8.0 / 9.0}, {x, 5.0 / 9.0}};
            break;
        }
        default: throw std::invalid_argument("gauss_unit: 1 to 3 points supported");
    }
    for (auto [x, w] : ref) {
        r.points.push_back(0.5 * (x + 1.0));
        r.weights.push_back(0.5 * w);
    }
    return r;
}

/// 1-D Lagrange basis on a boundary segment: endpoints, then midpoint for degree 2.
void edge_values(int degree, double s, std::span<double> out) {
    if (degree == 1) {
        out[0] = 1.0 - s;
        out[1] = s;
    } else {
        out[0] = (1.0 - s) * (1.0 - 2.0 * s);
        out[1] = s * (2.0 * s - 1.0);
        out[2] = 4.0 * s * (1.0 - s);
    }
}

}  // namespace

const TriangleRule& triangle_rule(int exact_degree) {
    static const TriangleRule rule6 = make_rule6();
    static const TriangleRule rule12 = make_rule12();
    if (exact_degree <= 4) return rule6;
    if (exact_degree <= 6) return rule12;
    throw std::invalid_argument("triangle_rule: no rule exact to degree " + std::to_string(exact_degree));
}

const LineRule& gauss_unit(int points) {
    static const LineRule rules[3] = {make_gauss(1), make_gauss(2), make_gauss(3)};
    if (points < 1 || points > 3) throw std::invalid_argument("gauss_unit: 1 to 3 points supported");
    return rules[points - 1];
}

// ---------------------------------------------------------------------------
// FeSpace

FeSpace::FeSpace(std::shared_ptr<const Triangulation> mesh, int degree, BcKind bc)
    : mesh_(std::move(mesh)), degree_(degree), bc_(bc) {
    if (!mesh_) throw std::invalid_argument("FeSpace: null mesh");
    if (degree != 1 && degree != 2) throw std::invalid_argument("FeSpace: degree must be 1 or 2");

    const Triangulation& m = *mesh_;
    const int nv = m.vertex_count();
    dof_count_ = degree == 1 ? nv : nv + m.edge_count();

    const int nloc = local_dof_count();
    element_dofs_.resize(static_cast<std::size_t>(m.triangle_count()) * nloc);
    for (int t = 0; t < m.triangle_count(); ++t) {
        int* d = &element_dofs_[static_cast<std::size_t>(t) * nloc];
        for (int j = 0; j < 3; ++j) d[j] = m.triangles[t][j];
        if (degree == 2) {
            for (int j = 0; j < 3; ++j) d[3 + j] = nv + m.triangle_edges[t][j];
        }
    }

    dof_points_ = m.vertices;
    if (degree == 2) {
        for (const auto& e : m.edges) {
            const Point2& p = m.vertices[e[0]];
            const Point2& q = m.vertices[e[1]];
            dof_points_.push_back({0.5 * (p[0] + q[0]), 0.5 * (p[1] + q[1])});
        }
    }

    boundary_dofs_ = boundary_trace_map(m, degree);
    is_dirichlet_.assign(dof_count_, 0);
    if (bc == BcKind::DirichletZero) {
        dirichlet_dofs_ = boundary_dofs_;
        std::sort(dirichlet_dofs_.begin(), dirichlet_dofs_.end());
        for (int d : dirichlet_dofs_) is_dirichlet_[d] = 1;
    }
}

std::span<const int> FeSpace::element_dofs(int triangle) const {
    const int nloc = local_dof_count();
    return {element_dofs_.data() + static_cast<std::size_t>(triangle) * nloc,
            static_cast<std::size_t>(nloc)};
}

const TriangleRule& FeSpace::volume_rule() const { return triangle_rule(3 * degree_); }

void FeSpace::reference_values(const Point2& ref, std::span<double> out) const {
    const double l1 = ref[0], l2 = ref[1], l0 = 1.0 - l1 - l2;
    if (degree_ == 1) {
        out[0] = l0;
        out[1] = l1;
        out[2] = l2;
        return;
    }
    out[0] = l0 * (2.0 * l0 - 1.0);
    out[1] = l1 * (2.0 * l1 - 1.0);
    out[2] = l2 * (2.0 * l2 - 1.0);
    out[3] = 4.0 * l0 * l1;
    out[4] = 4.0 * l1 * l2;
    out[5] = 4.0 * l2 * l0;
}

void FeSpace::reference_gradients(const Point2& ref, std::span<std::array<double, 2>> out) const {
    const std::array<double, 2> g0{-1.0, -1.0}, g1{1.0, 0.0}, g2{0.0, 1.0};
    if (degree_ == 1) {
        out[0] = g0;
        out[1] = g1;
        out[2] = g2;
        return;
    }
    const double l1 = ref[0], l2 = ref[1], l0 = 1.0 - l1 - l2;
    auto scale = [](const std::array<double, 2>& g, double s) { return std::array<double, 2>{g[0] * s, g[1] * s}; };
    auto edge = [](double la, const std::array<double, 2>& ga, double lb, const std::array<double, 2>& gb) {
        return std::array<double, 2>{4.0 * (lb * ga[0] + la * gb[0]), 4.0 * (lb * ga[1] + la * gb[1])};
    };
    out[0] = scale(g0, 4.0 * l0 - 1.0);
    out[1] = scale(g1, 4.0 * l1 - 1.0);
    out[2] = scale(g2, 4.0 * l2 - 1.0);
    out[3] = edge(l0, g0, l1, g1);
    out[4] = edge(l1, g1, l2, g2);
    out[5] = edge(l2, g2, l0, g0);
}

Point2 FeSpace::map_point(int triangle, const Point2& ref) const {
    const auto& tri = mesh_->triangles[triangle];
    const Point2& p0 = mesh_->vertices[tri[0]];
    const Point2& p1 = mesh_->vertices[tri[1]];
    const Point2& p2 = mesh_->vertices[tri[2]];
    return {p0[0] + (p1[0] - p0[0]) * ref[0] + (p2[0] - p0[0]) * ref[1],
            p0[1] + (p1[1] - p0[1]) * ref[0] + (p2[1] - p0[1]) * ref[1]};
}

double FeSpace::jacobian_det(int triangle) const { return 2.0 * std::abs(signed_area(*mesh_, triangle)); }

// ---------------------------------------------------------------------------
// Assembly

namespace {

constexpr int kMaxLocal = 6;

SparseMatrix from_triplets(int n, std::vector<Eigen::Triplet<double>>& triplets) {
    SparseMatrix m(n, n);
    m.setFromTriplets(triplets.begin(), triplets.end());
    m.makeCompressed();
    return m;
}

}  // namespace

SparseMatrix assemble_mass(const FeSpace& space) {
    return assemble_weighted_reaction(space, FemVector::Zero(space.dof_count()), 1.0);
}

SparseMatrix assemble_stiffness(const FeSpace& space) {
    const Triangulation& mesh = space.mesh();
    const int nloc = space.local_dof_count();
    const TriangleRule& rule = space.volume_rule();
    std::vector<Eigen::Triplet<double>> triplets;
    triplets.reserve(static_cast<std::size_t>(mesh.triangle_count()) * nloc * nloc);

    std::array<std::array<double, 2>, kMaxLocal> gref{}, g{};
    for (int t = 0; t < mesh.triangle_count(); ++t) {
        const auto& tri = mesh.triangles[t];
        const Point2& p0 = mesh.vertices[tri[0]];
        const Point2& p1 = mesh.vertices[tri[1]];
        const Point2& p2 = mesh.vertices[tri[2]];
        const double b00 = p1[0] - p0[0], b01 = p2[0] - p0[0];
        const double b10 = p1[1] - p0[1], b11 = p2[1] - p0[1];
        const double det = b00 * b11 - b01 * b10;
        // rows of B^{-T}
        const double i00 = b11 / det, i01 = -b10 / det;
        const double i10 = -b01 / det, i11 = b00 / det;

        double local[kMaxLocal][kMaxLocal] = {};
        for (std::size_t q = 0; q < rule.points.size(); ++q) {
            space.reference_gradients(rule.points[q], {gref.data(), static_cast<std::size_t>(nloc)});
            for (int a = 0; a < nloc; ++a) {
                g[a] = {i00 * gref[a][0] + i01 * gref[a][1], i10 * gref[a][0] + i11 * gref[a][1]};
            }
            const double w = rule.weights[q] * std::abs(det);
            for (int a = 0; a < nloc; ++a) {
                for (int b = 0; b < nloc; ++b) local[a][b] += w * (g[a][0] * g[b][0] + g[a][1] * g[b][1]);
            }
        }
        const auto dofs = space.element_dofs(t);
        for (int a = 0; a < nloc; ++a) {
            for (int b = 0; b < nloc; ++b) triplets.emplace_back(dofs[a], dofs[b], local[a][b]);
        }
    }
    return from_triplets(space.dof_count(), triplets);
}

SparseMatrix assemble_boundary_mass(const FeSpace& space) {
    if (space.bc() != BcKind::Free) {
        throw InvalidState("assemble_boundary_mass: requires a space without Dirichlet constraints");
    }
    const Triangulation& mesh = space.mesh();
    const int degree = space.degree();
    const int nedge = degree + 1;
    const LineRule& rule = gauss_unit(3);
    std::vector<Eigen::Triplet<double>> triplets;

    std::array<double, 3> phi{};
    for (std::size_t e = 0; e < mesh.boundary_edges.size(); ++e) {
        const auto& seg = mesh.boundary_edges[e];
        const Point2& p = mesh.vertices[seg[0]];
        const Point2& q = mesh.vertices[seg[1]];
        const double length = std::hypot(q[0] - p[0], q[1] - p[1]);
        std::array<int, 3> dofs{seg[0], seg[1], 0};
        if (degree == 2) dofs[2] = mesh.vertex_count() + mesh.boundary_edge_ids[e];

        double local[3][3] = {};
        for (std::size_t k = 0; k < rule.points.size(); ++k) {
            edge_values(degree, rule.points[k], phi);
            const double w = rule.weights[k] * length;
            for (int a = 0; a < nedge; ++a) {
                for (int b = 0; b < nedge; ++b) local[a][b] += w * phi[a] * phi[b];
            }
        }
        for (int a = 0; a < nedge; ++a) {
            for (int b = 0; b < nedge; ++b) triplets.emplace_back(dofs[a], dofs[b], local[a][b]);
        }
    }
    return from_triplets(space.dof_count(), triplets);
}

SparseMatrix assemble_weighted_reaction(const FeSpace& space, const FemVector& w, double shift) {
    if (w.size() != space.dof_count()) {
        throw std::invalid_argument("assemble_weighted_reaction: coefficient vector has length " +
                                    std::to_string(w.size()) + ", space has " +
                                    std::to_string(space.dof_count()) + " dofs");
    }
    const Triangulation& mesh = space.mesh();
    const int nloc = space.local_dof_count();
    const TriangleRule& rule = space.volume_rule();
    std::vector<Eigen::Triplet<double>> triplets;
    triplets.reserve(static_cast<std::size_t>(mesh.triangle_count()) * nloc * nloc);

    std::vector<std::array<double, kMaxLocal>> phi(rule.points.size());
    for (std::size_t q = 0; q < rule.points.size(); ++q) space.reference_values(rule.points[q], phi[q]);

    for (int t = 0; t < mesh.triangle_count(); ++t) {
        const auto dofs = space.element_dofs(t);
        const double det = space.jacobian_det(t);
        double local[kMaxLocal][kMaxLocal] = {};
        for (std::size_t q = 0; q < rule.points.size(); ++q) {
            double weight = shift;
            for (int c = 0; c < nloc; ++c) weight += w[dofs[c]] * phi[q][c];
            weight *= rule.weights[q] * det;
            for (int a = 0; a < nloc; ++a) {
                for (int b = 0; b < nloc; ++b) local[a][b] += weight * phi[q][a] * phi[q][b];
            }
        }
        for (int a = 0; a < nloc; ++a) {
            for (int b = 0; b < nloc; ++b) triplets.emplace_back(dofs[a], dofs[b], local[a][b]);
        }
    }
    return from_triplets(space.dof_count(), triplets);
}

FemVector solve_sparse(const SparseMatrix& a, const FemVector& b) {
    if (a.rows() != a.cols() || a.rows() != b.size()) {
        throw std::invalid_argument("solve_sparse: dimension mismatch");
    }
    Eigen::SparseLU<SparseMatrix, Eigen::COLAMDOrdering<int>> lu;
    lu.compute(a);
    if (lu.info() != Eigen::Success) {
        throw SolverFailure("solve_sparse: LU factorization failed (" + lu.lastErrorMessage() + ")",
                            std::numeric_limits<double>::infinity());
    }
    FemVector x = lu.solve(b);
    const double bnorm = b.norm();
    const double residual = (a * x - b).norm();
    if (!x.allFinite() || residual > 1e-10 * std::max(bnorm, std::numeric_limits<double>::min())) {
        double anorm = 0.0;
        for (int j = 0; j < a.outerSize(); ++j) {
            double col = 0.0;
            for (SparseMatrix::InnerIterator it(a, j); it; ++it) col += std::abs(it.value());
            anorm = std::max(anorm, col);
        }
        const double estimate = anorm * x.lpNorm<1>() / std::max(b.lpNorm<1>(), std::numeric_limits<double>::min());
        throw SolverFailure("solve_sparse: relative residual " + std::to_string(residual / bnorm) +
                                " exceeds 1e-10 (condition estimate " + std::to_string(estimate) + ")",
                            estimate);
    }
    return x;
}

FemVector interpolate(const FeSpace& space, const std::function<double(double, double)>& f) {
    FemVector v(space.dof_count());
    const auto& pts = space.dof_points();
    for (int i = 0; i < space.dof_count(); ++i) {
        const double value = f(pts[i][0], pts[i][1]);
        if (!std::isfinite(value)) {
            throw InvalidData("interpolate: non-finite value at (" + std::to_string(pts[i][0]) + ", " +
                              std::to_string(pts[i][1]) + ")");
        }
        v[i] = value;
    }
    return v;
}

void eliminate_dirichlet(const FeSpace& space, SparseMatrix& a) {
    if (space.dirichlet_dofs().empty()) return;
    for (int j = 0; j < a.outerSize(); ++j) {
        for (SparseMatrix::InnerIterator it(a, j); it; ++it) {
            const int i = static_cast<int>(it.row());
            if (space.is_dirichlet(i) || space.is_dirichlet(j)) it.valueRef() = (i == j) ? 1.0 : 0.0;
        }
    }
}

// ---------------------------------------------------------------------------
// ElementPattern / TrilinearForm

ElementPattern::ElementPattern(const FeSpace& space) : nloc_(space.local_dof_count()) {
    const int nt = space.mesh().triangle_count();
    std::vector<Eigen::Triplet<double>> triplets;
    triplets.reserve(static_cast<std::size_t>(nt) * nloc_ * nloc_);
    for (int t = 0; t < nt; ++t) {
        const auto dofs = space.element_dofs(t);
        for (int a = 0; a < nloc_; ++a) {
            for (int b = 0; b < nloc_; ++b) triplets.emplace_back(dofs[a], dofs[b], 0.0);
        }
    }
    structure_ = from_triplets(space.dof_count(), triplets);

    const int* outer = structure_.outerIndexPtr();
    const int* inner = structure_.innerIndexPtr();
    slots_.resize(static_cast<std::size_t>(nt) * nloc_ * nloc_);
    for (int t = 0; t < nt; ++t) {
        const auto dofs = space.element_dofs(t);
        for (int a = 0; a < nloc_; ++a) {
            for (int b = 0; b < nloc_; ++b) {
                const int col = dofs[b];
                const int* pos = std::lower_bound(inner + outer[col], inner + outer[col + 1], dofs[a]);
                slots_[(static_cast<std::size_t>(t) * nloc_ + a) * nloc_ + b] = static_cast<int>(pos - inner);
            }
        }
    }
}

Eigen::Map<const SparseMatrix> ElementPattern::view(std::span<const double> values) const {
    return {structure_.rows(), structure_.cols(), structure_.nonZeros(), structure_.outerIndexPtr(),
            structure_.innerIndexPtr(), values.data()};
}

std::vector<double> pattern_values(const ElementPattern& pattern, const SparseMatrix& m) {
    const SparseMatrix& s = pattern.structure();
    std::vector<double> values(s.nonZeros(), 0.0);
    const int* outer = s.outerIndexPtr();
    const int* inner = s.innerIndexPtr();
    for (int j = 0; j < m.outerSize(); ++j) {
        for (SparseMatrix::InnerIterator it(m, j); it; ++it) {
            const int row = static_cast<int>(it.row());
            const int* pos = std::lower_bound(inner + outer[j], inner + outer[j + 1], row);
            if (pos == inner + outer[j + 1] || *pos != row) {
                throw std::invalid_argument("pattern_values: entry outside the element pattern");
            }
            values[pos - inner] += it.value();
        }
    }
    return values;
}

TrilinearForm::TrilinearForm(const FeSpace& space) : space_(&space), nloc_(space.local_dof_count()) {
    const TriangleRule& rule = space.volume_rule();
    reference_.assign(static_cast<std::size_t>(nloc_) * nloc_ * nloc_, 0.0);
    std::array<double, kMaxLocal> phi{};
    for (std::size_t q = 0; q < rule.points.size(); ++q) {
        space.reference_values(rule.points[q], phi);
        for (int a = 0; a < nloc_; ++a) {
            for (int b = 0; b < nloc_; ++b) {
                for (int c = 0; c < nloc_; ++c) {
                    reference_[(a * nloc_ + b) * nloc_ + c] += rule.weights[q] * phi[a] * phi[b] * phi[c];
                }
            }
        }
    }
    det_.resize(space.mesh().triangle_count());
    for (int t = 0; t < space.mesh().triangle_count(); ++t) det_[t] = space.jacobian_det(t);
}

void TrilinearForm::add_weighted(const ElementPattern& pattern, const FemVector& w, double alpha,
                                 std::span<double> values) const {
    const int nt = static_cast<int>(det_.size());
    std::array<double, kMaxLocal> wl{};
    for (int t = 0; t < nt; ++t) {
        const auto dofs = space_->element_dofs(t);
        for (int c = 0; c < nloc_; ++c) wl[c] = w[dofs[c]];
        const double scale = alpha * det_[t];
        for (int a = 0; a < nloc_; ++a) {
            for (int b = 0; b < nloc_; ++b) {
                const double* ref = &reference_[(a * nloc_ + b) * nloc_];
                double s = 0.0;
                for (int c = 0; c < nloc_; ++c) s += ref[c] * wl[c];
                values[pattern.slot(t, a, b)] += scale * s;
            }
        }
    }
}

void TrilinearForm::add_product(const FemVector& u, const FemVector& w, double alpha, FemVector& out) const {
    const int nt = static_cast<int>(det_.size());
    std::array<double, kMaxLocal> ul{}, wl{};
    for (int t = 0; t < nt; ++t) {
        const auto dofs = space_->element_dofs(t);
        for (int c = 0; c < nloc_; ++c) {
            ul[c] = u[dofs[c]];
            wl[c] = w[dofs[c]];
        }
        const double scale = alpha * det_[t];
        for (int a = 0; a < nloc_; ++a) {
            double s = 0.0;
            for (int b = 0; b < nloc_; ++b) {
                const double* ref = &reference_[(a * nloc_ + b) * nloc_];
                double inner = 0.0;
                for (int c = 0; c < nloc_; ++c) inner += ref[c] * wl[c];
                s += inner * ul[b];
            }
            out[dofs[a]] += scale * s;
        }
    }
}

double TrilinearForm::integral(const FemVector& u, const FemVector& w, const FemVector& z) const {
    FemVector tmp = FemVector::Zero(z.size());
    add_product(u, w, 1.0, tmp);
    return tmp.dot(z);
}

}  // namespace lvoc
