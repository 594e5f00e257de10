#include "lvoc/model.hpp"

#include <cmath>
#include <numbers>
#include <stdexcept>
#include <string>

#include "lvoc/errors.hpp"

namespace lvoc {

void ModelParams::validate() const {
    if (!(eps1 > 0.0) || !(eps2 > 0.0)) throw std::invalid_argument("ModelParams: diffusivities must be positive");
    if (!(gamma1 > 0.0) || !(gamma2 > 0.0)) throw std::invalid_argument("ModelParams: penalties must be positive");
    if (g_lo && g_hi && !(*g_lo < *g_hi)) throw std::invalid_argument("ModelParams: need g_lo < g_hi");
    if (kind == ControlKind::Robin && (lambda1 < 0.0 || lambda2 < 0.0)) {
        throw std::invalid_argument("ModelParams: Robin coefficients must be non-negative");
    }
}

double forcing_prey(const ModelParams& p, double t, double x, double y) {
    const double pi = std::numbers::pi;
    const double st = std::sin(t), ct = std::cos(t);
    const double sx = std::sin(pi * x), sy = std::sin(pi * y), s = sx * sy;
    const double a = p.a, b = p.b;
    const double sum = b * ct * st * sx * y * y * sy + b * ct * st * x * x * s + 64 * b * st * s + st * y * y -
                       25 * b * ct * y * y + 64 * b * st * s + st * y * y - 25 * b * ct * y * y + a * ct * y * y +
                       st * x * x - 25 * b * ct * x * x + a * ct * x * x + 4 * p.eps1 * ct - 1600 * b + 64 * a;
    return -sum / 4.0;
}

double forcing_predator(const ModelParams& p, double t, double x, double y) {
    const double pi = std::numbers::pi;
    const double st = std::sin(t), ct = std::cos(t);
    const double sx = std::sin(pi * x), sy = std::sin(pi * y), s = sx * sy;
    const double c = p.c, d = p.d;
    const double sum = c * ct * st * sx * y * y * sy + c * ct * st * x * x * s + 64 * c * st * s -
                       8 * pi * pi * p.eps1 * st * s - 4 * d * st * s - 4 * ct * s - 25 * c * ct * y * y -
                       25 * c * ct * x * x - 1600 * c + 100 * d;
    return sum / 4.0;
}

double smooth_prey_initial(double x1, double x2) { return 16.0 + 0.25 * (x1 * x1 + x2 * x2); }

double smooth_predator_initial(double, double) { return 25.0; }

double rough_prey_initial(double x1, double x2) {
    const double r2 = (x1 - 0.5) * (x1 - 0.5) + (x2 - 0.5) * (x2 - 0.5);
    return r2 <= 1.0 / 16.0 ? 10.0 : 1.0;
}

double rough_predator_initial(double x1, double x2) {
    const double r2 = (x1 - 0.5) * (x1 - 0.5) + (x2 - 0.5) * (x2 - 0.5);
    return r2 >= 0.25 ? 10.0 : 1.0;
}

ProblemData standard_data(const ModelParams& params, InitialKind initial) {
    ProblemData data;
    data.f1 = [params](double t, double x, double y) { return forcing_prey(params, t, x, y); };
    data.f2 = [params](double t, double x, double y) { return forcing_predator(params, t, x, y); };
    if (initial == InitialKind::Smooth) {
        data.y10 = smooth_prey_initial;
        data.y20 = smooth_predator_initial;
    } else {
        data.y10 = rough_prey_initial;
        data.y20 = rough_predator_initial;
    }
    data.y1d = [](double, double, double) { return 0.0; };
    data.y2d = [](double, double, double) { return 20.0; };
    data.final_time = 0.1;
    return data;
}

namespace {

/// int_I phi_j(t) (f(t), v_m) dt with two-point Gauss in time and the space's volume rule.
SpaceTimeField forcing_field(const FeSpace& space, const std::shared_ptr<const TimeGrid>& grid,
                             const DgBasis& basis, const SpaceTimeFn& f) {
    SpaceTimeField out(grid, basis.degree(), space.dof_count());
    if (!f) return out;
    const TriangleRule& rule = space.volume_rule();
    const LineRule& trule = gauss_unit(2);
    const int nloc = space.local_dof_count();
    const int nt = space.mesh().triangle_count();
    const std::size_t nq = rule.points.size();

    // physical quadrature points, weights and basis values, reused for every time
    std::vector<Point2> xq(static_cast<std::size_t>(nt) * nq);
    std::vector<double> wq(xq.size());
    std::vector<std::array<double, 6>> phi(nq);
    for (std::size_t q = 0; q < nq; ++q) space.reference_values(rule.points[q], phi[q]);
    for (int t = 0; t < nt; ++t) {
        const double det = space.jacobian_det(t);
        for (std::size_t q = 0; q < nq; ++q) {
            xq[t * nq + q] = space.map_point(t, rule.points[q]);
            wq[t * nq + q] = rule.weights[q] * det;
        }
    }

    FemVector load(space.dof_count());
    for (int n = 0; n < grid->intervals(); ++n) {
        const double t0 = grid->knot(n), tau = grid->tau(n);
        for (std::size_t g = 0; g < trule.points.size(); ++g) {
            const double time = t0 + tau * trule.points[g];
            load.setZero();
            for (int t = 0; t < nt; ++t) {
                const auto dofs = space.element_dofs(t);
                for (std::size_t q = 0; q < nq; ++q) {
                    const Point2& x = xq[t * nq + q];
                    const double value = f(time, x[0], x[1]) * wq[t * nq + q];
                    for (int a = 0; a < nloc; ++a) load[dofs[a]] += value * phi[q][a];
                }
            }
            if (!load.allFinite()) throw InvalidData("forcing: non-finite value at t = " + std::to_string(time));
            for (int j = 0; j < basis.size(); ++j) {
                out.node(n, j) += (tau * trule.weights[g] * basis.value(j, trule.points[g])) * load;
            }
        }
    }
    return out;
}

SpaceTimeField target_field(const FeSpace& space, const std::shared_ptr<const TimeGrid>& grid,
                            const DgBasis& basis, const SpaceTimeFn& f) {
    SpaceTimeField out(grid, basis.degree(), space.dof_count());
    if (!f) return out;
    for (int n = 0; n < grid->intervals(); ++n) {
        for (int j = 0; j < basis.size(); ++j) {
            const double time = grid->knot(n) + grid->tau(n) * basis.nodes()[j];
            out.node(n, j) = interpolate(space, [&](double x, double y) { return f(time, x, y); });
        }
    }
    return out;
}

}  // namespace

Problem::Problem(ModelParams params, ProblemData data, std::shared_ptr<const FeSpace> space,
                 std::shared_ptr<const TimeGrid> grid, int k)
    : params_(std::move(params)), data_(std::move(data)), space_(std::move(space)), grid_(std::move(grid)),
      basis_(k) {
    params_.validate();
    if (!space_ || !grid_) throw std::invalid_argument("Problem: null space or grid");
    const bool robin = params_.kind == ControlKind::Robin;
    if (robin != (space_->bc() == BcKind::Free)) {
        throw std::invalid_argument(robin ? "Problem: Robin control needs a space without Dirichlet constraints"
                                          : "Problem: distributed control needs a Dirichlet-zero space");
    }
    if (std::abs(grid_->final_time() - data_.final_time) > 1e-12 * data_.final_time) {
        throw std::invalid_argument("Problem: time grid does not end at the final time");
    }
    const FeSpace& s = *space_;
    const int nd = s.dof_count();

    mass_ = assemble_mass(s);
    stiffness_ = assemble_stiffness(s);
    boundary_mass_ = robin ? assemble_boundary_mass(s) : SparseMatrix(nd, nd);
    pattern_ = std::make_shared<ElementPattern>(s);
    trilinear_ = std::make_shared<TrilinearForm>(s);
    mass_values_ = pattern_values(*pattern_, mass_);

    const double eps[2] = {params_.eps1, params_.eps2};
    const double shift[2] = {-params_.a, params_.d};
    for (int i = 0; i < 2; ++i) {
        linear_[i] = eps[i] * stiffness_ + shift[i] * mass_;
        if (robin) linear_[i] += params_.lambda(i) * boundary_mass_;
        linear_[i].makeCompressed();
        linear_values_[i] = pattern_values(*pattern_, linear_[i]);
    }

    const std::optional<FemVector>* given[2] = {&data_.y10_vector, &data_.y20_vector};
    const SpaceFn* fns[2] = {&data_.y10, &data_.y20};
    for (int i = 0; i < 2; ++i) {
        if (given[i]->has_value()) {
            if ((*given[i])->size() != nd) throw std::invalid_argument("Problem: initial vector has wrong length");
            initial_[i] = **given[i];
        } else if (*fns[i]) {
            initial_[i] = interpolate(s, *fns[i]);
        } else {
            initial_[i] = FemVector::Zero(nd);
        }
    }

    forcing_[0] = forcing_field(s, grid_, basis_, data_.f1);
    forcing_[1] = forcing_field(s, grid_, basis_, data_.f2);

    const std::optional<SpaceTimeField>* fields[2] = {&data_.y1d_field, &data_.y2d_field};
    const SpaceTimeFn* targets[2] = {&data_.y1d, &data_.y2d};
    for (int i = 0; i < 2; ++i) {
        if (fields[i]->has_value()) {
            const SpaceTimeField& f = **fields[i];
            if (f.degree() != k || f.dim() != nd || f.grid().knots() != grid_->knots()) {
                throw std::invalid_argument("Problem: target field does not match the discretization");
            }
            target_[i] = f;
        } else {
            target_[i] = target_field(s, grid_, basis_, *targets[i]);
        }
    }

    if (robin) {
        const auto& trace = s.boundary_dofs();
        control_dim_ = static_cast<int>(trace.size());
        SparseMatrix e(nd, control_dim_);
        std::vector<Eigen::Triplet<double>> triplets;
        for (int j = 0; j < control_dim_; ++j) triplets.emplace_back(trace[j], j, 1.0);
        e.setFromTriplets(triplets.begin(), triplets.end());
        const SparseMatrix be = boundary_mass_ * e;
        control_mass_ = SparseMatrix(e.transpose()) * be;
        control_mass_.makeCompressed();
        for (int i = 0; i < 2; ++i) {
            control_load_[i] = params_.lambda(i) * be;
            control_load_[i].makeCompressed();
        }
        control_fixed_.assign(control_dim_, 0);
    } else {
        control_dim_ = nd;
        control_fixed_.assign(nd, 0);
        for (int dof : s.dirichlet_dofs()) control_fixed_[dof] = 1;
        control_mass_ = mass_;
        for (int j = 0; j < control_mass_.outerSize(); ++j) {
            for (SparseMatrix::InnerIterator it(control_mass_, j); it; ++it) {
                if (control_fixed_[it.row()] || control_fixed_[j]) it.valueRef() = 0.0;
            }
        }
        control_load_[0] = control_mass_;
        control_load_[1] = control_mass_;
    }
}

SpaceTimeField Problem::state_field() const { return SpaceTimeField(grid_, k(), ndof()); }

SpaceTimeField Problem::control_field() const { return SpaceTimeField(grid_, k(), control_dim_); }

ControlPair Problem::constant_control(double v) const {
    ControlPair g{control_field(), control_field()};
    for (int i = 0; i < 2; ++i) {
        for (int n = 0; n < grid_->intervals(); ++n) {
            for (int j = 0; j < basis_.size(); ++j) {
                auto node = g[i].node(n, j);
                for (int m = 0; m < control_dim_; ++m) node[m] = control_fixed_[m] ? 0.0 : v;
            }
        }
    }
    return g;
}

double Problem::control_inner(const SpaceTimeField& u, const SpaceTimeField& w) const {
    return spacetime_inner(basis_, control_mass_, u, w);
}

double Problem::state_inner(const SpaceTimeField& u, const SpaceTimeField& w) const {
    return spacetime_inner(basis_, mass_, u, w);
}

double spacetime_inner(const DgBasis& basis, const SparseMatrix& gram, const SpaceTimeField& u,
                       const SpaceTimeField& w) {
    if (!u.same_layout(w) || u.dim() != gram.rows()) {
        throw std::invalid_argument("spacetime_inner: fields do not match");
    }
    double s = 0.0;
    FemVector gw(u.dim());
    for (int n = 0; n < u.intervals(); ++n) {
        const double tau = u.grid().tau(n);
        for (int j = 0; j < basis.size(); ++j) {
            gw.noalias() = gram * w.node(n, j);
            for (int i = 0; i < basis.size(); ++i) s += tau * basis.mass()(i, j) * u.node(n, i).dot(gw);
        }
    }
    return s;
}

}  // namespace lvoc
