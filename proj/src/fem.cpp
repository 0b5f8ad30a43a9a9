#include "costa/fem.hpp"

#include <cmath>
#include <stdexcept>
#include <string>

namespace costa {

namespace {

using Triplets = std::vector<Eigen::Triplet<double>>;

constexpr double kMinArea = 1e-14;

double checked_area(const GridMesh& mesh, int e)
{
    const double area = mesh.signed_area(e);
    if (!(area > kMinArea)) {
        throw std::invalid_argument("degenerate or inverted triangle " + std::to_string(e));
    }
    return area;
}

void check_length(const Vector& v, int expected, const char* what)
{
    if (v.size() != expected) {
        throw std::invalid_argument(std::string(what) + ": expected length " + std::to_string(expected) +
                                    ", got " + std::to_string(v.size()));
    }
}

// Strain-displacement matrix of a linear triangle; constant over the element.
Eigen::Matrix<double, 3, 6> strain_displacement(const GridMesh& mesh, const Triangle& tri, double area)
{
    Eigen::Matrix<double, 3, 6> b = Eigen::Matrix<double, 3, 6>::Zero();
    for (int a = 0; a < 3; ++a) {
        const Point2& pj = mesh.nodes[static_cast<std::size_t>(tri[(a + 1) % 3])];
        const Point2& pk = mesh.nodes[static_cast<std::size_t>(tri[(a + 2) % 3])];
        const double dx = (pj.y - pk.y) / (2.0 * area);
        const double dy = (pk.x - pj.x) / (2.0 * area);
        b(0, 2 * a) = dx;
        b(1, 2 * a + 1) = dy;
        b(2, 2 * a) = dy;
        b(2, 2 * a + 1) = dx;
    }
    return b;
}

}  // namespace

void ElasticMaterial::validate() const
{
    if (!(youngs_modulus > 0.0) || !std::isfinite(youngs_modulus)) {
        throw std::invalid_argument("Young's modulus must be positive and finite");
    }
    if (!(poisson_ratio > -1.0 && poisson_ratio < 0.5)) {
        throw std::invalid_argument("Poisson ratio must lie in (-1, 0.5)");
    }
}

Matrix3 elasticity_matrix_2d(double youngs_modulus, double poisson_ratio)
{
    if (std::abs(poisson_ratio) == 1.0) {
        throw std::invalid_argument("elasticity_matrix_2d: Poisson ratio of +-1 is singular");
    }
    const double scale = youngs_modulus / (1.0 - poisson_ratio * poisson_ratio);
    Matrix3 c;
    c << 1.0, poisson_ratio, 0.0,
         poisson_ratio, 1.0, 0.0,
         0.0, 0.0, 0.5 * (1.0 - poisson_ratio);
    return scale * c;
}

Matrix6 elasticity_matrix_3d(double youngs_modulus, double poisson_ratio)
{
    if (poisson_ratio == -1.0 || poisson_ratio == 0.5) {
        throw std::invalid_argument("elasticity_matrix_3d: Poisson ratio of -1 or 0.5 is singular");
    }
    const double scale = youngs_modulus / ((1.0 + poisson_ratio) * (1.0 - 2.0 * poisson_ratio));
    Matrix6 c = Matrix6::Zero();
    for (int i = 0; i < 3; ++i) {
        for (int j = 0; j < 3; ++j) {
            c(i, j) = (i == j) ? 1.0 - poisson_ratio : poisson_ratio;
        }
        c(3 + i, 3 + i) = 0.5 * (1.0 - 2.0 * poisson_ratio);
    }
    return scale * c;
}

SparseMatrix assemble_stiffness(const GridMesh& mesh, const Matrix3& constitutive)
{
    const int n = DofMap::dofs_per_node * mesh.node_count();
    Triplets triplets;
    triplets.reserve(static_cast<std::size_t>(36 * mesh.element_count()));
    for (int e = 0; e < mesh.element_count(); ++e) {
        const Triangle& tri = mesh.elements[static_cast<std::size_t>(e)];
        const double area = checked_area(mesh, e);
        const auto b = strain_displacement(mesh, tri, area);
        const Eigen::Matrix<double, 6, 6> ke = area * (b.transpose() * constitutive * b);
        for (int a = 0; a < 6; ++a) {
            const int row = DofMap::dof(tri[static_cast<std::size_t>(a / 2)], a % 2);
            for (int c = 0; c < 6; ++c) {
                const int col = DofMap::dof(tri[static_cast<std::size_t>(c / 2)], c % 2);
                triplets.emplace_back(row, col, ke(a, c));
            }
        }
    }
    SparseMatrix a(n, n);
    a.setFromTriplets(triplets.begin(), triplets.end());
    return a;
}

SparseMatrix assemble_mass(const GridMesh& mesh)
{
    const int n = DofMap::dofs_per_node * mesh.node_count();
    Triplets triplets;
    triplets.reserve(static_cast<std::size_t>(18 * mesh.element_count()));
    for (int e = 0; e < mesh.element_count(); ++e) {
        const Triangle& tri = mesh.elements[static_cast<std::size_t>(e)];
        const double area = checked_area(mesh, e);
        for (int a = 0; a < 3; ++a) {
            for (int c = 0; c < 3; ++c) {
                const double value = area / 12.0 * (a == c ? 2.0 : 1.0);
                for (int comp = 0; comp < 2; ++comp) {
                    triplets.emplace_back(DofMap::dof(tri[static_cast<std::size_t>(a)], comp),
                                          DofMap::dof(tri[static_cast<std::size_t>(c)], comp), value);
                }
            }
        }
    }
    SparseMatrix m(n, n);
    m.setFromTriplets(triplets.begin(), triplets.end());
    return m;
}

Vector assemble_load(const GridMesh& mesh, const VectorField& force)
{
    Vector load = Vector::Zero(DofMap::dofs_per_node * mesh.node_count());
    for (int e = 0; e < mesh.element_count(); ++e) {
        const Triangle& tri = mesh.elements[static_cast<std::size_t>(e)];
        const double area = checked_area(mesh, e);
        // Midpoint q lies on the edge opposite vertex q; basis a is 1/2 there unless a == q.
        for (int q = 0; q < 3; ++q) {
            const Point2& p1 = mesh.nodes[static_cast<std::size_t>(tri[(q + 1) % 3])];
            const Point2& p2 = mesh.nodes[static_cast<std::size_t>(tri[(q + 2) % 3])];
            const Point2 mid{0.5 * (p1.x + p2.x), 0.5 * (p1.y + p2.y)};
            const Eigen::Vector2d f = force(mid);
            if (!f.allFinite()) {
                throw std::domain_error("assemble_load: non-finite force at (" + std::to_string(mid.x) + ", " +
                                        std::to_string(mid.y) + ")");
            }
            for (int a = 0; a < 3; ++a) {
                if (a == q) {
                    continue;
                }
                const int node = tri[static_cast<std::size_t>(a)];
                load[DofMap::dof(node, 0)] += area / 6.0 * f.x();
                load[DofMap::dof(node, 1)] += area / 6.0 * f.y();
            }
        }
    }
    return load;
}

Vector project_initial(const GridMesh& mesh, const VectorField& displacement)
{
    Vector u(DofMap::dofs_per_node * mesh.node_count());
    for (int n = 0; n < mesh.node_count(); ++n) {
        const Eigen::Vector2d value = displacement(mesh.nodes[static_cast<std::size_t>(n)]);
        if (!value.allFinite()) {
            throw std::domain_error("project_initial: non-finite displacement at node " + std::to_string(n));
        }
        u[DofMap::dof(n, 0)] = value.x();
        u[DofMap::dof(n, 1)] = value.y();
    }
    return u;
}

FemOperators::FemOperators(SparseMatrix stiffness, SparseMatrix mass, double time_step, DofMap dofs)
    : stiffness_(std::move(stiffness)), mass_(std::move(mass)), time_step_(time_step), dofs_(std::move(dofs))
{
    if (!(time_step_ > 0.0)) {
        throw std::invalid_argument("FemOperators: time step must be positive");
    }
    const int n = dofs_.total();
    if (stiffness_.rows() != n || stiffness_.cols() != n || mass_.rows() != n || mass_.cols() != n) {
        throw std::invalid_argument("FemOperators: operator size does not match DOF map");
    }
    combined_ = stiffness_ + mass_ / (time_step_ * time_step_);
    combined_.makeCompressed();

    Triplets ii;
    Triplets ib;
    for (int col = 0; col < combined_.outerSize(); ++col) {
        for (SparseMatrix::InnerIterator it(combined_, col); it; ++it) {
            const int r = dofs_.interior_slot(static_cast<int>(it.row()));
            if (r < 0) {
                continue;
            }
            if (const int c = dofs_.interior_slot(static_cast<int>(it.col())); c >= 0) {
                ii.emplace_back(r, c, it.value());
            } else {
                ib.emplace_back(r, dofs_.boundary_slot(static_cast<int>(it.col())), it.value());
            }
        }
    }
    interior_block_.resize(dofs_.interior_count(), dofs_.interior_count());
    interior_block_.setFromTriplets(ii.begin(), ii.end());
    coupling_block_.resize(dofs_.interior_count(), dofs_.boundary_count());
    coupling_block_.setFromTriplets(ib.begin(), ib.end());

    auto factor = std::make_shared<Eigen::SimplicialLLT<SparseMatrix>>();
    if (dofs_.interior_count() > 0) {
        factor->compute(interior_block_);
        if (factor->info() != Eigen::Success) {
            throw std::runtime_error("FemOperators: reduced operator is not positive definite");
        }
    }
    factor_ = std::move(factor);
}

FemOperators FemOperators::assemble(const GridMesh& mesh, const Matrix3& constitutive, double time_step)
{
    return FemOperators(assemble_stiffness(mesh, constitutive), assemble_mass(mesh), time_step, DofMap(mesh));
}

Vector FemOperators::step_rhs(const Vector& load_next, const StatePair& state) const
{
    check_length(load_next, dofs_.total(), "step_rhs load");
    check_length(state.current, dofs_.total(), "step_rhs current state");
    check_length(state.previous, dofs_.total(), "step_rhs previous state");
    const Vector history = 2.0 * state.current - state.previous;
    return load_next + (mass_ * history) / (time_step_ * time_step_);
}

Vector FemOperators::solve_interior(const Vector& rhs_interior) const
{
    check_length(rhs_interior, dofs_.interior_count(), "solve_interior");
    if (dofs_.interior_count() == 0) {
        return Vector();
    }
    Vector x = factor_->solve(rhs_interior);
    if (factor_->info() != Eigen::Success || !x.allFinite()) {
        throw std::runtime_error("FemOperators: linear solve failed");
    }
    return x;
}

Vector FemOperators::gather_interior(const Vector& full) const
{
    check_length(full, dofs_.total(), "gather_interior");
    Vector out(dofs_.interior_count());
    for (int s = 0; s < dofs_.interior_count(); ++s) {
        out[s] = full[dofs_.interior_dofs()[static_cast<std::size_t>(s)]];
    }
    return out;
}

Vector FemOperators::gather_boundary(const Vector& full) const
{
    check_length(full, dofs_.total(), "gather_boundary");
    Vector out(dofs_.boundary_count());
    for (int s = 0; s < dofs_.boundary_count(); ++s) {
        out[s] = full[dofs_.boundary_dofs()[static_cast<std::size_t>(s)]];
    }
    return out;
}

Vector FemOperators::scatter(const Vector& interior, const Vector& boundary) const
{
    check_length(interior, dofs_.interior_count(), "scatter interior");
    check_length(boundary, dofs_.boundary_count(), "scatter boundary");
    Vector full(dofs_.total());
    for (int s = 0; s < dofs_.interior_count(); ++s) {
        full[dofs_.interior_dofs()[static_cast<std::size_t>(s)]] = interior[s];
    }
    for (int s = 0; s < dofs_.boundary_count(); ++s) {
        full[dofs_.boundary_dofs()[static_cast<std::size_t>(s)]] = boundary[s];
    }
    return full;
}

ReducedSystem apply_dirichlet(const FemOperators& ops, const Vector& rhs_full, const Vector& boundary_values)
{
    check_length(boundary_values, ops.dofs().boundary_count(), "apply_dirichlet boundary values");
    ReducedSystem system;
    system.interior_operator = &ops.interior_block();
    system.rhs = ops.gather_interior(rhs_full) - ops.coupling_block() * boundary_values;
    return system;
}

Vector time_step(const FemOperators& ops, const StatePair& state, const Vector& load_next,
                 const Vector& boundary_next)
{
    const ReducedSystem system = apply_dirichlet(ops, ops.step_rhs(load_next, state), boundary_next);
    return ops.scatter(ops.solve_interior(system.rhs), boundary_next);
}

}  // namespace costa
