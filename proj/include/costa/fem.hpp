#pragma once

/**
 * @file fem.hpp
 * @brief P1 elasticity operators on a GridMesh and the three-level time stepper
 *
 *   (A + M/k^2) U^{i+1} = F^{i+1} + M (2 U^i - U^{i-1}) / k^2
 *
 * with all Dirichlet DOFs eliminated from the system.
 */

#include "costa/mesh.hpp"

#include <Eigen/Dense>
#include <Eigen/Sparse>
#include <Eigen/SparseCholesky>

#include <functional>
#include <memory>

namespace costa {

using Vector = Eigen::VectorXd;
using SparseMatrix = Eigen::SparseMatrix<double>;
using Matrix3 = Eigen::Matrix3d;
using Matrix6 = Eigen::Matrix<double, 6, 6>;

struct ElasticMaterial {
    double youngs_modulus = 1.0;
    double poisson_ratio = 0.25;

    /// Throws std::invalid_argument unless E > 0 and -1 < nu < 0.5.
    void validate() const;
};

/// Plane Voigt constitutive matrix acting on (eps_xx, eps_yy, gamma_xy).
Matrix3 elasticity_matrix_2d(double youngs_modulus, double poisson_ratio);

/// 3D Voigt matrix acting on (eps_xx, eps_yy, eps_zz, gamma_yz, gamma_zx, gamma_xy).
Matrix6 elasticity_matrix_3d(double youngs_modulus, double poisson_ratio);

SparseMatrix assemble_stiffness(const GridMesh& mesh, const Matrix3& constitutive);

/// Consistent P1 mass matrix, one block per displacement component.
SparseMatrix assemble_mass(const GridMesh& mesh);

using VectorField = std::function<Eigen::Vector2d(const Point2&)>;

/// Load vector F_i = int f . phi_i using the edge-midpoint rule on every triangle.
Vector assemble_load(const GridMesh& mesh, const VectorField& force);

/// Nodal interpolation of a displacement field.
Vector project_initial(const GridMesh& mesh, const VectorField& displacement);

struct StatePair {
    Vector current;   ///< U^{(i)}
    Vector previous;  ///< U^{(i-1)}
    int level = 0;
};

/**
 * Stiffness, mass and the Dirichlet-reduced combined operator
 * L = A + M/k^2. The interior block of L is factored once on construction
 * and shared between copies; all const members are safe to call from
 * several threads.
 */
class FemOperators {
public:
    FemOperators(SparseMatrix stiffness, SparseMatrix mass, double time_step, DofMap dofs);

    static FemOperators assemble(const GridMesh& mesh, const Matrix3& constitutive, double time_step);

    const SparseMatrix& stiffness() const { return stiffness_; }
    const SparseMatrix& mass() const { return mass_; }
    double time_step() const { return time_step_; }
    const DofMap& dofs() const { return dofs_; }

    const SparseMatrix& combined() const { return combined_; }
    const SparseMatrix& interior_block() const { return interior_block_; }
    const SparseMatrix& coupling_block() const { return coupling_block_; }

    /// F^{i+1} + M (2 U^i - U^{i-1}) / k^2 over all DOFs.
    Vector step_rhs(const Vector& load_next, const StatePair& state) const;

    /// Solves L_ii x = rhs for interior unknowns.
    Vector solve_interior(const Vector& rhs_interior) const;

    Vector gather_interior(const Vector& full) const;
    Vector gather_boundary(const Vector& full) const;
    Vector scatter(const Vector& interior, const Vector& boundary) const;

private:
    SparseMatrix stiffness_;
    SparseMatrix mass_;
    double time_step_;
    DofMap dofs_;
    SparseMatrix combined_;
    SparseMatrix interior_block_;
    SparseMatrix coupling_block_;
    std::shared_ptr<const Eigen::SimplicialLLT<SparseMatrix>> factor_;
};

struct ReducedSystem {
    const SparseMatrix* interior_operator = nullptr;  ///< L_ii, owned by the FemOperators
    Vector rhs;                                       ///< rhs_i - L_ib g
};

/// Eliminates the boundary DOFs, which are fixed to boundary_values.
ReducedSystem apply_dirichlet(const FemOperators& ops, const Vector& rhs_full, const Vector& boundary_values);

/// One step of the three-level scheme; boundary entries of the result equal boundary_next.
Vector time_step(const FemOperators& ops, const StatePair& state, const Vector& load_next,
                 const Vector& boundary_next);

}  // namespace costa
