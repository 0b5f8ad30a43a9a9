#pragma once

/**
 * @file manufactured.hpp
 * @brief Manufactured displacement families and the data derived from them.
 *
 * Loads are obtained from the analytic displacement by differentiating
 * numerically: f = u_tt - D^T sigma(eps(u)), where every derivative is a
 * central difference with base step 1e-3 refined by two Richardson levels.
 * Strains are nested inside the stress divergence, so the same code path
 * serves the linear, 3D and strain-softening cases.
 */

#include "costa/mesh.hpp"

#include <Eigen/Dense>

#include <string>
#include <string_view>
#include <vector>

namespace costa {

enum class SolutionLabel { e1, e2, e3, ed1, ed2, ed3, n1, n2, n3 };

enum class SolutionFamily { sinusoidal, exponential, polynomial };

enum class ModulusLaw {
    constant,          ///< E = base_modulus
    strain_softening,  ///< E = 5 / sqrt(20 + |eps|_F)
};

std::string_view label_name(SolutionLabel label);
/// Throws std::invalid_argument for an unknown label.
SolutionLabel parse_solution_label(std::string_view name);
SolutionFamily family_of(SolutionLabel label);
std::string_view family_name(SolutionFamily family);

struct ManufacturedCase {
    SolutionLabel label = SolutionLabel::e1;
    int dimension = 2;
    ModulusLaw modulus_law = ModulusLaw::constant;
    double base_modulus = 1.0;
    double poisson_ratio = 0.25;

    static ManufacturedCase from_label(SolutionLabel label);
};

/// Positions and displacements are stored with three components; z is unused in 2D.
using Vec3 = Eigen::Vector3d;
using Voigt = Eigen::Matrix<double, 6, 1>;

struct StrainState {
    int dimension = 2;
    /// 2D: (eps_xx, eps_yy, gamma_xy, 0, 0, 0).
    /// 3D: (eps_xx, eps_yy, eps_zz, gamma_yz, gamma_zx, gamma_xy).
    Voigt voigt = Voigt::Zero();

    /// Frobenius norm of the strain tensor; engineering shears are halved.
    double frobenius_norm() const;
};

/// E(eps) = 5 / sqrt(20 + |eps|_F).
double young_modulus(const StrainState& strain);

Vec3 eval_displacement(const ManufacturedCase& mcase, double alpha, double t, const Vec3& x);
StrainState eval_strain(const ManufacturedCase& mcase, double alpha, double t, const Vec3& x);
Vec3 derive_load(const ManufacturedCase& mcase, double alpha, double t, const Vec3& x);

struct PlaneSample {
    Eigen::Vector2d displacement;
    Eigen::Vector2d load;
};

/// In-plane components of a 3D case at z = 0. Throws for 2D cases.
PlaneSample restrict_to_plane(const ManufacturedCase& mcase, double alpha, double t, const Point2& p);

/// Displacement seen by a 2D model: the case itself, or its z = 0 restriction.
Eigen::Vector2d planar_displacement(const ManufacturedCase& mcase, double alpha, double t, const Point2& p);
Eigen::Vector2d planar_load(const ManufacturedCase& mcase, double alpha, double t, const Point2& p);

struct AlphaSplit {
    std::vector<double> train;
    std::vector<double> validation;
    std::vector<double> test;

    /// Training {0.1, ..., 2.0} minus validation and test.
    static AlphaSplit standard();

    std::vector<double> interpolation() const;  ///< test values inside the training range
    std::vector<double> extrapolation() const;  ///< test values outside it
    bool is_interpolation(double alpha) const;

    /// Throws std::invalid_argument if a set is empty or two sets overlap.
    void validate() const;
};

}  // namespace costa
