#include "costa/manufactured.hpp"

#include "costa/fem.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <stdexcept>
#include <string>

namespace costa {

namespace {

constexpr double kBaseStep = 1e-3;
constexpr double kPi = std::numbers::pi;

bool is_polynomial(SolutionLabel label)
{
    return family_of(label) == SolutionFamily::polynomial;
}

Vec3 displacement_2d(SolutionLabel label, double alpha, double t, double x, double y)
{
    switch (family_of(label)) {
    case SolutionFamily::sinusoidal: {
        const double s = kPi * (x + alpha * y);
        return {std::sin(s) * std::cos(alpha * t), std::cos(s) * std::sin(alpha * t), 0.0};
    }
    case SolutionFamily::exponential: {
        const double c = 1.0 + alpha + t * t;
        return {std::exp((-t * x * x + y * y) / c), std::exp((t * x * x - y * y) / c), 0.0};
    }
    case SolutionFamily::polynomial: {
        const double tau = t + 0.5;
        return {x * x * x + y * y * std::pow(tau, 1.5) + x * y * alpha,
                x * x + y * y * y * std::pow(tau, 1.1) + x * y * alpha, 0.0};
    }
    }
    return Vec3::Zero();
}

Vec3 displacement_3d(SolutionLabel label, double alpha, double t, double x, double y, double z)
{
    switch (label) {
    case SolutionLabel::ed1: {
        const double s = kPi * (x + alpha * y + 0.5 * (1.0 + alpha) * z);
        return {std::sin(s) * std::cos(alpha * t), std::cos(s) * std::sin(alpha * t),
                -std::cos(s) * std::sin(alpha * t)};
    }
    case SolutionLabel::ed2: {
        const double c = 1.0 + alpha + t * t;
        return {std::exp((-t * x * x + y * y + z * z) / c), std::exp((t * x * x - y * y + z * z) / c),
                std::exp((t * x * x + y * y - z * z) / c)};
    }
    case SolutionLabel::ed3: {
        const double tau = t + 0.5;
        const double root = std::sqrt(tau);
        const double p15 = std::pow(tau, 1.5);
        const double p11 = std::pow(tau, 1.1);
        return {x * x * x + y * y * p15 + x * y * alpha + root * z * z + z * (x + y) * alpha,
                x * x + y * y * y * p11 - x * y * alpha + root * z * z + z * (x - y) * alpha,
                x * x + y * y * p11 + x * y * alpha + root * z * z * z + z * (y - x) * alpha};
    }
    default:
        break;
    }
    throw std::invalid_argument("displacement_3d: not a 3D label");
}

// Central difference refined by two Richardson levels (error O(h^6)).
template <class Fn>
auto richardson_first(Fn&& fn, double h)
{
    auto central = [&](double step) { return ((fn(step) - fn(-step)) / (2.0 * step)).eval(); };
    const auto d0 = central(h);
    const auto d1 = central(0.5 * h);
    const auto d2 = central(0.25 * h);
    const auto r0 = ((4.0 * d1 - d0) / 3.0).eval();
    const auto r1 = ((4.0 * d2 - d1) / 3.0).eval();
    return ((16.0 * r1 - r0) / 15.0).eval();
}

template <class Fn>
auto richardson_second(Fn&& fn, double h)
{
    const auto centre = fn(0.0);
    auto central = [&](double step) { return ((fn(step) - 2.0 * centre + fn(-step)) / (step * step)).eval(); };
    const auto d0 = central(h);
    const auto d1 = central(0.5 * h);
    const auto d2 = central(0.25 * h);
    const auto r0 = ((4.0 * d1 - d0) / 3.0).eval();
    const auto r1 = ((4.0 * d2 - d1) / 3.0).eval();
    return ((16.0 * r1 - r0) / 15.0).eval();
}

void check_time(const ManufacturedCase& mcase, double t, double margin)
{
    if (is_polynomial(mcase.label) && !(t - margin > -0.5)) {
        throw std::domain_error("solution " + std::string(label_name(mcase.label)) +
                                " is not differentiable at t = " + std::to_string(t));
    }
}

Voigt stress_at(const ManufacturedCase& mcase, const StrainState& strain)
{
    const double modulus =
        mcase.modulus_law == ModulusLaw::constant ? mcase.base_modulus : young_modulus(strain);
    Voigt sigma = Voigt::Zero();
    if (mcase.dimension == 2) {
        sigma.head<3>() = elasticity_matrix_2d(modulus, mcase.poisson_ratio) * strain.voigt.head<3>();
    } else {
        sigma = elasticity_matrix_3d(modulus, mcase.poisson_ratio) * strain.voigt;
    }
    return sigma;
}

template <class T>
void require_finite(const T& value, const char* what)
{
    if (!value.allFinite()) {
        throw std::domain_error(std::string(what) + ": non-finite intermediate");
    }
}

}  // namespace

std::string_view label_name(SolutionLabel label)
{
    switch (label) {
    case SolutionLabel::e1: return "e1";
    case SolutionLabel::e2: return "e2";
    case SolutionLabel::e3: return "e3";
    case SolutionLabel::ed1: return "ed1";
    case SolutionLabel::ed2: return "ed2";
    case SolutionLabel::ed3: return "ed3";
    case SolutionLabel::n1: return "n1";
    case SolutionLabel::n2: return "n2";
    case SolutionLabel::n3: return "n3";
    }
    return "?";
}

SolutionLabel parse_solution_label(std::string_view name)
{
    for (auto label : {SolutionLabel::e1, SolutionLabel::e2, SolutionLabel::e3, SolutionLabel::ed1,
                       SolutionLabel::ed2, SolutionLabel::ed3, SolutionLabel::n1, SolutionLabel::n2,
                       SolutionLabel::n3}) {
        if (label_name(label) == name) {
            return label;
        }
    }
    throw std::invalid_argument("unknown solution label '" + std::string(name) + "'");
}

SolutionFamily family_of(SolutionLabel label)
{
    switch (label) {
    case SolutionLabel::e1:
    case SolutionLabel::ed1:
    case SolutionLabel::n1:
        return SolutionFamily::sinusoidal;
    case SolutionLabel::e2:
    case SolutionLabel::ed2:
    case SolutionLabel::n2:
        return SolutionFamily::exponential;
    default:
        return SolutionFamily::polynomial;
    }
}

std::string_view family_name(SolutionFamily family)
{
    switch (family) {
    case SolutionFamily::sinusoidal: return "sinusoidal";
    case SolutionFamily::exponential: return "exponential";
    case SolutionFamily::polynomial: return "polynomial";
    }
    return "?";
}

ManufacturedCase ManufacturedCase::from_label(SolutionLabel label)
{
    ManufacturedCase mcase;
    mcase.label = label;
    switch (label) {
    case SolutionLabel::ed1:
    case SolutionLabel::ed2:
    case SolutionLabel::ed3:
        mcase.dimension = 3;
        break;
    case SolutionLabel::n1:
    case SolutionLabel::n2:
    case SolutionLabel::n3:
        mcase.modulus_law = ModulusLaw::strain_softening;
        break;
    default:
        break;
    }
    return mcase;
}

double StrainState::frobenius_norm() const
{
    if (dimension == 2) {
        const double half_shear = 0.5 * voigt[2];
        return std::sqrt(voigt[0] * voigt[0] + voigt[1] * voigt[1] + 2.0 * half_shear * half_shear);
    }
    double sum = voigt.head<3>().squaredNorm();
    for (int i = 3; i < 6; ++i) {
        sum += 2.0 * (0.5 * voigt[i]) * (0.5 * voigt[i]);
    }
    return std::sqrt(sum);
}

double young_modulus(const StrainState& strain)
{
    return 5.0 / std::sqrt(20.0 + strain.frobenius_norm());
}

Vec3 eval_displacement(const ManufacturedCase& mcase, double alpha, double t, const Vec3& x)
{
    check_time(mcase, t, 0.0);
    const Vec3 u = mcase.dimension == 3 ? displacement_3d(mcase.label, alpha, t, x[0], x[1], x[2])
                                        : displacement_2d(mcase.label, alpha, t, x[0], x[1]);
    require_finite(u, "eval_displacement");
    return u;
}

StrainState eval_strain(const ManufacturedCase& mcase, double alpha, double t, const Vec3& x)
{
    check_time(mcase, t, 0.0);
    const int dim = mcase.dimension;
    Eigen::Matrix3d grad = Eigen::Matrix3d::Zero();  // grad(i, j) = d u_i / d x_j
    for (int j = 0; j < dim; ++j) {
        grad.col(j) = richardson_first(
            [&](double offset) {
                Vec3 p = x;
                p[j] += offset;
                return eval_displacement(mcase, alpha, t, p);
            },
            kBaseStep);
    }

    StrainState strain;
    strain.dimension = dim;
    if (dim == 2) {
        strain.voigt << grad(0, 0), grad(1, 1), grad(0, 1) + grad(1, 0), 0.0, 0.0, 0.0;
    } else {
        strain.voigt << grad(0, 0), grad(1, 1), grad(2, 2), grad(1, 2) + grad(2, 1), grad(0, 2) + grad(2, 0),
            grad(0, 1) + grad(1, 0);
    }
    require_finite(strain.voigt, "eval_strain");
    return strain;
}

Vec3 derive_load(const ManufacturedCase& mcase, double alpha, double t, const Vec3& x)
{
    check_time(mcase, t, kBaseStep);
    const int dim = mcase.dimension;

    // dsigma(:, j) = d sigma / d x_j
    Eigen::Matrix<double, 6, 3> dsigma = Eigen::Matrix<double, 6, 3>::Zero();
    for (int j = 0; j < dim; ++j) {
        dsigma.col(j) = richardson_first(
            [&](double offset) {
                Vec3 p = x;
                p[j] += offset;
                return stress_at(mcase, eval_strain(mcase, alpha, t, p));
            },
            kBaseStep);
    }

    Vec3 divergence = Vec3::Zero();
    if (dim == 2) {
        // sigma = (xx, yy, xy)
        divergence[0] = dsigma(0, 0) + dsigma(2, 1);
        divergence[1] = dsigma(2, 0) + dsigma(1, 1);
    } else {
        // sigma = (xx, yy, zz, yz, zx, xy)
        divergence[0] = dsigma(0, 0) + dsigma(5, 1) + dsigma(4, 2);
        divergence[1] = dsigma(5, 0) + dsigma(1, 1) + dsigma(3, 2);
        divergence[2] = dsigma(4, 0) + dsigma(3, 1) + dsigma(2, 2);
    }

    const Vec3 acceleration =
        richardson_second([&](double offset) { return eval_displacement(mcase, alpha, t + offset, x); }, kBaseStep);

    const Vec3 load = acceleration - divergence;
    require_finite(load, "derive_load");
    return load;
}

PlaneSample restrict_to_plane(const ManufacturedCase& mcase, double alpha, double t, const Point2& p)
{
    if (mcase.dimension != 3) {
        throw std::invalid_argument("restrict_to_plane: " + std::string(label_name(mcase.label)) +
                                    " is not a 3D case");
    }
    const Vec3 x(p.x, p.y, 0.0);
    return {eval_displacement(mcase, alpha, t, x).head<2>(), derive_load(mcase, alpha, t, x).head<2>()};
}

Eigen::Vector2d planar_displacement(const ManufacturedCase& mcase, double alpha, double t, const Point2& p)
{
    return eval_displacement(mcase, alpha, t, Vec3(p.x, p.y, 0.0)).head<2>();
}

Eigen::Vector2d planar_load(const ManufacturedCase& mcase, double alpha, double t, const Point2& p)
{
    return derive_load(mcase, alpha, t, Vec3(p.x, p.y, 0.0)).head<2>();
}

AlphaSplit AlphaSplit::standard()
{
    AlphaSplit split;
    split.test = {-0.5, 0.7, 1.5, 2.5};
    split.validation = {0.8, 1.1};
    for (int tenths = 1; tenths <= 20; ++tenths) {
        if (tenths == 7 || tenths == 15 || tenths == 8 || tenths == 11) {
            continue;
        }
        split.train.push_back(tenths / 10.0);
    }
    return split;
}

bool AlphaSplit::is_interpolation(double alpha) const
{
    if (train.empty()) {
        return false;
    }
    const auto [lo, hi] = std::minmax_element(train.begin(), train.end());
    return alpha >= *lo && alpha <= *hi;
}

std::vector<double> AlphaSplit::interpolation() const
{
    std::vector<double> out;
    std::copy_if(test.begin(), test.end(), std::back_inserter(out), [&](double a) { return is_interpolation(a); });
    return out;
}

std::vector<double> AlphaSplit::extrapolation() const
{
    std::vector<double> out;
    std::copy_if(test.begin(), test.end(), std::back_inserter(out), [&](double a) { return !is_interpolation(a); });
    return out;
}

void AlphaSplit::validate() const
{
    if (train.empty() || validation.empty() || test.empty()) {
        throw std::invalid_argument("AlphaSplit: train, validation and test sets must be non-empty");
    }
    auto overlaps = [](const std::vector<double>& a, const std::vector<double>& b) {
        return std::any_of(a.begin(), a.end(), [&](double v) { return std::find(b.begin(), b.end(), v) != b.end(); });
    };
    if (overlaps(train, validation) || overlaps(train, test) || overlaps(validation, test)) {
        throw std::invalid_argument("AlphaSplit: train, validation and test sets must be disjoint");
    }
}

}  // namespace costa
