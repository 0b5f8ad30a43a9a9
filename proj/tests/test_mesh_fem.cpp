#include "costa/fem.hpp"

#include <doctest.h>

#include <Eigen/Eigenvalues>

#include <cmath>

using namespace costa;

namespace {

// Barycentric gradients from the inverse of [1 x y] at the vertices.
Eigen::Matrix<double, 2, 3> basis_gradients(const GridMesh& mesh, const Triangle& tri)
{
    Eigen::Matrix3d v;
    for (int a = 0; a < 3; ++a) {
        const Point2& p = mesh.nodes[static_cast<std::size_t>(tri[a])];
        v.row(a) << 1.0, p.x, p.y;
    }
    const Eigen::Matrix3d coeff = v.inverse();  // column a: coefficients of phi_a
    return coeff.bottomRows<2>();
}

double triangle_area(const GridMesh& mesh, const Triangle& tri)
{
    const Point2& a = mesh.nodes[static_cast<std::size_t>(tri[0])];
    const Point2& b = mesh.nodes[static_cast<std::size_t>(tri[1])];
    const Point2& c = mesh.nodes[static_cast<std::size_t>(tri[2])];
    return 0.5 * std::abs((b.x - a.x) * (c.y - a.y) - (c.x - a.x) * (b.y - a.y));
}

Eigen::MatrixXd stiffness_oracle(const GridMesh& mesh, const Matrix3& c)
{
    const int n = 2 * mesh.node_count();
    Eigen::MatrixXd k = Eigen::MatrixXd::Zero(n, n);
    // Three-point Gauss rule; the integrand is constant so any consistent rule must agree.
    const double weights[3] = {1.0 / 3.0, 1.0 / 3.0, 1.0 / 3.0};
    for (const Triangle& tri : mesh.elements) {
        const auto g = basis_gradients(mesh, tri);
        Eigen::Matrix<double, 3, 6> b = Eigen::Matrix<double, 3, 6>::Zero();
        for (int a = 0; a < 3; ++a) {
            b(0, 2 * a) = g(0, a);
            b(1, 2 * a + 1) = g(1, a);
            b(2, 2 * a) = g(1, a);
            b(2, 2 * a + 1) = g(0, a);
        }
        const double area = triangle_area(mesh, tri);
        Eigen::Matrix<double, 6, 6> ke = Eigen::Matrix<double, 6, 6>::Zero();
        for (double w : weights) {
            ke += w * area * b.transpose() * c * b;
        }
        for (int a = 0; a < 3; ++a) {
            for (int bb = 0; bb < 3; ++bb) {
                for (int ca = 0; ca < 2; ++ca) {
                    for (int cb = 0; cb < 2; ++cb) {
                        k(2 * tri[a] + ca, 2 * tri[bb] + cb) += ke(2 * a + ca, 2 * bb + cb);
                    }
                }
            }
        }
    }
    return k;
}

struct QuadPoint {
    double l1, l2, l3, w;
};

// Degree-5 seven-point rule, weights sum to one.
const std::vector<QuadPoint>& seven_point_rule()
{
    static const std::vector<QuadPoint> rule = [] {
        const double a1 = 0.059715871789770, b1 = 0.470142064105115;
        const double a2 = 0.797426985353087, b2 = 0.101286507323456;
        const double w1 = 0.132394152788506, w2 = 0.125939180544827;
        return std::vector<QuadPoint>{{1.0 / 3, 1.0 / 3, 1.0 / 3, 0.225}, {a1, b1, b1, w1}, {b1, a1, b1, w1},
                                      {b1, b1, a1, w1}, {a2, b2, b2, w2}, {b2, a2, b2, w2}, {b2, b2, a2, w2}};
    }();
    return rule;
}

Vector load_oracle(const GridMesh& mesh, const VectorField& f)
{
    Vector out = Vector::Zero(2 * mesh.node_count());
    for (const Triangle& tri : mesh.elements) {
        const double area = triangle_area(mesh, tri);
        const Point2& p0 = mesh.nodes[static_cast<std::size_t>(tri[0])];
        const Point2& p1 = mesh.nodes[static_cast<std::size_t>(tri[1])];
        const Point2& p2 = mesh.nodes[static_cast<std::size_t>(tri[2])];
        for (const QuadPoint& q : seven_point_rule()) {
            const Point2 p{q.l1 * p0.x + q.l2 * p1.x + q.l3 * p2.x, q.l1 * p0.y + q.l2 * p1.y + q.l3 * p2.y};
            const Eigen::Vector2d v = f(p);
            const double phi[3] = {q.l1, q.l2, q.l3};
            for (int a = 0; a < 3; ++a) {
                out(2 * tri[a]) += q.w * area * v.x() * phi[a];
                out(2 * tri[a] + 1) += q.w * area * v.y() * phi[a];
            }
        }
    }
    return out;
}

Vector rigid_mode(const GridMesh& mesh, int mode)
{
    Vector v(2 * mesh.node_count());
    for (int n = 0; n < mesh.node_count(); ++n) {
        const Point2& p = mesh.nodes[static_cast<std::size_t>(n)];
        const Eigen::Vector2d u = mode == 0 ? Eigen::Vector2d(1, 0) : mode == 1 ? Eigen::Vector2d(0, 1)
                                                                                  : Eigen::Vector2d(-p.y, p.x);
        v.segment<2>(2 * n) = u;
    }
    return v;
}

}  // namespace

TEST_SUITE("mesh")
{
    TEST_CASE("grid counts and orientation")
    {
        const GridMesh mesh = build_grid_mesh(15, 15);
        CHECK(mesh.node_count() == 256);
        CHECK(mesh.element_count() == 450);
        CHECK(mesh.boundary_nodes.size() == 60);
        for (int e = 0; e < mesh.element_count(); ++e) {
            CHECK(mesh.signed_area(e) == doctest::Approx(1.0 / 450.0).epsilon(1e-12));
        }
        const DofMap dofs(mesh);
        CHECK(dofs.total() == 512);
        CHECK(dofs.interior_count() == 392);
        CHECK(dofs.boundary_count() == 120);
    }

    TEST_CASE("rectangular grid and node layout")
    {
        const GridMesh mesh = build_grid_mesh(3, 2);
        CHECK(mesh.node_count() == 12);
        CHECK(mesh.element_count() == 12);
        CHECK(mesh.node_index(2, 1) == 6);
        CHECK(mesh.nodes[6].x == doctest::Approx(2.0 / 3.0));
        CHECK(mesh.nodes[6].y == doctest::Approx(0.5));
        CHECK(mesh.is_boundary(0));
        CHECK_FALSE(mesh.is_boundary(5));
        CHECK(std::is_sorted(mesh.boundary_nodes.begin(), mesh.boundary_nodes.end()));
    }

    TEST_CASE("smallest and experiment-4 grids")
    {
        const GridMesh one = build_grid_mesh(1, 1);
        CHECK(one.node_count() == 4);
        CHECK(one.element_count() == 2);
        CHECK(one.boundary_nodes.size() == 4);
        const GridMesh ten = build_grid_mesh(10, 10);
        CHECK(ten.node_count() == 121);
        CHECK(ten.element_count() == 200);
        CHECK(ten.boundary_nodes.size() == 40);
        double total = 0.0;
        for (int e = 0; e < ten.element_count(); ++e) {
            total += ten.signed_area(e);
        }
        CHECK(total == doctest::Approx(1.0).epsilon(1e-14));
    }

    TEST_CASE("invalid grids")
    {
        CHECK_THROWS_AS(build_grid_mesh(0, 4), std::invalid_argument);
        CHECK_THROWS_AS(build_grid_mesh(4, -1), std::invalid_argument);
    }

    TEST_CASE("dof slots partition the dofs")
    {
        const GridMesh mesh = build_grid_mesh(4, 4);
        const DofMap dofs(mesh);
        CHECK(dofs.interior_count() + dofs.boundary_count() == dofs.total());
        for (int d = 0; d < dofs.total(); ++d) {
            const int node = d / 2;
            const bool boundary = mesh.is_boundary(node);
            CHECK((dofs.boundary_slot(d) >= 0) == boundary);
            CHECK((dofs.interior_slot(d) >= 0) == !boundary);
        }
        for (int i = 0; i < dofs.interior_count(); ++i) {
            CHECK(dofs.interior_slot(dofs.interior_dofs()[static_cast<std::size_t>(i)]) == i);
        }
    }
}

TEST_SUITE("constitutive")
{
    TEST_CASE("plane matrix entries")
    {
        const Matrix3 c = elasticity_matrix_2d(1.0, 0.25);
        const double s = 1.0 / (1.0 - 0.0625);
        CHECK(c(0, 0) == doctest::Approx(s));
        CHECK(c(0, 1) == doctest::Approx(0.25 * s));
        CHECK(c(2, 2) == doctest::Approx(0.375 * s));
        CHECK(c(0, 2) == 0.0);
        CHECK_THROWS_AS(elasticity_matrix_2d(1.0, 1.0), std::invalid_argument);
        CHECK_THROWS_AS(elasticity_matrix_2d(1.0, -1.0), std::invalid_argument);
    }

    TEST_CASE("plane matrix examples")
    {
        Matrix3 expected;
        expected << 16.0 / 15, 4.0 / 15, 0, 4.0 / 15, 16.0 / 15, 0, 0, 0, 0.4;
        CHECK((elasticity_matrix_2d(1.0, 0.25) - expected).cwiseAbs().maxCoeff() < 1e-15);
        const Matrix3 free = elasticity_matrix_2d(1.0, 0.0);
        CHECK(free == Eigen::Vector3d(1.0, 1.0, 0.5).asDiagonal().toDenseMatrix());
        CHECK(elasticity_matrix_2d(2.0, 0.0) == 2.0 * free);
    }

    TEST_CASE("3D matrix entries")
    {
        const Matrix6 c = elasticity_matrix_3d(2.0, 0.25);
        const double s = 2.0 / (1.25 * 0.5);
        CHECK(c(0, 0) == doctest::Approx(0.75 * s));
        CHECK(c(1, 2) == doctest::Approx(0.25 * s));
        CHECK(c(3, 3) == doctest::Approx(0.25 * s));
        CHECK(c(5, 5) == doctest::Approx(0.25 * s));
        CHECK((c - c.transpose()).norm() == 0.0);
        CHECK_THROWS_AS(elasticity_matrix_3d(1.0, 0.5), std::invalid_argument);
        CHECK_THROWS_AS(elasticity_matrix_3d(1.0, -1.0), std::invalid_argument);
    }

    TEST_CASE("3D matrix examples")
    {
        const Matrix6 c = elasticity_matrix_3d(1.0, 0.25);
        CHECK(c(0, 0) == doctest::Approx(1.2));
        CHECK(c(0, 1) == doctest::Approx(0.4));
        CHECK(c(4, 4) == doctest::Approx(0.4));
        Matrix6 free = Matrix6::Zero();
        free.diagonal() << 1, 1, 1, 0.5, 0.5, 0.5;
        CHECK(elasticity_matrix_3d(1.0, 0.0) == free);
        CHECK(elasticity_matrix_3d(3.0, 0.0) == 3.0 * free);
    }

    TEST_CASE("material validation")
    {
        CHECK_NOTHROW(ElasticMaterial{}.validate());
        CHECK_THROWS_AS((ElasticMaterial{0.0, 0.2}.validate()), std::invalid_argument);
        CHECK_THROWS_AS((ElasticMaterial{1.0, 0.5}.validate()), std::invalid_argument);
    }
}

TEST_SUITE("assembly")
{
    TEST_CASE("stiffness matches quadrature oracle")
    {
        const GridMesh mesh = build_grid_mesh(4, 3);
        const Matrix3 c = elasticity_matrix_2d(1.7, 0.3);
        const Eigen::MatrixXd k = Eigen::MatrixXd(assemble_stiffness(mesh, c));
        CHECK((k - stiffness_oracle(mesh, c)).cwiseAbs().maxCoeff() < 1e-12);
    }

    TEST_CASE("stiffness symmetry and rigid-body kernel")
    {
        const GridMesh mesh = build_grid_mesh(8, 8);
        const SparseMatrix a = assemble_stiffness(mesh, elasticity_matrix_2d(1.0, 0.25));
        const Eigen::MatrixXd dense(a);
        CHECK((dense - dense.transpose()).cwiseAbs().maxCoeff() <= 1e-12);
        for (int mode = 0; mode < 3; ++mode) {
            CHECK((a * rigid_mode(mesh, mode)).cwiseAbs().maxCoeff() <= 1e-10);
        }
    }

    TEST_CASE("mass entries integrate the domain twice")
    {
        const GridMesh mesh = build_grid_mesh(5, 7);
        const SparseMatrix m = assemble_mass(mesh);
        CHECK(Eigen::MatrixXd(m).sum() == doctest::Approx(2.0).epsilon(1e-12));
        // Consistent mass is exact for products of linear fields.
        const Vector ones_x = rigid_mode(mesh, 0);
        Vector xfield = Vector::Zero(2 * mesh.node_count());
        for (int n = 0; n < mesh.node_count(); ++n) {
            xfield(2 * n) = mesh.nodes[static_cast<std::size_t>(n)].x;
        }
        CHECK(xfield.dot(m * xfield) == doctest::Approx(1.0 / 3.0).epsilon(1e-12));
        CHECK(ones_x.dot(m * xfield) == doctest::Approx(0.5).epsilon(1e-12));
    }

    TEST_CASE("single-cell mass and small-mesh stiffness")
    {
        const GridMesh one = build_grid_mesh(1, 1);
        const Eigen::MatrixXd m(assemble_mass(one));
        // Node (1,0) touches one triangle of area 0.5, node (0,0) touches both.
        CHECK(m(2, 2) == doctest::Approx(1.0 / 12.0));
        CHECK(m(0, 0) == doctest::Approx(2.0 / 12.0));
        CHECK(m(0, 1) == 0.0);
        CHECK(Eigen::LLT<Eigen::MatrixXd>(m).info() == Eigen::Success);
        const GridMesh two = build_grid_mesh(2, 2);
        const Matrix3 c = elasticity_matrix_2d(1.0, 0.25);
        CHECK((Eigen::MatrixXd(assemble_stiffness(two, c)) - stiffness_oracle(two, c)).cwiseAbs().maxCoeff() < 1e-12);
    }

    TEST_CASE("reduced operators are positive definite")
    {
        const GridMesh mesh = build_grid_mesh(6, 6);
        const FemOperators ops = FemOperators::assemble(mesh, elasticity_matrix_2d(1.0, 0.25), 0.01);
        const DofMap& dofs = ops.dofs();
        Eigen::MatrixXd a_ii(dofs.interior_count(), dofs.interior_count());
        const Eigen::MatrixXd a(ops.stiffness());
        for (int i = 0; i < dofs.interior_count(); ++i) {
            for (int j = 0; j < dofs.interior_count(); ++j) {
                a_ii(i, j) = a(dofs.interior_dofs()[static_cast<std::size_t>(i)],
                               dofs.interior_dofs()[static_cast<std::size_t>(j)]);
            }
        }
        CHECK(Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd>(a_ii).eigenvalues().minCoeff() > 0.0);
        const Eigen::MatrixXd l_ii(ops.interior_block());
        CHECK(Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd>(l_ii).eigenvalues().minCoeff() > 0.0);
    }

    TEST_CASE("load is exact for linear forces")
    {
        const GridMesh mesh = build_grid_mesh(5, 4);
        const VectorField f = [](const Point2& p) { return Eigen::Vector2d(1.0 + 2.0 * p.x - p.y, 3.0 * p.y - 0.5); };
        CHECK((assemble_load(mesh, f) - load_oracle(mesh, f)).cwiseAbs().maxCoeff() < 1e-13);
    }

    TEST_CASE("load examples")
    {
        const GridMesh mesh = build_grid_mesh(2, 2);
        CHECK(assemble_load(mesh, [](const Point2&) { return Eigen::Vector2d::Zero(); }).isZero());
        const Vector unit = assemble_load(mesh, [](const Point2&) { return Eigen::Vector2d(1.0, 0.0); });
        CHECK(unit(Eigen::seq(0, Eigen::last, 2)).sum() == doctest::Approx(1.0).epsilon(1e-14));
        CHECK(unit(Eigen::seq(1, Eigen::last, 2)).sum() == 0.0);
        const VectorField f = [](const Point2& p) { return Eigen::Vector2d(p.x, p.y); };
        CHECK((assemble_load(mesh, f) - load_oracle(mesh, f)).cwiseAbs().maxCoeff() < 1e-10);
    }

    TEST_CASE("load converges for smooth forces")
    {
        const VectorField f = [](const Point2& p) {
            return Eigen::Vector2d(std::sin(3.0 * p.x) * std::exp(p.y), std::cos(p.x * p.y));
        };
        double previous = 0.0;
        for (int n : {4, 8, 16}) {
            const GridMesh mesh = build_grid_mesh(n, n);
            const double err = (assemble_load(mesh, f) - load_oracle(mesh, f)).cwiseAbs().sum();
            if (previous > 0.0) {
                CHECK(previous / err > 3.5);
            }
            previous = err;
        }
    }

    TEST_CASE("non-finite force is rejected")
    {
        const GridMesh mesh = build_grid_mesh(2, 2);
        const VectorField f = [](const Point2&) { return Eigen::Vector2d(std::nan(""), 0.0); };
        CHECK_THROWS_AS(assemble_load(mesh, f), std::domain_error);
    }

    TEST_CASE("nodal interpolation")
    {
        const GridMesh mesh = build_grid_mesh(3, 3);
        const Vector u = project_initial(mesh, [](const Point2& p) { return Eigen::Vector2d(p.x, p.x + p.y); });
        CHECK(u(2 * 5) == doctest::Approx(mesh.nodes[5].x));
        CHECK(u(2 * 5 + 1) == doctest::Approx(mesh.nodes[5].x + mesh.nodes[5].y));
        CHECK(project_initial(mesh, [](const Point2&) { return Eigen::Vector2d::Zero(); }).isZero());
    }
}

TEST_SUITE("time stepping")
{
    TEST_CASE("boundary elimination matches row replacement")
    {
        const GridMesh mesh = build_grid_mesh(4, 5);
        const double k = 0.05;
        const FemOperators ops = FemOperators::assemble(mesh, elasticity_matrix_2d(1.0, 0.25), k);
        const DofMap& dofs = ops.dofs();
        const int n = dofs.total();
        const Vector cur = Vector::LinSpaced(n, -1.0, 2.0);
        const Vector prev = cur.array().sin().matrix();
        const Vector load = Vector::LinSpaced(n, 0.3, -0.2);
        Vector g(dofs.boundary_count());
        for (int b = 0; b < g.size(); ++b) {
            g(b) = 0.1 * b - 0.4;
        }

        Eigen::MatrixXd l(ops.stiffness());
        const Eigen::MatrixXd m(ops.mass());
        l += m / (k * k);
        Vector rhs = load + m * (2.0 * cur - prev) / (k * k);
        for (int b = 0; b < dofs.boundary_count(); ++b) {
            const int d = dofs.boundary_dofs()[static_cast<std::size_t>(b)];
            l.row(d).setZero();
            l(d, d) = 1.0;
            rhs(d) = g(b);
        }
        const Vector expected = l.lu().solve(rhs);
        const Vector got = time_step(ops, StatePair{cur, prev, 0}, load, g);
        CHECK((got - expected).cwiseAbs().maxCoeff() < 1e-10);
    }

    TEST_CASE("synthetic operators without boundary")
    {
        const int n = 4;
        SparseMatrix a(n, n);
        SparseMatrix m(n, n);
        m.setIdentity();
        const double k = 0.1;
        const FemOperators ops(a, m, k, DofMap(n, {}));
        const Vector cur = Vector::LinSpaced(n, 1.0, 2.0);
        const Vector prev = Vector::LinSpaced(n, 0.5, -0.5);
        const Vector load = Vector::LinSpaced(n, 3.0, 4.0);
        const Vector next = time_step(ops, StatePair{cur, prev, 0}, load, Vector(0));
        CHECK((next - (k * k * load + 2.0 * cur - prev)).cwiseAbs().maxCoeff() < 1e-12);
    }

    TEST_CASE("zero data stays zero")
    {
        const GridMesh mesh = build_grid_mesh(3, 3);
        const FemOperators ops = FemOperators::assemble(mesh, elasticity_matrix_2d(1.0, 0.25), 0.01);
        const Vector zero = Vector::Zero(ops.dofs().total());
        const Vector next = time_step(ops, StatePair{zero, zero, 0}, zero, Vector::Zero(ops.dofs().boundary_count()));
        CHECK(next.isZero());
        const Vector rhs = Vector::LinSpaced(ops.dofs().total(), 1.0, 2.0);
        CHECK(apply_dirichlet(ops, rhs, Vector::Zero(ops.dofs().boundary_count())).rhs == ops.gather_interior(rhs));
    }

    TEST_CASE("one-step error shrinks under refinement")
    {
        // Exact history of a smooth field; the step error must fall with h and k together.
        auto field = [](double t) {
            return [t](const Point2& p) {
                return Eigen::Vector2d(std::sin(2.0 * p.x + p.y) * std::cos(t), std::exp(p.x * p.y) * (1.0 + t * t));
            };
        };
        // Load for E = 1, nu = 0.25 by central differences of the stress divergence.
        const Matrix3 c = elasticity_matrix_2d(1.0, 0.25);
        auto load_at = [&](double t) {
            return [&, t](const Point2& p) {
                const double h = 1e-4;
                auto u = [&](double x, double y) { return field(t)(Point2{x, y}); };
                auto stress = [&](double x, double y) {
                    const Eigen::Vector2d ux = (u(x + h, y) - u(x - h, y)) / (2 * h);
                    const Eigen::Vector2d uy = (u(x, y + h) - u(x, y - h)) / (2 * h);
                    return Eigen::Vector3d(c * Eigen::Vector3d(ux(0), uy(1), uy(0) + ux(1)));
                };
                const Eigen::Vector3d sx = (stress(p.x + h, p.y) - stress(p.x - h, p.y)) / (2 * h);
                const Eigen::Vector3d sy = (stress(p.x, p.y + h) - stress(p.x, p.y - h)) / (2 * h);
                const Eigen::Vector2d accel = (field(t + h)(p) - 2.0 * field(t)(p) + field(t - h)(p)) / (h * h);
                return Eigen::Vector2d(accel - Eigen::Vector2d(sx(0) + sy(2), sx(2) + sy(1)));
            };
        };
        double previous = 0.0;
        for (int n : {4, 8, 16}) {
            const GridMesh mesh = build_grid_mesh(n, n);
            const double k = 0.4 / n;
            const FemOperators ops = FemOperators::assemble(mesh, c, k);
            const double t = 0.5;
            const Vector exact = project_initial(mesh, field(t + k));
            const Vector next = time_step(ops, StatePair{project_initial(mesh, field(t)), project_initial(mesh, field(t - k)), 0},
                                          assemble_load(mesh, load_at(t + k)), ops.gather_boundary(exact));
            const double err = (next - exact).norm() / exact.norm();
            if (previous > 0.0) {
                CHECK(err < previous);
            }
            previous = err;
        }
    }

    TEST_CASE("reduced solve matches row replacement with manufactured boundary data")
    {
        const GridMesh mesh = build_grid_mesh(2, 2);
        const double k = 0.1;
        const FemOperators ops = FemOperators::assemble(mesh, elasticity_matrix_2d(1.0, 0.25), k);
        auto e3 = [](double t) {
            return [t](const Point2& p) {
                const double tau = t + 0.5;
                return Eigen::Vector2d(p.x * p.x * p.x + p.y * p.y * std::pow(tau, 1.5) + p.x * p.y,
                                       p.x * p.x + p.y * p.y * p.y * std::pow(tau, 1.1) + p.x * p.y);
            };
        };
        const Vector cur = project_initial(mesh, e3(0.1));
        const Vector prev = project_initial(mesh, e3(0.0));
        const Vector load = Vector::Constant(ops.dofs().total(), 0.3);
        const Vector g = ops.gather_boundary(project_initial(mesh, e3(0.2)));
        Eigen::MatrixXd l = Eigen::MatrixXd(ops.stiffness()) + Eigen::MatrixXd(ops.mass()) / (k * k);
        Vector rhs = ops.step_rhs(load, StatePair{cur, prev, 1});
        for (int b = 0; b < ops.dofs().boundary_count(); ++b) {
            const int d = ops.dofs().boundary_dofs()[static_cast<std::size_t>(b)];
            l.row(d).setZero();
            l(d, d) = 1.0;
            rhs(d) = g(b);
        }
        const Vector expected = l.fullPivLu().solve(rhs);
        const Vector got = time_step(ops, StatePair{cur, prev, 1}, load, g);
        CHECK((got - expected).cwiseAbs().maxCoeff() < 1e-12 * (1.0 + expected.cwiseAbs().maxCoeff()));
    }

    TEST_CASE("linear-in-space quadratic-in-time fields are reproduced exactly")
    {
        const GridMesh mesh = build_grid_mesh(6, 6);
        const int steps = 20;
        const double k = 1.0 / steps;
        const FemOperators ops = FemOperators::assemble(mesh, elasticity_matrix_2d(1.0, 0.25), k);
        // Spatially linear fields are stress-free in the divergence, so the load is the acceleration.
        auto field = [](double t) {
            return [t](const Point2& p) {
                return Eigen::Vector2d((1.0 + p.x - 2.0 * p.y) * (0.5 + t * t), (p.x + 3.0 * p.y) * (1.0 - t + 2.0 * t * t));
            };
        };
        const VectorField accel = [](const Point2& p) {
            return Eigen::Vector2d(2.0 * (1.0 + p.x - 2.0 * p.y), 4.0 * (p.x + 3.0 * p.y));
        };
        const Vector load = assemble_load(mesh, accel);
        Vector prev = project_initial(mesh, field(-k));
        Vector cur = project_initial(mesh, field(0.0));
        for (int i = 0; i < steps; ++i) {
            const Vector exact = project_initial(mesh, field((i + 1) * k));
            const Vector next = time_step(ops, StatePair{cur, prev, i}, load, ops.gather_boundary(exact));
            prev = cur;
            cur = next;
        }
        const Vector exact = project_initial(mesh, field(1.0));
        CHECK((cur - exact).norm() / exact.norm() < 1e-11);
    }

    TEST_CASE("operator construction errors")
    {
        const GridMesh mesh = build_grid_mesh(2, 2);
        CHECK_THROWS_AS(FemOperators::assemble(mesh, elasticity_matrix_2d(1.0, 0.25), 0.0), std::invalid_argument);
        const FemOperators ops = FemOperators::assemble(mesh, elasticity_matrix_2d(1.0, 0.25), 0.1);
        CHECK_THROWS_AS(ops.step_rhs(Vector::Zero(3), StatePair{Vector::Zero(18), Vector::Zero(18), 0}),
                        std::invalid_argument);
        CHECK_THROWS_AS(apply_dirichlet(ops, Vector::Zero(18), Vector::Zero(2)), std::invalid_argument);
    }

    TEST_CASE("scatter and gather are inverse")
    {
        const GridMesh mesh = build_grid_mesh(3, 4);
        const FemOperators ops = FemOperators::assemble(mesh, elasticity_matrix_2d(1.0, 0.25), 0.1);
        const Vector u = Vector::LinSpaced(ops.dofs().total(), 0.0, 1.0);
        CHECK(ops.scatter(ops.gather_interior(u), ops.gather_boundary(u)) == u);
    }

    TEST_CASE("synthetic dof map")
    {
        const DofMap dofs(6, {0, 5});
        CHECK(dofs.interior_count() == 4);
        CHECK(dofs.interior_slot(3) == 2);
        CHECK(dofs.boundary_slot(5) == 1);
    }
}
