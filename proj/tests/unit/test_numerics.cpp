#include <gtest/gtest.h>

#include <cmath>
#include <numbers>
#include <random>

#include "oblimit/channel_solver.hpp"
#include "oblimit/coefficients.hpp"
#include "oblimit/jet.hpp"
#include "oblimit/operators.hpp"

using namespace oblimit;

namespace {

constexpr double kPi = std::numbers::pi;

Field2D random_field(int nx, int ny, unsigned seed) {
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> dist(-1, 1);
    Field2D f(nx, ny);
    for (std::size_t k = 0; k < f.size(); ++k) f[k] = dist(rng);
    return f;
}

double max_diff(const Field2D& a, const Field2D& b) {
    double m = 0;
    for (std::size_t k = 0; k < a.size(); ++k) m = std::max(m, std::abs(a[k] - b[k]));
    return m;
}

}  // namespace

TEST(ChannelSolver, CellDirichletInvertsOperator) {
    const Grid g{32, 24, 2.0};
    ChannelSolver s(g, WallCondition::cell_dirichlet);
    const Field2D rhs = random_field(g.nx, g.ny, 1);
    Field2D phi = make_scalar(g), lap = make_scalar(g);
    const double alpha = 1.0, beta = -0.01;
    s.solve(alpha, beta, rhs, phi);
    ops::laplacian_dirichlet(g, phi, {}, lap);
    Field2D back = phi;
    back *= alpha;
    back.axpy(beta, lap);
    EXPECT_LT(max_diff(back, rhs), 1e-12);
}

TEST(ChannelSolver, NodeDirichletInvertsOperator) {
    const Grid g{16, 20, 1.0};
    ChannelSolver s(g, WallCondition::node_dirichlet);
    Field2D rhs = random_field(g.nx, g.ny + 1, 2);
    for (int i = 0; i < g.nx; ++i) rhs(i, 0) = rhs(i, g.ny) = 0;
    Field2D phi = make_w(g), lap = make_w(g);
    s.solve(1.0, -0.02, rhs, phi);
    ops::laplacian_w(g, phi, lap);
    Field2D back = phi;
    back.axpy(-0.02, lap);
    EXPECT_LT(max_diff(back, rhs), 1e-12);
    for (int i = 0; i < g.nx; ++i) EXPECT_EQ(phi(i, 0), 0.0);
}

TEST(ChannelSolver, SingularNeumannRemovesMean) {
    const Grid g{24, 16, 1.5};
    ChannelSolver s(g, WallCondition::cell_neumann);
    const Field2D rhs = random_field(g.nx, g.ny, 3);
    Field2D phi = make_scalar(g), lap = make_scalar(g);
    s.solve(0.0, 1.0, rhs, phi);
    ops::laplacian_neumann(g, phi, lap);
    Field2D expect = rhs;
    const double m = rhs.mean();
    for (std::size_t k = 0; k < expect.size(); ++k) expect[k] -= m;
    EXPECT_LT(max_diff(lap, expect), 1e-9);
    EXPECT_NEAR(phi.mean(), 0.0, 1e-13);
}

TEST(ChannelSolver, RejectsShapeMismatch) {
    const Grid g{16, 16, 1.0};
    ChannelSolver s(g, WallCondition::cell_neumann);
    Field2D phi;
    EXPECT_THROW(s.solve(1, 1, Field2D(16, 17), phi), ParameterError);
}

TEST(Pcg, VariableCoefficientNeumannProblem) {
    const Grid g{32, 32, 1.0};
    ChannelSolver pre(g, WallCondition::cell_neumann);
    Field2D cu = make_u(g), cw = make_w(g);
    for (int j = 0; j < g.ny; ++j)
        for (int i = 0; i < g.nx; ++i) cu(i, j) = 1.0 + 0.5 * std::sin(2 * kPi * g.xf(i)) * g.yc(j);
    for (int j = 0; j <= g.ny; ++j)
        for (int i = 0; i < g.nx; ++i) cw(i, j) = 1.0 + 0.3 * std::cos(2 * kPi * g.xc(i));
    Field2D gx = make_u(g), gy = make_w(g), div = make_scalar(g);
    auto apply = [&](const Field2D& x, Field2D& y) {
        ops::grad_x(g, x, gx);
        ops::grad_y(g, x, gy);
        for (std::size_t k = 0; k < gx.size(); ++k) gx[k] *= cu[k];
        for (std::size_t k = 0; k < gy.size(); ++k) gy[k] *= cw[k];
        ops::divergence(g, gx, gy, div);
        for (std::size_t k = 0; k < y.size(); ++k) y[k] = -div[k] + 0.5 * x[k];
    };
    auto prec = [&](const Field2D& r, Field2D& z) { pre.solve(0.5, -1.0, r, z); };
    const Field2D b = random_field(g.nx, g.ny, 4);
    Field2D x = make_scalar(g), ax = make_scalar(g);
    const PcgResult res = pcg(apply, prec, b, x, 1e-10, 200);
    apply(x, ax);
    ax -= b;
    EXPECT_LT(std::sqrt(dot(ax, ax) / dot(b, b)), 1e-10);
    EXPECT_LT(res.iterations, 40);
    Field2D x2 = make_scalar(g);
    EXPECT_THROW(pcg(apply, prec, b, x2, 1e-14, 1), ConvergenceError);
}

TEST(Operators, DivergenceOfDiscreteCurlVanishes) {
    const Grid g{20, 16, 1.0};
    // stream function on corners, zero on the walls
    auto psi = [&](int i, int j) { return std::sin(kPi * g.yn(j)) * std::cos(2 * kPi * g.xf(i)) + 0.1 * g.xf(i) * 0 ; };
    Field2D u = make_u(g), w = make_w(g), div = make_scalar(g);
    for (int j = 0; j < g.ny; ++j)
        for (int i = 0; i < g.nx; ++i) u(i, j) = (psi(i, j + 1) - psi(i, j)) / g.dy();
    for (int j = 0; j <= g.ny; ++j)
        for (int i = 0; i < g.nx; ++i) w(i, j) = -(psi(g.wrap(i + 1), j) - psi(i, j)) / g.dx();
    ops::divergence(g, u, w, div);
    EXPECT_LT(div.max_abs(), 1e-12);
}

TEST(Operators, DirichletLaplacianIsSecondOrder) {
    auto err = [](int n) {
        const Grid g{n, n, 1.0};
        Field2D s = make_scalar(g), lap = make_scalar(g);
        // s = cos(2 pi x) sin(pi y) + y: wall values 0 and 1
        for (int j = 0; j < n; ++j)
            for (int i = 0; i < n; ++i) s(i, j) = std::cos(2 * kPi * g.xc(i)) * std::sin(kPi * g.yc(j)) + g.yc(j);
        ops::laplacian_dirichlet(g, s, {0.0, 1.0}, lap);
        double e = 0;
        for (int j = 1; j < n - 1; ++j)
            for (int i = 0; i < n; ++i)
                e = std::max(e, std::abs(lap(i, j) + 5 * kPi * kPi * std::cos(2 * kPi * g.xc(i)) * std::sin(kPi * g.yc(j))));
        return e;
    };
    const double e1 = err(32), e2 = err(64);
    EXPECT_GT(std::log2(e1 / e2), 1.9);
}

TEST(Operators, WallDerivativeIsExactForQuadratics) {
    const Grid g{8, 10, 1.0};
    Field2D s = make_scalar(g);
    for (int j = 0; j < g.ny; ++j)
        for (int i = 0; i < g.nx; ++i) s(i, j) = 2 + 3 * g.yc(j) - 4 * g.yc(j) * g.yc(j);
    for (int j = 0; j < g.ny; ++j) {
        const double exact = 3 - 8 * g.yc(j);
        EXPECT_NEAR(ops::ddy_centre(g, s, 0, j, {2.0, 1.0}), exact, 1e-11);
        EXPECT_NEAR(ops::ddy_centre_free(g, s, 0, j), exact, 1e-11);
    }
}

TEST(Operators, StrainOfShearFlow) {
    // u = y (1 - y): D_xy = (1 - 2y)/2, |D|^2 = 2 D_xy^2, exact up to corner averaging
    const Grid g{8, 64, 1.0};
    Field2D u = make_u(g), w = make_w(g), d2 = make_scalar(g);
    for (int j = 0; j < g.ny; ++j)
        for (int i = 0; i < g.nx; ++i) u(i, j) = g.yc(j) * (1 - g.yc(j));
    ops::strain_squared(g, u, w, d2);
    const int j = g.ny / 4;
    const double dxy = 0.5 * (1 - 2 * g.yc(j));
    EXPECT_NEAR(d2(3, j), 2 * dxy * dxy, 1e-3);
}

TEST(Operators, UpwindAdvectionOfConstantIsZero) {
    const Grid g{12, 12, 1.0};
    const Field2D u = random_field(g.nx, g.ny, 5);
    Field2D w = random_field(g.nx, g.ny + 1, 6), out = make_scalar(g);
    for (int i = 0; i < g.nx; ++i) w(i, 0) = w(i, g.ny) = 0;
    Field2D s(g.nx, g.ny, 0.25);
    ops::advect_scalar_upwind(g, u, w, s, {0.25, 0.25}, out);
    EXPECT_LT(out.max_abs(), 1e-13);
}

TEST(Jet, DerivativesOfComposite) {
    const double x = 0.3, y = 0.7, t = 0.2;
    const Jet X = Jet::variable(x, 0), Y = Jet::variable(y, 1), T = Jet::variable(t, 2);
    const Jet f = sin(X * Y) * exp(T) / (1 + Y * Y) + log(2 + X);
    const double e = std::exp(t), den = 1 + y * y;
    EXPECT_NEAR(f.v, std::sin(x * y) * e / den + std::log(2 + x), 1e-15);
    EXPECT_NEAR(f.dx(), y * std::cos(x * y) * e / den + 1 / (2 + x), 1e-14);
    EXPECT_NEAR(f.dt(), std::sin(x * y) * e / den, 1e-14);
    EXPECT_NEAR(f.dxx(), -y * y * std::sin(x * y) * e / den - 1 / ((2 + x) * (2 + x)), 1e-14);
    const double gy = x * std::cos(x * y) / den - 2 * y * std::sin(x * y) / (den * den);
    EXPECT_NEAR(f.dy(), gy * e, 1e-14);
    // mixed yt equals dy
    EXPECT_NEAR(f.h[5], gy * e, 1e-14);
    const double h = 1e-4;
    auto fy = [&](double yy) { return std::sin(x * yy) * e / (1 + yy * yy); };
    EXPECT_NEAR(f.dyy(), (fy(y + h) - 2 * fy(y) + fy(y - h)) / (h * h), 1e-6);
}

TEST(ExampleCoefficients, IdentitiesAtSamplePoints) {
    const auto c = nondim::ExampleCoefficients::make(0.02, 0.01, 10.0, 1.0);
    for (double p : {-1.0, 0.0, 0.8}) {
        for (double th : {-0.5, 0.0, 0.5}) {
            const double n = c.bracket(p, th);
            EXPECT_NEAR(c.alpha(p, th), 0.02 / n, 1e-16);
            EXPECT_NEAR(c.density_excess_over_A(p, th), (c.density(p, th) - 1) / 0.02, 1e-10);
            EXPECT_NEAR(c.heat_capacity(p, th), n * (1 + 4e-4 * c.c1(p, th)) / c.x, 1e-14);
        }
    }
    EXPECT_NEAR(c.density(1.0, 1.0), c.k1 / c.x, 1e-15);
}

TEST(ExampleCoefficients, DensityTendsToOneInTheLimit) {
    for (double A : {1e-2, 1e-3, 1e-4}) {
        const auto c = nondim::ExampleCoefficients::make(A, A * A, 10.0, 1.0);
        EXPECT_LT(std::abs(c.density(0.3, 0.2) - 1), 40 * A);
    }
}

TEST(ExampleCoefficients, DomainErrorsNameTheInequality) {
    const auto c = nondim::ExampleCoefficients::make(0.5, 0.1, 1.0, 1.0);
    try {
        c.require_admissible(0.0, -2.0);
        FAIL();
    } catch (const DomainError& e) {
        EXPECT_NE(std::string(e.what()).find("theta + theta_r"), std::string::npos);
    }
    EXPECT_THROW(c.require_admissible(-20.0, 0.0), DomainError);
    EXPECT_NO_THROW(c.require_admissible(0.0, 0.0));
    EXPECT_THROW(nondim::ExampleCoefficients::make(0.0, 0.1, 10.0, 1.0), ParameterError);
    EXPECT_THROW(nondim::ExampleCoefficients::make(0.1, 0.1, 0.4, 1.0), ParameterError);
}
