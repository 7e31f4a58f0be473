#include "doctest.h"

#include "vortwave/stability.hpp"

#include <cmath>
#include <numbers>
#include <random>

using namespace vortwave;

namespace {

constexpr double pi = std::numbers::pi;
constexpr double P = 2 * pi;

Eigen::VectorXd layered_zeta(const Mesh& mesh, double amplitude, double tilt)
{
    Eigen::VectorXd z(mesh.cell_count());
    for (int i = 0; i < mesh.m(); ++i)
        for (int j = 0; j < mesh.k(); ++j) {
            const double x1 = mesh.map(i, j, 0.5, 0.5)(0);
            z(mesh.cell(i, j)) = j < mesh.k() / 2 ? amplitude * (1 + tilt * std::cos(x1)) : 0.0;
        }
    return z;
}

/// State on a cosine domain with affine surface data slope x2 + offset.
FlowState sample_state(double amplitude, double phase, double zeta_amplitude, double slope, double offset, int m = 32, int k = 8)
{
    const auto surface = GraphSurfaced::cosine(m, P, 1.0, amplitude, 1, phase);
    const auto mesh = build_mesh(surface, k);
    Eigen::VectorXd xi(m);
    for (int i = 0; i < m; ++i) xi(i) = slope * surface.heights()(i) + offset;
    return make_flow_state(surface, k, layered_zeta(mesh, zeta_amplitude, 0.3), xi);
}

MetricOptions coarse_metric()
{
    MetricOptions o;
    o.cap = 2.5;
    o.nx = 64;
    o.ny = 40;
    return o;
}

StripField bump(const StripGrid& grid, double x0, double y0, double width)
{
    return sample_function(grid, [=](const Eigen::Vector2d& x) {
        const double dx = std::sin((x(0) - x0) / 2) * 2, dy = x(1) - y0;
        return std::exp(-(dx * dx + dy * dy) / (width * width));
    });
}

} // namespace

TEST_CASE("point location inverts the vertical map")
{
    const auto mesh = build_mesh(GraphSurfaced::cosine(24, P, 1.0, 0.2), 6);
    const MeshLocator loc(mesh);
    std::mt19937 rng(7);
    std::uniform_real_distribution<double> u(0.01, 0.99);
    for (int n = 0; n < 200; ++n) {
        const int i = int(rng() % 24), j = int(rng() % 6);
        const double xi = u(rng), eta = u(rng);
        const auto hit = loc.locate(mesh.map(i, j, xi, eta));
        REQUIRE(hit);
        CHECK(hit->i == i);
        CHECK(hit->j == j);
        CHECK(hit->xi == doctest::Approx(xi).epsilon(1e-12));
        CHECK(hit->eta == doctest::Approx(eta).epsilon(1e-12));
    }
    CHECK_FALSE(loc.locate(Eigen::Vector2d(0.0, 1.3)));
    CHECK_FALSE(loc.locate(Eigen::Vector2d(1.0, -0.1)));
    CHECK(loc.surface_height(P) == doctest::Approx(1.2));
}

TEST_CASE("dual norm of the strip")
{
    const StripGrid grid{P, 2.0, 64, 32};
    Eigen::MatrixXd f = Eigen::MatrixXd::Constant(64, 32, 0.7);
    CHECK(dual_norm(grid, f) == doctest::Approx(0.7 * std::sqrt(P * 2.0)).epsilon(1e-12));

    // (-Laplace + 1) w = cos(n x1) gives w = f / (1 + n^2)
    for (int n : {1, 3}) {
        for (int i = 0; i < 64; ++i) f.row(i).setConstant(std::cos(n * grid.center(i, 0)(0)));
        const double exact = std::sqrt(P * 2.0 / 2 / (1 + n * n));
        CHECK(dual_norm(grid, f) == doctest::Approx(exact).epsilon(2e-3 * n * n));
    }
    CHECK_THROWS_AS(dual_norm(grid, Eigen::MatrixXd::Zero(3, 3)), MetricError);
}

TEST_CASE("curve distance")
{
    const auto a = GraphSurfaced::cosine(64, P, 1.0, 0.1);
    CHECK(curve_distance(a, a) < 1e-12);
    const double d = 0.05;
    const GraphSurfaced lifted((a.heights().array() + d).matrix(), P);
    CHECK(curve_distance(a, lifted) == doctest::Approx(d * std::sqrt(P)).epsilon(1e-9));
    const auto moved = GraphSurfaced::cosine(64, P, 1.0, 0.1, 1, 0.7);
    CHECK(curve_distance(a, moved) > 0.01);
    CHECK(curve_distance(a, moved) == doctest::Approx(curve_distance(moved, a)).epsilon(1e-9));
    CHECK_THROWS_AS(curve_distance(a, GraphSurfaced::cosine(64, 2.0, 1.0, 0.1)), MetricError);
}

TEST_CASE("metrics vanish on identical states and are symmetric")
{
    const auto s1 = sample_state(0.1, 0.0, 0.5, 0.4, 0.1);
    const auto s2 = sample_state(0.15, 0.3, 0.6, 0.2, -0.1);
    const auto o = coarse_metric();
    CHECK(dist1(s1, s1, o) == 0.0);
    CHECK(dist0(s1, s1, o) == 0.0);
    CHECK(dist0_report(s1, s1, o).short_form);
    CHECK(std::abs(dist1(s1, s2, o) - dist1(s2, s1, o)) <= 1e-10);
    CHECK(std::abs(dist0(s1, s2, o) - dist0(s2, s1, o)) <= 1e-10);
    CHECK(dist1(s1, s2, o) > 0);
    CHECK_FALSE(dist0_report(s1, s2, o).short_form);
}

TEST_CASE("dist1 of an affine perturbation is the gradient term alone")
{
    // on the flat domain psi2 - psi1 = delta x2 exactly, so only delta^2 |Omega| remains
    const int m = 32, k = 8;
    const auto surface = GraphSurfaced::cosine(m, P, 1.0, 0.0);
    const auto mesh = build_mesh(surface, k);
    const Eigen::VectorXd zeta = layered_zeta(mesh, 0.8, 0.5);
    const double delta = 0.3;
    const auto s1 = make_flow_state(surface, k, zeta, Eigen::VectorXd::Constant(m, 0.2));
    const auto s2 = make_flow_state(surface, k, zeta, Eigen::VectorXd::Constant(m, 0.2 + delta));
    MetricOptions o;
    o.cap = 2.0;
    o.nx = 64;
    o.ny = 32;
    const auto r = dist1_report(s1, s2, o);
    CHECK(r.curve < 1e-12);
    CHECK(r.dual < 1e-14);
    CHECK(r.gradient == doctest::Approx(delta * std::sqrt(P)).epsilon(1e-10));
    CHECK_THROWS_AS(dist0(s1, s2, o), MetricError);
}

TEST_CASE("dist0 short form on a common domain")
{
    const auto s1 = sample_state(0.1, 0.0, 0.5, 0.4, 0.1);
    const auto mesh = *s1.mesh;
    const auto s2 = make_flow_state(s1.surface, mesh.k(), (1.1 * s1.zeta.values).eval(), s1.xi);
    const auto o = coarse_metric();
    const auto r = dist0_report(s1, s2, o);
    // the affine-data solutions differ, so the general form applies
    CHECK_FALSE(r.short_form);
    CHECK(r.curve < 1e-12);

    // surface data changed by a field carrying no circulation and no impulse keeps the affine-data solution
    const auto zero = Eigen::VectorXd::Zero(mesh.cell_count()).eval();
    auto functionals = [&](const Eigen::VectorXd& top) {
        const Eigen::VectorXd psi = mesh.solve_dirichlet(zero, top);
        return Eigen::Vector2d(circulation(mesh, psi, zero), impulse(mesh, psi));
    };
    const int m = mesh.m();
    Eigen::VectorXd wave(m), height = s1.surface.heights();
    for (int i = 0; i < m; ++i) wave(i) = std::cos(2 * P * i / m);
    Eigen::Matrix2d A;
    A << functionals(Eigen::VectorXd::Ones(m)), functionals(height);
    const Eigen::Vector2d coef = A.fullPivLu().solve(-functionals(wave));
    const Eigen::VectorXd eta = wave + coef(0) * Eigen::VectorXd::Ones(m) + coef(1) * height;
    CHECK(functionals(eta).norm() < 1e-12);

    const auto same = dist0_report(s1, make_flow_state(s1.surface, mesh.k(), s1.zeta.values, s1.xi + 0.01 * eta), o);
    CHECK(same.short_form);
    CHECK(same.curve == 0.0);
    CHECK(same.dual == 0.0);
    CHECK(same.gradient > 0);
}

TEST_CASE("comparison chain and triangle regression on sampled states")
{
    std::mt19937 rng(11);
    std::uniform_real_distribution<double> amp(0.02, 0.2), ph(0, P), z(0.1, 1.0), sl(-0.5, 0.5);
    std::vector<FlowState> states;
    for (int n = 0; n < 8; ++n) states.push_back(sample_state(amp(rng), ph(rng), z(rng), sl(rng), sl(rng)));
    const auto o = coarse_metric();
    int pairs = 0;
    for (std::size_t a = 0; a < states.size(); ++a)
        for (std::size_t b = a + 1; b < states.size() && pairs < 20; ++b, ++pairs) {
            const auto c = comparison_chain(states[a], states[b], o);
            CHECK(c.holds());
            CHECK(c.dist1 > 0);
        }
    CHECK(pairs == 20);
    for (std::size_t a = 0; a + 2 < states.size(); ++a) {
        const double ac = dist0(states[a], states[a + 2], o);
        const double ab = dist0(states[a], states[a + 1], o);
        const double bc = dist0(states[a + 1], states[a + 2], o);
        CHECK(ac <= ab + bc + 1e-8);
    }
}

TEST_CASE("distance to a set")
{
    const auto s1 = sample_state(0.1, 0.0, 0.5, 0.4, 0.1);
    const auto s2 = sample_state(0.12, 0.5, 0.4, 0.3, 0.0);
    const auto s3 = sample_state(0.05, 1.0, 0.7, 0.1, 0.2);
    const auto o = coarse_metric();
    CHECK(distance_to_set(s1, {s2, s1}, Metric::Dist0, o) == 0.0);
    CHECK(distance_to_set(s1, {s2}, Metric::Dist1, o) == doctest::Approx(dist1(s1, s2, o)).epsilon(1e-15));
    const double one = distance_to_set(s1, {s2}, Metric::Dist0, o);
    const double two = distance_to_set(s1, {s2, s3}, Metric::Dist0, o);
    CHECK(two <= one);
    CHECK_THROWS_AS(distance_to_set(s1, {}, Metric::Dist0, o), MetricError);
}

TEST_CASE("velocity of closed-form stream functions")
{
    const double c = 0.8, R = 2.0;
    const VelocityField shear([=](const Eigen::Vector2d& x) { return c * x(1); }, P, R, 32, 16);
    std::mt19937 rng(3);
    std::uniform_real_distribution<double> ux(0, P), uy(0, R - 0.3);
    for (int n = 0; n < 100; ++n) {
        const Eigen::Vector2d x(ux(rng), uy(rng));
        CHECK((shear(x) - Eigen::Vector2d(c, 0)).norm() < 1e-12);
        // odd reflection: u1 even, u2 odd in x2
        const Eigen::Vector2d below = shear(Eigen::Vector2d(x(0), -x(1)));
        CHECK(below(0) == shear(x)(0));
        CHECK(below(1) == -shear(x)(1));
    }
    CHECK(shear(Eigen::Vector2d(1.0, R + 0.1)).norm() == 0.0);

    const VelocityField cell([](const Eigen::Vector2d& x) { return std::sin(x(0)) * std::sin(pi * x(1) / 2); }, P, R, 64, 32);
    for (int n = 0; n < 100; ++n) {
        const Eigen::Vector2d x(ux(rng), uy(rng));
        const Eigen::Vector2d u = cell(x), v = cell(Eigen::Vector2d(x(0), -x(1)));
        CHECK(std::abs(cell.divergence(x)) < 1e-8);
        CHECK(v(0) == u(0));
        CHECK(v(1) == -u(1));
        const Eigen::Vector2d exact(pi / 2 * std::sin(x(0)) * std::cos(pi * x(1) / 2), -std::cos(x(0)) * std::sin(pi * x(1) / 2));
        CHECK((u - exact).norm() < 5e-3);
    }
}

TEST_CASE("velocity of a solved state")
{
    SUBCASE("affine data on the flat domain is a uniform stream")
    {
        const int m = 32, k = 8;
        const auto surface = GraphSurfaced::cosine(m, P, 1.0, 0.0);
        const auto mesh = build_mesh(surface, k);
        const double c = 0.6;
        const auto s = make_flow_state(surface, k, Eigen::VectorXd::Zero(mesh.cell_count()), Eigen::VectorXd::Constant(m, c));
        const VelocityField u(s, 2.0, 64, 32);
        for (double y : {0.05, 0.3, 0.8})
            for (double x : {0.0, 1.3, 4.0}) CHECK((u(Eigen::Vector2d(x, y)) - Eigen::Vector2d(c, 0)).norm() < 1e-12);
    }
    SUBCASE("the surface is a streamline in the frame moving with lambda1")
    {
        const auto base = sample_state(0.1, 0.0, 0.8, 0.0, 0.0, 64, 16);
        const auto affine = affine_solution(base);
        const auto& mesh = *base.mesh;
        Eigen::VectorXd xi(mesh.m());
        for (int i = 0; i < mesh.m(); ++i) xi(i) = affine.psi(mesh.node(i, mesh.k()));
        const auto s = make_flow_state(base.surface, mesh.k(), base.zeta.values, xi);
        const VelocityField u(s, 2.4, 256, 128, affine.lambda1);
        const MeshLocator loc(mesh);
        double flux = 0, speed = 0;
        for (int q = 0; q < 300; ++q) {
            const double x = q * P / 300, h = loc.surface_height(x);
            const double slope = (loc.surface_height(x + 1e-7) - loc.surface_height(x - 1e-7)) / 2e-7;
            const Eigen::Vector2d v = u(Eigen::Vector2d(x, h));
            flux = std::max(flux, std::abs(v(1) - slope * v(0)) / std::hypot(1.0, slope));
            speed = std::max(speed, v.norm());
        }
        CHECK(speed > 0.1);
        CHECK(flux < 1e-2 * speed);
        CHECK_THROWS_AS(VelocityField(s, 1.0, 64, 32), TransportError);
    }
}

TEST_CASE("transport steps")
{
    const StripGrid grid{P, 2.0, 64, 32};
    const VelocityField shear([](const Eigen::Vector2d& x) { return 0.9 * x(1); }, P, 2.0, 32, 16);
    const VelocityField cell([](const Eigen::Vector2d& x) { return std::sin(x(0)) * std::sin(pi * x(1) / 2); }, P, 2.0, 32, 16);
    const VelocityField rest([](const Eigen::Vector2d&) { return 0.0; }, P, 2.0, 32, 16);

    const StripField constant{grid, Eigen::MatrixXd::Constant(64, 32, 1.5)};
    for (auto interp : {Interpolation::Bilinear, Interpolation::Cubic}) {
        CHECK((transport_step(constant, shear, 0.05, interp).values.array() - 1.5).abs().maxCoeff() < 1e-14);
        const auto chi = bump(grid, 2.0, 0.8, 0.4);
        CHECK((transport_step(chi, rest, 0.05, interp).values - chi.values).cwiseAbs().maxCoeff() < 1e-15);
    }
    // the cellular flow vanishes at x2 = 0 and x2 = 2: constant fields stay constant away from the cap
    const auto moved = transport_step(constant, cell, 0.02);
    CHECK((moved.values.leftCols(30).array() - 1.5).abs().maxCoeff() < 1e-14);

    CHECK_THROWS_AS(transport_step(constant, shear, 1.0), TransportError);
}

TEST_CASE("rigid translation matches the exact shift")
{
    const double c = 0.7, width = 0.5;
    const StripGrid grid{P, 3.0, 128, 48};
    const VelocityField u([=](const Eigen::Vector2d& x) { return c * x(1); }, P, 3.0, 32, 16);
    auto chi = bump(grid, 2.0, 1.5, width);
    const double dt = 0.037;
    const int steps = 40;
    for (int n = 0; n < steps; ++n) chi = transport_step(chi, u, dt);
    const auto exact = bump(grid, 2.0 + c * dt * steps, 1.5, width);
    // linear interpolation error per step is at most dx^2 / 8 max |d11 chi|, with |d11 chi| <= 2 / width^2
    const double bound = steps * grid.dx() * grid.dx() / 8 * 2 / (width * width);
    const double err = (chi.values - exact.values).cwiseAbs().maxCoeff();
    CHECK(err <= bound);
    CHECK(err > 0.05 * bound);
}

TEST_CASE("follower runs")
{
    const double R = 2.0;
    const VelocityField u([](const Eigen::Vector2d& x) { return 0.5 * std::sin(x(0)) * std::sin(pi * x(1) / 2) + 0.3 * x(1) * (1 - x(1) / 4); },
                          P, R, 128, 64);

    SUBCASE("zero field")
    {
        const StripGrid grid{P, R, 32, 16};
        const auto trace = follower_run(u, StripField{grid, Eigen::MatrixXd::Zero(32, 16)}, 0.5, 0.05);
        CHECK(trace.t.size() == 11);
        CHECK(trace.t.back() == 0.5);
        for (std::size_t n = 0; n < trace.t.size(); ++n) {
            CHECK(trace.l2_norm[n] == 0.0);
            CHECK(trace.distribution_drift[n] == 0.0);
            CHECK(trace.support_area[n] == 0.0);
        }
    }

    SUBCASE("L2 drift decays at second order with the cubic interpolant")
    {
        std::vector<double> drift;
        for (int n : {32, 64, 128}) {
            const StripGrid grid{P, R, n, n / 2};
            const auto trace = follower_run(u, bump(grid, 2.0, 0.9, 0.3), 0.5, 0.02, Interpolation::Cubic);
            drift.push_back(std::abs(trace.l2_norm.back() - trace.l2_norm.front()));
            for (std::size_t k = 1; k < trace.t.size(); ++k) CHECK(trace.t[k] > trace.t[k - 1]);
        }
        CHECK(std::log2(drift[1] / drift[2]) >= 1.8);
        CHECK(drift[2] < 1e-3);
    }

    SUBCASE("two advected fields stay as close as they started")
    {
        const StripGrid grid{P, R, 64, 32};
        const auto chi = bump(grid, 2.0, 0.9, 0.3);
        StripField other = chi;
        other.values *= 1.02;
        const double delta = (other.values - chi.values).norm() * std::sqrt(grid.dx() * grid.dy());
        const auto trace = follower_run(u, chi, 1.0, 0.05, Interpolation::Bilinear, other);
        REQUIRE(trace.difference.size() == trace.t.size());
        CHECK(trace.difference.front() == doctest::Approx(delta).epsilon(1e-12));
        for (double d : trace.difference) CHECK(d <= delta * (1 + 1e-12));
        CHECK(trace.difference.back() > 0.8 * delta);
    }

    SUBCASE("bad arguments")
    {
        const StripGrid grid{P, R, 32, 16};
        const StripField chi{grid, Eigen::MatrixXd::Zero(32, 16)};
        CHECK_THROWS_AS(follower_run(u, chi, 1.0, 0.0), TransportError);
        CHECK_THROWS_AS(follower_run(u, chi, 1.0, 5.0), TransportError);
    }
}
