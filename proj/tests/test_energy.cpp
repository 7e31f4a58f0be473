#include "doctest.h"

#include "support/flow_oracle.hpp"
#include "vortwave/energy.hpp"

#include <cmath>
#include <numbers>
#include <random>

using namespace vortwave;

namespace {

constexpr double pi = std::numbers::pi;

WaveConfig base_config()
{
    WaveConfig c;
    c.zeta.kind = ZetaSpec::Kind::Constant;
    return c;
}

Eigen::VectorXd bump_zeta(const Mesh& mesh, double amplitude)
{
    Eigen::VectorXd z(mesh.cell_count());
    for (int i = 0; i < mesh.m(); ++i)
        for (int j = 0; j < mesh.k(); ++j) {
            const double x1 = mesh.map(i, j, 0.5, 0.5)(0);
            z(mesh.cell(i, j)) = amplitude * (1 + 0.5 * std::cos(x1)) * (j < mesh.k() / 2 ? 1.0 : 0.2);
        }
    return z;
}

} // namespace

TEST_CASE("energy of flat configurations")
{
    const auto config = base_config();
    const double P = config.P, Q = config.Q;
    const auto mesh = build_mesh(GraphSurfaced::cosine(32, P, Q, 0.0), 8);
    const auto rest = total_energy(config, mesh, Eigen::VectorXd::Zero(mesh.node_count()).eval());
    CHECK(std::abs(rest.total - config.g * P * Q * Q / 2) <= 1e-12 * rest.total);
    CHECK(rest.tension == 0.0);
    CHECK(rest.bending < 1e-24);

    const double c = 0.7;
    const auto shear = total_energy(config, mesh, (c * mesh.height_field()).eval());
    CHECK(shear.kinetic == doctest::Approx(c * c * P * Q / 2).epsilon(1e-12));
    CHECK(shear.total == doctest::Approx(shear.kinetic + shear.potential + shear.tension + shear.bending).epsilon(1e-15));
}

TEST_CASE("energy of a perturbed rest state converges under refinement")
{
    auto config = base_config();
    config.T = 1.5;
    double previous = 0, previous_diff = 0;
    for (int level = 0; level < 3; ++level) {
        const auto mesh = build_mesh(GraphSurfaced::cosine(32 << level, config.P, config.Q, 0.1), 4 << level);
        const auto e = total_energy(config, mesh, Eigen::VectorXd::Zero(mesh.node_count()).eval());
        CHECK(e.total > config.g * config.P * config.Q * config.Q / 2);
        // potential: g (P Q^2/2 + P eps^2/4) up to the polygonal surface
        CHECK(e.potential == doctest::Approx(config.P * (0.5 + 0.01 / 4)).epsilon(2e-3 / (1 << (2 * level))));
        if (level > 0) {
            const double diff = std::abs(e.total - previous);
            if (level > 1) CHECK(diff < previous_diff);
            previous_diff = diff;
        }
        previous = e.total;
    }
    CHECK(previous_diff < 1e-4 * previous);
}

TEST_CASE("Bernoulli residual vanishes for parallel flows")
{
    const auto config = base_config();
    const auto mesh = build_mesh(GraphSurfaced::cosine(32, config.P, config.Q, 0.0), 8);
    StreamState s;
    s.psi = Eigen::VectorXd::Zero(mesh.node_count());
    CHECK(bernoulli_residual(config, mesh, s).max_deviation < 1e-12);
    s.lambda1 = 0.8;
    s.psi = 0.8 * mesh.height_field();
    const auto r = bernoulli_residual(config, mesh, s);
    CHECK(r.max_deviation < 1e-12);
    CHECK(r.s(1) == doctest::Approx(config.P / 32));
}

TEST_CASE("Bernoulli residual is invariant under translations")
{
    const auto config = base_config();
    const auto surface = GraphSurfaced::cosine(32, config.P, config.Q, 0.1, 2, 0.3);
    const auto mesh = build_mesh(surface, 8);
    const auto moved = build_mesh(surface.shifted(7), 8);
    Eigen::VectorXd z = bump_zeta(mesh, 0.2), zm(z.size());
    for (int i = 0; i < 32; ++i)
        for (int j = 0; j < 8; ++j) zm(moved.cell(i, j)) = z(mesh.cell(i + 7, j));
    const auto a = bernoulli_residual(config, mesh, solve_multipliers(mesh, z, 0.5, 4.0));
    const auto b = bernoulli_residual(config, moved, solve_multipliers(moved, zm, 0.5, 4.0));
    for (int i = 0; i < 32; ++i) CHECK(a.deviations((i + 7) % 32) == doctest::Approx(b.deviations(i)).epsilon(1e-9).scale(1e-6));
    CHECK(a.l2 == doctest::Approx(b.l2).epsilon(1e-10));
}

TEST_CASE("shape derivative: trivial fields and the precondition")
{
    const auto config = base_config();
    const auto mesh = build_mesh(GraphSurfaced::cosine(32, config.P, config.Q, 0.15), 8);
    const auto state = solve_multipliers(mesh, bump_zeta(mesh, 0.3), 0.4, 3.0);
    CHECK(shape_derivative(config, mesh, state, zero_field()) == 0.0);
    CHECK(std::abs(shape_derivative(config, mesh, state, translation_field(0.7))) < 1e-10);

    const VectorField source{[](const Eigen::Vector2d& x) { return Eigen::Vector2d(0.1 * x(0), 0.0); },
                             [](const Eigen::Vector2d&) { return Eigen::Matrix2d(Eigen::Vector2d(0.1, 0).asDiagonal()); }};
    CHECK_THROWS_AS(shape_derivative(config, mesh, state, source), NonSolenoidal);
    const VectorField lift{[](const Eigen::Vector2d& x) { return Eigen::Vector2d(0.0, 0.1 + 0 * x(0)); },
                           [](const Eigen::Vector2d&) { return Eigen::Matrix2d::Zero().eval(); }};
    CHECK_THROWS_AS(shape_derivative(config, mesh, state, lift), NonSolenoidal);
}

TEST_CASE("shape derivative matches the finite-difference rate along transported domains")
{
    auto config = base_config();
    config.T = 1.3;
    config.E = 0.7;
    for (unsigned seed = 1; seed <= 3; ++seed) {
        CAPTURE(seed);
        double previous_error = 1;
        for (int level = 0; level < 2; ++level) {
            const auto mesh = build_mesh(GraphSurfaced::cosine(64 << level, config.P, config.Q, 0.15), 8 << level);
            const Eigen::VectorXd zeta = bump_zeta(mesh, 0.5);
            const auto state = solve_multipliers(mesh, zeta, 0.4, 3.0);
            const auto omega = random_solenoidal_field(config.P, seed);
            const double weak = shape_derivative(config, mesh, state, omega);
            const double fd = oracle::energy_rate_fd(config, mesh, zeta, state.C, state.I, omega);
            const double error = std::abs(weak - fd) / std::max(std::abs(fd), 1e-3);
            if (level == 1) CHECK(error <= 2e-3);
            CHECK(error <= previous_error);
            previous_error = error;
        }
    }
}

TEST_CASE("a small step along the shape gradient lowers the energy")
{
    auto config = base_config();
    const auto surface = GraphSurfaced::cosine(64, config.P, config.Q, 0.2);
    const auto mesh = build_mesh(surface, 12);
    const Eigen::VectorXd zeta = bump_zeta(mesh, 0.3);
    const auto state = solve_multipliers(mesh, zeta, 0.4, 3.0);
    const Eigen::VectorXd vn = shape_gradient(config, mesh, state);
    const auto b = bernoulli_residual(config, mesh, state);
    CHECK(std::abs(vn.dot(b.ds)) < 1e-12 * vn.cwiseAbs().maxCoeff() * config.P);

    // graph update dH = vn |p'|
    const Eigen::VectorXd dH = (vn.array() * b.ds.array() * (64 / config.P)).matrix();
    const double e0 = total_energy(config, mesh, state).total;
    const double step = 1e-3;
    const auto moved = build_mesh(GraphSurfaced(surface.heights() + step * dH, config.P), 12);
    const auto s1 = solve_multipliers(moved, zeta, state.C, state.I);
    CHECK(total_energy(config, moved, s1).total < e0);
}
