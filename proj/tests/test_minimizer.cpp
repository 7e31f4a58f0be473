#include "doctest.h"

#include "vortwave/minimizer.hpp"

#include <cmath>
#include <numbers>
#include <random>

using namespace vortwave;

namespace {

constexpr double pi = std::numbers::pi;

/// a(l) from sin(t) = (2 pi / l) t by Newton's method from the small-angle estimate, then the segment area.
double segment_area_oracle(double ell)
{
    const double target = 2 * pi / ell;
    double t = std::sqrt(6 * (1 - target));
    for (int it = 0; it < 50; ++it) t -= (std::sin(t) - target * t) / (std::cos(t) - target);
    const double r = pi / std::sin(t);
    return r * r * (2 * t - std::sin(2 * t)) / 2 / (2 * pi);
}

WaveConfig layer_config(int m, int k)
{
    WaveConfig c;
    c.mode = ConstraintMode::Perturbed;
    c.zeta.kind = ZetaSpec::Kind::Indicator;
    c.zeta.value = 1;
    c.zeta.x1_max = c.P;
    c.zeta.x2_max = 2.0 * c.Q / k; // two full cell rows
    c.epsilon = 0.3;
    c.m = m;
    c.k = k;
    c.tol_b = 1e-4;
    c.max_iterations = 60;
    return c;
}

double kinetic_at(const Mesh& mesh, const Eigen::VectorXd& zeta, double mu, double nu)
{
    return kinetic_energy(mesh, solve_multipliers(mesh, zeta, mu, nu).psi);
}

/// Projection onto {lo <= z <= hi, sum a z = mass} in the area-weighted inner product.
Eigen::VectorXd project(const Eigen::VectorXd& y, const Eigen::VectorXd& areas, double lo, double hi, double mass)
{
    double a = y.minCoeff() - hi - 1, b = y.maxCoeff() - lo + 1;
    Eigen::VectorXd z;
    for (int it = 0; it < 200; ++it) {
        const double tau = 0.5 * (a + b);
        z = (y.array() - tau).cwiseMax(lo).cwiseMin(hi).matrix();
        (z.dot(areas) > mass ? a : b) = tau;
    }
    return z;
}

} // namespace

TEST_CASE("parallel-flow sign condition")
{
    const auto positive = VorticityProfiled::from_steps({1.0, 0.0}, {1.0, 2 * pi - 1});
    const auto zero = VorticityProfiled::from_steps({0.0}, {2 * pi});
    const auto mixed = VorticityProfiled::from_steps({1.0, -1.0}, {pi, pi});
    CHECK(check_parallel_flow_sign(positive, 2.0, 1.0, 1.0) == SignCondition::Satisfied);
    CHECK(check_parallel_flow_sign(positive, 1.0, 2.0, 1.0) == SignCondition::Violated);
    CHECK(check_parallel_flow_sign(zero, 1.5, 1.5, 1.0) == SignCondition::Violated);
    CHECK(check_parallel_flow_sign(zero, 1.5, 1.0, 1.0) == SignCondition::Satisfied);
    CHECK(check_parallel_flow_sign(mixed, 1.0, 0.0, 1.0) == SignCondition::Inapplicable);
}

TEST_CASE("hypothesis M2 and the height cap")
{
    WaveConfig c;
    const double floor = pi; // g P Q^2 / 2
    const auto r = check_M2(c, floor + 0.1);
    CHECK(r.excess == doctest::Approx(0.1).epsilon(1e-12));
    CHECK(r.bending_lhs == doctest::Approx(0.01).epsilon(1e-12));
    CHECK(r.bending_rhs == doctest::Approx(pi * pi).epsilon(1e-15));
    CHECK(r.bending_pass);
    CHECK(r.depth_lhs == doctest::Approx(segment_area_oracle(2 * pi + 0.1)).epsilon(1e-9));
    CHECK(r.depth_pass);

    const auto limit = check_M2(c, floor + 1e-9);
    CHECK(limit.pass());
    CHECK(limit.depth_lhs < 1e-3);

    const auto large = check_M2(c, floor + 20);
    CHECK_FALSE(large.bending_pass);
    CHECK_THROWS_AS(check_M2(c, floor), std::domain_error);
    CHECK_THROWS_AS(check_M2(c, floor - 1), std::domain_error);

    CHECK(domain_height_cap(c, floor + c.T) == doctest::Approx(c.Q + (c.P + 1) / 2).epsilon(1e-14));
    CHECK(domain_height_cap(c, floor + 2) > domain_height_cap(c, floor + 1));
}

TEST_CASE("cell potential is the area-weighted gradient of the kinetic energy")
{
    const auto mesh = build_mesh(GraphSurfaced::cosine(16, 2 * pi, 1.0, 0.1), 4);
    std::mt19937 rng(5);
    std::uniform_real_distribution<double> u(0, 1);
    Eigen::VectorXd zeta(mesh.cell_count());
    for (auto& z : zeta) z = u(rng);
    const double mu = 1.3, nu = 1.1;
    const auto state = solve_multipliers(mesh, zeta, mu, nu);
    const Eigen::VectorXd phi = cell_phi(mesh, state);
    const double h = 1e-4;
    for (int c : {0, 7, 30, 63}) {
        Eigen::VectorXd plus = zeta, minus = zeta;
        plus(c) += h;
        minus(c) -= h;
        const double fd = (kinetic_at(mesh, plus, mu, nu) - kinetic_at(mesh, minus, mu, nu)) / (2 * h);
        CHECK(fd == doctest::Approx(mesh.cell_areas()(c) * phi(c)).epsilon(1e-7));
    }
}

TEST_CASE("refined vorticity minimises the kinetic energy over the weak closure")
{
    const auto mesh = build_mesh(GraphSurfaced::cosine(16, 2 * pi, 1.0, 0.15), 4);
    const Eigen::VectorXd areas = mesh.cell_areas();
    const double top = 0.9, mass = top * 0.3 * areas.sum();
    const auto profile = VorticityProfiled::from_steps({top, 0.0}, {0.3 * areas.sum(), 0.7 * areas.sum()});
    const double mu = 1.6, nu = 1.4;

    const auto start = initial_vorticity(mesh, profile);
    const Eigen::VectorXd order = cell_phi(mesh, solve_multipliers(mesh, start.values, mu, nu));
    const auto refined = refine_vorticity(mesh, profile, order, mu, nu);
    CHECK(in_weak_closure(refined, profile, 1e-10));
    CHECK(refined.values.dot(areas) == doctest::Approx(mass).epsilon(1e-12));

    // independent solve: projected gradient on the same convex set
    Eigen::VectorXd z = start.values;
    double K = kinetic_at(mesh, z, mu, nu), step = 1.0;
    for (int it = 0; it < 3000; ++it) {
        const Eigen::VectorXd phi = cell_phi(mesh, solve_multipliers(mesh, z, mu, nu));
        for (;;) {
            const Eigen::VectorXd trial = project(z - step * phi, areas, 0.0, top, mass);
            const double Kt = kinetic_at(mesh, trial, mu, nu);
            if (Kt <= K - 1e-4 / step * (trial - z).cwiseProduct(areas).dot(trial - z) || step < 1e-8) {
                z = trial;
                K = Kt;
                step *= 2;
                break;
            }
            step *= 0.5;
        }
    }
    const double Kr = kinetic_at(mesh, refined.values, mu, nu);
    CHECK(Kr <= K + 1e-10);
    CHECK(Kr <= kinetic_at(mesh, start.values, mu, nu));
}

TEST_CASE("height direction inverts the surface symbol")
{
    WaveConfig c;
    const int m = 32;
    const auto mesh = build_mesh(GraphSurfaced::cosine(m, c.P, c.Q, 0.0), 4);
    Eigen::VectorXd v(m);
    for (int i = 0; i < m; ++i) v(i) = std::cos(2 * pi * i / m) + std::sin(2 * 2 * pi * i / m) + 0.5;
    const Eigen::VectorXd d = height_direction(c, mesh, v);
    for (int i = 0; i < m; ++i) {
        const double x = 2 * pi * i / m;
        // g + T k^2 + 2 E k^4 at k = 1 and k = 2
        CHECK(d(i) == doctest::Approx(std::cos(x) / 4 + std::sin(2 * x) / 37).epsilon(1e-12));
    }
    CHECK(std::abs(d.sum()) < 1e-12);
}

TEST_CASE("end-to-end minimisation of a layered vorticity")
{
    const auto config = layer_config(32, 8);
    const auto problem = prepare_problem(config);
    REQUIRE(problem.admissible_energy);
    CHECK(check_parallel_flow_sign(config.reference_profile(), problem.mu, problem.nu, config.Q) != SignCondition::Inapplicable);
    const auto r = minimize(config);
    CHECK(r.reason == Termination::Converged);
    REQUIRE(r.trace.size() >= 2);
    for (std::size_t n = 1; n < r.trace.size(); ++n) CHECK(r.trace[n].energy <= r.trace[n - 1].energy + 1e-12);
    for (const auto& rec : r.trace) {
        CHECK(std::abs(rec.C - problem.mu) + std::abs(rec.I - problem.nu) <= 1e-7 * (1 + std::abs(problem.mu) + std::abs(problem.nu)));
        CHECK(rec.kinetic_after_rearrangement <= rec.kinetic_before_rearrangement + 1e-10);
    }
    CHECK(r.constraint_defect < 1e-7);
    CHECK(r.gap < config.tol_r);
    CHECK(r.fit_residual < config.tol_r);
    CHECK(r.energy.bernoulli_l2 < config.tol_b);
    CHECK(r.in_weak_closure);
    CHECK(r.class_defect < 1e-10);
    CHECK(r.energy.total <= *problem.admissible_energy);
    CHECK(r.surface.heights().maxCoeff() < domain_height_cap(config, *problem.admissible_energy));
    CHECK(r.surface.heights().mean() == doctest::Approx(config.Q).epsilon(1e-12));

    const auto summary = result_summary(r);
    CHECK(summary["termination"] == "Converged");
}

TEST_CASE("refinement changes the minimal energy by little")
{
    const auto coarse = minimize(layer_config(32, 8));
    const auto fine = minimize(layer_config(64, 16));
    REQUIRE(coarse.reason == Termination::Converged);
    REQUIRE(fine.reason == Termination::Converged);
    CHECK(std::abs(fine.energy.total - coarse.energy.total) < 1e-2 * coarse.energy.total);
}

TEST_CASE("the rest state is reported as degenerate")
{
    WaveConfig c;
    c.zeta.kind = ZetaSpec::Kind::Constant;
    c.zeta.value = 0;
    c.m = 32;
    c.k = 8;
    const auto problem = prepare_problem(c);
    const auto flat = GraphSurfaced::cosine(c.m, c.P, c.Q, 0.0);
    const auto mesh = build_mesh(flat, c.k);
    const auto r = minimize(c, problem, flat, initial_vorticity(mesh, problem.profile));
    CHECK(r.reason == Termination::DegenerateDomain);
    CHECK_FALSE(r.message.empty());
}
