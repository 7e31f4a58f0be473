#include "doctest.h"

#include "vortwave/geometry.hpp"

#include <boost/math/quadrature/gauss_kronrod.hpp>

#include <cmath>
#include <numbers>
#include <random>

using namespace vortwave;
using boost::math::quadrature::gauss_kronrod;

namespace {

constexpr double pi = std::numbers::pi;

PeriodicCurved parametric(int n, double P, auto f, CurveClosure closure = CurveClosure::Periodic)
{
    MatrixX2<double> pts(n, 2);
    for (int i = 0; i < n; ++i) {
        const Eigen::Vector2d p = f(P * i / n);
        pts.row(i) = p.transpose();
    }
    return PeriodicCurved(pts, P, closure);
}

PeriodicCurved cosine_graph(int n, double P, double Q, double eps)
{
    return parametric(n, P, [&](double x) { return Eigen::Vector2d(x, Q + eps * std::cos(2 * pi * x / P)); });
}

PeriodicCurved circle(int n, double r)
{
    return parametric(
        n, 2 * pi, [&](double x) { return Eigen::Vector2d(r * std::cos(x), r + 1 + r * std::sin(x)); },
        CurveClosure::Closed);
}

double speed_spread(const PeriodicCurved& c)
{
    const auto v = speed(c);
    return (v.maxCoeff() - v.minCoeff()) / v.mean();
}

} // namespace

TEST_CASE("flat curve is already constant speed")
{
    const auto flat = cosine_graph(32, 5.0, 2.0, 0.0);
    const auto out = resample_constant_speed(flat);
    CHECK((out.points() - flat.points()).cwiseAbs().maxCoeff() < 1e-13);
    CHECK(arclength(flat) == doctest::Approx(5.0).epsilon(1e-14));
    CHECK(curvature(flat).cwiseAbs().maxCoeff() < 1e-12);
    CHECK(bending_energy(flat) < 1e-20);
    CHECK(enclosed_area(flat) == doctest::Approx(10.0).epsilon(1e-14));
}

TEST_CASE("resampling a cosine graph keeps the locus and the length")
{
    const double P = 2 * pi;
    const double Q = 1.0;
    const double eps = 0.1;
    const auto graph = cosine_graph(128, P, Q, eps);
    const double oracle = gauss_kronrod<double, 61>::integrate(
        [&](double x) { return std::hypot(1.0, eps * std::sin(x)); }, 0.0, P, 10, 1e-14);

    const auto unit = resample_constant_speed(graph);
    CHECK(speed_spread(unit) < 1e-8);
    CHECK(arclength(unit) == doctest::Approx(oracle).epsilon(1e-10));
    CHECK(arclength(graph) == doctest::Approx(oracle).epsilon(1e-10));
    for (int i = 0; i < unit.size(); ++i) {
        const double x1 = unit.points()(i, 0);
        CHECK(unit.points()(i, 1) == doctest::Approx(Q + eps * std::cos(x1)).epsilon(1e-10));
    }
    CHECK(unit.points()(0, 0) == 0.0);

    const auto again = resample_constant_speed(unit);
    CHECK((again.points() - unit.points()).cwiseAbs().maxCoeff() < 1e-9);
}

TEST_CASE("arclength of a small cosine follows the series expansion")
{
    const double P = 3.0;
    const double eps = 1e-3;
    const auto c = cosine_graph(64, P, 1.0, eps);
    const double series = P * (1 + eps * eps * pi * pi / (P * P));
    CHECK(std::abs(arclength(c) - series) < 10 * P * std::pow(eps, 4) * std::pow(2 * pi / P, 4));
    CHECK(arclength(c) > P);
}

TEST_CASE("arclength of a bump matches adaptive quadrature")
{
    const double P = 2 * pi;
    auto f = [](double x) { return Eigen::Vector2d(x + 0.3 * std::sin(x), 2.0 + 0.5 * std::cos(x)); };
    const auto c = parametric(96, P, f);
    const double oracle = gauss_kronrod<double, 61>::integrate(
        [](double x) { return std::hypot(1 + 0.3 * std::cos(x), 0.5 * std::sin(x)); }, 0.0, P, 10, 1e-14);
    CHECK(arclength(c) == doctest::Approx(oracle).epsilon(1e-6));
}

TEST_CASE("curvature of a circle and of a mirrored curve")
{
    const auto c = circle(256, 2.0);
    const auto sigma = curvature(c);
    CHECK((sigma.cwiseAbs().array() - 0.5).abs().maxCoeff() < 1e-4);
    CHECK(bending_energy(c) == doctest::Approx(2 * pi / 2.0).epsilon(1e-10));
    CHECK(enclosed_area(c) == doctest::Approx(pi * 4).epsilon(1e-3));

    const auto bump = resample_constant_speed(cosine_graph(64, 2 * pi, 2.0, 0.3));
    MatrixX2<double> mirrored = bump.points();
    mirrored.col(1) = (4.0 - mirrored.col(1).array()).matrix();
    const auto s0 = curvature(bump);
    const auto s1 = curvature(PeriodicCurved(mirrored, bump.period()));
    CHECK((s0 + s1).cwiseAbs().maxCoeff() < 1e-12);
}

TEST_CASE("bending energy agrees with the arclength quadrature of curvature squared")
{
    const auto unit = resample_constant_speed(cosine_graph(512, 2 * pi, 1.0, 0.2));
    CHECK(bending_energy(unit) == doctest::Approx(curvature_energy(unit)).epsilon(1e-6));
    CHECK(bending_energy(unit.translated(0.37)) == doctest::Approx(bending_energy(unit)).epsilon(1e-13));
    CHECK(arclength(unit.translated(0.37)) == doctest::Approx(arclength(unit)).epsilon(1e-14));
}

TEST_CASE("enclosed area of graphs")
{
    const double P = 4.0;
    const double Q = 1.5;
    CHECK(enclosed_area(cosine_graph(40, P, Q, 0.4)) == doctest::Approx(P * Q).epsilon(1e-13));

    // sawtooth polyline: heights 1, 2, 1, 2 ... ; trapezoids of width P/n
    const int n = 8;
    MatrixX2<double> pts(n, 2);
    for (int i = 0; i < n; ++i) pts.row(i) << P * i / n, (i % 2 == 0 ? 1.0 : 2.0);
    CHECK(enclosed_area(PeriodicCurved(pts, P)) == doctest::Approx(1.5 * P).epsilon(1e-14));
    CHECK(enclosed_area(PeriodicCurved(pts, P).translated(0.3)) == doctest::Approx(1.5 * P).epsilon(1e-14));
}

TEST_CASE("injectivity certificate")
{
    const double P = 2 * pi;
    const auto flat = cosine_graph(64, P, 1.0, 0.0);
    const auto r0 = injectivity_check(flat);
    CHECK(r0.verdict == Injectivity::CertifiedInjective);
    CHECK(r0.criterion == doctest::Approx(0.0));

    const auto mild = injectivity_check(cosine_graph(64, P, 1.0, 0.05));
    CHECK(mild.verdict == Injectivity::CertifiedInjective);
    CHECK(mild.criterion < pi);

    // prolate trochoid: one loop per period
    const auto loop = parametric(128, P, [](double x) { return Eigen::Vector2d(x - 1.8 * std::sin(x), 3.0 + 1.8 * std::cos(x)); });
    const auto r1 = injectivity_check(loop);
    CHECK(r1.verdict == Injectivity::SelfIntersecting);
    CHECK(r1.crossing.has_value());
    CHECK(r1.criterion >= pi);
    CHECK_THROWS_AS(resample_constant_speed(loop), GeometryError);
    CHECK_THROWS_AS(enclosed_area(loop), GeometryError);
}

TEST_CASE("polyline crossing across the period boundary")
{
    // the last sample overshoots the next period's first sample
    MatrixX2<double> pts(4, 2);
    pts << 0.0, 1.0, 0.3, 2.0, 0.6, 1.0, 1.2, 1.5;
    const PeriodicCurved c(pts, 1.0);
    CHECK(find_polyline_crossing(c).has_value());
}

TEST_CASE("chord-arc area")
{
    CHECK(chord_arc_area(2 * pi) == 0.0);
    CHECK(std::abs(chord_arc_area(pi * pi) - pi * pi / 4) < 1e-10);
    CHECK(chord_arc_area(6.5) < chord_arc_area(7.0));
    CHECK_THROWS_AS(chord_arc_area(6.0), std::domain_error);

    // oracle: circular segment from a directly bisected angle
    for (double ell : {6.3, 7.0, 9.0, 15.0, 40.0}) {
        double lo = 0, hi = pi;
        for (int it = 0; it < 200; ++it) {
            const double mid = 0.5 * (lo + hi);
            (std::sin(mid) / mid > 2 * pi / ell ? lo : hi) = mid;
        }
        const double theta = 0.5 * (lo + hi);
        const double r = pi / std::sin(theta);
        const double segment = 0.5 * r * r * (2 * theta - std::sin(2 * theta));
        CHECK(chord_arc_area(ell) == doctest::Approx(segment / (2 * pi)).epsilon(1e-9));
    }

    double prev = 0;
    for (int i = 1; i <= 400; ++i) {
        const double ell = 2 * pi + 0.05 * i;
        const double a = chord_arc_area(ell);
        CHECK(a > prev);
        CHECK(a - prev < 0.5);
        prev = a;
    }
}

TEST_CASE("minimum height bound")
{
    CHECK(min_height_bound(2 * pi, 2 * pi, 1.0) == 1.0);
    CHECK(min_height_bound(pi * pi, 2 * pi, 1.0) == doctest::Approx(1 - pi * pi / 4).epsilon(1e-10));
    CHECK(min_height_bound(7.0, 2 * pi, 1.0) > min_height_bound(7.5, 2 * pi, 1.0));
}
