#pragma once

#include "vortwave/spectral.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <optional>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

namespace vortwave {

class GeometryError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Periodic curves continue as p(x + P) = p(x) + (P, 0); closed curves as p(x + P) = p(x).
enum class CurveClosure { Periodic, Closed };

/// Uniform samples p(x_i), x_i = i P / n, of a free-surface curve.
template <typename Scalar>
class PeriodicCurve {
public:
    using Point = Eigen::Matrix<Scalar, 2, 1>;

    PeriodicCurve() = default;

    PeriodicCurve(MatrixX2<Scalar> points, Scalar period, CurveClosure closure = CurveClosure::Periodic)
        : points_(std::move(points)), period_(period), closure_(closure)
    {
        if (!(period_ > 0)) throw GeometryError("curve period must be positive");
        if (points_.rows() < 3) throw GeometryError("curve needs at least three samples");
        if (!points_.allFinite()) throw GeometryError("curve samples must be finite");
        if ((points_.col(1).array() <= 0).any())
            throw GeometryError("curve must stay strictly above the bottom x2 = 0");
    }

    int size() const { return static_cast<int>(points_.rows()); }
    Scalar period() const { return period_; }
    CurveClosure closure() const { return closure_; }
    const MatrixX2<Scalar>& points() const { return points_; }
    Point point(int i) const { return points_.row(i).transpose(); }

    /// Horizontal offset accumulated over one parameter period.
    Scalar shift() const { return closure_ == CurveClosure::Periodic ? period_ : Scalar(0); }

    Scalar parameter(int i) const { return period_ * Scalar(i) / Scalar(size()); }

    /// Sample i extended to any integer index through the periodic continuation.
    Point point_extended(int i) const
    {
        const int n = size();
        const int wraps = i >= 0 ? i / n : -((-i + n - 1) / n);
        const int r = i - wraps * n;
        Point p = point(r);
        p(0) += Scalar(wraps) * shift();
        return p;
    }

    /// Periodic component of coordinate `axis`: p_1(x) - shift x / P, or p_2(x).
    VectorX<Scalar> periodic_part(int axis) const
    {
        VectorX<Scalar> v = points_.col(axis);
        if (axis == 0 && shift() != Scalar(0)) {
            for (int i = 0; i < size(); ++i) v(i) -= shift() * Scalar(i) / Scalar(size());
        }
        return v;
    }

    /// Samples of the order-th parameter derivative of p.
    MatrixX2<Scalar> derivative(int order) const
    {
        MatrixX2<Scalar> d(size(), 2);
        for (int axis = 0; axis < 2; ++axis) {
            d.col(axis) = spectral::derivative<Scalar>(periodic_part(axis), period_, order);
        }
        if (order == 1) d.col(0).array() += shift() / period_;
        return d;
    }

    /// Trigonometric-interpolant evaluation of p (or a derivative) at any parameter value.
    Point evaluate(Scalar x, int order = 0) const
    {
        ensure_interpolants();
        Point p(interp_[0].evaluate(x, order), interp_[1].evaluate(x, order));
        if (order == 0) p(0) += shift() * x / period_;
        if (order == 1) p(0) += shift() / period_;
        return p;
    }

    /// Same locus with every sample moved by dx1 horizontally.
    PeriodicCurve translated(Scalar dx1) const
    {
        MatrixX2<Scalar> q = points_;
        q.col(0).array() += dx1;
        return PeriodicCurve(std::move(q), period_, closure_);
    }

    /// Cyclic relabelling of the samples so that sample `offset` becomes sample 0.
    PeriodicCurve relabelled(int offset) const
    {
        MatrixX2<Scalar> q(size(), 2);
        for (int i = 0; i < size(); ++i) q.row(i) = point_extended(i + offset).transpose();
        return PeriodicCurve(std::move(q), period_, closure_);
    }

private:
    void ensure_interpolants() const
    {
        if (interp_.empty()) {
            interp_.emplace_back(periodic_part(0), period_);
            interp_.emplace_back(periodic_part(1), period_);
        }
    }

    MatrixX2<Scalar> points_;
    Scalar period_ = 1;
    CurveClosure closure_ = CurveClosure::Periodic;
    mutable std::vector<spectral::TrigInterpolant<Scalar>> interp_;
};

/// Free surface stored as heights over uniform abscissae x_i = i P / m.
template <typename Scalar>
class GraphSurface {
public:
    GraphSurface() = default;
    GraphSurface(VectorX<Scalar> heights, Scalar period) : heights_(std::move(heights)), period_(period)
    {
        if (!(period_ > 0)) throw GeometryError("surface period must be positive");
        if (heights_.size() < 3) throw GeometryError("surface needs at least three heights");
        if (!heights_.allFinite() || (heights_.array() <= 0).any())
            throw GeometryError("surface heights must be finite and positive");
    }

    /// H(x) = depth + amplitude cos(2 pi mode x / P + phase).
    static GraphSurface cosine(int m, Scalar period, Scalar depth, Scalar amplitude, int mode = 1, Scalar phase = 0)
    {
        VectorX<Scalar> h(m);
        for (int i = 0; i < m; ++i) {
            const Scalar x = period * Scalar(i) / Scalar(m);
            h(i) = depth + amplitude * std::cos(Scalar(2) * std::numbers::pi_v<Scalar> * Scalar(mode) * x / period + phase);
        }
        return GraphSurface(std::move(h), period);
    }

    int size() const { return static_cast<int>(heights_.size()); }
    Scalar period() const { return period_; }
    const VectorX<Scalar>& heights() const { return heights_; }
    Scalar height(int i) const { return heights_(((i % size()) + size()) % size()); }
    Scalar abscissa(int i) const { return period_ * Scalar(i) / Scalar(size()); }
    Scalar mean_height() const { return heights_.mean(); }

    bool is_feasible(Scalar depth, Scalar tol = Scalar(1e-10)) const
    {
        return std::abs(mean_height() - depth) <= tol * std::max(Scalar(1), std::abs(depth));
    }

    /// Piecewise-linear height between samples (the mesh top boundary).
    Scalar height_linear(Scalar x) const
    {
        const Scalar h = period_ / Scalar(size());
        Scalar xr = std::fmod(x, period_);
        if (xr < 0) xr += period_;
        int i = static_cast<int>(std::floor(xr / h));
        i = std::min(i, size() - 1);
        const Scalar t = xr / h - Scalar(i);
        return (Scalar(1) - t) * height(i) + t * height(i + 1);
    }

    PeriodicCurve<Scalar> to_curve() const
    {
        MatrixX2<Scalar> pts(size(), 2);
        for (int i = 0; i < size(); ++i) {
            pts(i, 0) = abscissa(i);
            pts(i, 1) = heights_(i);
        }
        return PeriodicCurve<Scalar>(std::move(pts), period_, CurveClosure::Periodic);
    }

    /// Heights rescaled about the bottom so that the mean equals `depth`.
    GraphSurface rescaled_to_mean(Scalar depth) const { return GraphSurface(heights_ * (depth / mean_height()), period_); }

    /// Cyclic shift of the height samples by `offset` grid cells.
    GraphSurface shifted(int offset) const
    {
        VectorX<Scalar> h(size());
        for (int i = 0; i < size(); ++i) h(i) = height(i + offset);
        return GraphSurface(std::move(h), period_);
    }

private:
    VectorX<Scalar> heights_;
    Scalar period_ = 1;
};

// ---------------------------------------------------------------------------
// Length, curvature and bending.

template <typename Scalar>
VectorX<Scalar> speed(const PeriodicCurve<Scalar>& curve)
{
    return curve.derivative(1).rowwise().norm();
}

/// l_p = int_0^P |p'(x)| dx (trapezoidal rule, spectrally accurate for periodic integrands).
template <typename Scalar>
Scalar arclength(const PeriodicCurve<Scalar>& curve)
{
    return speed(curve).sum() * curve.period() / Scalar(curve.size());
}

/// Signed curvature (p1' p2'' - p2' p1'') / |p'|^3; positive where the curve bends upwards.
template <typename Scalar>
VectorX<Scalar> curvature(const PeriodicCurve<Scalar>& curve)
{
    if (curve.size() < 8) throw GeometryError("curvature needs at least 8 samples");
    const MatrixX2<Scalar> d1 = curve.derivative(1);
    const MatrixX2<Scalar> d2 = curve.derivative(2);
    VectorX<Scalar> sigma(curve.size());
    for (int i = 0; i < curve.size(); ++i) {
        const Scalar s = d1.row(i).norm();
        sigma(i) = (d1(i, 0) * d2(i, 1) - d1(i, 1) * d2(i, 0)) / (s * s * s);
    }
    return sigma;
}

/// (P / l)^3 int_0^P |p''|^2 dx; equals int |sigma|^2 ds for constant-speed parametrisations.
template <typename Scalar>
Scalar bending_energy(const PeriodicCurve<Scalar>& curve)
{
    const Scalar ell = arclength(curve);
    const MatrixX2<Scalar> d2 = curve.derivative(2);
    const Scalar integral = d2.rowwise().squaredNorm().sum() * curve.period() / Scalar(curve.size());
    const Scalar ratio = curve.period() / ell;
    return ratio * ratio * ratio * integral;
}

/// int |sigma|^2 ds evaluated in the curve's own parametrisation.
template <typename Scalar>
Scalar curvature_energy(const PeriodicCurve<Scalar>& curve)
{
    const VectorX<Scalar> sigma = curvature(curve);
    const VectorX<Scalar> v = speed(curve);
    return (sigma.array().square() * v.array()).sum() * curve.period() / Scalar(curve.size());
}

// ---------------------------------------------------------------------------
// Self-intersection.

namespace detail {

template <typename Scalar>
int orientation(const Eigen::Matrix<Scalar, 2, 1>& a, const Eigen::Matrix<Scalar, 2, 1>& b,
                const Eigen::Matrix<Scalar, 2, 1>& c)
{
    const Scalar det = (b(0) - a(0)) * (c(1) - a(1)) - (b(1) - a(1)) * (c(0) - a(0));
    return (det > 0) - (det < 0);
}

template <typename Scalar>
bool on_segment(const Eigen::Matrix<Scalar, 2, 1>& a, const Eigen::Matrix<Scalar, 2, 1>& b,
                const Eigen::Matrix<Scalar, 2, 1>& c)
{
    return std::min(a(0), b(0)) <= c(0) && c(0) <= std::max(a(0), b(0)) && std::min(a(1), b(1)) <= c(1) &&
           c(1) <= std::max(a(1), b(1));
}

template <typename Scalar>
bool segments_intersect(const Eigen::Matrix<Scalar, 2, 1>& a, const Eigen::Matrix<Scalar, 2, 1>& b,
                        const Eigen::Matrix<Scalar, 2, 1>& c, const Eigen::Matrix<Scalar, 2, 1>& d)
{
    const int o1 = orientation(a, b, c);
    const int o2 = orientation(a, b, d);
    const int o3 = orientation(c, d, a);
    const int o4 = orientation(c, d, b);
    if (o1 != o2 && o3 != o4 && o1 * o2 <= 0 && o3 * o4 <= 0) {
        if (o1 != 0 || o2 != 0) return true;
    }
    if (o1 == 0 && on_segment(a, b, c)) return true;
    if (o2 == 0 && on_segment(a, b, d)) return true;
    if (o3 == 0 && on_segment(c, d, a)) return true;
    if (o4 == 0 && on_segment(c, d, b)) return true;
    return false;
}

} // namespace detail

/// Pair of segment indices (i, j) whose sample-polyline segments cross.
/// Periodic curves are tested against their +-P translates as well.
template <typename Scalar>
std::optional<std::pair<int, int>> find_polyline_crossing(const PeriodicCurve<Scalar>& curve)
{
    using Point = Eigen::Matrix<Scalar, 2, 1>;
    const int n = curve.size();
    const bool periodic = curve.closure() == CurveClosure::Periodic;
    const int lo = periodic ? -n : 0;
    const int hi = periodic ? 2 * n : n;

    struct Segment {
        int index;
        Point a, b;
        Scalar xmin, xmax;
    };
    std::vector<Segment> segs;
    segs.reserve(static_cast<std::size_t>(hi - lo));
    for (int g = lo; g < hi; ++g) {
        Point a = curve.point_extended(g);
        Point b = curve.point_extended(g + 1);
        if (!periodic) {
            a = curve.point(((g % n) + n) % n);
            b = curve.point(((g + 1) % n + n) % n);
        }
        segs.push_back({g, a, b, std::min(a(0), b(0)), std::max(a(0), b(0))});
    }
    std::sort(segs.begin(), segs.end(), [](const Segment& s, const Segment& t) {
        return s.xmin < t.xmin || (s.xmin == t.xmin && s.index < t.index);
    });

    auto adjacent = [&](int g, int h) {
        const int d = std::abs(g - h);
        if (d <= 1) return true;
        return !periodic && d == n - 1;
    };
    for (std::size_t s = 0; s < segs.size(); ++s) {
        for (std::size_t t = s + 1; t < segs.size() && segs[t].xmin <= segs[s].xmax; ++t) {
            const Segment& u = segs[s];
            const Segment& v = segs[t];
            const bool base_u = u.index >= 0 && u.index < n;
            const bool base_v = v.index >= 0 && v.index < n;
            if (!base_u && !base_v) continue;
            if (adjacent(u.index, v.index)) continue;
            if (std::max(std::min(u.a(1), u.b(1)), std::min(v.a(1), v.b(1))) >
                std::min(std::max(u.a(1), u.b(1)), std::max(v.a(1), v.b(1))))
                continue;
            if (detail::segments_intersect(u.a, u.b, v.a, v.b)) {
                const int i = ((u.index % n) + n) % n;
                const int j = ((v.index % n) + n) % n;
                return std::make_pair(std::min(i, j), std::max(i, j));
            }
        }
    }
    return std::nullopt;
}

// ---------------------------------------------------------------------------
// Reparametrisation.

namespace detail {

/// Arclength reparametrisation without any simplicity check.
template <typename Scalar>
PeriodicCurve<Scalar> reparametrize_by_arclength(const PeriodicCurve<Scalar>& curve, Scalar tol, int max_sweeps)
{
    const int n = curve.size();
    const Scalar P = curve.period();
    PeriodicCurve<Scalar> current = curve;
    for (int sweep = 0; sweep < max_sweeps; ++sweep) {
        const VectorX<Scalar> v = speed(current);
        const Scalar ell = v.sum() * P / Scalar(n);
        const Scalar mean_speed = ell / P;
        if (!(v.minCoeff() > 0)) throw GeometryError("curve has a stationary point (|p'| = 0)");
        if ((v.array() - mean_speed).abs().maxCoeff() <= tol * mean_speed) return current;

        // s(x) = mean_speed x + r(x), with r periodic and r(0) = 0
        const VectorX<Scalar> r = spectral::antiderivative<Scalar>((v.array() - mean_speed).matrix(), P);
        const spectral::TrigInterpolant<Scalar> r_interp(r, P);
        const spectral::TrigInterpolant<Scalar> v_interp(v, P);

        MatrixX2<Scalar> next(n, 2);
        Scalar x = 0;
        for (int j = 0; j < n; ++j) {
            const Scalar target = ell * Scalar(j) / Scalar(n);
            if (j == 0) {
                x = 0;
            } else {
                x = std::max(x, target / mean_speed - (r_interp(x)) / mean_speed);
                for (int it = 0; it < 50; ++it) {
                    const Scalar f = mean_speed * x + r_interp(x) - target;
                    const Scalar df = v_interp(x);
                    const Scalar step = f / std::max(df, Scalar(1e-3) * mean_speed);
                    x -= step;
                    if (std::abs(step) <= std::numeric_limits<Scalar>::epsilon() * Scalar(8) * P) break;
                }
            }
            next.row(j) = current.evaluate(x).transpose();
        }
        current = PeriodicCurve<Scalar>(std::move(next), P, curve.closure());
    }
    return current;
}

} // namespace detail

/// Resamples so that |p'| = l_p / P at every sample (within relative tolerance `tol`).
/// Sample 0 is kept fixed. Throws GeometryError for non-simple input.
template <typename Scalar>
PeriodicCurve<Scalar> resample_constant_speed(const PeriodicCurve<Scalar>& curve, Scalar tol = Scalar(1e-8),
                                              int max_sweeps = 40)
{
    if (auto crossing = find_polyline_crossing(curve)) {
        throw GeometryError("curve is not simple: segments " + std::to_string(crossing->first) + " and " +
                            std::to_string(crossing->second) + " intersect");
    }
    return detail::reparametrize_by_arclength(curve, tol, max_sweeps);
}

/// Area between the sample polyline and the bottom over one period (closed curves: shoelace area).
template <typename Scalar>
Scalar enclosed_area(const PeriodicCurve<Scalar>& curve)
{
    if (auto crossing = find_polyline_crossing(curve)) {
        throw GeometryError("enclosed area undefined: segments " + std::to_string(crossing->first) + " and " +
                            std::to_string(crossing->second) + " intersect");
    }
    const int n = curve.size();
    Scalar area = 0;
    if (curve.closure() == CurveClosure::Periodic) {
        for (int i = 0; i < n; ++i) {
            const auto a = curve.point_extended(i);
            const auto b = curve.point_extended(i + 1);
            area += (b(0) - a(0)) * (a(1) + b(1)) / Scalar(2);
        }
        return area;
    }
    for (int i = 0; i < n; ++i) {
        const auto a = curve.point(i);
        const auto b = curve.point((i + 1) % n);
        area += a(0) * b(1) - b(0) * a(1);
    }
    return std::abs(area) / Scalar(2);
}

enum class Injectivity { CertifiedInjective, SelfIntersecting, Inconclusive };

template <typename Scalar>
struct InjectivityReport {
    Injectivity verdict = Injectivity::Inconclusive;
    /// sqrt(l - P) (P / l)^{3/2} ||p''||_{L^2(0,P)} of the constant-speed parametrisation.
    Scalar criterion = 0;
    std::optional<std::pair<int, int>> crossing;
};

/// A non-injective periodic curve forces criterion >= pi; below pi the curve is injective.
/// The sample polyline is always cross-checked so a detected crossing is never certified.
template <typename Scalar>
InjectivityReport<Scalar> injectivity_check(const PeriodicCurve<Scalar>& curve)
{
    InjectivityReport<Scalar> report;
    const PeriodicCurve<Scalar> unit = detail::reparametrize_by_arclength(curve, Scalar(1e-10), 40);
    const Scalar P = unit.period();
    const Scalar ell = arclength(unit);
    const MatrixX2<Scalar> d2 = unit.derivative(2);
    const Scalar l2 = std::sqrt(d2.rowwise().squaredNorm().sum() * P / Scalar(unit.size()));
    report.criterion = std::sqrt(std::max(Scalar(0), ell - P)) * std::pow(P / ell, Scalar(1.5)) * l2;
    report.crossing = find_polyline_crossing(curve);
    if (report.crossing) {
        report.verdict = Injectivity::SelfIntersecting;
    } else if (report.criterion < std::numbers::pi_v<Scalar>) {
        report.verdict = Injectivity::CertifiedInjective;
    } else {
        report.verdict = Injectivity::Inconclusive;
    }
    return report;
}

inline const char* to_string(Injectivity v)
{
    switch (v) {
    case Injectivity::CertifiedInjective: return "CertifiedInjective";
    case Injectivity::SelfIntersecting: return "SelfIntersecting";
    default: return "Inconclusive";
    }
}

// ---------------------------------------------------------------------------
// Circular arc over a chord of length 2 pi.

namespace detail {

// theta - sin(theta) cos(theta), accurate for small theta
template <typename Scalar>
Scalar segment_shape(Scalar theta)
{
    const Scalar u = Scalar(2) * theta;
    if (u < Scalar(0.05)) {
        const Scalar u2 = u * u;
        return u * u2 / Scalar(12) * (Scalar(1) - u2 / Scalar(20) * (Scalar(1) - u2 / Scalar(42) * (Scalar(1) - u2 / Scalar(72))));
    }
    return (u - std::sin(u)) / Scalar(2);
}

template <typename Scalar>
Scalar sinc(Scalar theta)
{
    if (std::abs(theta) < Scalar(1e-4)) {
        const Scalar t2 = theta * theta;
        return Scalar(1) - t2 / Scalar(6) * (Scalar(1) - t2 / Scalar(20));
    }
    return std::sin(theta) / theta;
}

} // namespace detail

/// a(l): area between a circular arc of length l and a chord of length 2 pi, divided by 2 pi.
template <typename Scalar>
Scalar chord_arc_area(Scalar ell)
{
    const Scalar two_pi = Scalar(2) * std::numbers::pi_v<Scalar>;
    if (!(ell >= two_pi)) throw std::domain_error("chord_arc_area: arc length must be at least 2 pi");
    if (ell == two_pi) return Scalar(0);

    // half-angle theta in (0, pi) with sin(theta) / theta = 2 pi / l
    const Scalar target = two_pi / ell;
    Scalar lo = Scalar(1e-12);
    Scalar hi = std::numbers::pi_v<Scalar> - Scalar(1e-12);
    while (hi - lo > Scalar(1e-12)) {
        const Scalar mid = (lo + hi) / Scalar(2);
        if (detail::sinc(mid) > target) lo = mid;
        else hi = mid;
    }
    Scalar theta = (lo + hi) / Scalar(2);
    for (int it = 0; it < 3; ++it) {
        const Scalar f = detail::sinc(theta) - target;
        const Scalar df = (theta * std::cos(theta) - std::sin(theta)) / (theta * theta);
        if (df == Scalar(0)) break;
        const Scalar next = theta - f / df;
        if (!(next > 0 && next < std::numbers::pi_v<Scalar>)) break;
        theta = next;
    }
    const Scalar r = std::numbers::pi_v<Scalar> / std::sin(theta);
    return r * r * detail::segment_shape(theta) / two_pi;
}

/// Q - (P / 2 pi) a(2 pi l_p / P): a positive value keeps the surface above the bottom.
template <typename Scalar>
Scalar min_height_bound(Scalar ell, Scalar period, Scalar depth)
{
    const Scalar two_pi = Scalar(2) * std::numbers::pi_v<Scalar>;
    const Scalar scaled = std::max(two_pi, two_pi * ell / period);
    return depth - period / two_pi * chord_arc_area(scaled);
}

using PeriodicCurved = PeriodicCurve<double>;
using GraphSurfaced = GraphSurface<double>;

} // namespace vortwave
