#pragma once

#include "vortwave/spectral.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>
#include <vector>

namespace vortwave {

class VorticityError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Right-continuous decreasing step function on (0, total area).
/// Step j takes values[j] on [ends[j-1], ends[j]), with ends[-1] = 0.
template <typename Scalar>
struct VorticityProfile {
    std::vector<Scalar> ends;
    std::vector<Scalar> values;

    VorticityProfile() = default;

    /// Builds a profile from steps given in decreasing order of value; merges equal neighbours
    /// and drops empty steps.
    static VorticityProfile from_steps(const std::vector<Scalar>& step_values, const std::vector<Scalar>& widths)
    {
        if (step_values.size() != widths.size()) throw VorticityError("profile: values and widths differ in length");
        VorticityProfile p;
        Scalar s = 0;
        for (std::size_t j = 0; j < step_values.size(); ++j) {
            if (!(widths[j] >= 0) || !std::isfinite(step_values[j])) throw VorticityError("profile: invalid step");
            if (widths[j] == 0) continue;
            s += widths[j];
            if (!p.values.empty()) {
                if (step_values[j] > p.values.back()) throw VorticityError("profile: values must be decreasing");
                if (step_values[j] == p.values.back()) {
                    p.ends.back() = s;
                    continue;
                }
            }
            p.values.push_back(step_values[j]);
            p.ends.push_back(s);
        }
        if (p.values.empty()) throw VorticityError("profile: no positive-width step");
        return p;
    }

    static VorticityProfile constant(Scalar value, Scalar area) { return from_steps({value}, {area}); }

    int steps() const { return static_cast<int>(values.size()); }
    Scalar total_area() const { return ends.back(); }
    Scalar start(int j) const { return j == 0 ? Scalar(0) : ends[static_cast<std::size_t>(j - 1)]; }
    Scalar width(int j) const { return ends[static_cast<std::size_t>(j)] - start(j); }

    Scalar value_at(Scalar s) const
    {
        auto it = std::upper_bound(ends.begin(), ends.end(), s);
        if (it == ends.end()) return values.back();
        return values[static_cast<std::size_t>(it - ends.begin())];
    }

    /// int_0^s g
    Scalar integral_to(Scalar s) const
    {
        Scalar acc = 0;
        for (int j = 0; j < steps(); ++j) {
            const Scalar a = start(j);
            if (s <= a) break;
            acc += values[static_cast<std::size_t>(j)] * (std::min(s, ends[static_cast<std::size_t>(j)]) - a);
        }
        return acc;
    }

    Scalar mass() const { return integral_to(total_area()); }

    /// int_a^b g
    Scalar integral(Scalar a, Scalar b) const { return integral_to(b) - integral_to(a); }

    /// (int_0^PQ |g|^p)^{1/p}
    Scalar norm(int p) const
    {
        Scalar acc = 0;
        for (int j = 0; j < steps(); ++j) acc += std::pow(std::abs(values[static_cast<std::size_t>(j)]), p) * width(j);
        return std::pow(acc, Scalar(1) / Scalar(p));
    }

    /// Same distribution with every value multiplied by a non-negative factor.
    VorticityProfile scaled(Scalar factor) const
    {
        if (factor < 0) throw VorticityError("profile: negative scale reverses the ordering");
        if (factor == 0) return constant(0, total_area());
        VorticityProfile p = *this;
        for (auto& v : p.values) v *= factor;
        return p;
    }

    bool one_signed_nonnegative() const { return values.back() >= 0; }
    bool one_signed_nonpositive() const { return values.front() <= 0; }
    bool vanishes() const { return values.front() == 0 && values.back() == 0; }
};

/// Cell-valued vorticity with the cell areas of the mesh it lives on.
template <typename Scalar>
struct VorticityField {
    VectorX<Scalar> values;
    VectorX<Scalar> areas;

    VorticityField() = default;
    VorticityField(VectorX<Scalar> v, VectorX<Scalar> a) : values(std::move(v)), areas(std::move(a))
    {
        if (values.size() != areas.size()) throw VorticityError("field: values and areas differ in length");
        if (!values.allFinite()) throw VorticityError("field: non-finite vorticity value");
        if ((areas.array() <= 0).any()) throw VorticityError("field: cell areas must be positive");
    }

    int size() const { return static_cast<int>(values.size()); }
    Scalar total_area() const { return areas.sum(); }
    Scalar mass() const { return values.dot(areas); }
    /// sum_c a_c zeta_c phi_c
    Scalar pair(const VectorX<Scalar>& phi) const { return (values.array() * areas.array() * phi.array()).sum(); }
    Scalar norm(int p) const
    {
        return std::pow((values.array().abs().pow(Scalar(p)) * areas.array()).sum(), Scalar(1) / Scalar(p));
    }
};

template <typename Scalar>
VorticityProfile<Scalar> decreasing_rearrangement(const VorticityField<Scalar>& field)
{
    std::vector<int> order(static_cast<std::size_t>(field.size()));
    std::iota(order.begin(), order.end(), 0);
    std::stable_sort(order.begin(), order.end(), [&](int a, int b) { return field.values(a) > field.values(b); });
    std::vector<Scalar> v, w;
    v.reserve(order.size());
    w.reserve(order.size());
    for (int c : order) {
        v.push_back(field.values(c));
        w.push_back(field.areas(c));
    }
    return VorticityProfile<Scalar>::from_steps(v, w);
}

namespace detail {

template <typename Scalar>
std::vector<Scalar> merged_breakpoints(const VorticityProfile<Scalar>& a, const VorticityProfile<Scalar>& b)
{
    std::vector<Scalar> s;
    s.reserve(a.ends.size() + b.ends.size() + 1);
    s.push_back(0);
    s.insert(s.end(), a.ends.begin(), a.ends.end());
    s.insert(s.end(), b.ends.begin(), b.ends.end());
    std::sort(s.begin(), s.end());
    s.erase(std::unique(s.begin(), s.end()), s.end());
    return s;
}

template <typename Scalar>
void require_same_area(const VorticityProfile<Scalar>& a, const VorticityProfile<Scalar>& b, Scalar tol)
{
    const Scalar scale = std::max(Scalar(1), std::max(a.total_area(), b.total_area()));
    if (std::abs(a.total_area() - b.total_area()) > tol * scale)
        throw VorticityError("profiles are defined on different total areas");
}

} // namespace detail

/// int_0^A |g1 - g2| ds over the common interval.
template <typename Scalar>
Scalar profile_distance(const VorticityProfile<Scalar>& g1, const VorticityProfile<Scalar>& g2)
{
    const auto s = detail::merged_breakpoints(g1, g2);
    const Scalar end = std::min(g1.total_area(), g2.total_area());
    Scalar acc = 0;
    for (std::size_t i = 0; i + 1 < s.size() && s[i] < end; ++i) {
        const Scalar b = std::min(s[i + 1], end);
        const Scalar mid = Scalar(0.5) * (s[i] + b);
        acc += std::abs(g1.value_at(mid) - g2.value_at(mid)) * (b - s[i]);
    }
    return acc + std::abs(g1.total_area() - g2.total_area()) * std::max(std::abs(g1.values.back()), std::abs(g2.values.back()));
}

/// True when both fields have the same decreasing rearrangement: values agree within `value_tol`
/// on every common subinterval longer than `area_tol`.
template <typename Scalar>
bool is_rearrangement(const VorticityField<Scalar>& f1, const VorticityField<Scalar>& f2, Scalar value_tol = Scalar(1e-10),
                      Scalar area_tol = Scalar(1e-10))
{
    const auto g1 = decreasing_rearrangement(f1);
    const auto g2 = decreasing_rearrangement(f2);
    detail::require_same_area(g1, g2, area_tol);
    const auto s = detail::merged_breakpoints(g1, g2);
    const Scalar end = std::min(g1.total_area(), g2.total_area());
    for (std::size_t i = 0; i + 1 < s.size() && s[i] < end; ++i) {
        const Scalar b = std::min(s[i + 1], end);
        if (b - s[i] <= area_tol) continue;
        const Scalar mid = Scalar(0.5) * (s[i] + b);
        if (std::abs(g1.value_at(mid) - g2.value_at(mid)) > value_tol) return false;
    }
    return true;
}

/// Integral majorisation: int_0^s g <= int_0^s G for every s, including the full interval.
template <typename Scalar>
bool weak_closure_leq(const VorticityProfile<Scalar>& g, const VorticityProfile<Scalar>& G, Scalar tol = Scalar(1e-10))
{
    detail::require_same_area(g, G, Scalar(1e-8));
    const Scalar scale = std::max(Scalar(1), std::max(g.norm(1), G.norm(1)));
    for (Scalar s : detail::merged_breakpoints(g, G)) {
        if (g.integral_to(s) > G.integral_to(s) + tol * scale) return false;
    }
    return g.mass() <= G.mass() + tol * scale;
}

/// Membership of a field in the weak closure of the rearrangement class of `reference`.
template <typename Scalar>
bool in_weak_closure(const VorticityField<Scalar>& field, const VorticityProfile<Scalar>& reference, Scalar tol = Scalar(1e-10))
{
    const auto g = decreasing_rearrangement(field);
    const Scalar scale = std::max(Scalar(1), reference.norm(1));
    return weak_closure_leq(g, reference, tol) && std::abs(g.mass() - reference.mass()) <= tol * scale;
}

/// Cells taken in order `order` receive the profile averaged over consecutive area intervals.
template <typename Scalar>
VectorX<Scalar> fill_in_order(const VorticityProfile<Scalar>& profile, const std::vector<int>& order, const VectorX<Scalar>& areas)
{
    const Scalar total = areas.sum();
    const Scalar scale = std::max(Scalar(1), total);
    if (std::abs(total - profile.total_area()) > Scalar(1e-8) * scale)
        throw VorticityError("cell areas do not add up to the profile's total area");
    // rescale the area axis so the last cell ends exactly at the profile end
    const Scalar stretch = profile.total_area() / total;
    VectorX<Scalar> out(areas.size());
    Scalar s = 0;
    int j = 0;
    for (std::size_t n = 0; n < order.size(); ++n) {
        const int c = order[n];
        const Scalar a = s;
        const Scalar b = n + 1 == order.size() ? profile.total_area() : s + areas(c) * stretch;
        Scalar acc = 0;
        while (j < profile.steps() && profile.ends[static_cast<std::size_t>(j)] <= a) ++j;
        for (int q = j; q < profile.steps(); ++q) {
            const Scalar lo = std::max(a, profile.start(q));
            const Scalar hi = std::min(b, profile.ends[static_cast<std::size_t>(q)]);
            if (hi > lo) acc += profile.values[static_cast<std::size_t>(q)] * (hi - lo);
            if (profile.ends[static_cast<std::size_t>(q)] >= b) break;
        }
        out(c) = b > a ? acc / (b - a) : profile.value_at(a);
        s = b;
    }
    return out;
}

/// Minimiser of sum_c a_c h_c phi_c over realisations of `profile`: the largest values go to the
/// cells with the smallest phi (ties broken by cell index).
template <typename Scalar>
VorticityField<Scalar> optimal_rearrangement_step(const VorticityProfile<Scalar>& profile, const VectorX<Scalar>& phi,
                                                  const VectorX<Scalar>& areas)
{
    if (phi.size() != areas.size()) throw VorticityError("phi and areas differ in length");
    std::vector<int> order(static_cast<std::size_t>(phi.size()));
    std::iota(order.begin(), order.end(), 0);
    std::stable_sort(order.begin(), order.end(), [&](int a, int b) { return phi(a) < phi(b); });
    return VorticityField<Scalar>(fill_in_order(profile, order, areas), areas);
}

/// Realisation of the profile on cells taken in index order.
template <typename Scalar>
VorticityField<Scalar> realize(const VorticityProfile<Scalar>& profile, const VectorX<Scalar>& areas)
{
    std::vector<int> order(static_cast<std::size_t>(areas.size()));
    std::iota(order.begin(), order.end(), 0);
    return VorticityField<Scalar>(fill_in_order(profile, order, areas), areas);
}

/// Monotone (decreasing) map fitted to zeta as a function of phi by weighted isotonic regression.
template <typename Scalar>
struct VorticityFunctionFit {
    std::vector<Scalar> knots;  ///< ascending distinct phi values
    std::vector<Scalar> values; ///< fitted value at each knot, non-increasing
    VectorX<Scalar> fitted;     ///< fitted value per cell
    Scalar residual = 0;        ///< sqrt(sum_c a_c (zeta_c - fitted_c)^2)

    /// Step-function evaluation: value of the last knot not exceeding t.
    Scalar operator()(Scalar t) const
    {
        auto it = std::upper_bound(knots.begin(), knots.end(), t);
        if (it == knots.begin()) return values.front();
        return values[static_cast<std::size_t>(it - knots.begin() - 1)];
    }
};

template <typename Scalar>
VorticityFunctionFit<Scalar> vorticity_function_fit(const VorticityField<Scalar>& zeta, const VectorX<Scalar>& phi)
{
    if (phi.size() != zeta.size()) throw VorticityError("phi and zeta differ in length");
    std::vector<int> order(static_cast<std::size_t>(phi.size()));
    std::iota(order.begin(), order.end(), 0);
    std::stable_sort(order.begin(), order.end(), [&](int a, int b) { return phi(a) < phi(b); });

    // blocks of the pool-adjacent-violators pass; tied phi start pooled
    struct Block {
        Scalar weight, mean;
        std::size_t first, last; // range in `order`
    };
    std::vector<Block> blocks;
    std::vector<Scalar> knots;
    for (std::size_t n = 0; n < order.size();) {
        std::size_t e = n;
        Scalar w = 0, m = 0;
        while (e < order.size() && phi(order[e]) == phi(order[n])) {
            w += zeta.areas(order[e]);
            m += zeta.areas(order[e]) * zeta.values(order[e]);
            ++e;
        }
        knots.push_back(phi(order[n]));
        Block b{w, m / w, n, e - 1};
        while (!blocks.empty() && blocks.back().mean < b.mean) {
            const Block& p = blocks.back();
            b = Block{p.weight + b.weight, (p.weight * p.mean + b.weight * b.mean) / (p.weight + b.weight), p.first, b.last};
            blocks.pop_back();
        }
        blocks.push_back(b);
        n = e;
    }

    VorticityFunctionFit<Scalar> fit;
    fit.knots = std::move(knots);
    fit.fitted.resize(zeta.size());
    for (const Block& b : blocks) {
        for (std::size_t n = b.first; n <= b.last; ++n) fit.fitted(order[n]) = b.mean;
    }
    fit.values.reserve(fit.knots.size());
    for (std::size_t n = 0; n < order.size(); ++n) {
        if (n == 0 || phi(order[n]) != phi(order[n - 1])) fit.values.push_back(fit.fitted(order[n]));
    }
    fit.residual = std::sqrt(((zeta.values - fit.fitted).array().square() * zeta.areas.array()).sum());
    return fit;
}

using VorticityProfiled = VorticityProfile<double>;
using VorticityFieldd = VorticityField<double>;

} // namespace vortwave
