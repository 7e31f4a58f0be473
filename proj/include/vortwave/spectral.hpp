#pragma once

#include <Eigen/Dense>
#include <unsupported/Eigen/FFT>

#include <cmath>
#include <complex>
#include <numbers>
#include <vector>

namespace vortwave {

template <typename Scalar>
using VectorX = Eigen::Matrix<Scalar, Eigen::Dynamic, 1>;

template <typename Scalar>
using MatrixX2 = Eigen::Matrix<Scalar, Eigen::Dynamic, 2>;

namespace spectral {

/// Signed integer wavenumber of DFT bin `k` for a length-`n` transform.
inline int wavenumber(int k, int n) { return k <= n / 2 ? k : k - n; }

template <typename Scalar>
std::vector<std::complex<Scalar>> forward(const VectorX<Scalar>& samples)
{
    Eigen::FFT<Scalar> fft;
    std::vector<Scalar> in(samples.data(), samples.data() + samples.size());
    std::vector<std::complex<Scalar>> out;
    fft.fwd(out, in);
    return out;
}

template <typename Scalar>
VectorX<Scalar> inverse(const std::vector<std::complex<Scalar>>& coeffs)
{
    Eigen::FFT<Scalar> fft;
    std::vector<Scalar> out;
    fft.inv(out, coeffs);
    return Eigen::Map<const VectorX<Scalar>>(out.data(), static_cast<Eigen::Index>(out.size()));
}

/// d^order f / dx^order of P-periodic samples at x_i = i P / n.
/// The Nyquist mode is dropped for odd orders so the result stays real.
template <typename Scalar>
VectorX<Scalar> derivative(const VectorX<Scalar>& samples, Scalar period, int order)
{
    const int n = static_cast<int>(samples.size());
    if (order == 0 || n == 0) return samples;
    auto coeffs = forward(samples);
    const Scalar base = Scalar(2) * std::numbers::pi_v<Scalar> / period;
    for (int k = 0; k < n; ++k) {
        const int w = wavenumber(k, n);
        if (n % 2 == 0 && k == n / 2 && order % 2 == 1) {
            coeffs[k] = 0;
            continue;
        }
        const std::complex<Scalar> ik(0, base * Scalar(w));
        coeffs[k] *= std::pow(ik, order);
    }
    return inverse(coeffs);
}

/// Periodic antiderivative of mean-free samples, normalised to vanish at x = 0.
template <typename Scalar>
VectorX<Scalar> antiderivative(const VectorX<Scalar>& samples, Scalar period)
{
    const int n = static_cast<int>(samples.size());
    auto coeffs = forward(samples);
    const Scalar base = Scalar(2) * std::numbers::pi_v<Scalar> / period;
    coeffs[0] = 0;
    for (int k = 1; k < n; ++k) {
        if (n % 2 == 0 && k == n / 2) {
            coeffs[k] = 0;
            continue;
        }
        coeffs[k] /= std::complex<Scalar>(0, base * Scalar(wavenumber(k, n)));
    }
    VectorX<Scalar> out = inverse(coeffs);
    out.array() -= out(0);
    return out;
}

/// Trigonometric interpolant of periodic samples, evaluable at any abscissa.
template <typename Scalar>
class TrigInterpolant {
public:
    TrigInterpolant() = default;
    TrigInterpolant(const VectorX<Scalar>& samples, Scalar period)
        : n_(static_cast<int>(samples.size())), period_(period), coeffs_(forward(samples))
    {
    }

    Scalar operator()(Scalar x) const { return evaluate(x, 0); }

    /// Value of the `order`-th derivative of the interpolant at x.
    Scalar evaluate(Scalar x, int order) const
    {
        const Scalar base = Scalar(2) * std::numbers::pi_v<Scalar> / period_;
        Scalar sum = order == 0 ? coeffs_[0].real() : Scalar(0);
        const int half = (n_ - 1) / 2;
        for (int k = 1; k <= half; ++k) {
            const Scalar w = base * Scalar(k);
            const std::complex<Scalar> e(std::cos(w * x), std::sin(w * x));
            const std::complex<Scalar> dk = std::pow(std::complex<Scalar>(0, w), order);
            sum += Scalar(2) * (coeffs_[k] * e * dk).real();
        }
        if (n_ % 2 == 0 && n_ > 0) {
            const Scalar w = base * Scalar(n_ / 2);
            const Scalar c = coeffs_[n_ / 2].real();
            // cos(w x) and its derivatives
            switch (order % 4) {
            case 0: sum += c * std::pow(w, order) * std::cos(w * x); break;
            case 1: sum -= c * std::pow(w, order) * std::sin(w * x); break;
            case 2: sum -= c * std::pow(w, order) * std::cos(w * x); break;
            default: sum += c * std::pow(w, order) * std::sin(w * x); break;
            }
        }
        return sum / Scalar(n_);
    }

    /// Samples of the interpolant shifted by `shift`: g(x_i) = f(x_i + shift).
    VectorX<Scalar> shifted_samples(Scalar shift) const
    {
        const Scalar base = Scalar(2) * std::numbers::pi_v<Scalar> / period_;
        auto c = coeffs_;
        for (int k = 0; k < n_; ++k) {
            if (n_ % 2 == 0 && k == n_ / 2) {
                c[k] = coeffs_[k].real() * std::cos(base * Scalar(n_ / 2) * shift);
                continue;
            }
            const Scalar w = base * Scalar(wavenumber(k, n_));
            c[k] *= std::complex<Scalar>(std::cos(w * shift), std::sin(w * shift));
        }
        return inverse(c);
    }

    int size() const { return n_; }
    Scalar period() const { return period_; }
    const std::vector<std::complex<Scalar>>& coefficients() const { return coeffs_; }

private:
    int n_ = 0;
    Scalar period_ = 1;
    std::vector<std::complex<Scalar>> coeffs_;
};

/// Squared H^m seminorm-weighted sum \sum_{j<=m} ||f^{(j)}||^2_{L^2(0,P)} via Parseval.
template <typename Scalar>
Scalar sobolev_norm_squared(const VectorX<Scalar>& samples, Scalar period, int m)
{
    const int n = static_cast<int>(samples.size());
    const auto coeffs = forward(samples);
    const Scalar base = Scalar(2) * std::numbers::pi_v<Scalar> / period;
    Scalar sum = 0;
    for (int k = 0; k < n; ++k) {
        const Scalar w = base * Scalar(wavenumber(k, n));
        Scalar weight = 0;
        for (int j = 0; j <= m; ++j) weight += std::pow(w * w, j);
        sum += weight * std::norm(coeffs[k]);
    }
    return sum * period / (Scalar(n) * Scalar(n));
}

} // namespace spectral
} // namespace vortwave
