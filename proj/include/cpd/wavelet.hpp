#pragma once

// Continuous wavelet coefficients of a sampled path at a fixed scale and the
// log-squared coefficient series used for Hurst-change detection.
//
//   d(a,b) = a^{-1/2} sum_t psi((t - b)/a) X(t)          (unit sampling)
//   Y_b    = log d(a,b)^2
//
// For a Gaussian process with stationary increments and spectral density f,
// d(a,.) is stationary with variance I(a) = int |psi_hat(x)|^2 f(x/a) dx, so
// within a segment of constant Hurst index Y_b = ln I(a) + zeta_b, where
// zeta_b ~ ln U^2 with U standard normal.

#include "cpd/core.hpp"
#include "cpd/fft.hpp"

#include <Eigen/Dense>

#include <array>
#include <cmath>
#include <complex>
#include <numbers>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace cpd {

/// E[ln U^2] = -gamma - ln 2 for U ~ N(0,1).
inline constexpr double kLogChiSquareMean = -std::numbers::egamma - std::numbers::ln2;
/// Var[ln U^2] = pi^2 / 2.
inline constexpr double kLogChiSquareVariance = std::numbers::pi * std::numbers::pi / 2.0;

struct Wavelet {
    std::string name;
    std::size_t vanishing_moments = 0;
    std::vector<double> lowpass; ///< reconstruction low-pass filter h
    double support_lo = 0.0;     ///< L1
    double support_hi = 0.0;     ///< L2
    std::size_t resolution = 0;  ///< samples per unit time
    std::vector<double> psi;     ///< psi(support_lo + n / resolution)
    double frequency_step = 0.0;
    std::vector<double> spectrum; ///< |psi_hat(k * frequency_step)|^2, k >= 0

    double time_step() const noexcept { return 1.0 / static_cast<double>(resolution); }
    double support_length() const noexcept { return support_hi - support_lo; }

    /// psi(t) by linear interpolation on the dyadic grid; zero outside the support.
    double operator()(double t) const noexcept {
        const double pos = (t - support_lo) * static_cast<double>(resolution);
        if (pos < 0.0 || pos > static_cast<double>(psi.size() - 1)) return 0.0;
        const auto i = static_cast<std::size_t>(pos);
        if (i + 1 >= psi.size()) return psi.back();
        const double frac = pos - static_cast<double>(i);
        return psi[i] + frac * (psi[i + 1] - psi[i]);
    }
};

namespace detail {

inline const std::vector<double> *daubechies_filter(std::size_t order) {
    static const std::vector<double> db2{0.48296291314453416, 0.8365163037378079, 0.2241438680420134,
                                         -0.12940952255126037};
    static const std::vector<double> db4{0.2303778133088965,    0.7148465705529157,
                                         0.6308807679298589,    -0.027983769416859854,
                                         -0.18703481171909309,  0.030841381835560764,
                                         0.0328830116668852,    -0.010597401785069032};
    static const std::vector<double> db6{
        0.11154074335010947,  0.49462389039845306,   0.7511339080210954,   0.31525035170919763,
        -0.22626469396543983, -0.12976686756726194,  0.09750160558732304,  0.027522865530305727,
        -0.03158203931748603, 0.0005538422011614961, 0.004777257510945511, -0.0010773010853084796};
    static const std::vector<double> db8{
        0.05441584224310401,    0.31287159091429995,   0.6756307362972898,    0.5853546836542067,
        -0.015829105256349306,  -0.2840155429615469,   0.0004724845739132828, 0.12874742662047847,
        -0.017369301001807547,  -0.044088253930794755, 0.013981027917398282,  0.008746094047405777,
        -0.004870352993451574,  -0.00039174037337694705, 0.0006754494064505693,
        -0.00011747678412476953};
    switch (order) {
    case 2: return &db2;
    case 4: return &db4;
    case 6: return &db6;
    case 8: return &db8;
    default: return nullptr;
    }
}

inline std::size_t parse_daubechies_order(std::string_view name) {
    std::string_view digits;
    if (name.starts_with("daubechies-"))
        digits = name.substr(11);
    else if (name.starts_with("db"))
        digits = name.substr(2);
    else
        return 0;
    std::size_t order = 0;
    for (char c : digits) {
        if (c < '0' || c > '9') return 0;
        order = order * 10 + static_cast<std::size_t>(c - '0');
    }
    return order;
}

// Scaling function at the integers 0..S: eigenvector of the refinement matrix
// for eigenvalue 1, normalized to sum 1.
inline std::vector<double> scaling_at_integers(const std::vector<double> &h) {
    const auto taps = static_cast<long>(h.size());
    const long s = taps - 1;
    const long inner = s - 1;
    Eigen::MatrixXd a = Eigen::MatrixXd::Zero(inner, inner);
    for (long m = 1; m <= inner; ++m)
        for (long p = 1; p <= inner; ++p) {
            const long k = 2 * m - p;
            if (k >= 0 && k < taps) a(m - 1, p - 1) = std::numbers::sqrt2 * h[static_cast<std::size_t>(k)];
        }
    a -= Eigen::MatrixXd::Identity(inner, inner);
    a.row(inner - 1).setOnes();
    Eigen::VectorXd rhs = Eigen::VectorXd::Zero(inner);
    rhs(inner - 1) = 1.0;
    const Eigen::VectorXd v = a.fullPivLu().solve(rhs);
    std::vector<double> phi(static_cast<std::size_t>(s) + 1, 0.0);
    for (long m = 1; m <= inner; ++m)
        phi[static_cast<std::size_t>(m)] = v(m - 1);
    return phi;
}

} // namespace detail

/// Sampled mother wavelet of the named Daubechies family member ("daubechies-6"
/// or "db6"; orders 2, 4, 6, 8) by the cascade algorithm on the dyadic grid of
/// `resolution` points per unit (a power of two, at least 256).
inline Wavelet build_wavelet(std::string_view name = "daubechies-6", std::size_t resolution = 256) {
    const std::size_t order = detail::parse_daubechies_order(name);
    const auto *filter = detail::daubechies_filter(order);
    if (!filter)
        throw Error(ErrorKind::UnsupportedWavelet, "unsupported wavelet '" + std::string(name) + "'");
    if (resolution < 256 || (resolution & (resolution - 1)) != 0)
        throw Error(ErrorKind::InvalidArgument, "resolution must be a power of two >= 256");

    const std::vector<double> &h = *filter;
    const std::size_t taps = h.size();
    const std::size_t support = taps - 1;

    std::vector<double> phi = detail::scaling_at_integers(h);
    std::size_t per_unit = 1;
    while (per_unit < resolution) {
        const std::size_t half = per_unit;
        per_unit *= 2;
        std::vector<double> next(support * per_unit + 1, 0.0);
        for (std::size_t n = 0; n < next.size(); ++n) {
            double acc = 0.0;
            for (std::size_t k = 0; k < taps; ++k) {
                if (n < k * half) break;
                const std::size_t idx = n - k * half;
                if (idx < phi.size()) acc += h[k] * phi[idx];
            }
            next[n] = std::numbers::sqrt2 * acc;
        }
        phi = std::move(next);
    }

    Wavelet w;
    w.name = "daubechies-" + std::to_string(order);
    w.vanishing_moments = order;
    w.lowpass = h;
    w.support_lo = 0.0;
    w.support_hi = static_cast<double>(support);
    w.resolution = resolution;
    w.psi.assign(support * resolution + 1, 0.0);
    // psi(t) = sqrt2 * sum_k g_k phi(2t - k),  g_k = (-1)^k h_{L-1-k}
    for (std::size_t n = 0; n < w.psi.size(); ++n) {
        double acc = 0.0;
        for (std::size_t k = 0; k < taps; ++k) {
            if (2 * n < k * resolution) break;
            const std::size_t idx = 2 * n - k * resolution;
            if (idx >= phi.size()) continue;
            const double g = (k % 2 == 0 ? 1.0 : -1.0) * h[taps - 1 - k];
            acc += g * phi[idx];
        }
        w.psi[n] = std::numbers::sqrt2 * acc;
    }

    // |psi_hat|^2 from a zero-padded DFT of the samples.
    std::size_t padded = 1;
    while (padded < 16 * w.psi.size()) padded *= 2;
    std::vector<std::complex<double>> buf(padded);
    for (std::size_t n = 0; n < w.psi.size(); ++n)
        buf[n] = w.psi[n];
    ForwardFft fft(padded);
    const auto spec = fft(buf);
    const double dt = w.time_step();
    w.frequency_step = 2.0 * std::numbers::pi / (static_cast<double>(padded) * dt);
    w.spectrum.resize(padded / 2 + 1);
    for (std::size_t k = 0; k < w.spectrum.size(); ++k)
        w.spectrum[k] = std::norm(spec[k]) * dt * dt;
    return w;
}

/// Discrete filter f_m = a^{-1/2} psi(m/a), m = 0..floor(a*L), with the
/// component along polynomials of degree < vanishing_moments projected out so
/// that the sampled filter annihilates those polynomials exactly.
inline std::vector<double> dilated_filter(const Wavelet &w, double scale) {
    if (!(scale >= 1.0) || !std::isfinite(scale))
        throw Error(ErrorKind::InvalidArgument, "scale must be >= 1");
    const auto taps = static_cast<std::size_t>(std::floor(scale * w.support_length())) + 1;
    const double norm = 1.0 / std::sqrt(scale);
    Eigen::VectorXd f(static_cast<long>(taps));
    for (std::size_t m = 0; m < taps; ++m)
        f(static_cast<long>(m)) = norm * w(w.support_lo + static_cast<double>(m) / scale);

    const auto degree = static_cast<long>(std::min(w.vanishing_moments, taps - 1));
    if (degree > 0) {
        const double centre = 0.5 * static_cast<double>(taps - 1);
        const double half = std::max(centre, 1.0);
        Eigen::MatrixXd basis(static_cast<long>(taps), degree);
        for (std::size_t m = 0; m < taps; ++m) {
            const double u = (static_cast<double>(m) - centre) / half;
            double p = 1.0;
            for (long d = 0; d < degree; ++d) {
                basis(static_cast<long>(m), d) = p;
                p *= u;
            }
        }
        const Eigen::HouseholderQR<Eigen::MatrixXd> qr(basis);
        const Eigen::MatrixXd q = qr.householderQ() * Eigen::MatrixXd::Identity(static_cast<long>(taps), degree);
        f -= q * (q.transpose() * f);
    }
    return {f.data(), f.data() + f.size()};
}

inline constexpr double kDegenerateTolerance = 1e-10;

struct WaveletSeries {
    std::string wavelet;
    double scale = 0.0;
    /// coefficients[i] = d(scale, first_shift + i)
    std::size_t first_shift = 0;
    std::vector<double> coefficients;
    /// Coefficient is zero relative to sum_m |f_m X(b+m)|.
    std::vector<bool> degenerate;
    /// Offset from a shift b to the centre of its dilated support.
    double centre_offset = 0.0;

    std::size_t size() const noexcept { return coefficients.size(); }
};

/// Coefficients for every shift whose dilated support [b + a L1, b + a L2]
/// lies inside the observation window. One convolution.
inline WaveletSeries wavelet_coefficients(std::span<const double> path, const Wavelet &w, double scale) {
    const auto f = dilated_filter(w, scale);
    const double reach = scale * w.support_length();
    if (path.empty() || static_cast<double>(path.size() - 1) < reach)
        throw Error(ErrorKind::ScaleTooLarge, "no shift has its dilated support inside the series");
    const auto last_shift = static_cast<std::size_t>(std::floor(static_cast<double>(path.size() - 1) - reach));

    WaveletSeries ws;
    ws.wavelet = w.name;
    ws.scale = scale;
    ws.first_shift = 0;
    ws.centre_offset = scale * 0.5 * (w.support_lo + w.support_hi);
    ws.coefficients.resize(last_shift + 1);
    ws.degenerate.resize(last_shift + 1);
    for (std::size_t b = 0; b <= last_shift; ++b) {
        double acc = 0.0;
        double mag = 0.0;
        for (std::size_t m = 0; m < f.size(); ++m) {
            const double term = f[m] * path[b + m];
            acc += term;
            mag += std::abs(term);
        }
        ws.coefficients[b] = acc;
        ws.degenerate[b] = !(std::abs(acc) > kDegenerateTolerance * mag);
    }
    return ws;
}

inline WaveletSeries wavelet_coefficients(const TimeSeries &series, const Wavelet &w, double scale) {
    return wavelet_coefficients(validate_series(series).view(), w, scale);
}

struct LogSquareSeries {
    TimeSeries series;             ///< Y_i = log d(a, b_i)^2
    std::vector<std::size_t> shifts; ///< b_i of every retained value
    double centre_offset = 0.0;
    double noise_mean = kLogChiSquareMean;
    double noise_variance = kLogChiSquareVariance;

    /// Time index (centre of the dilated support) of Y_i.
    double time_of(std::size_t i) const { return static_cast<double>(shifts.at(i)) + centre_offset; }
};

inline LogSquareSeries log_square_series(const WaveletSeries &ws) {
    LogSquareSeries out;
    out.centre_offset = ws.centre_offset;
    for (std::size_t i = 0; i < ws.size(); ++i) {
        if (ws.degenerate[i]) continue;
        const double d = ws.coefficients[i];
        out.series.values.push_back(std::log(d * d));
        out.shifts.push_back(ws.first_shift + i);
    }
    if (out.series.values.empty())
        throw Error(ErrorKind::AllDegenerate, "every wavelet coefficient is zero");
    return out;
}

/// C(H) = pi^{-1} H Gamma(2H) sin(pi H): spectral constant of unit-variance fBm,
/// whose spectral density is C(H) |xi|^{-2H-1}.
inline double hurst_spectral_constant(double hurst) {
    return hurst * std::tgamma(2.0 * hurst) * std::sin(std::numbers::pi * hurst) / std::numbers::pi;
}

namespace detail {

inline double spectral_trapezoid(const Wavelet &w, double hurst, double scale, std::size_t stride) {
    const double c = hurst_spectral_constant(hurst);
    const double step = w.frequency_step * static_cast<double>(stride);
    const double expo = -2.0 * hurst - 1.0;
    double acc = 0.0;
    const std::size_t last = (w.spectrum.size() - 1) / stride * stride;
    for (std::size_t k = stride; k <= last; k += stride) {
        const double x = static_cast<double>(k) * w.frequency_step;
        const double v = w.spectrum[k] * c * std::pow(x / scale, expo);
        acc += (k == last) ? 0.5 * v : v;
    }
    // Integrand vanishes at x = 0; even in x.
    return 2.0 * acc * step;
}

} // namespace detail

/// I(a) = int |psi_hat(x)|^2 C(H) |x/a|^{-2H-1} dx by the trapezoid rule over
/// the tabulated spectrum; the grid is checked against its half-density
/// subgrid.
inline double theoretical_variance(double hurst, double scale, const Wavelet &w) {
    if (!(hurst > 0.0 && hurst < 1.0) || !(scale > 0.0))
        throw Error(ErrorKind::InvalidArgument, "need H in (0,1) and a > 0");
    const double fine = detail::spectral_trapezoid(w, hurst, scale, 1);
    const double coarse = detail::spectral_trapezoid(w, hurst, scale, 2);
    if (!std::isfinite(fine) || std::abs(fine - coarse) > 1e-6 * std::abs(fine))
        throw Error(ErrorKind::QuadratureFailure, "spectral quadrature did not converge");
    return fine;
}

/// Expected value of Y inside a segment of Hurst index H: ln I(a) + E[ln U^2].
inline double theoretical_level(double hurst, double scale, const Wavelet &w) {
    return std::log(theoretical_variance(hurst, scale, w)) + kLogChiSquareMean;
}

} // namespace cpd
