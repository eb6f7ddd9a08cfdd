#pragma once

// Simulators: piecewise-mean Gaussian sequences and piecewise-Hurst fractional
// Brownian paths built from exact fractional Gaussian noise segments.

#include "cpd/core.hpp"
#include "cpd/fft.hpp"

#include <cmath>
#include <complex>
#include <cstdint>
#include <random>
#include <vector>

namespace cpd {

using Seed = std::uint64_t;

inline constexpr Seed kDefaultSeed = 20090101;

inline std::uint64_t splitmix64(std::uint64_t z) noexcept {
    z += 0x9E3779B97F4A7C15ULL;
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
    return z ^ (z >> 31);
}

/// Child seed for replication / segment `index`:
///   splitmix64(seed ^ splitmix64(index)).
/// Children of distinct indices are decorrelated and independent of how many
/// siblings are drawn.
inline Seed split_seed(Seed seed, std::uint64_t index) noexcept {
    return splitmix64(seed ^ splitmix64(index));
}

using Rng = std::mt19937_64;

inline TimeSeries simulate_piecewise_gaussian(const PiecewiseSpec &spec, std::size_t n, double sigma,
                                              Seed seed) {
    if (!(sigma >= 0.0) || !std::isfinite(sigma))
        throw Error(ErrorKind::BadSigma, "sigma must be a finite nonnegative number");
    TimeSeries out;
    out.values = piecewise_mean_function(spec, n);
    if (sigma > 0.0) {
        Rng rng(seed);
        std::normal_distribution<double> normal(0.0, 1.0);
        for (double &v : out.values)
            v += sigma * normal(rng);
    }
    return out;
}

/// Autocovariance of unit-variance fractional Gaussian noise.
inline double fgn_autocovariance(double hurst, std::size_t lag) {
    const double k = static_cast<double>(lag);
    const double e = 2.0 * hurst;
    return 0.5 * (std::pow(k + 1.0, e) - 2.0 * std::pow(k, e) + std::pow(std::abs(k - 1.0), e));
}

inline constexpr double kEmbeddingTolerance = 1e-8;

namespace detail {

// Eigenvalues of the circulant embedding of size m = 2*(len-1).
inline std::vector<double> circulant_eigenvalues(double hurst, std::size_t len) {
    const std::size_t m = 2 * (len - 1);
    std::vector<std::complex<double>> row(m);
    for (std::size_t k = 0; k <= m / 2; ++k) {
        row[k] = fgn_autocovariance(hurst, k);
        if (k > 0 && k < m / 2) row[m - k] = row[k];
    }
    ForwardFft fft(m);
    const auto spectrum = fft(row);
    std::vector<double> eig(m);
    for (std::size_t k = 0; k < m; ++k)
        eig[k] = spectrum[k].real();
    return eig;
}

} // namespace detail

/// Exact stationary fractional Gaussian noise by circulant embedding
/// (Davies-Harte). Eigenvalues down to -1e-8 are clipped to zero; worse
/// embeddings are retried at doubled size, up to three doublings.
inline std::vector<double> simulate_fgn(double hurst, std::size_t n, Seed seed) {
    if (!(hurst > 0.0 && hurst < 1.0))
        throw Error(ErrorKind::InvalidArgument, "Hurst index must lie in (0,1)");
    Rng rng(seed);
    std::normal_distribution<double> normal(0.0, 1.0);
    if (n == 0) return {};
    if (n == 1) return {normal(rng)};

    std::size_t len = n;
    std::vector<double> eig;
    for (int attempt = 0;; ++attempt) {
        eig = detail::circulant_eigenvalues(hurst, len);
        double lowest = 0.0;
        for (double e : eig)
            lowest = std::min(lowest, e);
        if (lowest >= -kEmbeddingTolerance) break;
        if (attempt == 3)
            throw Error(ErrorKind::EmbeddingFailure,
                        "negative circulant eigenvalue " + std::to_string(lowest));
        len = 2 * len - 1;
    }

    const std::size_t m = eig.size();
    std::vector<std::complex<double>> weights(m);
    for (std::size_t k = 0; k < m; ++k) {
        const double scale = std::sqrt(std::max(eig[k], 0.0) / static_cast<double>(m));
        const double re = normal(rng);
        const double im = normal(rng);
        weights[k] = {scale * re, scale * im};
    }
    ForwardFft fft(m);
    const auto y = fft(weights);
    std::vector<double> out(n);
    for (std::size_t i = 0; i < n; ++i)
        out[i] = y[i].real();
    return out;
}

struct HurstProcess {
    std::vector<double> samples; ///< X(0), ..., X(T-1) with X(0) = 0
    PiecewiseSpec spec;

    std::size_t horizon() const noexcept { return samples.size(); }
};

/// Path whose increment X(i) - X(i-1) is unit-variance fGn with the Hurst
/// index of the segment containing i. Segments use independent noise (child
/// seed per segment) and the path is continuous across boundaries.
inline HurstProcess simulate_piecewise_fbm(const PiecewiseSpec &spec, std::size_t horizon, Seed seed) {
    validate_hurst_spec(spec, horizon);
    HurstProcess out;
    out.spec = spec;
    out.samples.assign(horizon, 0.0);
    std::size_t start = 1;
    for (std::size_t k = 0; k < spec.levels.size(); ++k) {
        const std::size_t stop = k < spec.boundaries.size() ? spec.boundaries[k] : horizon;
        if (stop <= start) continue;
        const auto inc = simulate_fgn(spec.levels[k], stop - start, split_seed(seed, k));
        for (std::size_t i = start; i < stop; ++i)
            out.samples[i] = out.samples[i - 1] + inc[i - start];
        start = stop;
    }
    return out;
}

/// Five-change configuration of the long-memory experiment (T = 100000).
inline PiecewiseSpec hurst_model_spec() {
    return {{12500, 25496, 43045, 70083, 82040}, {0.55, 0.67, 0.53, 0.61, 0.7, 0.57}};
}

/// Toy-model signal on n samples: the long-memory change configuration
/// rescaled to n, with jumps +0.5, -0.75, +0.5, +1.25, -0.5 (signs follow the
/// Hurst sequence, sizes span [0.5, 1.25]).
inline PiecewiseSpec toy_model_spec(std::size_t n) {
    PiecewiseSpec spec = hurst_model_spec();
    for (auto &b : spec.boundaries)
        b = (b * n + 50000) / 100000;
    spec.levels = {0.0, 0.5, -0.25, 0.25, 1.5, 1.0};
    return spec;
}

} // namespace cpd
