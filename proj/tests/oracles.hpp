#pragma once

// Reference computations used only by the tests. Each one follows the textbook
// definition directly and shares no code path with the library routine it
// checks.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <functional>
#include <limits>
#include <span>
#include <vector>

namespace cpd::oracle {

/// D(A,k) = mean x[k, k+A) - mean x[k-A, k), O(N*A).
inline std::vector<double> filtered_derivative_direct(std::span<const double> x, std::size_t a) {
    std::vector<double> out;
    for (std::size_t k = a; k + a <= x.size(); ++k) {
        double right = 0.0, left = 0.0;
        for (std::size_t j = 0; j < a; ++j) {
            right += x[k + j];
            left += x[k - a + j];
        }
        out.push_back(right / static_cast<double>(a) - left / static_cast<double>(a));
    }
    return out;
}

/// Rescan-everything candidate selection: repeated argmax of |D| over the
/// unmasked positions, first index on ties.
inline std::vector<std::size_t> select_candidates_rescan(std::span<const double> d, std::size_t offset,
                                                         std::size_t kmax, std::size_t gap) {
    std::vector<bool> masked(d.size(), false);
    std::vector<std::size_t> picks;
    while (picks.size() < kmax) {
        std::size_t best = d.size();
        double best_mag = 0.0;
        for (std::size_t j = 0; j < d.size(); ++j)
            if (!masked[j] && std::abs(d[j]) > best_mag) {
                best_mag = std::abs(d[j]);
                best = j;
            }
        if (best == d.size()) break;
        picks.push_back(best + offset);
        for (std::size_t j = best > gap ? best - gap : 0; j <= std::min(d.size() - 1, best + gap); ++j)
            masked[j] = true;
    }
    std::sort(picks.begin(), picks.end());
    return picks;
}

/// Two-pass residual sum of squares of x[i..j].
inline double segment_cost_direct(std::span<const double> x, std::size_t i, std::size_t j) {
    double mean = 0.0;
    for (std::size_t t = i; t <= j; ++t)
        mean += x[t];
    mean /= static_cast<double>(j - i + 1);
    double ss = 0.0;
    for (std::size_t t = i; t <= j; ++t)
        ss += (x[t] - mean) * (x[t] - mean);
    return ss;
}

struct Enumerated {
    double value = std::numeric_limits<double>::infinity();
    std::vector<std::size_t> change_points;
};

/// Tie order: compare change points from the last one backwards, a missing
/// change point counting as 0.
inline bool tie_less(const std::vector<std::size_t> &a, const std::vector<std::size_t> &b) {
    std::size_t ia = a.size(), ib = b.size();
    while (true) {
        const std::size_t va = ia ? a[ia - 1] : 0;
        const std::size_t vb = ib ? b[ib - 1] : 0;
        if (va != vb) return va < vb;
        if (va == 0) return false;
        --ia;
        --ib;
    }
}

/// Exhaustive search over all 2^(N-1) segmentations with at most kmax change
/// points. The objective is accumulated segment by segment as
/// value = (value + cost) + beta, then beta is subtracted once.
inline Enumerated exhaustive_plsc(std::size_t n, double beta, std::size_t kmax,
                                  const std::function<double(std::size_t, std::size_t)> &cost) {
    Enumerated best;
    const std::uint64_t masks = std::uint64_t{1} << (n - 1);
    for (std::uint64_t mask = 0; mask < masks; ++mask) {
        std::vector<std::size_t> cps;
        for (std::size_t b = 0; b + 1 < n; ++b)
            if (mask >> b & 1U) cps.push_back(b + 1);
        if (cps.size() > kmax) continue;
        double v = 0.0;
        std::size_t start = 0;
        for (std::size_t k = 0; k <= cps.size(); ++k) {
            const std::size_t stop = k < cps.size() ? cps[k] : n;
            v = (v + cost(start, stop - 1)) + beta;
            start = stop;
        }
        v -= beta;
        if (v < best.value || (v == best.value && tie_less(cps, best.change_points))) {
            best.value = v;
            best.change_points = cps;
        }
    }
    return best;
}

/// Var of sum_m f_m X(b+m) for fBm with Var X(t) = |t|^{2H}, when sum f = 0.
inline double fbm_filter_variance(std::span<const double> f, double hurst) {
    double acc = 0.0;
    for (std::size_t m = 0; m < f.size(); ++m)
        for (std::size_t k = 0; k < f.size(); ++k) {
            const double lag = std::abs(static_cast<double>(m) - static_cast<double>(k));
            acc += f[m] * f[k] * std::pow(lag, 2.0 * hurst);
        }
    return -0.5 * acc;
}

inline double mean(std::span<const double> x) {
    double s = 0.0;
    for (double v : x)
        s += v;
    return s / static_cast<double>(x.size());
}

inline double variance(std::span<const double> x) {
    const double m = mean(x);
    double s = 0.0;
    for (double v : x)
        s += (v - m) * (v - m);
    return s / static_cast<double>(x.size() - 1);
}

} // namespace cpd::oracle
