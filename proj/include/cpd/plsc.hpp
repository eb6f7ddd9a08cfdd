#pragma once

// Penalized least-squares segmentation by dynamic programming.
//
// Minimizes  sum_k cost(segment_k) + beta * K  over segmentations with at most
// kmax change points, where cost is the residual sum of squares around the
// segment mean. Bellman recursion over the last change index, O(N^2) time.

#include "cpd/core.hpp"

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <limits>
#include <span>
#include <vector>

namespace cpd {

/// Prefix sums of the centred series, optionally with the full cost matrix.
class CostStructure {
public:
    explicit CostStructure(std::span<const double> x, MemoryMode mode = MemoryMode::Lean)
        : n_(x.size()), s1_(x.size() + 1, 0.0), s2_(x.size() + 1, 0.0) {
        double mean = 0.0;
        for (double v : x)
            mean += v;
        mean /= static_cast<double>(std::max<std::size_t>(n_, 1));
        for (std::size_t i = 0; i < n_; ++i) {
            const double c = x[i] - mean;
            s1_[i + 1] = s1_[i] + c;
            s2_[i + 1] = s2_[i] + c * c;
        }
        if (mode == MemoryMode::FullMatrix) {
            matrix_.assign(n_ * n_, 0.0);
            for (std::size_t i = 0; i < n_; ++i)
                for (std::size_t j = i; j < n_; ++j)
                    matrix_[i * n_ + j] = compute(i, j);
        }
    }

    std::size_t size() const noexcept { return n_; }
    bool has_matrix() const noexcept { return !matrix_.empty(); }

    std::size_t bytes() const noexcept {
        return (s1_.size() + s2_.size() + matrix_.size()) * sizeof(double);
    }

    /// Residual sum of squares of x[i..j] (inclusive) around its mean.
    double cost(std::size_t i, std::size_t j) const {
        if (i > j || j >= n_)
            throw Error(ErrorKind::IndexOutOfRange, "segment cost needs 0 <= i <= j < N");
        return unchecked(i, j);
    }

    double unchecked(std::size_t i, std::size_t j) const noexcept {
        return matrix_.empty() ? compute(i, j) : matrix_[i * n_ + j];
    }

private:
    double compute(std::size_t i, std::size_t j) const noexcept {
        if (i == j) return 0.0;
        const double len = static_cast<double>(j - i + 1);
        const double s = s1_[j + 1] - s1_[i];
        const double q = s2_[j + 1] - s2_[i];
        return std::max(0.0, q - s * s / len);
    }

    std::size_t n_;
    std::vector<double> s1_;
    std::vector<double> s2_;
    std::vector<double> matrix_;
};

inline double segment_cost(const CostStructure &cs, std::size_t i, std::size_t j) {
    return cs.cost(i, j);
}

/// Median of chi-square with one degree of freedom.
inline constexpr double kChiSquare1Median = 0.45493642311957283;

/// Difference-based noise variance: median(d_i^2) / (2 * median chi2_1).
inline double robust_variance(std::span<const double> x) {
    if (x.size() < 2) return 0.0;
    std::vector<double> d2(x.size() - 1);
    for (std::size_t i = 0; i + 1 < x.size(); ++i) {
        const double d = x[i + 1] - x[i];
        d2[i] = d * d;
    }
    const std::size_t mid = d2.size() / 2;
    std::nth_element(d2.begin(), d2.begin() + static_cast<std::ptrdiff_t>(mid), d2.end());
    double median = d2[mid];
    if (d2.size() % 2 == 0) {
        const double lower = *std::max_element(d2.begin(), d2.begin() + static_cast<std::ptrdiff_t>(mid));
        median = 0.5 * (median + lower);
    }
    return median / (2.0 * kChiSquare1Median);
}

/// Default penalty 2 * sigma^2 * ln N with the difference-based variance.
inline double choose_penalty(const TimeSeries &series) {
    validate_series(series);
    if (series.size() < 2) return 0.0;
    return 2.0 * robust_variance(series.view()) * std::log(static_cast<double>(series.size()));
}

struct PlscResult {
    Segmentation segmentation;
    double objective = 0.0; ///< total cost + penalty * K
    double penalty = 0.0;
};

namespace detail {

inline std::vector<std::size_t> backtrack(const std::vector<std::size_t> &arg, std::size_t n) {
    std::vector<std::size_t> cps;
    for (std::size_t j = n; arg[j] > 0; j = arg[j])
        cps.push_back(arg[j]);
    std::reverse(cps.begin(), cps.end());
    return cps;
}

// F[j] = min_{0 <= i < j} F[i] + cost(i, j-1) + beta with F[0] = 0; ties keep
// the smallest i. Returns F[n].
inline double penalized_pass(const CostStructure &cs, double beta, std::vector<double> &f,
                             std::vector<std::size_t> &arg) {
    const std::size_t n = cs.size();
    f.assign(n + 1, 0.0);
    arg.assign(n + 1, 0);
    for (std::size_t j = 1; j <= n; ++j) {
        double best = std::numeric_limits<double>::infinity();
        std::size_t best_i = 0;
        for (std::size_t i = 0; i < j; ++i) {
            const double v = f[i] + cs.unchecked(i, j - 1) + beta;
            if (v < best) {
                best = v;
                best_i = i;
            }
        }
        f[j] = best;
        arg[j] = best_i;
    }
    return f[n];
}

// Layered recursion for "at most k changes": layer k allows up to k changes
// before position j; i = 0 means no further change.
inline std::pair<double, std::vector<std::size_t>>
capped_pass(const CostStructure &cs, double beta, std::size_t kmax, MemoryAccount *account) {
    const std::size_t n = cs.size();
    std::vector<double> prev(n + 1), cur(n + 1);
    std::vector<std::vector<std::size_t>> args(kmax + 1, std::vector<std::size_t>(n + 1, 0));
    AccountedBytes bytes(account, 2 * (n + 1) * sizeof(double) +
                                      (kmax + 1) * (n + 1) * sizeof(std::size_t));

    prev[0] = 0.0;
    for (std::size_t j = 1; j <= n; ++j)
        prev[j] = cs.unchecked(0, j - 1) + beta;
    for (std::size_t k = 1; k <= kmax; ++k) {
        cur[0] = 0.0;
        for (std::size_t j = 1; j <= n; ++j) {
            double best = std::numeric_limits<double>::infinity();
            std::size_t best_i = 0;
            for (std::size_t i = 0; i < j; ++i) {
                const double v = prev[i] + cs.unchecked(i, j - 1) + beta;
                if (v < best) {
                    best = v;
                    best_i = i;
                }
            }
            cur[j] = best;
            args[k][j] = best_i;
        }
        std::swap(prev, cur);
    }

    std::vector<std::size_t> cps;
    std::size_t j = n;
    for (std::size_t k = kmax; k >= 1 && args[k][j] > 0; --k) {
        j = args[k][j];
        cps.push_back(j);
    }
    std::reverse(cps.begin(), cps.end());
    return {prev[n], std::move(cps)};
}

} // namespace detail

inline PlscResult plsc_solve(const TimeSeries &series, const PlscParams &params,
                             MemoryAccount *account = nullptr) {
    validate_series(series);
    if (params.kmax == 0)
        throw Error(ErrorKind::InvalidArgument, "kmax must be positive");
    const double beta = params.penalty ? *params.penalty : choose_penalty(series);
    if (!(beta >= 0.0) || !std::isfinite(beta))
        throw Error(ErrorKind::InvalidArgument, "penalty must be a finite nonnegative number");

    const auto x = series.view();
    const std::size_t n = x.size();
    const CostStructure cs(x, params.memory_mode);
    AccountedBytes cs_bytes(account, cs.bytes());

    PlscResult out;
    out.penalty = beta;

    std::vector<double> f;
    std::vector<std::size_t> arg;
    AccountedBytes dp_bytes(account, (n + 1) * (sizeof(double) + sizeof(std::size_t)));
    double total = detail::penalized_pass(cs, beta, f, arg);
    auto cps = detail::backtrack(arg, n);
    // The unconstrained optimum is also the capped optimum whenever it fits.
    if (cps.size() > params.kmax) {
        auto capped = detail::capped_pass(cs, beta, params.kmax, account);
        total = capped.first;
        cps = std::move(capped.second);
    }

    out.objective = total - beta;
    out.segmentation.levels = segment_means(x, cps);
    out.segmentation.change_points = std::move(cps);
    return out;
}

inline Segmentation plsc_detect(const TimeSeries &series, const PlscParams &params,
                                MemoryAccount *account = nullptr) {
    return plsc_solve(series, params, account).segmentation;
}

} // namespace cpd
