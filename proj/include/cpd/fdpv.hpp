#pragma once

// Filtered derivative with p-value detector.
//
// D(A,k) is the mean of x[k, k+A) minus the mean of x[k-A, k), defined for
// A <= k <= N-A. Around a mean shift of size delta at tau it draws a hat of
// height delta and half-width A. Candidates are the successive maxima of |D|;
// each gets a p-value from the window difference recomputed at an adaptive
// window (distance to the nearest neighbouring candidate), and only points
// with p-value below alpha_critic are kept.

#include "cpd/core.hpp"

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

namespace cpd {

struct FilteredDerivative {
    std::size_t window = 0;
    /// values[j] = D(window, window + j), j in [0, N - 2*window].
    std::vector<double> values;

    std::size_t first_index() const noexcept { return window; }
    std::size_t last_index() const noexcept { return window + values.size() - 1; }
    double at(std::size_t k) const { return values.at(k - window); }
};

namespace detail {

/// A*D(A,k) computed by direct summation.
inline double window_difference_sum(std::span<const double> x, std::size_t k, std::size_t a) {
    double right = 0.0;
    double left = 0.0;
    for (std::size_t j = 0; j < a; ++j) {
        right += x[k + j];
        left += x[k - a + j];
    }
    return right - left;
}

inline constexpr std::size_t kReseedPeriod = std::size_t{1} << 16;

} // namespace detail

/// One-pass O(N) computation:
///   A*D(A,k+1) = A*D(A,k) + x[k+A] - 2*x[k] + x[k-A]
/// re-seeded from a direct sum every 2^16 steps to bound drift.
inline FilteredDerivative filtered_derivative(std::span<const double> x, std::size_t a) {
    if (a == 0)
        throw Error(ErrorKind::InvalidArgument, "window must be positive");
    const std::size_t n = x.size();
    if (2 * a > n)
        throw Error(ErrorKind::WindowTooLarge,
                    "2A=" + std::to_string(2 * a) + " exceeds N=" + std::to_string(n));

    FilteredDerivative fd;
    fd.window = a;
    fd.values.resize(n - 2 * a + 1);

    const double inv_a = 1.0 / static_cast<double>(a);
    double sum = detail::window_difference_sum(x, a, a);
    for (std::size_t k = a;; ++k) {
        fd.values[k - a] = sum * inv_a;
        if (k == n - a) break;
        if ((k + 1 - a) % detail::kReseedPeriod == 0)
            sum = detail::window_difference_sum(x, k + 1, a);
        else
            sum += x[k + a] - 2.0 * x[k] + x[k - a];
    }
    return fd;
}

inline FilteredDerivative filtered_derivative(const TimeSeries &series, std::size_t a) {
    return filtered_derivative(validate_series(series).view(), a);
}

namespace detail {

// Max-|D| tree over the candidate positions. Removal is permanent, so a
// removed subtree is simply emptied and never revisited.
class ArgmaxTree {
public:
    static constexpr std::uint32_t kNone = UINT32_MAX;

    explicit ArgmaxTree(std::span<const double> v) : v_(v) {
        while (size_ < v.size())
            size_ *= 2;
        best_.assign(2 * size_, kNone);
        for (std::size_t j = 0; j < v.size(); ++j)
            best_[size_ + j] = static_cast<std::uint32_t>(j);
        for (std::size_t node = size_ - 1; node >= 1; --node)
            best_[node] = pick(best_[2 * node], best_[2 * node + 1]);
    }

    static std::size_t bytes_for(std::size_t m) {
        std::size_t size = 1;
        while (size < m)
            size *= 2;
        return 2 * size * sizeof(std::uint32_t);
    }

    std::uint32_t top() const { return best_[1]; }

    void remove(std::size_t lo, std::size_t hi) { remove(1, 0, size_ - 1, lo, hi); }

private:
    // Larger magnitude wins; on equal magnitude the smaller index does.
    std::uint32_t pick(std::uint32_t a, std::uint32_t b) const {
        if (a == kNone) return b;
        if (b == kNone) return a;
        return std::abs(v_[b]) > std::abs(v_[a]) ? b : a;
    }

    void remove(std::size_t node, std::size_t l, std::size_t r, std::size_t lo, std::size_t hi) {
        if (best_[node] == kNone || hi < l || r < lo) return;
        if (lo <= l && r <= hi) {
            best_[node] = kNone;
            return;
        }
        const std::size_t mid = l + (r - l) / 2;
        remove(2 * node, l, mid, lo, hi);
        remove(2 * node + 1, mid + 1, r, lo, hi);
        best_[node] = pick(best_[2 * node], best_[2 * node + 1]);
    }

    std::span<const double> v_;
    std::size_t size_ = 1;
    std::vector<std::uint32_t> best_;
};

} // namespace detail

/// Iterative argmax of |D| with a closed exclusion interval of radius
/// `min_gap` around every pick. Ties go to the smaller index. Returns series
/// indices in ascending order.
inline std::vector<std::size_t> select_candidates(const FilteredDerivative &fd, std::size_t kmax,
                                                  std::size_t min_gap,
                                                  MemoryAccount *account = nullptr) {
    if (kmax == 0 || min_gap == 0)
        throw Error(ErrorKind::InvalidArgument, "kmax and min_gap must be positive");
    const std::size_t m = fd.values.size();
    if (m >= detail::ArgmaxTree::kNone)
        throw Error(ErrorKind::InvalidArgument, "series too long");
    AccountedBytes tree_bytes(account, detail::ArgmaxTree::bytes_for(m));
    detail::ArgmaxTree tree(fd.values);

    std::vector<std::size_t> picks;
    while (picks.size() < kmax) {
        const std::uint32_t best = tree.top();
        if (best == detail::ArgmaxTree::kNone || !(std::abs(fd.values[best]) > 0.0)) break;
        picks.push_back(best + fd.window);
        tree.remove(best > min_gap ? best - min_gap : 0, best + min_gap);
    }
    std::sort(picks.begin(), picks.end());
    return picks;
}

/// A_k = min(c_k - c_{k-1}, c_{k+1} - c_k) with c_0 = 0 and c_{m+1} = n.
inline std::vector<std::size_t> adaptive_windows(std::span<const std::size_t> candidates,
                                                 std::size_t n) {
    std::vector<std::size_t> windows;
    windows.reserve(candidates.size());
    for (std::size_t k = 0; k < candidates.size(); ++k) {
        const std::size_t prev = k == 0 ? 0 : candidates[k - 1];
        const std::size_t next = k + 1 == candidates.size() ? n : candidates[k + 1];
        if (!(prev < candidates[k] && candidates[k] < next))
            throw Error(ErrorKind::InvalidArgument, "candidates must be increasing inside (0,N)");
        windows.push_back(std::min(candidates[k] - prev, next - candidates[k]));
    }
    return windows;
}

/// Upper tail of the standard normal law.
inline double normal_upper_tail(double z) { return 0.5 * std::erfc(z / std::sqrt(2.0)); }

/// Unbiased sample standard deviation of x[left, right).
inline double box_stddev(std::span<const double> x, std::size_t left, std::size_t right) {
    const std::size_t n = right - left;
    if (n < 2) return 0.0;
    double mean = 0.0;
    for (std::size_t i = left; i < right; ++i)
        mean += x[i];
    mean /= static_cast<double>(n);
    double ss = 0.0;
    for (std::size_t i = left; i < right; ++i)
        ss += (x[i] - mean) * (x[i] - mean);
    return std::sqrt(ss / static_cast<double>(n - 1));
}

struct PValueDetail {
    double pvalue = 0.5;
    double difference = 0.0; ///< D(window, candidate)
    double sigma = 0.0;      ///< noise scale used for standardization
};

/// p-value of `candidate` with the difference recomputed at `window`. The noise
/// scale is the series' known sigma when present, otherwise the sample
/// standard deviation of x[left, right), the two segments adjacent to the
/// candidate. A degenerate (zero) scale gives 0 when D != 0 and 0.5 otherwise.
inline PValueDetail pvalue_detail(const TimeSeries &series, std::size_t candidate,
                                  std::size_t window, std::size_t left, std::size_t right) {
    const auto x = series.view();
    if (window == 0 || !(left < candidate && candidate < right) || right > x.size() ||
        candidate < left + window || candidate + window > right)
        throw Error(ErrorKind::InvalidArgument, "p-value box does not contain the window");

    PValueDetail out;
    out.difference = detail::window_difference_sum(x, candidate, window) / static_cast<double>(window);
    out.sigma = series.known_sigma ? *series.known_sigma : box_stddev(x, left, right);
    const double mag = std::abs(out.difference);
    if (out.sigma <= 0.0) {
        out.pvalue = mag > 0.0 ? 0.0 : 0.5;
        return out;
    }
    const double z = std::sqrt(static_cast<double>(window) / 2.0) * mag / out.sigma;
    out.pvalue = normal_upper_tail(z);
    return out;
}

inline double pvalue(const TimeSeries &series, std::size_t candidate, std::size_t window,
                     std::size_t left, std::size_t right) {
    return pvalue_detail(series, candidate, window, left, right).pvalue;
}

struct CandidateSet {
    std::vector<std::size_t> candidates;
    std::vector<double> amplitudes; ///< |D(A, candidate)| at the detection window
    std::vector<std::size_t> windows;
    std::vector<double> sigmas;
    std::vector<double> pvalues;
    /// Candidates whose feasible window fell below 2 and were dropped.
    std::vector<std::size_t> discarded;

    std::size_t size() const noexcept { return candidates.size(); }
};

/// Steps 1 and 2 of the detector: candidate selection and p-values.
inline CandidateSet fdpv_candidates(const TimeSeries &series, const FdpvParams &params,
                                    MemoryAccount *account = nullptr) {
    validate_series(series);
    const std::size_t n = series.size();
    validate_params(params, n);

    const FilteredDerivative fd = filtered_derivative(series.view(), params.window);
    AccountedBytes fd_bytes(account, fd.values.size() * sizeof(double));
    const auto picks = select_candidates(fd, params.kmax, params.effective_min_gap(), account);
    const auto windows = adaptive_windows(picks, n);

    CandidateSet out;
    AccountedBytes set_bytes(account, picks.size() * (2 * sizeof(std::size_t) + 3 * sizeof(double)));
    for (std::size_t k = 0; k < picks.size(); ++k) {
        const std::size_t c = picks[k];
        const std::size_t left = k == 0 ? 0 : picks[k - 1];
        const std::size_t right = k + 1 == picks.size() ? n : picks[k + 1];
        const std::size_t w = std::min({windows[k], c, n - c});
        if (w < 2) {
            out.discarded.push_back(c);
            continue;
        }
        const PValueDetail pv = pvalue_detail(series, c, w, left, right);
        out.candidates.push_back(c);
        out.amplitudes.push_back(std::abs(fd.at(c)));
        out.windows.push_back(w);
        out.sigmas.push_back(pv.sigma);
        out.pvalues.push_back(pv.pvalue);
    }
    return out;
}

/// Step 3: keep candidates with p-value strictly below alpha_critic.
inline Segmentation threshold_candidates(const TimeSeries &series, const CandidateSet &cs,
                                         double alpha_critic) {
    Segmentation seg;
    std::vector<double> pvals;
    for (std::size_t k = 0; k < cs.size(); ++k) {
        if (cs.pvalues[k] < alpha_critic) {
            seg.change_points.push_back(cs.candidates[k]);
            pvals.push_back(cs.pvalues[k]);
        }
    }
    seg.pvalues = std::move(pvals);
    seg.levels = segment_means(series.view(), seg.change_points);
    return seg;
}

inline Segmentation detect(const TimeSeries &series, const FdpvParams &params,
                           MemoryAccount *account = nullptr) {
    const CandidateSet cs = fdpv_candidates(series, params, account);
    return threshold_candidates(series, cs, params.alpha_critic);
}

} // namespace cpd
