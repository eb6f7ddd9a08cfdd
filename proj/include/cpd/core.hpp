#pragma once

// Shared data model: signals, piecewise specifications, segmentations and
// detector parameters. Indices are 0-based; a change point tau marks the first
// sample of the new segment, so level k covers [tau_k, tau_{k+1}).

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

namespace cpd {

enum class ErrorKind {
    InvalidArgument,
    Empty,
    NonFinite,
    BadSigma,
    BoundaryOutOfRange,
    WindowTooLarge,
    IndexOutOfRange,
    EmbeddingFailure,
    UnsupportedWavelet,
    ScaleTooLarge,
    AllDegenerate,
    QuadratureFailure,
    LengthMismatch,
    CountMismatch,
};

inline const char *to_string(ErrorKind kind) {
    switch (kind) {
    case ErrorKind::InvalidArgument: return "InvalidArgument";
    case ErrorKind::Empty: return "Empty";
    case ErrorKind::NonFinite: return "NonFinite";
    case ErrorKind::BadSigma: return "BadSigma";
    case ErrorKind::BoundaryOutOfRange: return "BoundaryOutOfRange";
    case ErrorKind::WindowTooLarge: return "WindowTooLarge";
    case ErrorKind::IndexOutOfRange: return "IndexOutOfRange";
    case ErrorKind::EmbeddingFailure: return "EmbeddingFailure";
    case ErrorKind::UnsupportedWavelet: return "UnsupportedWavelet";
    case ErrorKind::ScaleTooLarge: return "ScaleTooLarge";
    case ErrorKind::AllDegenerate: return "AllDegenerate";
    case ErrorKind::QuadratureFailure: return "QuadratureFailure";
    case ErrorKind::LengthMismatch: return "LengthMismatch";
    case ErrorKind::CountMismatch: return "CountMismatch";
    }
    return "Unknown";
}

class Error : public std::runtime_error {
public:
    Error(ErrorKind kind, const std::string &what)
        : std::runtime_error(std::string(to_string(kind)) + ": " + what), kind_(kind) {}

    ErrorKind kind() const noexcept { return kind_; }

private:
    ErrorKind kind_;
};

struct TimeSeries {
    std::vector<double> values;
    std::optional<double> known_sigma;

    std::size_t size() const noexcept { return values.size(); }
    std::span<const double> view() const noexcept { return values; }
};

inline const TimeSeries &validate_series(const TimeSeries &series) {
    if (series.values.empty())
        throw Error(ErrorKind::Empty, "series has no samples");
    for (std::size_t i = 0; i < series.values.size(); ++i) {
        if (!std::isfinite(series.values[i]))
            throw Error(ErrorKind::NonFinite, "sample " + std::to_string(i) + " is not finite");
    }
    if (series.known_sigma && !(*series.known_sigma > 0.0 && std::isfinite(*series.known_sigma)))
        throw Error(ErrorKind::BadSigma, "known sigma must be strictly positive");
    return series;
}

/// Boundaries plus K+1 levels. Levels are segment means for the Gaussian toy
/// model or Hurst indices for the long-memory model.
struct PiecewiseSpec {
    std::vector<std::size_t> boundaries;
    std::vector<double> levels;

    std::size_t change_count() const noexcept { return boundaries.size(); }
};

inline void validate_spec(const PiecewiseSpec &spec, std::size_t n) {
    if (spec.levels.size() != spec.boundaries.size() + 1)
        throw Error(ErrorKind::InvalidArgument, "levels must have exactly K+1 entries");
    std::size_t prev = 0;
    for (std::size_t b : spec.boundaries) {
        if (b <= prev || b >= n)
            throw Error(ErrorKind::BoundaryOutOfRange,
                        "boundary " + std::to_string(b) + " not strictly increasing inside (0," +
                            std::to_string(n) + ")");
        prev = b;
    }
    for (double v : spec.levels)
        if (!std::isfinite(v))
            throw Error(ErrorKind::NonFinite, "spec level is not finite");
}

inline void validate_hurst_spec(const PiecewiseSpec &spec, std::size_t n) {
    validate_spec(spec, n);
    for (double h : spec.levels)
        if (!(h > 0.0 && h < 1.0))
            throw Error(ErrorKind::InvalidArgument, "Hurst index must lie in (0,1)");
}

inline std::vector<double> piecewise_mean_function(const PiecewiseSpec &spec, std::size_t n) {
    validate_spec(spec, n);
    std::vector<double> out(n);
    std::size_t start = 0;
    for (std::size_t k = 0; k < spec.levels.size(); ++k) {
        const std::size_t stop = k < spec.boundaries.size() ? spec.boundaries[k] : n;
        std::fill(out.begin() + static_cast<std::ptrdiff_t>(start),
                  out.begin() + static_cast<std::ptrdiff_t>(stop), spec.levels[k]);
        start = stop;
    }
    return out;
}

struct Segmentation {
    std::vector<std::size_t> change_points;
    std::vector<double> levels;
    std::optional<std::vector<double>> pvalues;

    std::size_t count() const noexcept { return change_points.size(); }
};

inline void validate_segmentation(const Segmentation &seg, std::size_t n) {
    std::size_t prev = 0;
    for (std::size_t c : seg.change_points) {
        if (c <= prev || c >= n)
            throw Error(ErrorKind::BoundaryOutOfRange, "change points must be increasing in (0,N)");
        prev = c;
    }
    if (seg.levels.size() != seg.count() + 1)
        throw Error(ErrorKind::CountMismatch, "segmentation needs K+1 levels");
    if (seg.pvalues) {
        if (seg.pvalues->size() != seg.count())
            throw Error(ErrorKind::CountMismatch, "segmentation needs K p-values");
        for (double p : *seg.pvalues)
            if (!(p >= 0.0 && p <= 1.0))
                throw Error(ErrorKind::InvalidArgument, "p-value outside [0,1]");
    }
}

/// Empirical mean of every segment delimited by `change_points`.
inline std::vector<double> segment_means(std::span<const double> x,
                                         std::span<const std::size_t> change_points) {
    std::vector<double> means;
    means.reserve(change_points.size() + 1);
    std::size_t start = 0;
    for (std::size_t k = 0; k <= change_points.size(); ++k) {
        const std::size_t stop = k < change_points.size() ? change_points[k] : x.size();
        double sum = 0.0;
        for (std::size_t i = start; i < stop; ++i)
            sum += x[i];
        means.push_back(stop > start ? sum / static_cast<double>(stop - start) : 0.0);
        start = stop;
    }
    return means;
}

struct FdpvParams {
    std::size_t window = 300;
    std::size_t kmax = 10;
    double alpha_critic = 1e-4;
    /// Exclusion radius used during candidate selection; 0 means "use window".
    std::size_t min_gap = 0;

    std::size_t effective_min_gap() const noexcept { return min_gap == 0 ? window : min_gap; }
};

inline void validate_params(const FdpvParams &p, std::size_t n) {
    if (p.window == 0)
        throw Error(ErrorKind::InvalidArgument, "window must be positive");
    if (p.kmax == 0)
        throw Error(ErrorKind::InvalidArgument, "kmax must be positive");
    if (!(p.alpha_critic > 0.0 && p.alpha_critic < 1.0))
        throw Error(ErrorKind::InvalidArgument, "alpha_critic must lie in (0,1)");
    if (2 * p.window > n)
        throw Error(ErrorKind::WindowTooLarge,
                    "2A=" + std::to_string(2 * p.window) + " exceeds N=" + std::to_string(n));
}

enum class MemoryMode { Lean, FullMatrix };

struct PlscParams {
    /// Penalty per change point; empty means the data-driven default.
    std::optional<double> penalty;
    std::size_t kmax = 10;
    MemoryMode memory_mode = MemoryMode::Lean;
};

/// Live-byte accounting for the detectors' own work structures.
class MemoryAccount {
public:
    void allocate(std::size_t bytes) noexcept {
        live_ += bytes;
        peak_ = std::max(peak_, live_);
    }
    void release(std::size_t bytes) noexcept { live_ -= std::min(bytes, live_); }

    std::size_t live() const noexcept { return live_; }
    std::size_t peak() const noexcept { return peak_; }

private:
    std::size_t live_ = 0;
    std::size_t peak_ = 0;
};

/// RAII registration of a buffer with an optional MemoryAccount.
class AccountedBytes {
public:
    AccountedBytes(MemoryAccount *account, std::size_t bytes) noexcept
        : account_(account), bytes_(bytes) {
        if (account_) account_->allocate(bytes_);
    }
    ~AccountedBytes() {
        if (account_) account_->release(bytes_);
    }
    AccountedBytes(const AccountedBytes &) = delete;
    AccountedBytes &operator=(const AccountedBytes &) = delete;

private:
    MemoryAccount *account_;
    std::size_t bytes_;
};

} // namespace cpd
