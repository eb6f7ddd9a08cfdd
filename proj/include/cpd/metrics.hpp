#pragma once

// Accuracy metrics of the Monte-Carlo study: integrated squared error of the
// piecewise-constant estimate and squared error on change-point locations.

#include "cpd/core.hpp"

#include <cstddef>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

namespace cpd {

/// g_hat: empirical mean of x between successive estimated change points.
inline std::vector<double> estimate_g(const TimeSeries &series, const Segmentation &seg) {
    const auto x = validate_series(series).view();
    std::vector<std::size_t> cps = seg.change_points;
    std::size_t prev = 0;
    for (std::size_t c : cps)
        if (c <= prev || c >= x.size())
            throw Error(ErrorKind::BoundaryOutOfRange, "segmentation does not fit the series");
        else
            prev = c;
    const auto means = segment_means(x, cps);
    PiecewiseSpec spec{std::move(cps), means};
    return piecewise_mean_function(spec, x.size());
}

/// Mean squared difference over the grid (one replication of the MISE integrand).
inline double mise(std::span<const double> g_hat, std::span<const double> g_true) {
    if (g_hat.size() != g_true.size())
        throw Error(ErrorKind::LengthMismatch, "estimate and truth lengths differ");
    if (g_hat.empty()) return 0.0;
    double acc = 0.0;
    for (std::size_t i = 0; i < g_hat.size(); ++i) {
        const double d = g_hat[i] - g_true[i];
        acc += d * d;
    }
    return acc / static_cast<double>(g_hat.size());
}

/// sum_k (tau_hat_k - tau_k)^2 in raw sample units.
inline double secp_raw(std::span<const std::size_t> tau_hat, std::span<const std::size_t> tau_true) {
    if (tau_hat.size() != tau_true.size())
        throw Error(ErrorKind::CountMismatch, "SECP needs the true number of change points");
    double acc = 0.0;
    for (std::size_t k = 0; k < tau_hat.size(); ++k) {
        const double d = static_cast<double>(tau_hat[k]) - static_cast<double>(tau_true[k]);
        acc += d * d;
    }
    return acc;
}

/// sum_k (tau_hat_k / N - tau_k / N)^2: locations as fractions of the horizon.
inline double secp(std::span<const std::size_t> tau_hat, std::span<const std::size_t> tau_true,
                   std::size_t n) {
    if (n == 0) throw Error(ErrorKind::InvalidArgument, "N must be positive");
    const double nn = static_cast<double>(n);
    return secp_raw(tau_hat, tau_true) / (nn * nn);
}

struct RuntimeSummary {
    double mean = 0.0;
    double median = 0.0;
    double min = 0.0;
    double max = 0.0;
};

/// Aggregate over M replications for one method.
struct MethodReport {
    std::string method;
    std::size_t replications = 0;
    std::size_t true_k = 0;
    std::map<std::size_t, std::size_t> k_histogram;
    double correct_k_fraction = 0.0;
    double mise = 0.0;
    std::optional<double> secp;
    std::optional<double> secp_raw;
    RuntimeSummary runtime;
    std::size_t peak_memory_bytes = 0;
    /// Replications whose detector threw: (replication index, message).
    std::vector<std::pair<std::size_t, std::string>> failures;
};

struct MonteCarloReport {
    std::size_t replications = 0;
    std::size_t n = 0;
    std::size_t true_k = 0;
    std::vector<MethodReport> methods;

    const MethodReport *find(const std::string &method) const {
        for (const auto &m : methods)
            if (m.method == method) return &m;
        return nullptr;
    }
};

/// Per-replication outcome fed to MethodAccumulator.
struct ReplicationOutcome {
    bool ok = false;
    std::string error;
    std::size_t k_hat = 0;
    double mise = 0.0;
    std::optional<double> secp;
    std::optional<double> secp_raw;
    double seconds = 0.0;
    std::size_t peak_bytes = 0;
};

inline ReplicationOutcome score_replication(const TimeSeries &series, const Segmentation &seg,
                                            std::span<const double> g_true,
                                            std::span<const std::size_t> tau_true) {
    ReplicationOutcome r;
    r.ok = true;
    r.k_hat = seg.count();
    r.mise = mise(estimate_g(series, seg), g_true);
    if (seg.count() == tau_true.size()) {
        r.secp = secp(seg.change_points, tau_true, series.size());
        r.secp_raw = secp_raw(seg.change_points, tau_true);
    }
    return r;
}

/// Folds outcomes in replication order; the result depends only on the order
/// of `add` calls.
class MethodAccumulator {
public:
    MethodAccumulator(std::string method, std::size_t true_k) {
        report_.method = std::move(method);
        report_.true_k = true_k;
    }

    void add(std::size_t replication, const ReplicationOutcome &r) {
        ++report_.replications;
        if (!r.ok) {
            report_.failures.emplace_back(replication, r.error);
            return;
        }
        ++report_.k_histogram[r.k_hat];
        mise_sum_ += r.mise;
        ++scored_;
        if (r.secp) {
            secp_sum_ += *r.secp;
            secp_raw_sum_ += *r.secp_raw;
            ++secp_count_;
        }
        times_.push_back(r.seconds);
        report_.peak_memory_bytes = std::max(report_.peak_memory_bytes, r.peak_bytes);
    }

    MethodReport finish() const {
        MethodReport out = report_;
        const auto it = out.k_histogram.find(out.true_k);
        const std::size_t hits = it == out.k_histogram.end() ? 0 : it->second;
        out.correct_k_fraction =
            out.replications ? static_cast<double>(hits) / static_cast<double>(out.replications) : 0.0;
        out.mise = scored_ ? mise_sum_ / static_cast<double>(scored_) : 0.0;
        if (secp_count_) {
            out.secp = secp_sum_ / static_cast<double>(secp_count_);
            out.secp_raw = secp_raw_sum_ / static_cast<double>(secp_count_);
        }
        if (!times_.empty()) {
            std::vector<double> t = times_;
            std::sort(t.begin(), t.end());
            double sum = 0.0;
            for (double v : t)
                sum += v;
            out.runtime.mean = sum / static_cast<double>(t.size());
            out.runtime.min = t.front();
            out.runtime.max = t.back();
            const std::size_t mid = t.size() / 2;
            out.runtime.median = t.size() % 2 ? t[mid] : 0.5 * (t[mid - 1] + t[mid]);
        }
        return out;
    }

private:
    MethodReport report_;
    double mise_sum_ = 0.0;
    std::size_t scored_ = 0;
    double secp_sum_ = 0.0;
    double secp_raw_sum_ = 0.0;
    std::size_t secp_count_ = 0;
    std::vector<double> times_;
};

} // namespace cpd
