#pragma once

// Monte-Carlo driver and time/memory complexity sweep for the two detectors.

#include "cpd/core.hpp"
#include "cpd/fdpv.hpp"
#include "cpd/metrics.hpp"
#include "cpd/plsc.hpp"
#include "cpd/sim.hpp"

#include <algorithm>
#include <atomic>
#include <chrono>
#include <new>
#include <optional>
#include <string>
#include <thread>
#include <vector>

namespace cpd {

inline constexpr const char *kMethodFdpv = "fdpv";
inline constexpr const char *kMethodPlsc = "plsc";

struct BenchConfig {
    std::size_t n = 5000;
    std::size_t replications = 200;
    double sigma = 1.0;
    /// Defaults to toy_model_spec(n).
    std::optional<PiecewiseSpec> spec;
    FdpvParams fdpv{};
    PlscParams plsc{};
    std::vector<std::string> methods{kMethodFdpv, kMethodPlsc};
    Seed seed = kDefaultSeed;
    std::vector<std::size_t> sweep;
    std::size_t jobs = 1;
    std::size_t timing_runs = 3;
    /// Minimum wall time of one timing run; short detectors are repeated.
    double min_run_seconds = 0.02;
    /// Full-matrix cost structures above this size are reported infeasible.
    std::size_t memory_budget_bytes = std::size_t{2} << 30;
};

inline void validate_config(const BenchConfig &cfg) {
    if (cfg.replications == 0 && cfg.sweep.empty())
        throw Error(ErrorKind::InvalidArgument, "nothing to run: M = 0 and empty sweep");
    for (std::size_t i = 1; i < cfg.sweep.size(); ++i)
        if (cfg.sweep[i] <= cfg.sweep[i - 1])
            throw Error(ErrorKind::InvalidArgument, "sweep values must be strictly increasing");
    for (const auto &m : cfg.methods)
        if (m != kMethodFdpv && m != kMethodPlsc)
            throw Error(ErrorKind::InvalidArgument, "unknown method '" + m + "'");
    if (cfg.methods.empty())
        throw Error(ErrorKind::InvalidArgument, "no method selected");
    if (cfg.timing_runs < 1)
        throw Error(ErrorKind::InvalidArgument, "timing_runs must be >= 1");
}

inline PiecewiseSpec bench_spec(const BenchConfig &cfg) {
    return cfg.spec ? *cfg.spec : toy_model_spec(cfg.n);
}

namespace detail {

using Clock = std::chrono::steady_clock;

inline Segmentation run_method(const std::string &method, const TimeSeries &series,
                               const BenchConfig &cfg, MemoryAccount *account) {
    if (method == kMethodFdpv) return detect(series, cfg.fdpv, account);
    return plsc_detect(series, cfg.plsc, account);
}

template <typename Fn>
void parallel_for(std::size_t count, std::size_t jobs, Fn &&fn) {
    jobs = std::max<std::size_t>(1, std::min(jobs, count));
    if (jobs == 1) {
        for (std::size_t i = 0; i < count; ++i)
            fn(i);
        return;
    }
    std::atomic<std::size_t> next{0};
    std::vector<std::thread> workers;
    workers.reserve(jobs);
    for (std::size_t w = 0; w < jobs; ++w)
        workers.emplace_back([&] {
            for (std::size_t i = next++; i < count; i = next++)
                fn(i);
        });
    for (auto &t : workers)
        t.join();
}

} // namespace detail

/// Simulates M replications (data seed = split_seed(seed, r)), runs every
/// enabled method on each and aggregates per method. Statistical fields are
/// independent of `jobs`.
inline MonteCarloReport run_monte_carlo(const BenchConfig &cfg) {
    validate_config(cfg);
    const PiecewiseSpec spec = bench_spec(cfg);
    const auto g_true = piecewise_mean_function(spec, cfg.n);

    const std::size_t methods = cfg.methods.size();
    std::vector<ReplicationOutcome> outcomes(cfg.replications * methods);
    detail::parallel_for(cfg.replications, cfg.jobs, [&](std::size_t r) {
        const TimeSeries series = simulate_piecewise_gaussian(spec, cfg.n, cfg.sigma, split_seed(cfg.seed, r));
        for (std::size_t m = 0; m < methods; ++m) {
            ReplicationOutcome &out = outcomes[r * methods + m];
            try {
                MemoryAccount account;
                const auto t0 = detail::Clock::now();
                const Segmentation seg = detail::run_method(cfg.methods[m], series, cfg, &account);
                const auto t1 = detail::Clock::now();
                out = score_replication(series, seg, g_true, spec.boundaries);
                out.seconds = std::chrono::duration<double>(t1 - t0).count();
                out.peak_bytes = account.peak();
            } catch (const std::exception &e) {
                out = ReplicationOutcome{};
                out.error = e.what();
            }
        }
    });

    MonteCarloReport report;
    report.replications = cfg.replications;
    report.n = cfg.n;
    report.true_k = spec.change_count();
    for (std::size_t m = 0; m < methods; ++m) {
        MethodAccumulator acc(cfg.methods[m], spec.change_count());
        for (std::size_t r = 0; r < cfg.replications; ++r)
            acc.add(r, outcomes[r * methods + m]);
        report.methods.push_back(acc.finish());
    }
    return report;
}

struct SweepRow {
    std::size_t n = 0;
    std::string method;
    bool feasible = true;
    double seconds = 0.0; ///< median over timing runs of the per-call time
    std::size_t peak_bytes = 0;
    std::string note;
};

/// Times each method at every N of the sweep (median of `timing_runs` runs,
/// each repeating the call until `min_run_seconds` elapse) and records the
/// accounted peak memory. Runs sequentially.
inline std::vector<SweepRow> run_complexity_sweep(const BenchConfig &cfg) {
    validate_config(cfg);
    if (cfg.sweep.empty())
        throw Error(ErrorKind::InvalidArgument, "sweep is empty");

    std::vector<SweepRow> rows;
    for (std::size_t n : cfg.sweep) {
        const PiecewiseSpec spec = toy_model_spec(n);
        const TimeSeries series = simulate_piecewise_gaussian(spec, n, cfg.sigma, split_seed(cfg.seed, n));
        for (const auto &method : cfg.methods) {
            SweepRow row;
            row.n = n;
            row.method = method;
            if (method == kMethodPlsc && cfg.plsc.memory_mode == MemoryMode::FullMatrix) {
                const double predicted = static_cast<double>(n) * static_cast<double>(n) * sizeof(double);
                if (predicted > static_cast<double>(cfg.memory_budget_bytes)) {
                    row.feasible = false;
                    row.peak_bytes = static_cast<std::size_t>(predicted);
                    row.note = "cost matrix exceeds memory budget";
                    rows.push_back(row);
                    continue;
                }
            }
            try {
                MemoryAccount account;
                detail::run_method(method, series, cfg, &account);
                row.peak_bytes = account.peak();

                std::vector<double> per_call;
                for (std::size_t run = 0; run < cfg.timing_runs; ++run) {
                    std::size_t calls = 0;
                    const auto t0 = detail::Clock::now();
                    double elapsed = 0.0;
                    do {
                        detail::run_method(method, series, cfg, nullptr);
                        ++calls;
                        elapsed = std::chrono::duration<double>(detail::Clock::now() - t0).count();
                    } while (elapsed < cfg.min_run_seconds);
                    per_call.push_back(elapsed / static_cast<double>(calls));
                }
                std::sort(per_call.begin(), per_call.end());
                row.seconds = per_call[per_call.size() / 2];
            } catch (const std::bad_alloc &) {
                row.feasible = false;
                row.note = "out of memory";
            } catch (const Error &e) {
                row.feasible = false;
                row.note = e.what();
            }
            rows.push_back(row);
        }
    }
    return rows;
}

} // namespace cpd
