// cpdetect: simulate, segment and score series from the command line.
//
// Exit codes: 0 success, 2 argument error, 3 I/O error, 4 computation error.

#include "cpd/bench.hpp"
#include "cpd/fdpv.hpp"
#include "cpd/io.hpp"
#include "cpd/metrics.hpp"
#include "cpd/plsc.hpp"
#include "cpd/sim.hpp"
#include "cpd/wavelet.hpp"

#include <CLI11.hpp>

#include <chrono>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

namespace {

using cpd::io::Json;

enum ExitCode { kOk = 0, kUsage = 2, kIo = 3, kCompute = 4 };

class UsageError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

struct Globals {
    cpd::Seed seed = cpd::kDefaultSeed;
    std::size_t jobs = 1;
};

std::string sidecar(const std::string &path, const char *suffix) { return path + suffix; }

cpd::TimeSeries load_series(const std::string &path) {
    try {
        return cpd::io::read_series(path);
    } catch (const cpd::Error &e) {
        throw cpd::io::IoError("'" + path + "': " + e.what());
    }
}

// ---------------------------------------------------------------------------
// simulate

struct SimulateArgs {
    std::string kind = "mean";
    std::optional<std::size_t> n;
    double sigma = 1.0;
    std::vector<std::size_t> boundaries;
    std::vector<double> levels;
    bool paper = false;
    std::string out;
};

int run_simulate(const SimulateArgs &a, const Globals &g) {
    cpd::io::TruthFile truth;
    truth.kind = a.kind;
    truth.seed = g.seed;
    const bool custom = !a.levels.empty();
    if (custom && a.paper) throw UsageError("--paper cannot be combined with --levels/--boundaries");
    if (!custom && !a.boundaries.empty()) throw UsageError("--boundaries needs --levels");

    std::vector<double> values;
    if (a.kind == "mean") {
        truth.n = a.n.value_or(5000);
        truth.sigma = a.sigma;
        truth.spec = custom ? cpd::PiecewiseSpec{a.boundaries, a.levels} : cpd::toy_model_spec(truth.n);
        try {
            cpd::validate_spec(truth.spec, truth.n);
        } catch (const cpd::Error &e) {
            throw UsageError(e.what());
        }
        values = cpd::simulate_piecewise_gaussian(truth.spec, truth.n, a.sigma, g.seed).values;
    } else {
        truth.n = a.n.value_or(100000);
        truth.spec = custom ? cpd::PiecewiseSpec{a.boundaries, a.levels} : cpd::hurst_model_spec();
        if (!custom && truth.n != 100000)
            for (auto &b : truth.spec.boundaries)
                b = (b * truth.n + 50000) / 100000;
        try {
            cpd::validate_hurst_spec(truth.spec, truth.n);
        } catch (const cpd::Error &e) {
            throw UsageError(e.what());
        }
        values = cpd::simulate_piecewise_fbm(truth.spec, truth.n, g.seed).samples;
    }
    cpd::io::write_series(a.out, values);
    cpd::io::write_json(sidecar(a.out, ".truth.json"), cpd::io::to_json(truth));
    return kOk;
}

// ---------------------------------------------------------------------------
// detect

struct DetectArgs {
    std::string method = cpd::kMethodFdpv;
    std::string in;
    std::string out;
    cpd::FdpvParams fdpv;
    cpd::PlscParams plsc;
    std::optional<double> penalty;
    std::string memory_mode = "lean";
    std::optional<double> sigma;
    std::string emit_hat;
    std::string emit_fit;
    bool demean = false;
};

int run_detect(const DetectArgs &a) {
    cpd::TimeSeries series = load_series(a.in);
    cpd::validate_series(series);
    if (a.demean) {
        double mean = 0.0;
        for (double v : series.values)
            mean += v;
        mean /= static_cast<double>(series.size());
        for (double &v : series.values)
            v -= mean;
    }
    series.known_sigma = a.sigma;

    cpd::io::ResultFile result;
    result.n = series.size();
    result.method = a.method;
    const auto t0 = std::chrono::steady_clock::now();
    if (a.method == cpd::kMethodFdpv) {
        result.segmentation = cpd::detect(series, a.fdpv);
        result.params = cpd::io::to_json(a.fdpv);
    } else {
        cpd::PlscParams p = a.plsc;
        p.penalty = a.penalty;
        p.memory_mode = cpd::io::memory_mode_from_string(a.memory_mode);
        const auto solved = cpd::plsc_solve(series, p);
        result.segmentation = solved.segmentation;
        result.params = cpd::io::to_json(p, solved.penalty);
    }
    result.runtime_seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    cpd::io::write_json(a.out, cpd::io::to_json(result));

    if (!a.emit_hat.empty()) {
        const auto fd = cpd::filtered_derivative(series, a.fdpv.window);
        std::string csv = "k,d,abs_d\n";
        for (std::size_t k = fd.first_index(); k <= fd.last_index(); ++k) {
            const double d = fd.at(k);
            csv += std::to_string(k) + "," + cpd::io::format_double(d) + "," +
                   cpd::io::format_double(std::abs(d)) + "\n";
        }
        cpd::io::write_atomic(a.emit_hat, csv);
    }
    if (!a.emit_fit.empty()) {
        const auto fit = cpd::estimate_g(series, result.segmentation);
        std::string csv = "i,x,g_hat\n";
        for (std::size_t i = 0; i < fit.size(); ++i)
            csv += std::to_string(i) + "," + cpd::io::format_double(series.values[i]) + "," +
                   cpd::io::format_double(fit[i]) + "\n";
        cpd::io::write_atomic(a.emit_fit, csv);
    }
    return kOk;
}

// ---------------------------------------------------------------------------
// wavelet

struct WaveletArgs {
    std::string in;
    std::string out;
    double frequency = 0.2;
    std::string wavelet = "daubechies-6";
    bool demean = false;
};

int run_wavelet(const WaveletArgs &a) {
    cpd::TimeSeries series = load_series(a.in);
    cpd::validate_series(series);
    if (a.demean) {
        double mean = 0.0;
        for (double v : series.values)
            mean += v;
        mean /= static_cast<double>(series.size());
        for (double &v : series.values)
            v -= mean;
    }
    const auto w = cpd::build_wavelet(a.wavelet);
    const double scale = 1.0 / a.frequency;
    const auto ys = cpd::log_square_series(cpd::wavelet_coefficients(series, w, scale));

    cpd::io::IndexMap map{w.name, scale, ys.centre_offset, ys.shifts};
    cpd::io::write_series(a.out, ys.series.values);
    cpd::io::write_json(sidecar(a.out, ".index.json"), cpd::io::to_json(map));
    return kOk;
}

// ---------------------------------------------------------------------------
// bench

struct BenchArgs {
    std::string config;
    std::string out;
    std::string csv;
    std::string sweep_csv;
    std::optional<std::size_t> n, replications, window, kmax, timing_runs;
    std::optional<double> sigma, alpha, penalty;
    std::vector<std::string> methods;
    std::vector<std::size_t> sweep;
    std::optional<std::string> memory_mode;
};

int run_bench(const BenchArgs &a, const Globals &g, const CLI::App &cmd, const CLI::App &root) {
    cpd::BenchConfig cfg;
    if (!a.config.empty()) cfg = cpd::io::bench_config_from_json(cpd::io::read_json(a.config));
    if (root.count("--seed") || a.config.empty()) cfg.seed = g.seed;
    if (root.count("--jobs")) cfg.jobs = g.jobs;
    if (a.n) cfg.n = *a.n;
    if (a.replications) cfg.replications = *a.replications;
    if (a.sigma) cfg.sigma = *a.sigma;
    if (a.window) cfg.fdpv.window = *a.window;
    if (a.alpha) cfg.fdpv.alpha_critic = *a.alpha;
    if (a.kmax) cfg.fdpv.kmax = cfg.plsc.kmax = *a.kmax;
    if (a.penalty) cfg.plsc.penalty = *a.penalty;
    if (a.timing_runs) cfg.timing_runs = *a.timing_runs;
    if (a.memory_mode) cfg.plsc.memory_mode = cpd::io::memory_mode_from_string(*a.memory_mode);
    if (cmd.count("--methods")) cfg.methods = a.methods;
    if (cmd.count("--sweep")) cfg.sweep = a.sweep;
    try {
        cpd::validate_config(cfg);
        if (cfg.spec) cpd::validate_spec(*cfg.spec, cfg.n);
    } catch (const cpd::Error &e) {
        throw UsageError(e.what());
    }

    Json report;
    report["schema"] = cpd::io::kSchemaVersion;
    report["config"] = cpd::io::to_json(cfg);
    report["monte_carlo"] = nullptr;
    report["sweep"] = nullptr;
    if (cfg.replications > 0) {
        const auto mc = cpd::run_monte_carlo(cfg);
        report["monte_carlo"] = cpd::io::to_json(mc);
        if (!a.csv.empty()) cpd::io::write_atomic(a.csv, cpd::io::monte_carlo_csv(mc));
    }
    if (!cfg.sweep.empty()) {
        const auto rows = cpd::run_complexity_sweep(cfg);
        Json arr = Json::array();
        for (const auto &r : rows)
            arr.push_back(cpd::io::to_json(r));
        report["sweep"] = arr;
        if (!a.sweep_csv.empty()) cpd::io::write_atomic(a.sweep_csv, cpd::io::sweep_csv(rows));
    }
    if (a.out.empty())
        std::cout << report.dump(2) << "\n";
    else
        cpd::io::write_json(a.out, report);
    return kOk;
}

// ---------------------------------------------------------------------------
// score

struct ScoreArgs {
    std::string result;
    std::string truth;
    std::string index_map;
    std::string out;
};

int run_score(const ScoreArgs &a) {
    const auto result = cpd::io::result_from_json(cpd::io::read_json(a.result));
    const auto truth = cpd::io::truth_from_json(cpd::io::read_json(a.truth));

    std::vector<std::size_t> located = result.segmentation.change_points;
    if (!a.index_map.empty()) {
        const auto map = cpd::io::index_map_from_json(cpd::io::read_json(a.index_map));
        if (map.shifts.size() != result.n)
            throw cpd::Error(cpd::ErrorKind::LengthMismatch, "index map does not match the result length");
        for (auto &c : located)
            c = map.time_of(c);
    }

    const std::size_t k_true = truth.spec.change_count();
    Json out;
    out["k_hat"] = located.size();
    out["true_k"] = k_true;
    out["correct_k"] = located.size() == k_true;
    out["mise"] = nullptr;
    if (truth.kind == "mean" && a.index_map.empty()) {
        if (result.n != truth.n)
            throw cpd::Error(cpd::ErrorKind::LengthMismatch, "result and truth lengths differ");
        const auto g_hat = cpd::piecewise_mean_function({located, result.segmentation.levels}, result.n);
        out["mise"] = cpd::mise(g_hat, cpd::piecewise_mean_function(truth.spec, truth.n));
    }
    out["secp_normalized"] = nullptr;
    out["secp_raw"] = nullptr;
    if (located.size() == k_true) {
        out["secp_normalized"] = cpd::secp(located, truth.spec.boundaries, truth.n);
        out["secp_raw"] = cpd::secp_raw(located, truth.spec.boundaries);
    }
    std::cout << out.dump(2) << "\n";
    if (!a.out.empty()) cpd::io::write_json(a.out, out);
    return kOk;
}

} // namespace

int main(int argc, char **argv) {
    CLI::App app{"Change-point detection by filtered derivative with p-values, penalized least squares "
                 "baseline, fractional Brownian simulation and wavelet preprocessing."};
    app.require_subcommand(1);
    app.fallthrough();
    Globals globals;
    app.add_option("--seed", globals.seed, "Random seed (default " + std::to_string(cpd::kDefaultSeed) + ")");
    app.add_option("--jobs", globals.jobs, "Worker threads for bench")->check(CLI::PositiveNumber);

    SimulateArgs sim;
    auto *simulate = app.add_subcommand("simulate", "Simulate a series and its truth sidecar <out>.truth.json");
    simulate->add_option("--kind", sim.kind, "mean | hurst")->check(CLI::IsMember({"mean", "hurst"}));
    simulate->add_option("-n,--n", sim.n, "Length N (mean, default 5000) or horizon T (hurst, default 100000)")
        ->check(CLI::PositiveNumber);
    simulate->add_option("--sigma", sim.sigma, "Noise standard deviation (mean kind)")->check(CLI::NonNegativeNumber);
    simulate->add_option("--boundaries", sim.boundaries, "Change points, comma separated")->delimiter(',');
    simulate->add_option("--levels", sim.levels, "Segment means or Hurst indices, comma separated")->delimiter(',');
    simulate->add_flag("--paper", sim.paper, "Use the reference five-change configuration (the default)");
    simulate->add_option("-o,--out", sim.out, "Output series file")->required();

    DetectArgs det;
    auto *detect = app.add_subcommand("detect", "Segment a series file and write a result JSON");
    detect->add_option("input", det.in, "Series file")->required();
    detect->add_option("--method", det.method, "fdpv | plsc")->check(CLI::IsMember({"fdpv", "plsc"}));
    detect->add_option("-A,--window", det.fdpv.window, "Filtered-derivative window A")->check(CLI::PositiveNumber);
    detect->add_option("--kmax", det.fdpv.kmax, "Maximum number of change points")->check(CLI::PositiveNumber);
    detect->add_option("--alpha", det.fdpv.alpha_critic, "Critical p-value")->check(CLI::Range(0.0, 1.0));
    detect->add_option("--min-gap", det.fdpv.min_gap, "Candidate exclusion radius (default A)");
    detect->add_option("--penalty", det.penalty, "PLSC penalty per change (default 2 sigma^2 ln N)")
        ->check(CLI::NonNegativeNumber);
    detect->add_option("--memory-mode", det.memory_mode, "PLSC cost storage: lean | full-matrix")
        ->check(CLI::IsMember({"lean", "full-matrix"}));
    detect->add_option("--sigma", det.sigma, "Known noise standard deviation for the p-values")
        ->check(CLI::PositiveNumber);
    detect->add_option("--emit-hat", det.emit_hat, "Write k, D(A,k), |D(A,k)| as CSV");
    detect->add_option("--emit-fit", det.emit_fit, "Write i, x_i, fitted mean as CSV");
    detect->add_flag("--demean", det.demean, "Subtract the sample mean first");
    detect->add_option("-o,--out", det.out, "Result JSON")->required();

    WaveletArgs wav;
    auto *wavelet = app.add_subcommand("wavelet", "Write log squared wavelet coefficients and <out>.index.json");
    wavelet->add_option("input", wav.in, "Series file (a path, not increments)")->required();
    wavelet->add_option("--frequency", wav.frequency, "Frequency 1/a in samples^-1")->check(CLI::Range(1e-9, 1.0));
    wavelet->add_option("--wavelet", wav.wavelet, "daubechies-2|4|6|8");
    wavelet->add_flag("--demean", wav.demean, "Subtract the sample mean first");
    wavelet->add_option("-o,--out", wav.out, "Output series file")->required();

    BenchArgs bench;
    auto *benchcmd = app.add_subcommand("bench", "Monte-Carlo accuracy study and complexity sweep");
    benchcmd->add_option("--config", bench.config, "Bench config JSON; flags override it");
    benchcmd->add_option("-n,--n", bench.n, "Series length")->check(CLI::PositiveNumber);
    benchcmd->add_option("-M,--replications", bench.replications, "Monte-Carlo replications (0 = sweep only)");
    benchcmd->add_option("--sigma", bench.sigma, "Noise standard deviation")->check(CLI::NonNegativeNumber);
    benchcmd->add_option("-A,--window", bench.window, "FDpV window")->check(CLI::PositiveNumber);
    benchcmd->add_option("--alpha", bench.alpha, "FDpV critical p-value")->check(CLI::Range(0.0, 1.0));
    benchcmd->add_option("--kmax", bench.kmax, "Maximum number of change points")->check(CLI::PositiveNumber);
    benchcmd->add_option("--penalty", bench.penalty, "PLSC penalty")->check(CLI::NonNegativeNumber);
    benchcmd->add_option("--memory-mode", bench.memory_mode, "PLSC cost storage")
        ->check(CLI::IsMember({"lean", "full-matrix"}));
    benchcmd->add_option("--methods", bench.methods, "Methods, comma separated")->delimiter(',');
    benchcmd->add_option("--sweep", bench.sweep, "Complexity sweep N values, comma separated")->delimiter(',');
    benchcmd->add_option("--timing-runs", bench.timing_runs, "Timing runs per sweep point")
        ->check(CLI::PositiveNumber);
    benchcmd->add_option("-o,--out", bench.out, "Report JSON (stdout if omitted)");
    benchcmd->add_option("--csv", bench.csv, "Monte-Carlo summary CSV");
    benchcmd->add_option("--sweep-csv", bench.sweep_csv, "Sweep table CSV");

    ScoreArgs score;
    auto *scorecmd = app.add_subcommand("score", "Score a result against a truth sidecar");
    scorecmd->add_option("--result", score.result, "Result JSON")->required();
    scorecmd->add_option("--truth", score.truth, "Truth sidecar JSON")->required();
    scorecmd->add_option("--index-map", score.index_map, "Index map sidecar for results on a wavelet series");
    scorecmd->add_option("-o,--out", score.out, "Also write the metrics JSON here");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError &e) {
        const int code = app.exit(e);
        return code == 0 ? kOk : kUsage;
    }

    try {
        if (*simulate) return run_simulate(sim, globals);
        if (*detect) return run_detect(det);
        if (*wavelet) return run_wavelet(wav);
        if (*benchcmd) return run_bench(bench, globals, *benchcmd, app);
        if (*scorecmd) return run_score(score);
    } catch (const UsageError &e) {
        std::cerr << "error: " << e.what() << "\n";
        return kUsage;
    } catch (const cpd::io::IoError &e) {
        std::cerr << "I/O error: " << e.what() << "\n";
        return kIo;
    } catch (const Json::exception &e) {
        std::cerr << "I/O error: malformed JSON: " << e.what() << "\n";
        return kIo;
    } catch (const std::filesystem::filesystem_error &e) {
        std::cerr << "I/O error: " << e.what() << "\n";
        return kIo;
    } catch (const cpd::Error &e) {
        std::cerr << "error: " << e.what() << "\n";
        return kCompute;
    } catch (const std::bad_alloc &) {
        std::cerr << "error: out of memory\n";
        return kCompute;
    }
    return kUsage;
}
